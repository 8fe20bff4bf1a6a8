// Points of de Sitter space in cylinder coordinates, the orthonormal frame,
// and the boost decomposition of the unit timelike field τ.

use cmcflow::dsgeom::{embed, frame, mink, tau_from_boosts, CylCoord};

fn main() {
    let c = CylCoord::new(1.5, vec![0.6, 0.8, 0.0]).unwrap();
    let x = embed(&c);
    println!("x = {:?}, <x,x> = {}", x.0, mink(&x.0, &x.0));
    let f = frame(&c);
    for a in 0..=c.d() {
        let v = f.vector(a);
        println!("e{a} = {v:?}, <e{a},e{a}> = {:+.3}", mink(v, v));
    }
    println!("tau from boosts = {:?}", tau_from_boosts(&x.0));
}
