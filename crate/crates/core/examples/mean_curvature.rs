// Mean curvature of normal graphs over de Sitter space: constant heights,
// translated copies of dS, and the finite-difference linearization.

use cmcflow::dsgeom::CylCoord;
use cmcflow::meanc::{fd_linearization_check, normal_graph_mean_curvature, translated_ds_graph, Jet2, NormalGraphPoint};

fn main() {
    let base = CylCoord::from_angle(0.7, 0.3);
    for eps in [0.0, 0.1, -0.3] {
        let mut j = Jet2::zero(2);
        j.value = eps;
        let h = normal_graph_mean_curvature(&NormalGraphPoint::new(base.clone(), j).unwrap()).unwrap();
        println!("constant height {eps:+}: H = {h:.15} (2/(1-eps) = {:.15})", 2.0 / (1.0 - eps));
    }
    let j = translated_ds_graph(&[0.05, 0.1, -0.02], &base).unwrap();
    let h = normal_graph_mean_curvature(&NormalGraphPoint::new(base.clone(), j).unwrap()).unwrap();
    println!("translated de Sitter: H - 2 = {:e}", h - 2.0);
    let psi = Jet2::of_function(&base, |t, om| t.jb() * &om[0]);
    let rep = fd_linearization_check(&base, &psi, &[1e-2, 5e-3, 2.5e-3, 1.25e-3]).unwrap();
    println!("linearization of <t>cos w: operator {:e}, quotients {:?}, order {:.2}", rep.linearized, rep.quotients, rep.order);
}
