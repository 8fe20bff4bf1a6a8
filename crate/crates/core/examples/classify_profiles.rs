// Integrate the spherically symmetric profile equation from a few initial
// states and classify each by its past and future behaviour.

use cmcflow::rotsym::{classify, integrate, RotsymOptions, SphSymState};

fn main() {
    let d = 2;
    let states = [(1.0, 0.0), (0.5, 0.0), (2.0 / 3.0, 0.0), (1.0, -0.9), (0.6, 0.5), (1.4, 0.3)];
    for (f, df) in states {
        let s = SphSymState::new(0.0, f, df, d);
        let k = classify(&s, 50.0).unwrap();
        println!("f0 = {f:.4}, f0' = {df:+.2}: {:?} (past {:?}, future {:?})", k.kind, k.past, k.future);
    }
    let run = integrate(&SphSymState::new(0.0, 1.0, 0.0, d), 10.0, &RotsymOptions::default()).unwrap();
    let last = run.last();
    println!("de Sitter at t = 10: f = {}, sqrt(101) = {}", last.f, 101f64.sqrt());
}
