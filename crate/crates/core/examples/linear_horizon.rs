// Separated bumps on the circle each grow like ε_i·t without seeing each
// other, while the degree-1 harmonics stay projected out.

use cmcflow::linmodes::{horizon_scenario, ModeOptions};

fn main() {
    let rep = horizon_scenario(3, 16.0, 1024, &[20.0, 30.0, 50.0], &ModeOptions::default()).unwrap();
    println!("amplitudes {:?}", rep.data.eps);
    for s in &rep.samples {
        println!("t = {:>4}: sup|phi|/(max eps t) = {:.6}, forbidden = {:.1e}, ray phi = {:.6}", s.t, s.growth_ratio, s.max_forbidden_projection, s.ray_phi);
    }
}
