// Data equal to two different translates of dS on opposite caps. Each cap
// keeps its translate inside its dependence domain, and the asymptotic
// u-shift comes out nonconstant.

use cmcflow::evolve::{cone_test, evolve, geometric_times, patch_agreement, scenario_translated_patch, ushift, EvolveOptions, PatchSpec};

fn main() {
    let spec = PatchSpec::new(0.02, 1.0).unwrap();
    let s0 = scenario_translated_patch(256, &spec).unwrap();
    let traj = evolve(&s0, 200.0, &geometric_times(1.0, 200.0), &EvolveOptions::default()).unwrap();
    let a = patch_agreement(&traj, &spec).unwrap();
    println!("deviation from the exact translates: {:.2e} over {} node checks", a.max_deviation, a.nodes_checked);
    let u = ushift(&traj).unwrap();
    for k in 0..8 {
        let w = k as f64 * std::f64::consts::FRAC_PI_4;
        println!("omega = {w:.3}: u_inf = {:+.6}", u.at(w));
    }
    let c = cone_test(&traj, spec.eps);
    println!("distance from the nearest light cone: {:.4} (eps/2 = {})", c.min_sup, spec.eps / 2.0);
}
