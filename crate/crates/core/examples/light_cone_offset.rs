// An expanding profile approaches the light cone f = t − τ₀. Estimate τ₀ for
// increasing end times and for a time-translated start.

use cmcflow::rotsym::{extract_tau0, integrate, RotsymOptions, SphSymState};

fn main() {
    let o = RotsymOptions::default();
    for t_end in [50.0, 100.0, 200.0] {
        let run = integrate(&SphSymState::new(0.0, 1.2, 0.3, 2), t_end, &o).unwrap();
        let e = extract_tau0(&run).unwrap();
        println!("t_end = {t_end:>5}: tau0 = {:.10} (bound {:.1e}, raw t - f = {:.6})", e.tau0, e.bound, e.raw);
    }
    let shifted = integrate(&SphSymState::new(5.0, 1.0, 0.0, 2), 205.0, &o).unwrap();
    println!("de Sitter started at t = 5: tau0 = {:.12}", extract_tau0(&shifted).unwrap().tau0);
}
