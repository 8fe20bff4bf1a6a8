// Rates near a finite-time collapse: (1−|f'|)/(T−t), sqrt(1−f'²)/(T−t) and
// η/(T−t)² stay bounded as t → T.

use cmcflow::rotsym::{collapse_profile, integrate, RotsymOptions, SphSymState, Termination};

fn main() {
    let run = integrate(&SphSymState::new(0.0, 0.5, 0.0, 2), 10.0, &RotsymOptions::default()).unwrap();
    if let Termination::CollapseDetected { t_collapse, .. } = run.termination {
        println!("collapse at T = {t_collapse:.12}");
    }
    let p = collapse_profile(&run).unwrap();
    println!("{:>10} {:>12} {:>12} {:>12}", "T - t", "(1-|f'|)", "sqrt(1-f'^2)", "eta");
    for row in p.table.iter().step_by(4) {
        println!("{:>10.1e} {:>12.3e} {:>12.3e} {:>12.3e}", row[0], row[1], row[2], row[3]);
    }
    println!("bounded: {}", p.bounded);
}
