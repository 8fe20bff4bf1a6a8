// Spherical-harmonic modes of the linearized equation on de Sitter space:
// the exact ℓ = 0, 1 solutions and energy decay for ℓ ≥ 2.

use cmcflow::dsgeom::jb;
use cmcflow::linmodes::{integrate_mode, renormalized_flux, ModeOptions, ModeState};

fn main() {
    let o = ModeOptions::default();
    let r0 = integrate_mode(&ModeState::new(0, 2, 0.0, 0.0, 1.0), 100.0, &o).unwrap();
    let r1 = integrate_mode(&ModeState::new(1, 2, 0.0, 1.0, 0.0), 100.0, &o).unwrap();
    println!("l=0: psi(100) - 100 = {:e}", r0.last().psi - 100.0);
    println!("l=1: psi(100) - <100> = {:e}", r1.last().psi - jb(100.0));
    let run = integrate_mode(&ModeState::new(2, 2, 0.1, 0.4, 1.3), 1000.0, &o).unwrap();
    for t in [0.1, 1.0, 10.0, 100.0, 1000.0] {
        let m = run.state_at(t).unwrap();
        println!("l=2, t = {t:>6}: psi/<t> = {:+.8}, flux = {:+.3e}", m.psi / jb(t), renormalized_flux(&m));
    }
}
