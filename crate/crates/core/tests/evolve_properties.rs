//! Properties of the nonlinear graph evolution that need whole runs.

use std::f64::consts::PI;

use cmcflow::dsgeom::jb;
use cmcflow::evolve::{evolve, geometric_times, linear_gap, scenario_bump, scenario_translated_patch, EvolveOptions, GraphField1D, PatchSpec};

fn opts(rtol: f64) -> EvolveOptions {
    EvolveOptions { rtol, atol: rtol * 1e-2, ..EvolveOptions::default() }
}

fn final_phi(n: usize, rtol: f64) -> Vec<f64> {
    let s0 = scenario_bump(n, 0.5, 2e-2, 0.3, 0.6).unwrap();
    let traj = evolve(&s0, 4.0, &[], &opts(rtol)).unwrap();
    assert!(traj.completed());
    traj.last().phi.clone()
}

/// Nodes of an `n`-point grid are every `(m/n)`-th node of an `m`-point grid.
fn sup_on_coarse(coarse: &[f64], fine: &[f64]) -> f64 {
    let k = fine.len() / coarse.len();
    coarse.iter().enumerate().fold(0.0f64, |m, (j, c)| m.max((c - fine[k * j]).abs()))
}

#[test]
fn spectral_convergence_in_n() {
    let reference = final_phi(256, 1e-12);
    let errs: Vec<f64> = [16usize, 32, 64].iter().map(|&n| sup_on_coarse(&final_phi(n, 1e-12), &reference)).collect();
    println!("error vs N = 16, 32, 64: {errs:?}");
    // Faster than any power: each doubling gains far more than 2⁵.
    assert!(errs[0] / errs[1] > 100.0, "{errs:?}");
    assert!(errs[2] < 1e-11, "{errs:?}");
}

#[test]
fn error_tracks_the_time_tolerance() {
    let reference = final_phi(64, 1e-13);
    let errs: Vec<f64> = [1e-6, 1e-7, 1e-8].iter().map(|&r| sup_on_coarse(&final_phi(64, r), &reference)).collect();
    println!("error vs rtol = 1e-6, 1e-7, 1e-8: {errs:?}");
    for w in errs.windows(2) {
        assert!(w[1] < w[0] / 3.0, "{errs:?}");
    }
}

#[test]
fn nonlinear_minus_linear_is_quadratic_in_amplitude() {
    let amps = [2e-3, 1e-3, 5e-4];
    let g = linear_gap(128, 0.5, 20.0, &amps, &EvolveOptions::default()).unwrap();
    let scaled: Vec<f64> = g.gaps.iter().zip(&amps).map(|(x, a)| x / (a * a)).collect();
    println!("gap/amp²: {scaled:?}");
    let (lo, hi) = scaled.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
    assert!(hi / lo < 1.05, "{scaled:?}");
}

/// Smooth bump `exp(−1/(1−x²))` supported in `|ω − π| < 1`.
fn far_cap(om: f64) -> f64 {
    let x = (om - PI) / 1.0;
    if x.abs() < 1.0 {
        (-1.0 / (1.0 - x * x)).exp()
    } else {
        0.0
    }
}

#[test]
fn horizon_freezing_under_far_cap_changes() {
    let spec = PatchSpec::new(0.02, 1.0).unwrap();
    let n = 512;
    let base = scenario_translated_patch(n, &spec).unwrap();
    let nodes = base.nodes();
    let modified = GraphField1D::new(
        base.t,
        base.phi.iter().zip(&nodes).map(|(p, &w)| p + 1e-4 * far_cap(w)).collect(),
        base.dphi.iter().zip(&nodes).map(|(p, &w)| p - 1e-4 * far_cap(w)).collect(),
    )
    .unwrap();
    let times = geometric_times(1.0, 200.0);
    let o = EvolveOptions::default();
    let a = evolve(&base, 200.0, &times, &o).unwrap();
    let b = evolve(&modified, 200.0, &times, &o).unwrap();
    assert!(a.completed() && b.completed());
    let mut worst: f64 = 0.0;
    let mut far: f64 = 0.0;
    for (sa, sb) in a.snapshots.iter().zip(&b.snapshots) {
        assert_eq!(sa.t, sb.t);
        let hw = spec.frozen_half_width(sa.t);
        for (j, w) in nodes.iter().enumerate() {
            let dist = w.sin().atan2(w.cos()).abs();
            let diff = (sa.phi[j] - sb.phi[j]).abs().max((sa.dphi[j] - sb.dphi[j]).abs());
            if dist <= hw {
                worst = worst.max(diff);
            } else {
                far = far.max(diff);
            }
        }
    }
    println!("near-cap change {worst:e}, elsewhere {far:e}");
    assert!(far > 1e-6, "the modification must actually propagate: {far:e}");
    assert!(worst <= 1e-10, "{worst:e}");
}

struct Freeze {
    rate: Vec<f64>,
    /// `sup_ω t²|∂_tũ|` per snapshot.
    shift_rate: Vec<f64>,
}

fn freeze_run(amp: f64) -> Freeze {
    let s0 = scenario_bump(128, 0.5, amp, 0.0, 0.5).unwrap();
    let traj = evolve(&s0, 256.0, &geometric_times(0.5, 256.0), &EvolveOptions::default()).unwrap();
    assert!(traj.completed(), "{:?}", traj.halt);
    // ∂_t(φ/⟨t⟩) = (φ_t − tφ/⟨t⟩²)/⟨t⟩
    let rate = traj
        .snapshots
        .iter()
        .map(|s| s.phi.iter().zip(&s.dphi).fold(0.0f64, |m, (p, dp)| m.max(((dp - s.t * p / (1.0 + s.t * s.t)) / jb(s.t)).abs())))
        .collect();
    let shift_rate = traj.snapshots.iter().map(|s| s.u_tilde_rate().iter().fold(0.0f64, |m, v| m.max(s.t * s.t * v.abs()))).collect();
    Freeze { rate, shift_rate }
}

/// In the normal-graph gauge `φ/⟨t⟩` freezes to first order in the amplitude;
/// a second-order drift `∝ amp²` persists until `amp·t ≳ 1`.
#[test]
fn profile_over_bracket_t_freezes_to_first_order() {
    let a = freeze_run(1e-2);
    let b = freeze_run(5e-3);
    println!("rate {:?}\nrate (half amplitude) {:?}\nt²|∂ũ| {:?}", a.rate, b.rate, a.shift_rate);
    let k = a.rate.len();
    // The first-order part decays by orders of magnitude...
    assert!(a.rate[k - 1] < 1e-2 * a.rate[1], "{:?}", a.rate);
    // ...and what is left is quadratic in the amplitude while amp·t < 1
    // (snapshots t = 16, 32, 64).
    for j in 5..=7 {
        let r = a.rate[j] / b.rate[j];
        assert!((r - 4.0).abs() < 0.4, "t-index {j}: ratio {r}");
    }
    // The u-shift rate is O(t⁻²) throughout.
    let late = &a.shift_rate[k / 2..];
    let (lo, hi) = late.iter().fold((f64::INFINITY, 0.0f64), |(x, y), &v| (x.min(v), y.max(v)));
    assert!(hi < 2.0 * lo, "{:?}", a.shift_rate);
}
