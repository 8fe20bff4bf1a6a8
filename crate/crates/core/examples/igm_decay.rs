// The ζ-flow of the inverse-Gauss-map gauge: ζ decays like ⟨t⟩^{-(d+1)}.
// Also prints the closed-form spectrum of B next to a dense eigensolve.

use cmcflow::igm::{b_spectrum, b_spectrum_dense, integrate_zeta};

fn main() {
    for d in 1..=3 {
        for z0 in [-0.05, 0.1] {
            let run = integrate_zeta(z0, 1.0, 1e3, d).unwrap();
            let fit = run.fit_window(10.0, 1e3).unwrap();
            println!("d = {d}, zeta0 = {z0:+}: exponent {:.5} (expected {})", fit.exponent, d + 1);
        }
    }
    let c = b_spectrum(0.5, 2).unwrap();
    let n = b_spectrum_dense(0.5, 2).unwrap();
    println!("nu = {}", c.nu);
    for (value, mult, what) in &c.cases {
        println!("  {value:.6} x{mult}  {what}");
    }
    println!("dense: {:?}", n.real);
}
