// Randomized pointwise audit of the quadratic stress tensor: two assembly
// paths, pair symmetry, coercivity and the deformation sign.

use cmcflow::stress::stress_audit;

fn main() {
    for d in 1..=3 {
        for r in stress_audit(42, 10_000, d).unwrap() {
            println!("d = {d} {:<18} max violation {:.2e} {}", r.check, r.max_violation, if r.pass { "ok" } else { "FAIL" });
        }
    }
}
