// Bisect for the initial slope at radius r0 whose trajectory converges to
// the static cylinder, in both time directions.

use cmcflow::rotsym::{separatrix_lambda, Direction};

fn main() {
    let d = 2;
    println!("{:>6} {:>14} {:>14}", "r0", "lambda+", "lambda-");
    for r0 in [0.3, 0.5, 2.0 / 3.0, 0.9, 1.5, 2.5] {
        let p = separatrix_lambda(r0, d, Direction::Future, 50.0, 1e-10).unwrap();
        let m = separatrix_lambda(r0, d, Direction::Past, 50.0, 1e-10).unwrap();
        println!("{r0:>6.3} {p:>14.10} {m:>14.10}");
    }
}
