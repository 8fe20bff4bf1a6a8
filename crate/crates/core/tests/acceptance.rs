//! Acceptance battery: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Runs without the libtest harness so the lines always print.

use cmcflow::cli::suite::{run_criterion, IDS};

fn main() {
    let seed = 42;
    let mut failed = Vec::new();
    for id in IDS {
        let c = run_criterion(id, seed);
        println!("{}", c.line());
        for ch in c.checks.iter().filter(|ch| !ch.pass) {
            println!("    failed: {} (max violation {:e})", ch.check, ch.max_violation);
        }
        if !c.pass {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all {} criteria pass", IDS.count());
    } else {
        println!("acceptance: failing criteria {failed:?}");
        std::process::exit(1);
    }
}
