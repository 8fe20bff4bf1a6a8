//! The command-line binary: exit codes, artifacts, configuration and determinism.

use std::path::Path;
use std::process::{Command, Output};

fn cmcflow(args: &[&str], env_out: Option<&Path>) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_cmcflow"));
    c.args(args).env_remove("CMCFLOW_OUT_DIR");
    if let Some(d) = env_out {
        c.env("CMCFLOW_OUT_DIR", d);
    }
    c.output().expect("binary runs")
}

fn report(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).expect("stdout is the JSON report")
}

#[test]
fn stress_audit_passes_and_is_byte_identical() {
    let args = ["audit", "stress", "--seed", "42", "--samples", "10000"];
    let a = cmcflow(&args, None);
    let b = cmcflow(&args, None);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let r = report(&a);
    assert_eq!(r["pass"], true);
    assert_eq!(r["checks"].as_array().unwrap().len(), 12);
    for c in r["checks"].as_array().unwrap() {
        let keys: Vec<&str> = c.as_object().unwrap().keys().map(String::as_str).collect();
        assert_eq!(keys, ["check", "max_violation", "pass", "samples"]);
    }
    assert!(r["numbers"].as_object().unwrap().values().all(|q| q["tag"].is_string()));
}

#[test]
fn rotsym_run_writes_a_reproducible_csv() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("ds.csv");
    let ps = p.to_str().unwrap();
    let o = cmcflow(&["rotsym", "run", "--d", "2", "--f0", "1", "--df0", "0", "--out", ps], None);
    assert_eq!(o.status.code(), Some(0));
    let first = std::fs::read(&p).unwrap();
    cmcflow(&["rotsym", "run", "--d", "2", "--f0", "1", "--df0", "0", "--out", ps], None);
    assert_eq!(first, std::fs::read(&p).unwrap());
    let text = String::from_utf8(first).unwrap();
    assert!(text.starts_with("t,f,df,gamma,eta\n0,1,0,0,1\n") && !text.contains('\r'));
    let last: Vec<f64> = text.lines().last().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(last[0], 10.0);
    assert!((last[1] - 101f64.sqrt()).abs() < 1e-8 * 101f64.sqrt());
}

#[test]
fn classify_demo_lists_the_three_classes() {
    let r = report(&cmcflow(&["rotsym", "classify", "--demo", "--d", "2"], None));
    let kinds: Vec<&str> = r["details"]["classes"].as_array().unwrap().iter().map(|c| c["class"].as_str().unwrap()).collect();
    assert_eq!(kinds, ["Expanding", "BigBangBigCrunch", "StaticCylinder"]);
    assert_eq!(r["pass"], true);
}

#[test]
fn configuration_errors_exit_with_3() {
    assert_eq!(cmcflow(&["rotsym", "run", "--d", "0"], None).status.code(), Some(3));
    assert_eq!(cmcflow(&["rotsym", "run", "--nope", "1"], None).status.code(), Some(3));
    assert_eq!(cmcflow(&["evolve", "--scenario", "sideways"], None).status.code(), Some(3));
    assert_eq!(cmcflow(&["audit", "energy", "--run", "/nonexistent.csv"], None).status.code(), Some(3));
    assert_eq!(cmcflow(&["--help"], None).status.code(), Some(0));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("a.cfg");
    std::fs::write(&cfg, "# integration\nrtol = 1e-10\nt_end = 3\n").unwrap();
    let c = cfg.to_str().unwrap();
    let r = report(&cmcflow(&["rotsym", "run", "--config", c, "--rtol", "1e-8"], None));
    assert_eq!(r["config"]["rtol"], "1e-8");
    assert_eq!(r["config"]["t_end"], "3");
    std::fs::write(&cfg, "mystery = 1\n").unwrap();
    assert_eq!(cmcflow(&["rotsym", "run", "--config", c], None).status.code(), Some(3));
}

#[test]
fn out_dir_env_collects_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let o = cmcflow(&["modes", "run", "--ell", "3", "--d", "1", "--t-end", "20"], Some(dir.path()));
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("modes_run.csv")).unwrap();
    assert!(csv.starts_with("t,psi,dpsi,energy\n"));
    let json = std::fs::read(dir.path().join("modes-run.json")).unwrap();
    assert_eq!(json, o.stdout);
    // Relative --out lands under the root too.
    cmcflow(&["igm", "zeta", "--zeta0", "-0.05", "--out", "z.csv"], Some(dir.path()));
    assert!(std::fs::read_to_string(dir.path().join("z.csv")).unwrap().starts_with("t,zeta,eta,nu\n"));
}

#[test]
fn evolve_artifacts_feed_the_energy_audit() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = cmcflow(&["evolve", "--scenario", "bump", "--amp", "1e-3", "--n", "64", "--t-end", "8", "--out", out.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let snaps: Vec<_> =
        std::fs::read_dir(&out).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).filter(|n| n.starts_with("snapshot_")).collect();
    assert_eq!(snaps.len(), 5); // t = 0.5, 1, 2, 4, 8
    let s0 = std::fs::read_to_string(out.join("snapshot_000.csv")).unwrap();
    assert!(s0.starts_with("t,omega,phi,dphi\n0.5,0,0.001,0\n"));
    assert!(std::fs::read_to_string(out.join("diagnostics.csv")).unwrap().starts_with("t,energy,supnorm,ushift_range\n"));
    let summary: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["pass"], true);
    let diag = out.join("diagnostics.csv");
    let a = cmcflow(&["audit", "energy", "--run", diag.to_str().unwrap()], None);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(report(&a)["checks"][0]["check"], "energy_bound");
}

#[test]
fn guard_breach_exits_with_4() {
    let o = cmcflow(&["evolve", "--scenario", "bump", "--amp", "0.9", "--n", "32", "--t-end", "20"], None);
    assert_eq!(o.status.code(), Some(4));
    assert!(report(&o)["details"]["guard_breach"].as_str().unwrap().contains("guard"));
}

#[test]
fn invariant_failure_exits_with_2() {
    // Large data on a coarse grid: the run completes but misses the residual bound.
    let o = cmcflow(&["evolve", "--scenario", "bump", "--amp", "0.5", "--n", "32", "--t-end", "20"], None);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(report(&o)["pass"], false);
}
