//! Command-line front end: configuration, dispatch and report emission.
//!
//! Configuration files are flat `key = value` text with `#` comments. Each key
//! is the long name of a flag of the selected subcommand (`t_end` and `t-end`
//! are the same key). File entries are spliced in front of the command-line
//! flags, and a repeated flag keeps its last value, so the command line wins.
//! Unknown keys fail exactly like unknown flags.
//!
//! Randomized checks draw from ChaCha20 seeded with `--seed` (default 42).
//! Reports are byte-identical for identical configurations unless
//! `--wall-time` is given.

pub mod report;
pub mod suite;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};

use crate::dsgeom::jb;
use crate::error::{Error, Result};
use crate::evolve::{
    cone_test, evolve, geometric_times, patch_agreement, residual_audit, scenario_bump, scenario_translated_patch, scenario_zero, ushift, EvolveOptions,
    PatchSpec,
};
use crate::igm::{b_spectrum, b_spectrum_dense, integrate_zeta};
use crate::linmodes::{horizon_scenario, integrate_mode, ModeOptions, ModeState};
use crate::rotsym::{classify_with, extract_tau0, integrate, invariants, separatrix_lambda, ClassKind, Direction, RotsymOptions, SphSymState, Termination};
use crate::stress::{energy_bound_audit, stress_audit};
use report::{csv_string, parse_csv, to_json, write_atomic, Check, ReportDoc, Tag};

/// Default output root for artifacts and reports.
pub const OUT_DIR_ENV: &str = "CMCFLOW_OUT_DIR";

pub const EXIT_PASS: i32 = 0;
pub const EXIT_INVARIANT: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;
pub const EXIT_GUARD: i32 = 4;

fn parse_dim(s: &str) -> std::result::Result<usize, String> {
    let d: usize = s.parse().map_err(|_| format!("{s:?} is not a nonnegative integer"))?;
    if d < 1 {
        return Err("dimension d must be ≥ 1".into());
    }
    Ok(d)
}

fn parse_positive_usize(s: &str) -> std::result::Result<usize, String> {
    match s.parse::<usize>() {
        Ok(n) if n > 0 => Ok(n),
        _ => Err(format!("{s:?} is not a positive integer")),
    }
}

#[derive(Debug, Clone, Parser)]
#[command(name = "cmcflow", version, about = "Constant-mean-curvature timelike hypersurfaces: ODEs, linear modes, stress audits and graph evolution")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Flat `key = value` configuration file; command-line flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for randomized checks.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    /// Also write the JSON report here (relative paths resolve under $CMCFLOW_OUT_DIR).
    #[arg(long, global = true)]
    pub report: Option<PathBuf>,
    /// Record elapsed time in the report (breaks byte-for-byte reproducibility).
    #[arg(long, global = true)]
    pub wall_time: bool,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Spherically symmetric profiles.
    Rotsym {
        #[command(subcommand)]
        action: RotsymAction,
    },
    /// Inverse-Gauss-map algebra.
    Igm {
        #[command(subcommand)]
        action: IgmAction,
    },
    /// Linearized equation on de Sitter space.
    Modes {
        #[command(subcommand)]
        action: ModesAction,
    },
    /// Nonlinear normal-graph evolution over dS₂.
    Evolve(EvolveArgs),
    /// Randomized and file-based audits.
    Audit {
        #[command(subcommand)]
        action: AuditAction,
    },
    /// The full acceptance battery.
    Suite(SuiteArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RotsymArgs {
    #[arg(long, default_value_t = 2, value_parser = parse_dim)]
    pub d: usize,
    /// Mean curvature; defaults to d+1.
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub f0: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub df0: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub t0: f64,
    #[arg(long, default_value_t = 10.0, allow_hyphen_values = true)]
    pub t_end: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub rtol: f64,
    #[arg(long, default_value_t = 1e-12)]
    pub atol: f64,
    /// CSV of `t,f,df,gamma,eta`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl RotsymArgs {
    fn state(&self) -> Result<SphSymState> {
        let mut s = SphSymState::new(self.t0, self.f0, self.df0, self.d);
        if let Some(c) = self.c {
            s = s.with_c(c);
        }
        s.validate()?;
        Ok(s)
    }

    fn opts(&self) -> Result<RotsymOptions> {
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        Ok(RotsymOptions { rtol: self.rtol, atol: self.atol })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DirArg {
    Future,
    Past,
}

#[derive(Debug, Clone, Subcommand)]
pub enum RotsymAction {
    /// Integrate from (t0, f0, df0) to t_end.
    Run(RotsymArgs),
    /// Classify the state, or with --demo one witness per class.
    Classify {
        #[command(flatten)]
        base: RotsymArgs,
        #[arg(long, default_value_t = 50.0)]
        horizon: f64,
        #[arg(long)]
        demo: bool,
    },
    /// Initial slope at radius f0 whose trajectory tends to the cylinder.
    Separatrix {
        #[command(flatten)]
        base: RotsymArgs,
        #[arg(long, value_enum, default_value_t = DirArg::Future)]
        direction: DirArg,
        #[arg(long, default_value_t = 50.0)]
        horizon: f64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Light-cone offset τ₀ = lim (t − f) of an expanding run.
    Tau0(RotsymArgs),
}

#[derive(Debug, Clone, Subcommand)]
pub enum IgmAction {
    /// Integrate the ζ-flow; CSV of `t,zeta,eta,nu`.
    Zeta {
        #[arg(long, default_value_t = 0.1, allow_hyphen_values = true)]
        zeta0: f64,
        #[arg(long, default_value_t = 2, value_parser = parse_dim)]
        d: usize,
        #[arg(long, default_value_t = 1.0)]
        t0: f64,
        #[arg(long, default_value_t = 1e3)]
        t_end: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Spectrum of B, closed form against dense eigendecomposition.
    Bspec {
        #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
        zeta: f64,
        #[arg(long, default_value_t = 2, value_parser = parse_dim)]
        d: usize,
    },
}

#[derive(Debug, Clone, Subcommand)]
pub enum ModesAction {
    /// One spherical-harmonic mode; CSV of `t,psi,dpsi,energy`.
    Run {
        #[arg(long, default_value_t = 2)]
        ell: u32,
        #[arg(long, default_value_t = 2, value_parser = parse_dim)]
        d: usize,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        psi0: f64,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        dpsi0: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        t0: f64,
        #[arg(long, default_value_t = 100.0, allow_hyphen_values = true)]
        t_end: f64,
        #[arg(long, default_value_t = 1e-10)]
        rtol: f64,
        #[arg(long, default_value_t = 1e-12)]
        atol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Separated bumps on S¹ growing like ε_i·t; CSV follows the first bump's ray.
    HorizonDemo {
        #[arg(long, default_value_t = 3, value_parser = parse_positive_usize)]
        bumps: usize,
        #[arg(long, default_value_t = 16.0)]
        t0: f64,
        #[arg(long, default_value_t = 1024, value_parser = parse_positive_usize)]
        n: usize,
        #[arg(long, default_value_t = 50.0)]
        t_end: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Subcommand)]
pub enum AuditAction {
    /// Randomized pointwise checks of the stress tensor.
    Stress {
        #[arg(long, default_value_t = 10_000, value_parser = parse_positive_usize)]
        samples: usize,
        /// Restrict to one dimension; all of 1..=3 otherwise.
        #[arg(long, value_parser = parse_dim)]
        d: Option<usize>,
        /// JSON list of `{check, samples, max_violation, pass}`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// `sup E ≤ 2E(t₀)` on the `t` and `energy` columns of a CSV.
    Energy {
        #[arg(long)]
        run: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Scenario {
    Zero,
    Bump,
    TranslatedPatch,
}

#[derive(Debug, Clone, Args)]
pub struct EvolveArgs {
    #[arg(long, value_enum, default_value_t = Scenario::Bump)]
    pub scenario: Scenario,
    /// Bump amplitude, or the translation ε of the patch (default 1e-3 and 0.02).
    #[arg(long, allow_hyphen_values = true)]
    pub amp: Option<f64>,
    #[arg(long, default_value_t = 256, value_parser = parse_positive_usize)]
    pub n: usize,
    #[arg(long, default_value_t = 0.5)]
    pub t0: f64,
    #[arg(long, default_value_t = 200.0)]
    pub t_end: f64,
    #[arg(long, default_value_t = 0.5)]
    pub width: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub center: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub rtol: f64,
    #[arg(long, default_value_t = 1e-12)]
    pub atol: f64,
    /// Output directory for snapshots, diagnostics and the summary.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SuiteArgs {
    /// Run only these criteria (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub only: Vec<u32>,
}

/// A parsed and validated invocation.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub cli: Cli,
    /// Every resolved flag of the selected subcommand, as text.
    pub echo: BTreeMap<String, String>,
    pub out_root: Option<PathBuf>,
}

impl RunConfig {
    /// Relative paths land under `$CMCFLOW_OUT_DIR` when it is set.
    pub fn resolve(&self, p: &Path) -> PathBuf {
        match &self.out_root {
            Some(root) if p.is_relative() => root.join(p),
            _ => p.to_path_buf(),
        }
    }

    /// `--out` if given, else `<root>/<default>` if a root is set.
    fn artifact(&self, out: &Option<PathBuf>, default: &str) -> Option<PathBuf> {
        match out {
            Some(p) => Some(self.resolve(p)),
            None => self.out_root.as_ref().map(|r| r.join(default)),
        }
    }
}

/// Entries of a `key = value` file, in order. Keys are normalized to flag form.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Config(format!("line {}: expected `key = value`, got {raw:?}", i + 1)))?;
        let key = k.trim().replace('_', "-");
        if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '-') {
            return Err(Error::Config(format!("line {}: invalid key {:?}", i + 1, k.trim())));
        }
        if key == "config" {
            return Err(Error::Config(format!("line {}: config files cannot include other config files", i + 1)));
        }
        out.push((key, v.trim().to_string()));
    }
    Ok(out)
}

fn command() -> clap::Command {
    fn overrides(mut cmd: clap::Command) -> clap::Command {
        let names: Vec<String> = cmd.get_subcommands().map(|s| s.get_name().to_string()).collect();
        for n in names {
            cmd = cmd.mut_subcommand(n, overrides);
        }
        cmd.args_override_self(true)
    }
    overrides(Cli::command())
}

/// Removes `--config <path>` / `--config=<path>` and returns the path.
fn take_config(argv: &mut Vec<OsString>) -> Result<Option<PathBuf>> {
    let mut found = None;
    let mut i = 1;
    while i < argv.len() {
        let a = argv[i].to_string_lossy().into_owned();
        if a == "--config" {
            let v = argv.get(i + 1).ok_or_else(|| Error::Config("--config needs a path".into()))?.clone();
            found = Some(PathBuf::from(v));
            argv.drain(i..i + 2);
        } else if let Some(v) = a.strip_prefix("--config=") {
            found = Some(PathBuf::from(v));
            argv.remove(i);
        } else {
            i += 1;
        }
    }
    Ok(found)
}

fn clap_matches(argv: Vec<OsString>) -> std::result::Result<clap::ArgMatches, clap::Error> {
    command().try_get_matches_from(argv)
}

fn splice_config(mut argv: Vec<OsString>) -> Result<Vec<OsString>> {
    let Some(path) = take_config(&mut argv)? else {
        return Ok(argv);
    };
    let text = std::fs::read_to_string(&path).map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
    let entries = parse_config_text(&text)?;
    // The subcommand path is the run of leading words.
    let mut at = 1;
    while at < argv.len() && !argv[at].to_string_lossy().starts_with('-') {
        at += 1;
    }
    let mut injected = Vec::new();
    for (k, v) in entries {
        match v.as_str() {
            "true" => injected.push(OsString::from(format!("--{k}"))),
            "false" => {}
            _ => {
                injected.push(OsString::from(format!("--{k}")));
                injected.push(OsString::from(v));
            }
        }
    }
    argv.splice(at..at, injected);
    Ok(argv)
}

fn echo_of(m: &clap::ArgMatches) -> BTreeMap<String, String> {
    let mut leaf = m;
    let mut path = Vec::new();
    while let Some((name, sub)) = leaf.subcommand() {
        path.push(name.to_string());
        leaf = sub;
    }
    let mut echo = BTreeMap::new();
    echo.insert("command".into(), path.join(" "));
    for id in leaf.ids() {
        let id = id.as_str();
        if id == "config" || id == "report" || id == "wall_time" {
            continue;
        }
        if let Ok(Some(vals)) = leaf.try_get_raw(id) {
            let v: Vec<String> = vals.map(|s| s.to_string_lossy().into_owned()).collect();
            echo.insert(id.to_string(), v.join(","));
        }
    }
    echo
}

/// Parses an argument vector (program name first), splicing in `--config`.
pub fn parse_config<I, T>(argv: I) -> Result<RunConfig>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let argv = splice_config(argv.into_iter().map(Into::into).collect())?;
    let m = clap_matches(argv).map_err(|e| Error::Config(e.to_string()))?;
    let cli = Cli::from_arg_matches(&m).map_err(|e| Error::Config(e.to_string()))?;
    validate(&cli)?;
    let out_root = std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from);
    Ok(RunConfig { echo: echo_of(&m), cli, out_root })
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("--{name} must be positive and finite, got {v}")))
    }
}

fn validate(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Rotsym { action } => {
            let base = match action {
                RotsymAction::Run(b) | RotsymAction::Tau0(b) => b,
                RotsymAction::Classify { base, horizon, .. } => {
                    positive("horizon", *horizon)?;
                    base
                }
                RotsymAction::Separatrix { base, horizon, tol, .. } => {
                    positive("horizon", *horizon)?;
                    positive("tol", *tol)?;
                    base
                }
            };
            positive("rtol", base.rtol)?;
            positive("atol", base.atol)?;
            if let Some(c) = base.c {
                positive("c", c)?;
            }
            base.state().map(|_| ()).map_err(|e| Error::Config(e.to_string()))
        }
        Command::Igm { action: IgmAction::Zeta { t0, t_end, .. } } => {
            positive("t0", *t0)?;
            if t_end <= t0 {
                return Err(Error::Config("--t-end must exceed --t0".into()));
            }
            Ok(())
        }
        Command::Modes { action: ModesAction::Run { rtol, atol, .. } } => {
            positive("rtol", *rtol)?;
            positive("atol", *atol)
        }
        Command::Modes { action: ModesAction::HorizonDemo { t0, t_end, .. } } => {
            positive("t0", *t0)?;
            if t_end <= t0 {
                return Err(Error::Config("--t-end must exceed --t0".into()));
            }
            Ok(())
        }
        Command::Evolve(a) => {
            positive("rtol", a.rtol)?;
            positive("atol", a.atol)?;
            positive("width", a.width)?;
            if a.n < 16 {
                return Err(Error::Config("--n must be at least 16".into()));
            }
            if a.t_end <= a.t0 {
                return Err(Error::Config("--t-end must exceed --t0".into()));
            }
            if a.scenario == Scenario::TranslatedPatch {
                positive("t0", a.t0)?;
            }
            Ok(())
        }
        Command::Suite(s) => {
            if let Some(bad) = s.only.iter().find(|i| !suite::IDS.contains(i)) {
                return Err(Error::Config(format!("--only: no criterion {bad}")));
            }
            Ok(())
        }
        _ => Ok(()),
    }
}

/// Exit code for an error that stopped a run.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Domain(_) | Error::Infeasible(_) | Error::Io(_) => EXIT_CONFIG,
        Error::GuardBreach(_) | Error::StepFailure { .. } | Error::GaussMapDegenerate(_) | Error::ChartDegenerate(_) => EXIT_GUARD,
        Error::Undecided(_) => EXIT_INVARIANT,
    }
}

/// Result of [`run`]: the report and whether a numerical guard stopped it.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: ReportDoc,
    pub breach: Option<String>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.breach.is_some() {
            EXIT_GUARD
        } else if self.report.pass {
            EXIT_PASS
        } else {
            EXIT_INVARIANT
        }
    }
}

/// Dispatches, writes artifacts, and returns the report.
pub fn run(cfg: &RunConfig) -> Result<Outcome> {
    let start = Instant::now();
    let mut out = match &cfg.cli.command {
        Command::Rotsym { action } => run_rotsym(cfg, action)?,
        Command::Igm { action } => run_igm(cfg, action)?,
        Command::Modes { action } => run_modes(cfg, action)?,
        Command::Evolve(a) => run_evolve(cfg, a)?,
        Command::Audit { action } => run_audit(cfg, action)?,
        Command::Suite(s) => run_suite(cfg, s)?,
    };
    out.report.number("seed", cfg.cli.seed as f64, Tag::Input);
    if cfg.cli.wall_time {
        out.report.wall_time = Some(start.elapsed().as_secs_f64());
    }
    if let Some(b) = &out.breach {
        out.report.detail("guard_breach", b);
    }
    let json = to_json(&out.report)?;
    let default_name = format!("{}.json", out.report.scenario);
    if let Some(p) = cfg.cli.report.as_ref().map(|p| cfg.resolve(p)).or_else(|| cfg.out_root.as_ref().map(|r| r.join(&default_name))) {
        write_atomic(&p, &json)?;
    }
    Ok(out)
}

/// Full command-line entry point: parse, run, print the report, return the exit code.
pub fn main_with<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let spliced = match splice_config(argv) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("cmcflow: {e}");
            return EXIT_CONFIG;
        }
    };
    if let Err(e) = clap_matches(spliced.clone()) {
        use clap::error::ErrorKind;
        if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand) {
            let _ = e.print();
            return if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand { EXIT_CONFIG } else { EXIT_PASS };
        }
        let _ = e.print();
        return EXIT_CONFIG;
    }
    let cfg = match parse_config(spliced) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("cmcflow: {e}");
            return EXIT_CONFIG;
        }
    };
    match run(&cfg) {
        Ok(o) => {
            match to_json(&o.report) {
                Ok(j) => print!("{j}"),
                Err(e) => eprintln!("cmcflow: {e}"),
            }
            o.exit_code()
        }
        Err(e) => {
            eprintln!("cmcflow: {e}");
            exit_code(&e)
        }
    }
}

fn ok(report: ReportDoc) -> Result<Outcome> {
    Ok(Outcome { report, breach: None })
}

// ---------------------------------------------------------------------------
// rotsym

fn rotsym_csv(run: &crate::rotsym::RunRecord) -> String {
    csv_string(&["t", "f", "df", "gamma", "eta"], run.samples.iter().map(|s| vec![s.t, s.f, s.df, s.gamma, s.eta]))
}

fn run_rotsym(cfg: &RunConfig, action: &RotsymAction) -> Result<Outcome> {
    match action {
        RotsymAction::Run(a) => {
            let s0 = a.state()?;
            let run = integrate(&s0, a.t_end, &a.opts()?)?;
            let mut r = ReportDoc::new("rotsym-run", cfg.echo.clone());
            let n = run.samples.len();
            r.check(Check::flag("samples strictly increasing in t", n, run.samples.windows(2).all(|w| w[0].t < w[1].t)));
            r.check(Check::flag("f > 0 and |f'| < 1 at every sample", n, run.samples.iter().all(|s| s.f > 0.0 && s.gamma.is_finite() && s.eta > 0.0)));
            // η/μ − 1 keeps its sign along a trajectory.
            let mu = s0.scale();
            let signs: Vec<f64> = run.samples.iter().map(|s| s.eta / mu - 1.0).filter(|v| v.abs() > 1e-9).map(f64::signum).collect();
            r.check(Check::flag("η − 1 never changes sign", n, signs.windows(2).all(|w| w[0] == w[1])));
            let last = run.last();
            r.number("t_end", run.t_end(), Tag::Measured);
            r.number("f_end", last.f, Tag::Measured);
            r.number("df_end", last.df, Tag::Measured);
            r.number("eta_end", last.eta, Tag::Measured);
            r.number("steps_accepted", run.stats.accepted as f64, Tag::Measured);
            r.detail("termination", run.termination);
            if let Some(p) = cfg.artifact(&a.out, "rotsym_run.csv") {
                write_atomic(&p, &rotsym_csv(&run))?;
                r.detail("csv", p.display().to_string());
            }
            ok(r)
        }
        RotsymAction::Classify { base, horizon, demo } => {
            let o = base.opts()?;
            let mut r = ReportDoc::new(if *demo { "rotsym-classify-demo" } else { "rotsym-classify" }, cfg.echo.clone());
            let d = base.d;
            let mut entries = Vec::new();
            if *demo {
                let fs = d as f64 / (d as f64 + 1.0);
                let witnesses = [(1.0, ClassKind::Expanding), (0.5 * fs, ClassKind::BigBangBigCrunch), (fs, ClassKind::StaticCylinder)];
                for (f, want) in witnesses {
                    let s = SphSymState::new(0.0, f, 0.0, d);
                    let k = classify_with(&s, *horizon, &o)?;
                    r.check(Check::flag(format!("witness f0={f} classified {want:?}"), 1, k.kind == want));
                    entries.push(serde_json::json!({ "class": k.kind, "witness": { "t0": 0.0, "f0": f, "df0": 0.0, "d": d }, "past": k.past, "future": k.future, "eta0": k.eta0 }));
                }
            } else {
                let s = base.state()?;
                let k = classify_with(&s, *horizon, &o)?;
                let (_, eta) = invariants(&s)?;
                r.number("eta0", eta, Tag::Measured);
                r.number("eta_threshold", s.d as f64 / (s.d as f64 + 1.0) * s.scale(), Tag::Exact);
                r.check(Check::flag("classification decided", 1, k.kind != ClassKind::Undecided));
                entries.push(serde_json::to_value(&k).unwrap_or_default());
            }
            r.detail("classes", entries);
            ok(r)
        }
        RotsymAction::Separatrix { base, direction, horizon, tol } => {
            let s = base.state()?;
            let mu = s.scale();
            let dir = match direction {
                DirArg::Future => Direction::Future,
                DirArg::Past => Direction::Past,
            };
            // λ is dimensionless: rescale the radius to c = d+1.
            let lam = separatrix_lambda(base.f0 / mu, base.d, dir, *horizon / mu, *tol)?;
            let mut r = ReportDoc::new("rotsym-separatrix", cfg.echo.clone());
            r.number("lambda", lam, Tag::Measured);
            r.number("r0", base.f0, Tag::Input);
            r.check(Check::at_most("|λ| < 1", 1, lam.abs(), 1.0 - f64::EPSILON));
            ok(r)
        }
        RotsymAction::Tau0(a) => {
            let run = integrate(&a.state()?, a.t_end, &a.opts()?)?;
            let e = extract_tau0(&run)?;
            let mut r = ReportDoc::new("rotsym-tau0", cfg.echo.clone());
            r.number("tau0", e.tau0, Tag::Measured);
            r.number("tau0_bound", e.bound, Tag::Measured);
            r.number("raw_t_minus_f", e.raw, Tag::Measured);
            r.number("t_end", e.t_end, Tag::Measured);
            r.check(Check::flag("run reached its end time", run.samples.len(), run.termination == Termination::ReachedHorizonTime));
            r.check(Check::flag("estimate finite", 1, e.tau0.is_finite() && e.bound.is_finite()));
            if let Some(p) = cfg.artifact(&a.out, "rotsym_tau0.csv") {
                write_atomic(&p, &rotsym_csv(&run))?;
            }
            ok(r)
        }
    }
}

// ---------------------------------------------------------------------------
// igm

fn run_igm(cfg: &RunConfig, action: &IgmAction) -> Result<Outcome> {
    match action {
        IgmAction::Zeta { zeta0, d, t0, t_end, out } => {
            let z = integrate_zeta(*zeta0, *t0, *t_end, *d)?;
            let mut r = ReportDoc::new("igm-zeta", cfg.echo.clone());
            let n = z.samples.len();
            let same_sign = z.samples.iter().all(|s| s.zeta == 0.0 || s.zeta.signum() == zeta0.signum());
            let shrinking = z.samples.windows(2).all(|w| w[1].zeta.abs() <= w[0].zeta.abs() * (1.0 + 1e-12));
            r.check(Check::flag("ζ keeps its sign", n, same_sign));
            r.check(Check::flag("|ζ| nonincreasing for t > 0", n, shrinking));
            if let Some(f) = z.fit {
                r.number("decay_exponent", f.exponent, Tag::Measured);
                r.number("fit_residual", f.residual, Tag::Measured);
            }
            r.number("zeta_end", z.samples.last().map_or(f64::NAN, |s| s.zeta), Tag::Measured);
            if let Some(p) = cfg.artifact(out, "igm_zeta.csv") {
                write_atomic(&p, &csv_string(&["t", "zeta", "eta", "nu"], z.samples.iter().map(|s| vec![s.t, s.zeta, s.eta, s.nu])))?;
            }
            ok(r)
        }
        IgmAction::Bspec { zeta, d } => {
            let c = b_spectrum(*zeta, *d)?;
            let dn = b_spectrum_dense(*zeta, *d)?;
            let mut r = ReportDoc::new("igm-bspec", cfg.echo.clone());
            let gap = if c.eigenvalues.len() == dn.real.len() {
                c.eigenvalues.iter().zip(&dn.real).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
            } else {
                f64::INFINITY
            };
            r.number("nu", c.nu, Tag::Exact);
            r.number("max_gap", gap, Tag::Measured);
            r.number("invariance_defect", dn.invariance_defect, Tag::Measured);
            r.check(Check::at_most("closed form vs dense", c.eigenvalues.len(), gap.max(dn.max_imag), 1e-10));
            r.detail("closed_form", &c.cases);
            r.detail("dense", &dn.real);
            ok(r)
        }
    }
}

// ---------------------------------------------------------------------------
// modes

fn run_modes(cfg: &RunConfig, action: &ModesAction) -> Result<Outcome> {
    match action {
        ModesAction::Run { ell, d, psi0, dpsi0, t0, t_end, rtol, atol, out } => {
            let m0 = ModeState::new(*ell, *d, *t0, *psi0, *dpsi0);
            let run = integrate_mode(&m0, *t_end, &ModeOptions { rtol: *rtol, atol: *atol })?;
            let mut r = ReportDoc::new("modes-run", cfg.echo.clone());
            if *ell >= 1 {
                // The energy is nonincreasing for t ≥ 0.
                let e: Vec<f64> = run.samples.iter().filter(|s| s.t >= 0.0).map(|s| s.energy).collect();
                let rise = e.windows(2).fold(0.0f64, |m, w| m.max((w[1] - w[0]) / w[0].abs().max(1e-300)));
                r.check(Check::at_most("energy nonincreasing for t ≥ 0", e.len(), rise, 1e-10));
            }
            let last = run.last();
            r.number("psi_end", last.psi, Tag::Measured);
            r.number("dpsi_end", last.dpsi, Tag::Measured);
            r.number("psi_end_over_bracket_t", last.psi / jb(last.t), Tag::Measured);
            if let Some(p) = cfg.artifact(out, "modes_run.csv") {
                write_atomic(&p, &csv_string(&["t", "psi", "dpsi", "energy"], run.samples.iter().map(|s| vec![s.t, s.psi, s.dpsi, s.energy])))?;
            }
            ok(r)
        }
        ModesAction::HorizonDemo { bumps, t0, n, t_end, out } => {
            let times: Vec<f64> = (1..=40).map(|k| t0 * (t_end / t0).powf(k as f64 / 40.0)).filter(|&t| t < *t_end).collect();
            let rep = horizon_scenario(*bumps, *t0, *n, &times, &ModeOptions::default())?;
            let mut r = ReportDoc::new("modes-horizon-demo", cfg.echo.clone());
            let last = rep.samples.last().ok_or_else(|| Error::Domain("no samples".into()))?;
            let forb = rep.samples.iter().fold(0.0f64, |m, s| m.max(s.max_forbidden_projection));
            r.number("growth_ratio", last.growth_ratio, Tag::Measured);
            r.number("max_forbidden_projection", forb, Tag::Measured);
            r.number("separation", rep.delta0, Tag::Input);
            r.check(Check::at_least("‖φ‖∞ ≥ 0.9·max|ε|·t at the end", 1, last.growth_ratio, 0.9));
            r.check(Check::at_most("forbidden harmonic projections", rep.samples.len(), forb, 1e-8));
            r.detail("amplitudes", &rep.data.eps);
            r.detail("centers", rep.data.bumps.iter().map(|b| b.center).collect::<Vec<_>>());
            if let Some(p) = cfg.artifact(out, "modes_horizon.csv") {
                write_atomic(&p, &csv_string(&["t", "psi", "dpsi", "energy"], rep.samples.iter().map(|s| vec![s.t, s.ray_phi, s.ray_dphi, s.energy])))?;
            }
            ok(r)
        }
    }
}

// ---------------------------------------------------------------------------
// audit

fn run_audit(cfg: &RunConfig, action: &AuditAction) -> Result<Outcome> {
    match action {
        AuditAction::Stress { samples, d, out } => {
            let dims: Vec<usize> = d.map_or_else(|| vec![1, 2, 3], |d| vec![d]);
            let mut r = ReportDoc::new("audit-stress", cfg.echo.clone());
            let mut all = Vec::new();
            for d in dims {
                for mut a in stress_audit(cfg.cli.seed, *samples, d)? {
                    a.check = format!("{}_d{d}", a.check);
                    r.number(a.check.clone(), a.max_violation, Tag::Measured);
                    r.check(Check { check: a.check.clone(), samples: a.samples, max_violation: a.max_violation, pass: a.pass });
                    all.push(a);
                }
            }
            if let Some(p) = cfg.artifact(out, "audit_stress.json") {
                write_atomic(&p, &to_json(&all)?)?;
            }
            ok(r)
        }
        AuditAction::Energy { run } => {
            let path = cfg.resolve(run);
            let text = std::fs::read_to_string(&path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            let cols = parse_csv(&text)?;
            let (Some(t), Some(e)) = (cols.get("t"), cols.get("energy")) else {
                return Err(Error::Config(format!("{} has no `t` and `energy` columns", path.display())));
            };
            let a = energy_bound_audit(t, e)?;
            let mut r = ReportDoc::new("audit-energy", cfg.echo.clone());
            r.number("energy_start", a.energy_start, Tag::Measured);
            r.number("energy_sup", a.left, Tag::Measured);
            r.check(Check { check: a.check.clone(), samples: a.samples, max_violation: a.max_violation, pass: a.pass });
            ok(r)
        }
    }
}

// ---------------------------------------------------------------------------
// evolve

fn run_evolve(cfg: &RunConfig, a: &EvolveArgs) -> Result<Outcome> {
    let opts = EvolveOptions { rtol: a.rtol, atol: a.atol, ..EvolveOptions::default() };
    let (name, s0, patch) = match a.scenario {
        Scenario::Zero => ("zero", scenario_zero(a.n, a.t0)?, None),
        Scenario::Bump => ("bump", scenario_bump(a.n, a.t0, a.amp.unwrap_or(1e-3), a.center, a.width)?, None),
        Scenario::TranslatedPatch => {
            let spec = PatchSpec::new(a.amp.unwrap_or(0.02), a.t0)?;
            ("translated-patch", scenario_translated_patch(a.n, &spec)?, Some(spec))
        }
    };
    let traj = evolve(&s0, a.t_end, &geometric_times(a.t0, a.t_end), &opts)?;
    let mut r = ReportDoc::new(format!("evolve-{name}"), cfg.echo.clone());
    r.number("steps", traj.steps as f64, Tag::Measured);
    r.number("rhs_evals", traj.rhs_evals as f64, Tag::Measured);
    r.number("t_reached", traj.last().t, Tag::Measured);
    let diag = &traj.diagnostics;
    if let Some(d0) = diag.first() {
        r.number("energy_initial", d0.energy, Tag::Measured);
    }
    if let Some(dl) = diag.last() {
        r.number("energy_final", dl.energy, Tag::Measured);
        r.number("supnorm_final", dl.supnorm, Tag::Measured);
        r.number("ushift_range_final", dl.ushift_range, Tag::Measured);
    }
    if traj.completed() {
        if patch.is_none() {
            let ts: Vec<f64> = diag.iter().map(|d| d.t).collect();
            let es: Vec<f64> = diag.iter().map(|d| d.energy).collect();
            let e = energy_bound_audit(&ts, &es)?;
            r.check(Check { check: "sup E ≤ 2·E(t₀)".into(), samples: e.samples, max_violation: e.max_violation, pass: e.pass });
        }
        let res = residual_audit(&traj, &opts)?;
        r.number("h_residual", res.h_residual[1], Tag::Measured);
        r.number("h_residual_order", res.h_order, Tag::Measured);
        r.number("igm_residual", res.igm_curl[1].max(res.igm_div[1]), Tag::Measured);
        r.check(Check::at_most("H residual", res.probes, res.h_residual[1], 1e-6));
        if let Some(spec) = patch {
            let ag = patch_agreement(&traj, &spec)?;
            r.number("patch_deviation", ag.max_deviation, Tag::Measured);
            r.check(Check::at_most("exact translates inside dependence domains", ag.nodes_checked, ag.max_deviation, 1e-6));
            let u = ushift(&traj)?;
            r.number("u_inf_cap_0", u.at(0.0), Tag::Measured);
            r.number("u_inf_cap_pi", u.at(std::f64::consts::PI), Tag::Measured);
            r.number("u_inf_range", u.range, Tag::Measured);
            let cone = cone_test(&traj, spec.eps);
            r.number("cone_min_sup", cone.min_sup, Tag::Measured);
            r.check(Check::at_least("distance from every light cone ≥ ε/2", 25, cone.min_sup, 0.5 * spec.eps.abs()));
        }
    }
    if let Some(dir) = cfg.artifact(&a.out, &format!("evolve-{name}")) {
        let mut files = Vec::new();
        for (k, s) in traj.snapshots.iter().enumerate() {
            let f = format!("snapshot_{k:03}.csv");
            let rows = s.nodes().into_iter().zip(s.phi.iter().zip(&s.dphi)).map(|(w, (p, dp))| vec![s.t, w, *p, *dp]);
            write_atomic(&dir.join(&f), &csv_string(&["t", "omega", "phi", "dphi"], rows))?;
            files.push(f);
        }
        write_atomic(
            &dir.join("diagnostics.csv"),
            &csv_string(&["t", "energy", "supnorm", "ushift_range"], diag.iter().map(|d| vec![d.t, d.energy, d.supnorm, d.ushift_range])),
        )?;
        r.detail("snapshots", files);
        r.detail("out_dir", dir.display().to_string());
        let mut summary = r.clone();
        summary.pass = r.pass && traj.completed();
        write_atomic(&dir.join("summary.json"), &to_json(&summary)?)?;
    }
    let breach = traj.halt.as_ref().map(|h| format!("t = {}: {}", h.t, h.reason));
    Ok(Outcome { report: r, breach })
}

// ---------------------------------------------------------------------------
// suite

fn run_suite(cfg: &RunConfig, s: &SuiteArgs) -> Result<Outcome> {
    let ids: Vec<u32> = if s.only.is_empty() { suite::IDS.collect() } else { s.only.clone() };
    let mut r = ReportDoc::new("suite", cfg.echo.clone());
    let mut all = Vec::new();
    for id in ids {
        let c = suite::run_criterion(id, cfg.cli.seed);
        eprintln!("{}", c.line());
        for (k, q) in &c.numbers {
            r.number(format!("c{:02}.{k}", c.id), q.value, q.tag);
        }
        let worst = c.checks.iter().fold(0.0f64, |m, x| m.max(x.max_violation));
        r.check(Check { check: format!("criterion {}: {}", c.id, c.title), samples: c.checks.len(), max_violation: worst, pass: c.pass });
        all.push(c);
    }
    r.detail("criteria", &all);
    ok(r)
}
