//! Spherically symmetric profiles `r = f(t)` with constant mean curvature `c`.
//!
//! The profile equation is `f'' = (1−f'²)/f · (c f √(1−f'²) − d)`. Internally
//! the state is `(f, χ)` with `f' = tanh χ`, which turns the equation into
//!
//! ```text
//! f' = tanh χ,   χ' = c / cosh χ − d / f.
//! ```
//!
//! In these variables `γ = sinh χ`, `η = f / cosh χ` and
//! `1 − |f'| = 2 / (e^{2|χ|} + 1)` are all evaluated without cancellation,
//! which is what keeps the light-cone and collapse diagnostics accurate.
//!
//! Classification thresholds are stated for `c = d+1`; other `c` are mapped
//! there by the scaling `f(t) = μ F(t/μ)`, `μ = (d+1)/c`.

use serde::Serialize;

use crate::dsgeom::jb;
use crate::error::{domain, Error, Result};
use crate::ode::{self, DenseOutput, OdeOptions, SolveSpec, Stop};

/// `f ≤ COLLAPSE_F` counts as collapse.
pub const COLLAPSE_F: f64 = 1e-8;
/// `1 − f'² ≤ DEGENERATE` counts as timelike degeneracy.
pub const DEGENERATE: f64 = 1e-12;
/// Width of the band around the cylinder radius treated as "hugging".
pub const HUG_BAND: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SphSymState {
    pub t: f64,
    pub f: f64,
    pub df: f64,
    pub d: usize,
    pub c: f64,
}

impl SphSymState {
    /// State with the normalized curvature `c = d+1`.
    pub fn new(t: f64, f: f64, df: f64, d: usize) -> Self {
        Self { t, f, df, d, c: (d + 1) as f64 }
    }

    pub fn with_c(mut self, c: f64) -> Self {
        self.c = c;
        self
    }

    /// Radius of the static cylinder, `d/c`.
    pub fn f_star(&self) -> f64 {
        self.d as f64 / self.c
    }

    /// `μ = (d+1)/c`.
    pub fn scale(&self) -> f64 {
        (self.d + 1) as f64 / self.c
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return domain("d must be at least 1");
        }
        if !(self.c > 0.0) || !self.c.is_finite() {
            return domain(format!("mean curvature must be positive, got {}", self.c));
        }
        if !(self.f > 0.0) || !self.f.is_finite() {
            return domain(format!("radius must be positive, got {}", self.f));
        }
        if !(self.df.abs() < 1.0) {
            return domain(format!("profile must be timelike, |f'| = {} ≥ 1", self.df.abs()));
        }
        if !self.t.is_finite() {
            return domain("non-finite time");
        }
        Ok(())
    }

    fn chi(&self) -> f64 {
        self.df.atanh()
    }
}

/// `f''` from the profile equation.
pub fn rhs(s: &SphSymState) -> Result<f64> {
    s.validate()?;
    let w = 1.0 - s.df * s.df;
    Ok(w / s.f * (s.c * s.f * w.sqrt() - s.d as f64))
}

/// `(γ, η) = (f'/√(1−f'²), f√(1−f'²))`.
pub fn invariants(s: &SphSymState) -> Result<(f64, f64)> {
    if !(s.df.abs() < 1.0) {
        return domain(format!("|f'| = {} is not timelike", s.df.abs()));
    }
    let w = (1.0 - s.df * s.df).sqrt();
    Ok((s.df / w, s.f * w))
}

/// One point of a trajectory. Near collapse `df` can round to `±1`; `gamma`,
/// `eta` and [`RunRecord::one_minus_abs_df`] stay exact there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sample {
    pub t: f64,
    pub f: f64,
    pub df: f64,
    pub gamma: f64,
    pub eta: f64,
}

impl Sample {
    fn from_rapidity(t: f64, f: f64, chi: f64) -> Self {
        Self { t, f, df: chi.tanh(), gamma: chi.sinh(), eta: f / chi.cosh() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind")]
pub enum Termination {
    ReachedHorizonTime,
    /// `t_event` is where `f` crossed the threshold; `t_collapse` extrapolates to `f = 0`.
    CollapseDetected {
        t_event: f64,
        t_collapse: f64,
    },
    TimelikeDegenerate {
        t: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunStats {
    pub accepted: usize,
    pub rejected: usize,
    pub nfev: usize,
    pub rtol: f64,
    pub atol: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct RotsymOptions {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for RotsymOptions {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-12 }
    }
}

impl RotsymOptions {
    fn ode(&self) -> OdeOptions {
        OdeOptions { rtol: self.rtol, atol: self.atol, ..OdeOptions::default() }
    }
}

/// A finished integration. Samples are sorted by increasing `t` whichever
/// direction was integrated.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub d: usize,
    pub c: f64,
    pub t0: f64,
    pub samples: Vec<Sample>,
    pub termination: Termination,
    pub stats: RunStats,
    dense: DenseOutput,
}

impl RunRecord {
    /// Integration direction, `+1` or `−1`.
    pub fn dir(&self) -> f64 {
        if self.dense.t_last() >= self.t0 {
            1.0
        } else {
            -1.0
        }
    }

    pub fn t_end(&self) -> f64 {
        self.dense.t_last()
    }

    /// Interpolated sample at `t`, if `t` lies inside the integrated span.
    pub fn sample_at(&self, t: f64) -> Option<Sample> {
        if !self.dense.covers(t) {
            return None;
        }
        let y = self.dense.eval(t);
        Some(Sample::from_rapidity(t, y[0], y[1]))
    }

    /// `1 − |f'|` at `t`, evaluated without cancellation.
    pub fn one_minus_abs_df(&self, t: f64) -> Option<f64> {
        self.dense.covers(t).then(|| {
            let chi = self.dense.eval(t)[1].abs();
            2.0 / ((2.0 * chi).exp() + 1.0)
        })
    }

    /// Rapidity `χ = atanh f'` at `t`.
    pub fn chi_at(&self, t: f64) -> Option<f64> {
        self.dense.covers(t).then(|| self.dense.eval(t)[1])
    }

    pub fn last(&self) -> Sample {
        if self.dir() > 0.0 {
            *self.samples.last().unwrap()
        } else {
            self.samples[0]
        }
    }
}

fn flow(d: f64, c: f64) -> impl Fn(f64, &[f64], &mut [f64]) {
    move |_t, y, dy| {
        dy[0] = y[1].tanh();
        dy[1] = c / y[1].cosh() - d / y[0];
    }
}

/// Integrates from `s0` to `t_end` (either direction), stopping at collapse
/// or, while expanding, at timelike degeneracy.
pub fn integrate(s0: &SphSymState, t_end: f64, opts: &RotsymOptions) -> Result<RunRecord> {
    s0.validate()?;
    if !t_end.is_finite() {
        return domain("non-finite end time");
    }
    let dir = if t_end >= s0.t { 1.0 } else { -1.0 };
    let cosh_max = 1.0 / DEGENERATE.sqrt();
    let spec = SolveSpec {
        events: vec![Box::new(|_t, y: &[f64]| y[0] - COLLAPSE_F), Box::new(move |_t, y: &[f64]| if y[1] * dir > 0.0 { cosh_max - y[1].cosh() } else { 1.0 })],
        keep_dense: true,
        ..SolveSpec::default()
    };
    let run = ode::solve(flow(s0.d as f64, s0.c), s0.t, &[s0.f, s0.chi()], t_end, &opts.ode(), spec);
    let termination = match run.stop {
        Stop::Reached => Termination::ReachedHorizonTime,
        Stop::Event { index: 0, t } => {
            let slope = run.y[1].tanh().abs();
            Termination::CollapseDetected { t_event: t, t_collapse: t + dir * run.y[0] / slope }
        }
        Stop::Event { t, .. } => Termination::TimelikeDegenerate { t },
        Stop::StepFailure { t } | Stop::MaxSteps { t } | Stop::Halted { t } => return Err(Error::StepFailure { t }),
    };
    let dense = run.dense.expect("dense output requested");
    let mut samples: Vec<Sample> = std::iter::once(s0.t)
        .chain(dense.step_times().into_iter().filter(|&t| t != s0.t))
        .map(|t| {
            let y = dense.eval(t);
            Sample::from_rapidity(t, y[0], y[1])
        })
        .collect();
    if dir < 0.0 {
        samples.reverse();
    }
    samples.dedup_by(|a, b| a.t == b.t);
    Ok(RunRecord {
        d: s0.d,
        c: s0.c,
        t0: s0.t,
        samples,
        termination,
        stats: RunStats { accepted: run.accepted, rejected: run.rejected, nfev: run.nfev, rtol: opts.rtol, atol: opts.atol },
        dense,
    })
}

// ---------------------------------------------------------------------------
// classification

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ClassKind {
    Expanding,
    StaticCylinder,
    BigBangBigCrunch,
    CollapsePastExpandFuture,
    CollapsePastToCylinder,
    FromCylinderExpandFuture,
    ExpandPastCollapseFuture,
    FromCylinderCollapseFuture,
    ExpandPastToCylinder,
    Undecided,
}

/// Behaviour in one time direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "fate")]
pub enum Fate {
    Expands,
    Collapses {
        t_collapse: f64,
    },
    /// Still within [`HUG_BAND`] of the cylinder at the horizon.
    ApproachesCylinder,
    Unresolved,
    Static,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub kind: ClassKind,
    /// For `Undecided` caused by hugging, the class the trajectory most likely belongs to.
    pub likely: Option<ClassKind>,
    pub past: Fate,
    pub future: Fate,
    pub gamma0: f64,
    pub eta0: f64,
    pub evidence: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Direction {
    Future,
    Past,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Future => 1.0,
            Direction::Past => -1.0,
        }
    }
}

/// The state mapped to `c = d+1` by `f ↦ f/μ`, `t ↦ t/μ`.
fn normalized(s: &SphSymState) -> SphSymState {
    let mu = s.scale();
    SphSymState::new(s.t / mu, s.f / mu, s.df, s.d)
}

fn fate(n: &SphSymState, horizon: f64, dir: f64, mu: f64, opts: &RotsymOptions, ev: &mut Vec<String>) -> Result<Fate> {
    let run = integrate(n, n.t + dir * horizon, opts)?;
    let fs = n.f_star();
    let label = if dir > 0.0 { "future" } else { "past" };
    Ok(match run.termination {
        Termination::CollapseDetected { t_collapse, .. } => {
            ev.push(format!("{label}: collapse at t = {:.12}", t_collapse * mu));
            Fate::Collapses { t_collapse: t_collapse * mu }
        }
        Termination::TimelikeDegenerate { t } => {
            ev.push(format!("{label}: light-cone degeneracy while expanding at t = {:.6}", t * mu));
            Fate::Expands
        }
        Termination::ReachedHorizonTime => {
            let last = run.last();
            if last.f > fs + HUG_BAND && last.df * dir > 0.0 {
                ev.push(format!("{label}: f = {:.6e} > f* with outward slope at horizon", last.f * mu));
                Fate::Expands
            } else if (last.f - fs).abs() < HUG_BAND {
                ev.push(format!("{label}: within {HUG_BAND:e} of the cylinder at horizon"));
                Fate::ApproachesCylinder
            } else {
                ev.push(format!("{label}: no certificate at horizon (f = {:.6e}, f' = {:.6e})", last.f * mu, last.df));
                Fate::Unresolved
            }
        }
    })
}

fn kind_of(past: Fate, future: Fate) -> Option<ClassKind> {
    use ClassKind::*;
    use Fate::*;
    Some(match (past, future) {
        (Expands, Expands) => Expanding,
        (Collapses { .. }, Collapses { .. }) => BigBangBigCrunch,
        (Collapses { .. }, Expands) => CollapsePastExpandFuture,
        (Collapses { .. }, ApproachesCylinder) => CollapsePastToCylinder,
        (ApproachesCylinder, Expands) => FromCylinderExpandFuture,
        (Expands, Collapses { .. }) => ExpandPastCollapseFuture,
        (ApproachesCylinder, Collapses { .. }) => FromCylinderCollapseFuture,
        (Expands, ApproachesCylinder) => ExpandPastToCylinder,
        (Static, Static) => StaticCylinder,
        _ => return None,
    })
}

/// Classifies the maximal solution through `s0` by integrating `±horizon`.
pub fn classify(s0: &SphSymState, horizon: f64) -> Result<Classification> {
    classify_with(s0, horizon, &RotsymOptions::default())
}

pub fn classify_with(s0: &SphSymState, horizon: f64, opts: &RotsymOptions) -> Result<Classification> {
    s0.validate()?;
    let (gamma0, eta0) = invariants(s0)?;
    let mu = s0.scale();
    let n = normalized(s0);
    let fs = n.f_star();
    let mut evidence = vec![format!("eta0 = {:.6e} vs d/(d+1) = {:.6e}; f'0 = {:.6e}", eta0 / mu, fs, s0.df)];
    if (n.f - fs).abs() <= 1e-12 && n.df.abs() <= 1e-12 {
        evidence.push("initial data is the static cylinder".into());
        return Ok(Classification { kind: ClassKind::StaticCylinder, likely: None, past: Fate::Static, future: Fate::Static, gamma0, eta0, evidence });
    }
    let h = horizon / mu;
    let future = fate(&n, h, 1.0, mu, opts, &mut evidence)?;
    let past = fate(&n, h, -1.0, mu, opts, &mut evidence)?;
    let hug = matches!(past, Fate::ApproachesCylinder) || matches!(future, Fate::ApproachesCylinder);
    let (kind, likely) = match kind_of(past, future) {
        Some(k) if !hug => (k, None),
        Some(k) => (ClassKind::Undecided, Some(k)),
        None => (ClassKind::Undecided, None),
    };
    Ok(Classification { kind, likely, past, future, gamma0, eta0, evidence })
}

// ---------------------------------------------------------------------------
// separatrix

#[derive(Debug, Clone, Copy, PartialEq)]
enum Verdict {
    Expand,
    Collapse,
    Hug,
}

/// Integrates until one of the monotonicity certificates holds.
fn verdict(r0: f64, slope: f64, d: usize, dir: f64, horizon: f64, opts: &RotsymOptions) -> Result<Verdict> {
    let s = SphSymState::new(0.0, r0, slope, d);
    s.validate()?;
    let fs = s.f_star();
    let spec = SolveSpec {
        events: vec![
            Box::new(|_t, y: &[f64]| y[0] - COLLAPSE_F),
            Box::new(move |_t, y: &[f64]| (fs + 1e-9 - y[0]).max(-dir * y[1])),
            Box::new(move |_t, y: &[f64]| (y[0] / y[1].cosh() - fs + 1e-9).max(dir * y[1])),
        ],
        ..SolveSpec::default()
    };
    let run = ode::solve(flow(d as f64, s.c), 0.0, &[r0, s.chi()], dir * horizon, &opts.ode(), spec);
    match run.stop {
        Stop::Event { index: 1, .. } => Ok(Verdict::Expand),
        Stop::Event { .. } => Ok(Verdict::Collapse),
        Stop::Reached => {
            if (run.y[0] - fs).abs() < HUG_BAND {
                Ok(Verdict::Hug)
            } else {
                Err(Error::Undecided(format!("no certificate within horizon {horizon} at slope {slope}")))
            }
        }
        Stop::StepFailure { t } | Stop::MaxSteps { t } | Stop::Halted { t } => Err(Error::StepFailure { t }),
    }
}

/// The unique initial slope `λ±(r0)` at `t = 0` whose trajectory converges to
/// the cylinder in the given direction, by bisection to width `tol`.
///
/// Bisection runs on `dir·λ`, so the past search performs the mirrored
/// computation of the future search.
pub fn separatrix_lambda(r0: f64, d: usize, direction: Direction, horizon: f64, tol: f64) -> Result<f64> {
    if !(r0 > 0.0) {
        return domain("r0 must be positive");
    }
    let dir = direction.sign();
    let opts = RotsymOptions::default();
    let test = |m: f64| verdict(r0, dir * m, d, dir, horizon, &opts);
    let (mut lo, mut hi) = (-1.0 + 1e-12, 1.0 - 1e-12);
    if test(lo)? != Verdict::Collapse || test(hi)? != Verdict::Expand {
        return Err(Error::Undecided(format!("slopes ±1 do not bracket the separatrix at r0 = {r0}")));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        match test(mid)? {
            Verdict::Expand => hi = mid,
            Verdict::Collapse => lo = mid,
            Verdict::Hug => return Ok(dir * mid),
        }
    }
    Ok(dir * 0.5 * (lo + hi))
}

// ---------------------------------------------------------------------------
// light-cone asymptote

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tau0Estimate {
    pub tau0: f64,
    /// Bound on `|τ₀ − estimate|` from the tail of the integration.
    pub bound: f64,
    /// The raw `t − f(t)` at the end of the run.
    pub raw: f64,
    pub t_end: f64,
}

/// `τ₀ = lim (t − f(t))` for a future-expanding run.
///
/// Uses `t − f + μ(⟨γ⟩ − γ)`, which is exact on translated de Sitter
/// profiles. Along the flow its derivative is `(1−f')·d(1−η̂)/η̂` with
/// `η̂ = η/μ`, so the remaining drift is at most `μ d |1−η̂| / (η̂ γ)`.
pub fn extract_tau0(run: &RunRecord) -> Result<Tau0Estimate> {
    if run.dir() < 0.0 || run.termination != Termination::ReachedHorizonTime {
        return domain("τ₀ needs a future run that reached its end time");
    }
    let t = run.t_end();
    let last = run.last();
    let mu = (run.d + 1) as f64 / run.c;
    if !(last.df > 0.0) || last.f <= mu * run.d as f64 / (run.d + 1) as f64 {
        return domain("run is not expanding at its end time");
    }
    let chi = run.chi_at(t).unwrap();
    let raw = t - last.f;
    let tau0 = raw + mu * (-chi).exp();
    let eta_n = last.eta / mu;
    let bound = mu * run.d as f64 * (1.0 - eta_n).abs() / (eta_n * last.gamma);
    Ok(Tau0Estimate { tau0, bound, raw, t_end: t })
}

// ---------------------------------------------------------------------------
// collapse profile

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CollapseProfile {
    pub t_collapse: f64,
    /// `sup (1−|f'|)/(T−t)` over the window.
    pub rate_constant: f64,
    /// `sup √(1−f'²)/(T−t)` over the window.
    pub sqrt_constant: f64,
    /// `sup η/(T−t)²` over the window.
    pub eta_constant: f64,
    /// Every ratio's sup over the last decade is at most twice its sup over the first.
    pub bounded: bool,
    /// `(T−t, (1−|f'|)/(T−t), √(1−f'²)/(T−t), η/(T−t)²)` on a geometric grid.
    pub table: Vec<[f64; 4]>,
}

/// Ratios near a collapse over `T−t ∈ [1e-5, 1e-1]`.
pub fn collapse_profile(run: &RunRecord) -> Result<CollapseProfile> {
    let Termination::CollapseDetected { t_collapse, .. } = run.termination else {
        return domain("run did not collapse");
    };
    let dir = run.dir();
    let n = 161;
    let mut table = Vec::with_capacity(n);
    for k in 0..n {
        let s = 10f64.powf(-5.0 + 4.0 * k as f64 / (n - 1) as f64);
        let t = t_collapse - dir * s;
        let (Some(chi), Some(sm)) = (run.chi_at(t), run.sample_at(t)) else {
            return Err(Error::Domain(format!("insufficient samples: T−t = {s:e} not covered")));
        };
        let a = chi.abs();
        let one_minus = 2.0 / ((2.0 * a).exp() + 1.0);
        let sq = 1.0 / a.cosh();
        table.push([s, one_minus / s, sq / s, sm.eta / (s * s)]);
    }
    let decade =
        |lo: f64, hi: f64, i: usize| table.iter().filter(|r| r[0] >= lo * (1.0 - 1e-12) && r[0] <= hi * (1.0 + 1e-12)).map(|r| r[i]).fold(0.0, f64::max);
    let bounded = (1..4).all(|i| {
        let first = decade(1e-2, 1e-1, i);
        let last = decade(1e-5, 1e-4, i);
        last.is_finite() && last <= 2.0 * first.max(f64::MIN_POSITIVE)
    });
    let sup = |i: usize| table.iter().map(|r| r[i]).fold(0.0, f64::max);
    Ok(CollapseProfile { t_collapse, rate_constant: sup(1), sqrt_constant: sup(2), eta_constant: sup(3), bounded, table })
}

// ---------------------------------------------------------------------------
// maximum principle

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaxPrincipleReport {
    pub t_start: f64,
    pub t_end: f64,
    pub critical_points: usize,
    pub minima: usize,
    /// The runs coincide, which the comparison lemma excludes.
    pub excluded: bool,
    pub pass: bool,
}

/// Counts critical points of `(f₂−f₁)²` on the common interval of two runs.
pub fn max_principle_check(run1: &RunRecord, run2: &RunRecord) -> MaxPrincipleReport {
    let span = |r: &RunRecord| (r.samples[0].t, r.samples.last().unwrap().t);
    let (a1, b1) = span(run1);
    let (a2, b2) = span(run2);
    let (a, b) = (a1.max(a2), b1.min(b2));
    let n = 2000;
    let mut diff = Vec::with_capacity(n);
    let mut ddiff = Vec::with_capacity(n);
    if b > a {
        for k in 0..n {
            let t = a + (b - a) * k as f64 / (n - 1) as f64;
            let (Some(s1), Some(s2)) = (run1.sample_at(t), run2.sample_at(t)) else { continue };
            diff.push(s2.f - s1.f);
            ddiff.push(s2.df - s1.df);
        }
    }
    let excluded = diff.iter().all(|x| x.abs() < 1e-14);
    let mut critical = 0;
    let mut minima = 0;
    if !excluded {
        let dd: Vec<f64> = diff.iter().zip(&ddiff).map(|(u, v)| 2.0 * u * v).collect();
        let mut prev = dd.iter().copied().find(|x| *x != 0.0).unwrap_or(0.0);
        for &x in &dd {
            if x != 0.0 && x.signum() != prev.signum() {
                critical += 1;
                if prev < 0.0 {
                    minima += 1;
                }
                prev = x;
            }
        }
    }
    MaxPrincipleReport { t_start: a, t_end: b, critical_points: critical, minima, excluded, pass: !excluded && critical <= 1 && minima == critical }
}

/// `⟨t⟩`, the de Sitter profile, as a convenience for examples and tests.
pub fn de_sitter_profile(t: f64) -> f64 {
    jb(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn rhs_examples() {
        let t: f64 = 1.0;
        let s = SphSymState::new(t, jb(t), t / jb(t), 2);
        assert_relative_eq!(rhs(&s).unwrap(), 2f64.powf(-1.5), epsilon = 1e-15);
        assert!(rhs(&SphSymState::new(0.0, 2.0 / 3.0, 0.0, 2)).unwrap().abs() < 1e-15);
        assert_relative_eq!(rhs(&SphSymState::new(0.0, 0.5, 0.0, 2)).unwrap(), -1.0, epsilon = 1e-15);
        assert!(rhs(&SphSymState::new(0.0, 0.5, 1.0, 2)).is_err());
        assert!(rhs(&SphSymState::new(0.0, -0.5, 0.0, 2)).is_err());
    }

    #[test]
    fn invariants_examples() {
        let (g, e) = invariants(&SphSymState::new(3.0, jb(3.0), 3.0 / jb(3.0), 2)).unwrap();
        assert_relative_eq!(g, 3.0, epsilon = 1e-14);
        assert_relative_eq!(e, 1.0, epsilon = 1e-14);
        assert_eq!(invariants(&SphSymState::new(0.0, 2.0 / 3.0, 0.0, 2)).unwrap(), (0.0, 2.0 / 3.0));
        let (g, e) = invariants(&SphSymState::new(0.0, 1.0, 0.6, 2)).unwrap();
        assert_relative_eq!(g, 0.75, epsilon = 1e-15);
        assert_relative_eq!(e, 0.8, epsilon = 1e-15);
    }

    #[test]
    fn de_sitter_and_cylinder() {
        let o = RotsymOptions::default();
        let run = integrate(&SphSymState::new(0.0, 1.0, 0.0, 2), 10.0, &o).unwrap();
        assert_eq!(run.termination, Termination::ReachedHorizonTime);
        for s in &run.samples {
            assert!((s.f / jb(s.t) - 1.0).abs() <= 1e-8);
        }
        let cyl = integrate(&SphSymState::new(0.0, 2.0 / 3.0, 0.0, 2), 10.0, &o).unwrap();
        for s in &cyl.samples {
            assert!((s.f - 2.0 / 3.0).abs() <= 1e-10);
        }
    }

    /// Independent oracle: classical RK4 on `(f, f')`, stopped at `f < 1e-3`
    /// and extrapolated linearly; Richardson combination of two step sizes.
    fn rk4_collapse_time(f0: f64, d: f64, dir: f64, h: f64) -> f64 {
        let acc = |f: f64, p: f64| {
            let w = 1.0 - p * p;
            w / f * ((d + 1.0) * f * w.sqrt() - d)
        };
        let (mut t, mut f, mut p) = (0.0, f0, 0.0);
        let h = dir * h;
        while f > 1e-3 {
            let (k1f, k1p) = (p, acc(f, p));
            let (k2f, k2p) = (p + 0.5 * h * k1p, acc(f + 0.5 * h * k1f, p + 0.5 * h * k1p));
            let (k3f, k3p) = (p + 0.5 * h * k2p, acc(f + 0.5 * h * k2f, p + 0.5 * h * k2p));
            let (k4f, k4p) = (p + h * k3p, acc(f + h * k3f, p + h * k3p));
            let fnew = f + h / 6.0 * (k1f + 2.0 * k2f + 2.0 * k3f + k4f);
            let pnew = p + h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
            if fnew <= 1e-3 {
                // finish with linear interpolation inside the step
                let s = (f - 1e-3) / (f - fnew);
                t += s * h;
                p += s * (pnew - p);
                f = 1e-3;
                break;
            }
            t += h;
            f = fnew;
            p = pnew;
        }
        t + dir * f / p.abs()
    }

    #[test]
    fn collapse_times_match_oracle() {
        let o = RotsymOptions::default();
        let fut = integrate(&SphSymState::new(0.0, 0.5, 0.0, 2), 10.0, &o).unwrap();
        let past = integrate(&SphSymState::new(0.0, 0.5, 0.0, 2), -10.0, &o).unwrap();
        let Termination::CollapseDetected { t_collapse: tp, .. } = fut.termination else { panic!() };
        let Termination::CollapseDetected { t_collapse: tm, .. } = past.termination else { panic!() };
        assert!(tp > 0.0 && tm < 0.0);
        assert_relative_eq!(tp, -tm, epsilon = 1e-12);
        let a = rk4_collapse_time(0.5, 2.0, 1.0, 1e-4);
        let b = rk4_collapse_time(0.5, 2.0, 1.0, 5e-5);
        let rich = b + (b - a) / 15.0;
        assert!((rich - tp).abs() < 1e-6, "rk5 {tp} vs oracle {rich}");
    }

    #[test]
    fn classify_examples() {
        assert_eq!(classify(&SphSymState::new(0.0, 1.0, 0.0, 2), 50.0).unwrap().kind, ClassKind::Expanding);
        assert_eq!(classify(&SphSymState::new(0.0, 0.5, 0.0, 2), 50.0).unwrap().kind, ClassKind::BigBangBigCrunch);
        assert_eq!(classify(&SphSymState::new(0.0, 2.0 / 3.0, 0.0, 2), 50.0).unwrap().kind, ClassKind::StaticCylinder);
        let c = classify(&SphSymState::new(0.0, 1.0, -0.9, 2), 50.0).unwrap();
        assert_eq!(c.kind, ClassKind::ExpandPastCollapseFuture);
    }

    #[test]
    fn general_curvature_scales() {
        // f(t) = μ F(t/μ): c = 1.5 with d = 2 gives μ = 2
        let o = RotsymOptions::default();
        let a = integrate(&SphSymState::new(0.0, 2.0, 0.2, 2).with_c(1.5), 6.0, &o).unwrap();
        let b = integrate(&SphSymState::new(0.0, 1.0, 0.2, 2), 3.0, &o).unwrap();
        assert_relative_eq!(a.last().f, 2.0 * b.last().f, max_relative = 1e-8);
        let k = classify(&SphSymState::new(0.0, 0.9, 0.0, 2).with_c(1.5), 50.0).unwrap();
        assert_eq!(k.kind, ClassKind::BigBangBigCrunch);
    }

    #[test]
    fn separatrix_at_cylinder_radius() {
        let l = separatrix_lambda(2.0 / 3.0, 2, Direction::Future, 50.0, 1e-10).unwrap();
        assert!(l.abs() <= 1e-8, "{l}");
    }

    #[test]
    fn separatrix_is_time_symmetric() {
        let p = separatrix_lambda(0.5, 2, Direction::Future, 50.0, 1e-10).unwrap();
        let m = separatrix_lambda(0.5, 2, Direction::Past, 50.0, 1e-10).unwrap();
        assert!(p > 0.0);
        assert!((p + m).abs() <= 2e-10);
    }

    #[test]
    fn tau0_examples() {
        let o = RotsymOptions::default();
        let ds = integrate(&SphSymState::new(0.0, 1.0, 0.0, 2), 100.0, &o).unwrap();
        let e = extract_tau0(&ds).unwrap();
        assert!(e.tau0.abs() < 1e-6 && e.raw.abs() < 1e-2);
        let sh = integrate(&SphSymState::new(5.0, 1.0, 0.0, 2), 105.0, &o).unwrap();
        assert!((extract_tau0(&sh).unwrap().tau0 - 5.0).abs() < 1e-6);
        let col = integrate(&SphSymState::new(0.0, 0.5, 0.0, 2), 10.0, &o).unwrap();
        assert!(extract_tau0(&col).is_err());
    }

    #[test]
    fn collapse_ratios_bounded() {
        let run = integrate(&SphSymState::new(0.0, 0.5, 0.0, 2), 10.0, &RotsymOptions::default()).unwrap();
        let p = collapse_profile(&run).unwrap();
        assert!(p.bounded);
        assert!(p.rate_constant.is_finite() && p.eta_constant.is_finite());
    }

    #[test]
    fn max_principle_cases() {
        let o = RotsymOptions::default();
        let ds = integrate(&SphSymState::new(0.0, 1.0, 0.0, 2), 5.0, &o).unwrap();
        let cyl = integrate(&SphSymState::new(0.0, 2.0 / 3.0, 0.0, 2), 5.0, &o).unwrap();
        let r = max_principle_check(&ds, &cyl);
        assert!(r.pass && r.critical_points <= 1);
        let shifted = integrate(&SphSymState::new(0.5, 1.0, 0.0, 2), 5.5, &o).unwrap();
        assert!(max_principle_check(&ds, &shifted).pass);
        let same = max_principle_check(&ds, &ds);
        assert!(same.excluded && !same.pass);
    }

    #[test]
    fn samples_sorted_for_backward_runs() {
        let run = integrate(&SphSymState::new(0.0, 1.0, 0.3, 1), -4.0, &RotsymOptions::default()).unwrap();
        assert!(run.samples.windows(2).all(|w| w[0].t < w[1].t));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn eta_and_gamma_dynamics(f0 in 0.2f64..2.0, df0 in -0.8f64..0.8, d in 1usize..4) {
            let run = integrate(&SphSymState::new(0.0, f0, df0, d), 3.0, &RotsymOptions::default()).unwrap();
            let sign0 = (run.samples[0].eta - 1.0).signum();
            let dd = d as f64;
            let tmax = run.samples.last().unwrap().t;
            for s in &run.samples {
                prop_assert!(s.f > 0.0 && run.one_minus_abs_df(s.t).unwrap() > 0.0);
                if (s.eta - 1.0).abs() > 1e-9 {
                    prop_assert_eq!((s.eta - 1.0).signum(), sign0);
                }
                let h = 1e-5;
                if s.t - h < 0.0 || s.t + h > tmax || s.f < 0.05 { continue; }
                let (a, b) = (run.sample_at(s.t - h).unwrap(), run.sample_at(s.t + h).unwrap());
                // ηγ' = (d+1)η − d
                let gp = (b.gamma - a.gamma) / (2.0 * h);
                let want = (dd + 1.0) - dd / s.eta;
                prop_assert!((gp - want).abs() <= 1e-6 * (1.0 + want.abs()), "{} vs {}", gp, want);
                // η' = f'√(1−f'²)(d+1)(1−η)
                let ep = (b.eta - a.eta) / (2.0 * h);
                let w = (1.0 - s.df * s.df).sqrt();
                let want_e = s.df * w * (dd + 1.0) * (1.0 - s.eta);
                prop_assert!((ep - want_e).abs() <= 1e-6 * (1.0 + want_e.abs()));
                // profile equation, residual relative to the largest term
                let fpp = (b.df - a.df) / (2.0 * h);
                let r = rhs(&SphSymState::new(s.t, s.f, s.df, d)).unwrap();
                let scale = (1.0 - s.df * s.df) / s.f * ((dd + 1.0) * s.f * w + dd);
                prop_assert!((fpp - r).abs() <= 1e-7 * scale.max(1.0));
            }
        }
    }
}
