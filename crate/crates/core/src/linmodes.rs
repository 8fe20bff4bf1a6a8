//! The linearized equation `□φ + (d+1)φ = 0` on de Sitter space.
//!
//! In the cylinder chart `□φ = −⟨t⟩²φ_tt − (d+1)tφ_t + ⟨t⟩⁻²Δ_ω φ`, so a
//! spherical-harmonic component `ψ(t)Y_ℓ(ω)` obeys
//!
//! ```text
//! ⟨t⟩²ψ'' + (d+1)tψ' + λψ/⟨t⟩² = (d+1)ψ,   λ = ℓ(ℓ+d−1).
//! ```
//!
//! For `d = 1` the harmonics are Fourier modes and `λ = k²`; [`evolve_linear_1d`]
//! evolves whole fields on `S¹` either mode by mode or by collocation.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::dsgeom::jb;
use crate::error::{domain, Error, Result};
use crate::ode::{self, DenseOutput, OdeOptions, SolveSpec, Stop};
use crate::spectral::Circle;
use rustfft::num_complex::Complex64;

/// Laplace eigenvalue of degree-`ell` harmonics on `Sᵈ`: `ℓ(ℓ+d−1)`.
pub fn eigenvalue(ell: u32, d: usize) -> f64 {
    let l = ell as f64;
    l * (l + d as f64 - 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeState {
    pub ell: u32,
    pub d: usize,
    pub t: f64,
    pub psi: f64,
    pub dpsi: f64,
}

impl ModeState {
    pub fn new(ell: u32, d: usize, t: f64, psi: f64, dpsi: f64) -> Self {
        Self { ell, d, t, psi, dpsi }
    }

    pub fn lambda(&self) -> f64 {
        eigenvalue(self.ell, self.d)
    }

    fn validate(&self) -> Result<()> {
        if self.d < 1 {
            return domain("dimension d must be ≥ 1");
        }
        if !(self.t.is_finite() && self.psi.is_finite() && self.dpsi.is_finite()) {
            return domain("non-finite mode state");
        }
        Ok(())
    }
}

fn accel(lambda: f64, d: f64, t: f64, psi: f64, dpsi: f64) -> f64 {
    let w = 1.0 + t * t;
    ((d + 1.0) * psi - (d + 1.0) * t * dpsi - lambda * psi / w) / w
}

/// `ψ''` from the mode equation.
pub fn mode_rhs(m: &ModeState) -> f64 {
    accel(m.lambda(), m.d as f64, m.t, m.psi, m.dpsi)
}

/// Renormalized pair `(φ̆, φ̆')` with `φ̆ = ψ/⟨t⟩`, computed from `(ψ, ψ')` directly.
pub fn renormalized(t: f64, psi: f64, dpsi: f64) -> (f64, f64) {
    let j = jb(t);
    (psi / j, dpsi / j - t * psi / (j * j * j))
}

fn energy_lambda(lambda: f64, d: f64, t: f64, psi: f64, dpsi: f64) -> f64 {
    let (p, dp) = renormalized(t, psi, dpsi);
    let w = 1.0 + t * t;
    w * w * dp * dp + (lambda - d) * p * p
}

/// `⟨t⟩⁴φ̆'² + (λ−d)φ̆²`. Nonnegative for `ℓ ≥ 1`.
pub fn mode_energy(m: &ModeState) -> f64 {
    energy_lambda(m.lambda(), m.d as f64, m.t, m.psi, m.dpsi)
}

/// Exact `dE/dt = −2(d+1) t ⟨t⟩² φ̆'²` along solutions.
pub fn mode_energy_rate(m: &ModeState) -> f64 {
    let (_, dp) = renormalized(m.t, m.psi, m.dpsi);
    -2.0 * (m.d as f64 + 1.0) * m.t * (1.0 + m.t * m.t) * dp * dp
}

/// `⟨t⟩² ∂_t(ψ/⟨t⟩)`, which tends to zero for `ℓ ≥ 1`.
pub fn renormalized_flux(m: &ModeState) -> f64 {
    (1.0 + m.t * m.t) * renormalized(m.t, m.psi, m.dpsi).1
}

/// `ℓ = 0` solution `ψ = t·(Cp + ∫_{t_ref}^t C/(s²⟨s⟩^{d+1}) ds)`.
/// `t` and `t_ref` must be nonzero with the same sign.
pub fn ell0_exact(t: f64, c: f64, cp: f64, t_ref: f64, d: usize) -> Result<f64> {
    if !(t.is_finite() && t_ref.is_finite()) || t == 0.0 || t_ref == 0.0 || t.signum() != t_ref.signum() {
        return domain("ℓ = 0 quadrature interval must not contain t = 0");
    }
    if c == 0.0 || t == t_ref {
        return Ok(t * cp);
    }
    let p = d as f64 + 1.0;
    let g = |s: f64| 1.0 / (s * s * (1.0 + s * s).powf(0.5 * p));
    let (a, b, sign) = if t > t_ref { (t_ref, t, 1.0) } else { (t, t_ref, -1.0) };
    // Split geometrically so each panel sees a bounded dynamic range.
    let mut edges = vec![a];
    let ratio = 4.0;
    let mut x = a;
    loop {
        let next = if x > 0.0 { x * ratio } else { x / ratio };
        if (x > 0.0 && next >= b) || (x < 0.0 && next >= b) || next == x {
            break;
        }
        edges.push(next);
        x = next;
    }
    edges.push(b);
    let mut integral = 0.0;
    for w in edges.windows(2) {
        integral += quadrature::double_exponential::integrate(g, w[0], w[1], 1e-14).integral;
    }
    Ok(t * (cp + sign * c * integral))
}

/// `ψ̂₀' = C/(t²⟨t⟩^{d+1})`, the derivative of `ψ₀/t`.
pub fn ell0_hat_derivative(t: f64, c: f64, d: usize) -> f64 {
    c / (t * t * jb(t).powi(d as i32 + 1))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeSample {
    pub t: f64,
    pub psi: f64,
    pub dpsi: f64,
    pub energy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub nfev: usize,
    pub rtol: f64,
    pub atol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeOptions {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for ModeOptions {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-12 }
    }
}

impl ModeOptions {
    fn ode(&self) -> OdeOptions {
        OdeOptions { rtol: self.rtol, atol: self.atol, ..OdeOptions::default() }
    }
}

/// A mode trajectory; samples ascend in `t`.
#[derive(Debug, Clone)]
pub struct ModeRun {
    pub ell: u32,
    pub d: usize,
    pub t0: f64,
    pub samples: Vec<ModeSample>,
    pub stats: ModeStats,
    dense: DenseOutput,
}

impl ModeRun {
    pub fn t_end(&self) -> f64 {
        self.dense.t_last()
    }

    /// Dense state at any `t` inside the integrated span.
    pub fn state_at(&self, t: f64) -> Result<ModeState> {
        if !self.dense.covers(t) {
            return domain(format!("t = {t} outside the integrated span"));
        }
        let y = self.dense.eval(t);
        Ok(ModeState::new(self.ell, self.d, t, y[0], y[1]))
    }

    pub fn last(&self) -> ModeState {
        let s = if self.dense.t_last() >= self.t0 { self.samples.last() } else { self.samples.first() };
        let s = s.expect("a run always has its initial sample");
        ModeState::new(self.ell, self.d, s.t, s.psi, s.dpsi)
    }
}

fn solve_lambda(lambda: f64, d: f64, t0: f64, y0: [f64; 2], t_end: f64, o: &OdeOptions, spec: SolveSpec<'_>) -> Result<ode::OdeRun> {
    let run = ode::solve(
        move |t, y: &[f64], dy: &mut [f64]| {
            dy[0] = y[1];
            dy[1] = accel(lambda, d, t, y[0], y[1]);
        },
        t0,
        &y0,
        t_end,
        o,
        spec,
    );
    match run.stop {
        Stop::Reached => Ok(run),
        Stop::Event { t, .. } | Stop::StepFailure { t } | Stop::MaxSteps { t } | Stop::Halted { t } => Err(Error::StepFailure { t }),
    }
}

/// Integrates one mode from `m0.t` to `t_end` (either direction).
pub fn integrate_mode(m0: &ModeState, t_end: f64, opts: &ModeOptions) -> Result<ModeRun> {
    m0.validate()?;
    if !t_end.is_finite() {
        return domain("non-finite end time");
    }
    let (lambda, d) = (m0.lambda(), m0.d as f64);
    let spec = SolveSpec { keep_dense: true, ..SolveSpec::default() };
    let run = solve_lambda(lambda, d, m0.t, [m0.psi, m0.dpsi], t_end, &opts.ode(), spec)?;
    let dense = run.dense.expect("dense output requested");
    let mut samples: Vec<ModeSample> = std::iter::once(m0.t)
        .chain(dense.step_times().into_iter().filter(|&t| t != m0.t))
        .map(|t| {
            let y = dense.eval(t);
            ModeSample { t, psi: y[0], dpsi: y[1], energy: energy_lambda(lambda, d, t, y[0], y[1]) }
        })
        .collect();
    samples.sort_by(|a, b| a.t.total_cmp(&b.t));
    samples.dedup_by(|a, b| a.t == b.t);
    Ok(ModeRun {
        ell: m0.ell,
        d: m0.d,
        t0: m0.t,
        samples,
        stats: ModeStats { accepted: run.accepted, rejected: run.rejected, nfev: run.nfev, rtol: opts.rtol, atol: opts.atol },
        dense,
    })
}

// ---------------------------------------------------------------------------
// fields on S¹

/// `φ` and `∂_tφ` sampled on `n` equispaced angles at time `t` (`d = 1`).
#[derive(Debug, Clone)]
pub struct LinearField1D {
    pub t: f64,
    pub phi: Vec<f64>,
    pub dphi: Vec<f64>,
    circle: Circle,
}

impl LinearField1D {
    pub fn new(t: f64, phi: Vec<f64>, dphi: Vec<f64>) -> Result<Self> {
        if phi.len() != dphi.len() {
            return domain("φ and ∂_tφ have different lengths");
        }
        if phi.len() < 16 {
            return domain("need at least 16 grid points");
        }
        if !t.is_finite() || phi.iter().chain(&dphi).any(|x| !x.is_finite()) {
            return domain("non-finite field data");
        }
        let circle = Circle::new(phi.len())?;
        Ok(Self { t, phi, dphi, circle })
    }

    pub fn from_fn(n: usize, t: f64, f: impl Fn(f64) -> (f64, f64)) -> Result<Self> {
        let circle = Circle::new(n)?;
        let (phi, dphi) = circle.nodes().into_iter().map(f).unzip();
        Self::new(t, phi, dphi)
    }

    pub fn n(&self) -> usize {
        self.phi.len()
    }

    pub fn circle(&self) -> &Circle {
        &self.circle
    }

    pub fn nodes(&self) -> Vec<f64> {
        self.circle.nodes()
    }

    /// Fourier coefficients of `φ` and `∂_tφ`.
    pub fn spectrum(&self) -> (Vec<Complex64>, Vec<Complex64>) {
        (self.circle.forward(&self.phi), self.circle.forward(&self.dphi))
    }

    /// Relative Parseval mismatch between grid and coefficients.
    pub fn parseval_defect(&self) -> f64 {
        let (a, b) = self.spectrum();
        let n = self.n() as f64;
        let grid: f64 = self.phi.iter().chain(&self.dphi).map(|x| x * x).sum::<f64>() / n;
        let spec: f64 = a.iter().chain(&b).map(|z| z.norm_sqr()).sum();
        (grid - spec).abs() / grid.max(f64::MIN_POSITIVE)
    }

    pub fn sup_norm(&self) -> f64 {
        self.phi.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// `∫ φ Y dω` for a harmonic `Y`.
    pub fn project(&self, h: Harmonic) -> (f64, f64) {
        let y: Vec<f64> = self.nodes().into_iter().map(|w| h.eval(w)).collect();
        let ip = |v: &[f64]| self.circle.integrate(&v.iter().zip(&y).map(|(a, b)| a * b).collect::<Vec<_>>());
        (ip(&self.phi), ip(&self.dphi))
    }

    /// Band-limited value of `(φ, ∂_tφ)` at angle `omega`.
    pub fn value_at(&self, omega: f64) -> (f64, f64) {
        (self.circle.interpolate(&self.phi, omega), self.circle.interpolate(&self.dphi, omega))
    }

    /// `∫ ⟨t⟩⁴φ̆_t² + φ̆_ω² − φ̆² dω` with `φ̆ = φ/⟨t⟩`.
    pub fn energy(&self) -> f64 {
        let t = self.t;
        let w = 1.0 + t * t;
        let dw = self.circle.derivative(&self.phi, 1);
        let dens: Vec<f64> = (0..self.n())
            .map(|j| {
                let (p, dp) = renormalized(t, self.phi[j], self.dphi[j]);
                let pw = dw[j] / jb(t);
                w * w * dp * dp + pw * pw - p * p
            })
            .collect();
        self.circle.integrate(&dens)
    }
}

/// Real Fourier harmonic on `S¹`: `m > 0` is `cos(mω)`, `m < 0` is `sin(|m|ω)`, `m = 0` is `1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Harmonic {
    pub ell: u32,
    pub m: i32,
}

impl Harmonic {
    pub fn cos(ell: u32) -> Self {
        Self { ell, m: ell as i32 }
    }

    pub fn sin(ell: u32) -> Self {
        Self { ell, m: -(ell as i32) }
    }

    /// Both harmonics of degree `ell` (one when `ell = 0`).
    pub fn degree(ell: u32) -> Vec<Self> {
        if ell == 0 {
            vec![Self { ell: 0, m: 0 }]
        } else {
            vec![Self::cos(ell), Self::sin(ell)]
        }
    }

    pub fn eval(&self, omega: f64) -> f64 {
        let l = self.ell as f64;
        match self.m {
            0 => 1.0,
            m if m > 0 => (l * omega).cos(),
            _ => (l * omega).sin(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.m.unsigned_abs() != self.ell && !(self.ell == 0 && self.m == 0) {
            return domain(format!("on S¹ a degree-{} harmonic has m = ±{}", self.ell, self.ell));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinearMethod {
    /// Exact diagonalization into Fourier modes, each integrated as an ODE.
    Spectral,
    /// Method of lines with Fourier differentiation in `ω`.
    Collocation,
}

#[derive(Debug, Clone)]
pub struct LinearTrajectory {
    /// Ascending in `t`; the first snapshot is the initial field.
    pub snapshots: Vec<LinearField1D>,
}

impl LinearTrajectory {
    pub fn last(&self) -> &LinearField1D {
        self.snapshots.last().expect("trajectory holds the initial field")
    }
}

/// Evolves `field0` forward to every time in `times` (ascending, within
/// `(field0.t, ∞)`); `t_end` is always appended.
pub fn evolve_linear_1d(field0: &LinearField1D, t_end: f64, times: &[f64], method: LinearMethod, opts: &ModeOptions) -> Result<LinearTrajectory> {
    let t0 = field0.t;
    if !(t_end.is_finite() && t_end > t0) {
        return domain("evolution runs forward to a finite t_end > t0");
    }
    let mut obs: Vec<f64> = times.iter().copied().filter(|&t| t > t0 && t < t_end).collect();
    if obs.windows(2).any(|w| w[1] <= w[0]) {
        return domain("snapshot times must be strictly increasing");
    }
    obs.push(t_end);
    let snaps = match method {
        LinearMethod::Spectral => spectral_evolve(field0, &obs, opts)?,
        LinearMethod::Collocation => collocation_evolve(field0, &obs, opts)?,
    };
    let mut snapshots = vec![field0.clone()];
    snapshots.extend(snaps);
    Ok(LinearTrajectory { snapshots })
}

fn spectral_evolve(f0: &LinearField1D, obs: &[f64], opts: &ModeOptions) -> Result<Vec<LinearField1D>> {
    let n = f0.n();
    let circle = f0.circle.clone();
    let (c0, c1) = f0.spectrum();
    let o = OdeOptions { rtol: opts.rtol, atol: opts.atol, ..OdeOptions::default() };
    let mut phi_hat = vec![vec![Complex64::new(0.0, 0.0); n]; obs.len()];
    let mut dphi_hat = phi_hat.clone();
    // Fundamental pair per |k|: data (1,0) and (0,1) at t0.
    for k in 0..=n / 2 {
        let lambda = (k * k) as f64;
        let mut basis = Vec::with_capacity(2);
        for y0 in [[1.0, 0.0], [0.0, 1.0]] {
            let spec = SolveSpec { observe_at: obs.to_vec(), ..SolveSpec::default() };
            let run = solve_lambda(lambda, 1.0, f0.t, y0, *obs.last().expect("nonempty"), &o, spec)?;
            basis.push(run.observed);
        }
        let slots: Vec<usize> = if k == 0 || k == n / 2 { vec![k] } else { vec![k, n - k] };
        for (i, _) in obs.iter().enumerate() {
            let (u, v) = (&basis[0][i].1, &basis[1][i].1);
            for &j in &slots {
                phi_hat[i][j] = c0[j] * u[0] + c1[j] * v[0];
                dphi_hat[i][j] = c0[j] * u[1] + c1[j] * v[1];
            }
        }
    }
    obs.iter()
        .enumerate()
        .map(|(i, &t)| Ok(LinearField1D { t, phi: circle.inverse(&phi_hat[i]), dphi: circle.inverse(&dphi_hat[i]), circle: circle.clone() }))
        .collect()
}

fn collocation_evolve(f0: &LinearField1D, obs: &[f64], opts: &ModeOptions) -> Result<Vec<LinearField1D>> {
    let n = f0.n();
    let circle = f0.circle.clone();
    let mut y0 = f0.phi.clone();
    y0.extend_from_slice(&f0.dphi);
    let o = OdeOptions { rtol: opts.rtol, atol: opts.atol, ..OdeOptions::default() };
    let c2 = circle.clone();
    let spec = SolveSpec { observe_at: obs.to_vec(), ..SolveSpec::default() };
    let run = ode::solve(
        move |t, y: &[f64], dy: &mut [f64]| {
            let w = 1.0 + t * t;
            let lap = c2.derivative(&y[..n], 2);
            for j in 0..n {
                dy[j] = y[n + j];
                dy[n + j] = (2.0 * y[j] - 2.0 * t * y[n + j] + lap[j] / w) / w;
            }
        },
        f0.t,
        &y0,
        *obs.last().expect("nonempty"),
        &o,
        spec,
    );
    if let Stop::StepFailure { t } | Stop::MaxSteps { t } | Stop::Halted { t } | Stop::Event { t, .. } = run.stop {
        return Err(Error::StepFailure { t });
    }
    Ok(run.observed.into_iter().map(|(t, y)| LinearField1D { t, phi: y[..n].to_vec(), dphi: y[n..].to_vec(), circle: circle.clone() }).collect())
}

// ---------------------------------------------------------------------------
// multi-bump data

/// Angular radius `π/2 − arctan t₀` swept by light rays on `[t₀, ∞)`.
pub fn dependence_radius(t0: f64) -> f64 {
    std::f64::consts::FRAC_PI_2 - t0.atan()
}

fn smooth_step(x: f64) -> f64 {
    // 0 for x ≤ 0, 1 for x ≥ 1, C^∞ in between.
    let h = |s: f64| if s > 0.0 { (-1.0 / s).exp() } else { 0.0 };
    let (a, b) = (h(x), h(1.0 - x));
    if a + b == 0.0 {
        0.0
    } else {
        a / (a + b)
    }
}

fn circular_distance(a: f64, b: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let r = (a - b).rem_euclid(tau);
    r.min(tau - r)
}

/// Plateau bump: `1` within `plateau` of the center, `0` beyond `2·plateau`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bump {
    pub center: f64,
    pub plateau: f64,
}

impl Bump {
    pub fn support(&self) -> f64 {
        2.0 * self.plateau
    }

    pub fn eval(&self, omega: f64) -> f64 {
        let r = circular_distance(omega, self.center);
        smooth_step((self.support() - r) / self.plateau)
    }
}

#[derive(Debug, Clone)]
pub struct BumpData {
    pub field: LinearField1D,
    pub bumps: Vec<Bump>,
    /// Amplitudes after the constraint solve; `eps[0]` is as given.
    pub eps: Vec<f64>,
    pub forbidden: Vec<Harmonic>,
    /// Light-ray radius from `t0`.
    pub rho0: f64,
    /// Largest `|∫φY|`, `|∫∂_tφ Y|` over the forbidden list.
    pub constraint_residual: f64,
}

/// Bumps of plateau radius `1.5·ρ₀` at `points`, amplitude `ε_i`, with data
/// `φ = t₀·Σε_i b_i`, `∂_tφ = Σε_i b_i` at `t = t₀`.
///
/// When harmonics are forbidden, `eps[0]` is held fixed and the remaining
/// amplitudes move by the least-norm correction that annihilates every
/// forbidden projection.
pub fn multibump_data(n: usize, t0: f64, points: &[f64], eps: &[f64], forbidden: &[Harmonic]) -> Result<BumpData> {
    if points.is_empty() || points.len() != eps.len() {
        return domain("need one amplitude per bump, at least one bump");
    }
    if !(t0.is_finite() && t0 > 0.0) {
        return domain("t0 must be positive");
    }
    for h in forbidden {
        h.validate()?;
    }
    let rho0 = dependence_radius(t0);
    let plateau = 1.5 * rho0;
    let bumps: Vec<Bump> = points.iter().map(|&c| Bump { center: c.rem_euclid(std::f64::consts::TAU), plateau }).collect();
    for (i, a) in bumps.iter().enumerate() {
        for b in &bumps[i + 1..] {
            if circular_distance(a.center, b.center) < 2.0 * a.support() {
                return domain(format!("bumps at {} and {} closer than twice the support {}", a.center, b.center, a.support()));
            }
        }
    }
    let circle = Circle::new(n)?;
    let nodes = circle.nodes();
    let profiles: Vec<Vec<f64>> = bumps.iter().map(|b| nodes.iter().map(|&w| b.eval(w)).collect()).collect();
    let ip = |v: &[f64], h: &Harmonic| circle.integrate(&v.iter().zip(&nodes).map(|(x, &w)| x * h.eval(w)).collect::<Vec<_>>());
    let mut amp = eps.to_vec();
    if !forbidden.is_empty() {
        let k = bumps.len();
        let a = DMatrix::from_fn(forbidden.len(), k, |r, i| ip(&profiles[i], &forbidden[r]));
        if k == 1 {
            if a.column(0).amax() * amp[0].abs() > 1e-12 {
                return Err(Error::Infeasible("a single bump cannot be orthogonal to the forbidden harmonics".into()));
            }
        } else {
            let rest = a.columns(1, k - 1).into_owned();
            let e_rest = DVector::from_column_slice(&amp[1..]);
            let target = -(a.column(0) * amp[0]) - &rest * &e_rest;
            let corr = rest.svd(true, true).solve(&target, 1e-12).map_err(|e| Error::Infeasible(e.to_string()))?;
            for (i, c) in corr.iter().enumerate() {
                amp[i + 1] += c;
            }
        }
    }
    let base: Vec<f64> = (0..n).map(|j| profiles.iter().zip(&amp).map(|(p, e)| e * p[j]).sum()).collect();
    let field = LinearField1D::new(t0, base.iter().map(|x| t0 * x).collect(), base.clone())?;
    let constraint_residual = forbidden.iter().fold(0.0f64, |m, h| {
        let (p, dp) = field.project(*h);
        m.max(p.abs()).max(dp.abs())
    });
    if constraint_residual > 1e-10 {
        return Err(Error::Infeasible(format!("forbidden projections remain at {constraint_residual:e}")));
    }
    Ok(BumpData { field, bumps, eps: amp, forbidden: forbidden.to_vec(), rho0, constraint_residual })
}

// ---------------------------------------------------------------------------
// horizon scenario

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HorizonSample {
    pub t: f64,
    pub sup_norm: f64,
    /// `‖φ‖∞ / (max|ε|·t)`.
    pub growth_ratio: f64,
    /// Largest `|φ(t, ω_i) − ε_i t|` over bump centers.
    pub ray_defect: f64,
    pub max_forbidden_projection: f64,
    /// `φ` and `∂_tφ` on the first bump's center ray.
    pub ray_phi: f64,
    pub ray_dphi: f64,
    pub energy: f64,
}

#[derive(Debug, Clone)]
pub struct HorizonReport {
    pub t0: f64,
    pub delta0: f64,
    pub data: BumpData,
    pub samples: Vec<HorizonSample>,
}

/// `k` bumps at pairwise separation `≥ δ₀` with `t₀ = 8/δ₀`; degree-1
/// harmonics are forbidden when `k ≥ 3`.
pub fn horizon_scenario(k: usize, t0: f64, n: usize, times: &[f64], opts: &ModeOptions) -> Result<HorizonReport> {
    if k == 0 {
        return domain("need at least one bump");
    }
    let delta0 = 8.0 / t0;
    let tau = std::f64::consts::TAU;
    if (k as f64) * delta0 > tau {
        return domain(format!("{k} bumps do not fit at separation {delta0}"));
    }
    // Uneven spacing so the constraint solve is not trivially satisfied.
    let spacing = tau / k as f64;
    let points: Vec<f64> = (0..k).map(|i| i as f64 * spacing + if i % 2 == 1 { 0.2 * (spacing - delta0) } else { 0.0 }).collect();
    let forbidden = if k >= 3 { Harmonic::degree(1) } else { Vec::new() };
    let data = multibump_data(n, t0, &points, &vec![1.0; k], &forbidden)?;
    let t_end = times.iter().copied().fold(t0, f64::max);
    if t_end <= t0 {
        return domain("need at least one time after t0");
    }
    let traj = evolve_linear_1d(&data.field, t_end, times, LinearMethod::Spectral, opts)?;
    let emax = data.eps.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    let samples = traj
        .snapshots
        .iter()
        .map(|f| {
            let ray_defect = data.bumps.iter().zip(&data.eps).fold(0.0f64, |m, (b, e)| m.max((f.value_at(b.center).0 - e * f.t).abs()));
            let proj = data.forbidden.iter().fold(0.0f64, |m, h| {
                let (p, dp) = f.project(*h);
                m.max(p.abs()).max(dp.abs())
            });
            let (ray_phi, ray_dphi) = f.value_at(data.bumps[0].center);
            HorizonSample {
                t: f.t,
                sup_norm: f.sup_norm(),
                growth_ratio: f.sup_norm() / (emax * f.t),
                ray_defect,
                max_forbidden_projection: proj,
                ray_phi,
                ray_dphi,
                energy: f.energy(),
            }
        })
        .collect();
    Ok(HorizonReport { t0, delta0, data, samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn eigenvalues() {
        assert_eq!(eigenvalue(0, 3), 0.0);
        assert_eq!(eigenvalue(1, 2), 2.0);
        assert_eq!(eigenvalue(2, 1), 4.0);
        for d in 1..6 {
            assert_eq!(eigenvalue(1, d), d as f64);
        }
    }

    #[test]
    fn exact_solutions_have_zero_residual() {
        for d in 1..5 {
            for &t in &[-3.0, -0.2, 0.0, 0.7, 5.0, 40.0] {
                let j = jb(t);
                // ψ = t, ℓ = 0
                let r0 = mode_rhs(&ModeState::new(0, d, t, t, 1.0));
                assert!(r0.abs() < 1e-14, "d={d} t={t}: {r0}");
                // ψ = ⟨t⟩, ℓ = 1
                let r1 = mode_rhs(&ModeState::new(1, d, t, j, t / j)) - 1.0 / (j * j * j);
                assert!(r1.abs() < 1e-12, "d={d} t={t}: {r1}");
            }
            assert_eq!(mode_rhs(&ModeState::new(0, d, 0.0, 1.0, 0.0)), d as f64 + 1.0);
        }
    }

    #[test]
    fn d1_closed_form_modes() {
        // ψ_k = k cos(k atan t) + t sin(k atan t) solves the k-th Fourier mode.
        for k in 0..6u32 {
            let kf = k as f64;
            let psi = |t: f64| kf * (kf * t.atan()).cos() + t * (kf * t.atan()).sin();
            let h = 1e-4;
            for &t in &[-2.0, 0.3, 1.7, 9.0] {
                let d1 = (psi(t + h) - psi(t - h)) / (2.0 * h);
                let d2 = (psi(t + h) - 2.0 * psi(t) + psi(t - h)) / (h * h);
                let r = d2 - mode_rhs(&ModeState::new(k, 1, t, psi(t), d1));
                assert!(r.abs() < 1e-5 * (1.0 + psi(t).abs()), "k={k} t={t}: {r}");
            }
        }
    }

    fn ell0_closed(u: f64, d: usize) -> f64 {
        let j = jb(u);
        match d {
            1 => -u.atan() - 1.0 / u,
            2 => -(2.0 * u * u + 1.0) / (u * j),
            3 => (-3.0 * u * u - 3.0 * u * (u * u + 1.0) * u.atan() - 2.0) / (2.0 * u * (u * u + 1.0)),
            _ => unreachable!(),
        }
    }

    #[test]
    fn ell0_matches_closed_form_antiderivatives() {
        for d in 1..=3 {
            for &(t, t_ref) in &[(2.0, 1.0), (50.0, 1.0), (0.05, 3.0), (-4.0, -0.5)] {
                let (c, cp) = (1.3, -0.4);
                let want = t * (cp + c * (ell0_closed(t, d) - ell0_closed(t_ref, d)));
                let got = ell0_exact(t, c, cp, t_ref, d).unwrap();
                assert!((got - want).abs() < 1e-11 * (1.0 + want.abs()), "d={d} t={t}: {got} vs {want}");
            }
        }
        assert_eq!(ell0_exact(7.0, 0.0, 2.5, 1.0, 2).unwrap(), 17.5);
        assert_relative_eq!(ell0_hat_derivative(1.0, 1.0, 2), 1.0 / 2f64.powf(1.5), max_relative = 1e-15);
        assert!(ell0_exact(1.0, 1.0, 0.0, -1.0, 1).is_err());
        assert!(ell0_exact(0.0, 1.0, 0.0, 1.0, 1).is_err());
    }

    #[test]
    fn ell0_solves_the_mode_equation() {
        let (c, cp, t_ref, d) = (0.8, 0.3, 1.0, 2);
        for i in 0..=20 {
            let t = 1.0 + 49.0 * i as f64 / 20.0;
            let psi = ell0_exact(t, c, cp, t_ref, d).unwrap();
            let hat = psi / t;
            let dpsi = hat + t * ell0_hat_derivative(t, c, d);
            // ψ'' = 2ψ̂' + tψ̂''; ψ̂'' by differentiating C s⁻²⟨s⟩^{−d−1}.
            let dd_hat = c * (-2.0 / t.powi(3) * jb(t).powi(-(d as i32) - 1) - (d as f64 + 1.0) / t * jb(t).powi(-(d as i32) - 3));
            let ddpsi = 2.0 * ell0_hat_derivative(t, c, d) + t * dd_hat;
            let r = ddpsi - mode_rhs(&ModeState::new(0, d, t, psi, dpsi));
            assert!(r.abs() < 1e-9, "t={t}: {r}");
        }
    }

    #[test]
    fn integrated_modes_track_exact_solutions() {
        let o = ModeOptions::default();
        let run = integrate_mode(&ModeState::new(0, 3, 0.0, 0.0, 1.0), 100.0, &o).unwrap();
        for s in &run.samples[1..] {
            assert!((s.psi - s.t).abs() <= 1e-9 * s.t.abs().max(1.0));
        }
        let run = integrate_mode(&ModeState::new(1, 2, 0.0, 1.0, 0.0), 100.0, &o).unwrap();
        for s in &run.samples {
            assert!((s.psi - jb(s.t)).abs() <= 1e-9 * jb(s.t));
            assert!(s.energy.abs() < 1e-12 * jb(s.t).powi(2));
        }
        let back = integrate_mode(&ModeState::new(1, 2, 0.0, 1.0, 0.0), -30.0, &o).unwrap();
        assert!((back.last().psi - jb(-30.0)).abs() < 1e-9 * jb(30.0));
    }

    #[test]
    fn high_mode_renormalized_limit_exists() {
        let run = integrate_mode(&ModeState::new(5, 2, 0.0, 0.7, -1.1), 2000.0, &ModeOptions::default()).unwrap();
        let q = |t: f64| {
            let m = run.state_at(t).unwrap();
            m.psi / jb(t)
        };
        let steps: Vec<f64> = [125.0, 250.0, 500.0, 1000.0].iter().map(|&t| (q(2.0 * t) - q(t)).abs()).collect();
        for w in steps.windows(2) {
            // ℓ ≥ 2 carries a t⁻² correction: doubling t shrinks increments by 4.
            assert!((w[0] / w[1] - 4.0).abs() < 0.1, "{steps:?}");
        }
        assert!(q(2000.0).is_finite() && q(2000.0).abs() > 1e-6);
    }

    #[test]
    fn translation_mode_tail() {
        // ℓ = 1: ψ/⟨t⟩ = A + B⟨t⟩^{−d−2} + …
        for d in 1..=3usize {
            let run = integrate_mode(&ModeState::new(1, d, 0.0, 0.4, 0.9), 400.0, &ModeOptions { rtol: 1e-13, atol: 1e-15 }).unwrap();
            let q = |t: f64| {
                let m = run.state_at(t).unwrap();
                m.psi / jb(t)
            };
            let a = (q(20.0) - q(10.0)).abs();
            let b = (q(40.0) - q(20.0)).abs();
            let want = 2f64.powi(d as i32 + 2);
            assert!((a / b / want - 1.0).abs() < 0.05, "d={d}: {}", a / b);
        }
    }

    #[test]
    fn energy_monotone_and_flux_decays() {
        let run = integrate_mode(&ModeState::new(2, 2, 0.1, 0.4, 1.3), 1000.0, &ModeOptions::default()).unwrap();
        let e: Vec<f64> = run.samples.iter().filter(|s| s.t <= 100.0).map(|s| s.energy).collect();
        for w in e.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-14);
        }
        let kin = |t: f64| renormalized_flux(&run.state_at(t).unwrap()).powi(2);
        assert!(kin(1000.0) <= 1e-3 * kin(0.1), "{} vs {}", kin(1000.0), kin(0.1));
        // The flux itself decays like 1/t.
        let f = |t: f64| renormalized_flux(&run.state_at(t).unwrap()) * t;
        assert!((f(1000.0) / f(500.0) - 1.0).abs() < 1e-2);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn energy_rate_identity(ell in 1u32..6, d in 1usize..4, psi0 in -2.0f64..2.0, dpsi0 in -2.0f64..2.0) {
            let run = integrate_mode(&ModeState::new(ell, d, 0.0, psi0, dpsi0), 30.0, &ModeOptions { rtol: 1e-12, atol: 1e-14 }).unwrap();
            let h = 1e-3;
            for &t in &[0.5, 2.0, 7.0, 20.0] {
                let e = |s: f64| mode_energy(&run.state_at(s).unwrap());
                let fd = (e(t - 2.0 * h) - 8.0 * e(t - h) + 8.0 * e(t + h) - e(t + 2.0 * h)) / (12.0 * h);
                let exact = mode_energy_rate(&run.state_at(t).unwrap());
                let scale = 1.0 + e(t).abs() + exact.abs();
                prop_assert!((fd - exact).abs() <= 1e-6 * scale, "t={} fd={} exact={}", t, fd, exact);
                prop_assert!(exact <= 0.0);
            }
        }
    }

    #[test]
    fn spectral_single_mode_reproduces_integrate_mode() {
        let f0 = LinearField1D::from_fn(32, 0.5, |w| (0.3 * (3.0 * w).cos(), -0.2 * (3.0 * w).cos())).unwrap();
        assert!(f0.parseval_defect() < 1e-12);
        let traj = evolve_linear_1d(&f0, 20.0, &[5.0], LinearMethod::Spectral, &ModeOptions::default()).unwrap();
        let run = integrate_mode(&ModeState::new(3, 1, 0.5, 0.3, -0.2), 20.0, &ModeOptions::default()).unwrap();
        for snap in &traj.snapshots[1..] {
            let m = run.state_at(snap.t).unwrap();
            for (j, w) in snap.nodes().iter().enumerate() {
                assert!((snap.phi[j] - m.psi * (3.0 * w).cos()).abs() < 1e-9);
                assert!((snap.dphi[j] - m.dpsi * (3.0 * w).cos()).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn spectral_and_collocation_agree() {
        let f0 = LinearField1D::from_fn(64, 0.0, |w| ((w.sin() + 0.5 * (2.0 * w).cos()).exp(), (3.0 * w).sin())).unwrap();
        let o = ModeOptions { rtol: 1e-12, atol: 1e-14 };
        let a = evolve_linear_1d(&f0, 20.0, &[2.0, 8.0], LinearMethod::Spectral, &o).unwrap();
        let b = evolve_linear_1d(&f0, 20.0, &[2.0, 8.0], LinearMethod::Collocation, &o).unwrap();
        for (x, y) in a.snapshots.iter().zip(&b.snapshots) {
            assert_eq!(x.t, y.t);
            let scale = x.sup_norm().max(1.0);
            let diff = x.phi.iter().zip(&y.phi).fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
            assert!(diff <= 1e-8 * scale, "t={} diff={diff}", x.t);
        }
    }

    #[test]
    fn dependence_radius_fits_the_separation() {
        for &delta0 in &[0.05, 0.3, 1.0, 2.0] {
            let t0: f64 = 8.0 / delta0;
            assert!(dependence_radius(t0) < delta0 / 4.0);
            assert_relative_eq!(dependence_radius(t0), (1.0 / t0).atan(), max_relative = 1e-12);
        }
    }

    #[test]
    fn single_bump_is_supported_in_one_cap() {
        let data = multibump_data(256, 10.0, &[1.0], &[1.0], &[]).unwrap();
        let b = data.bumps[0];
        for (j, w) in data.field.nodes().iter().enumerate() {
            let r = circular_distance(*w, 1.0);
            if r >= b.support() {
                assert_eq!(data.field.phi[j], 0.0);
            }
            if r <= b.plateau {
                assert_eq!(data.field.phi[j], 10.0);
                assert_eq!(data.field.dphi[j], 1.0);
            }
        }
        assert!(multibump_data(256, 10.0, &[1.0], &[1.0], &Harmonic::degree(1)).is_err());
        assert!(multibump_data(256, 10.0, &[1.0, 1.1], &[1.0, 1.0], &[]).is_err());
    }

    #[test]
    fn forbidden_harmonics_vanish_under_independent_quadrature() {
        let t0 = 4.0;
        let data = multibump_data(4096, t0, &[0.3, 2.0, 4.4], &[1.0, 0.0, 0.0], &Harmonic::degree(1)).unwrap();
        assert_eq!(data.eps[0], 1.0);
        assert!(data.constraint_residual <= 1e-10);
        for h in Harmonic::degree(1) {
            let mut total = 0.0;
            for (b, e) in data.bumps.iter().zip(&data.eps) {
                let g = |w: f64| b.eval(w) * h.eval(w);
                let lo = b.center - b.support();
                let hi = b.center + b.support();
                total += e * quadrature::double_exponential::integrate(g, lo, hi, 1e-14).integral;
            }
            assert!(total.abs() <= 1e-10, "{h:?}: {total:e}");
        }
    }

    #[test]
    fn horizon_growth_and_domain_of_dependence() {
        let o = ModeOptions::default();
        let rep = horizon_scenario(3, 16.0, 1024, &[20.0, 30.0, 50.0], &o).unwrap();
        let last = rep.samples.last().unwrap();
        assert_eq!(last.t, 50.0);
        assert!(last.growth_ratio >= 0.9);
        assert!(rep.samples.iter().all(|s| s.max_forbidden_projection <= 1e-8));
        // The ray value converges spectrally in N.
        let fine = horizon_scenario(3, 16.0, 4096, &[50.0], &o).unwrap();
        let fl = fine.samples.last().unwrap();
        assert!(fl.ray_defect <= 1e-8 * fl.t && fl.ray_defect < last.ray_defect, "{}", fl.ray_defect);

        // Perturb far from the first bump and compare on its center ray.
        let b0 = rep.data.bumps[0];
        let far = Bump { center: b0.center + std::f64::consts::PI, plateau: 0.6 };
        let base = &rep.data.field;
        let pert = LinearField1D::new(
            base.t,
            base.phi.iter().zip(base.nodes()).map(|(p, w)| p + 0.5 * far.eval(w)).collect(),
            base.dphi.iter().zip(base.nodes()).map(|(p, w)| p - 0.3 * far.eval(w)).collect(),
        )
        .unwrap();
        let a = evolve_linear_1d(base, 50.0, &[], LinearMethod::Spectral, &o).unwrap();
        let b = evolve_linear_1d(&pert, 50.0, &[], LinearMethod::Spectral, &o).unwrap();
        let (pa, _) = a.last().value_at(b0.center);
        let (pb, _) = b.last().value_at(b0.center);
        assert!((pa - pb).abs() <= 1e-10, "{:e}", (pa - pb).abs());
    }
}
