//! Nonlinear evolution of normal graphs `X = (1−φ)x̄` over dS₂.
//!
//! Method of lines: `φ(t, ·)` lives on an `N`-point Fourier grid of the
//! circle, spatial derivatives are spectral, and `∂_t²φ` is recovered per node
//! from `H = 2` using that `H` is affine in `∂_t²φ`. Time stepping is the
//! adaptive Dormand–Prince integrator of [`crate::ode`].
//!
//! Diagnostics read the inverse-Gauss-map field off the graph: at each node
//! the shape operator `W` (identity on dS) gives `A = W⁻¹`, and `φ_IGM = A − I`
//! is expressed in the dS frame at the Gauss image `ν = −N`.

use std::cell::RefCell;

use nalgebra::Matrix2;
use serde::Serialize;

use crate::dsgeom::{eta as frame_eta, jb, mink};
use crate::error::{domain, Error, Result};
use crate::igm::{frame_covariant_derivative_1d, mainsystem_pointwise, metric_from_phi, FramePhi};
use crate::linmodes::{evolve_linear_1d, LinearField1D, LinearMethod, ModeOptions};
use crate::meanc::{normal_graph_geometry, normal_graph_mc_s, solve_for_htt, translated_height_s, Jet2};
use crate::ode::{self, OdeOptions, SolveSpec, Stop};
use crate::spectral::Circle;
use crate::stress::weighted_energy;

const TAU: f64 = std::f64::consts::TAU;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvolveOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Smallest admissible `|∂H/∂(∂_t²φ)|`.
    pub kappa_min: f64,
    /// 2/3-rule filtering of the spatial jets and of `∂_t²φ`.
    pub dealias: bool,
    /// Relative time offsets `δ/⟨t⟩` of the residual probes, coarse to fine.
    pub probe_steps: [f64; 2],
    pub max_steps: usize,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-12, kappa_min: 0.1, dealias: true, probe_steps: [1e-3, 5e-4], max_steps: 2_000_000 }
    }
}

/// `φ` and `∂_tφ` on the uniform grid `ω_j = 2πj/N` at time `t`.
#[derive(Debug, Clone)]
pub struct GraphField1D {
    pub t: f64,
    pub phi: Vec<f64>,
    pub dphi: Vec<f64>,
    circle: Circle,
}

impl PartialEq for GraphField1D {
    fn eq(&self, o: &Self) -> bool {
        self.t == o.t && self.phi == o.phi && self.dphi == o.dphi
    }
}

impl GraphField1D {
    /// `N` must be a power of two, at least 16.
    pub fn new(t: f64, phi: Vec<f64>, dphi: Vec<f64>) -> Result<Self> {
        let n = phi.len();
        if n < 16 || dphi.len() != n {
            return domain("grid needs N ≥ 16 points with matching φ and ∂_tφ");
        }
        if !t.is_finite() || phi.iter().chain(&dphi).any(|v| !v.is_finite()) {
            return domain("graph data must be finite");
        }
        Ok(Self { t, phi, dphi, circle: Circle::new(n)? })
    }

    /// `f(ω) = (φ, ∂_tφ)`.
    pub fn from_fn(n: usize, t: f64, f: impl Fn(f64) -> (f64, f64)) -> Result<Self> {
        let (phi, dphi) = (0..n).map(|j| f(TAU * j as f64 / n as f64)).unzip();
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

    pub fn sup_norm(&self) -> f64 {
        self.phi.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// The same data read as a solution candidate of the linearized equation.
    pub fn to_linear(&self) -> Result<LinearField1D> {
        LinearField1D::new(self.t, self.phi.clone(), self.dphi.clone())
    }

    fn with_state(&self, t: f64, y: &[f64]) -> Self {
        let n = self.n();
        Self { t, phi: y[..n].to_vec(), dphi: y[n..].to_vec(), circle: self.circle.clone() }
    }

    /// `ũ = X⁰ − |X⃗| = (1−φ)(t − ⟨t⟩)` along each ray.
    pub fn u_tilde(&self) -> Vec<f64> {
        let s = self.t - jb(self.t);
        self.phi.iter().map(|p| (1.0 - p) * s).collect()
    }

    /// `∂_tũ = −∂_tφ(t − ⟨t⟩) + (1−φ)(1 − t/⟨t⟩)`.
    pub fn u_tilde_rate(&self) -> Vec<f64> {
        let (t, w) = (self.t, jb(self.t));
        self.phi.iter().zip(&self.dphi).map(|(p, dp)| -dp * (t - w) + (1.0 - p) * (1.0 - t / w)).collect()
    }

    /// Ambient points `(1−φ)(t, ⟨t⟩cos ω, ⟨t⟩sin ω)`.
    pub fn ambient_points(&self) -> Vec<[f64; 3]> {
        let (t, w) = (self.t, jb(self.t));
        self.nodes()
            .iter()
            .zip(&self.phi)
            .map(|(om, p)| {
                let q = 1.0 - p;
                [q * t, q * w * om.cos(), q * w * om.sin()]
            })
            .collect()
    }
}

/// Spectral jets of one slice.
struct SliceJets {
    phi: Vec<f64>,
    phi_w: Vec<f64>,
    phi_ww: Vec<f64>,
    dphi: Vec<f64>,
    dphi_w: Vec<f64>,
}

fn slice_jets(s: &GraphField1D, dealias: bool) -> SliceJets {
    let (phi, phi_w, phi_ww) = s.circle.jets(&s.phi, dealias);
    let (dphi, dphi_w, _) = s.circle.jets(&s.dphi, dealias);
    SliceJets { phi, phi_w, phi_ww, dphi, dphi_w }
}

impl SliceJets {
    fn jet(&self, j: usize, htt: f64) -> Jet2 {
        Jet2 { value: self.phi[j], grad: vec![self.dphi[j], self.phi_w[j]], hess: vec![vec![htt, self.dphi_w[j]], vec![self.dphi_w[j], self.phi_ww[j]]] }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RhsEval {
    pub htt: Vec<f64>,
    /// Smallest `|∂H/∂(∂_t²φ)|` over the grid.
    pub kappa_min: f64,
}

/// `∂_t²φ` on the grid from `H(φ) = 2`.
pub fn rhs_field(state: &GraphField1D, opts: &EvolveOptions) -> Result<RhsEval> {
    let jets = slice_jets(state, opts.dealias);
    let t = state.t;
    let mut htt = vec![0.0; state.n()];
    let mut kmin = f64::INFINITY;
    for (j, out) in htt.iter_mut().enumerate() {
        let v = jets.phi[j];
        if !(v < 1.0) {
            return Err(Error::GuardBreach(format!("normal height {v} ≥ 1 at node {j}, t = {t}")));
        }
        let grad = [jets.dphi[j], jets.phi_w[j]];
        let hess = [vec![0.0, jets.dphi_w[j]], vec![jets.dphi_w[j], jets.phi_ww[j]]];
        let (h, kappa) = solve_for_htt(&t, &v, &grad, &hess, 2.0).map_err(|e| match e {
            Error::Domain(m) => Error::GuardBreach(format!("graph degenerates at node {j}, t = {t}: {m}")),
            other => other,
        })?;
        if kappa.abs() < opts.kappa_min {
            return Err(Error::GuardBreach(format!("|∂H/∂φ_tt| = {} below {} at node {j}, t = {t}", kappa.abs(), opts.kappa_min)));
        }
        kmin = kmin.min(kappa.abs());
        *out = h;
    }
    if opts.dealias {
        htt = state.circle.dealias(&htt);
    }
    Ok(RhsEval { htt, kappa_min: kmin })
}

// ---------------------------------------------------------------------------
// inverse-Gauss-map field on a slice

/// IGM data at the nodes of one slice.
#[derive(Debug, Clone, PartialEq)]
pub struct IgmSlice {
    /// Gauss-image time `t'`.
    pub gauss_t: Vec<f64>,
    /// Gauss-image angle minus the node angle.
    pub gauss_shift: Vec<f64>,
    /// `(φ_00, φ_01, φ_11)` in the dS frame at the Gauss image.
    pub phi: Vec<[f64; 3]>,
    /// `(g^00, g^01, g^11)` for `g = ḡ + 2φ + φφ`.
    pub g_upper: Vec<[f64; 3]>,
    pub h_residual: Vec<f64>,
}

/// Reads `φ_IGM` off a slice. `htt = None` solves `H = 2` for `∂_t²φ`.
pub fn igm_slice(state: &GraphField1D, htt: Option<&[f64]>, opts: &EvolveOptions) -> Result<IgmSlice> {
    let owned;
    let htt = match htt {
        Some(h) => h,
        None => {
            owned = rhs_field(state, opts)?.htt;
            &owned
        }
    };
    let jets = slice_jets(state, opts.dealias);
    let n = state.n();
    let mut out = IgmSlice {
        gauss_t: Vec::with_capacity(n),
        gauss_shift: Vec::with_capacity(n),
        phi: Vec::with_capacity(n),
        g_upper: Vec::with_capacity(n),
        h_residual: Vec::with_capacity(n),
    };
    for j in 0..n {
        let geo = normal_graph_geometry(state.t, &jets.jet(j, htt[j]))?;
        out.h_residual.push(geo.mean_curvature - 2.0);
        let nu: Vec<f64> = geo.normal.iter().map(|x| -x).collect();
        let tp = nu[0];
        let alpha = nu[2].atan2(nu[1]);
        let (ca, sa) = (alpha.cos(), alpha.sin());
        let frame = [[jb(tp), tp * ca, tp * sa], [0.0, -sa, ca]];
        // X_a = Σ_b C_ab e_b with C_ab = η_bb⟨X_a, e_b⟩.
        let c = Matrix2::from_fn(|a, b| frame_eta(b, b) * mink(&geo.tangents[a], &frame[b]));
        let w = Matrix2::from_fn(|a, b| geo.shape[a][b]);
        let a_chart = w.try_inverse().ok_or_else(|| Error::GaussMapDegenerate(format!("shape operator singular at node {j}")))?;
        let c_inv_t = c.transpose().try_inverse().ok_or_else(|| Error::GaussMapDegenerate("tangent frame degenerate".into()))?;
        let f = c.transpose() * a_chart * c_inv_t - Matrix2::identity();
        // lower with η and symmetrize
        let low = |a: usize, b: usize| frame_eta(a, a) * f[(a, b)];
        let p = [low(0, 0), 0.5 * (low(0, 1) + low(1, 0)), low(1, 1)];
        let fp = FramePhi::from_lower(vec![vec![p[0], p[1]], vec![p[1], p[2]]]);
        let (_, gi, _) = metric_from_phi(&fp)?;
        out.gauss_t.push(tp);
        out.gauss_shift.push(alpha);
        out.phi.push(p);
        out.g_upper.push([gi[0][0], gi[0][1], gi[1][1]]);
    }
    Ok(out)
}

/// Weighted energy `⟨t⟩²∫S ττττ dω` of the IGM field on a graph slice, with the
/// coefficient metric `g⁻¹` of the field itself.
pub fn graph_energy(state: &GraphField1D, opts: &EvolveOptions) -> Result<f64> {
    let s = igm_slice(state, None, opts)?;
    Ok(weighted_energy(state.t, &s.phi, Some(&s.g_upper)))
}

// ---------------------------------------------------------------------------
// time stepping

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostic {
    pub t: f64,
    pub energy: f64,
    pub supnorm: f64,
    /// `max ũ − min ũ` over the circle.
    pub ushift_range: f64,
    pub kappa_min: f64,
}

/// Slices at `t ± δ` around a snapshot, for time-difference residuals.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualProbe {
    pub t: f64,
    pub delta: f64,
    pub minus: GraphField1D,
    pub center: GraphField1D,
    pub plus: GraphField1D,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Halt {
    pub t: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphTrajectory {
    pub snapshots: Vec<GraphField1D>,
    pub diagnostics: Vec<Diagnostic>,
    /// Two probes (coarse, fine) per snapshot after the first.
    pub probes: Vec<ResidualProbe>,
    /// Set when a guard stopped the run; the last snapshot is then the state at
    /// the halt.
    pub halt: Option<Halt>,
    pub steps: usize,
    pub rhs_evals: usize,
}

impl GraphTrajectory {
    pub fn last(&self) -> &GraphField1D {
        self.snapshots.last().expect("trajectory holds the initial state")
    }

    pub fn completed(&self) -> bool {
        self.halt.is_none()
    }
}

fn diagnostic(s: &GraphField1D, opts: &EvolveOptions) -> Result<Diagnostic> {
    let r = rhs_field(s, opts)?;
    let sl = igm_slice(s, Some(&r.htt), opts)?;
    let u = s.u_tilde();
    let (lo, hi) = u.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    Ok(Diagnostic { t: s.t, energy: weighted_energy(s.t, &sl.phi, Some(&sl.g_upper)), supnorm: s.sup_norm(), ushift_range: hi - lo, kappa_min: r.kappa_min })
}

/// Evolves `state0` to `t_end`, keeping snapshots at `times` (and `t_end`).
/// A guard breach does not return an error: the run stops, `halt` records why
/// and the last accepted state is appended as a final snapshot.
pub fn evolve(state0: &GraphField1D, t_end: f64, times: &[f64], opts: &EvolveOptions) -> Result<GraphTrajectory> {
    let t0 = state0.t;
    if !(t_end.is_finite() && t_end > t0) {
        return domain("evolution runs forward to a finite t_end > t0");
    }
    rhs_field(state0, opts)?;
    let mut snap_t: Vec<f64> = times.iter().copied().filter(|&t| t > t0 && t < t_end).collect();
    if snap_t.windows(2).any(|w| w[1] <= w[0]) {
        return domain("snapshot times must be strictly increasing");
    }
    snap_t.push(t_end);
    // observation list: snapshots plus probe offsets
    let mut obs: Vec<f64> = Vec::new();
    for &ts in &snap_t {
        obs.push(ts);
        for &c in &opts.probe_steps {
            let d = c * jb(ts);
            if ts - d > t0 {
                obs.push(ts - d);
                obs.push(ts + d);
            }
        }
    }
    obs.sort_by(f64::total_cmp);
    obs.dedup();
    let t_stop = *obs.last().expect("nonempty");
    let n = state0.n();
    let mut y0 = state0.phi.clone();
    y0.extend_from_slice(&state0.dphi);
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let last_good: RefCell<(f64, Vec<f64>)> = RefCell::new((t0, y0.clone()));
    let rhs = |t: f64, y: &[f64], dy: &mut [f64]| {
        let s = state0.with_state(t, y);
        match rhs_field(&s, opts) {
            Ok(r) => {
                let dphi = if opts.dealias { s.circle.dealias(&s.dphi) } else { s.dphi.clone() };
                dy[..n].copy_from_slice(&dphi);
                dy[n..].copy_from_slice(&r.htt);
            }
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                dy.iter_mut().for_each(|v| *v = 0.0);
            }
        }
    };
    let o = OdeOptions { rtol: opts.rtol, atol: opts.atol, max_steps: opts.max_steps, ..OdeOptions::default() };
    let spec = SolveSpec {
        observe_at: obs.clone(),
        hook: Some(Box::new(|t, y| {
            if failure.borrow().is_some() {
                return false;
            }
            *last_good.borrow_mut() = (t, y.to_vec());
            true
        })),
        ..SolveSpec::default()
    };
    let run = ode::solve(rhs, t0, &y0, t_stop, &o, spec);
    let observed = run.observed;
    let lookup = |t: f64| observed.iter().find(|(to, _)| *to == t).map(|(to, y)| state0.with_state(*to, y));
    let mut snapshots = vec![state0.clone()];
    let mut probes = Vec::new();
    for &ts in &snap_t {
        let Some(center) = lookup(ts) else { break };
        for &c in &opts.probe_steps {
            let d = c * jb(ts);
            if let (Some(minus), Some(plus)) = (lookup(ts - d), lookup(ts + d)) {
                probes.push(ResidualProbe { t: ts, delta: d, minus, center: center.clone(), plus });
            }
        }
        snapshots.push(center);
    }
    let halt = match (failure.into_inner(), &run.stop) {
        (Some(e), _) => Some(Halt { t: last_good.borrow().0, reason: e.to_string() }),
        (None, Stop::StepFailure { t }) => Some(Halt { t: *t, reason: "step size underflow".into() }),
        (None, Stop::MaxSteps { t }) => Some(Halt { t: *t, reason: "step budget exhausted".into() }),
        _ => None,
    };
    if halt.is_some() {
        let (t, y) = last_good.into_inner();
        if snapshots.last().map(|s| s.t) != Some(t) {
            snapshots.push(state0.with_state(t, &y));
        }
    }
    let mut diagnostics = Vec::with_capacity(snapshots.len());
    for s in &snapshots {
        match diagnostic(s, opts) {
            Ok(d) => diagnostics.push(d),
            Err(_) if halt.is_some() => break,
            Err(e) => return Err(e),
        }
    }
    Ok(GraphTrajectory { snapshots, diagnostics, probes, halt, steps: run.accepted, rhs_evals: run.nfev })
}

/// Snapshot times `t0·2^k` below `t_end`.
pub fn geometric_times(t0: f64, t_end: f64) -> Vec<f64> {
    let mut v = Vec::new();
    let mut t = 2.0 * t0.max(0.125);
    while t < t_end {
        v.push(t);
        t *= 2.0;
    }
    v
}

// ---------------------------------------------------------------------------
// scenarios

pub fn scenario_zero(n: usize, t0: f64) -> Result<GraphField1D> {
    GraphField1D::new(t0, vec![0.0; n], vec![0.0; n])
}

/// `φ = amp·exp(−(1 − cos(ω − center))/width²)`, `∂_tφ = 0`.
pub fn scenario_bump(n: usize, t0: f64, amp: f64, center: f64, width: f64) -> Result<GraphField1D> {
    if !(width > 0.0) {
        return domain("bump width must be positive");
    }
    GraphField1D::from_fn(n, t0, |om| (amp * (-(1.0 - (om - center).cos()) / (width * width)).exp(), 0.0))
}

/// Geometry of the translated-patch data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PatchSpec {
    pub eps: f64,
    pub t0: f64,
    /// Half-width of the two caps `|ω| ≤ a`, `|ω − π| ≤ a`.
    pub cap: f64,
    /// Extra angular margin when shrinking caps to dependence domains.
    pub margin: f64,
}

impl PatchSpec {
    /// Caps reach `π/4 + 0.35` at `t0 = 1`; in general the asymptotic
    /// dependence radius plus `0.35`, kept below `π/2 − 0.2`.
    pub fn new(eps: f64, t0: f64) -> Result<Self> {
        if !(t0 > 0.0) {
            return domain("translated-patch data needs t0 > 0");
        }
        let cap = (std::f64::consts::FRAC_PI_2 - t0.atan() + 0.35).min(std::f64::consts::FRAC_PI_2 - 0.2);
        Ok(Self { eps, t0, cap, margin: 0.1 })
    }

    /// Half-width at time `t` of the region that only sees one cap.
    pub fn frozen_half_width(&self, t: f64) -> f64 {
        self.cap - (t.atan() - self.t0.atan()) - self.margin
    }

    /// Shift of the translate used on the cap around `center ∈ {0, π}`.
    pub fn shift(&self, center: f64) -> [f64; 3] {
        [0.0, self.eps * center.cos(), self.eps * center.sin()]
    }
}

fn smooth_step(x: f64) -> f64 {
    let f = |s: f64| if s > 0.0 { (-1.0 / s).exp() } else { 0.0 };
    let (a, b) = (f(x), f(1.0 - x));
    a / (a + b)
}

/// Weight 1 on the cap around `ω = 0` and 0 on the cap around `ω = π`.
fn patch_weight(spec: &PatchSpec, om: f64) -> f64 {
    let c = om.cos();
    let (lo, hi) = ((std::f64::consts::PI - spec.cap).cos(), spec.cap.cos());
    smooth_step((c - lo) / (hi - lo))
}

/// Exact translate height and its `t`-derivative over the ray `(t, ω)`.
pub fn translate_height(xi: &[f64; 3], t: f64, om: f64) -> Result<(f64, f64)> {
    let sp = crate::jet::JetSpace::get(1, 1);
    let tj = crate::jet::Jet::variable(&sp, 0, t);
    let w = tj.jb();
    let x = [tj.clone(), &w * om.cos(), &w * om.sin()];
    let s = translated_height_s(&x, xi)?;
    Ok((s.value(), s.d1(0)))
}

/// `+ε` translate on the cap around `ω = 0`, `−ε` translate on the cap around
/// `ω = π`, joined by a smooth partition of unity in `cos ω`.
pub fn scenario_translated_patch(n: usize, spec: &PatchSpec) -> Result<GraphField1D> {
    let (xp, xm) = (spec.shift(0.0), spec.shift(std::f64::consts::PI));
    let mut phi = Vec::with_capacity(n);
    let mut dphi = Vec::with_capacity(n);
    for j in 0..n {
        let om = TAU * j as f64 / n as f64;
        let (sp, dsp) = translate_height(&xp, spec.t0, om).map_err(|_| Error::Domain("ε too large: translate leaves the normal chart".into()))?;
        let (sm, dsm) = translate_height(&xm, spec.t0, om).map_err(|_| Error::Domain("ε too large: translate leaves the normal chart".into()))?;
        let w = patch_weight(spec, om);
        phi.push(w * sp + (1.0 - w) * sm);
        dphi.push(w * dsp + (1.0 - w) * dsm);
    }
    GraphField1D::new(spec.t0, phi, dphi)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PatchAgreement {
    /// Largest `|φ − s_±|` over frozen nodes of all snapshots.
    pub max_deviation: f64,
    pub nodes_checked: usize,
    /// Frozen half-width at the final snapshot.
    pub final_half_width: f64,
}

/// Compares a run with the two exact translates inside their dependence domains.
pub fn patch_agreement(traj: &GraphTrajectory, spec: &PatchSpec) -> Result<PatchAgreement> {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for s in &traj.snapshots {
        let hw = spec.frozen_half_width(s.t);
        if hw <= 0.0 {
            continue;
        }
        for (j, om) in s.nodes().into_iter().enumerate() {
            for center in [0.0, std::f64::consts::PI] {
                let dist = (om - center).sin().atan2((om - center).cos()).abs();
                if dist <= hw {
                    let (exact, _) = translate_height(&spec.shift(center), s.t, om)?;
                    worst = worst.max((s.phi[j] - exact).abs());
                    count += 1;
                }
            }
        }
    }
    let final_half_width = spec.frozen_half_width(traj.last().t);
    Ok(PatchAgreement { max_deviation: worst, nodes_checked: count, final_half_width })
}

// ---------------------------------------------------------------------------
// asymptotics

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UShift {
    pub t: f64,
    pub omega: Vec<f64>,
    pub u: Vec<f64>,
    /// `ũ(T) + T∂_tũ(T)`, exact when `∂_tũ ∝ t⁻²`.
    pub u_inf: Vec<f64>,
    /// `|T∂_tũ(T)|`, the tail of `∫_T^∞ ∂_tũ` under `|∂_tũ| ≲ t⁻²`.
    pub error_bar: Vec<f64>,
    pub lipschitz: f64,
    pub range: f64,
}

impl UShift {
    pub fn at(&self, omega: f64) -> f64 {
        let n = self.omega.len();
        let j = ((omega.rem_euclid(TAU)) / TAU * n as f64).round() as usize % n;
        self.u_inf[j]
    }
}

pub fn ushift(traj: &GraphTrajectory) -> Result<UShift> {
    let s = traj.last();
    let t = s.t;
    let u = s.u_tilde();
    let du = s.u_tilde_rate();
    let u_inf: Vec<f64> = u.iter().zip(&du).map(|(a, b)| a + t * b).collect();
    let error_bar = du.iter().map(|b| (t * b).abs()).collect();
    let lipschitz = s.circle.derivative(&u_inf, 1).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let (lo, hi) = u_inf.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    Ok(UShift { t, omega: s.nodes(), u, u_inf, error_bar, lipschitz, range: hi - lo })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConeTest {
    pub eps: f64,
    /// `min over (τ₀, ξ₀)` of `sup_M ||x − ξ₀| − t + τ₀|`.
    pub min_sup: f64,
    pub worst_tau0: f64,
    pub worst_xi0: f64,
    pub pass: bool,
}

/// Distance of the final slice from every light cone with vertex
/// `(τ₀, ξ₀ ê₁)` on a `5 × 5` grid in `[−2ε, 2ε]²`. Only points with ambient
/// time at least half the slice time count, so that the `1/(2x⁰)` gap between
/// a hyperboloid and its cone stays small.
pub fn cone_test(traj: &GraphTrajectory, eps: f64) -> ConeTest {
    let last = traj.last();
    let pts: Vec<[f64; 3]> = last.ambient_points().into_iter().filter(|p| p[0] >= 0.5 * last.t).collect();
    let grid: Vec<f64> = (-2..=2).map(|k| k as f64 * eps).collect();
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for &tau0 in &grid {
        for &xi0 in &grid {
            let sup = pts.iter().fold(0.0f64, |m, p| m.max((((p[1] - xi0).powi(2) + p[2] * p[2]).sqrt() - p[0] + tau0).abs()));
            if sup < best.0 {
                best = (sup, tau0, xi0);
            }
        }
    }
    ConeTest { eps, min_sup: best.0, worst_tau0: best.1, worst_xi0: best.2, pass: best.0 >= 0.5 * eps.abs() }
}

// ---------------------------------------------------------------------------
// audits

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    /// Per probe level (coarse, fine): max `|H − 2|` with `∂_t²φ` from time
    /// differences of `∂_tφ`.
    pub h_residual: [f64; 2],
    /// Per probe level: max curl and divergence residuals of the IGM field.
    pub igm_curl: [f64; 2],
    pub igm_div: [f64; 2],
    pub h_order: f64,
    pub igm_order: f64,
    /// Largest `|H − 2|` with `∂_t²φ` from the affine solve (round-off only).
    pub affine_residual: f64,
    pub probes: usize,
}

fn order(coarse: f64, fine: f64, ratio: f64) -> f64 {
    if coarse <= 0.0 || fine <= 0.0 {
        return f64::NAN;
    }
    (coarse / fine).ln() / ratio.ln()
}

/// `H − 2` and the IGM main-system residuals at each probe, with `∂_t` from
/// central differences over `t ± δ`. Both are second order in `δ`.
pub fn residual_audit(traj: &GraphTrajectory, opts: &EvolveOptions) -> Result<ResidualReport> {
    let mut rep =
        ResidualReport { h_residual: [0.0; 2], igm_curl: [0.0; 2], igm_div: [0.0; 2], h_order: f64::NAN, igm_order: f64::NAN, affine_residual: 0.0, probes: 0 };
    for p in &traj.probes {
        let level = opts.probe_steps.iter().position(|&c| (c * jb(p.t) - p.delta).abs() <= 1e-12 * p.delta.max(1.0)).unwrap_or(0).min(1);
        rep.probes += 1;
        let c = &p.center;
        let jets = slice_jets(c, opts.dealias);
        let htt_fd: Vec<f64> = (0..c.n()).map(|j| (p.plus.dphi[j] - p.minus.dphi[j]) / (2.0 * p.delta)).collect();
        for (j, h) in htt_fd.iter().enumerate() {
            let jet = jets.jet(j, *h);
            let hv = normal_graph_mc_s(&c.t, &jet.value, &jet.grad, &jet.hess)?;
            rep.h_residual[level] = rep.h_residual[level].max((hv - 2.0).abs());
        }
        let rows: Vec<IgmSlice> = [&p.minus, c, &p.plus].iter().map(|s| igm_slice(s, None, opts)).collect::<Result<_>>()?;
        rep.affine_residual = rep.affine_residual.max(rows[1].h_residual.iter().fold(0.0f64, |m, v| m.max(v.abs())));
        let (cc, dv) = igm_residual_at(c, &rows, p.delta)?;
        rep.igm_curl[level] = rep.igm_curl[level].max(cc);
        rep.igm_div[level] = rep.igm_div[level].max(dv);
    }
    let ratio = opts.probe_steps[0] / opts.probe_steps[1];
    rep.h_order = order(rep.h_residual[0], rep.h_residual[1], ratio);
    rep.igm_order = order(rep.igm_curl[0].max(rep.igm_div[0]), rep.igm_curl[1].max(rep.igm_div[1]), ratio);
    Ok(rep)
}

/// Main-system residuals of the IGM field on the middle row. The field is
/// known on graph coordinates; derivatives in the Gauss coordinates follow
/// from the chain rule with the Jacobian of `(t, ω) ↦ (t', ω')`.
fn igm_residual_at(c: &GraphField1D, rows: &[IgmSlice], delta: f64) -> Result<(f64, f64)> {
    let n = c.n();
    let circ = &c.circle;
    let dt = |f: &dyn Fn(&IgmSlice, usize) -> f64, j: usize| (f(&rows[2], j) - f(&rows[0], j)) / (2.0 * delta);
    let mid = &rows[1];
    let comp = |k: usize| mid.phi.iter().map(|p| p[k]).collect::<Vec<_>>();
    let dw_phi: Vec<Vec<f64>> = (0..3).map(|k| circ.derivative(&comp(k), 1)).collect();
    let dw_tp = circ.derivative(&mid.gauss_t, 1);
    // unwrap the angle shift before differentiating
    let shift: Vec<f64> = mid.gauss_shift.iter().map(|a| a.sin().atan2(a.cos())).collect();
    let dw_shift = circ.derivative(&shift, 1);
    let (mut curl, mut div) = (0.0f64, 0.0f64);
    for j in 0..n {
        let tp_t = dt(&|r, j| r.gauss_t[j], j);
        let wp_t = dt(&|r, j| r.gauss_shift[j], j);
        let jac = Matrix2::new(tp_t, dw_tp[j], wp_t, 1.0 + dw_shift[j]);
        let inv = jac.try_inverse().ok_or_else(|| Error::GaussMapDegenerate(format!("Gauss map not a local diffeomorphism at node {j}")))?;
        let tp = mid.gauss_t[j];
        let b = jb(tp);
        let mut e = [[0.0; 3]; 2];
        for k in 0..3 {
            let ft = dt(&|r, j| r.phi[j][k], j);
            let fw = dw_phi[k][j];
            // [F_t', F_ω'] = [f_t, f_ω] J⁻¹
            let f_tp = ft * inv[(0, 0)] + fw * inv[(1, 0)];
            let f_wp = ft * inv[(0, 1)] + fw * inv[(1, 1)];
            e[0][k] = b * f_tp;
            e[1][k] = f_wp / b;
        }
        let p = mid.phi[j];
        let dphi = frame_covariant_derivative_1d(tp, p, e);
        let fp = FramePhi::from_lower(vec![vec![p[0], p[1]], vec![p[1], p[2]]]);
        let (cr, dv) = mainsystem_pointwise(&fp, &dphi)?;
        curl = curl.max(cr);
        div = div.max(dv);
    }
    Ok((curl, div))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearGap {
    pub amplitudes: Vec<f64>,
    /// `sup|φ_nonlinear − φ_linear|` at `t_end`.
    pub gaps: Vec<f64>,
    /// Log–log slope of `gaps` against `amplitudes`.
    pub slope: f64,
}

/// Runs bump data at several amplitudes through the nonlinear and the linear
/// evolution and fits how the difference scales.
pub fn linear_gap(n: usize, t0: f64, t_end: f64, amplitudes: &[f64], opts: &EvolveOptions) -> Result<LinearGap> {
    let mut gaps = Vec::with_capacity(amplitudes.len());
    for &a in amplitudes {
        let s0 = scenario_bump(n, t0, a, 0.0, 0.5)?;
        let nl = evolve(&s0, t_end, &[], opts)?;
        if let Some(h) = &nl.halt {
            return Err(Error::GuardBreach(h.reason.clone()));
        }
        let lin = evolve_linear_1d(&s0.to_linear()?, t_end, &[], LinearMethod::Spectral, &ModeOptions { rtol: opts.rtol, atol: opts.atol * 1e-3 })?;
        let (x, y) = (&nl.last().phi, &lin.last().phi);
        gaps.push(x.iter().zip(y).fold(0.0f64, |m, (p, q)| m.max((p - q).abs())));
    }
    let slope = loglog_slope(amplitudes, &gaps);
    Ok(LinearGap { amplitudes: amplitudes.to_vec(), gaps, slope })
}

pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = x.iter().zip(y).filter(|(a, b)| **a > 0.0 && **b > 0.0).map(|(a, b)| (a.ln(), b.ln())).collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let m = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / m, pts.iter().map(|p| p.1).sum::<f64>() / m);
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stress::hessian_slice;

    fn fast() -> EvolveOptions {
        EvolveOptions { rtol: 1e-9, atol: 1e-12, ..EvolveOptions::default() }
    }

    #[test]
    fn zero_data_is_stationary() {
        let s = scenario_zero(32, 0.5).unwrap();
        let r = rhs_field(&s, &fast()).unwrap();
        assert!(r.htt.iter().all(|v| v.abs() < 1e-13));
        let traj = evolve(&s, 50.0, &geometric_times(0.5, 50.0), &fast()).unwrap();
        assert!(traj.completed());
        assert!(traj.snapshots.iter().all(|s| s.sup_norm() <= 1e-10));
        let u = ushift(&traj).unwrap();
        assert!(u.u_inf.iter().all(|v| v.abs() < 1e-5), "{:?}", &u.u_inf[..3]);
        let rep = residual_audit(&traj, &fast()).unwrap();
        // round-off of the time differences only
        assert!(rep.h_residual[0] < 1e-10 && rep.igm_curl[0] < 1e-9 && rep.igm_div[0] < 1e-9, "{rep:?}");
    }

    #[test]
    fn rhs_linearizes_to_mode_equation() {
        // At small amplitude the affine solve reproduces the linear ∂_t²φ.
        let t = 0.8;
        let w2 = 1.0 + t * t;
        let profile = |om: f64| ((2.0 * om).cos() + 0.3 * (3.0 * om).sin(), 0.2 * om.cos());
        let mut errs = Vec::new();
        for amp in [1e-4, 1e-5] {
            let s = GraphField1D::from_fn(32, t, |om| {
                let (a, b) = profile(om);
                (amp * a, amp * b)
            })
            .unwrap();
            let r = rhs_field(&s, &fast()).unwrap();
            let c = s.circle();
            let pww = c.derivative(&s.phi, 2);
            let e = (0..32).fold(0.0f64, |m, j| {
                let lin = (2.0 * s.phi[j] - 2.0 * t * s.dphi[j] + pww[j] / w2) / w2;
                m.max((r.htt[j] - lin).abs())
            });
            errs.push(e);
        }
        let ord = (errs[0] / errs[1]).log10();
        assert!((ord - 2.0).abs() < 0.1, "{errs:?}");
    }

    #[test]
    fn igm_field_matches_linear_hessian() {
        let amp = 1e-5;
        let s = GraphField1D::from_fn(64, 1.1, |om| (amp * (2.0 * om).cos(), amp * 0.5 * (3.0 * om).sin())).unwrap();
        let sl = igm_slice(&s, None, &fast()).unwrap();
        let lin = hessian_slice(&s.to_linear().unwrap());
        let scale = lin.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        // φ_IGM = W⁻¹ − I ≈ −δW and δW is the Hessian tensor.
        for (a, b) in sl.phi.iter().zip(&lin) {
            for k in 0..3 {
                assert!((a[k] + b[k]).abs() < 1e-3 * scale, "{a:?} {b:?}");
            }
        }
        let e_nl = graph_energy(&s, &fast()).unwrap();
        let e_lin = weighted_energy(s.t, &lin, None);
        assert!((e_nl / e_lin - 1.0).abs() < 1e-3);
    }

    #[test]
    fn translate_data_is_tracked() {
        let xi = [0.0, 0.02, 0.0];
        let s0 = GraphField1D::from_fn(64, 0.5, |om| translate_height(&xi, 0.5, om).unwrap()).unwrap();
        let traj = evolve(&s0, 20.0, &geometric_times(0.5, 20.0), &fast()).unwrap();
        assert!(traj.completed());
        for s in &traj.snapshots {
            for (j, om) in s.nodes().into_iter().enumerate() {
                let (e, _) = translate_height(&xi, s.t, om).unwrap();
                assert!((s.phi[j] - e).abs() < 1e-7, "t={} {}", s.t, s.phi[j] - e);
            }
        }
        let rep = residual_audit(&traj, &fast()).unwrap();
        assert!(rep.h_residual[1] < 1e-7, "{rep:?}");
        // translates have W = I, hence no IGM field and no energy
        assert!(traj.diagnostics.iter().all(|d| d.energy.abs() < 1e-12));
    }

    #[test]
    fn bump_run_residuals_converge() {
        let s0 = scenario_bump(64, 0.5, 1e-3, 0.0, 0.6).unwrap();
        let traj = evolve(&s0, 20.0, &geometric_times(0.5, 20.0), &fast()).unwrap();
        assert!(traj.completed());
        let rep = residual_audit(&traj, &fast()).unwrap();
        assert!(rep.h_residual[0] < 1e-6, "{rep:?}");
        assert!((rep.h_order - 2.0).abs() < 0.3, "{rep:?}");
        assert!((rep.igm_order - 2.0).abs() < 0.3, "{rep:?}");
        assert!(rep.affine_residual < 1e-12);
        let e0 = traj.diagnostics[0].energy;
        assert!(traj.diagnostics.iter().all(|d| d.energy <= 2.0 * e0));
    }

    #[test]
    fn guard_breach_halts_cleanly() {
        // Large quadrupolar data loses the graph property; the run stops and
        // keeps the last state.
        let s0 = GraphField1D::from_fn(32, 0.5, |om| (0.0, 0.85 * (2.0 * om).cos())).unwrap();
        let traj = evolve(&s0, 50.0, &[], &fast()).unwrap();
        assert!(!traj.completed());
        let h = traj.halt.as_ref().unwrap();
        assert_eq!(traj.last().t, h.t);
        assert!(h.t < 50.0, "{h:?}");
        // oversized data is rejected up front
        let bad = GraphField1D::from_fn(32, 0.5, |_| (0.0, 5.0)).unwrap();
        assert!(matches!(evolve(&bad, 1.0, &[], &fast()), Err(Error::GuardBreach(_))));
    }

    #[test]
    fn patch_data_shape() {
        let z = PatchSpec::new(0.0, 1.0).unwrap();
        assert!(scenario_translated_patch(64, &z).unwrap().sup_norm() == 0.0);
        let spec = PatchSpec::new(1e-3, 1.0).unwrap();
        let s = scenario_translated_patch(64, &spec).unwrap();
        assert!(s.sup_norm() <= 1e-3 * 2f64.sqrt() * 1.01 && s.sup_norm() >= 1e-3);
        // even under ω ↦ π − ω (reflection x¹ ↦ −x¹ maps one cap to the other)
        let n = 64;
        for j in 0..n {
            let k = (n / 2 + n - j) % n;
            assert!((s.phi[j] - s.phi[k]).abs() < 1e-15);
        }
    }

    #[test]
    fn cone_test_on_single_translate_fails() {
        // A single translate is asymptotic to one light cone, so the test must
        // find a vertex close to it.
        let eps = 0.05;
        let xi = [0.0, eps, 0.0];
        let t = 200.0;
        let s = GraphField1D::from_fn(64, t, |om| translate_height(&xi, t, om).unwrap()).unwrap();
        let traj = GraphTrajectory { snapshots: vec![s], diagnostics: vec![], probes: vec![], halt: None, steps: 0, rhs_evals: 0 };
        let c = cone_test(&traj, eps);
        assert!(!c.pass && c.min_sup < 0.2 * eps, "{c:?}");
        assert_eq!((c.worst_tau0, c.worst_xi0), (0.0, eps));
    }
}
