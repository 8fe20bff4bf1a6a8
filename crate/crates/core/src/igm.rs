//! Inverse-Gauss-map gauge algebra.
//!
//! All tensors live in the orthonormal frame `(τ, e_1, …, e_d)` of de Sitter,
//! with frame metric `η = diag(−1, 1, …, 1)`. A [`FramePhi`] stores the lowered
//! components `φ_ab`; the mixed form is `φ^a_b = η^{aa} φ_ab`. Self-adjointness
//! with respect to the frame metric is then plain symmetry of the lowered
//! matrix.
//!
//! Spherically symmetric states are `φ^c_a = η τ_aτ^c + ζ δ^c_a` with the
//! constant-mean-curvature relation `η = ζ(1+ζ)/(ζ + 1/(d+1))`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::dsgeom::{div_tau, eta as frame_eta, frame_christoffel_1d, jb};
use crate::error::{domain, Error, Result};
use crate::ode::{self, OdeOptions, SolveSpec, Stop};

/// Margin kept above the Gauss-map singularity `ζ = −1/(d+1)`.
pub const ZETA_GUARD: f64 = 1e-10;

type Mat = Vec<Vec<f64>>;

fn zeros(n: usize) -> Mat {
    vec![vec![0.0; n]; n]
}

#[cfg(test)]
fn ident(n: usize) -> Mat {
    (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
}

fn matmul(a: &Mat, b: &Mat) -> Mat {
    let n = a.len();
    let mut c = zeros(n);
    for i in 0..n {
        for k in 0..n {
            for j in 0..n {
                c[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    c
}

fn to_na(m: &Mat) -> DMatrix<f64> {
    DMatrix::from_fn(m.len(), m.len(), |i, j| m[i][j])
}

fn from_na(m: &DMatrix<f64>) -> Mat {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

/// Symmetric frame tensor `φ_ab`, stored lowered.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FramePhi {
    pub lower: Mat,
}

/// `ψ` with `(I+ψ)(I+φ) = I`, stored lowered like [`FramePhi`].
pub type FramePsi = FramePhi;

impl FramePhi {
    pub fn zero(n: usize) -> Self {
        Self { lower: zeros(n) }
    }

    /// From lowered components; symmetrizes.
    pub fn from_lower(m: Mat) -> Self {
        let n = m.len();
        let mut lower = zeros(n);
        for i in 0..n {
            for j in 0..n {
                lower[i][j] = 0.5 * (m[i][j] + m[j][i]);
            }
        }
        Self { lower }
    }

    /// From mixed components `φ^a_b`.
    pub fn from_mixed(m: &Mat) -> Self {
        let n = m.len();
        let lower = (0..n).map(|a| (0..n).map(|b| frame_eta(a, a) * m[a][b]).collect()).collect();
        Self::from_lower(lower)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn mixed(&self) -> Mat {
        let n = self.dim();
        (0..n).map(|a| (0..n).map(|b| frame_eta(a, a) * self.lower[a][b]).collect()).collect()
    }

    /// `φ^a_a`.
    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|a| frame_eta(a, a) * self.lower[a][a]).sum()
    }

    /// Frame norm `(Σ φ_ab²)^{1/2}`, i.e. the norm with respect to `ḡ + 2τ⊗τ`.
    pub fn norm(&self) -> f64 {
        self.lower.iter().flatten().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { lower: self.lower.iter().map(|r| r.iter().map(|x| s * x).collect()).collect() }
    }
}

pub fn eta_from_zeta(zeta: f64, d: usize) -> Result<f64> {
    check_zeta(zeta, d)?;
    Ok(zeta * (1.0 + zeta) / (zeta + 1.0 / (d + 1) as f64))
}

/// `ν = (d+1)ζ + 1`.
pub fn nu(zeta: f64, d: usize) -> f64 {
    (d + 1) as f64 * zeta + 1.0
}

fn check_zeta(zeta: f64, d: usize) -> Result<()> {
    if d == 0 {
        return domain("d must be at least 1");
    }
    if !(zeta > -1.0 / (d + 1) as f64 + ZETA_GUARD) || !zeta.is_finite() {
        return domain(format!("ζ = {zeta} is at or below the Gauss-map limit −1/(d+1)"));
    }
    Ok(())
}

/// Spherically symmetric IGM state on one constant-`t` slice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IgmState {
    pub zeta: f64,
    pub t: f64,
    pub d: usize,
}

impl IgmState {
    pub fn new(zeta: f64, t: f64, d: usize) -> Result<Self> {
        check_zeta(zeta, d)?;
        Ok(Self { zeta, t, d })
    }

    pub fn eta(&self) -> f64 {
        eta_from_zeta(self.zeta, self.d).unwrap()
    }

    pub fn nu(&self) -> f64 {
        nu(self.zeta, self.d)
    }

    pub fn phi(&self) -> FramePhi {
        background_phi(self.zeta, self.d).unwrap()
    }
}

/// Eigenvalues of `A = I + φ`: `(1+ζ)/ν` along `τ`, `1+ζ` on the `d` spatial directions.
pub fn a_eigen(zeta: f64, d: usize) -> Result<(f64, f64)> {
    check_zeta(zeta, d)?;
    Ok(((1.0 + zeta) / nu(zeta, d), 1.0 + zeta))
}

/// `A^a_b` as a mixed frame matrix.
pub fn a_matrix(zeta: f64, d: usize) -> Result<Mat> {
    let (lt, ls) = a_eigen(zeta, d)?;
    let mut m = zeros(d + 1);
    m[0][0] = lt;
    for i in 1..=d {
        m[i][i] = ls;
    }
    Ok(m)
}

/// `(A⁻¹)^a_b`, assembled from the closed form rather than by inversion.
pub fn a_inv_matrix(zeta: f64, d: usize) -> Result<Mat> {
    check_zeta(zeta, d)?;
    let mut m = zeros(d + 1);
    m[0][0] = nu(zeta, d) / (1.0 + zeta);
    for i in 1..=d {
        m[i][i] = 1.0 / (1.0 + zeta);
    }
    Ok(m)
}

/// `φ_ab` of the spherically symmetric state: `φ_00 = η − ζ`, `φ_ii = ζ`.
pub fn background_phi(zeta: f64, d: usize) -> Result<FramePhi> {
    let eta = eta_from_zeta(zeta, d)?;
    let mut m = zeros(d + 1);
    m[0][0] = eta - zeta;
    for i in 1..=d {
        m[i][i] = zeta;
    }
    Ok(FramePhi { lower: m })
}

pub fn psi_from_phi(phi: &FramePhi) -> Result<FramePsi> {
    let n = phi.dim();
    let mut a = to_na(&phi.mixed());
    for i in 0..n {
        a[(i, i)] += 1.0;
    }
    let inv = a.clone().try_inverse().ok_or_else(|| Error::GaussMapDegenerate("I + φ is singular".into()))?;
    if !(inv.norm().is_finite()) || a.determinant().abs() < 1e-14 {
        return Err(Error::GaussMapDegenerate("I + φ is numerically singular".into()));
    }
    let mut m = from_na(&inv);
    for (i, row) in m.iter_mut().enumerate() {
        row[i] -= 1.0;
    }
    Ok(FramePhi::from_mixed(&m))
}

/// The induced metric, its inverse and the second fundamental form in the
/// frame: `k = ḡ + φ`, `g = ḡ + 2φ + φφ`.
pub fn metric_from_phi(phi: &FramePhi) -> Result<(Mat, Mat, Mat)> {
    let n = phi.dim();
    let mut k = phi.lower.clone();
    for (a, row) in k.iter_mut().enumerate() {
        row[a] += frame_eta(a, a);
    }
    // g_ab = k_ac η^{cc} k_cb
    let mut g = zeros(n);
    for a in 0..n {
        for b in 0..n {
            g[a][b] = (0..n).map(|c| k[a][c] * frame_eta(c, c) * k[c][b]).sum();
        }
    }
    let gi = to_na(&g).try_inverse().ok_or_else(|| Error::GaussMapDegenerate("induced metric singular".into()))?;
    Ok((g, from_na(&gi), k))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsReport {
    pub phi_norm: f64,
    pub psi_norm: f64,
    pub trace_phi: f64,
    pub trace_psi: f64,
    /// `|ψ| / |φ|`.
    pub c_psi: f64,
    /// `|tr φ| / |φ|²`.
    pub c_trace: f64,
    /// `|φ| < 1/2`.
    pub in_regime: bool,
    /// `tr ψ = 0` to 1e-12.
    pub cmc_consistent: bool,
    /// Both ratios at most [`BOUNDS_C`] (only asserted inside the regime).
    pub pass: bool,
}

/// Constant in `|ψ| ≤ C|φ|` and `|tr φ| ≤ C|φ|²` for `|φ| < 1/2`:
/// `ψ = −φ(I+φ)⁻¹` gives `|ψ| ≤ |φ|/(1−|φ|)`, and `tr φ = −tr(φψ)`.
pub const BOUNDS_C: f64 = 2.0;

pub fn pointwise_bounds_check(phi: &FramePhi) -> Result<BoundsReport> {
    let psi = psi_from_phi(phi)?;
    let (pn, qn) = (phi.norm(), psi.norm());
    let trace_phi = phi.trace();
    let trace_psi = psi.trace();
    let (c_psi, c_trace) = if pn > 0.0 { (qn / pn, trace_phi.abs() / (pn * pn)) } else { (0.0, 0.0) };
    let in_regime = pn < 0.5;
    let cmc_consistent = trace_psi.abs() <= 1e-12;
    let pass = !in_regime || !cmc_consistent || (c_psi <= BOUNDS_C && c_trace <= BOUNDS_C);
    Ok(BoundsReport { phi_norm: pn, psi_norm: qn, trace_phi, trace_psi, c_psi, c_trace, in_regime, cmc_consistent, pass })
}

/// A CMC-consistent `φ` from a frame-symmetric `ψ` with its trace removed.
pub fn phi_from_tracefree_psi(psi_lower: &Mat) -> Result<FramePhi> {
    let n = psi_lower.len();
    let mut psi = FramePhi::from_lower(psi_lower.clone());
    let tr = psi.trace() / n as f64;
    for a in 0..n {
        psi.lower[a][a] -= tr * frame_eta(a, a);
    }
    psi_from_phi(&psi)
}

// ---------------------------------------------------------------------------
// ζ-flow

/// `dζ/dt = −(t/⟨t⟩²)·((1+ζ)/(1/(d+1)+ζ))·ζ`, equivalently `−η t/⟨t⟩²`.
pub fn zeta_rhs(t: f64, zeta: f64, d: usize) -> Result<f64> {
    Ok(-t / (1.0 + t * t) * eta_from_zeta(zeta, d)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZetaSample {
    pub t: f64,
    pub zeta: f64,
    pub eta: f64,
    pub nu: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    /// `p` in `|y| ~ ⟨t⟩^{−p}`.
    pub exponent: f64,
    /// RMS of the log–log residual.
    pub residual: f64,
    pub t_lo: f64,
    pub t_hi: f64,
}

/// Least-squares fit of `log|y|` against `log⟨t⟩` on `t ∈ [t_lo, t_hi]`.
pub fn fit_decay(ts: &[f64], ys: &[f64], t_lo: f64, t_hi: f64) -> Option<DecayFit> {
    let pts: Vec<(f64, f64)> =
        ts.iter().zip(ys).filter(|(t, y)| **t >= t_lo && **t <= t_hi && y.abs() > 0.0).map(|(t, y)| (jb(*t).ln(), y.abs().ln())).collect();
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let residual = (pts.iter().map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2)).sum::<f64>() / n).sqrt();
    Some(DecayFit { exponent: -slope, residual, t_lo, t_hi })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZetaRun {
    pub d: usize,
    pub samples: Vec<ZetaSample>,
    /// Fit over the final decade `[t_end/10, t_end]`; `None` for `ζ ≡ 0`.
    pub fit: Option<DecayFit>,
}

impl ZetaRun {
    pub fn fit_window(&self, t_lo: f64, t_hi: f64) -> Option<DecayFit> {
        let ts: Vec<f64> = self.samples.iter().map(|s| s.t).collect();
        let zs: Vec<f64> = self.samples.iter().map(|s| s.zeta).collect();
        fit_decay(&ts, &zs, t_lo, t_hi)
    }
}

/// Integrates the ζ-flow on `[t0, t_end]`, sampled on a geometric grid.
pub fn integrate_zeta(zeta0: f64, t0: f64, t_end: f64, d: usize) -> Result<ZetaRun> {
    check_zeta(zeta0, d)?;
    if !(t0 > 0.0) || !(t_end > t0) {
        return domain("need 0 < t0 < t_end");
    }
    let n = 801;
    let grid: Vec<f64> = (0..n).map(|k| t0 * (t_end / t0).powf(k as f64 / (n - 1) as f64)).collect();
    let floor = -1.0 / (d + 1) as f64 + ZETA_GUARD;
    let spec = SolveSpec { events: vec![Box::new(move |_t, y: &[f64]| y[0] - floor)], observe_at: grid, ..SolveSpec::default() };
    // ζ decays like a power of t; control the relative error only.
    let o = OdeOptions { rtol: 1e-11, atol: 1e-300, ..OdeOptions::default() };
    let dd = (d + 1) as f64;
    let run = ode::solve(|t, y, dy| dy[0] = -t / (1.0 + t * t) * y[0] * (1.0 + y[0]) / (y[0] + 1.0 / dd), t0, &[zeta0], t_end, &o, spec);
    match run.stop {
        Stop::Reached => {}
        Stop::Event { t, .. } => return Err(Error::GaussMapDegenerate(format!("ζ reached −1/(d+1) at t = {t}"))),
        Stop::StepFailure { t } | Stop::MaxSteps { t } | Stop::Halted { t } => return Err(Error::StepFailure { t }),
    }
    let samples: Vec<ZetaSample> =
        run.observed.iter().map(|(t, y)| ZetaSample { t: *t, zeta: y[0], eta: eta_from_zeta(y[0], d).unwrap(), nu: nu(y[0], d) }).collect();
    let mut out = ZetaRun { d, samples, fit: None };
    out.fit = out.fit_window(t_end / 10.0, t_end);
    Ok(out)
}

// ---------------------------------------------------------------------------
// coefficient tensor B

/// Dense `B^{ijk}_{abc}` as an `n³ × n³` matrix acting by
/// `(BF)_{abc} = Σ B^{ijk}_{abc} F_{ijk}`; row index `abc`, column `ijk`.
pub fn b_matrix(zeta: f64, d: usize) -> Result<DMatrix<f64>> {
    let nu = nu(zeta, d);
    if !(nu > 0.0) {
        return Err(Error::GaussMapDegenerate(format!("ν = {nu} ≤ 0")));
    }
    let n = d + 1;
    let del = |x: usize, y: usize| if x == y { 1.0 } else { 0.0 };
    // τ^i τ_a in the frame: τ^i = δ^i_0, τ_a = −δ_a0
    let tt = |i: usize, a: usize| if i == 0 && a == 0 { -1.0 } else { 0.0 };
    let (p, q) = (1.0 / nu - 1.0, nu - 1.0);
    let idx = |a: usize, b: usize, c: usize| (a * n + b) * n + c;
    let mut m = DMatrix::zeros(n * n * n, n * n * n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for a in 0..n {
                    for b in 0..n {
                        for c in 0..n {
                            let t1 = del(i, a) * del(j, b) * del(k, c) - del(i, b) * del(j, a) * del(k, c);
                            let t2 = tt(i, a) * del(j, b) * del(k, c) - tt(i, b) * del(j, a) * del(k, c) + tt(i, a) * del(j, c) * del(k, b)
                                - tt(i, b) * del(j, c) * del(k, a);
                            let t3 = del(i, a) * del(j, b) * tt(k, c) - del(i, b) * del(j, a) * tt(k, c) + del(i, a) * del(j, c) * tt(k, b)
                                - del(i, b) * del(j, c) * tt(k, a);
                            let t4 = tt(i, a) * del(j, b) * tt(k, c) - tt(i, b) * del(j, a) * tt(k, c) + tt(i, a) * del(j, c) * tt(k, b)
                                - tt(i, b) * del(j, c) * tt(k, a);
                            m[(idx(a, b, c), idx(i, j, k))] = t1 - p * t2 - q * t3 + q * p * t4;
                        }
                    }
                }
            }
        }
    }
    Ok(m)
}

/// `F^{(αβγ)} = f^α⊗f^β⊗f^γ + f^α⊗f^γ⊗f^β − f^β⊗f^α⊗f^γ − f^γ⊗f^α⊗f^β`:
/// antisymmetric in the first two slots, symmetric under `β ↔ γ`.
pub fn f_tensor(alpha: usize, beta: usize, gamma: usize, d: usize) -> DVector<f64> {
    let n = d + 1;
    let mut v = DVector::zeros(n * n * n);
    let idx = |a: usize, b: usize, c: usize| (a * n + b) * n + c;
    v[idx(alpha, beta, gamma)] += 1.0;
    v[idx(alpha, gamma, beta)] += 1.0;
    v[idx(beta, alpha, gamma)] -= 1.0;
    v[idx(gamma, alpha, beta)] -= 1.0;
    v
}

/// Orthonormal basis of `span{F^{(αβγ)}}`, of dimension `n(n²−1)/3`.
pub fn f_span_basis(d: usize) -> DMatrix<f64> {
    let n = d + 1;
    let cols: Vec<DVector<f64>> = (0..n * n * n).map(|k| f_tensor(k / (n * n), (k / n) % n, k % n, d)).collect();
    let f = DMatrix::from_columns(&cols);
    let svd = f.svd(true, false);
    let u = svd.u.unwrap();
    let keep: Vec<usize> = (0..svd.singular_values.len()).filter(|&i| svd.singular_values[i] > 1e-10).collect();
    DMatrix::from_fn(u.nrows(), keep.len(), |r, c| u[(r, keep[c])])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BSpectrum {
    pub zeta: f64,
    pub d: usize,
    pub nu: f64,
    /// `(eigenvalue, multiplicity, eigenvectors)`.
    pub cases: Vec<(f64, usize, String)>,
    /// All eigenvalues with multiplicity, ascending.
    pub eigenvalues: Vec<f64>,
    pub invertible: bool,
}

/// Closed-form spectrum of `B` on `span{F}`.
///
/// - purely spatial `F^{(αβγ)}`: `2`, multiplicity `d(d²−1)/3`;
/// - `F^{(0βγ)}`: `2/ν`, multiplicity `d(d+1)/2`;
/// - `F^{(α00)}` and `F^{(β0γ)} − F^{(γ0β)}`: `2ν`, multiplicity `d(d+1)/2`.
///
/// The mixed block closes because `F^{(β0γ)} + F^{(γ0β)} = −F^{(0βγ)}`.
pub fn b_spectrum(zeta: f64, d: usize) -> Result<BSpectrum> {
    let nu = nu(zeta, d);
    if !(nu > 0.0) {
        return Err(Error::GaussMapDegenerate(format!("ν = {nu} ≤ 0")));
    }
    let cases = vec![
        (2.0, d * (d * d - 1) / 3, "spatial F(abc)".to_string()),
        (2.0 / nu, d * (d + 1) / 2, "F(0bc)".to_string()),
        (2.0 * nu, d * (d + 1) / 2, "F(a00), F(b0c) - F(c0b)".to_string()),
    ];
    let mut eigenvalues: Vec<f64> = cases.iter().flat_map(|(v, m, _)| std::iter::repeat_n(*v, *m)).collect();
    eigenvalues.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let invertible = eigenvalues.iter().all(|v| v.abs() > 0.0);
    Ok(BSpectrum { zeta, d, nu, cases, eigenvalues, invertible })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DenseSpectrum {
    /// Real parts, ascending.
    pub real: Vec<f64>,
    pub max_imag: f64,
    /// `‖BQ − Q(QᵀBQ)‖`: zero when `span{F}` is invariant.
    pub invariance_defect: f64,
}

/// Spectrum of `B` restricted to `span{F}` by dense eigendecomposition.
pub fn b_spectrum_dense(zeta: f64, d: usize) -> Result<DenseSpectrum> {
    let b = b_matrix(zeta, d)?;
    let q = f_span_basis(d);
    let bq = &b * &q;
    let r = q.transpose() * &bq;
    let invariance_defect = (&bq - &q * &r).norm();
    let ev = nalgebra::linalg::Schur::try_new(r, 1e-15, 100_000)
        .ok_or_else(|| Error::GuardBreach(format!("Schur iteration did not converge (ζ = {zeta}, d = {d})")))?
        .complex_eigenvalues();
    let mut real: Vec<f64> = ev.iter().map(|z| z.re).collect();
    real.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let max_imag = ev.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    Ok(DenseSpectrum { real, max_imag, invariance_defect })
}

// ---------------------------------------------------------------------------
// source tensor

/// Lowered frame components of
/// `M_abc = η (∇_fτ^f) [(3/d) ḡ_(ab τ_c) + (3/d) τ_aτ_bτ_c + ν⁻² τ_aτ_bτ_c]`,
/// flattened as `(a·n + b)·n + c`.
pub fn massterm(t: f64, zeta: f64, d: usize) -> Result<Vec<f64>> {
    let eta = eta_from_zeta(zeta, d)?;
    let nu = nu(zeta, d);
    let n = d + 1;
    let pre = eta * div_tau(t, d);
    let tau = |a: usize| if a == 0 { -1.0 } else { 0.0 };
    let dd = d as f64;
    let mut m = vec![0.0; n * n * n];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                let sym = (frame_eta(a, b) * tau(c) + frame_eta(b, c) * tau(a) + frame_eta(c, a) * tau(b)) / 3.0;
                let ttt = tau(a) * tau(b) * tau(c);
                m[(a * n + b) * n + c] = pre * (3.0 / dd * sym + 3.0 / dd * ttt + ttt / (nu * nu));
            }
        }
    }
    Ok(m)
}

pub fn massterm_norm(t: f64, zeta: f64, d: usize) -> Result<f64> {
    Ok(massterm(t, zeta, d)?.iter().map(|x| x * x).sum::<f64>().sqrt())
}

// ---------------------------------------------------------------------------
// main system residuals

/// Residuals of `∇_aφ_bc − ∇_bφ_ac = 0` and `(δ + 2ψ + ψψ)^a_b ∇_aφ^b_c = 0`
/// at one point, given `dphi[a][b][c] = ∇_aφ_bc` in the frame.
pub fn mainsystem_pointwise(phi: &FramePhi, dphi: &[Mat]) -> Result<(f64, f64)> {
    let n = phi.dim();
    let psi = psi_from_phi(phi)?.mixed();
    let mut p = matmul(&psi, &psi);
    for a in 0..n {
        for b in 0..n {
            p[a][b] += 2.0 * psi[a][b] + if a == b { 1.0 } else { 0.0 };
        }
    }
    let mut curl: f64 = 0.0;
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                curl = curl.max((dphi[a][b][c] - dphi[b][a][c]).abs());
            }
        }
    }
    let mut div: f64 = 0.0;
    for c in 0..n {
        // P^a_b ∇_a φ^b_c, with ∇_aφ^b_c = η^{bb} ∇_aφ_bc
        let mut s = 0.0;
        for a in 0..n {
            for b in 0..n {
                s += p[a][b] * frame_eta(b, b) * dphi[a][b][c];
            }
        }
        div = div.max(s.abs());
    }
    Ok((curl, div))
}

/// `∇_aφ_bc` on dS₂ at time `t` from the frame derivatives `e[a] = e_a(φ)` of
/// the components `(φ_00, φ_01, φ_11)`.
pub fn frame_covariant_derivative_1d(t: f64, phi: [f64; 3], e: [[f64; 3]; 2]) -> Vec<Mat> {
    let comp = |v: &[f64; 3], p: usize, q: usize| match (p.min(q), p.max(q)) {
        (0, 0) => v[0],
        (0, 1) => v[1],
        _ => v[2],
    };
    let gam = frame_christoffel_1d(t);
    let mut out = vec![zeros(2); 2];
    for a in 0..2 {
        for p in 0..2 {
            for q in 0..2 {
                let mut v = comp(&e[a], p, q);
                for s in 0..2 {
                    v -= gam[s][a][p] * comp(&phi, s, q) + gam[s][a][q] * comp(&phi, p, s);
                }
                out[a][p][q] = v;
            }
        }
    }
    out
}

/// Symmetric frame tensor field on a `(t, ω)` grid over dS₂, periodic in `ω`.
/// `comps[i][j] = [φ_00, φ_01, φ_11]` at `(t[i], 2πj/N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTensorField1D {
    pub t: Vec<f64>,
    pub n_omega: usize,
    pub comps: Vec<Vec<[f64; 3]>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MainSystemResidual {
    pub curl_max: f64,
    pub div_max: f64,
}

impl SymTensorField1D {
    pub fn from_fn(t: Vec<f64>, n_omega: usize, f: impl Fn(f64, f64) -> [f64; 3]) -> Self {
        let h = std::f64::consts::TAU / n_omega as f64;
        let comps = t.iter().map(|&ti| (0..n_omega).map(|j| f(ti, j as f64 * h)).collect()).collect();
        Self { t, n_omega, comps }
    }

    fn phi_at(&self, i: usize, j: usize) -> FramePhi {
        let [a, b, c] = self.comps[i][j];
        FramePhi { lower: vec![vec![a, b], vec![b, c]] }
    }

    /// `∇_aφ_bc` at interior node `(i, j)` from second-order central differences.
    pub fn covariant_derivative(&self, i: usize, j: usize) -> Vec<Mat> {
        let n = self.n_omega;
        let t = self.t[i];
        let (jp, jm) = ((j + 1) % n, (j + n - 1) % n);
        let hw = std::f64::consts::TAU / n as f64;
        let (tp, tm) = (self.t[i + 1], self.t[i - 1]);
        let mut dt = [0.0; 3];
        let mut dw = [0.0; 3];
        // nonuniform three-point first derivative in t
        let (h1, h2) = (t - tm, tp - t);
        for k in 0..3 {
            let (fm, f0, fp) = (self.comps[i - 1][j][k], self.comps[i][j][k], self.comps[i + 1][j][k]);
            dt[k] = (h1 * h1 * fp - h2 * h2 * fm + (h2 * h2 - h1 * h1) * f0) / (h1 * h2 * (h1 + h2));
            dw[k] = (self.comps[i][jp][k] - self.comps[i][jm][k]) / (2.0 * hw);
        }
        let b = jb(t);
        // frame derivatives e_0 = ⟨t⟩∂_t, e_1 = ⟨t⟩⁻¹∂_ω
        frame_covariant_derivative_1d(t, self.comps[i][j], [dt.map(|x| b * x), dw.map(|x| x / b)])
    }

    /// Max-norm residuals of the main system over interior time rows.
    pub fn residual_mainsystem(&self) -> Result<MainSystemResidual> {
        if self.t.len() < 3 {
            return domain("need at least three time rows");
        }
        let mut r = MainSystemResidual { curl_max: 0.0, div_max: 0.0 };
        for i in 1..self.t.len() - 1 {
            for j in 0..self.n_omega {
                let (c, d) = mainsystem_pointwise(&self.phi_at(i, j), &self.covariant_derivative(i, j))?;
                r.curl_max = r.curl_max.max(c);
                r.div_max = r.div_max.max(d);
            }
        }
        Ok(r)
    }
}
