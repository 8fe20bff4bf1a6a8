//! Mean curvature of timelike graphs in Minkowski space.
//!
//! Two settings:
//! - flat-chart graphs `y ↦ (y, φ(y))` over a timelike hyperplane, where
//!   `H = ∂_i(m^{ij}∂_jφ / √(1 + m^{kl}∂_kφ∂_lφ))`;
//! - normal graphs `X = x̄ + φ n̄` over de Sitter with `n̄ = −x̄`, so
//!   `X = (1−φ)x̄`.
//!
//! Sign convention: for normal graphs `H = h^{ab}⟨∂_a∂_bX, N⟩` with the unit
//! normal `N` oriented so that `⟨N, −x̄⟩ > 0`. Then de Sitter itself has
//! `H = +(d+1)`. The flat-chart formula with the upward normal gives the
//! hyperboloid the value `−(d+1)`.
//!
//! Normal-graph charts are `(t, θ_1, …, θ_d)` with `θ` gnomonic around the
//! base direction (the angle itself when `d = 1`). At `θ = 0` the sphere
//! metric is Euclidean to first order, so `Δφ = Σ_i ∂_{θ_i}²φ` there.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::dsgeom::{mink, sphere_tangent_basis, CylCoord};
use crate::error::{domain, Error, Result};
use crate::jet::{inverse_s, Jet, JetSpace, Scalar};

/// Value, gradient and Hessian of a height function in chart coordinates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Jet2 {
    pub value: f64,
    pub grad: Vec<f64>,
    pub hess: Vec<Vec<f64>>,
}

impl Jet2 {
    pub fn zero(n: usize) -> Self {
        Self { value: 0.0, grad: vec![0.0; n], hess: vec![vec![0.0; n]; n] }
    }

    /// Symmetrizes `hess`.
    pub fn new(value: f64, grad: Vec<f64>, hess: Vec<Vec<f64>>) -> Result<Self> {
        let n = grad.len();
        if n < 2 || hess.len() != n || hess.iter().any(|r| r.len() != n) {
            return domain("jet needs a gradient of length d+1 ≥ 2 and a matching Hessian");
        }
        let hess = (0..n).map(|i| (0..n).map(|j| 0.5 * (hess[i][j] + hess[j][i])).collect()).collect();
        Ok(Self { value, grad, hess })
    }

    pub fn dim(&self) -> usize {
        self.grad.len()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            value: s * self.value,
            grad: self.grad.iter().map(|x| s * x).collect(),
            hess: self.hess.iter().map(|r| r.iter().map(|x| s * x).collect()).collect(),
        }
    }

    /// Reads a 2-jet off a [`Jet`] in `grad.len()` variables.
    pub fn from_jet(j: &Jet, n: usize) -> Self {
        Self { value: j.value(), grad: (0..n).map(|i| j.d1(i)).collect(), hess: (0..n).map(|i| (0..n).map(|k| j.d2(i, k)).collect()).collect() }
    }

    /// 2-jet at `base` of `f(t, ω)` in the normal-graph chart. `f` receives
    /// `t` and the unit vector `ω(θ)` as jets.
    pub fn of_function(base: &CylCoord, f: impl Fn(&Jet, &[Jet]) -> Jet) -> Self {
        let d = base.d();
        let sp = JetSpace::get(d + 1, 2);
        let t = Jet::variable(&sp, 0, base.t);
        let om = chart_omega(&sp, base);
        Self::from_jet(&f(&t, &om), d + 1)
    }
}

/// `ω(θ) = (ω₀ + Σθ_i v_i)/√(1+|θ|²)` as jets in variables `1..=d`
/// (`(cos θ, sin θ)` rotated to `ω₀` when `d = 1`).
fn chart_omega(sp: &std::sync::Arc<JetSpace>, base: &CylCoord) -> Vec<Jet> {
    let d = base.d();
    let v = sphere_tangent_basis(&base.omega);
    if d == 1 {
        let th = Jet::variable(sp, 1, 0.0);
        let (c, s) = (th.cos(), th.sin());
        return (0..2).map(|k| &c * base.omega[k] + &s * v[0][k]).collect();
    }
    let thetas: Vec<Jet> = (0..d).map(|i| Jet::variable(sp, i + 1, 0.0)).collect();
    let r2 = thetas.iter().fold(Jet::constant(sp, 1.0), |acc, th| acc + th * th);
    let inv = r2.sqrt().recip();
    (0..=d)
        .map(|k| {
            let num = thetas.iter().enumerate().fold(Jet::constant(sp, base.omega[k]), |acc, (i, th)| acc + th * v[i][k]);
            num * &inv
        })
        .collect()
}

/// `1 + m^{ij}∂_iφ∂_jφ` with `m = diag(−1, 1, …, 1)`.
pub fn timelike_margin(grad: &[f64]) -> f64 {
    1.0 - grad[0] * grad[0] + grad[1..].iter().map(|g| g * g).sum::<f64>()
}

/// Flat-chart graph mean curvature, expanded from the divergence form.
pub fn graph_mean_curvature(j: &Jet2) -> Result<f64> {
    let n = j.dim();
    let m = |i: usize| if i == 0 { -1.0 } else { 1.0 };
    let w2 = timelike_margin(&j.grad);
    if w2 <= 0.0 {
        return domain(format!("graph is not timelike: 1 + m(∂φ,∂φ) = {w2}"));
    }
    let w = w2.sqrt();
    // ∂_i(m^{ij}φ_j/W) = m^{ii}φ_ii/W − m^{ii}φ_i · (m^{kk}φ_k φ_ki)/W³
    let mut lap = 0.0;
    let mut quad = 0.0;
    for i in 0..n {
        lap += m(i) * j.hess[i][i];
        for k in 0..n {
            quad += m(i) * j.grad[i] * m(k) * j.grad[k] * j.hess[k][i];
        }
    }
    Ok(lap / w - quad / (w * w2))
}

fn det_laplace<S: Scalar>(m: &[Vec<S>]) -> S {
    let n = m.len();
    if n == 1 {
        return m[0][0].clone();
    }
    if n == 2 {
        return m[0][0].clone() * m[1][1].clone() - m[0][1].clone() * m[1][0].clone();
    }
    let mut acc = m[0][0].cst(0.0);
    for c in 0..n {
        let minor: Vec<Vec<S>> = m[1..].iter().map(|r| r.iter().enumerate().filter(|&(k, _)| k != c).map(|(_, x)| x.clone()).collect()).collect();
        let term = m[0][c].clone() * det_laplace(&minor);
        acc = if c % 2 == 0 { acc + term } else { acc - term };
    }
    acc
}

/// Lower components of the unit normal `N_ν = (−1)^ν det(tangent rows without
/// column ν)`, normalized and oriented so that `⟨N, inward⟩ > 0`.
pub fn unit_normal<S: Scalar>(xa: &[Vec<S>], inward: &[f64]) -> Result<Vec<S>> {
    let dim = xa.len() + 1;
    let z = xa[0][0].cst(0.0);
    let sig = |mu: usize| if mu == 0 { -1.0 } else { 1.0 };
    let mut nl: Vec<S> = (0..dim)
        .map(|nu| {
            let minor: Vec<Vec<S>> = xa.iter().map(|r| r.iter().enumerate().filter(|&(c, _)| c != nu).map(|(_, x)| x.clone()).collect()).collect();
            let dt = det_laplace(&minor);
            if nu % 2 == 0 {
                dt
            } else {
                -dt
            }
        })
        .collect();
    let norm2 = (0..dim).fold(z.clone(), |acc, nu| acc + nl[nu].clone() * nl[nu].clone() * sig(nu));
    if norm2.val() <= 0.0 {
        return domain("normal is not spacelike");
    }
    let orient: f64 = (0..dim).map(|nu| nl[nu].val() * inward[nu]).sum();
    let inv = norm2.sqrt_s();
    let s = if orient < 0.0 { -1.0 } else { 1.0 };
    for x in nl.iter_mut() {
        *x = x.clone() * s / inv.clone();
    }
    Ok(nl)
}

/// Mean curvature of an immersion from its first and second chart derivatives.
/// `xa[a]` and `xab[a][b]` are ambient vectors in ℝ^{1,d+1}; `inward` fixes the
/// normal orientation (`⟨N, inward⟩ > 0`).
pub fn embedding_mean_curvature<S: Scalar>(xa: &[Vec<S>], xab: &[Vec<Vec<S>>], inward: &[f64]) -> Result<S> {
    let k = xa.len();
    let dim = k + 1;
    if xa.iter().any(|v| v.len() != dim) {
        return domain("tangent vectors must live in ℝ^{1,d+1}");
    }
    let z = xa[0][0].cst(0.0);
    let sig = |mu: usize| if mu == 0 { -1.0 } else { 1.0 };
    let h: Vec<Vec<S>> =
        (0..k).map(|a| (0..k).map(|b| (0..dim).fold(z.clone(), |acc, mu| acc + xa[a][mu].clone() * xa[b][mu].clone() * sig(mu))).collect()).collect();
    let hv = DMatrix::from_fn(k, k, |a, b| h[a][b].val());
    let eig = hv.symmetric_eigenvalues();
    let neg = eig.iter().filter(|&&e| e < 0.0).count();
    let tiny = eig.iter().any(|e| e.abs() < 1e-14 * (1.0 + hv.amax()));
    if neg != 1 || tiny {
        return Err(Error::Domain(format!("induced metric is not Lorentzian (eigenvalues {:?})", eig.as_slice())));
    }
    let nl = unit_normal(xa, inward)?;
    let hinv = inverse_s(&h).ok_or_else(|| Error::Domain("induced metric is singular".into()))?;
    let mut hsum = z.clone();
    for a in 0..k {
        for b in 0..k {
            let kab = (0..dim).fold(z.clone(), |acc, nu| acc + xab[a][b][nu].clone() * nl[nu].clone());
            hsum = hsum + hinv[a][b].clone() * kab;
        }
    }
    Ok(hsum)
}

/// Chart derivatives `∂_aX`, `∂_a∂_bX` of `X = (1−φ)x̄` at `θ = 0` with base
/// direction `ê₁` and tangent basis `ê₂, …`, plus the inward direction `−x̄`.
#[allow(clippy::type_complexity)]
pub fn graph_embedding<S: Scalar>(t: &S, value: &S, grad: &[S], hess: &[Vec<S>]) -> (Vec<Vec<S>>, Vec<Vec<Vec<S>>>, Vec<f64>) {
    let n = grad.len();
    let dim = n + 1;
    let d = n - 1;
    let z = t.cst(0.0);
    let w = (t.clone() * t.clone() + 1.0).sqrt_s();
    let r = t.clone() / w.clone();
    // x̄ and chart derivatives at θ = 0 with ω = ê₁, v_i = ê_{i+1}.
    let vec_with = |entries: &[(usize, S)]| {
        let mut v = vec![z.clone(); dim];
        for (i, x) in entries {
            v[*i] = x.clone();
        }
        v
    };
    let xb = vec_with(&[(0, t.clone()), (1, w.clone())]);
    let mut xd: Vec<Vec<S>> = Vec::with_capacity(n);
    xd.push(vec_with(&[(0, z.cst(1.0)), (1, r.clone())]));
    for i in 0..d {
        xd.push(vec_with(&[(i + 2, w.clone())]));
    }
    let w3 = w.clone() * w.clone() * w.clone();
    let mut xdd: Vec<Vec<Vec<S>>> = vec![vec![vec![z.clone(); dim]; n]; n];
    xdd[0][0] = vec_with(&[(1, z.cst(1.0) / w3)]);
    for i in 0..d {
        xdd[0][i + 1] = vec_with(&[(i + 2, r.clone())]);
        xdd[i + 1][0] = xdd[0][i + 1].clone();
        xdd[i + 1][i + 1] = vec_with(&[(1, -w.clone())]);
    }
    let one_m = z.cst(1.0) - value.clone();
    let xa: Vec<Vec<S>> = (0..n).map(|a| (0..dim).map(|mu| -(grad[a].clone() * xb[mu].clone()) + one_m.clone() * xd[a][mu].clone()).collect()).collect();
    let xab: Vec<Vec<Vec<S>>> = (0..n)
        .map(|a| {
            (0..n)
                .map(|b| {
                    (0..dim)
                        .map(|mu| {
                            -(hess[a][b].clone() * xb[mu].clone()) - grad[a].clone() * xd[b][mu].clone() - grad[b].clone() * xd[a][mu].clone()
                                + one_m.clone() * xdd[a][b][mu].clone()
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    let mut inward = vec![0.0; dim];
    inward[0] = -t.val();
    inward[1] = -w.val();
    (xa, xab, inward)
}

/// Normal-graph mean curvature from `t` and the chart 2-jet of `φ`, generic
/// over the scalar type. The base direction is `ê₁`, which is no loss since
/// `H` is rotation invariant.
pub fn normal_graph_mc_s<S: Scalar>(t: &S, value: &S, grad: &[S], hess: &[Vec<S>]) -> Result<S> {
    let (xa, xab, inward) = graph_embedding(t, value, grad, hess);
    embedding_mean_curvature(&xa, &xab, &inward)
}

/// Extrinsic data of a normal graph at one point, in ambient coordinates
/// where the base direction is `ê₁`.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphGeometry {
    pub tangents: Vec<Vec<f64>>,
    /// Induced metric `h_ab`.
    pub metric: Vec<Vec<f64>>,
    /// `k_ab = ⟨∂_a∂_bX, N⟩`.
    pub second_form: Vec<Vec<f64>>,
    /// Shape operator `W^a_b = h^{ac}k_cb`; the identity on dS.
    pub shape: Vec<Vec<f64>>,
    /// Upper components of the unit normal (inward).
    pub normal: Vec<f64>,
    pub mean_curvature: f64,
}

pub fn normal_graph_geometry(t: f64, jet: &Jet2) -> Result<GraphGeometry> {
    let (xa, xab, inward) = graph_embedding(&t, &jet.value, &jet.grad, &jet.hess);
    let mean_curvature = embedding_mean_curvature(&xa, &xab, &inward)?;
    let n = xa.len();
    let dim = n + 1;
    let sig = |mu: usize| if mu == 0 { -1.0 } else { 1.0 };
    let nl = unit_normal(&xa, &inward)?;
    let metric: Vec<Vec<f64>> = (0..n).map(|a| (0..n).map(|b| mink(&xa[a], &xa[b])).collect()).collect();
    let second_form: Vec<Vec<f64>> = (0..n).map(|a| (0..n).map(|b| (0..dim).map(|mu| xab[a][b][mu] * nl[mu]).sum()).collect()).collect();
    let hinv = inverse_s(&metric).ok_or_else(|| Error::Domain("induced metric is singular".into()))?;
    let shape = (0..n).map(|a| (0..n).map(|b| (0..n).map(|c| hinv[a][c] * second_form[c][b]).sum()).collect()).collect();
    let normal = (0..dim).map(|mu| sig(mu) * nl[mu]).collect();
    Ok(GraphGeometry { tangents: xa, metric, second_form, shape, normal, mean_curvature })
}

/// A normal graph over dS sampled at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalGraphPoint {
    pub base: CylCoord,
    pub jet: Jet2,
}

impl NormalGraphPoint {
    pub fn new(base: CylCoord, jet: Jet2) -> Result<Self> {
        if jet.dim() != base.d() + 1 {
            return domain("jet dimension must be d+1");
        }
        if !(jet.value < 1.0) {
            return domain("normal height must stay below 1 (the graph passes through the origin)");
        }
        Ok(Self { base, jet })
    }

    /// Ambient position `(1−φ)x̄`.
    pub fn position(&self) -> Vec<f64> {
        let x = crate::dsgeom::embed(&self.base);
        x.0.iter().map(|v| (1.0 - self.jet.value) * v).collect()
    }
}

pub fn normal_graph_mean_curvature(p: &NormalGraphPoint) -> Result<f64> {
    normal_graph_mc_s(&p.base.t, &p.jet.value, &p.jet.grad, &p.jet.hess)
}

/// `□φ + (d+1)φ` from the jet: `−⟨t⟩²φ_tt − (d+1)tφ_t + Δφ/⟨t⟩² + (d+1)φ`.
pub fn linearized_op(base: &CylCoord, j: &Jet2) -> f64 {
    let t = base.t;
    let d = (j.dim() - 1) as f64;
    let w2 = 1.0 + t * t;
    let lap: f64 = (1..j.dim()).map(|i| j.hess[i][i]).sum();
    -w2 * j.hess[0][0] - (d + 1.0) * t * j.grad[0] + lap / w2 + (d + 1.0) * j.value
}

/// Solves `H = target` for `φ_tt`, using that `H` is affine in `φ_tt`.
/// Returns `(φ_tt, κ)` with `κ = ∂H/∂φ_tt`; `|κ| < 0.1` is a guard breach.
pub fn solve_for_htt<S: Scalar>(t: &S, value: &S, grad: &[S], hess: &[Vec<S>], target: f64) -> Result<(S, S)> {
    let mut h0 = hess.to_vec();
    h0[0][0] = t.cst(0.0);
    let mut h1 = hess.to_vec();
    h1[0][0] = t.cst(1.0);
    let a = normal_graph_mc_s(t, value, grad, &h0)?;
    let b = normal_graph_mc_s(t, value, grad, &h1)?;
    let kappa = b - a.clone();
    if kappa.val().abs() < 0.1 {
        return Err(Error::GuardBreach(format!("∂H/∂φ_tt = {} too small", kappa.val())));
    }
    Ok(((a * -1.0 + target) / kappa.clone(), kappa))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearizationReport {
    pub eps: Vec<f64>,
    /// `(H(εψ) − H(−εψ))/(2ε)` for each `ε`.
    pub quotients: Vec<f64>,
    pub linearized: f64,
    pub errors: Vec<f64>,
    /// Log–log slope of `errors` against `eps`.
    pub order: f64,
    /// Richardson limit of the quotients minus the linearized value.
    pub limit_discrepancy: f64,
}

/// Central difference quotients of `H` along `ε ↦ εψ` at `base`, compared with
/// [`linearized_op`].
pub fn fd_linearization_check(base: &CylCoord, testfn: &Jet2, eps: &[f64]) -> Result<LinearizationReport> {
    if eps.len() < 2 {
        return domain("need at least two step sizes");
    }
    if testfn.dim() != base.d() + 1 {
        return domain("jet dimension must be d+1");
    }
    // The test function itself may have any height; only `±εψ` must be graphs.
    let lin = linearized_op(base, testfn);
    let quotients = eps
        .iter()
        .map(|&e| {
            let hp = normal_graph_mean_curvature(&NormalGraphPoint::new(base.clone(), testfn.scaled(e))?)?;
            let hm = normal_graph_mean_curvature(&NormalGraphPoint::new(base.clone(), testfn.scaled(-e))?)?;
            Ok((hp - hm) / (2.0 * e))
        })
        .collect::<Result<Vec<f64>>>()?;
    let errors: Vec<f64> = quotients.iter().map(|q| (q - lin).abs()).collect();
    let pts: Vec<(f64, f64)> = eps.iter().zip(&errors).filter(|(_, e)| **e > 0.0).map(|(x, e)| (x.ln(), e.ln())).collect();
    let order = if pts.len() >= 2 {
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    } else {
        f64::INFINITY
    };
    // Richardson on the two smallest steps, assuming an ε² error.
    let mut idx: Vec<usize> = (0..eps.len()).collect();
    idx.sort_by(|&a, &b| eps[a].total_cmp(&eps[b]));
    let (i, j) = (idx[0], idx[1]);
    let r = (eps[j] / eps[i]).powi(2);
    let limit = (r * quotients[i] - quotients[j]) / (r - 1.0);
    Ok(LinearizationReport { eps: eps.to_vec(), quotients, linearized: lin, errors, order, limit_discrepancy: (limit - lin).abs() })
}

/// Normal height of the translate `{y : ⟨y−ξ, y−ξ⟩ = 1}` over the point `x`:
/// `1 − s = ⟨x,ξ⟩ + √(⟨x,ξ⟩² − ⟨ξ,ξ⟩ + 1)`.
pub fn translated_height_s<S: Scalar>(x: &[S], xi: &[f64]) -> Result<S> {
    let z = x[0].cst(0.0);
    let xx = x.iter().enumerate().fold(z.clone(), |acc, (k, v)| acc + v.clone() * if k == 0 { -xi[0] } else { xi[k] });
    let disc = xx.clone() * xx.clone() - mink(xi, xi) + 1.0;
    if disc.val() < 0.0 {
        return Err(Error::Domain("translated hyperboloid misses this normal line".into()));
    }
    Ok(z.cst(1.0) - xx - disc.sqrt_s())
}

/// Height and chart 2-jet of the translate by `xi` over `c`.
pub fn translated_ds_graph(xi: &[f64], c: &CylCoord) -> Result<Jet2> {
    let d = c.d();
    if xi.len() != d + 2 {
        return domain("shift must live in ℝ^{1,d+1}");
    }
    let sp = JetSpace::get(d + 1, 2);
    let t = Jet::variable(&sp, 0, c.t);
    let om = chart_omega(&sp, c);
    let w = t.jb();
    let mut x = vec![t.clone()];
    x.extend(om.iter().map(|o| o * &w));
    let s = translated_height_s(&x, xi)?;
    Ok(Jet2::from_jet(&s, d + 1))
}
