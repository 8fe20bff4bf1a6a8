//! Quadratic stress tensor for symmetric two-tensors solving the
//! variable-coefficient div-curl system
//!
//! ```text
//! ∇̄_a φ_bc − ∇̄_b φ_ac = 0,    g^{ab} ∇̄_a φ_bc = F_c.
//! ```
//!
//! Everything is in the orthonormal frame `(τ, e_1, …, e_d)`, `n = d+1`, frame
//! metric `η`; indices move with `η`. `τ^a = δ^a_0` and `τ_a = −δ_a^0`, so a
//! contraction against `τ_aτ_bτ^cτ^d` is just the `(0,0,0,0)` component.
//!
//! Tensors are flat row-major arrays: `Z[m][n][a][b] = Z^{mn}|^a_b`,
//! `S[a][b][c][d] = S^{ab}_{cd}`.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use crate::dsgeom::{eta, frame_christoffel_1d, jb};
use crate::error::{domain, Result};
use crate::igm::FramePhi;
use crate::jet::{Jet, JetSpace};
use crate::linmodes::{LinearField1D, LinearTrajectory};

#[inline]
fn i4(n: usize, a: usize, b: usize, c: usize, d: usize) -> usize {
    ((a * n + b) * n + c) * n + d
}

#[inline]
fn kd(a: usize, b: usize) -> f64 {
    if a == b {
        1.0
    } else {
        0.0
    }
}

/// Frame components `g^{(μ)(ν)}` of the coefficient tensor.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoeffMetric {
    pub upper: Vec<Vec<f64>>,
}

impl CoeffMetric {
    /// `ḡ^{ab} = η`.
    pub fn background(d: usize) -> Self {
        let n = d + 1;
        Self { upper: (0..n).map(|a| (0..n).map(|b| eta(a, b)).collect()).collect() }
    }

    /// Symmetrizes its input.
    pub fn new(m: Vec<Vec<f64>>) -> Result<Self> {
        let n = m.len();
        if n < 2 || m.iter().any(|r| r.len() != n) {
            return domain("coefficient matrix must be square of size d+1 ≥ 2");
        }
        let upper = (0..n).map(|a| (0..n).map(|b| 0.5 * (m[a][b] + m[b][a])).collect()).collect();
        Ok(Self { upper })
    }

    pub fn dim(&self) -> usize {
        self.upper.len()
    }

    /// `max |g − ḡ|` over frame components.
    pub fn deviation(&self) -> f64 {
        let n = self.dim();
        (0..n).flat_map(|a| (0..n).map(move |b| (a, b))).fold(0.0, |m, (a, b)| m.max((self.upper[a][b] - eta(a, b)).abs()))
    }

    /// Deviation below `1/(8(d+1))`.
    pub fn near_background(&self) -> bool {
        self.deviation() < 1.0 / (8.0 * self.dim() as f64)
    }
}

/// `S^{ab}_{cd}` at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct StressValue {
    pub n: usize,
    pub c: Vec<f64>,
}

impl StressValue {
    pub fn get(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        self.c[i4(self.n, a, b, c, d)]
    }

    /// `S^{ab}_{cd} τ_aτ_bτ^cτ^d`.
    pub fn tttt(&self) -> f64 {
        self.get(0, 0, 0, 0)
    }

    /// `max |S^{ab}_{cd} − S^{ba}_{dc}|`.
    pub fn pair_symmetry_defect(&self) -> f64 {
        let n = self.n;
        let mut m: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        m = m.max((self.get(a, b, c, d) - self.get(b, a, d, c)).abs());
                    }
                }
            }
        }
        m
    }

    pub fn max_abs_diff(&self, o: &StressValue) -> f64 {
        self.c.iter().zip(&o.c).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
    }
}

/// `Z^{mn}|^a_b = g^{mn}δ^a_b − g^{an}δ^m_b − g^{ma}δ^n_b`.
pub fn z_tensor(g: &CoeffMetric) -> Vec<f64> {
    let n = g.dim();
    let u = &g.upper;
    let mut z = vec![0.0; n * n * n * n];
    for m in 0..n {
        for nn in 0..n {
            for a in 0..n {
                for b in 0..n {
                    z[i4(n, m, nn, a, b)] = u[m][nn] * kd(a, b) - u[a][nn] * kd(m, b) - u[m][a] * kd(nn, b);
                }
            }
        }
    }
    z
}

/// `S^{ab}_{cd} = φ_mo φ_np Z^{mn}|^a_c Z^{op}|^b_d`.
pub fn s_tensor(g: &CoeffMetric, phi: &FramePhi) -> StressValue {
    let n = g.dim();
    let z = z_tensor(g);
    let p = &phi.lower;
    // W^{ac}_{op} = φ_mo φ_np Z^{mn}|^a_c, then contract with Z^{op}|^b_d.
    let mut w = vec![0.0; n * n * n * n];
    for a in 0..n {
        for c in 0..n {
            for o in 0..n {
                for pp in 0..n {
                    let mut s = 0.0;
                    for m in 0..n {
                        for nn in 0..n {
                            s += p[m][o] * p[nn][pp] * z[i4(n, m, nn, a, c)];
                        }
                    }
                    w[i4(n, a, c, o, pp)] = s;
                }
            }
        }
    }
    let mut out = vec![0.0; n * n * n * n];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    let mut s = 0.0;
                    for o in 0..n {
                        for pp in 0..n {
                            s += w[i4(n, a, c, o, pp)] * z[i4(n, o, pp, b, d)];
                        }
                    }
                    out[i4(n, a, b, c, d)] = s;
                }
            }
        }
    }
    StressValue { n, c: out }
}

/// The same tensor from its fully expanded four-term form.
pub fn s_tensor_expanded(g: &CoeffMetric, phi: &FramePhi) -> StressValue {
    let n = g.dim();
    let u = &g.upper;
    let p = &phi.lower;
    // A_{np}^{·} helpers: (φg)_d^{b} = φ_{md} g^{mb}, and the scalar φ_mo φ_np g^{mn} g^{op}.
    let pg = |d: usize, b: usize| (0..n).map(|m| p[m][d] * u[m][b]).sum::<f64>();
    let mut scal = 0.0;
    for m in 0..n {
        for o in 0..n {
            for nn in 0..n {
                for pp in 0..n {
                    scal += p[m][o] * p[nn][pp] * u[m][nn] * u[o][pp];
                }
            }
        }
    }
    let mut out = vec![0.0; n * n * n * n];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    let mut s = scal * kd(a, c) * kd(b, d);
                    // −2 φ_md φ_np g^{mn} g^{bp} δ^a_c
                    let mut t2 = 0.0;
                    for nn in 0..n {
                        t2 += pg(d, nn) * pg(nn, b);
                    }
                    s -= 2.0 * t2 * kd(a, c);
                    // −2 φ_co φ_np g^{op} g^{an} δ^b_d
                    let mut t3 = 0.0;
                    for pp in 0..n {
                        t3 += pg(c, pp) * pg(pp, a);
                    }
                    s -= 2.0 * t3 * kd(b, d);
                    // 2 (φ_cd φ_np + φ_cp φ_nd) g^{na} g^{pb}
                    let mut t4 = 0.0;
                    for nn in 0..n {
                        for pp in 0..n {
                            t4 += (p[c][d] * p[nn][pp] + p[c][pp] * p[nn][d]) * u[nn][a] * u[pp][b];
                        }
                    }
                    s += 2.0 * t4;
                    out[i4(n, a, b, c, d)] = s;
                }
            }
        }
    }
    StressValue { n, c: out }
}

/// Full symmetrization of `(3/4) ḡ_{ea} S^{ef}_{cd} ḡ_{bf}` over all four slots.
pub fn brendle_q(s: &StressValue) -> Vec<f64> {
    let n = s.n;
    let low = |a: usize, b: usize, c: usize, d: usize| eta(a, a) * eta(b, b) * s.get(a, b, c, d);
    let perms: [[usize; 4]; 24] = {
        let mut v = [[0; 4]; 24];
        let mut k = 0;
        for i in 0..4 {
            for j in 0..4 {
                for l in 0..4 {
                    for m in 0..4 {
                        if i != j && i != l && i != m && j != l && j != m && l != m {
                            v[k] = [i, j, l, m];
                            k += 1;
                        }
                    }
                }
            }
        }
        v
    };
    let mut q = vec![0.0; n * n * n * n];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    let idx = [a, b, c, d];
                    let sum: f64 = perms.iter().map(|p| low(idx[p[0]], idx[p[1]], idx[p[2]], idx[p[3]])).sum();
                    q[i4(n, a, b, c, d)] = 0.75 * sum / 24.0;
                }
            }
        }
    }
    q
}

// ---------------------------------------------------------------------------
// coercivity

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoercivityReport {
    /// `min(A,B)/(4(d+1))`.
    pub margin: f64,
    /// Largest hypothesis deviation; must be `< margin`.
    pub worst_hypothesis: f64,
    pub hypotheses_hold: bool,
    pub lhs: f64,
    pub rhs: f64,
    /// `None` when the hypotheses fail.
    pub holds: Option<bool>,
}

/// `Sττττ ≥ (min(A,B)²/2) Σ φ_(i)(j)²` whenever `g` is within the margin of
/// `diag(−A, B, …, B)`.
pub fn coercivity_check(g: &CoeffMetric, a: f64, b: f64, phi: &FramePhi) -> Result<CoercivityReport> {
    if !(a > 0.0 && b > 0.0) {
        return domain("A and B must be positive");
    }
    let n = g.dim();
    let mn = a.min(b);
    let margin = mn / (4.0 * n as f64);
    let mut worst: f64 = 0.0;
    for mu in 0..n {
        for nu in 0..n {
            let target = if mu != nu {
                0.0
            } else if mu == 0 {
                -a
            } else {
                b
            };
            worst = worst.max((g.upper[mu][nu] - target).abs());
        }
    }
    let hyp = worst < margin;
    let lhs = s_tensor(g, phi).tttt();
    let rhs = 0.5 * mn * mn * phi.lower.iter().flatten().map(|x| x * x).sum::<f64>();
    Ok(CoercivityReport { margin, worst_hypothesis: worst, hypotheses_hold: hyp, lhs, rhs, holds: hyp.then_some(lhs >= rhs) })
}

// ---------------------------------------------------------------------------
// deformation

/// `(⟨t⟩/t) S^{ab}_{cd} ∇̄_a(τ_bτ^cτ^d) + (d−2) Sττττ`, assembled exactly from
/// `∇̄_bτ^c = (t/⟨t⟩)(δ^c_b + τ_bτ^c)`. The weight cancels, so the value does
/// not depend on `t`; `t = 0` is still rejected because the weight is singular.
pub fn deformation_term(t: f64, g: &CoeffMetric, phi: &FramePhi) -> Result<f64> {
    if t == 0.0 || !t.is_finite() {
        return domain("deformation weight ⟨t⟩/t is singular at t = 0");
    }
    let n = g.dim();
    let d = (n - 1) as f64;
    let s = s_tensor(g, phi);
    let tl = |a: usize| if a == 0 { -1.0 } else { 0.0 };
    let tu = |a: usize| kd(a, 0);
    let proj = |a: usize, c: usize| kd(a, c) + tl(a) * tu(c);
    let mut acc = 0.0;
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for dd in 0..n {
                    let k = (eta(a, b) + tl(a) * tl(b)) * tu(c) * tu(dd) + tl(b) * proj(a, c) * tu(dd) + tl(b) * tu(c) * proj(a, dd);
                    if k != 0.0 {
                        acc += s.get(a, b, c, dd) * k;
                    }
                }
            }
        }
    }
    Ok(acc + (d - 2.0) * s.tttt())
}

/// Background main terms
/// `4φ_moφ_np[(ḡ^{mp}+τ^mτ^p)τ^nτ^o + (ḡ^{mo}+τ^mτ^o)τ^nτ^p] + 2(d−1)φ_moφ_npτ^mτ^n(ḡ^{op}+2τ^oτ^p)`.
/// Equals [`deformation_term`] at `g = ḡ` for trace-free `φ`.
pub fn deformation_main_terms(phi: &FramePhi) -> f64 {
    let n = phi.dim();
    let d = (n - 1) as f64;
    let p = &phi.lower;
    let tu = |a: usize| kd(a, 0);
    let pr = |a: usize, b: usize| eta(a, b) + tu(a) * tu(b);
    let mut s = 0.0;
    for m in 0..n {
        for o in 0..n {
            for nn in 0..n {
                for pp in 0..n {
                    let k = 4.0 * (pr(m, pp) * tu(nn) * tu(o) + pr(m, o) * tu(nn) * tu(pp))
                        + 2.0 * (d - 1.0) * tu(m) * tu(nn) * (eta(o, pp) + 2.0 * tu(o) * tu(pp));
                    s += p[m][o] * p[nn][pp] * k;
                }
            }
        }
    }
    s
}

/// `|φ·τ|² = Σ_a φ_0a²` in the `ḡ + 2τ⊗τ` norm.
pub fn phi_tau_sq(phi: &FramePhi) -> f64 {
    phi.lower[0].iter().map(|x| x * x).sum()
}

// ---------------------------------------------------------------------------
// divergence identity on dS₂

/// Metric coefficients `(g^{00}, g^{01}, g^{11})` as functions of `(t, ω)`.
pub type CoeffFn<'a> = &'a dyn Fn(&Jet, &Jet) -> [Jet; 3];

/// Smooth fields on dS₂ given in the cylinder chart `(t, ω)`.
///
/// `φ = ∇̄∇̄p + p ḡ` is curl-free for any potential `p`; the source is then
/// `F_c = g^{ab}∇̄_aφ_bc`. If `p` solves the linearized equation and `g = ḡ`,
/// `F = 0` and `φ` is trace-free.
pub struct AnalyticField1D<'a> {
    pub potential: &'a dyn Fn(&Jet, &Jet) -> Jet,
    /// Frame components `(g^{00}, g^{01}, g^{11})`; `None` means `ḡ`.
    pub coeff: Option<CoeffFn<'a>>,
}

/// Pointwise data of an [`AnalyticField1D`].
#[derive(Debug, Clone)]
pub struct PointData1D {
    pub phi: FramePhi,
    /// `dphi[a][b][c] = ∇̄_a φ_bc`.
    pub dphi: Vec<Vec<Vec<f64>>>,
    pub g: CoeffMetric,
    /// `dg[c][m][n] = ∇̄_c g^{mn}`.
    pub dg: Vec<Vec<Vec<f64>>>,
    pub f: [f64; 2],
}

fn frame_derivative(j: &Jet, t: f64) -> [f64; 2] {
    [jb(t) * j.d1(0), j.d1(1) / jb(t)]
}

/// Hessian-type frame components `(φ00, φ01, φ11)` as jets, valid one degree
/// below the input's validity minus two.
fn hessian_components(p: &Jet, t: &Jet) -> [Jet; 3] {
    let pt = p.derivative(0);
    let pw = p.derivative(1);
    let ptt = pt.derivative(0);
    let ptw = pt.derivative(1);
    let pww = pw.derivative(1);
    let w = t * t + 1.0;
    let phi00 = &w * &ptt + t * &pt - p;
    let phi01 = &ptw - &(t * &pw) / &w;
    let phi11 = &pww / &w - t * &pt + p;
    [phi00, phi01, phi11]
}

impl AnalyticField1D<'_> {
    pub fn point(&self, t: f64, omega: f64) -> PointData1D {
        let sp = JetSpace::get(2, 3);
        let tj = Jet::variable(&sp, 0, t);
        let wj = Jet::variable(&sp, 1, omega);
        let p = (self.potential)(&tj, &wj);
        let h = hessian_components(&p, &tj);
        let comp = |b: usize, c: usize| match (b, c) {
            (0, 0) => &h[0],
            (1, 1) => &h[2],
            _ => &h[1],
        };
        let phi = FramePhi::from_lower(vec![vec![h[0].value(), h[1].value()], vec![h[1].value(), h[2].value()]]);
        let gam = frame_christoffel_1d(t);
        let mut dphi = vec![vec![vec![0.0; 2]; 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                for c in 0..2 {
                    let mut v = frame_derivative(comp(b, c), t)[a];
                    for e in 0..2 {
                        v -= gam[e][a][b] * phi.lower[e][c] + gam[e][a][c] * phi.lower[b][e];
                    }
                    dphi[a][b][c] = v;
                }
            }
        }
        let gj: [Jet; 3] = match self.coeff {
            Some(f) => f(&tj, &wj),
            None => [Jet::constant(&sp, -1.0), Jet::constant(&sp, 0.0), Jet::constant(&sp, 1.0)],
        };
        let gcomp = |m: usize, n: usize| match (m, n) {
            (0, 0) => &gj[0],
            (1, 1) => &gj[2],
            _ => &gj[1],
        };
        let g = CoeffMetric { upper: vec![vec![gj[0].value(), gj[1].value()], vec![gj[1].value(), gj[2].value()]] };
        let mut dg = vec![vec![vec![0.0; 2]; 2]; 2];
        for c in 0..2 {
            for m in 0..2 {
                for n in 0..2 {
                    let mut v = frame_derivative(gcomp(m, n), t)[c];
                    for e in 0..2 {
                        v += gam[m][c][e] * g.upper[e][n] + gam[n][c][e] * g.upper[m][e];
                    }
                    dg[c][m][n] = v;
                }
            }
        }
        let mut f = [0.0; 2];
        for (c, fc) in f.iter_mut().enumerate() {
            for a in 0..2 {
                for b in 0..2 {
                    *fc += g.upper[a][b] * dphi[a][b][c];
                }
            }
        }
        PointData1D { phi, dphi, g, dg, f }
    }

    fn stress_at(&self, t: f64, omega: f64) -> StressValue {
        let sp = JetSpace::get(2, 2);
        let tj = Jet::variable(&sp, 0, t);
        let wj = Jet::variable(&sp, 1, omega);
        let p = (self.potential)(&tj, &wj);
        let h = hessian_components(&p, &tj);
        let phi = FramePhi::from_lower(vec![vec![h[0].value(), h[1].value()], vec![h[1].value(), h[2].value()]]);
        let g = match self.coeff {
            Some(f) => {
                let gj = f(&tj, &wj);
                CoeffMetric { upper: vec![vec![gj[0].value(), gj[1].value()], vec![gj[1].value(), gj[2].value()]] }
            }
            None => CoeffMetric::background(1),
        };
        s_tensor(&g, &phi)
    }
}

/// `∇̄_a S^{ab}_{cd}` from the right-hand side of the divergence identity,
/// which uses `φ`, `g`, `∇̄g` and `F` only. Indexed `[b][c][d]`.
pub fn divergence_rhs(pt: &PointData1D) -> Vec<f64> {
    let n = 2;
    let p = &pt.phi.lower;
    let u = &pt.g.upper;
    let dg = &pt.dg;
    let f = pt.f;
    // ∇_c(g^{mn} g^{op})
    let dgg = |c: usize, m: usize, nn: usize, o: usize, pp: usize| dg[c][m][nn] * u[o][pp] + u[m][nn] * dg[c][o][pp];
    let mut out = vec![0.0; n * n * n];
    for b in 0..n {
        for c in 0..n {
            for d in 0..n {
                let mut s = 0.0;
                for m in 0..n {
                    for o in 0..n {
                        for nn in 0..n {
                            for pp in 0..n {
                                s += kd(b, d) * p[m][o] * p[nn][pp] * dgg(c, m, nn, o, pp);
                            }
                        }
                    }
                }
                for m in 0..n {
                    for nn in 0..n {
                        for pp in 0..n {
                            s -= 2.0 * p[m][d] * p[nn][pp] * dgg(c, m, nn, b, pp);
                        }
                    }
                }
                for o in 0..n {
                    for nn in 0..n {
                        for pp in 0..n {
                            for a in 0..n {
                                s -= 2.0 * kd(b, d) * p[c][o] * p[nn][pp] * dgg(a, o, pp, a, nn);
                            }
                        }
                    }
                }
                for o in 0..n {
                    for pp in 0..n {
                        s -= 2.0 * kd(b, d) * p[c][o] * u[o][pp] * f[pp];
                    }
                }
                for nn in 0..n {
                    for pp in 0..n {
                        for a in 0..n {
                            s += 2.0 * (p[c][d] * p[nn][pp] + p[c][pp] * p[nn][d]) * dgg(a, nn, a, pp, b);
                        }
                    }
                }
                for pp in 0..n {
                    s += 2.0 * p[c][d] * u[pp][b] * f[pp] + 2.0 * p[c][pp] * u[pp][b] * f[d];
                }
                out[(b * n + c) * n + d] = s;
            }
        }
    }
    out
}

/// `∇̄_a S^{ab}_{cd}` by central differences of `S` with chart step `h`.
pub fn divergence_fd(field: &AnalyticField1D<'_>, t: f64, omega: f64, h: f64) -> Vec<f64> {
    let n = 2;
    let s0 = field.stress_at(t, omega);
    let (stp, stm) = (field.stress_at(t + h, omega), field.stress_at(t - h, omega));
    let (swp, swm) = (field.stress_at(t, omega + h), field.stress_at(t, omega - h));
    let gam = frame_christoffel_1d(t);
    let e = |a: usize, b: usize, c: usize, d: usize, dir: usize| {
        let k = i4(n, a, b, c, d);
        if dir == 0 {
            jb(t) * (stp.c[k] - stm.c[k]) / (2.0 * h)
        } else {
            (swp.c[k] - swm.c[k]) / (2.0 * h * jb(t))
        }
    };
    let mut out = vec![0.0; n * n * n];
    for b in 0..n {
        for c in 0..n {
            for d in 0..n {
                let mut s = 0.0;
                for a in 0..n {
                    s += e(a, b, c, d, a);
                    for q in 0..n {
                        s += gam[a][a][q] * s0.get(q, b, c, d) + gam[b][a][q] * s0.get(a, q, c, d);
                        s -= gam[q][a][c] * s0.get(a, b, q, d) + gam[q][a][d] * s0.get(a, b, c, q);
                    }
                }
                out[(b * n + c) * n + d] = s;
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DivergenceConvergence {
    pub steps: Vec<f64>,
    /// Largest discrepancy between the two assemblies at each step.
    pub discrepancy: Vec<f64>,
    /// Observed orders between consecutive steps.
    pub orders: Vec<f64>,
    /// Largest `|∇̄_aS^{ab}_{cd}|` from the identity (scale reference).
    pub rhs_scale: f64,
    /// Largest curl residual of `φ` at the sample points.
    pub curl: f64,
}

impl DivergenceConvergence {
    pub fn order(&self) -> f64 {
        *self.orders.last().unwrap_or(&f64::NAN)
    }
}

/// Compares both assemblies of `∇̄·S` at `points` for steps `h0/2^k`.
pub fn s_divergence_identity(field: &AnalyticField1D<'_>, points: &[(f64, f64)], h0: f64, levels: usize) -> DivergenceConvergence {
    let mut rhs_scale: f64 = 0.0;
    let mut curl: f64 = 0.0;
    let exact: Vec<Vec<f64>> = points
        .iter()
        .map(|&(t, w)| {
            let pd = field.point(t, w);
            for a in 0..2 {
                for b in 0..2 {
                    for c in 0..2 {
                        curl = curl.max((pd.dphi[a][b][c] - pd.dphi[b][a][c]).abs());
                    }
                }
            }
            let r = divergence_rhs(&pd);
            rhs_scale = r.iter().fold(rhs_scale, |m, x| m.max(x.abs()));
            r
        })
        .collect();
    let steps: Vec<f64> = (0..levels).map(|k| h0 / 2f64.powi(k as i32)).collect();
    let discrepancy: Vec<f64> = steps
        .iter()
        .map(|&h| {
            points.iter().zip(&exact).fold(0.0f64, |m, (&(t, w), ex)| {
                let fd = divergence_fd(field, t, w, h);
                fd.iter().zip(ex).fold(m, |m, (x, y)| m.max((x - y).abs()))
            })
        })
        .collect();
    let orders = discrepancy.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    DivergenceConvergence { steps, discrepancy, orders, rhs_scale, curl }
}

// ---------------------------------------------------------------------------
// energies on dS₂

/// Frame tensor `φ = ∇̄∇̄p + pḡ` on a slice, from `p`, `∂_tp` and the
/// linearized equation for `∂_t²p`. Entries are `(φ00, φ01, φ11)`.
pub fn hessian_slice(field: &LinearField1D) -> Vec<[f64; 3]> {
    let t = field.t;
    let w = 1.0 + t * t;
    let c = field.circle();
    let (_, pw, pww) = c.jets(&field.phi, false);
    let ptw = c.derivative(&field.dphi, 1);
    (0..field.n())
        .map(|j| {
            let (p, pt) = (field.phi[j], field.dphi[j]);
            let ptt = (2.0 * p - 2.0 * t * pt + pww[j] / w) / w;
            [w * ptt + t * pt - p, ptw[j] - t * pw[j] / w, pww[j] / w - t * pt + p]
        })
        .collect()
}

/// `E = ⟨t⟩² ∫ S ττττ dω` on a slice of dS₂ (trapezoid rule, spectrally
/// accurate for periodic data). `g = None` means `ḡ`.
pub fn weighted_energy(t: f64, phi: &[[f64; 3]], g: Option<&[[f64; 3]]>) -> f64 {
    let n = phi.len();
    let bg = CoeffMetric::background(1);
    let dens: f64 = (0..n)
        .map(|j| {
            let p = phi[j];
            let fp = FramePhi::from_lower(vec![vec![p[0], p[1]], vec![p[1], p[2]]]);
            let gm = match g {
                Some(gv) => CoeffMetric { upper: vec![vec![gv[j][0], gv[j][1]], vec![gv[j][1], gv[j][2]]] },
                None => bg.clone(),
            };
            s_tensor(&gm, &fp).tttt()
        })
        .sum();
    (1.0 + t * t) * std::f64::consts::TAU / n as f64 * dens
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyAudit {
    pub check: String,
    pub samples: usize,
    pub energy_start: f64,
    pub energy_end: f64,
    /// `E(t₂) + 2(d+1)∫∫(t/⟨t⟩)w|φ·τ|² dV − E(t₁)`.
    pub left: f64,
    /// Trace term plus coefficient-derivative term.
    pub right: f64,
    pub constant: f64,
    /// Quadrature slack allowed on top of `constant·right`.
    pub slack: f64,
    pub max_violation: f64,
    pub pass: bool,
}

/// Basic energy inequality along a linear dS₂ trajectory, with `g = ḡ`, `F = 0`.
/// The time integral uses the trapezoid rule over the snapshots, so the slack
/// is set from the snapshot spacing.
pub fn basic_energy_audit(traj: &LinearTrajectory) -> EnergyAudit {
    let snaps = &traj.snapshots;
    let (mut bulk_prev, mut tr_prev) = (None::<f64>, None::<f64>);
    let mut bulk = 0.0;
    let mut trace_term = 0.0;
    let mut energies = Vec::with_capacity(snaps.len());
    let mut t_prev = snaps[0].t;
    let mut max_bulk_density: f64 = 0.0;
    for s in snaps {
        let phi = hessian_slice(s);
        let t = s.t;
        let w = jb(t);
        let e = weighted_energy(t, &phi, None);
        energies.push(e);
        let n = phi.len();
        let dw = std::f64::consts::TAU / n as f64;
        // d = 1: dV = dt dω, weight ⟨t⟩, so the integrand is 4 t |φ·τ|².
        let bd: f64 = phi.iter().map(|p| 4.0 * (t / w) * w * (p[0] * p[0] + p[1] * p[1])).sum::<f64>() * dw;
        let td: f64 = phi.iter().map(|p| w * (p[0] * p[0] + 2.0 * p[1] * p[1] + p[2] * p[2]).sqrt() * (p[2] - p[0]).abs()).sum::<f64>() * dw;
        max_bulk_density = max_bulk_density.max(bd.abs());
        if let (Some(bp), Some(tp)) = (bulk_prev, tr_prev) {
            let h = t - t_prev;
            bulk += 0.5 * h * (bp + bd);
            trace_term += 0.5 * h * (tp + td);
        }
        bulk_prev = Some(bd);
        tr_prev = Some(td);
        t_prev = t;
    }
    let e0 = energies[0];
    let e1 = *energies.last().expect("nonempty");
    let left = e1 + bulk - e0;
    let right = trace_term;
    let constant = 4.0;
    let span = snaps.last().map(|s| s.t).unwrap_or(0.0) - snaps[0].t;
    let hmax = snaps.windows(2).fold(0.0f64, |m, w| m.max(w[1].t - w[0].t));
    let slack = 1e-8 * e0.abs().max(e1.abs()) + max_bulk_density * span * (hmax / span.max(1e-300)).powi(2);
    let excess = left - constant * right;
    EnergyAudit {
        check: "basic_energy".into(),
        samples: snaps.len(),
        energy_start: e0,
        energy_end: e1,
        left,
        right,
        constant,
        slack,
        max_violation: excess.max(0.0),
        pass: excess <= slack,
    }
}

/// `sup E ≤ 2 E(t₀)` along a recorded energy history.
pub fn energy_bound_audit(times: &[f64], energy: &[f64]) -> Result<EnergyAudit> {
    if energy.is_empty() || times.len() != energy.len() {
        return domain("energy history must be nonempty with one time per value");
    }
    let e0 = energy[0];
    let worst = energy.iter().fold(f64::NEG_INFINITY, |m, &e| m.max(e - 2.0 * e0));
    Ok(EnergyAudit {
        check: "energy_bound".into(),
        samples: energy.len(),
        energy_start: e0,
        energy_end: *energy.last().expect("nonempty"),
        left: energy.iter().fold(f64::NEG_INFINITY, |m, &e| m.max(e)),
        right: 2.0 * e0,
        constant: 1.0,
        slack: 0.0,
        max_violation: worst.max(0.0),
        pass: worst <= 0.0,
    })
}

// ---------------------------------------------------------------------------
// randomized audit

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub check: String,
    pub samples: usize,
    pub max_violation: f64,
    pub pass: bool,
}

fn random_phi(rng: &mut ChaCha20Rng, n: usize) -> FramePhi {
    let m: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    FramePhi::from_lower(m)
}

fn trace_free(phi: &FramePhi) -> FramePhi {
    let n = phi.dim();
    let tr = phi.trace();
    let mut l = phi.lower.clone();
    for (a, row) in l.iter_mut().enumerate() {
        row[a] -= tr / n as f64 * eta(a, a);
    }
    FramePhi { lower: l }
}

/// Randomized pointwise checks in dimension `d`: dual-path assembly, pair
/// symmetry, coercivity within the hypothesis margin, and nonnegativity of the
/// background deformation for trace-free `φ`.
pub fn stress_audit(seed: u64, samples: usize, d: usize) -> Result<Vec<AuditReport>> {
    if d < 1 {
        return domain("dimension d must be ≥ 1");
    }
    let n = d + 1;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let (mut dual, mut sym, mut coer, mut deform) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..samples {
        let a = rng.random_range(0.5..2.0);
        let b = rng.random_range(0.5..2.0);
        let margin = f64::min(a, b) / (4.0 * n as f64);
        let mut m: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        if i != j {
                            0.0
                        } else if i == 0 {
                            -a
                        } else {
                            b
                        }
                    })
                    .collect()
            })
            .collect();
        for i in 0..n {
            for j in i..n {
                let e = rng.random_range(-0.9..0.9) * margin;
                m[i][j] += e;
                if i != j {
                    m[j][i] += e;
                }
            }
        }
        let g = CoeffMetric::new(m)?;
        let phi = random_phi(&mut rng, n);
        let s1 = s_tensor(&g, &phi);
        let s2 = s_tensor_expanded(&g, &phi);
        let scale = 1.0 + s1.c.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        dual = dual.max(s1.max_abs_diff(&s2) / scale);
        sym = sym.max(s1.pair_symmetry_defect() / scale);
        let rep = coercivity_check(&g, a, b, &phi)?;
        if rep.hypotheses_hold {
            coer = coer.max(rep.rhs - rep.lhs);
        }
        let tf = trace_free(&phi);
        deform = deform.max(-deformation_term(1.0, &CoeffMetric::background(d), &tf)?);
    }
    let mk = |check: &str, v: f64, tol: f64| AuditReport { check: check.into(), samples, max_violation: v.max(0.0), pass: v <= tol };
    Ok(vec![mk("dual_path", dual, 1e-12), mk("pair_symmetry", sym, 1e-13), mk("coercivity", coer, 0.0), mk("deformation_sign", deform, 1e-12)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linmodes::{evolve_linear_1d, LinearMethod, ModeOptions};
    use proptest::prelude::*;

    fn phi_of(m: &[&[f64]]) -> FramePhi {
        FramePhi::from_lower(m.iter().map(|r| r.to_vec()).collect())
    }

    #[test]
    fn z_contractions_at_background() {
        for d in 1..=4 {
            let n = d + 1;
            let g = CoeffMetric::background(d);
            let z = z_tensor(&g);
            for m in 0..n {
                for nn in 0..n {
                    let tr: f64 = (0..n).map(|a| z[i4(n, m, nn, a, a)]).sum();
                    assert!((tr - (d as f64 - 1.0) * eta(m, nn)).abs() < 1e-15);
                    // τ_a = −δ_a0, τ^c = δ^c_0
                    let tt = -z[i4(n, m, nn, 0, 0)];
                    let want = -eta(m, nn) - 2.0 * kd(m, 0) * kd(nn, 0);
                    assert!((tt - want).abs() < 1e-15);
                    assert_eq!(z[i4(n, m, nn, 1, 0)], z[i4(n, nn, m, 1, 0)]);
                }
            }
        }
    }

    #[test]
    fn zero_and_scaling() {
        let g = CoeffMetric::background(2);
        assert!(s_tensor(&g, &FramePhi::zero(3)).c.iter().all(|&x| x == 0.0));
        let phi = phi_of(&[&[0.3, -0.2, 0.5], &[-0.2, 1.1, 0.0], &[0.5, 0.0, -0.7]]);
        let s1 = s_tensor(&g, &phi);
        for s in [2.0, 3.0] {
            let ss = s_tensor(&g, &phi.scaled(s));
            assert!(ss.c.iter().zip(&s1.c).all(|(x, y)| (x - s * s * y).abs() < 1e-12));
        }
    }

    #[test]
    fn single_time_component_closed_form() {
        // φ = e⁰⊗e⁰: Sττττ = φ00² (ḡ^{00})² ... reduces to 1.
        for d in 1..=3 {
            let n = d + 1;
            let mut l = vec![vec![0.0; n]; n];
            l[0][0] = 1.0;
            let phi = FramePhi::from_lower(l);
            let s = s_tensor(&CoeffMetric::background(d), &phi);
            assert!((s.tttt() - 1.0).abs() < 1e-15);
            let r = coercivity_check(&CoeffMetric::background(d), 1.0, 1.0, &phi).unwrap();
            assert!(r.hypotheses_hold && r.holds == Some(true));
        }
    }

    #[test]
    fn brendle_normalization_is_totally_symmetric() {
        let g = CoeffMetric::background(2);
        let phi = phi_of(&[&[0.3, -0.2, 0.5], &[-0.2, 1.1, 0.4], &[0.5, 0.4, -0.7]]);
        let q = brendle_q(&s_tensor(&g, &phi));
        let n = 3;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let v = q[i4(n, a, b, c, d)];
                        for &(x, y, z, w) in &[(b, a, c, d), (a, c, b, d), (a, b, d, c), (d, b, c, a)] {
                            assert!((v - q[i4(n, x, y, z, w)]).abs() < 1e-12);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn deformation_matches_main_terms_and_equals_bulk_density() {
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        for d in 1..=4 {
            for _ in 0..200 {
                let phi = trace_free(&random_phi(&mut rng, d + 1));
                let exact = deformation_term(0.7, &CoeffMetric::background(d), &phi).unwrap();
                let main = deformation_main_terms(&phi);
                assert!((exact - main).abs() < 1e-10 * (1.0 + main.abs()));
                assert!((exact - 2.0 * (d as f64 + 1.0) * phi_tau_sq(&phi)).abs() < 1e-10 * (1.0 + exact));
            }
        }
        assert!(deformation_term(0.0, &CoeffMetric::background(1), &FramePhi::zero(2)).is_err());
        assert_eq!(deformation_term(2.0, &CoeffMetric::background(2), &FramePhi::zero(3)).unwrap(), 0.0);
    }

    #[test]
    fn randomized_audit_passes() {
        for d in 1..=3 {
            for r in stress_audit(11, 2000, d).unwrap() {
                assert!(r.pass, "d={d} {r:?}");
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn dual_path_and_pair_symmetry(seed in any::<u64>(), d in 1usize..4, scale in 0.0f64..3.0) {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let n = d + 1;
            let m: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| eta(i, j) + rng.random_range(-scale..scale)).collect()).collect();
            let g = CoeffMetric::new(m).unwrap();
            let phi = random_phi(&mut rng, n);
            let s1 = s_tensor(&g, &phi);
            let s2 = s_tensor_expanded(&g, &phi);
            let sc = 1.0 + s1.c.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            prop_assert!(s1.max_abs_diff(&s2) <= 1e-12 * sc);
            prop_assert!(s1.pair_symmetry_defect() <= 1e-13 * sc);
        }

        #[test]
        fn coercive_near_scaled_background(seed in any::<u64>(), a in 0.3f64..3.0, b in 0.3f64..3.0) {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            for d in 1..=3 {
                let n = d + 1;
                let margin = a.min(b) / (4.0 * n as f64);
                let mut m: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i != j { 0.0 } else if i == 0 { -a } else { b }).collect()).collect();
                for i in 0..n {
                    for j in 0..n {
                        let e = 0.9 * margin * if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                        m[i][j] += e;
                    }
                }
                let g = CoeffMetric::new(m).unwrap();
                let phi = random_phi(&mut rng, n);
                let r = coercivity_check(&g, a, b, &phi).unwrap();
                prop_assert!(r.hypotheses_hold);
                prop_assert_eq!(r.holds, Some(true));
            }
        }
    }

    fn mode_potential(t: &Jet, w: &Jet) -> Jet {
        // k = 2 closed-form mode times cos 2ω
        let a = t.atan() * 2.0;
        (a.cos() * 2.0 + t * &a.sin()) * (w * 2.0).cos()
    }

    #[test]
    fn hessian_of_a_mode_is_a_traceless_solution() {
        let field = AnalyticField1D { potential: &mode_potential, coeff: None };
        for &(t, w) in &[(0.3, 0.2), (1.5, 2.0), (-0.8, 4.0)] {
            let pd = field.point(t, w);
            let (curl, div) = crate::igm::mainsystem_pointwise(&FramePhi::zero(2), &pd.dphi).unwrap();
            assert!(curl < 1e-12 && div < 1e-12, "{curl} {div}");
            assert!(pd.phi.trace().abs() < 1e-12);
            assert!(pd.f.iter().all(|x| x.abs() < 1e-12));
        }
    }

    #[test]
    fn divergence_free_for_modes_at_second_order() {
        let field = AnalyticField1D { potential: &mode_potential, coeff: None };
        let pts = [(0.4, 0.3), (1.2, 1.9), (2.5, 5.0)];
        let rep = s_divergence_identity(&field, &pts, 0.02, 4);
        assert!(rep.rhs_scale < 1e-12);
        assert!((rep.order() - 2.0).abs() <= 0.2, "{rep:?}");
    }

    #[test]
    fn divergence_identity_with_variable_coefficients() {
        let pot = |t: &Jet, w: &Jet| (t * 0.4 + w.sin()).exp() * 0.3 + t * t * w.cos();
        let coeff = |t: &Jet, w: &Jet| {
            let e = (t * 0.5).sin() * w.cos() * 0.05;
            [e.clone() - 1.0, (t + w).cos() * 0.03, e * -1.0 + 1.0 + (w * 2.0).sin() * 0.02]
        };
        let field = AnalyticField1D { potential: &pot, coeff: Some(&coeff) };
        let pts = [(0.4, 0.3), (1.2, 1.9), (-0.7, 5.0)];
        let rep = s_divergence_identity(&field, &pts, 0.02, 4);
        assert!(rep.curl < 1e-12);
        assert!(rep.rhs_scale > 1e-2);
        assert!((rep.order() - 2.0).abs() <= 0.2, "{rep:?}");
    }

    #[test]
    fn energy_coercive_and_quadratic() {
        let f = LinearField1D::from_fn(64, 1.5, |w| (0.3 * (2.0 * w).cos() + 0.1 * w.sin(), -0.2 * (3.0 * w).sin())).unwrap();
        let phi = hessian_slice(&f);
        let e = weighted_energy(f.t, &phi, None);
        let l2: f64 = phi.iter().map(|p| p[0] * p[0] + 2.0 * p[1] * p[1] + p[2] * p[2]).sum::<f64>() * std::f64::consts::TAU / 64.0;
        assert!(e >= 0.5 * (1.0 + f.t * f.t) * l2);
        let phi3: Vec<[f64; 3]> = phi.iter().map(|p| [3.0 * p[0], 3.0 * p[1], 3.0 * p[2]]).collect();
        assert!((weighted_energy(f.t, &phi3, None) - 9.0 * e).abs() < 1e-12 * e);
        let zero = vec![[0.0; 3]; 16];
        assert_eq!(weighted_energy(2.0, &zero, None), 0.0);
    }

    #[test]
    fn basic_energy_identity_on_a_linear_run() {
        let f0 = LinearField1D::from_fn(64, 0.5, |w| (0.2 * (2.0 * w).cos() + 0.1 * (3.0 * w).sin(), 0.05 * (2.0 * w).sin())).unwrap();
        let times: Vec<f64> = (1..400).map(|k| 0.5 + 0.01 * k as f64).collect();
        let traj = evolve_linear_1d(&f0, 4.5, &times, LinearMethod::Spectral, &ModeOptions { rtol: 1e-12, atol: 1e-14 }).unwrap();
        let rep = basic_energy_audit(&traj);
        assert!(rep.pass, "{rep:?}");
        assert!(rep.right < 1e-9);
        // Identity, not just inequality: the left side vanishes to quadrature error.
        assert!(rep.left.abs() < 1e-3 * rep.energy_start, "{rep:?}");
        assert!(rep.energy_end < rep.energy_start);
    }
}
