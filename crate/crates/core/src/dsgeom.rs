//! de Sitter background geometry.
//!
//! dS is the unit hyperquadric `<x,x> = 1` in ℝ^{1,d+1} with signature
//! (−,+,…,+). Cylindrical coordinates `(t, ω)` embed as `x = (t, ⟨t⟩ω)`,
//! giving the metric `−⟨t⟩⁻² dt² + ⟨t⟩² dω²`. The unit future timelike field
//! is `τ = ⟨t⟩ ∂_t`, and the inward unit normal is `n = −x`.
//!
//! Every Minkowski contraction in the crate goes through [`mink`].

use crate::error::{domain, Error, Result};

/// Japanese bracket `⟨s⟩ = √(1+s²)`.
#[inline]
pub fn jb(s: f64) -> f64 {
    s.hypot(1.0)
}

/// Minkowski inner product on ℝ^{1,n}, signature (−,+,…,+).
#[inline]
pub fn mink(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    let mut s = -x[0] * y[0];
    for i in 1..x.len() {
        s += x[i] * y[i];
    }
    s
}

/// A point of dS in cylindrical coordinates. `omega` is a unit vector in ℝ^{d+1}.
#[derive(Debug, Clone, PartialEq)]
pub struct CylCoord {
    pub t: f64,
    pub omega: Vec<f64>,
}

impl CylCoord {
    /// Rejects `omega` off the unit sphere by more than 1e-12, then renormalizes.
    pub fn new(t: f64, omega: Vec<f64>) -> Result<Self> {
        if omega.len() < 2 {
            return domain("omega must live in R^{d+1} with d >= 1");
        }
        let r = omega.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !r.is_finite() || (r - 1.0).abs() > 1e-12 {
            return domain(format!("|omega| = {r}, expected 1"));
        }
        let omega = omega.into_iter().map(|v| v / r).collect();
        Ok(Self { t, omega })
    }

    /// d = 1 angle chart: `ω = (cos θ, sin θ)`.
    pub fn from_angle(t: f64, theta: f64) -> Self {
        Self { t, omega: vec![theta.cos(), theta.sin()] }
    }

    /// `ω = ê₁` in ℝ^{d+1}.
    pub fn pole(t: f64, d: usize) -> Self {
        let mut omega = vec![0.0; d + 1];
        omega[0] = 1.0;
        Self { t, omega }
    }

    pub fn d(&self) -> usize {
        self.omega.len() - 1
    }
}

/// A vector of ℝ^{1,d+1}; index 0 is the time component.
#[derive(Debug, Clone, PartialEq)]
pub struct AmbientPoint(pub Vec<f64>);

impl AmbientPoint {
    pub fn norm2(&self) -> f64 {
        mink(&self.0, &self.0)
    }
}

/// Orthonormal frame of dS at a point: `τ`, spatial `e_i`, and the normal `n = −x`.
#[derive(Debug, Clone)]
pub struct FrameData {
    pub tau: Vec<f64>,
    pub spatial: Vec<Vec<f64>>,
    pub normal: Vec<f64>,
}

impl FrameData {
    /// Frame vector `a`: index 0 is τ, 1..=d the spatial vectors.
    pub fn vector(&self, a: usize) -> &[f64] {
        if a == 0 {
            &self.tau
        } else {
            &self.spatial[a - 1]
        }
    }
}

/// `(g_tt, g_ωω) = (−⟨t⟩⁻², ⟨t⟩²)`.
pub fn metric_components(t: f64) -> (f64, f64) {
    let b2 = 1.0 + t * t;
    (-1.0 / b2, b2)
}

pub fn embed(c: &CylCoord) -> AmbientPoint {
    let b = jb(c.t);
    let mut x = Vec::with_capacity(c.omega.len() + 1);
    x.push(c.t);
    x.extend(c.omega.iter().map(|w| b * w));
    AmbientPoint(x)
}

/// Inverse of [`embed`] for a point on dS.
pub fn cyl_of(x: &[f64]) -> CylCoord {
    let t = x[0];
    let r = x[1..].iter().map(|v| v * v).sum::<f64>().sqrt();
    CylCoord { t, omega: x[1..].iter().map(|v| v / r).collect() }
}

/// `τ = ⟨t⟩∂_t` pushed into ambient components: `(⟨t⟩, t ω)`.
pub fn tau_ambient(c: &CylCoord) -> Vec<f64> {
    let mut v = Vec::with_capacity(c.omega.len() + 1);
    v.push(jb(c.t));
    v.extend(c.omega.iter().map(|w| c.t * w));
    v
}

/// Boost field `K_i = x⁰∂_i + xⁱ∂_0`, `1 ≤ i ≤ d+1`.
pub fn boost_field(x: &[f64], i: usize) -> Vec<f64> {
    let mut k = vec![0.0; x.len()];
    k[0] = x[i];
    k[i] = x[0];
    k
}

/// `g(K_i, K_i) = (x⁰)² − (xⁱ)²`.
pub fn boost_norm(x: &AmbientPoint, i: usize) -> f64 {
    let x = &x.0;
    x[0] * x[0] - x[i] * x[i]
}

/// τ assembled as `Σ_{i=1}^{d+1} xⁱ K_i / ⟨x⁰⟩`.
pub fn tau_from_boosts(x: &[f64]) -> Vec<f64> {
    let b = jb(x[0]);
    let mut v = vec![0.0; x.len()];
    for i in 1..x.len() {
        let k = boost_field(x, i);
        for (vm, km) in v.iter_mut().zip(&k) {
            *vm += x[i] * km / b;
        }
    }
    v
}

/// Orthonormal tangent basis of the unit sphere at `omega` (Gram–Schmidt; for d=1 the
/// counterclockwise tangent `(−ω₂, ω₁)`, matching the angle chart).
pub fn sphere_tangent_basis(omega: &[f64]) -> Vec<Vec<f64>> {
    let n = omega.len();
    if n == 2 {
        return vec![vec![-omega[1], omega[0]]];
    }
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n - 1);
    let mut kept = vec![omega.to_vec()];
    // Seed with standard vectors ordered by smallest overlap with omega.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| omega[a].abs().partial_cmp(&omega[b].abs()).unwrap());
    for &k in &order {
        if basis.len() == n - 1 {
            break;
        }
        let mut v = vec![0.0; n];
        v[k] = 1.0;
        for u in &kept {
            let p: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
            for (vi, ui) in v.iter_mut().zip(u) {
                *vi -= p * ui;
            }
        }
        let r = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if r > 1e-8 {
            v.iter_mut().for_each(|a| *a /= r);
            kept.push(v.clone());
            basis.push(v);
        }
    }
    basis
}

/// Orthonormal frame at `c`. Spatial vectors are `(0, v_i)` with `v_i ⊥ ω`.
pub fn frame(c: &CylCoord) -> FrameData {
    let tau = tau_ambient(c);
    let spatial = sphere_tangent_basis(&c.omega)
        .into_iter()
        .map(|v| {
            let mut e = Vec::with_capacity(v.len() + 1);
            e.push(0.0);
            e.extend(v);
            e
        })
        .collect();
    let normal = embed(c).0.into_iter().map(|v| -v).collect();
    FrameData { tau, spatial, normal }
}

/// Coefficient of `∇_b τ^c = (t/⟨t⟩)(δ_b^c + τ_b τ^c)`.
pub fn grad_tau(t: f64) -> f64 {
    t / jb(t)
}

/// Divergence `∇_a τ^a = d · t/⟨t⟩`.
pub fn div_tau(t: f64, d: usize) -> f64 {
    d as f64 * grad_tau(t)
}

/// Metric of the static chart: `−(1−ρ²)dζ² + dρ²/(1−ρ²) + ρ² dΩ²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StaticMetric {
    pub g_zeta: f64,
    pub g_rho: f64,
    pub g_sphere: f64,
}

/// Static chart on `{x^{d+1} > |x⁰|}`; `z` is a unit vector in ℝᵈ.
pub fn static_chart(zeta: f64, rho: f64, z: &[f64]) -> Result<(AmbientPoint, StaticMetric)> {
    if !(rho.abs() < 1.0) {
        return Err(Error::ChartDegenerate(rho.abs()));
    }
    let d = z.len();
    let s = (1.0 - rho * rho).sqrt();
    let mut x = vec![0.0; d + 2];
    x[0] = s * zeta.sinh();
    x[d + 1] = s * zeta.cosh();
    for (m, zm) in z.iter().enumerate() {
        x[m + 1] = rho * zm;
    }
    let q = 1.0 - rho * rho;
    Ok((AmbientPoint(x), StaticMetric { g_zeta: -q, g_rho: 1.0 / q, g_sphere: rho * rho }))
}

/// `(area, tweight) = (⟨t⟩ᵈ, ⟨t⟩^{2−d})`.
pub fn volume_weights(t: f64, d: usize) -> (f64, f64) {
    let b = jb(t);
    (b.powi(d as i32), b.powi(2 - d as i32))
}

/// Connection of the d=1 orthonormal frame `(e₀, e₁) = (⟨t⟩∂_t, ⟨t⟩⁻¹∂_ω)`:
/// `gamma[a][b][c] = Γ^a_{bc}` with `∇_{e_b} e_c = Γ^a_{bc} e_a`.
/// Nonzero entries: `Γ¹₁₀ = Γ⁰₁₁ = t/⟨t⟩`.
pub fn frame_christoffel_1d(t: f64) -> [[[f64; 2]; 2]; 2] {
    let h = grad_tau(t);
    let mut g = [[[0.0; 2]; 2]; 2];
    g[1][1][0] = h;
    g[0][1][1] = h;
    g
}

/// Frame metric `ḡ = diag(−1, 1, …, 1)` entry.
#[inline]
pub fn eta(a: usize, b: usize) -> f64 {
    if a != b {
        0.0
    } else if a == 0 {
        -1.0
    } else {
        1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn unit(v: Vec<f64>) -> Vec<f64> {
        let r = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        v.into_iter().map(|a| a / r).collect()
    }

    #[test]
    fn jb_values() {
        assert_eq!(jb(0.0), 1.0);
        assert_relative_eq!(jb(1.0), 2f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(jb(-3.0), 10f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn metric_values() {
        assert_eq!(metric_components(0.0), (-1.0, 1.0));
        let (a, b) = metric_components(1.0);
        assert_relative_eq!(a, -0.5);
        assert_relative_eq!(b, 2.0);
        let (a, b) = metric_components(3.0);
        assert_relative_eq!(a, -0.1, epsilon = 1e-15);
        assert_relative_eq!(b, 10.0, epsilon = 1e-14);
    }

    #[test]
    fn embed_values() {
        assert_eq!(embed(&CylCoord::pole(0.0, 2)).0, vec![0.0, 1.0, 0.0, 0.0]);
        let x = embed(&CylCoord::pole(1.0, 1)).0;
        assert_relative_eq!(x[0], 1.0);
        assert_relative_eq!(x[1], 2f64.sqrt());
        assert_eq!(x[2], 0.0);
    }

    #[test]
    fn grad_tau_values() {
        assert_eq!(grad_tau(0.0), 0.0);
        assert_relative_eq!(grad_tau(1.0), 1.0 / 2f64.sqrt(), epsilon = 1e-15);
        let mut prev = -1.0;
        for k in 0..50 {
            let v = grad_tau(k as f64 * 10.0);
            assert!(v > prev && v < 1.0 + 1e-15);
            prev = v;
        }
    }

    #[test]
    fn static_chart_origin_and_error() {
        let (x, g) = static_chart(0.0, 0.0, &[1.0, 0.0]).unwrap();
        assert_eq!(x.0, vec![0.0, 0.0, 0.0, 1.0]);
        assert_eq!(g.g_zeta, -1.0);
        assert_eq!(static_chart(0.3, 1.0, &[1.0]), Err(Error::ChartDegenerate(1.0)));
        assert!(static_chart(0.3, -1.2, &[1.0]).is_err());
    }

    #[test]
    fn boost_norm_values() {
        let x = AmbientPoint(vec![0.0, 0.0, 0.0, 1.0]);
        assert_eq!(boost_norm(&x, 3), -1.0);
        let c = CylCoord::new(2.0, unit(vec![1.0, 2.0, 2.0])).unwrap();
        let mut x = embed(&c);
        // put x on the horizon hyperplane x⁰ = x¹
        x.0[0] = x.0[1];
        assert_eq!(boost_norm(&x, 1), 0.0);
        let x = AmbientPoint(vec![0.0, 0.0, 1.0, 0.0]);
        assert_eq!(boost_norm(&x, 1), 0.0);
    }

    #[test]
    fn volume_weight_values() {
        assert_eq!(volume_weights(0.0, 2), (1.0, 1.0));
        let (a, w) = volume_weights(1.0, 2);
        assert_relative_eq!(a, 2.0, epsilon = 1e-15);
        assert_eq!(w, 1.0);
        let (a, w) = volume_weights(3.0, 1);
        assert_relative_eq!(a, 10f64.sqrt());
        assert_relative_eq!(w, 10f64.sqrt());
    }

    #[test]
    fn cylcoord_rejects_non_unit() {
        assert!(CylCoord::new(0.0, vec![1.0, 1.0]).is_err());
        assert!(CylCoord::new(0.0, vec![1.0]).is_err());
    }

    // Pushes ∂_t through the embedding by central differences and compares
    // with τ assembled from the boost fields.
    fn check_tau(t: f64, omega: Vec<f64>) {
        let c = CylCoord::new(t, omega).unwrap();
        let h = 1e-6;
        let xp = embed(&CylCoord { t: t + h, omega: c.omega.clone() }).0;
        let xm = embed(&CylCoord { t: t - h, omega: c.omega.clone() }).0;
        let b = jb(t);
        let fd: Vec<f64> = xp.iter().zip(&xm).map(|(p, m)| b * (p - m) / (2.0 * h)).collect();
        let from_boosts = tau_from_boosts(&embed(&c).0);
        let exact = tau_ambient(&c);
        for k in 0..fd.len() {
            assert!((fd[k] - from_boosts[k]).abs() < 1e-8 * b.max(1.0), "fd {k}");
            assert!((exact[k] - from_boosts[k]).abs() < 1e-12 * b.max(1.0));
        }
    }

    #[test]
    fn tau_assembly_matches_coordinate_field() {
        check_tau(0.7, vec![0.6, 0.8]);
        check_tau(-2.0, unit(vec![1.0, -2.0, 0.5]));
        check_tau(0.0, unit(vec![0.3, 0.1, 0.2, -0.9]));
    }

    // ∇_e τ along a unit spatial direction: differentiate τ along the great circle
    // with unit speed and project tangent to dS. Expect (t/⟨t⟩) e.
    fn check_grad_tau(t: f64, omega: Vec<f64>) {
        let c = CylCoord::new(t, omega).unwrap();
        let fr = frame(&c);
        let x = embed(&c).0;
        let h = 1e-6;
        let b = jb(t);
        for e in &fr.spatial {
            let v = &e[1..];
            let at = |s: f64| {
                let a = s / b;
                let w: Vec<f64> = c.omega.iter().zip(v).map(|(o, vv)| o * a.cos() + vv * a.sin()).collect();
                tau_ambient(&CylCoord { t, omega: w })
            };
            let tp = at(h);
            let tm = at(-h);
            let mut dt: Vec<f64> = tp.iter().zip(&tm).map(|(p, m)| (p - m) / (2.0 * h)).collect();
            let nx = mink(&dt, &x);
            for (k, val) in dt.iter_mut().enumerate() {
                *val -= nx * x[k];
            }
            for k in 0..dt.len() {
                assert!((dt[k] - grad_tau(t) * e[k]).abs() < 1e-6, "component {k}");
            }
        }
    }

    #[test]
    fn grad_tau_matches_finite_differences() {
        check_grad_tau(1.3, vec![0.0, 1.0]);
        check_grad_tau(-0.4, vec![0.8, -0.6]);
        check_grad_tau(2.0, unit(vec![1.0, 1.0, 1.0]));
        check_grad_tau(0.5, unit(vec![-0.2, 0.4, 0.9]));
    }

    #[test]
    fn frame_connection_matches_torsion_free_bracket() {
        // [e0, e1] = −(t/⟨t⟩) e1 in d = 1; check Γ¹₀₁ − Γ¹₁₀ = −t/⟨t⟩.
        let t = 0.8;
        let g = frame_christoffel_1d(t);
        assert_relative_eq!(g[1][0][1] - g[1][1][0], -grad_tau(t));
        assert_relative_eq!(g[0][0][1] - g[0][1][0], 0.0);
    }

    proptest! {
        #[test]
        fn embed_on_hyperquadric(t in -50.0f64..50.0, a in 0.0f64..6.3, b in -1.0f64..1.0) {
            let w = vec![a.cos() * (1.0 - b * b).sqrt(), a.sin() * (1.0 - b * b).sqrt(), b];
            let c = CylCoord::new(t, w).unwrap();
            let x = embed(&c);
            prop_assert!((x.norm2() - 1.0).abs() <= 1e-12 * (1.0 + t * t));
            let fr = frame(&c);
            let s = 1.0 + t * t;
            prop_assert!((mink(&fr.tau, &fr.tau) + 1.0).abs() <= 1e-12 * s);
            prop_assert!((mink(&fr.normal, &fr.normal) - 1.0).abs() <= 1e-12 * s);
            prop_assert!(mink(&fr.normal, &fr.tau).abs() <= 1e-12 * s);
            for (i, e) in fr.spatial.iter().enumerate() {
                prop_assert!(mink(e, &fr.tau).abs() <= 1e-12 * s);
                prop_assert!(mink(e, &fr.normal).abs() <= 1e-12 * s);
                for (j, f) in fr.spatial.iter().enumerate() {
                    let want = if i == j { 1.0 } else { 0.0 };
                    prop_assert!((mink(e, f) - want).abs() <= 1e-12);
                }
            }
        }

        #[test]
        fn static_chart_on_hyperquadric(z in -5.0f64..5.0, r in -0.999f64..0.999, a in 0.0f64..6.3) {
            let (x, g) = static_chart(z, r, &[a.cos(), a.sin()]).unwrap();
            prop_assert!((x.norm2() - 1.0).abs() <= 1e-12 * z.cosh().powi(2));
            let kk = boost_field(&x.0, 3);
            prop_assert!((mink(&kk, &kk) - g.g_zeta).abs() <= 1e-12 * z.cosh().powi(2));
            prop_assert!((boost_norm(&x, 3) - g.g_zeta).abs() <= 1e-12 * z.cosh().powi(2));
        }

        #[test]
        fn boost_norm_is_minkowski_contraction(t in -5.0f64..5.0, a in 0.0f64..6.3, i in 1usize..3) {
            let x = embed(&CylCoord::from_angle(t, a));
            let k = boost_field(&x.0, i);
            prop_assert!((mink(&k, &k) - boost_norm(&x, i)).abs() <= 1e-12 * (1.0 + t * t));
        }

        #[test]
        fn boost_norm_sign_changes_only_across_horizons(a in 0.0f64..6.3, t0 in -3.0f64..3.0, t1 in -3.0f64..3.0) {
            // Along the segment t ∈ [t0,t1] at fixed angle, a sign change of g(K₁,K₁)
            // requires crossing x⁰ = ±x¹.
            let f = |t: f64| { let x = embed(&CylCoord::from_angle(t, a)); (boost_norm(&x, 1), x.0[0] - x.0[1], x.0[0] + x.0[1]) };
            let (n0, p0, q0) = f(t0);
            let (n1, p1, q1) = f(t1);
            if n0 * n1 < 0.0 {
                prop_assert!(p0 * p1 <= 0.0 || q0 * q1 <= 0.0);
            }
        }
    }
}
