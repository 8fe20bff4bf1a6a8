//! Truncated multivariate Taylor arithmetic.
//!
//! A [`Jet`] stores Taylor coefficients `c_α = ∂^α f / α!` of a function of
//! `nv` variables around a base point, up to total degree `valid`. Products
//! and elementary functions are exact up to that degree, so geometric
//! quantities built from an embedding jet carry exact derivatives.
//!
//! [`Scalar`] abstracts over `f64` and `Jet` so the same kernels run on plain
//! numbers (fast path) and on jets (derivative path).

use std::collections::HashMap;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

/// Monomial layout shared by all jets of a given `(nv, ord)`.
#[derive(Debug)]
pub struct JetSpace {
    pub nv: usize,
    pub ord: usize,
    monos: Vec<Vec<u8>>,
    degree: Vec<usize>,
    index: HashMap<Vec<u8>, usize>,
    mul: Vec<(usize, usize, usize)>,
}

impl JetSpace {
    /// Cached space for `nv` variables and maximal degree `ord`.
    pub fn get(nv: usize, ord: usize) -> Arc<JetSpace> {
        type Cache = Mutex<HashMap<(usize, usize), Arc<JetSpace>>>;
        static CACHE: OnceLock<Cache> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut g = cache.lock().unwrap();
        g.entry((nv, ord)).or_insert_with(|| Arc::new(Self::build(nv, ord))).clone()
    }

    fn build(nv: usize, ord: usize) -> Self {
        let mut monos: Vec<Vec<u8>> = Vec::new();
        for deg in 0..=ord {
            let mut cur = vec![0u8; nv];
            gen(&mut monos, &mut cur, 0, deg);
        }
        fn gen(out: &mut Vec<Vec<u8>>, cur: &mut Vec<u8>, pos: usize, left: usize) {
            if pos + 1 == cur.len() || cur.is_empty() {
                if !cur.is_empty() {
                    cur[pos] = left as u8;
                    out.push(cur.clone());
                    cur[pos] = 0;
                } else if left == 0 {
                    out.push(vec![]);
                }
                return;
            }
            for k in (0..=left).rev() {
                cur[pos] = k as u8;
                gen(out, cur, pos + 1, left - k);
            }
            cur[pos] = 0;
        }
        let degree: Vec<usize> = monos.iter().map(|m| m.iter().map(|&e| e as usize).sum()).collect();
        let index: HashMap<Vec<u8>, usize> = monos.iter().enumerate().map(|(i, m)| (m.clone(), i)).collect();
        let mut mul = Vec::new();
        for (i, a) in monos.iter().enumerate() {
            for (j, b) in monos.iter().enumerate() {
                if degree[i] + degree[j] <= ord {
                    let s: Vec<u8> = a.iter().zip(b).map(|(x, y)| x + y).collect();
                    mul.push((i, j, index[&s]));
                }
            }
        }
        Self { nv, ord, monos, degree, index, mul }
    }

    pub fn len(&self) -> usize {
        self.monos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monos.is_empty()
    }

    pub fn index_of(&self, exps: &[u8]) -> Option<usize> {
        self.index.get(exps).copied()
    }
}

#[derive(Debug, Clone)]
pub struct Jet {
    space: Arc<JetSpace>,
    valid: usize,
    c: Vec<f64>,
}

impl Jet {
    pub fn constant(space: &Arc<JetSpace>, v: f64) -> Self {
        let mut c = vec![0.0; space.len()];
        c[0] = v;
        Self { space: space.clone(), valid: space.ord, c }
    }

    /// The coordinate function `x_i` with value `v0` at the base point.
    pub fn variable(space: &Arc<JetSpace>, i: usize, v0: f64) -> Self {
        let mut j = Self::constant(space, v0);
        if space.ord >= 1 {
            let mut e = vec![0u8; space.nv];
            e[i] = 1;
            j.c[space.index_of(&e).unwrap()] = 1.0;
        }
        j
    }

    pub fn space(&self) -> &Arc<JetSpace> {
        &self.space
    }

    /// Highest degree whose coefficients are exact.
    pub fn valid(&self) -> usize {
        self.valid
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// Taylor coefficient of the monomial with exponents `exps`.
    pub fn coeff(&self, exps: &[u8]) -> f64 {
        self.space.index_of(exps).map(|i| self.c[i]).unwrap_or(0.0)
    }

    pub fn set_coeff(&mut self, exps: &[u8], v: f64) {
        let i = self.space.index_of(exps).expect("monomial outside jet space");
        self.c[i] = v;
    }

    /// `∂_i f` at the base point.
    pub fn d1(&self, i: usize) -> f64 {
        let mut e = vec![0u8; self.space.nv];
        e[i] = 1;
        self.coeff(&e)
    }

    /// `∂_i∂_j f` at the base point.
    pub fn d2(&self, i: usize, j: usize) -> f64 {
        let mut e = vec![0u8; self.space.nv];
        e[i] += 1;
        e[j] += 1;
        let f = if i == j { 2.0 } else { 1.0 };
        f * self.coeff(&e)
    }

    /// Partial derivative as a jet; exact to one degree less.
    pub fn derivative(&self, i: usize) -> Self {
        let sp = &self.space;
        let mut c = vec![0.0; sp.len()];
        for (k, m) in sp.monos.iter().enumerate() {
            if m[i] > 0 {
                let mut b = m.clone();
                b[i] -= 1;
                let dst = sp.index[&b];
                c[dst] = self.c[k] * m[i] as f64;
            }
        }
        let valid = self.valid.saturating_sub(1);
        let mut j = Self { space: sp.clone(), valid, c };
        j.truncate();
        j
    }

    fn truncate(&mut self) {
        for k in 0..self.c.len() {
            if self.space.degree[k] > self.valid {
                self.c[k] = 0.0;
            }
        }
    }

    fn zip(&self, o: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        debug_assert!(Arc::ptr_eq(&self.space, &o.space));
        let c = self.c.iter().zip(&o.c).map(|(a, b)| f(*a, *b)).collect();
        let mut j = Self { space: self.space.clone(), valid: self.valid.min(o.valid), c };
        j.truncate();
        j
    }

    fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { space: self.space.clone(), valid: self.valid, c: self.c.iter().map(|a| f(*a)).collect() }
    }

    fn mul_jet(&self, o: &Self) -> Self {
        let valid = self.valid.min(o.valid);
        let mut c = vec![0.0; self.c.len()];
        for &(i, j, k) in &self.space.mul {
            if self.space.degree[k] <= valid {
                c[k] += self.c[i] * o.c[j];
            }
        }
        Self { space: self.space.clone(), valid, c }
    }

    /// `Σ_k a_k u^k` where `u = self − self.value()`.
    fn compose(&self, a: &[f64]) -> Self {
        let mut u = self.clone();
        u.c[0] = 0.0;
        let mut out = Self::constant(&self.space, a[0]);
        out.valid = self.valid;
        let mut p = Self::constant(&self.space, 1.0);
        p.valid = self.valid;
        for ak in a.iter().skip(1).take(self.valid) {
            p = p.mul_jet(&u);
            for (o, q) in out.c.iter_mut().zip(&p.c) {
                *o += ak * q;
            }
        }
        out
    }

    fn powf_coeffs(x0: f64, p: f64, n: usize) -> Vec<f64> {
        let mut a = vec![x0.powf(p)];
        let mut b = 1.0;
        for k in 1..=n {
            b *= (p - (k - 1) as f64) / k as f64;
            a.push(x0.powf(p - k as f64) * b);
        }
        a
    }

    pub fn recip(&self) -> Self {
        let x0 = self.value();
        let a: Vec<f64> = (0..=self.valid).map(|k| (-1f64).powi(k as i32) / x0.powi(k as i32 + 1)).collect();
        self.compose(&a)
    }

    pub fn sqrt(&self) -> Self {
        self.powf(0.5)
    }

    pub fn powf(&self, p: f64) -> Self {
        self.compose(&Self::powf_coeffs(self.value(), p, self.valid))
    }

    pub fn sin(&self) -> Self {
        let (s, c) = self.value().sin_cos();
        let cyc = [s, c, -s, -c];
        let mut a = Vec::new();
        let mut fact = 1.0;
        for k in 0..=self.valid {
            if k > 0 {
                fact *= k as f64;
            }
            a.push(cyc[k % 4] / fact);
        }
        self.compose(&a)
    }

    pub fn cos(&self) -> Self {
        let (s, c) = self.value().sin_cos();
        let cyc = [c, -s, -c, s];
        let mut a = Vec::new();
        let mut fact = 1.0;
        for k in 0..=self.valid {
            if k > 0 {
                fact *= k as f64;
            }
            a.push(cyc[k % 4] / fact);
        }
        self.compose(&a)
    }

    pub fn exp(&self) -> Self {
        let e = self.value().exp();
        let mut a = Vec::new();
        let mut fact = 1.0;
        for k in 0..=self.valid {
            if k > 0 {
                fact *= k as f64;
            }
            a.push(e / fact);
        }
        self.compose(&a)
    }

    /// `atan`, with coefficients obtained by integrating the series of `1/(1+x²)`.
    pub fn atan(&self) -> Self {
        let x0 = self.value();
        let n = self.valid;
        // q(u) = 1 + (x0+u)² = q0 + q1 u + u²
        let q = [1.0 + x0 * x0, 2.0 * x0, 1.0];
        let mut r = vec![0.0; n.max(1)];
        r[0] = 1.0 / q[0];
        for k in 1..r.len() {
            let mut s = 0.0;
            for (j, qj) in q.iter().enumerate().skip(1) {
                if j <= k {
                    s += qj * r[k - j];
                }
            }
            r[k] = -s / q[0];
        }
        let mut a = vec![x0.atan()];
        for k in 1..=n {
            a.push(r[k - 1] / k as f64);
        }
        self.compose(&a)
    }

    /// `⟨x⟩ = √(1+x²)`.
    pub fn jb(&self) -> Self {
        (self.mul_jet(self) + 1.0).sqrt()
    }
}

macro_rules! jet_binop {
    ($tr:ident, $m:ident, $body:expr) => {
        impl $tr<&Jet> for &Jet {
            type Output = Jet;
            fn $m(self, o: &Jet) -> Jet {
                let f: fn(&Jet, &Jet) -> Jet = $body;
                f(self, o)
            }
        }
        impl $tr<Jet> for Jet {
            type Output = Jet;
            fn $m(self, o: Jet) -> Jet {
                (&self).$m(&o)
            }
        }
        impl $tr<&Jet> for Jet {
            type Output = Jet;
            fn $m(self, o: &Jet) -> Jet {
                (&self).$m(o)
            }
        }
        impl $tr<Jet> for &Jet {
            type Output = Jet;
            fn $m(self, o: Jet) -> Jet {
                self.$m(&o)
            }
        }
    };
}

jet_binop!(Add, add, |a, b| a.zip(b, |x, y| x + y));
jet_binop!(Sub, sub, |a, b| a.zip(b, |x, y| x - y));
jet_binop!(Mul, mul, |a, b| a.mul_jet(b));
jet_binop!(Div, div, |a, b| a.mul_jet(&b.recip()));

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, v: f64) -> Jet {
        self.c[0] += v;
        self
    }
}
impl Sub<f64> for Jet {
    type Output = Jet;
    fn sub(mut self, v: f64) -> Jet {
        self.c[0] -= v;
        self
    }
}
impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, v: f64) -> Jet {
        self.map(|a| a * v)
    }
}
impl Div<f64> for Jet {
    type Output = Jet;
    fn div(self, v: f64) -> Jet {
        self.map(|a| a / v)
    }
}
impl Add<f64> for &Jet {
    type Output = Jet;
    fn add(self, v: f64) -> Jet {
        self.clone() + v
    }
}
impl Sub<f64> for &Jet {
    type Output = Jet;
    fn sub(self, v: f64) -> Jet {
        self.clone() - v
    }
}
impl Mul<f64> for &Jet {
    type Output = Jet;
    fn mul(self, v: f64) -> Jet {
        self.map(|a| a * v)
    }
}
impl Mul<Jet> for f64 {
    type Output = Jet;
    fn mul(self, j: Jet) -> Jet {
        j * self
    }
}
impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.map(|a| -a)
    }
}
impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.map(|a| -a)
    }
}

/// Ring/field operations shared by `f64` and [`Jet`].
pub trait Scalar:
    Clone
    + std::fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
{
    /// A constant living in the same space as `self`.
    fn cst(&self, v: f64) -> Self;
    fn val(&self) -> f64;
    fn sqrt_s(&self) -> Self;
}

impl Scalar for f64 {
    fn cst(&self, v: f64) -> f64 {
        v
    }
    fn val(&self) -> f64 {
        *self
    }
    fn sqrt_s(&self) -> f64 {
        self.sqrt()
    }
}

impl Scalar for Jet {
    fn cst(&self, v: f64) -> Jet {
        let mut j = Jet::constant(&self.space, v);
        j.valid = self.space.ord;
        j
    }
    fn val(&self) -> f64 {
        self.value()
    }
    fn sqrt_s(&self) -> Jet {
        self.sqrt()
    }
}

/// Minkowski product over generic scalars.
pub fn mink_s<S: Scalar>(x: &[S], y: &[S]) -> S {
    let mut s = -(x[0].clone() * y[0].clone());
    for i in 1..x.len() {
        s = s + x[i].clone() * y[i].clone();
    }
    s
}

/// Inverse of a small square matrix by Gauss–Jordan with pivoting on values.
pub fn inverse_s<S: Scalar>(m: &[Vec<S>]) -> Option<Vec<Vec<S>>> {
    let n = m.len();
    let z = m[0][0].cst(0.0);
    let mut a: Vec<Vec<S>> = m.to_vec();
    let mut inv: Vec<Vec<S>> = (0..n).map(|i| (0..n).map(|j| z.cst(if i == j { 1.0 } else { 0.0 })).collect()).collect();
    for col in 0..n {
        let p = (col..n).max_by(|&i, &j| a[i][col].val().abs().partial_cmp(&a[j][col].val().abs()).unwrap())?;
        if a[p][col].val().abs() < 1e-300 {
            return None;
        }
        a.swap(col, p);
        inv.swap(col, p);
        let piv = a[col][col].clone();
        for j in 0..n {
            a[col][j] = a[col][j].clone() / piv.clone();
            inv[col][j] = inv[col][j].clone() / piv.clone();
        }
        for i in 0..n {
            if i != col {
                let f = a[i][col].clone();
                for j in 0..n {
                    a[i][j] = a[i][j].clone() - f.clone() * a[col][j].clone();
                    inv[i][j] = inv[i][j].clone() - f.clone() * inv[col][j].clone();
                }
            }
        }
    }
    Some(inv)
}

/// Determinant by elimination with pivoting on values.
pub fn det_s<S: Scalar>(m: &[Vec<S>]) -> S {
    let n = m.len();
    let mut a = m.to_vec();
    let mut det = m[0][0].cst(1.0);
    for col in 0..n {
        let p = (col..n).max_by(|&i, &j| a[i][col].val().abs().partial_cmp(&a[j][col].val().abs()).unwrap()).unwrap();
        if p != col {
            a.swap(col, p);
            det = -det;
        }
        let piv = a[col][col].clone();
        if piv.val() == 0.0 {
            return piv.cst(0.0);
        }
        det = det * piv.clone();
        for i in col + 1..n {
            let f = a[i][col].clone() / piv.clone();
            for j in col..n {
                a[i][j] = a[i][j].clone() - f.clone() * a[col][j].clone();
            }
        }
    }
    det
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn monomial_counts() {
        assert_eq!(JetSpace::get(2, 3).len(), 10);
        assert_eq!(JetSpace::get(3, 2).len(), 10);
        assert_eq!(JetSpace::get(1, 4).len(), 5);
    }

    #[test]
    fn product_and_derivatives() {
        let sp = JetSpace::get(2, 3);
        let x = Jet::variable(&sp, 0, 0.3);
        let y = Jet::variable(&sp, 1, -0.7);
        // f = x² y + sin(x y)
        let f = &(&x * &x) * &y + (&x * &y).sin();
        let (x0, y0) = (0.3f64, -0.7f64);
        assert_relative_eq!(f.value(), x0 * x0 * y0 + (x0 * y0).sin(), epsilon = 1e-15);
        assert_relative_eq!(f.d1(0), 2.0 * x0 * y0 + y0 * (x0 * y0).cos(), epsilon = 1e-14);
        assert_relative_eq!(f.d2(0, 1), 2.0 * x0 + (x0 * y0).cos() - x0 * y0 * (x0 * y0).sin(), epsilon = 1e-14);
        assert_relative_eq!(f.d2(1, 1), -x0 * x0 * (x0 * y0).sin(), epsilon = 1e-14);
        let fx = f.derivative(0);
        assert_eq!(fx.valid(), 2);
        assert_relative_eq!(fx.d2(0, 1), f.coeff(&[2, 1]) * 2.0 * 1.0, epsilon = 1e-14);
    }

    #[test]
    fn elementary_functions_match_closed_forms() {
        let sp = JetSpace::get(1, 4);
        let x = Jet::variable(&sp, 0, 0.8);
        let x0 = 0.8f64;
        let a = x.atan();
        // d/dx atan = 1/(1+x²), d² = −2x/(1+x²)², d³ = (6x²−2)/(1+x²)³
        let q = 1.0 + x0 * x0;
        assert_relative_eq!(a.value(), x0.atan(), epsilon = 1e-15);
        assert_relative_eq!(a.coeff(&[1]), 1.0 / q, epsilon = 1e-15);
        assert_relative_eq!(a.coeff(&[2]) * 2.0, -2.0 * x0 / (q * q), epsilon = 1e-14);
        assert_relative_eq!(a.coeff(&[3]) * 6.0, (6.0 * x0 * x0 - 2.0) / q.powi(3), epsilon = 1e-14);
        let s = x.sqrt();
        assert_relative_eq!(s.coeff(&[2]) * 2.0, -0.25 * x0.powf(-1.5), epsilon = 1e-14);
        let r = x.recip();
        assert_relative_eq!(r.coeff(&[3]) * 6.0, -6.0 / x0.powi(4), epsilon = 1e-12);
        let e = x.exp();
        assert_relative_eq!(e.coeff(&[4]) * 24.0, x0.exp(), epsilon = 1e-13);
        let b = x.jb();
        assert_relative_eq!(b.coeff(&[1]), x0 / q.sqrt(), epsilon = 1e-15);
        let c = x.cos();
        assert_relative_eq!(c.coeff(&[3]) * 6.0, x0.sin(), epsilon = 1e-15);
    }

    #[test]
    fn inverse_and_det() {
        let m = vec![vec![-2.0, 0.3, 0.1], vec![0.3, 1.5, -0.2], vec![0.1, -0.2, 0.9]];
        let inv = inverse_s(&m).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let s: f64 = (0..3).map(|k| m[i][k] * inv[k][j]).sum();
                assert_relative_eq!(s, if i == j { 1.0 } else { 0.0 }, epsilon = 1e-14);
            }
        }
        let nm = nalgebra::Matrix3::from_fn(|i, j| m[i][j]);
        assert_relative_eq!(det_s(&m), nm.determinant(), epsilon = 1e-14);
    }
}
