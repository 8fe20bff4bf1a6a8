//! Fourier collocation on the circle `ω ∈ [0, 2π)`.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{domain, Result};

#[derive(Clone)]
pub struct Circle {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Circle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Circle").field("n", &self.n).finish()
    }
}

impl Circle {
    /// `n` must be a power of two, at least 8.
    pub fn new(n: usize) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return domain(format!("grid size {n} must be a power of two ≥ 8"));
        }
        let mut p = FftPlanner::new();
        Ok(Self { n, fwd: p.plan_fft_forward(n), inv: p.plan_fft_inverse(n) })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        std::f64::consts::TAU / self.n as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|j| j as f64 * self.spacing()).collect()
    }

    /// Signed wavenumber of FFT slot `j`; the Nyquist slot reports `n/2`.
    pub fn wavenumber(&self, j: usize) -> i64 {
        if j <= self.n / 2 {
            j as i64
        } else {
            j as i64 - self.n as i64
        }
    }

    /// `c_k = (1/n) Σ_j v_j e^{−ikω_j}`.
    pub fn forward(&self, v: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.fwd.process(&mut buf);
        let s = 1.0 / self.n as f64;
        buf.iter_mut().for_each(|c| *c *= s);
        buf
    }

    /// Real part of `Σ_k c_k e^{ikω_j}`.
    pub fn inverse(&self, c: &[Complex64]) -> Vec<f64> {
        let mut buf = c.to_vec();
        self.inv.process(&mut buf);
        buf.iter().map(|z| z.re).collect()
    }

    /// Zeroes every mode with `|k| > n/3`.
    pub fn dealias_coeffs(&self, c: &mut [Complex64]) {
        let cut = (self.n / 3) as i64;
        for (j, z) in c.iter_mut().enumerate() {
            if self.wavenumber(j).abs() > cut {
                *z = Complex64::new(0.0, 0.0);
            }
        }
    }

    pub fn dealias(&self, v: &[f64]) -> Vec<f64> {
        let mut c = self.forward(v);
        self.dealias_coeffs(&mut c);
        self.inverse(&c)
    }

    /// `∂_ω^order v`; the Nyquist mode is dropped for odd orders.
    pub fn derivative(&self, v: &[f64], order: u32) -> Vec<f64> {
        let mut c = self.forward(v);
        self.apply_derivative(&mut c, order);
        self.inverse(&c)
    }

    fn apply_derivative(&self, c: &mut [Complex64], order: u32) {
        let half = (self.n / 2) as i64;
        for (j, z) in c.iter_mut().enumerate() {
            let k = self.wavenumber(j);
            if order % 2 == 1 && k == half {
                *z = Complex64::new(0.0, 0.0);
                continue;
            }
            *z *= Complex64::new(0.0, k as f64).powu(order);
        }
    }

    /// Value, first and second derivatives from one transform; optionally
    /// dealiased first.
    pub fn jets(&self, v: &[f64], dealias: bool) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let mut c = self.forward(v);
        if dealias {
            self.dealias_coeffs(&mut c);
        }
        let v0 = if dealias { self.inverse(&c) } else { v.to_vec() };
        let mut c1 = c.clone();
        self.apply_derivative(&mut c1, 1);
        let mut c2 = c;
        self.apply_derivative(&mut c2, 2);
        (v0, self.inverse(&c1), self.inverse(&c2))
    }

    /// Trapezoid rule `∫_0^{2π} v dω`, spectrally accurate for smooth periodic `v`.
    pub fn integrate(&self, v: &[f64]) -> f64 {
        self.spacing() * v.iter().sum::<f64>()
    }

    /// Band-limited evaluation at an arbitrary angle.
    pub fn interpolate(&self, v: &[f64], omega: f64) -> f64 {
        let c = self.forward(v);
        let half = (self.n / 2) as i64;
        let mut s = 0.0;
        for (j, z) in c.iter().enumerate() {
            let k = self.wavenumber(j);
            let w = if k == half { 0.5 } else { 1.0 };
            let e = Complex64::from_polar(1.0, k as f64 * omega);
            s += w * (z * e).re;
            if k == half {
                s += w * (z * Complex64::from_polar(1.0, -(k as f64) * omega)).re;
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_sizes() {
        assert!(Circle::new(12).is_err());
        assert!(Circle::new(4).is_err());
        assert!(Circle::new(16).is_ok());
    }

    #[test]
    fn derivatives_of_trig_polynomial() {
        let c = Circle::new(32).unwrap();
        let w = c.nodes();
        let v: Vec<f64> = w.iter().map(|x| (3.0 * x).sin() + 0.5 * (5.0 * x).cos()).collect();
        let d1 = c.derivative(&v, 1);
        let d2 = c.derivative(&v, 2);
        for (j, x) in w.iter().enumerate() {
            assert!((d1[j] - (3.0 * (3.0 * x).cos() - 2.5 * (5.0 * x).sin())).abs() < 1e-12);
            assert!((d2[j] - (-9.0 * (3.0 * x).sin() - 12.5 * (5.0 * x).cos())).abs() < 1e-11);
        }
    }

    #[test]
    fn parseval_and_dealias() {
        let c = Circle::new(64).unwrap();
        let v: Vec<f64> = c.nodes().iter().map(|x| (x.cos() + 0.3).exp()).collect();
        let coeffs = c.forward(&v);
        let lhs: f64 = v.iter().map(|x| x * x).sum::<f64>() / 64.0;
        let rhs: f64 = coeffs.iter().map(|z| z.norm_sqr()).sum();
        assert!((lhs - rhs).abs() < 1e-12 * lhs);
        let hi: Vec<f64> = c.nodes().iter().map(|x| (30.0 * x).cos()).collect();
        assert!(c.dealias(&hi).iter().all(|x| x.abs() < 1e-13));
        let lo: Vec<f64> = c.nodes().iter().map(|x| (20.0 * x).cos()).collect();
        let kept = c.dealias(&lo);
        assert!(kept.iter().zip(&lo).all(|(a, b)| (a - b).abs() < 1e-13));
    }

    #[test]
    fn interpolation_and_quadrature() {
        let c = Circle::new(64).unwrap();
        let v: Vec<f64> = c.nodes().iter().map(|x| (x.sin()).exp()).collect();
        assert!((c.interpolate(&v, 0.37) - (0.37f64.sin()).exp()).abs() < 1e-13);
        // ∫ e^{sin ω} dω = 2π I₀(1)
        let i0 = 1.2660658777520082;
        assert!((c.integrate(&v) - std::f64::consts::TAU * i0).abs() < 1e-13);
    }
}
