//! Fourier pseudospectral calculus on a uniform periodic grid `x_j = 2 pi j / n`.
//!
//! Odd-order derivatives drop the Nyquist mode; even-order derivatives keep it.
//! Interpolants use the symmetric cosine form of the Nyquist term, so their
//! derivatives agree with the grid derivatives at the nodes.

use std::collections::HashMap;
use std::f64::consts::TAU;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub struct Spectral {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

/// Shared planner cache: one plan pair per grid size.
pub fn grid(n: usize) -> Arc<Spectral> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Spectral>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    guard.entry(n).or_insert_with(|| Arc::new(Spectral::new(n))).clone()
}

impl Spectral {
    pub fn new(n: usize) -> Self {
        assert!(n >= 2 && n.is_multiple_of(2), "spectral grid needs an even size, got {n}");
        let mut planner = FftPlanner::new();
        Self { n, forward: planner.plan_fft_forward(n), inverse: planner.plan_fft_inverse(n) }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn spacing(&self) -> f64 {
        TAU / self.n as f64
    }

    /// Signed wavenumber of FFT bin `j`.
    pub fn wavenumber(&self, j: usize) -> f64 {
        if j <= self.n / 2 {
            j as f64
        } else {
            j as f64 - self.n as f64
        }
    }

    /// Normalized DFT coefficients `c_k = (1/n) sum_j u_j e^{-i k x_j}`.
    pub fn coefficients(&self, u: &[f64]) -> Vec<Complex64> {
        assert_eq!(u.len(), self.n);
        let mut buf: Vec<Complex64> = u.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward.process(&mut buf);
        let scale = 1.0 / self.n as f64;
        buf.iter_mut().for_each(|c| *c *= scale);
        buf
    }

    fn synthesize(&self, mut c: Vec<Complex64>) -> Vec<f64> {
        self.inverse.process(&mut c);
        c.into_iter().map(|v| v.re).collect()
    }

    fn apply(&self, c: &[Complex64], order: u32) -> Vec<f64> {
        let nyq = self.n / 2;
        let i_pow = match order % 4 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
        let out: Vec<Complex64> = c
            .iter()
            .enumerate()
            .map(|(j, &cj)| {
                if j == nyq && order % 2 == 1 {
                    return Complex64::new(0.0, 0.0);
                }
                let k = self.wavenumber(j);
                cj * i_pow * k.powi(order as i32)
            })
            .collect();
        self.synthesize(out)
    }

    pub fn derivative(&self, u: &[f64], order: u32) -> Vec<f64> {
        let c = self.coefficients(u);
        self.apply(&c, order)
    }

    /// First and second derivatives from a single forward transform.
    pub fn d1_d2(&self, u: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let c = self.coefficients(u);
        (self.apply(&c, 1), self.apply(&c, 2))
    }

    pub fn interpolant(&self, u: &[f64]) -> TrigInterpolant {
        let c = self.coefficients(u);
        TrigInterpolant { n: self.n, coeffs: c[..=self.n / 2].to_vec() }
    }
}

/// Trigonometric interpolant of grid data, evaluable anywhere on the circle.
#[derive(Debug, Clone)]
pub struct TrigInterpolant {
    n: usize,
    /// `c_k` for `k = 0..=n/2`; negative modes are conjugates.
    coeffs: Vec<Complex64>,
}

impl TrigInterpolant {
    pub fn mean(&self) -> f64 {
        self.coeffs[0].re
    }

    pub fn grid_len(&self) -> usize {
        self.n
    }

    /// Magnitude of the `cos(m x + .)` component, i.e. `2|c_m|` (or `|c_m|` at Nyquist).
    pub fn mode_amplitude(&self, m: usize) -> f64 {
        let nyq = self.n / 2;
        match m {
            0 => self.coeffs[0].re.abs(),
            m if m < nyq => 2.0 * self.coeffs[m].norm(),
            m if m == nyq => self.coeffs[m].norm(),
            _ => 0.0,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.eval_with_derivatives(x)[0]
    }

    /// Value, first and second derivative at `x`.
    pub fn eval_with_derivatives(&self, x: f64) -> [f64; 3] {
        let nyq = self.n / 2;
        let step = Complex64::new(x.cos(), x.sin());
        let mut e = Complex64::new(1.0, 0.0);
        let mut v = self.coeffs[0].re;
        let mut d1 = 0.0;
        let mut d2 = 0.0;
        for k in 1..nyq {
            e *= step;
            let t = self.coeffs[k] * e;
            let kf = k as f64;
            v += 2.0 * t.re;
            d1 -= 2.0 * kf * t.im;
            d2 -= 2.0 * kf * kf * t.re;
        }
        let kn = nyq as f64;
        let cn = self.coeffs[nyq].re;
        let (s, c) = (kn * x).sin_cos();
        v += cn * c;
        d1 -= cn * kn * s;
        d2 -= cn * kn * kn * c;
        [v, d1, d2]
    }

    /// `int_0^x u(t) dt` for the interpolant `u`.
    pub fn integral(&self, x: f64) -> f64 {
        let nyq = self.n / 2;
        let step = Complex64::new(x.cos(), x.sin());
        let mut e = Complex64::new(1.0, 0.0);
        let mut acc = self.coeffs[0].re * x;
        for k in 1..nyq {
            e *= step;
            let kf = k as f64;
            // 2 Re(c_k (e^{ikx} - 1) / (ik))
            let c = self.coeffs[k];
            let num = c * (e - Complex64::new(1.0, 0.0));
            acc += 2.0 * num.im / kf;
        }
        let kn = nyq as f64;
        acc += self.coeffs[nyq].re * (kn * x).sin() / kn;
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(n: usize, f: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..n).map(|j| f(TAU * j as f64 / n as f64)).collect()
    }

    #[test]
    fn derivatives_of_band_limited_data_are_exact() {
        let n = 32;
        let s = grid(n);
        let u = sample(n, |x| 0.3 + 0.05 * (2.0 * x).cos() + 0.1 * (5.0 * x).sin());
        let (d1, d2) = s.d1_d2(&u);
        for j in 0..n {
            let x = TAU * j as f64 / n as f64;
            let e1 = -0.1 * (2.0 * x).sin() + 0.5 * (5.0 * x).cos();
            let e2 = -0.2 * (2.0 * x).cos() - 2.5 * (5.0 * x).sin();
            assert!((d1[j] - e1).abs() < 1e-13);
            assert!((d2[j] - e2).abs() < 1e-12);
        }
        let d4 = s.derivative(&u, 4);
        let e4 = 16.0 * 0.05 * (2.0f64 * 0.0).cos();
        assert!((d4[0] - e4).abs() < 1e-10);
    }

    #[test]
    fn constant_data_has_exactly_zero_derivative() {
        let s = grid(128);
        let u = vec![0.3; 128];
        let (d1, d2) = s.d1_d2(&u);
        assert!(d1.iter().chain(d2.iter()).all(|&v| v.abs() < 1e-15));
    }

    #[test]
    fn interpolant_reproduces_analytic_function() {
        let n = 64;
        let f = |x: f64| (x.sin()).exp();
        let it = grid(n).interpolant(&sample(n, f));
        for &x in &[0.1, 1.234, 3.0, 5.9] {
            let [v, d1, d2] = it.eval_with_derivatives(x);
            assert!((v - f(x)).abs() < 1e-13);
            assert!((d1 - x.cos() * f(x)).abs() < 1e-12);
            assert!((d2 - (x.cos().powi(2) - x.sin()) * f(x)).abs() < 1e-11);
        }
    }

    #[test]
    fn integral_of_interpolant() {
        let n = 32;
        let it = grid(n).interpolant(&sample(n, |x| 2.0 + x.cos() + 0.5 * (3.0 * x).sin()));
        for &x in &[0.0, 0.7, 2.0, TAU] {
            let exact = 2.0 * x + x.sin() + 0.5 * (1.0 - (3.0 * x).cos()) / 3.0;
            assert!((it.integral(x) - exact).abs() < 1e-13);
        }
        assert!((it.mode_amplitude(3) - 0.5).abs() < 1e-14);
        assert!((it.mean() - 2.0).abs() < 1e-15);
    }
}
