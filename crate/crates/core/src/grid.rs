//! Real 2π-periodic fields as samples on `x_k = 2πk/n` and as Fourier coefficients.
//!
//! Coefficients are normalized as `c_j = (1/n) sum_k f_k e^{-i j x_k}`. The
//! Nyquist mode is carried as the real amplitude of `cos(n x / 2)`, so any
//! Fourier multiplier `sigma` acts on it through `(sigma(N) + sigma(-N)) / 2`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_GRID: usize = 16;

type Plans = (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>);

fn plans(n: usize) -> Plans {
    static CACHE: OnceLock<Mutex<HashMap<usize, Plans>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("fft plan cache poisoned");
    guard
        .entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            (planner.plan_fft_forward(n), planner.plan_fft_inverse(n))
        })
        .clone()
}

pub(crate) fn check_grid_size(n: usize) -> Result<()> {
    if n < MIN_GRID || !n.is_power_of_two() {
        return Err(Error::InvalidArgument(format!(
            "grid size {n} must be a power of two >= {MIN_GRID}"
        )));
    }
    Ok(())
}

/// Uniform samples of a real periodic function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    samples: Vec<f64>,
}

impl GridFunction {
    pub fn new(samples: Vec<f64>) -> Result<Self> {
        check_grid_size(samples.len())?;
        if let Some(k) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::domain(format!("non-finite sample at index {k}")));
        }
        Ok(GridFunction { samples })
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Self::new(vec![0.0; n])
    }

    pub fn from_fn(n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new((0..n).map(|k| f(node(n, k))).collect())
    }

    pub fn n(&self) -> usize {
        self.samples.len()
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.n() as f64
    }

    pub fn sup_norm(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.samples.iter().map(|&v| f(v)).collect())
    }

    /// Trapezoid approximation of `∫ self * other dx` over one period.
    pub fn inner(&self, other: &GridFunction) -> f64 {
        let h = 2.0 * PI / self.n() as f64;
        h * self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a * b)
            .sum::<f64>()
    }

    pub fn l2_norm(&self) -> f64 {
        self.inner(self).sqrt()
    }

    /// Grid translation `f(x + 2π shift / n)`.
    pub fn rotate(&self, shift: usize) -> Self {
        let n = self.n();
        GridFunction {
            samples: (0..n).map(|k| self.samples[(k + shift) % n]).collect(),
        }
    }

    pub fn spectrum(&self) -> SpectralField {
        SpectralField::from_grid(self)
    }

    /// Spectral derivative of order `p`.
    pub fn derivative(&self, p: u32) -> Self {
        self.spectrum().derivative(p).to_grid()
    }
}

pub fn node(n: usize, k: usize) -> f64 {
    2.0 * PI * k as f64 / n as f64
}

/// Half spectrum `c_0 .. c_{n/2}` of a real field; negative modes are conjugates.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    n: usize,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(n: usize) -> Result<Self> {
        check_grid_size(n)?;
        Ok(SpectralField {
            n,
            coeffs: vec![Complex64::new(0.0, 0.0); n / 2 + 1],
        })
    }

    /// Builds a field from `c_0 .. c_{n/2}`; `c_0` and the Nyquist entry must be real.
    pub fn from_half(n: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        check_grid_size(n)?;
        if coeffs.len() != n / 2 + 1 {
            return Err(Error::InvalidArgument(format!(
                "expected {} coefficients, got {}",
                n / 2 + 1,
                coeffs.len()
            )));
        }
        if coeffs[0].im != 0.0 || coeffs[n / 2].im != 0.0 {
            return Err(Error::domain("zero and Nyquist coefficients must be real"));
        }
        Ok(SpectralField { n, coeffs })
    }

    pub fn from_grid(g: &GridFunction) -> Self {
        let n = g.n();
        let (fwd, _) = plans(n);
        let mut buf: Vec<Complex64> = g.samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fwd.process(&mut buf);
        let scale = 1.0 / n as f64;
        let mut coeffs: Vec<Complex64> = buf[..=n / 2].iter().map(|c| c * scale).collect();
        coeffs[0].im = 0.0;
        coeffs[n / 2].im = 0.0;
        SpectralField { n, coeffs }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Coefficient of `e^{i j x}` for `|j| < n/2`, and half the Nyquist amplitude at `|j| = n/2`.
    pub fn coeff(&self, j: i64) -> Complex64 {
        let nyq = (self.n / 2) as i64;
        let a = j.unsigned_abs() as usize;
        if j.abs() > nyq {
            return Complex64::new(0.0, 0.0);
        }
        let c = self.coeffs[a];
        if j.abs() == nyq {
            c * 0.5
        } else if j < 0 {
            c.conj()
        } else {
            c
        }
    }

    pub fn mean(&self) -> f64 {
        self.coeffs[0].re
    }

    /// Samples of the field acted on by the multiplier `sigma(j)`.
    pub fn apply_to_grid(&self, sigma: impl Fn(i64) -> Complex64) -> GridFunction {
        let n = self.n;
        let nyq = n / 2;
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        buf[0] = self.coeffs[0] * sigma(0);
        for j in 1..nyq {
            let c = self.coeffs[j];
            buf[j] = c * sigma(j as i64);
            buf[n - j] = c.conj() * sigma(-(j as i64));
        }
        buf[nyq] = self.coeffs[nyq] * (sigma(nyq as i64) + sigma(-(nyq as i64))) * 0.5;
        let (_, inv) = plans(n);
        inv.process(&mut buf);
        GridFunction {
            samples: buf.iter().map(|c| c.re).collect(),
        }
    }

    /// Multiplier acting on the half spectrum (the result stays real).
    pub fn apply(&self, sigma: impl Fn(i64) -> Complex64) -> SpectralField {
        let nyq = self.n / 2;
        let mut coeffs: Vec<Complex64> = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| c * sigma(j as i64))
            .collect();
        coeffs[0].im = 0.0;
        coeffs[nyq] = self.coeffs[nyq] * (sigma(nyq as i64) + sigma(-(nyq as i64))) * 0.5;
        coeffs[nyq].im = 0.0;
        SpectralField { n: self.n, coeffs }
    }

    pub fn to_grid(&self) -> GridFunction {
        self.apply_to_grid(|_| Complex64::new(1.0, 0.0))
    }

    pub fn derivative(&self, p: u32) -> SpectralField {
        self.apply(|j| Complex64::new(0.0, j as f64).powu(p))
    }

    /// Samples of the `p`-th derivative of `f(x - delta)`.
    pub fn shifted_derivative_samples(&self, delta: f64, p: u32) -> GridFunction {
        self.apply_to_grid(|j| {
            let jf = j as f64;
            Complex64::new(0.0, jf).powu(p) * Complex64::from_polar(1.0, -jf * delta)
        })
    }

    /// `f(x + shift)`.
    pub fn translate(&self, shift: f64) -> SpectralField {
        self.apply(|j| Complex64::from_polar(1.0, j as f64 * shift))
    }

    /// Zeroes every mode with `|j| > fraction * n / 2`.
    pub fn dealias(&mut self, fraction: f64) {
        let cutoff = fraction * (self.n / 2) as f64;
        for (j, c) in self.coeffs.iter_mut().enumerate() {
            if j as f64 > cutoff {
                *c = Complex64::new(0.0, 0.0);
            }
        }
    }

    pub fn zero_mean(&mut self) {
        self.coeffs[0] = Complex64::new(0.0, 0.0);
    }

    /// `(sum_j <j>^{2s} |c_j|^2)^{1/2}` over all `|j| <= n/2`, `<j> = max(1, |j|)`.
    pub fn sobolev_norm(&self, s: f64) -> f64 {
        let nyq = (self.n / 2) as i64;
        let mut sum = 0.0;
        for j in -nyq..=nyq {
            let weight = (j.abs().max(1) as f64).powf(2.0 * s);
            sum += weight * self.coeff(j).norm_sqr();
        }
        sum.sqrt()
    }

    pub fn scale(&self, a: f64) -> SpectralField {
        SpectralField {
            n: self.n,
            coeffs: self.coeffs.iter().map(|c| c * a).collect(),
        }
    }

    pub fn axpy(&self, a: f64, other: &SpectralField) -> SpectralField {
        SpectralField {
            n: self.n,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(x, y)| x + y * a)
                .collect(),
        }
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }
}
