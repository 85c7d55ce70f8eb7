//! Truncated Taylor series in one variable, `c0 + c1 z + ... + cD z^D`.
//!
//! Every operation truncates to the smaller order of its operands, so the
//! retained coefficients are exact (up to rounding) for the analytic functions
//! they represent.

use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ZSeries {
    coeffs: Vec<f64>,
}

impl ZSeries {
    pub fn new(coeffs: Vec<f64>) -> Self {
        assert!(!coeffs.is_empty(), "a series needs at least one coefficient");
        ZSeries { coeffs }
    }

    pub fn constant(c: f64, order: usize) -> Self {
        let mut coeffs = vec![0.0; order + 1];
        coeffs[0] = c;
        ZSeries { coeffs }
    }

    /// The identity `z`.
    pub fn var(order: usize) -> Self {
        let mut s = Self::constant(0.0, order);
        if order >= 1 {
            s.coeffs[1] = 1.0;
        }
        s
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> f64 {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    pub fn truncate(&self, order: usize) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(order + 1, 0.0);
        ZSeries { coeffs }
    }

    /// `sin z`.
    pub fn sin(order: usize) -> Self {
        Self::from_fn(order, |k| match k % 4 {
            1 => 1.0 / factorial(k),
            3 => -1.0 / factorial(k),
            _ => 0.0,
        })
    }

    /// `cos z`.
    pub fn cos(order: usize) -> Self {
        Self::from_fn(order, |k| match k % 4 {
            0 => 1.0 / factorial(k),
            2 => -1.0 / factorial(k),
            _ => 0.0,
        })
    }

    /// `cos(z/2)`.
    pub fn cos_half(order: usize) -> Self {
        Self::from_fn(order, |k| Self::cos(order).coeff(k) / 2f64.powi(k as i32))
    }

    /// `2 sin(z/2)`.
    pub fn chord(order: usize) -> Self {
        Self::from_fn(order, |k| 2.0 * Self::sin(order).coeff(k) / 2f64.powi(k as i32))
    }

    /// `2 sin(z/2) / z`, the chord divided by the arc.
    pub fn chord_over_z(order: usize) -> Self {
        Self::chord(order + 1).div_z_pow(1)
    }

    pub fn from_fn(order: usize, f: impl Fn(usize) -> f64) -> Self {
        ZSeries {
            coeffs: (0..=order).map(f).collect(),
        }
    }

    pub fn eval(&self, z: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * z + c)
    }

    pub fn scale(&self, a: f64) -> Self {
        ZSeries {
            coeffs: self.coeffs.iter().map(|c| a * c).collect(),
        }
    }

    pub fn add_const(&self, a: f64) -> Self {
        let mut out = self.clone();
        out.coeffs[0] += a;
        out
    }

    /// Divides by `z^k`, dropping the `k` lowest coefficients.
    ///
    /// The caller guarantees that those coefficients vanish; the order drops by `k`.
    pub fn div_z_pow(&self, k: usize) -> Self {
        assert!(k <= self.order(), "cannot divide order {} by z^{k}", self.order());
        ZSeries {
            coeffs: self.coeffs[k..].to_vec(),
        }
    }

    /// Multiplies by `z^k`, keeping the order.
    pub fn mul_z_pow(&self, k: usize) -> Self {
        let n = self.coeffs.len();
        let mut coeffs = vec![0.0; n];
        for i in 0..n.saturating_sub(k) {
            coeffs[i + k] = self.coeffs[i];
        }
        ZSeries { coeffs }
    }

    pub fn recip(&self) -> Result<Self> {
        Self::constant(1.0, self.order()).div(self)
    }

    pub fn div(&self, rhs: &ZSeries) -> Result<Self> {
        let b0 = rhs.coeffs[0];
        if b0 == 0.0 || !b0.is_finite() {
            return Err(Error::domain("series division by a series with zero constant term"));
        }
        let order = self.order().min(rhs.order());
        let mut q = vec![0.0; order + 1];
        for k in 0..=order {
            let mut acc = self.coeffs[k];
            for i in 1..=k {
                acc -= rhs.coeffs[i] * q[k - i];
            }
            q[k] = acc / b0;
        }
        Ok(ZSeries { coeffs: q })
    }

    /// `self^p` for `c0 > 0` by the J.C.P. Miller recurrence.
    pub fn powf(&self, p: f64) -> Result<Self> {
        let a0 = self.coeffs[0];
        if !(a0 > 0.0) {
            return Err(Error::domain(format!(
                "series power needs a positive constant term, got {a0}"
            )));
        }
        let order = self.order();
        let mut g = vec![0.0; order + 1];
        g[0] = a0.powf(p);
        for k in 1..=order {
            let mut acc = 0.0;
            for i in 1..=k {
                acc += ((p + 1.0) * i as f64 - k as f64) * self.coeffs[i] * g[k - i];
            }
            g[k] = acc / (k as f64 * a0);
        }
        Ok(ZSeries { coeffs: g })
    }

    pub fn sqrt(&self) -> Result<Self> {
        self.powf(0.5)
    }

    /// `sum_k outer[k] self^k` for `self` with zero constant term.
    pub fn compose_into(&self, outer: &[f64]) -> Result<Self> {
        if self.coeffs[0] != 0.0 {
            return Err(Error::domain("inner series of a composition must vanish at 0"));
        }
        let order = self.order();
        let mut acc = ZSeries::constant(0.0, order);
        for c in outer.iter().rev() {
            acc = &(&acc * self) + &ZSeries::constant(*c, order);
        }
        Ok(acc)
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

impl Add for &ZSeries {
    type Output = ZSeries;
    fn add(self, rhs: &ZSeries) -> ZSeries {
        let order = self.order().min(rhs.order());
        ZSeries::from_fn(order, |k| self.coeffs[k] + rhs.coeffs[k])
    }
}

impl Sub for &ZSeries {
    type Output = ZSeries;
    fn sub(self, rhs: &ZSeries) -> ZSeries {
        let order = self.order().min(rhs.order());
        ZSeries::from_fn(order, |k| self.coeffs[k] - rhs.coeffs[k])
    }
}

impl Mul for &ZSeries {
    type Output = ZSeries;
    fn mul(self, rhs: &ZSeries) -> ZSeries {
        let order = self.order().min(rhs.order());
        ZSeries::from_fn(order, |k| {
            (0..=k).map(|i| self.coeffs[i] * rhs.coeffs[k - i]).sum()
        })
    }
}

impl Neg for &ZSeries {
    type Output = ZSeries;
    fn neg(self) -> ZSeries {
        self.scale(-1.0)
    }
}

impl Add for ZSeries {
    type Output = ZSeries;
    fn add(self, rhs: ZSeries) -> ZSeries {
        &self + &rhs
    }
}

impl Sub for ZSeries {
    type Output = ZSeries;
    fn sub(self, rhs: ZSeries) -> ZSeries {
        &self - &rhs
    }
}

impl Mul for ZSeries {
    type Output = ZSeries;
    fn mul(self, rhs: ZSeries) -> ZSeries {
        &self * &rhs
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: &ZSeries, b: &ZSeries, tol: f64) -> bool {
        a.order() == b.order()
            && a.coeffs().iter().zip(b.coeffs()).all(|(x, y)| (x - y).abs() <= tol * (1.0 + y.abs()))
    }

    #[test]
    fn trig_identities() {
        let s = ZSeries::sin(8);
        let c = ZSeries::cos(8);
        let one = &(&s * &s) + &(&c * &c);
        assert!(close(&one, &ZSeries::constant(1.0, 8), 1e-15));
        // 2 sin(z/2)^2 = 1 - cos z
        let w = ZSeries::chord(8);
        let lhs = (&w * &w).scale(0.5);
        let rhs = &ZSeries::constant(1.0, 8) - &c;
        assert!(close(&lhs, &rhs, 1e-15));
        // sin z = 2 sin(z/2) cos(z/2)
        assert!(close(&(&w * &ZSeries::cos_half(8)), &s, 1e-15));
    }

    #[test]
    fn sqrt_and_power() {
        // (1 + z)^(1/2) squared
        let x = ZSeries::new(vec![1.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        let r = x.sqrt().unwrap();
        assert!(close(&(&r * &r), &x, 1e-15));
        assert!((r.coeff(2) + 0.125).abs() < 1e-16);
        let p = x.powf(-0.75).unwrap();
        let q = x.powf(0.75).unwrap();
        assert!(close(&(&p * &q), &ZSeries::constant(1.0, 5), 1e-14));
        assert!(ZSeries::new(vec![0.0, 1.0]).sqrt().is_err());
        assert!(ZSeries::new(vec![-1.0, 1.0]).powf(0.3).is_err());
    }

    #[test]
    fn division_and_shift() {
        let w = ZSeries::chord(9);
        let ratio = w.div_z_pow(1);
        assert_eq!(ratio.order(), 8);
        assert!((ratio.eval(0.1) - 2.0 * (0.05f64).sin() / 0.1).abs() < 1e-15);
        assert!(w.div(&ZSeries::var(9)).is_err());
        let inv = ratio.recip().unwrap();
        assert!((inv.eval(0.1) - 0.1 / (2.0 * (0.05f64).sin())).abs() < 1e-12);
    }

    #[test]
    fn composition() {
        // exp(u) composed into u = sin z, against direct product expansion
        let outer: Vec<f64> = (0..8).map(|k| 1.0 / factorial(k)).collect();
        let e = ZSeries::sin(7).compose_into(&outer).unwrap();
        let z: f64 = 1e-2;
        assert!((e.eval(z) - z.sin().exp()).abs() < 1e-15);
        assert!(ZSeries::cos(3).compose_into(&outer).is_err());
    }

    #[test]
    fn truncation_order_consistency() {
        let x = ZSeries::new(vec![2.0, -0.3, 0.7, 0.1, 0.05, -0.2]);
        let hi = x.powf(-0.6).unwrap();
        let lo = x.truncate(3).powf(-0.6).unwrap();
        for k in 0..=3 {
            assert_eq!(hi.coeff(k), lo.coeff(k));
        }
    }

    proptest! {
        #[test]
        fn power_matches_pointwise(c0 in 0.5f64..3.0, c1 in -1.0f64..1.0, c2 in -1.0f64..1.0, p in -2.0f64..2.0) {
            let x = ZSeries::new(vec![c0, c1, c2, 0.0, 0.0, 0.0, 0.0]);
            let y = x.powf(p).unwrap();
            let z = 1e-2;
            let exact = x.eval(z).powf(p);
            prop_assert!((y.eval(z) - exact).abs() <= 1e-11 * exact.abs());
        }

        #[test]
        fn division_inverts_product(a in proptest::collection::vec(-2.0f64..2.0, 5), b0 in 0.5f64..2.0, b in proptest::collection::vec(-2.0f64..2.0, 4)) {
            let x = ZSeries::new(a);
            let mut bc = vec![b0];
            bc.extend(b);
            let y = ZSeries::new(bc);
            let back = (&x * &y).div(&y).unwrap();
            prop_assert!(close(&back, &x, 1e-12));
        }
    }
}
