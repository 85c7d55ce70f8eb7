//! Nonlinear convolution kernels of the gradient and their small-`z` Taylor
//! coefficients, plus the numerical check of the cancellation
//! `A1 + (1/2) d/dx A0 = 0`.
//!
//! Notation: `w = 2 sin(z/2)`, `u = X w`, `s = sqrt(1 - 2u)` and
//! `Q = D / w^2` where `D = 2(1 - u - s cos z)`. Writing the kernels through `Q`
//! removes the `|w|^alpha` factors exactly, which keeps the series in the ring
//! of analytic functions of `z`.

use rayon::prelude::*;
use serde::Serialize;

use crate::dispersion::Alpha;
use crate::error::{Error, Result};
use crate::grid::{node, GridFunction};
use crate::zseries::ZSeries;

/// Default truncation order of kernel series.
pub const SERIES_ORDER: usize = 3;

/// Pass threshold of the relative identity residual.
pub const IDENTITY_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum KernelKind {
    K1,
    K2,
    K3,
}

impl KernelKind {
    pub const ALL: [KernelKind; 3] = [KernelKind::K1, KernelKind::K2, KernelKind::K3];

    fn index(self) -> usize {
        match self {
            KernelKind::K1 => 0,
            KernelKind::K2 => 1,
            KernelKind::K3 => 2,
        }
    }
}

/// `(s, D)` for the pair `(X, z)`, with `1 - X - s cos z` formed without cancellation.
fn s_and_d(x: f64, z: f64) -> Result<(f64, f64)> {
    let one_m = 1.0 - 2.0 * x;
    if !(one_m > 0.0) {
        return Err(Error::domain(format!("1 - 2X = {one_m} is not positive")));
    }
    let s = one_m.sqrt();
    let half = (0.5 * z).sin();
    let d = 2.0 * (x * x / (1.0 - x + s) + 2.0 * s * half * half);
    if !(d > 0.0) {
        return Err(Error::domain(format!("kernel denominator {d} is not positive")));
    }
    Ok((s, d))
}

/// `s - cos z` without cancellation.
fn s_minus_cos(x: f64, z: f64, s: f64) -> f64 {
    let half = (0.5 * z).sin();
    -2.0 * x / (1.0 + s) + 2.0 * half * half
}

/// `G1(X) = (1 - 2X - s cos z) / D^{alpha/2}`.
pub fn g1(x: f64, z: f64, alpha: Alpha) -> Result<f64> {
    let (s, d) = s_and_d(x, z)?;
    Ok(s * s_minus_cos(x, z, s) * d.powf(-0.5 * alpha.value()))
}

/// `dG1/dX`.
pub fn g1_prime(x: f64, z: f64, alpha: Alpha) -> Result<f64> {
    let a = alpha.value();
    let (s, d) = s_and_d(x, z)?;
    let t = s_minus_cos(x, z, s);
    let p = d.powf(-0.5 * a);
    Ok(-(2.0 - z.cos() / s) * p + a * t * t * p / d)
}

/// `G2(X) = 1 / (s D^{alpha/2})`.
pub fn g2(x: f64, z: f64, alpha: Alpha) -> Result<f64> {
    let (s, d) = s_and_d(x, z)?;
    Ok(d.powf(-0.5 * alpha.value()) / s)
}

/// `dG2/dX`.
pub fn g2_prime(x: f64, z: f64, alpha: Alpha) -> Result<f64> {
    let a = alpha.value();
    let (s, d) = s_and_d(x, z)?;
    let p = d.powf(-0.5 * a);
    Ok(p / (s * s * s) + a * s_minus_cos(x, z, s) * p / (s * s * d))
}

/// Pointwise `K^kind_z(X)`: `K1 = G1'(Xw)|w|^a`, `K2 = G2(Xw)|w|^a`,
/// `K3 = G2'(Xw)|w|^a sin z`.
pub fn k_pointwise(kind: KernelKind, x: f64, z: f64, alpha: Alpha) -> Result<f64> {
    let w = 2.0 * (0.5 * z).sin();
    let u = x * w;
    let scale = w.abs().powf(alpha.value());
    Ok(match kind {
        KernelKind::K1 => g1_prime(u, z, alpha)? * scale,
        KernelKind::K2 => g2(u, z, alpha)? * scale,
        KernelKind::K3 => g2_prime(u, z, alpha)? * scale * z.sin(),
    })
}

/// Value and derivatives `f, f', f'', ...` of a profile at one point.
/// Derivatives beyond the stored ones are taken as zero.
#[derive(Debug, Clone, PartialEq)]
pub struct PointJet {
    derivs: Vec<f64>,
}

impl PointJet {
    pub fn new(derivs: Vec<f64>) -> Result<Self> {
        let f = derivs.first().copied().unwrap_or(0.0);
        if !(1.0 + 2.0 * f > 0.0) {
            return Err(Error::domain(format!("1 + 2f = {} is not positive", 1.0 + 2.0 * f)));
        }
        Ok(PointJet { derivs })
    }

    pub fn zero() -> Self {
        PointJet { derivs: vec![0.0] }
    }

    pub fn deriv(&self, k: usize) -> f64 {
        self.derivs.get(k).copied().unwrap_or(0.0)
    }

    /// `r^2 = 1 + 2f`.
    pub fn r2(&self) -> f64 {
        1.0 + 2.0 * self.deriv(0)
    }

    /// `X(z) = Delta_z f / r^2` as a series of the given order.
    pub fn x_series(&self, order: usize) -> Result<ZSeries> {
        // (f(x) - f(x - z)) / z
        let mut fact = 1.0;
        let mut diff = vec![0.0; order + 1];
        for (k, d) in diff.iter_mut().enumerate() {
            fact *= (k + 1) as f64;
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            *d = sign * self.deriv(k + 1) / fact;
        }
        ZSeries::new(diff)
            .div(&ZSeries::chord_over_z(order))
            .map(|s| s.scale(1.0 / self.r2()))
    }
}

/// Series of `K^kind_z(Delta_z f / r^2)` in powers of `z` up to `order`.
pub fn k_series(kind: KernelKind, jet: &PointJet, alpha: Alpha, order: usize) -> Result<ZSeries> {
    let a = alpha.value();
    let x = jet.x_series(order)?;
    let w = ZSeries::chord(order);
    let u = &x * &w;
    let one = ZSeries::constant(1.0, order);
    let s = (&one - &u.scale(2.0)).sqrt()?;
    // Q = 2 X^2 / (1 - u + s) + s
    let q = &(&x * &x).scale(2.0).div(&(&(&one - &u) + &s))? + &s;
    let p = q.powf(-0.5 * a)?;
    // (s - cos z) / w = -2X / (1 + s) + w / 2
    let t = &x.scale(-2.0).div(&(&one + &s))? + &w.scale(0.5);
    let cos = ZSeries::cos(order);
    Ok(match kind {
        KernelKind::K1 => {
            let bracket = &(&cos.div(&s)? - &ZSeries::constant(2.0, order)) + &(&t * &t).div(&q)?.scale(a);
            &p * &bracket
        }
        KernelKind::K2 => p.div(&s)?,
        KernelKind::K3 => {
            let s3 = &(&s * &s) * &s;
            let first = &ZSeries::sin(order) * &p.div(&s3)?;
            let second = (&(&t * &ZSeries::cos_half(order)) * &p).div(&(&(&s * &s) * &q))?;
            &first + &second.scale(a)
        }
    })
}

/// `K^{j,l}(0)` for `j = 1, 2, 3` and `l = 0, 1, 2`, indexed `[j - 1][l]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelConstants {
    pub entries: [[f64; 3]; 3],
}

impl KernelConstants {
    pub fn get(&self, kind: KernelKind, l: usize) -> f64 {
        self.entries[kind.index()][l]
    }
}

/// Closed-form coefficients at the zero profile.
pub fn kernel_constants(alpha: Alpha) -> KernelConstants {
    let b = 1.0 - 0.5 * alpha.value();
    KernelConstants {
        entries: [
            [-1.0, 0.0, -0.5 * b],
            [1.0, 0.0, 0.0],
            [0.0, 2.0 - b, 0.0],
        ],
    }
}

/// Kernel coefficients `K^{j,l}` at every grid point, for `l <= order`.
fn grid_jets(field: &GridFunction, order: usize) -> Vec<PointJet> {
    let spec = field.spectrum();
    let derivs: Vec<GridFunction> = (0..=(order as u32 + 1))
        .map(|p| if p == 0 { field.clone() } else { spec.derivative(p).to_grid() })
        .collect();
    (0..field.n())
        .map(|k| PointJet {
            derivs: derivs.iter().map(|d| d.samples()[k]).collect(),
        })
        .collect()
}

/// `(A0, A1)` on the grid of `field`.
pub fn a0_a1(field: &GridFunction, alpha: Alpha) -> Result<(GridFunction, GridFunction)> {
    let a = alpha.value();
    let jets = grid_jets(field, SERIES_ORDER);
    let pairs: Result<Vec<(f64, f64)>> = jets
        .par_iter()
        .map(|jet| {
            let jet = PointJet::new(jet.derivs.clone())?;
            let k1 = k_series(KernelKind::K1, &jet, alpha, SERIES_ORDER)?;
            let k2 = k_series(KernelKind::K2, &jet, alpha, SERIES_ORDER)?;
            let k3 = k_series(KernelKind::K3, &jet, alpha, SERIES_ORDER)?;
            let r2 = jet.r2();
            let r_pow = r2.powf(-0.5 * a);
            let (f1, f2) = (jet.deriv(1), jet.deriv(2));
            let a0 = r_pow * (k1.coeff(0) + (a - 1.0) * k2.coeff(0) + f1 / r2 * k3.coeff(0)) + (2.0 - a);
            let a1 = r_pow
                * (k1.coeff(1)
                    + (a - 2.0) * k2.coeff(1)
                    + (f1 * k3.coeff(1) - f2 * k3.coeff(0)) / r2);
            Ok((a0, a1))
        })
        .collect();
    let pairs = pairs?;
    Ok((
        GridFunction::new(pairs.iter().map(|p| p.0).collect())?,
        GridFunction::new(pairs.iter().map(|p| p.1).collect())?,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityReport {
    pub alpha: f64,
    pub max_residual: f64,
    pub worst_x: f64,
    pub pass: bool,
}

/// Residual of `A1 + (1/2) d/dx A0` normalized by `max(1, max|A1|)`.
pub fn identity_residual(field: &GridFunction, alpha: Alpha) -> Result<IdentityReport> {
    let (a0, a1) = a0_a1(field, alpha)?;
    let da0 = a0.derivative(1);
    let scale = a1.sup_norm().max(1.0);
    let mut worst = (0.0, 0usize);
    for k in 0..field.n() {
        let r = (a1.samples()[k] + 0.5 * da0.samples()[k]).abs() / scale;
        if r > worst.0 {
            worst = (r, k);
        }
    }
    Ok(IdentityReport {
        alpha: alpha.value(),
        max_residual: worst.0,
        worst_x: node(field.n(), worst.1),
        pass: worst.0 <= IDENTITY_TOL,
    })
}

/// One report per `alpha`.
pub fn verify_hamiltonian_identity(field: &GridFunction, alphas: &[Alpha]) -> Result<Vec<IdentityReport>> {
    alphas.iter().map(|&a| identity_residual(field, a)).collect()
}

/// `n_points` values of `alpha` spread over `(0, 2)` keeping `gap` away from 0, 1 and 2.
pub fn alpha_grid(n_points: usize, gap: f64) -> Vec<Alpha> {
    let per_side = n_points / 2;
    let side = |lo: f64, hi: f64, count: usize| -> Vec<f64> {
        (0..count)
            .map(|i| lo + (hi - lo) * i as f64 / (count.max(2) - 1) as f64)
            .collect()
    };
    let mut v = side(gap, 1.0 - gap, per_side);
    v.extend(side(1.0 + gap, 2.0 - gap, n_points - per_side));
    v.into_iter().map(|a| Alpha::new(a).expect("grid inside (0, 2)")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn al(a: f64) -> Alpha {
        Alpha::new(a).unwrap()
    }

    #[test]
    fn zero_profile_kernels() {
        let a = al(1.3);
        for z in [0.3, -1.1, 2.9] {
            let c: f64 = 2.0 * (1.0 - f64::cos(z));
            assert!((g1(0.0, z, a).unwrap() - 0.5 * c.powf(1.0 - 0.65)).abs() < 1e-14);
            assert!((g2(0.0, z, a).unwrap() - c.powf(-0.65)).abs() < 1e-13);
            assert_eq!(g1(0.1, z, a).unwrap(), g1(0.1, -z, a).unwrap());
            assert_eq!(g2(0.1, z, a).unwrap(), g2(0.1, -z, a).unwrap());
        }
        assert!(g1(0.6, 0.3, a).is_err());
    }

    #[test]
    fn g2_derivative_matches_difference() {
        let a = al(1.5);
        let h = 1e-5;
        for z in [0.4, 1.7] {
            let fd = (g2(h, z, a).unwrap() - g2(-h, z, a).unwrap()) / (2.0 * h);
            assert!((fd - g2_prime(0.0, z, a).unwrap()).abs() < 1e-6);
            let fd1 = (g1(0.1 + h, z, a).unwrap() - g1(0.1 - h, z, a).unwrap()) / (2.0 * h);
            assert!((fd1 - g1_prime(0.1, z, a).unwrap()).abs() < 1e-6);
        }
    }

    #[test]
    fn constants_from_zero_jet() {
        for a in [0.4, 1.0, 1.7] {
            let a = al(a);
            let c = kernel_constants(a);
            for kind in KernelKind::ALL {
                let s = k_series(kind, &PointJet::zero(), a, SERIES_ORDER).unwrap();
                for l in 0..3 {
                    assert!((s.coeff(l) - c.get(kind, l)).abs() < 1e-12, "{kind:?} l = {l}");
                }
            }
        }
        let c = kernel_constants(al(1.5));
        assert_eq!(c.get(KernelKind::K1, 0), -1.0);
        assert_eq!(c.get(KernelKind::K3, 1), 1.75);
        assert_eq!(c.get(KernelKind::K2, 1), 0.0);
    }

    #[test]
    fn series_against_pointwise_kernel() {
        let a = al(1.5);
        let jet = PointJet::new(vec![0.05, 0.08, -0.03, 0.02, 0.01, -0.005]).unwrap();
        let x_at = |z: f64| {
            // f(x - z) from the Taylor polynomial of the jet
            let mut fy = 0.0;
            let mut fact = 1.0;
            for k in 0..6 {
                if k > 0 {
                    fact *= k as f64;
                }
                fy += jet.deriv(k) * (-z).powi(k as i32) / fact;
            }
            (jet.deriv(0) - fy) / (2.0 * (0.5 * z).sin()) / jet.r2()
        };
        for kind in KernelKind::ALL {
            let s = k_series(kind, &jet, a, SERIES_ORDER).unwrap();
            let errs: Vec<f64> = [1e-2, 5e-3, 2.5e-3]
                .iter()
                .map(|&z| (s.eval(z) - k_pointwise(kind, x_at(z), z, a).unwrap()).abs())
                .collect();
            for w in errs.windows(2) {
                let ratio = w[0] / w[1];
                assert!(ratio > 12.0 && ratio < 20.0, "{kind:?}: ratio {ratio}");
            }
        }
    }

    #[test]
    fn k2_linear_coefficient_against_difference() {
        let a = al(1.2);
        let slope = 0.3;
        let jet = PointJet::new(vec![0.0, slope]).unwrap();
        let s = k_series(KernelKind::K2, &jet, a, SERIES_ORDER).unwrap();
        // for f = slope * x locally, Delta_z f = slope * z / (2 sin(z/2))
        let at = |z: f64| k_pointwise(KernelKind::K2, slope * z / (2.0 * (0.5 * z).sin()), z, a).unwrap();
        let h = 1e-3;
        let fd = (at(h) - at(-h)) / (2.0 * h);
        assert!(s.coeff(1).abs() > 1e-3);
        assert!((fd - s.coeff(1)).abs() < 1e-6);
    }

    #[test]
    fn truncation_consistency() {
        let jet = PointJet::new(vec![0.1, -0.2, 0.05, 0.3, -0.1, 0.2, 0.1]).unwrap();
        for kind in KernelKind::ALL {
            let lo = k_series(kind, &jet, al(0.7), 3).unwrap();
            let hi = k_series(kind, &jet, al(0.7), 5).unwrap();
            for l in 0..=3 {
                assert!((lo.coeff(l) - hi.coeff(l)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn kernels_are_periodic_in_z() {
        let a = al(0.8);
        let f = |x: f64| 0.1 * x.cos() + 0.05 * (2.0 * x).sin();
        let x0 = 0.7;
        for kind in KernelKind::ALL {
            for z in [0.3, 1.9, -2.4] {
                let arg = |z: f64| (f(x0) - f(x0 - z)) / (2.0 * (0.5 * z).sin()) / (1.0 + 2.0 * f(x0));
                let v0 = k_pointwise(kind, arg(z), z, a).unwrap();
                let v1 = k_pointwise(kind, arg(z + 2.0 * PI), z + 2.0 * PI, a).unwrap();
                assert!((v0 - v1).abs() < 1e-12 * v0.abs().max(1.0));
            }
        }
    }

    #[test]
    fn identity_on_zero_profile() {
        let zero = GridFunction::zeros(32).unwrap();
        let (a0, a1) = a0_a1(&zero, al(1.5)).unwrap();
        assert!(a0.sup_norm() < 1e-15 && a1.sup_norm() < 1e-15);
        let r = identity_residual(&zero, al(0.3)).unwrap();
        assert!(r.pass && r.max_residual < 1e-15);
    }

    #[test]
    fn identity_on_simple_profile() {
        let f = GridFunction::from_fn(128, |x| 0.1 * x.cos()).unwrap();
        let r = identity_residual(&f, al(1.5)).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn alpha_grid_avoids_one() {
        let g = alpha_grid(8, 0.05);
        assert_eq!(g.len(), 8);
        assert!(g.iter().all(|a| (a.value() - 1.0).abs() >= 0.05 - 1e-12));
    }
}
