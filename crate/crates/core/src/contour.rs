//! Right-hand sides of the patch evolution: the gradient of the pseudo-energy,
//! the Hamiltonian field `d/dx grad E(f)` and the radial-elevation equation,
//! together with quadrature checks of the two closed-form integrals.
//!
//! All `z`-integrals use the offset midpoint rule of [`QuadratureRule`] with
//! `z = x - y`. Samples of `f(x - z)` at the `m` nodes come from `m / n` exact
//! spectral translations: writing `i = q (m/n) + r`, the node `x_k - z_i` equals
//! `x_{k - q + n/2} - (r + 1/2) h`.

use rayon::prelude::*;
use serde::Serialize;

use crate::dispersion::{c_alpha, l_alpha, m_alpha, zero_mode_constant, Alpha};
use crate::error::{Error, Result};
use crate::grid::{GridFunction, SpectralField};
use crate::kernels::g1;
use crate::quadrature::QuadratureRule;
use crate::zseries::ZSeries;

/// Order of the local series used for the endpoint corrections.
const LOCAL_ORDER: usize = 5;

/// `f = h + h^2 / 2`.
pub fn f_from_h(h: &GridFunction) -> Result<GridFunction> {
    if let Some(v) = h.samples().iter().find(|&&v| !(1.0 + v > 0.0)) {
        return Err(Error::domain(format!("1 + h = {} is not positive", 1.0 + v)));
    }
    h.map(|v| v + 0.5 * v * v)
}

/// `h = sqrt(1 + 2f) - 1`.
pub fn h_from_f(f: &GridFunction) -> Result<GridFunction> {
    if let Some(v) = f.samples().iter().find(|&&v| !(1.0 + 2.0 * v > 0.0)) {
        return Err(Error::domain(format!("1 + 2f = {} is not positive", 1.0 + 2.0 * v)));
    }
    f.map(|v| 2.0 * v / ((1.0 + 2.0 * v).sqrt() + 1.0))
}

fn check_rule(n: usize, rule: &QuadratureRule) -> Result<usize> {
    if rule.m() < 4 * n {
        return Err(Error::InvalidArgument(format!(
            "quadrature size {} must be at least 4 n = {}",
            rule.m(),
            4 * n
        )));
    }
    Ok(rule.m() / n)
}

/// Samples of several derivatives of a field at all `x_l - (r + 1/2) h`,
/// stored as `[derivative][l * p + r]`.
struct Shifted {
    p: usize,
    data: Vec<Vec<f64>>,
}

impl Shifted {
    fn new(spec: &SpectralField, orders: &[u32], rule: &QuadratureRule) -> Self {
        let n = spec.n();
        let p = rule.m() / n;
        let h = rule.step();
        let mut data = vec![vec![0.0; n * p]; orders.len()];
        for r in 0..p {
            let delta = (r as f64 + 0.5) * h;
            for (d, &ord) in orders.iter().enumerate() {
                let g = spec.shifted_derivative_samples(delta, ord);
                for (l, v) in g.samples().iter().enumerate() {
                    data[d][l * p + r] = *v;
                }
            }
        }
        Shifted { p, data }
    }
}

/// Node tables `cos z_i`, `sin z_i`, `(2 sin(z_i/2))^2`.
struct Nodes {
    cos: Vec<f64>,
    sin: Vec<f64>,
    w2: Vec<f64>,
}

impl Nodes {
    fn new(rule: &QuadratureRule) -> Self {
        let z: Vec<f64> = rule.nodes().collect();
        Nodes {
            cos: z.iter().map(|z| z.cos()).collect(),
            sin: z.iter().map(|z| z.sin()).collect(),
            w2: z
                .iter()
                .map(|z| {
                    let w = 2.0 * (0.5 * z).sin();
                    w * w
                })
                .collect(),
        }
    }
}

/// `sum_p d_p (-z)^p / p!` for derivatives `d_offset, d_offset+1, ...`.
fn shifted_taylor(derivs: &[f64], offset: usize, order: usize) -> ZSeries {
    let mut coeffs = Vec::with_capacity(order + 1);
    let mut fact = 1.0;
    for p in 0..=order {
        if p > 0 {
            fact *= p as f64;
        }
        let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
        coeffs.push(sign * derivs.get(p + offset).copied().unwrap_or(0.0) / fact);
    }
    ZSeries::new(coeffs)
}

fn jets(spec: &SpectralField, count: u32) -> Vec<Vec<f64>> {
    let grids: Vec<GridFunction> = (0..count).map(|p| spec.derivative(p).to_grid()).collect();
    (0..spec.n())
        .map(|k| grids.iter().map(|g| g.samples()[k]).collect())
        .collect()
}

/// Taylor coefficients of `g` in `N D^{-alpha/2} = |z|^{2-alpha} g(z)` for the gradient integrand.
fn grad_local_series(jet: &[f64], alpha: Alpha) -> Result<ZSeries> {
    let o = LOCAL_ORDER;
    let fx = jet[0];
    let rx = (1.0 + 2.0 * fx).sqrt();
    let fy = shifted_taylor(jet, 0, o);
    let dfy = shifted_taylor(jet, 1, o);
    let ry = fy.scale(2.0).add_const(1.0).sqrt()?;
    let rpy = dfy.div(&ry)?;
    // r_x - r_y = 2 (f_x - f_y) / (r_x + r_y), with an exact zero constant term
    let mut num = fy.scale(-2.0);
    let mut c = num.coeffs().to_vec();
    c[0] = 0.0;
    num = ZSeries::new(c);
    let delta = num.div(&ry.add_const(rx))?;
    let w = ZSeries::chord(o);
    let w2 = &w * &w;
    let d = &(&delta * &delta) + &(&ry * &w2).scale(rx);
    let nn = &(&(&ry * &delta).scale(-1.0) + &(&ry * &w2).scale(0.5 * rx)) + &(&rpy * &ZSeries::sin(o)).scale(rx);
    let d2 = d.div_z_pow(2);
    let n2 = nn.div_z_pow(2);
    Ok(&n2 * &d2.powf(-0.5 * alpha.value())?)
}

/// Taylor coefficients of `g` in `n D^{-alpha/2} = |z|^{1-alpha} sign(z) g(z)` for the elevation integrand.
fn elevation_local_series(jet: &[f64], alpha: Alpha) -> Result<ZSeries> {
    let o = LOCAL_ORDER;
    let rx = 1.0 + jet[0];
    let hpx = jet.get(1).copied().unwrap_or(0.0);
    let hy = shifted_taylor(jet, 0, o);
    let ry = hy.add_const(1.0);
    let hpy = shifted_taylor(jet, 1, o);
    let mut c = hy.scale(-1.0).coeffs().to_vec();
    c[0] = 0.0;
    let delta = ZSeries::new(c); // R_x - R_y
    let w = ZSeries::chord(o);
    let d = &(&delta * &delta) + &(&ry * &(&w * &w)).scale(rx);
    let first = &hpy.scale(rx) - &ry.scale(hpx);
    let second = &ry.scale(rx) + &hpy.scale(hpx);
    let mut nn = &(&ZSeries::cos(o) * &first) + &(&ZSeries::sin(o) * &second);
    let mut c = nn.coeffs().to_vec();
    c[0] = 0.0;
    nn = ZSeries::new(c);
    let n1 = nn.div_z_pow(1);
    let d2 = d.div_z_pow(2);
    Ok(&n1 * &d2.powf(-0.5 * alpha.value())?)
}

/// `grad E(f)` on the grid of `f`.
pub fn grad_e(f: &GridFunction, alpha: Alpha, rule: &QuadratureRule) -> Result<GridFunction> {
    let n = f.n();
    check_rule(n, rule)?;
    if let Some(v) = f.samples().iter().find(|&&v| !(1.0 + 2.0 * v > 0.0)) {
        return Err(Error::domain(format!("1 + 2f = {} is not positive", 1.0 + 2.0 * v)));
    }
    let a = alpha.value();
    let spec = f.spectrum();
    let sh = Shifted::new(&spec, &[0, 1], rule);
    let (fs, dfs) = (&sh.data[0], &sh.data[1]);
    let ry: Vec<f64> = fs.iter().map(|v| (1.0 + 2.0 * v).sqrt()).collect();
    let rpy: Vec<f64> = dfs.iter().zip(&ry).map(|(d, r)| d / r).collect();
    let nodes = Nodes::new(rule);
    let weights = rule.correction_weights(alpha, 2)?;
    let jet_count = if rule.corrections() > 0 { LOCAL_ORDER as u32 + 2 } else { 1 };
    let local = jets(&spec, jet_count);
    let prefactor = c_alpha(alpha) / (2.0 - a);
    let m_inv = 1.0 / rule.m() as f64;
    let half_a = -0.5 * a;
    let values: Result<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|k| {
            let fx = f.samples()[k];
            let rx = (1.0 + 2.0 * fx).sqrt();
            let mut sum = 0.0;
            let mut min_d = f64::INFINITY;
            for q in 0..n {
                let l = (k + n + n / 2 - q) % n;
                let base = l * sh.p;
                let ibase = q * sh.p;
                for r in 0..sh.p {
                    let i = ibase + r;
                    let fy = fs[base + r];
                    let y = ry[base + r];
                    let delta = 2.0 * (fx - fy) / (rx + y);
                    let ryw = rx * y * nodes.w2[i];
                    let d = delta * delta + ryw;
                    let num = -y * delta + 0.5 * ryw + rx * rpy[base + r] * nodes.sin[i];
                    min_d = min_d.min(d);
                    sum += num * (half_a * d.ln()).exp();
                }
            }
            if !(min_d > 0.0) {
                return Err(Error::domain(format!(
                    "gradient denominator {min_d} is not positive at x index {k}"
                )));
            }
            let corr = if weights.max_index().is_some() {
                weights.apply(grad_local_series(&local[k], alpha)?.coeffs())
            } else {
                0.0
            };
            Ok(prefactor * (sum * m_inv - corr))
        })
        .collect();
    GridFunction::new(values?)
}

/// `d/dx grad E(f)`.
pub fn rhs_f(f: &GridFunction, alpha: Alpha, rule: &QuadratureRule) -> Result<GridFunction> {
    Ok(grad_e(f, alpha, rule)?.derivative(1))
}

/// `d/dt h` from the elevation equation.
///
/// The sign is fixed so that `(1 + h) rhs_h(h)` equals `rhs_f(f)` for
/// `f = h + h^2/2`, i.e. consistent with the Hamiltonian form and the
/// dispersion relation.
pub fn rhs_h(h: &GridFunction, alpha: Alpha, rule: &QuadratureRule) -> Result<GridFunction> {
    let n = h.n();
    check_rule(n, rule)?;
    if let Some(v) = h.samples().iter().find(|&&v| !(1.0 + v > 0.0)) {
        return Err(Error::domain(format!("1 + h = {} is not positive", 1.0 + v)));
    }
    let a = alpha.value();
    let spec = h.spectrum();
    let sh = Shifted::new(&spec, &[0, 1], rule);
    let (hs, dhs) = (&sh.data[0], &sh.data[1]);
    let nodes = Nodes::new(rule);
    let weights = rule.correction_weights(alpha, 1)?;
    let jet_count = if rule.corrections() > 0 { LOCAL_ORDER as u32 + 2 } else { 2 };
    let local = jets(&spec, jet_count);
    let ca = c_alpha(alpha);
    let m_inv = 1.0 / rule.m() as f64;
    let half_a = -0.5 * a;
    let values: Result<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|k| {
            let hx = h.samples()[k];
            let rx = 1.0 + hx;
            let hpx = local[k][1];
            let mut sum = 0.0;
            let mut min_d = f64::INFINITY;
            for q in 0..n {
                let l = (k + n + n / 2 - q) % n;
                let base = l * sh.p;
                let ibase = q * sh.p;
                for r in 0..sh.p {
                    let i = ibase + r;
                    let hy = hs[base + r];
                    let ry = 1.0 + hy;
                    let hpy = dhs[base + r];
                    let delta = hx - hy;
                    let d = delta * delta + rx * ry * nodes.w2[i];
                    let num = nodes.cos[i] * (rx * hpy - ry * hpx) + nodes.sin[i] * (rx * ry + hpx * hpy);
                    min_d = min_d.min(d);
                    sum += num * (half_a * d.ln()).exp();
                }
            }
            if !(min_d > 0.0) {
                return Err(Error::domain(format!(
                    "elevation denominator {min_d} is not positive at x index {k}"
                )));
            }
            let corr = if weights.max_index().is_some() {
                weights.apply(elevation_local_series(&local[k], alpha)?.coeffs())
            } else {
                0.0
            };
            Ok(ca * (sum * m_inv - corr) / rx)
        })
        .collect();
    GridFunction::new(values?)
}

/// `(1/2π) ∫ e^{-ijz} [2(1 - cos z)]^{1 - alpha/2} dz` by the corrected rule.
pub fn chord_power_fourier(alpha: Alpha, j: u64, rule: &QuadratureRule) -> Result<f64> {
    let pw = 2.0 - alpha.value();
    let jf = j as f64;
    let order = 2 * rule.corrections() + 1;
    let cos_j = ZSeries::from_fn(order, |k| ZSeries::cos(order).coeff(k) * jf.powi(k as i32));
    let g = &ZSeries::chord_over_z(order).powf(pw)? * &cos_j;
    rule.average(
        alpha,
        2,
        |z| (2.0 * (0.5 * z).sin()).abs().powf(pw) * (jf * z).cos(),
        g.coeffs(),
    )
}

/// `|(1/2π) ∫ e^{-ijz}[2(1 - cos z)]^{1 - alpha/2} dz + 2(1 - alpha/2) M(j)|`.
pub fn check_m_alpha_integral(alpha: Alpha, j: u64, rule: &QuadratureRule) -> Result<f64> {
    let quad = chord_power_fourier(alpha, j, rule)?;
    let b = 1.0 - 0.5 * alpha.value();
    Ok((quad + 2.0 * b * m_alpha(alpha, j as f64)?).abs())
}

/// `|(1/2π) ∫ G1_z(0) dz - Gamma(2 - alpha) / ((1 - alpha/2) Gamma(1 - alpha/2)^2)|`.
pub fn check_g1_zero_integral(alpha: Alpha, rule: &QuadratureRule) -> Result<f64> {
    let pw = 2.0 - alpha.value();
    let order = 2 * rule.corrections() + 1;
    let g = ZSeries::chord_over_z(order).powf(pw)?.scale(0.5);
    let mut failure = None;
    let quad = rule.average(
        alpha,
        2,
        |z| match g1(0.0, z, alpha) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        },
        g.coeffs(),
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    let exact = zero_mode_constant(alpha) / (1.0 - 0.5 * alpha.value());
    Ok((quad - exact).abs())
}

/// Directional derivative of the gradient at zero along `cos(j x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearizationCheck {
    pub alpha: f64,
    pub j: u64,
    /// `-L(j)`.
    pub expected: f64,
    /// Coefficient of `cos(j x)` in the difference quotient.
    pub measured: f64,
    /// `|measured - expected| / |L(j)|`, absolute for `j = 1` where `L(1) = 0`.
    pub error: f64,
    /// Largest amplitude among the other modes.
    pub off_mode: f64,
}

/// Difference quotient `(grad E(eps cos jx) - grad E(0)) / eps` against `-L(j)`.
pub fn linearization_check(
    alpha: Alpha,
    j: u64,
    n: usize,
    rule: &QuadratureRule,
    eps: f64,
    base: Option<&GridFunction>,
) -> Result<LinearizationCheck> {
    if j == 0 || 2 * j as usize >= n {
        return Err(Error::InvalidArgument(format!("mode {j} outside 1..n/2")));
    }
    let zero;
    let base = match base {
        Some(b) => b,
        None => {
            zero = grad_e(&GridFunction::zeros(n)?, alpha, rule)?;
            &zero
        }
    };
    let jf = j as f64;
    let f = GridFunction::from_fn(n, |x| eps * (jf * x).cos())?;
    let g = grad_e(&f, alpha, rule)?;
    let diff = GridFunction::new(
        g.samples()
            .iter()
            .zip(base.samples())
            .map(|(a, b)| (a - b) / eps)
            .collect(),
    )?;
    let spec = diff.spectrum();
    let measured = 2.0 * spec.coeff(j as i64).re;
    let mut off_mode: f64 = 0.0;
    for i in 0..=(n / 2) as i64 {
        if i != j as i64 {
            let amp = if i == 0 { spec.coeff(0).norm() } else { 2.0 * spec.coeff(i).norm() };
            off_mode = off_mode.max(amp);
        }
    }
    off_mode = off_mode.max(2.0 * spec.coeff(j as i64).im.abs());
    let l = l_alpha(alpha, j);
    Ok(LinearizationCheck {
        alpha: alpha.value(),
        j,
        expected: -l,
        measured,
        error: if j == 1 { (measured + l).abs() } else { (measured + l).abs() / l.abs() },
        off_mode,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispersion::omega;

    fn al(a: f64) -> Alpha {
        Alpha::new(a).unwrap()
    }

    #[test]
    fn change_of_unknown() {
        let h = GridFunction::from_fn(32, |x| 0.1 * x.cos() - 0.05 * (3.0 * x).sin()).unwrap();
        let f = f_from_h(&h).unwrap();
        for (k, v) in f.samples().iter().enumerate() {
            let hv = h.samples()[k];
            assert!((v - (hv + 0.5 * hv * hv)).abs() < 1e-16);
        }
        let back = h_from_f(&f).unwrap();
        for (a, b) in back.samples().iter().zip(h.samples()) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(f_from_h(&GridFunction::from_fn(16, |_| -1.5).unwrap()).is_err());
        assert!(h_from_f(&GridFunction::from_fn(16, |_| -0.6).unwrap()).is_err());
    }

    #[test]
    fn gradient_at_zero_is_constant() {
        let a = al(1.5);
        let rule = QuadratureRule::new(256).unwrap();
        let g = grad_e(&GridFunction::zeros(32).unwrap(), a, &rule).unwrap();
        let want = c_alpha(a) / (2.0 - 1.5) * zero_mode_constant(a) / (1.0 - 0.75);
        for v in g.samples() {
            assert!((v - want).abs() < 1e-11, "{v} vs {want}");
        }
    }

    #[test]
    fn rhs_vanish_at_zero() {
        let rule = QuadratureRule::new(128).unwrap();
        let z = GridFunction::zeros(32).unwrap();
        assert!(rhs_f(&z, al(1.2), &rule).unwrap().sup_norm() < 1e-13);
        assert!(rhs_h(&z, al(1.2), &rule).unwrap().sup_norm() < 1e-13);
    }

    #[test]
    fn linearized_frequency_small_grid() {
        let a = al(1.5);
        let rule = QuadratureRule::new(1024).unwrap();
        let eps = 1e-6;
        let n = 64;
        let j = 3;
        let f = GridFunction::from_fn(n, |x| eps * (3.0 * x).cos()).unwrap();
        let r = rhs_f(&f, a, &rule).unwrap();
        let w = omega(a, j);
        for (k, v) in r.samples().iter().enumerate() {
            let x = crate::grid::node(n, k);
            assert!((v / eps - w * (3.0 * x).sin()).abs() < 1e-5 * w, "k = {k}");
        }
    }

    #[test]
    fn rule_size_guard() {
        let rule = QuadratureRule::new(64).unwrap();
        assert!(grad_e(&GridFunction::zeros(32).unwrap(), al(1.0), &rule).is_err());
    }

    #[test]
    fn integral_identities_small_rule() {
        let rule = QuadratureRule::new(4096).unwrap();
        for a in [0.5, 1.0, 1.5] {
            assert!(check_g1_zero_integral(al(a), &rule).unwrap() < 1e-10);
            for j in [0, 1, 2, 5] {
                assert!(check_m_alpha_integral(al(a), j, &rule).unwrap() < 1e-10);
            }
        }
    }

    #[test]
    fn chain_rule_between_unknowns() {
        let rule = QuadratureRule::new(1024).unwrap();
        for (a, h) in [
            (1.5, GridFunction::from_fn(64, |x| 0.01 * (2.0 * x).cos()).unwrap()),
            (0.7, GridFunction::from_fn(64, |x| 0.05 * x.cos() + 0.03 * (2.0 * x).sin()).unwrap()),
        ] {
            let f = f_from_h(&h).unwrap();
            let via_f = rhs_f(&f, al(a), &rule).unwrap();
            let via_h = rhs_h(&h, al(a), &rule).unwrap();
            let scale = via_f.sup_norm();
            for k in 0..64 {
                let lhs = (1.0 + h.samples()[k]) * via_h.samples()[k];
                assert!((lhs - via_f.samples()[k]).abs() < 1e-6 * scale.max(1e-3), "alpha {a}, k {k}");
            }
        }
    }

    #[test]
    fn translation_equivariance() {
        let n = 64;
        let rule = QuadratureRule::new(256).unwrap();
        let f = GridFunction::from_fn(n, |x| 0.05 * x.cos() + 0.03 * (2.0 * x).sin() - 0.01 * (5.0 * x).cos()).unwrap();
        let shifted = f.rotate(17);
        for which in 0..2 {
            let (a, b) = if which == 0 {
                (grad_e(&f, al(1.3), &rule).unwrap(), grad_e(&shifted, al(1.3), &rule).unwrap())
            } else {
                (rhs_h(&f, al(1.3), &rule).unwrap(), rhs_h(&shifted, al(1.3), &rule).unwrap())
            };
            let a = a.rotate(17);
            for (x, y) in a.samples().iter().zip(b.samples()) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn plain_rule_richardson() {
        let n = 32;
        let f = GridFunction::from_fn(n, |x| 0.01 * (2.0 * x).cos()).unwrap();
        for a in [1.2, 1.5, 1.9] {
            let reference = grad_e(&f, al(a), &QuadratureRule::new(8192).unwrap()).unwrap();
            let err = |m| {
                let g = grad_e(&f, al(a), &QuadratureRule::plain(m).unwrap()).unwrap();
                g.samples()
                    .iter()
                    .zip(reference.samples())
                    .map(|(x, y)| (x - y).abs())
                    .fold(0.0, f64::max)
            };
            let ratio = err(256) / err(512);
            assert!(ratio >= 2f64.powf(2.0 - a) - 0.2, "alpha {a}: ratio {ratio}");
        }
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(16))]

        #[test]
        fn rhs_has_zero_mean(c in proptest::collection::vec(-0.02f64..0.02, 6), a in 0.2f64..1.9) {
            let f = GridFunction::from_fn(32, |x| {
                c.iter().enumerate().map(|(k, v)| {
                    let j = (k / 2 + 1) as f64;
                    if k % 2 == 0 { v * (j * x).cos() } else { v * (j * x).sin() }
                }).sum()
            }).unwrap();
            let r = rhs_f(&f, al(a), &QuadratureRule::new(128).unwrap()).unwrap();
            proptest::prop_assert!(r.mean().abs() < 1e-13);
        }

        #[test]
        fn unknowns_round_trip(c in proptest::collection::vec(-0.3f64..0.3, 4)) {
            let h = GridFunction::from_fn(16, |x| c[0] * x.cos() + c[1] * (2.0 * x).sin() + c[2] * (3.0 * x).cos() + c[3] * 0.1).unwrap();
            let back = h_from_f(&f_from_h(&h).unwrap()).unwrap();
            for (a, b) in back.samples().iter().zip(h.samples()) {
                proptest::prop_assert!((a - b).abs() < 1e-13);
            }
        }
    }
}
