//! Linear frequencies of the perturbed circular patch.
//!
//! `L(j)` is the symbol of minus the linearized gradient at the circle and
//! `omega(j) = j L(|j|)` the dispersion relation.

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, TableInvariant};
use crate::special::{gamma, gamma_ratio, EULER_MASCHERONI};

/// Below this distance from 1 the closed forms that divide by `alpha - 1`
/// are replaced by direct sums.
const NEAR_ONE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Alpha(f64);

impl Alpha {
    pub fn new(value: f64) -> Result<Self> {
        if value > 0.0 && value < 2.0 {
            Ok(Alpha(value))
        } else {
            Err(Error::InvalidAlpha(value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_one(self) -> bool {
        (self.0 - 1.0).abs() < 1e-12
    }

    /// Errors when `alpha` is within `tol` of 1.
    pub fn excluding_one(self, tol: f64) -> Result<Self> {
        if (self.0 - 1.0).abs() < tol {
            Err(Error::AlphaIsOne(self.0))
        } else {
            Ok(self)
        }
    }

    /// `delta = alpha - 1`.
    pub fn delta(self) -> f64 {
        self.0 - 1.0
    }

    /// `1 - alpha/2`, the recurring shift in every Gamma ratio.
    pub(crate) fn b(self) -> f64 {
        1.0 - 0.5 * self.0
    }
}

impl TryFrom<f64> for Alpha {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Alpha::new(v)
    }
}

impl From<Alpha> for f64 {
    fn from(a: Alpha) -> f64 {
        a.0
    }
}

/// `c_alpha = Gamma(alpha/2) / (2^{1-alpha} Gamma(1 - alpha/2))`.
pub fn c_alpha(alpha: Alpha) -> f64 {
    let a = alpha.value();
    gamma(0.5 * a).expect("alpha/2 in (0,1)")
        / (2f64.powf(1.0 - a) * gamma(alpha.b()).expect("1 - alpha/2 in (0,1)"))
}

/// `Gamma(2 - alpha) / (Gamma(1 - alpha/2) Gamma(alpha/2))`, the common
/// prefactor of `T1`, `T2` and `M`.
pub fn t_prefactor(alpha: Alpha) -> f64 {
    let a = alpha.value();
    gamma(2.0 - a).unwrap() / (gamma(alpha.b()).unwrap() * gamma(0.5 * a).unwrap())
}

/// `Gamma(2 - alpha) / Gamma(1 - alpha/2)^2`.
pub fn zero_mode_constant(alpha: Alpha) -> f64 {
    let g = gamma(alpha.b()).unwrap();
    gamma(2.0 - alpha.value()).unwrap() / (g * g)
}

/// `T1(j)` by its defining finite sum.
pub fn t1_sum(alpha: Alpha, j: u64) -> f64 {
    let a = alpha.value();
    let b = alpha.b();
    let mut ratio = gamma(0.5 * a).unwrap() / gamma(b).unwrap();
    let mut sum = 0.0;
    for k in 0..j {
        let kf = k as f64;
        sum += ratio / (b + kf);
        ratio *= (0.5 * a + kf) / (b + kf);
    }
    t_prefactor(alpha) * sum
}

/// `T1(j)` in closed form, valid away from `alpha = 1`.
pub fn t1_closed(alpha: Alpha, j: u64) -> Result<f64> {
    let alpha = alpha.excluding_one(1e-12)?;
    let a = alpha.value();
    let b = alpha.b();
    if j == 0 {
        return Ok(0.0);
    }
    let r_j = gamma_ratio(j as f64, 0.5 * a, b)?;
    let r_0 = gamma(0.5 * a)? / gamma(b)?;
    Ok(t_prefactor(alpha) / (a - 1.0) * (r_j - r_0))
}

/// `T1(j)`: closed form when `alpha` is not close to 1, the sum otherwise.
pub fn t1(alpha: Alpha, j: u64) -> f64 {
    if (alpha.value() - 1.0).abs() >= NEAR_ONE {
        t1_closed(alpha, j).expect("alpha away from 1")
    } else {
        t1_sum(alpha, j)
    }
}

/// `T2(xi)` in Gamma-ratio form.
pub fn t2(alpha: Alpha, xi: f64) -> Result<f64> {
    if !(xi >= 0.0) {
        return Err(Error::domain(format!("t2 needs xi >= 0, got {xi}")));
    }
    Ok(t_prefactor(alpha) * gamma_ratio(xi, 0.5 * alpha.value(), alpha.b())?)
}

/// `M(xi) = T2(xi) / (xi^2 - (1 - alpha/2)^2)`.
pub fn m_alpha(alpha: Alpha, xi: f64) -> Result<f64> {
    if !(xi >= 0.0) {
        return Err(Error::domain(format!("m_alpha needs xi >= 0, got {xi}")));
    }
    let b = alpha.b();
    if (xi - b).abs() < 1e-9 {
        return Err(Error::RemovableSingularity { xi });
    }
    Ok(t2(alpha, xi)? / ((xi - b) * (xi + b)))
}

/// `T2` through the multiplier form `(xi^2 - (1 - alpha/2)^2) M(xi)`, where `M`
/// is evaluated as `C Gamma(xi + alpha/2 - 1) / Gamma(xi + 2 - alpha/2)`.
pub fn t2_from_m(alpha: Alpha, xi: f64) -> Result<f64> {
    let b = alpha.b();
    if (xi - b).abs() < 1e-9 {
        return Err(Error::RemovableSingularity { xi });
    }
    let m = t_prefactor(alpha) * gamma_ratio(xi, -b, 1.0 + b)?;
    Ok((xi - b) * (xi + b) * m)
}

/// `L(j) = c_alpha / (2 - alpha) [T1(j) - T2(j) - Gamma(2-alpha)/Gamma(1-alpha/2)^2]`.
pub fn l_alpha(alpha: Alpha, j: u64) -> f64 {
    let bracket = t1(alpha, j) - t2(alpha, j as f64).unwrap() - zero_mode_constant(alpha);
    c_alpha(alpha) / (2.0 - alpha.value()) * bracket
}

/// `omega(j) = j L(|j|)`.
pub fn omega(alpha: Alpha, j: i64) -> f64 {
    j as f64 * l_alpha(alpha, j.unsigned_abs())
}

/// `L(k + 1) - L(k) = c_alpha T2(k) / (1 - alpha/2 + k)`.
pub fn l_increment(alpha: Alpha, k: u64) -> f64 {
    let kf = k as f64;
    c_alpha(alpha) * t2(alpha, kf).unwrap() / (alpha.b() + kf)
}

/// Closed form of `omega(j+1) + omega(j-1) - 2 omega(j)`.
pub fn second_difference_closed(alpha: Alpha, j: u64) -> f64 {
    let a = alpha.value();
    let g = gamma(alpha.b()).unwrap();
    let pre = gamma(2.0 - a).unwrap() / (2f64.powf(1.0 - a) * g * g);
    let jf = j as f64;
    pre * gamma_ratio(jf, 0.5 * a - 1.0, 2.0 - 0.5 * a).unwrap() * a * jf
}

/// Constant term of the large-`j` expansion of `L`.
pub fn v_alpha(alpha: Alpha) -> f64 {
    let a = alpha.value();
    if alpha.is_one() {
        return v_one_series(1e-12).0;
    }
    let g = gamma(alpha.b()).unwrap();
    a * c_alpha(alpha) * gamma(1.0 - a).unwrap() / ((2.0 - a) * g * g)
}

/// Coefficient of `|j|^{alpha-1}` in the large-`j` expansion of `L` (alpha != 1).
pub fn c1_alpha(alpha: Alpha) -> Result<f64> {
    let alpha = alpha.excluding_one(1e-12)?;
    let a = alpha.value();
    Ok(c_alpha(alpha) / (2.0 - a) * gamma(3.0 - a)?
        / (gamma(alpha.b())? * gamma(0.5 * a)?)
        / (a - 1.0))
}

/// The `alpha = 1` constant
/// `(1/pi) {gamma_EM - pi^2/12 + sum_k [1/(k + 1/2) - (1/k)(1 - 1/(2k))]}`,
/// summed until the tail bound `1/(8K^2)` drops below `tol`. Returns the value
/// and the number of terms used.
pub fn v_one_series(tol: f64) -> (f64, u64) {
    let terms = (1.0 / (8.0 * tol)).sqrt().ceil() as u64;
    // sum smallest terms first
    let mut sum = 0.0;
    for k in (1..=terms).rev() {
        let kf = k as f64;
        sum += 1.0 / (0.5 + kf) - (1.0 - 0.5 / kf) / kf;
    }
    ((EULER_MASCHERONI - PI * PI / 12.0 + sum) / PI, terms)
}

/// Precomputed `L(j)` and `omega(j)` for `0 <= j <= j_max` with certified invariants.
#[derive(Debug, Clone)]
pub struct FrequencyTable {
    alpha: Alpha,
    l: Vec<f64>,
    omega: Vec<f64>,
    /// `omega(j) - omega(j-1)` for j >= 1, index 0 unused.
    increments: Vec<f64>,
}

/// Maximal allowed table size.
pub const J_MAX_LIMIT: usize = 1 << 20;

/// Builds the table by accumulating `L(j) = sum_{k=1}^{j-1} (L(k+1) - L(k))`
/// from `L(1) = 0`, then certifies the invariants.
pub fn build_table(alpha: Alpha, j_max: usize) -> Result<FrequencyTable> {
    if !(2..=J_MAX_LIMIT).contains(&j_max) {
        return Err(Error::InvalidArgument(format!(
            "j_max = {j_max} outside [2, {J_MAX_LIMIT}]"
        )));
    }
    let dl: Vec<f64> = (0..j_max as u64).map(|k| l_increment(alpha, k)).collect();
    let mut l = vec![0.0; j_max + 1];
    l[0] = l_alpha(alpha, 0);
    for j in 2..=j_max {
        l[j] = l[j - 1] + dl[j - 1];
    }
    let mut increments = vec![0.0; j_max + 1];
    let mut omega = vec![0.0; j_max + 1];
    for j in 1..=j_max {
        increments[j] = l[j] + (j as f64 - 1.0) * dl[j - 1];
        omega[j] = omega[j - 1] + increments[j];
    }
    let table = FrequencyTable {
        alpha,
        l,
        omega,
        increments,
    };
    table.certify()?;
    Ok(table)
}

/// A triple `k = j + n` realizing the three-wave gap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThreeWaveGap {
    pub gap: f64,
    pub n: i64,
    pub j: i64,
    pub k: i64,
}

impl FrequencyTable {
    pub fn alpha(&self) -> Alpha {
        self.alpha
    }

    pub fn j_max(&self) -> usize {
        self.l.len() - 1
    }

    pub fn l_values(&self) -> &[f64] {
        &self.l
    }

    pub fn omega_values(&self) -> &[f64] {
        &self.omega
    }

    /// `omega(j)` for any `|j| <= j_max`, extended by oddness.
    pub fn omega(&self, j: i64) -> f64 {
        let w = self.omega[j.unsigned_abs() as usize];
        if j < 0 {
            -w
        } else {
            w
        }
    }

    fn certify(&self) -> Result<()> {
        if self.omega[0] != 0.0 || self.omega[1].abs() > 1e-10 {
            return Err(Error::InvariantViolation {
                j: if self.omega[0] != 0.0 { 0 } else { 1 },
                invariant: TableInvariant::ZeroModes,
            });
        }
        for j in 2..self.j_max() {
            if !(self.omega[j + 1] > self.omega[j]) {
                return Err(Error::InvariantViolation {
                    j,
                    invariant: TableInvariant::Monotone,
                });
            }
        }
        for j in 1..self.j_max() {
            if !(self.telescoped_second_difference(j) > 0.0) {
                return Err(Error::InvariantViolation {
                    j,
                    invariant: TableInvariant::Convexity,
                });
            }
        }
        Ok(())
    }

    fn telescoped_second_difference(&self, j: usize) -> f64 {
        self.increments[j + 1] - self.increments[j]
    }

    /// `(telescoped, closed_form)` second difference at `1 <= j < j_max`.
    pub fn second_difference(&self, j: usize) -> Result<(f64, f64)> {
        if j < 1 || j >= self.j_max() {
            return Err(Error::InvalidArgument(format!(
                "second difference needs 1 <= j < {}, got {j}",
                self.j_max()
            )));
        }
        Ok((
            self.telescoped_second_difference(j),
            second_difference_closed(self.alpha, j as u64),
        ))
    }

    /// Minimum of `|omega(j+n) - omega(j) - omega(n)|` over nonzero `n, j, k = j + n`
    /// with `|n|, |j| <= range`. Ties within `1e-12` relative resolve to the
    /// lexicographically smallest `(n, j)`.
    pub fn min_three_wave_gap(&self, range: usize) -> Result<ThreeWaveGap> {
        if range == 0 || 2 * range > self.j_max() {
            return Err(Error::InvalidArgument(format!(
                "range = {range} must be in [1, j_max/2 = {}]",
                self.j_max() / 2
            )));
        }
        let r = range as i64;
        let mut best: Option<ThreeWaveGap> = None;
        for n in -r..=r {
            for j in -r..=r {
                let k = j + n;
                if n == 0 || j == 0 || k == 0 {
                    continue;
                }
                let gap = (self.omega(k) - self.omega(j) - self.omega(n)).abs();
                let better = match best {
                    None => true,
                    Some(b) => gap < b.gap - 1e-12 * b.gap.max(1e-300),
                };
                if better {
                    best = Some(ThreeWaveGap { gap, n, j, k });
                }
            }
        }
        Ok(best.expect("range >= 1 leaves admissible triples"))
    }

    /// Writes `j,L,omega,d2omega` rows; the last row has an empty second difference.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["j", "L", "omega", "d2omega"])
            .map_err(csv_err)?;
        for j in 0..=self.j_max() {
            let d2 = if j >= 1 && j < self.j_max() {
                format!("{:e}", self.telescoped_second_difference(j))
            } else {
                String::new()
            };
            w.write_record([
                j.to_string(),
                format!("{:e}", self.l[j]),
                format!("{:e}", self.omega[j]),
                d2,
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn al(a: f64) -> Alpha {
        Alpha::new(a).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn alpha_validation() {
        assert!(Alpha::new(0.0).is_err());
        assert!(Alpha::new(2.0).is_err());
        assert!(Alpha::new(2.5).is_err());
        assert!(al(1.0).is_one());
        assert!(al(1.0).excluding_one(1e-6).is_err());
    }

    #[test]
    fn c_alpha_values() {
        assert!((c_alpha(al(1.0)) - 1.0).abs() < 1e-14);
        // mpmath: gamma(0.25) / (sqrt(2) gamma(0.75))
        assert!(rel(c_alpha(al(0.5)), 2.092_099_240_106_203_3) < 1e-13);
        // Gamma reflection collapses c_alpha c_{2-alpha} to 1
        assert!((c_alpha(al(1.5)) * c_alpha(al(0.5)) - 1.0).abs() < 1e-13);
    }

    #[test]
    fn t1_forms_agree() {
        for a in [0.3, 0.8, 1.5, 1.9] {
            assert_eq!(t1(al(a), 0), 0.0);
            for j in [1, 2, 7, 50, 300] {
                let s = t1_sum(al(a), j);
                let c = t1_closed(al(a), j).unwrap();
                assert!(rel(c, s) < 1e-10, "alpha = {a}, j = {j}");
            }
        }
        // single term at j = 1
        let a = 1.5;
        let direct = t_prefactor(al(a)) * gamma(0.75).unwrap() / gamma(0.25).unwrap() / 0.25;
        assert!(rel(t1_sum(al(a), 1), direct) < 1e-14);
    }

    #[test]
    fn t1_at_one_grows_logarithmically() {
        // T1 at alpha = 1 is (psi(j + 1/2) - psi(1/2)) / pi = (log j + gamma + 2 log 2)/pi + O(j^-2)
        let konst = EULER_MASCHERONI + 2.0 * 2f64.ln();
        for p in 6..=12 {
            let j = 1u64 << p;
            let want = ((j as f64).ln() + konst) / PI;
            assert!((t1(al(1.0), j) - want).abs() < 1.0 / (j * j) as f64);
        }
    }

    #[test]
    fn t2_values() {
        // mpmath at (1.5, 0)
        assert!(rel(t2(al(1.5), 0.0).unwrap(), 0.134_838_150_297_094_84) < 1e-13);
        let a = al(0.7);
        assert!(rel(t2_from_m(a, 5.0).unwrap(), t2(a, 5.0).unwrap()) < 1e-10);
        for a in [0.5, 1.5] {
            let a = al(a);
            let lim = t_prefactor(a);
            let xi: f64 = 1e4;
            assert!(rel(t2(a, xi).unwrap() / xi.powf(a.value() - 1.0), lim) < 1e-3);
            assert!(rel(m_alpha(a, xi).unwrap() * xi.powf(3.0 - a.value()), lim) < 1e-3);
        }
    }

    #[test]
    fn m_alpha_sign_and_singularity() {
        for a in [0.5, 1.5] {
            for j in 1..40 {
                assert!(m_alpha(al(a), j as f64).unwrap() > 0.0);
            }
        }
        assert!(matches!(
            m_alpha(al(1.5), 0.25),
            Err(Error::RemovableSingularity { .. })
        ));
    }

    #[test]
    fn first_frequency_vanishes() {
        for a in [0.3, 0.8, 1.0, 1.2, 1.7] {
            assert!(l_alpha(al(a), 1).abs() < 1e-10, "alpha = {a}");
        }
    }

    #[test]
    fn l_at_zero_term_by_term() {
        let a = al(1.5);
        let want = c_alpha(a) / 0.5 * (0.0 - 0.134_838_150_297_094_84 - zero_mode_constant(a));
        assert!(rel(l_alpha(a, 0), want) < 1e-12);
    }

    #[test]
    fn omega_parity() {
        let a = al(1.5);
        assert_eq!(omega(a, 0), 0.0);
        for j in [2, 5, 17] {
            assert_eq!(omega(a, -j), -omega(a, j));
        }
        for a in [0.5, 1.0, 1.5, 1.9] {
            assert!(omega(al(a), 2) > 0.0);
        }
    }

    #[test]
    fn table_matches_direct_evaluation() {
        for a in [0.5, 1.0, 1.5] {
            let t = build_table(al(a), 256).unwrap();
            for j in [0usize, 2, 3, 40, 256] {
                let d = l_alpha(al(a), j as u64);
                assert!((t.l_values()[j] - d).abs() < 1e-11 * d.abs().max(1.0));
            }
        }
    }

    #[test]
    fn minimal_table() {
        let t = build_table(al(1.5), 2).unwrap();
        assert_eq!(t.omega_values()[0], 0.0);
        assert!(t.omega_values()[1].abs() < 1e-10);
        assert!(t.omega_values()[2] > 0.0);
        assert!(build_table(al(1.5), 1).is_err());
    }

    #[test]
    fn second_difference_at_one_is_omega_two() {
        let t = build_table(al(1.5), 64).unwrap();
        let (tel, closed) = t.second_difference(1).unwrap();
        assert!(rel(tel, t.omega(2)) < 1e-12);
        assert!(rel(closed, t.omega(2)) < 1e-12);
        let t = build_table(al(0.5), 128).unwrap();
        for j in [2, 10, 100] {
            let (tel, closed) = t.second_difference(j).unwrap();
            assert!(rel(tel, closed) < 1e-9);
        }
    }

    #[test]
    fn second_difference_decay() {
        // closed form ~ const * j * j^{alpha - 3}
        let a = al(1.5);
        let s = |j: u64| second_difference_closed(a, j) / (j as f64).powf(a.value() - 2.0);
        assert!(rel(s(20_000), s(40_000)) < 1e-4);
    }

    #[test]
    fn three_wave_gap_small() {
        let t = build_table(al(1.5), 100).unwrap();
        let g = t.min_three_wave_gap(20).unwrap();
        assert!(g.gap >= t.omega(2) - 1e-9);
        assert!(g.n.abs().min(g.j.abs()) == 1);
    }

    #[test]
    fn v_alpha_and_c1() {
        let (v1, _) = v_one_series(1e-12);
        let exact = (EULER_MASCHERONI + 2.0 * 2f64.ln() - 2.0) / PI;
        assert!((v1 - exact).abs() < 1e-12);
        // alpha = 1: L(j) - log(j)/pi -> V_1
        let j = 4096;
        assert!((l_alpha(al(1.0), j) - (j as f64).ln() / PI - v1).abs() < 1e-7);
        // V_alpha alone has a pole at 1; V_alpha + c1_alpha stays continuous
        for a in [1.0 - 1e-4, 1.0 + 1e-4] {
            let sum = v_alpha(al(a)) + c1_alpha(al(a)).unwrap();
            assert!((sum - v1).abs() < 1e-2, "alpha = {a}");
        }
        let (coarse, _) = v_one_series(1e-10);
        assert!((coarse - v1).abs() < 2e-10);
    }

    #[test]
    fn csv_export() {
        let t = build_table(al(1.5), 4).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = s.lines().collect();
        assert_eq!(lines[0], "j,L,omega,d2omega");
        assert_eq!(lines.len(), 6);
    }
}
