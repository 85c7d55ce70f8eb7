//! Conserved quantities, Sobolev norms and the lifespan sweep.

use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contour::{grad_e, h_from_f};
use crate::dispersion::{csv_err, Alpha};
use crate::error::{Error, Result};
use crate::grid::{GridFunction, SpectralField};
use crate::integrator::{run, SimConfig};
use crate::quadrature::QuadratureRule;

/// Bound on `||h(t)||_{H^s} / ||h(0)||_{H^s}` before doubling.
pub const GROWTH_BOUND: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mean_f: f64,
    /// `∫ (sqrt(1 + 2f) - 1) (cos x, sin x) dx`.
    pub prime_integral: (f64, f64),
    /// `∫ f (cos x, sin x) dx`, the leading part of the prime integral.
    pub prime_linear: (f64, f64),
    /// `(1/3) ∫ ((1 + 2f)^{3/2} - 1)(cos x, sin x) dx`.
    pub centroid: (f64, f64),
    /// `(s, ||h||_{H^s})`.
    pub sobolev: Vec<(f64, f64)>,
    /// `(s, ||f||_{H^s})`.
    pub sobolev_f: Vec<(f64, f64)>,
    pub sup_h: f64,
    /// `<grad E, d/dx grad E>` by the trapezoid rule.
    pub hamiltonian_rate: f64,
    /// `||grad E|| ||d/dx grad E||`, the natural size of the rate.
    pub hamiltonian_scale: f64,
}

impl DiagnosticsRecord {
    /// `||h||_{H^s}` for a recorded order.
    pub fn h_norm(&self, s: f64) -> Option<f64> {
        self.sobolev.iter().find(|(o, _)| *o == s).map(|(_, v)| *v)
    }

    pub fn f_norm(&self, s: f64) -> Option<f64> {
        self.sobolev_f.iter().find(|(o, _)| *o == s).map(|(_, v)| *v)
    }
}

pub fn sobolev_norm(field: &SpectralField, s: f64) -> Result<f64> {
    if !(s >= 0.0) {
        return Err(Error::InvalidArgument(format!("Sobolev order {s} must be >= 0")));
    }
    Ok(field.sobolev_norm(s))
}

fn weighted_trapezoid(g: &GridFunction) -> (f64, f64) {
    let n = g.n();
    let h = 2.0 * PI / n as f64;
    g.samples()
        .iter()
        .enumerate()
        .fold((0.0, 0.0), |(c, s), (k, v)| {
            let x = crate::grid::node(n, k);
            (c + h * v * x.cos(), s + h * v * x.sin())
        })
}

/// `∫ (sqrt(1 + 2f) - 1)(cos x, sin x) dx`.
pub fn prime_integral(f: &GridFunction) -> Result<(f64, f64)> {
    Ok(weighted_trapezoid(&h_from_f(f)?))
}

/// `(1/3) ∫ ((1 + 2f)^{3/2} - 1)(cos x, sin x) dx`, the first moment of the enclosed area.
pub fn centroid_integral(f: &GridFunction) -> Result<(f64, f64)> {
    let h = h_from_f(f)?;
    Ok(weighted_trapezoid(&h.map(|v| ((1.0 + v).powi(3) - 1.0) / 3.0)?))
}

/// `∫ f (cos x, sin x) dx`.
pub fn linear_prime_integral(f: &GridFunction) -> (f64, f64) {
    weighted_trapezoid(f)
}

/// `(<g, g'>, ||g|| ||g'||)` with trapezoid inner products.
pub fn hamiltonian_rate(grad: &GridFunction) -> (f64, f64) {
    let d = grad.derivative(1);
    (grad.inner(&d), grad.l2_norm() * d.l2_norm())
}

/// Diagnostics of the state `f` at time `t`.
pub fn record(
    t: f64,
    f: &SpectralField,
    alpha: Alpha,
    rule: &QuadratureRule,
    orders: &[f64],
) -> Result<DiagnosticsRecord> {
    let fg = f.to_grid();
    let h = h_from_f(&fg)?;
    let hs = h.spectrum();
    let sobolev = orders
        .iter()
        .map(|&s| Ok((s, sobolev_norm(&hs, s)?)))
        .collect::<Result<Vec<_>>>()?;
    let sobolev_f = orders
        .iter()
        .map(|&s| Ok((s, sobolev_norm(f, s)?)))
        .collect::<Result<Vec<_>>>()?;
    let (rate, scale) = hamiltonian_rate(&grad_e(&fg, alpha, rule)?);
    Ok(DiagnosticsRecord {
        t,
        mean_f: f.mean(),
        prime_integral: weighted_trapezoid(&h),
        prime_linear: linear_prime_integral(&fg),
        centroid: weighted_trapezoid(&h.map(|v| ((1.0 + v).powi(3) - 1.0) / 3.0)?),
        sobolev,
        sobolev_f,
        sup_h: h.sup_norm(),
        hamiltonian_rate: rate,
        hamiltonian_scale: scale,
    })
}

/// Time series CSV: `t, mean_f, prime_cos, prime_sin, h_s<order>..., sup_h, hamiltonian_rate`.
pub fn write_series_csv<W: Write>(records: &[DiagnosticsRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let orders: Vec<f64> = records
        .first()
        .map(|r| r.sobolev.iter().map(|(s, _)| *s).collect())
        .unwrap_or_default();
    let mut header = vec!["t".to_string(), "mean_f".into(), "prime_cos".into(), "prime_sin".into()];
    header.extend(orders.iter().map(|s| format!("h_s{s}")));
    header.extend(["sup_h".to_string(), "hamiltonian_rate".into()]);
    w.write_record(&header).map_err(csv_err)?;
    for r in records {
        let mut row = vec![
            format!("{:e}", r.t),
            format!("{:e}", r.mean_f),
            format!("{:e}", r.prime_integral.0),
            format!("{:e}", r.prime_integral.1),
        ];
        row.extend(r.sobolev.iter().map(|(_, v)| format!("{v:e}")));
        row.push(format!("{:e}", r.sup_h));
        row.push(format!("{:e}", r.hamiltonian_rate));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Largest `(||f(t)||^2 - ||f(0)||^2) / ∫_0^t ||f||^4` in `H^s` along the records.
pub fn quartic_energy_constant(records: &[DiagnosticsRecord], s: f64) -> Result<f64> {
    let norms = records
        .iter()
        .map(|r| {
            r.f_norm(s)
                .map(|v| (r.t, v))
                .ok_or_else(|| Error::InvalidArgument(format!("order {s} was not recorded")))
        })
        .collect::<Result<Vec<_>>>()?;
    let Some(&(_, n0)) = norms.first() else {
        return Err(Error::InvalidArgument("no records".into()));
    };
    let mut integral = 0.0;
    let mut best: f64 = 0.0;
    for w in norms.windows(2) {
        let ((t0, a), (t1, b)) = (w[0], w[1]);
        integral += 0.5 * (t1 - t0) * (a.powi(4) + b.powi(4));
        if integral > 0.0 {
            best = best.max((b * b - n0 * n0) / integral);
        }
    }
    Ok(best)
}

/// Initial `f` for `h = eps cos 2x`, with its mean removed.
pub fn lifespan_initial(n: usize, eps: f64) -> Result<GridFunction> {
    let h = GridFunction::from_fn(n, |x| eps * (2.0 * x).cos())?;
    let f = crate::contour::f_from_h(&h)?;
    let mean = f.mean();
    f.map(|v| v - mean)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LifespanConfig {
    /// Base simulation settings; `t_final` is replaced by the caps.
    pub sim: SimConfig,
    pub epsilons: Vec<f64>,
    #[serde(default = "default_order")]
    pub s: f64,
    /// Cap for the largest amplitude.
    pub t_cap: f64,
}

fn default_order() -> f64 {
    4.0
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LifespanRun {
    pub epsilon: f64,
    /// Doubling time, or the cap when censored.
    pub doubling_time: f64,
    pub censored: bool,
    pub t_cap: f64,
    pub initial_norm: f64,
    /// `max ||h(t)||_{H^s} / ||h(0)||_{H^s}` before doubling.
    pub max_growth: f64,
    pub quartic_constant: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LifespanReport {
    pub alpha: f64,
    pub s: f64,
    pub runs: Vec<LifespanRun>,
    /// Slope of `log T` against `log eps` over uncensored runs, when there are at least three.
    pub slope: Option<f64>,
    /// Every run stayed below `GROWTH_BOUND` times its initial norm before doubling.
    pub bounded: bool,
}

impl LifespanReport {
    pub fn uncensored(&self) -> usize {
        self.runs.iter().filter(|r| !r.censored).count()
    }

    /// The fitted exponent, or [`Error::TooFewUncensored`].
    pub fn fit(&self) -> Result<f64> {
        self.slope.ok_or(Error::TooFewUncensored(self.uncensored()))
    }

    /// Every run doubled, and doubling times strictly increase as the amplitude decreases.
    pub fn monotone(&self) -> bool {
        self.uncensored() == self.runs.len()
            && self.runs.windows(2).all(|w| w[1].doubling_time > w[0].doubling_time)
    }
}

fn single_run(cfg: &LifespanConfig, eps: f64, t_cap: f64) -> Result<LifespanRun> {
    let mut sim = cfg.sim.clone();
    sim.t_final = t_cap;
    if !sim.sobolev_orders.contains(&cfg.s) {
        sim.sobolev_orders.push(cfg.s);
    }
    let f0 = lifespan_initial(sim.n, eps)?;
    let initial_norm = h_from_f(&f0)?.spectrum().sobolev_norm(cfg.s);
    let s = cfg.s;
    let traj = run(&f0, &sim, |r| r.h_norm(s).is_some_and(|v| v >= 2.0 * initial_norm))?;
    let norms: Vec<f64> = traj.records.iter().map(|r| r.h_norm(s).unwrap_or(f64::NAN)).collect();
    let (doubling_time, censored) = if traj.stopped {
        let k = norms.len() - 1;
        let target = 2.0 * initial_norm;
        let t = if k == 0 {
            traj.times[0]
        } else {
            let (a, b) = (norms[k - 1], norms[k]);
            let (ta, tb) = (traj.times[k - 1], traj.times[k]);
            ta + (tb - ta) * (target - a) / (b - a)
        };
        (t, false)
    } else {
        (t_cap, true)
    };
    let before = if traj.stopped { &norms[..norms.len() - 1] } else { &norms[..] };
    let max_growth = before.iter().fold(0.0_f64, |m, v| m.max(*v)) / initial_norm;
    Ok(LifespanRun {
        epsilon: eps,
        doubling_time,
        censored,
        t_cap,
        initial_norm,
        max_growth,
        quartic_constant: quartic_energy_constant(&traj.records, s)?,
    })
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let k = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / k;
    let my = points.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Doubling times of `||h||_{H^s}` for `h(0) = eps cos 2x` over decreasing amplitudes.
///
/// The largest amplitude runs first with cap `t_cap`; the others run concurrently
/// with cap `10 (eps_max / eps)^2 T(eps_max)`, or `(eps_max / eps)^2 t_cap` when
/// the first run never doubles.
///
/// The sweep always completes; a report with fewer than three uncensored runs
/// comes back as [`Error::TooFewUncensored`] only from [`LifespanReport::fit`].
pub fn lifespan_experiment(cfg: &LifespanConfig) -> Result<LifespanReport> {
    let eps = &cfg.epsilons;
    if eps.is_empty() || eps.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::Config("epsilons must be non-empty and strictly decreasing".into()));
    }
    if eps.iter().any(|e| !(*e > 0.0 && *e <= 0.05)) {
        return Err(Error::Config("each epsilon must lie in (0, 0.05]".into()));
    }
    if !(cfg.s >= 4.0) {
        return Err(Error::Config(format!("s = {} must be >= 4", cfg.s)));
    }
    cfg.sim.validate()?;
    let first = single_run(cfg, eps[0], cfg.t_cap)?;
    // a censored first run has no doubling time; its cap is scaled without the margin
    let base = if first.censored { 0.1 * first.doubling_time } else { first.doubling_time };
    let rest: Vec<LifespanRun> = eps[1..]
        .par_iter()
        .map(|&e| single_run(cfg, e, 10.0 * (eps[0] / e).powi(2) * base))
        .collect::<Result<_>>()?;
    let mut runs = vec![first];
    runs.extend(rest);
    let points: Vec<(f64, f64)> = runs
        .iter()
        .filter(|r| !r.censored)
        .map(|r| (r.epsilon.ln(), r.doubling_time.ln()))
        .collect();
    let slope = if points.len() >= 3 { fit_slope(&points) } else { None };
    Ok(LifespanReport {
        alpha: cfg.sim.alpha.value(),
        s: cfg.s,
        bounded: runs.iter().all(|r| r.max_growth <= GROWTH_BOUND),
        runs,
        slope,
    })
}

/// Sweep summary CSV: `epsilon, doubling_time, censored`.
pub fn write_summary_csv<W: Write>(runs: &[LifespanRun], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["epsilon", "doubling_time", "censored"]).map_err(csv_err)?;
    for r in runs {
        w.write_record([
            format!("{:e}", r.epsilon),
            format!("{:e}", r.doubling_time),
            r.censored.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}
