//! Time stepping of `f_t = d/dx grad E(f)`.
//!
//! In Fourier variables the linear part is `-i omega(j) c_j`. The
//! integrating-factor scheme propagates it exactly and applies classical RK4
//! to the remainder `N(f) = rhs_f(f) + i omega(D) f`.

use std::io::{Read, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::contour::rhs_f;
use crate::diagnostics::{record, DiagnosticsRecord};
use crate::dispersion::{omega, Alpha};
use crate::error::{Error, Result};
use crate::grid::{check_grid_size, GridFunction, SpectralField};
use crate::quadrature::{QuadratureRule, DEFAULT_CORRECTIONS};

/// Largest admissible `sup |f|`.
pub const BLOW_UP_LIMIT: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    IntegratingFactorRk4,
    PlainRk4,
}

fn default_dealias() -> f64 {
    2.0 / 3.0
}
fn default_every() -> u64 {
    1
}
fn default_true() -> bool {
    true
}
fn default_orders() -> Vec<f64> {
    vec![4.0]
}
fn default_corrections() -> usize {
    DEFAULT_CORRECTIONS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub alpha: Alpha,
    pub n: usize,
    /// Quadrature nodes; `4 n` when absent.
    #[serde(default)]
    pub m: Option<usize>,
    /// Time step; the stability bound when absent.
    #[serde(default)]
    pub dt: Option<f64>,
    pub t_final: f64,
    #[serde(default = "default_dealias")]
    pub dealias_fraction: f64,
    #[serde(default)]
    pub scheme: Scheme,
    /// Steps between diagnostics records.
    #[serde(default = "default_every")]
    pub diagnostics_every: u64,
    /// Keeps the nonlinear remainder; `false` leaves only the linear propagator.
    #[serde(default = "default_true")]
    pub nonlinear: bool,
    /// Sobolev orders reported for `h`.
    #[serde(default = "default_orders")]
    pub sobolev_orders: Vec<f64>,
    #[serde(default = "default_corrections")]
    pub corrections: usize,
}

impl SimConfig {
    pub fn new(alpha: Alpha, n: usize, t_final: f64) -> Self {
        SimConfig {
            alpha,
            n,
            m: None,
            dt: None,
            t_final,
            dealias_fraction: default_dealias(),
            scheme: Scheme::default(),
            diagnostics_every: default_every(),
            nonlinear: true,
            sobolev_orders: default_orders(),
            corrections: DEFAULT_CORRECTIONS,
        }
    }

    pub fn quadrature_nodes(&self) -> usize {
        self.m.unwrap_or(4 * self.n)
    }

    pub fn rule(&self) -> Result<QuadratureRule> {
        QuadratureRule::with_corrections(self.quadrature_nodes(), self.corrections)
    }

    pub fn time_step(&self) -> f64 {
        self.dt.unwrap_or_else(|| cfl_bound(self.n, self.alpha, self.scheme))
    }

    /// Copy with every optional field filled in.
    pub fn resolved(&self) -> Self {
        let mut out = self.clone();
        out.m = Some(self.quadrature_nodes());
        out.dt = Some(self.time_step());
        out
    }

    pub fn validate(&self) -> Result<()> {
        check_grid_size(self.n)?;
        let m = self.quadrature_nodes();
        if !m.is_power_of_two() || m < 4 * self.n {
            return Err(Error::Config(format!("m = {m} must be a power of two >= 4 n")));
        }
        let dt = self.time_step();
        let bound = cfl_bound(self.n, self.alpha, self.scheme);
        if !(dt > 0.0) || dt > bound {
            return Err(Error::Config(format!("dt = {dt} outside (0, {bound}]")));
        }
        if !(self.t_final >= 0.0) || !self.t_final.is_finite() {
            return Err(Error::Config(format!("t_final = {} must be finite and >= 0", self.t_final)));
        }
        if !(self.dealias_fraction > 0.0 && self.dealias_fraction <= 1.0) {
            return Err(Error::Config(format!(
                "dealias_fraction = {} outside (0, 1]",
                self.dealias_fraction
            )));
        }
        if self.diagnostics_every == 0 {
            return Err(Error::Config("diagnostics_every must be positive".into()));
        }
        if self.sobolev_orders.iter().any(|s| !(*s >= 0.0)) {
            return Err(Error::Config("Sobolev orders must be >= 0".into()));
        }
        Ok(())
    }
}

/// `0.5 / max_{j <= n/2} |omega(j)|`, ten times larger for the integrating-factor scheme.
pub fn cfl_bound(n: usize, alpha: Alpha, scheme: Scheme) -> f64 {
    let top = (1..=(n / 2) as i64).map(|j| omega(alpha, j).abs()).fold(0.0, f64::max);
    let base = 0.5 / top;
    match scheme {
        Scheme::PlainRk4 => base,
        Scheme::IntegratingFactorRk4 => 10.0 * base,
    }
}

/// Precomputed data for repeated steps with one configuration.
#[derive(Debug, Clone)]
pub struct Stepper {
    cfg: SimConfig,
    rule: QuadratureRule,
    omega: Vec<f64>,
}

impl Stepper {
    pub fn new(cfg: &SimConfig) -> Result<Self> {
        cfg.validate()?;
        let omega = (0..=(cfg.n / 2) as i64).map(|j| omega(cfg.alpha, j)).collect();
        Ok(Stepper {
            cfg: cfg.clone(),
            rule: cfg.rule()?,
            omega,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn rule(&self) -> &QuadratureRule {
        &self.rule
    }

    fn omega_of(&self, j: i64) -> f64 {
        let w = self.omega[j.unsigned_abs() as usize];
        if j < 0 {
            -w
        } else {
            w
        }
    }

    /// `e^{-i omega(D) tau}`.
    pub fn propagate(&self, f: &SpectralField, tau: f64) -> SpectralField {
        f.apply(|j| Complex64::from_polar(1.0, -self.omega_of(j) * tau))
    }

    fn rhs(&self, f: &SpectralField) -> Result<SpectralField> {
        let mut r = rhs_f(&f.to_grid(), self.cfg.alpha, &self.rule)?.spectrum();
        r.dealias(self.cfg.dealias_fraction);
        Ok(r)
    }

    fn remainder(&self, f: &SpectralField) -> Result<SpectralField> {
        if !self.cfg.nonlinear {
            return SpectralField::zeros(f.n());
        }
        let lin = f.apply(|j| Complex64::new(0.0, self.omega_of(j)));
        let mut r = self.rhs(f)?.axpy(1.0, &lin);
        r.dealias(self.cfg.dealias_fraction);
        Ok(r)
    }

    fn full(&self, f: &SpectralField) -> Result<SpectralField> {
        if self.cfg.nonlinear {
            self.rhs(f)
        } else {
            Ok(f.apply(|j| Complex64::new(0.0, -self.omega_of(j))))
        }
    }

    /// One step of size `dt` (negative values integrate backwards).
    pub fn step(&self, f: &SpectralField, dt: f64) -> Result<SpectralField> {
        if f.n() != self.cfg.n {
            return Err(Error::InvalidArgument(format!(
                "state has {} points, configuration {}",
                f.n(),
                self.cfg.n
            )));
        }
        let out = match self.cfg.scheme {
            Scheme::IntegratingFactorRk4 => {
                let half = 0.5 * dt;
                let k1 = self.remainder(f)?;
                let k2 = self.remainder(&self.propagate(&f.axpy(half, &k1), half))?;
                let e_half_f = self.propagate(f, half);
                let k3 = self.remainder(&e_half_f.axpy(half, &k2))?;
                let e_f = self.propagate(f, dt);
                let k4 = self.remainder(&e_f.axpy(dt, &self.propagate(&k3, half)))?;
                let mid = self.propagate(&k2.axpy(1.0, &k3), half).scale(2.0);
                let sum = self.propagate(&k1, dt).axpy(1.0, &mid).axpy(1.0, &k4);
                e_f.axpy(dt / 6.0, &sum)
            }
            Scheme::PlainRk4 => {
                let half = 0.5 * dt;
                let k1 = self.full(f)?;
                let k2 = self.full(&f.axpy(half, &k1))?;
                let k3 = self.full(&f.axpy(half, &k2))?;
                let k4 = self.full(&f.axpy(dt, &k3))?;
                let sum = k1.axpy(2.0, &k2).axpy(2.0, &k3).axpy(1.0, &k4);
                f.axpy(dt / 6.0, &sum)
            }
        };
        Ok(out)
    }
}

/// One step with the configured time step.
pub fn step(state: &SpectralField, cfg: &SimConfig) -> Result<SpectralField> {
    Stepper::new(cfg)?.step(state, cfg.time_step())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<SpectralField>,
    pub records: Vec<DiagnosticsRecord>,
    /// Index of the last completed step.
    pub steps: u64,
    /// Whether the stop predicate ended the run before `t_final`.
    pub stopped: bool,
}

impl Trajectory {
    pub fn final_state(&self) -> &SpectralField {
        self.states.last().expect("a trajectory holds its initial state")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("a trajectory holds its initial time")
    }
}

/// Integrates from `initial` (values of `f`) until `t_final` or until `stop` returns true.
pub fn run(
    initial: &GridFunction,
    cfg: &SimConfig,
    stop: impl FnMut(&DiagnosticsRecord) -> bool,
) -> Result<Trajectory> {
    run_from(&Checkpoint::initial(initial, cfg), cfg, stop)
}

/// Continues from a checkpoint; the step grid `t = k dt` is shared with the original run.
pub fn run_from(
    start: &Checkpoint,
    cfg: &SimConfig,
    mut stop: impl FnMut(&DiagnosticsRecord) -> bool,
) -> Result<Trajectory> {
    let stepper = Stepper::new(cfg)?;
    let dt = cfg.time_step();
    let mut state = start.state()?;
    if state.n() != cfg.n {
        return Err(Error::Config(format!(
            "checkpoint has {} points, configuration {}",
            state.n(),
            cfg.n
        )));
    }
    let mut k = start.step;
    let mut t = start.time;
    let first = record(t, &state, cfg.alpha, stepper.rule(), &cfg.sobolev_orders)?;
    let mut traj = Trajectory {
        times: vec![t],
        states: vec![state.clone()],
        stopped: stop(&first),
        records: vec![first],
        steps: k,
    };
    while !traj.stopped && t < cfg.t_final {
        let next = (k + 1) as f64 * dt;
        let (h, t_next) = if (next - cfg.t_final).abs() <= 1e-12 * cfg.t_final {
            (dt, cfg.t_final)
        } else if next > cfg.t_final {
            (cfg.t_final - t, cfg.t_final)
        } else {
            (dt, next)
        };
        state = stepper
            .step(&state, h)
            .map_err(|e| Error::Step { t, source: Box::new(e) })?;
        let sup = state.to_grid().sup_norm();
        if !(sup <= BLOW_UP_LIMIT) {
            return Err(Error::BlowUp { t: t_next, sup });
        }
        k += 1;
        t = t_next;
        if k % cfg.diagnostics_every == 0 || t >= cfg.t_final {
            let rec = record(t, &state, cfg.alpha, stepper.rule(), &cfg.sobolev_orders)?;
            traj.stopped = stop(&rec);
            traj.times.push(t);
            traj.states.push(state.clone());
            traj.records.push(rec);
        }
        traj.steps = k;
    }
    Ok(traj)
}

/// Restartable snapshot; coefficients are stored as IEEE-754 bit patterns in hex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub config: Option<SimConfig>,
    pub time: f64,
    pub step: u64,
    pub n: usize,
    pub coeffs: Vec<[String; 2]>,
}

fn hex(v: f64) -> String {
    format!("{:016x}", v.to_bits())
}

fn unhex(s: &str) -> Result<f64> {
    u64::from_str_radix(s, 16)
        .map(f64::from_bits)
        .map_err(|e| Error::Config(format!("bad coefficient '{s}': {e}")))
}

impl Checkpoint {
    pub fn new(state: &SpectralField, time: f64, step: u64, cfg: Option<&SimConfig>) -> Self {
        Checkpoint {
            config: cfg.map(SimConfig::resolved),
            time,
            step,
            n: state.n(),
            coeffs: state.coeffs().iter().map(|c| [hex(c.re), hex(c.im)]).collect(),
        }
    }

    pub fn initial(f: &GridFunction, cfg: &SimConfig) -> Self {
        Self::new(&f.spectrum(), 0.0, 0, Some(cfg))
    }

    /// Snapshot of the last state of a trajectory.
    pub fn from_trajectory(traj: &Trajectory, cfg: &SimConfig) -> Self {
        Self::new(traj.final_state(), traj.final_time(), traj.steps, Some(cfg))
    }

    pub fn state(&self) -> Result<SpectralField> {
        let coeffs = self
            .coeffs
            .iter()
            .map(|[re, im]| Ok(Complex64::new(unhex(re)?, unhex(im)?)))
            .collect::<Result<Vec<_>>>()?;
        SpectralField::from_half(self.n, coeffs)
    }

    pub fn write<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, self)?;
        Ok(())
    }

    pub fn read<R: Read>(input: R) -> Result<Self> {
        Ok(serde_json::from_reader(input)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(a: f64, n: usize, t: f64) -> SimConfig {
        SimConfig::new(Alpha::new(a).unwrap(), n, t)
    }

    fn mode(n: usize, j: usize, amp: f64) -> SpectralField {
        let mut c = vec![Complex64::new(0.0, 0.0); n / 2 + 1];
        c[j] = Complex64::new(amp, 0.0);
        SpectralField::from_half(n, c).unwrap()
    }

    #[test]
    fn linear_phase_rotation() {
        for scheme in [Scheme::IntegratingFactorRk4, Scheme::PlainRk4] {
            let mut c = cfg(1.5, 32, 1.0);
            c.nonlinear = false;
            c.scheme = scheme;
            let st = Stepper::new(&c).unwrap();
            let dt = c.time_step();
            let f = mode(32, 3, 0.01);
            let g = st.step(&f, dt).unwrap();
            let w = omega(c.alpha, 3);
            let want = Complex64::from_polar(0.01, -w * dt);
            let tol = if scheme == Scheme::PlainRk4 { 1e-7 } else { 1e-15 };
            assert!((g.coeffs()[3] - want).norm() < tol, "{scheme:?}");
        }
    }

    #[test]
    fn zero_is_fixed() {
        let c = cfg(1.2, 32, 1.0);
        let z = SpectralField::zeros(32).unwrap();
        let g = step(&z, &c).unwrap();
        assert!(g.coeffs().iter().all(|v| v.norm() < 1e-15));
    }

    #[test]
    fn config_validation() {
        let mut c = cfg(1.5, 32, 1.0);
        c.dt = Some(1.0);
        assert!(c.validate().is_err());
        let mut c = cfg(1.5, 32, 1.0);
        c.m = Some(64);
        assert!(c.validate().is_err());
        assert!(cfl_bound(64, c.alpha, Scheme::IntegratingFactorRk4) > cfl_bound(64, c.alpha, Scheme::PlainRk4));
        let json = serde_json::to_string(&c.resolved()).unwrap();
        let back: SimConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, c.resolved());
        assert!(serde_json::from_str::<SimConfig>(r#"{"alpha": 2.5, "n": 32, "t_final": 1}"#).is_err());
    }

    #[test]
    fn checkpoint_round_trip_is_exact() {
        let f = GridFunction::from_fn(32, |x| 0.01 * (2.0 * x).cos() + 1e-3 * x.sin()).unwrap();
        let ck = Checkpoint::new(&f.spectrum(), 0.125, 7, None);
        let mut buf = Vec::new();
        ck.write(&mut buf).unwrap();
        let back = Checkpoint::read(buf.as_slice()).unwrap();
        assert_eq!(back.state().unwrap(), f.spectrum());
    }

    #[test]
    fn restart_matches_continuous_run() {
        let mut c = cfg(1.5, 32, 0.2);
        c.dt = Some(0.02);
        let f = GridFunction::from_fn(32, |x| 0.01 * (2.0 * x).cos()).unwrap();
        let full = run(&f, &c, |_| false).unwrap();
        let mut half = c.clone();
        half.t_final = 0.1;
        let first = run(&f, &half, |_| false).unwrap();
        let ck = Checkpoint::from_trajectory(&first, &half);
        let rest = run_from(&ck, &c, |_| false).unwrap();
        assert_eq!(rest.final_state(), full.final_state());
        assert_eq!(rest.final_time(), full.final_time());
    }
}
