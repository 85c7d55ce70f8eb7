//! Command-line front end: `spectrum`, `simulate`, `verify` and `lifespan`.
//!
//! Every command writes its outputs into `--out`, prints a short summary and
//! returns exit code 0 only when all wrapped checks pass.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::contour::{check_g1_zero_integral, check_m_alpha_integral, f_from_h, grad_e, linearization_check, LinearizationCheck};
use crate::diagnostics::{lifespan_experiment, write_series_csv, write_summary_csv, LifespanConfig, LifespanReport};
use crate::dispersion::{build_table, Alpha, ThreeWaveGap};
use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::integrator::{run, run_from, Checkpoint, SimConfig};
use crate::kernels::{alpha_grid, verify_hamiltonian_identity, IdentityReport};
use crate::quadrature::QuadratureRule;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

/// Relative tolerance of the linearization check.
pub const LINEARIZATION_TOL: f64 = 1e-4;
/// Absolute tolerance of the integral identities.
pub const INTEGRAL_TOL: f64 = 1e-8;
/// Window for the fitted lifespan exponent.
pub const LIFESPAN_WINDOW: (f64, f64) = (-2.6, -1.6);

#[derive(Debug, Parser)]
#[command(name = "asqg", version, about = "Dispersive contour dynamics of near-circular patches")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Frequency table, its invariants and the three-wave gap.
    Spectrum(SpectrumArgs),
    /// Time integration with diagnostics and a final checkpoint.
    Simulate(SimulateArgs),
    /// Numerical checks of the kernels and the right-hand side.
    Verify(VerifyArgs),
    /// Doubling-time sweep over amplitudes.
    Lifespan(LifespanArgs),
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[arg(long)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1024)]
    pub j_max: usize,
    /// Bound on `|n|, |j|` in the gap search; clipped to `j_max / 2`.
    #[arg(long, default_value_t = 200)]
    pub range: usize,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub t_final: Option<f64>,
    /// Amplitude of `h(0) = eps cos(mode x)`.
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub mode: Option<u32>,
    /// Continue from a checkpoint written by an earlier run.
    #[arg(long)]
    pub restart: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Which {
    Identity,
    Linearization,
    Integrals,
    All,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(value_enum)]
    pub which: Which,
    /// Grid size of the linearization check.
    #[arg(long, default_value_t = 256)]
    pub n: usize,
    /// Quadrature nodes; 2^14 for the linearization and 2^16 for the integrals when absent.
    #[arg(long)]
    pub m: Option<usize>,
    /// Amplitude of the linearization difference quotient.
    #[arg(long, default_value_t = 1e-5)]
    pub eps: f64,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct LifespanArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub dt: Option<f64>,
    /// Decreasing amplitudes, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub eps: Option<Vec<f64>>,
    #[arg(long)]
    pub s: Option<f64>,
    /// Time cap of the largest amplitude.
    #[arg(long)]
    pub t_cap: Option<f64>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

fn default_eps() -> f64 {
    0.01
}
fn default_mode() -> u32 {
    2
}

/// Configuration of `simulate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub sim: SimConfig,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default = "default_mode")]
    pub mode: u32,
}

impl SimulateConfig {
    /// `f(0)` for `h(0) = eps cos(mode x)`, with its mean removed.
    pub fn initial(&self) -> Result<GridFunction> {
        let (eps, mode) = (self.eps, self.mode as f64);
        let h = GridFunction::from_fn(self.sim.n, |x| eps * (mode * x).cos())?;
        let f = f_from_h(&h)?;
        let mean = f.mean();
        f.map(|v| v - mean)
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let file = File::open(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_reader(file).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    use std::io::Write;
    writeln!(w)?;
    Ok(())
}

fn alpha(v: f64) -> Result<Alpha> {
    Alpha::new(v)
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumReport {
    pub alpha: f64,
    pub j_max: usize,
    pub certified: bool,
    pub failure: Option<String>,
    pub omega2: Option<f64>,
    pub gap: Option<ThreeWaveGap>,
    pub pass: bool,
}

pub fn cmd_spectrum(args: &SpectrumArgs) -> Result<SpectrumReport> {
    let a = alpha(args.alpha)?;
    fs::create_dir_all(&args.out)?;
    let report = match build_table(a, args.j_max) {
        Ok(table) => {
            table.write_csv(BufWriter::new(File::create(args.out.join("spectrum.csv"))?))?;
            let range = args.range.min(args.j_max / 2).max(1);
            let gap = table.min_three_wave_gap(range)?;
            let omega2 = table.omega(2);
            SpectrumReport {
                alpha: a.value(),
                j_max: args.j_max,
                certified: true,
                failure: None,
                omega2: Some(omega2),
                pass: gap.gap >= omega2 - 1e-9,
                gap: Some(gap),
            }
        }
        Err(e @ Error::InvariantViolation { .. }) => SpectrumReport {
            alpha: a.value(),
            j_max: args.j_max,
            certified: false,
            failure: Some(e.to_string()),
            omega2: None,
            gap: None,
            pass: false,
        },
        Err(e) => return Err(e),
    };
    write_json(&args.out.join("spectrum_report.json"), &report)?;
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulateReport {
    pub config: SimulateConfig,
    pub t_start: f64,
    pub t_end: f64,
    pub steps: u64,
    pub mean_drift: f64,
    pub max_hamiltonian_ratio: f64,
}

fn merge_sim(args: &SimulateArgs, restart: Option<&Checkpoint>) -> Result<SimulateConfig> {
    let mut cfg = match (&args.config, restart.and_then(|c| c.config.clone())) {
        (Some(p), _) => read_json::<SimulateConfig>(p)?,
        (None, Some(sim)) => SimulateConfig { sim, eps: default_eps(), mode: default_mode() },
        (None, None) => {
            let a = args
                .alpha
                .ok_or_else(|| Error::Config("--alpha or --config is required".into()))?;
            SimulateConfig {
                sim: SimConfig::new(alpha(a)?, args.n.unwrap_or(256), args.t_final.unwrap_or(1.0)),
                eps: default_eps(),
                mode: default_mode(),
            }
        }
    };
    if let Some(a) = args.alpha {
        cfg.sim.alpha = alpha(a)?;
    }
    if let Some(n) = args.n {
        cfg.sim.n = n;
    }
    if args.m.is_some() {
        cfg.sim.m = args.m;
    }
    if args.dt.is_some() {
        cfg.sim.dt = args.dt;
    }
    if let Some(t) = args.t_final {
        cfg.sim.t_final = t;
    }
    if let Some(e) = args.eps {
        cfg.eps = e;
    }
    if let Some(m) = args.mode {
        cfg.mode = m;
    }
    cfg.sim.validate()?;
    cfg.sim = cfg.sim.resolved();
    Ok(cfg)
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<SimulateReport> {
    let restart = args.restart.as_deref().map(read_json::<Checkpoint>).transpose()?;
    let cfg = merge_sim(args, restart.as_ref())?;
    fs::create_dir_all(&args.out)?;
    let start = match restart {
        Some(c) => c,
        None => Checkpoint::initial(&cfg.initial()?, &cfg.sim),
    };
    let traj = run_from(&start, &cfg.sim, |_| false)?;
    write_series_csv(&traj.records, BufWriter::new(File::create(args.out.join("series.csv"))?))?;
    write_json(&args.out.join("checkpoint.json"), &Checkpoint::from_trajectory(&traj, &cfg.sim))?;
    let m0 = traj.records[0].mean_f;
    let report = SimulateReport {
        t_start: start.time,
        t_end: traj.final_time(),
        steps: traj.steps,
        mean_drift: traj.records.iter().map(|r| (r.mean_f - m0).abs()).fold(0.0, f64::max),
        max_hamiltonian_ratio: traj
            .records
            .iter()
            .map(|r| r.hamiltonian_rate.abs() / r.hamiltonian_scale.max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max),
        config: cfg,
    };
    write_json(&args.out.join("run.json"), &report)?;
    Ok(report)
}

/// Convenience wrapper: runs from `f(0)` without files.
pub fn simulate(cfg: &SimulateConfig) -> Result<crate::integrator::Trajectory> {
    run(&cfg.initial()?, &cfg.sim, |_| false)
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentityCase {
    pub field: String,
    pub reports: Vec<IdentityReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct IntegralCase {
    pub alpha: f64,
    pub g1_zero_residual: f64,
    /// Largest residual over `0 <= j <= 64`.
    pub m_alpha_residual: f64,
    pub worst_j: u64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct VerifyReport {
    pub identity: Option<Vec<IdentityCase>>,
    pub linearization: Option<Vec<LinearizationCheck>>,
    pub integrals: Option<Vec<IntegralCase>>,
    pub pass: bool,
}

/// Identity residuals for the standard test profiles over an 8-point grid of `alpha`.
pub fn verify_identity() -> Result<Vec<IdentityCase>> {
    let n = 256;
    let fields: [(&str, Box<dyn Fn(f64) -> f64>); 3] = [
        ("0", Box::new(|_| 0.0)),
        ("0.1 cos x", Box::new(|x: f64| 0.1 * x.cos())),
        ("0.05 cos x + 0.03 sin 2x", Box::new(|x: f64| 0.05 * x.cos() + 0.03 * (2.0 * x).sin())),
    ];
    let alphas = alpha_grid(8, 0.05);
    fields
        .iter()
        .map(|(name, f)| {
            let g = GridFunction::from_fn(n, f)?;
            Ok(IdentityCase {
                field: name.to_string(),
                reports: verify_hamiltonian_identity(&g, &alphas)?,
            })
        })
        .collect()
}

/// Linearization at zero for `alpha` in {0.5, 1.2, 1.5, 1.9} and `j = 1..=32`.
pub fn verify_linearization(n: usize, m: usize, eps: f64) -> Result<Vec<LinearizationCheck>> {
    let rule = QuadratureRule::new(m)?;
    let mut out = Vec::new();
    for a in [0.5, 1.2, 1.5, 1.9] {
        let a = alpha(a)?;
        let base = grad_e(&GridFunction::zeros(n)?, a, &rule)?;
        let j_top = 32.min(n as u64 / 2 - 1);
        for j in 1..=j_top {
            out.push(linearization_check(a, j, n, &rule, eps, Some(&base))?);
        }
    }
    Ok(out)
}

/// Both closed-form integrals for `alpha` in {0.5, 1.0, 1.5}.
pub fn verify_integrals(m: usize) -> Result<Vec<IntegralCase>> {
    let rule = QuadratureRule::new(m)?;
    [0.5, 1.0, 1.5]
        .iter()
        .map(|&a| {
            let a = alpha(a)?;
            let mut worst = (0.0, 0);
            for j in 0..=64 {
                let r = check_m_alpha_integral(a, j, &rule)?;
                if r > worst.0 || !r.is_finite() {
                    worst = (r, j);
                }
            }
            Ok(IntegralCase {
                alpha: a.value(),
                g1_zero_residual: check_g1_zero_integral(a, &rule)?,
                m_alpha_residual: worst.0,
                worst_j: worst.1,
            })
        })
        .collect()
}

pub fn cmd_verify(args: &VerifyArgs) -> Result<VerifyReport> {
    fs::create_dir_all(&args.out)?;
    let all = args.which == Which::All;
    let mut report = VerifyReport { pass: true, ..Default::default() };
    if all || args.which == Which::Identity {
        let cases = verify_identity()?;
        report.pass &= cases.iter().all(|c| c.reports.iter().all(|r| r.pass));
        report.identity = Some(cases);
    }
    if all || args.which == Which::Linearization {
        let rows = verify_linearization(args.n, args.m.unwrap_or(1 << 14), args.eps)?;
        report.pass &= rows.iter().all(|r| r.error <= LINEARIZATION_TOL);
        report.linearization = Some(rows);
    }
    if all || args.which == Which::Integrals {
        let rows = verify_integrals(args.m.unwrap_or(1 << 16))?;
        report.pass &= rows
            .iter()
            .all(|r| r.g1_zero_residual <= INTEGRAL_TOL && r.m_alpha_residual <= INTEGRAL_TOL);
        report.integrals = Some(rows);
    }
    write_json(&args.out.join("verify_report.json"), &report)?;
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct LifespanSummary {
    pub config: LifespanConfig,
    pub report: LifespanReport,
    pub window: (f64, f64),
    pub pass: bool,
}

fn merge_lifespan(args: &LifespanArgs) -> Result<LifespanConfig> {
    let mut cfg = match &args.config {
        Some(p) => read_json::<LifespanConfig>(p)?,
        None => {
            let a = args
                .alpha
                .ok_or_else(|| Error::Config("--alpha or --config is required".into()))?;
            let mut sim = SimConfig::new(alpha(a)?, 32, 0.0);
            sim.diagnostics_every = 4;
            LifespanConfig {
                sim,
                epsilons: vec![0.02, 0.01, 0.005],
                s: 4.0,
                t_cap: 2500.0,
            }
        }
    };
    if let Some(a) = args.alpha {
        cfg.sim.alpha = alpha(a)?;
    }
    if let Some(n) = args.n {
        cfg.sim.n = n;
    }
    if args.m.is_some() {
        cfg.sim.m = args.m;
    }
    if args.dt.is_some() {
        cfg.sim.dt = args.dt;
    }
    if let Some(e) = &args.eps {
        cfg.epsilons = e.clone();
    }
    if let Some(s) = args.s {
        cfg.s = s;
    }
    if let Some(t) = args.t_cap {
        cfg.t_cap = t;
    }
    cfg.sim.validate()?;
    cfg.sim = cfg.sim.resolved();
    Ok(cfg)
}

pub fn cmd_lifespan(args: &LifespanArgs) -> Result<LifespanSummary> {
    let cfg = merge_lifespan(args)?;
    fs::create_dir_all(&args.out)?;
    let report = lifespan_experiment(&cfg)?;
    write_summary_csv(&report.runs, BufWriter::new(File::create(args.out.join("lifespan.csv"))?))?;
    let pass = report.bounded
        && report
            .slope
            .is_some_and(|s| s >= LIFESPAN_WINDOW.0 && s <= LIFESPAN_WINDOW.1);
    let summary = LifespanSummary { config: cfg, report, window: LIFESPAN_WINDOW, pass };
    write_json(&args.out.join("lifespan_report.json"), &summary)?;
    Ok(summary)
}

fn exit_for(err: &Error) -> i32 {
    match err {
        Error::InvalidAlpha(_) | Error::AlphaIsOne(_) | Error::InvalidArgument(_) | Error::Config(_) => EXIT_USAGE,
        _ => EXIT_RUNTIME,
    }
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

/// Runs a parsed command and returns the process exit code.
pub fn execute(cli: &Cli) -> i32 {
    let outcome = match &cli.command {
        Command::Spectrum(a) => cmd_spectrum(a).map(|r| {
            match (&r.failure, &r.gap, r.omega2) {
                (Some(f), _, _) => println!("spectrum alpha={} j_max={}: not certified: {f}", r.alpha, r.j_max),
                (None, Some(g), Some(w2)) => println!(
                    "spectrum alpha={} j_max={}: invariants certified; min gap {:.12e} at (n={}, j={}, k={}), omega(2) = {:.12e}",
                    r.alpha, r.j_max, g.gap, g.n, g.j, g.k, w2
                ),
                _ => {}
            }
            println!("{}", verdict(r.pass));
            r.pass
        }),
        Command::Simulate(a) => cmd_simulate(a).map(|r| {
            println!(
                "simulate: t = {} -> {} in {} steps; mean drift {:.3e}; max |<gradE, d/dx gradE>| / scale {:.3e}",
                r.t_start, r.t_end, r.steps, r.mean_drift, r.max_hamiltonian_ratio
            );
            true
        }),
        Command::Verify(a) => cmd_verify(a).map(|r| {
            if let Some(cases) = &r.identity {
                for c in cases {
                    let worst = c.reports.iter().map(|x| x.max_residual).fold(0.0, f64::max);
                    println!("identity f = {}: max residual {:.3e}", c.field, worst);
                }
            }
            if let Some(rows) = &r.linearization {
                let worst = rows.iter().map(|x| x.error).fold(0.0, f64::max);
                println!("linearization: {} cases, max relative error {:.3e}", rows.len(), worst);
            }
            if let Some(rows) = &r.integrals {
                for c in rows {
                    println!(
                        "integrals alpha={}: G1(0) residual {:.3e}, M residual {:.3e} (j = {})",
                        c.alpha, c.g1_zero_residual, c.m_alpha_residual, c.worst_j
                    );
                }
            }
            println!("{}", verdict(r.pass));
            r.pass
        }),
        Command::Lifespan(a) => cmd_lifespan(a).map(|s| {
            for r in &s.report.runs {
                println!(
                    "eps={}: T={:.6e}{} max growth {:.4}",
                    r.epsilon,
                    r.doubling_time,
                    if r.censored { " (censored)" } else { "" },
                    r.max_growth
                );
            }
            match s.report.slope {
                Some(v) => println!("fitted exponent {v:.4}"),
                None => println!("fitted exponent unavailable: {}", s.report.uncensored()),
            }
            println!("{}", verdict(s.pass));
            s.pass
        }),
    };
    match outcome {
        Ok(true) => EXIT_PASS,
        Ok(false) => EXIT_FAIL,
        Err(e) => {
            eprintln!("error: {e}");
            exit_for(&e)
        }
    }
}

pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(&cli),
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() {
                EXIT_USAGE
            } else {
                EXIT_PASS
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_commands() {
        Cli::try_parse_from(["asqg", "spectrum", "--alpha", "1.5", "--j-max", "16"]).unwrap();
        Cli::try_parse_from(["asqg", "simulate", "--alpha", "1.5", "--t-final", "0.1", "--eps", "0.01"]).unwrap();
        Cli::try_parse_from(["asqg", "verify", "integrals", "--m", "4096"]).unwrap();
        let c = Cli::try_parse_from(["asqg", "lifespan", "--alpha", "1.5", "--eps", "0.02,0.01"]).unwrap();
        match c.command {
            Command::Lifespan(a) => assert_eq!(a.eps, Some(vec![0.02, 0.01])),
            _ => panic!("wrong command"),
        }
        assert!(Cli::try_parse_from(["asqg", "verify", "everything"]).is_err());
    }

    #[test]
    fn invalid_alpha_is_a_usage_error() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().to_str().unwrap();
        assert_eq!(main_with_args(["asqg", "spectrum", "--alpha", "2.5", "--out", out]), EXIT_USAGE);
    }

    #[test]
    fn simulate_config_defaults() {
        let c: SimulateConfig = serde_json::from_str(r#"{"sim": {"alpha": 1.5, "n": 32, "t_final": 0.5}}"#).unwrap();
        assert_eq!((c.eps, c.mode), (0.01, 2));
        let f = c.initial().unwrap();
        assert!(f.mean().abs() < 1e-18);
        assert!(serde_json::from_str::<SimulateConfig>(r#"{"sim": {"alpha": 1.5, "n": 32, "t_final": 0.5}, "amp": 1}"#).is_err());
    }
}
