//! The `harvest` command line. [`run`] is the whole program minus process
//! plumbing so it can be driven from tests.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use super::config::parse_scenario;
use super::csv::write_sweep;
use crate::error::{Error, Result};
use crate::lattice::coupled::Probe;
use crate::lattice::{green_apply, green_residual, Direction, TripleFunction};
use crate::protocol::{
    assemble_blocks, critical_coupling, detector_signal, perturbative_coefficients,
    perturbative_residual, sweep, HarvestScenario, UNCERTAINTY_TOL,
};
use crate::symplectic::DEFAULT_TOL;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "harvest",
    version,
    about = "Entanglement harvesting on a 1+1 lattice"
)]
struct Cli {
    /// Seed for every sampled check.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sweep the coupling grid and write CSV.
    Sweep {
        scenario: PathBuf,
        /// Output file; standard output when absent.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Locate the smallest coupling with a positive Simon value.
    Critical {
        scenario: PathBuf,
        /// Search interval `a,b`.
        #[arg(long, value_parser = parse_interval)]
        interval: Option<(f64, f64)>,
        /// Relative bracket width.
        #[arg(long, value_parser = parse_tol)]
        tol: Option<f64>,
    },
    /// Expansion coefficients of the Simon value and the remainder slope.
    Perturb { scenario: PathBuf },
    /// Number expectation of one detector with the other coupling off.
    Signal {
        scenario: PathBuf,
        #[arg(long)]
        lambda: f64,
        #[arg(long, value_enum)]
        probe: ProbeArg,
    },
    /// Gaussian P-function witness of the assembled covariance.
    Witness {
        scenario: PathBuf,
        #[arg(long)]
        lambda: f64,
    },
    /// Solver residuals, state positivity, causal and uncertainty checks.
    Validate {
        scenario: PathBuf,
        /// Random bump pairs per state for the positivity check.
        #[arg(long, default_value_t = 20)]
        samples: usize,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ProbeArg {
    A,
    B,
}

impl From<ProbeArg> for Probe {
    fn from(p: ProbeArg) -> Self {
        match p {
            ProbeArg::A => Probe::A,
            ProbeArg::B => Probe::B,
        }
    }
}

fn parse_interval(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected `a,b`")?;
    let a: f64 = a.trim().parse().map_err(|e| format!("{e}"))?;
    let b: f64 = b.trim().parse().map_err(|e| format!("{e}"))?;
    if !(a.is_finite() && b.is_finite() && a >= 0.0 && b > a) {
        return Err("interval must satisfy 0 ≤ a < b".into());
    }
    Ok((a, b))
}

fn parse_tol(s: &str) -> std::result::Result<f64, String> {
    let t: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if !(t > 0.0 && t < 1.0) {
        return Err("tolerance must lie in (0, 1)".into());
    }
    Ok(t)
}

/// Parses `args` (including the program name) and executes; returns the
/// process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{text}")
            } else {
                write!(out, "{text}")
            };
            return code;
        }
    };
    match execute(&cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            match e {
                Error::Usage(_) => EXIT_USAGE,
                _ => EXIT_VALIDATION,
            }
        }
    }
}

fn execute(cli: &Cli, out: &mut dyn Write) -> Result<i32> {
    match &cli.command {
        Command::Sweep { scenario, output } => {
            let s = parse_scenario(scenario)?;
            let rows = sweep(&s)?;
            match output {
                Some(path) => super::csv::write_sweep_csv(&rows, path)?,
                None => write_sweep(&rows, &mut *out)?,
            }
            Ok(EXIT_OK)
        }
        Command::Critical {
            scenario,
            interval,
            tol,
        } => {
            let s = parse_scenario(scenario)?;
            let interval = interval.unwrap_or(s.critical.interval);
            let tol = tol.unwrap_or(s.critical.tol);
            s.coupled().check_stability(interval.1)?;
            let found = critical_coupling(&s, interval, s.critical.scan_points, tol)?;
            let initial = assemble_blocks(&s, 0.0)?.invariants();
            writeln!(out, "interval = [{}, {}]", interval.0, interval.1)?;
            writeln!(out, "p_s(0) = {}", initial.simon_value())?;
            writeln!(
                out,
                "-(det A0 - 1)(det B0 - 1) = {}",
                -(initial.det_a - 1.0) * (initial.det_b - 1.0)
            )?;
            match found.lambda_min {
                Some(l) => writeln!(out, "lambda_min = {l}")?,
                None => writeln!(out, "lambda_min = none (p_s <= 0 on the interval)")?,
            }
            if let Some((a, b)) = found.bracket {
                writeln!(out, "bracket = [{a}, {b}]")?;
            }
            writeln!(out, "crossings = {}", found.crossings)?;
            if found.multiple_crossings() {
                writeln!(out, "warning: several sign changes; reported the first")?;
            }
            Ok(EXIT_OK)
        }
        Command::Perturb { scenario } => {
            let s = parse_scenario(scenario)?;
            let c = perturbative_coefficients(&s)?;
            let fit = perturbative_residual(&s, &c, &s.perturbative_grid)?;
            writeln!(out, "p0 = {}", c.p0)?;
            writeln!(out, "p2 = {}", c.p2)?;
            writeln!(out, "p4 = {}", c.p4)?;
            writeln!(out, "p4_uncertainty = {}", c.p4_uncertainty)?;
            writeln!(out, "det_c2 = {}", c.det_c2)?;
            match fit.slope {
                Some(slope) => writeln!(out, "residual_slope = {slope}")?,
                None => writeln!(
                    out,
                    "residual_slope = inconclusive (residuals below {:e})",
                    fit.noise_floor
                )?,
            }
            Ok(EXIT_OK)
        }
        Command::Signal {
            scenario,
            lambda,
            probe,
        } => {
            let s = parse_scenario(scenario)?;
            let signal = detector_signal(&s, *lambda, (*probe).into())?;
            writeln!(out, "total = {}", signal.total)?;
            writeln!(out, "system_part = {}", signal.system_part)?;
            writeln!(out, "probe_part = {}", signal.probe_part)?;
            Ok(EXIT_OK)
        }
        Command::Witness { scenario, lambda } => {
            let s = parse_scenario(scenario)?;
            let gamma = assemble_blocks(&s, *lambda)?;
            writeln!(out, "p_s = {}", gamma.simon_value())?;
            match gamma.p_function_witness(DEFAULT_TOL) {
                Some(w) if w.rank_deficient => writeln!(
                    out,
                    "witness = rank-deficient (γ - 1 is singular; lower-dimensional P-function)"
                )?,
                Some(w) => {
                    writeln!(out, "witness = gaussian")?;
                    writeln!(out, "normalization = {}", w.normalization)?;
                    for r in 0..4 {
                        let row: Vec<String> = (0..4)
                            .map(|c| w.precision_matrix[(r, c)].to_string())
                            .collect();
                        writeln!(out, "precision[{r}] = {}", row.join(","))?;
                    }
                }
                None if gamma.simon_value() <= DEFAULT_TOL => writeln!(
                    out,
                    "witness = none (γ - 1 not psd); separable by Simon criterion"
                )?,
                None => writeln!(out, "witness = none (γ - 1 not psd); entangled")?,
            }
            Ok(EXIT_OK)
        }
        Command::Validate { scenario, samples } => {
            let s = parse_scenario(scenario)?;
            let all = validate(&s, *samples, cli.seed, out)?;
            Ok(if all { EXIT_OK } else { EXIT_VALIDATION })
        }
    }
}

/// Residual per unit source above which a Green solve counts as unresolved.
pub const RESIDUAL_LIMIT: f64 = 0.1;

fn report(out: &mut dyn Write, name: &str, pass: bool, detail: String) -> Result<bool> {
    writeln!(
        out,
        "{} {name}: {detail}",
        if pass { "PASS" } else { "FAIL" }
    )?;
    Ok(pass)
}

fn validate(s: &HarvestScenario, samples: usize, seed: u64, out: &mut dyn Write) -> Result<bool> {
    let mut all = true;
    let coupled = s.coupled();
    let sources = [
        ("system", coupled.system_op(), coupled.rho(Probe::A).field()),
        (
            "probe_a",
            coupled.probe_op(Probe::A),
            s.mode(Probe::A).f1.field(),
        ),
        (
            "probe_b",
            coupled.probe_op(Probe::B),
            s.mode(Probe::B).f1.field(),
        ),
    ];
    for (name, op, f) in sources {
        let u = green_apply(op, Direction::Retarded, f)?;
        let r = green_residual(op, &u, f)? / f.max_abs().max(f64::MIN_POSITIVE);
        all &= report(
            out,
            &format!("green residual {name}"),
            r <= RESIDUAL_LIMIT,
            format!("{r:e} per unit source"),
        )?;
    }
    for (k, (name, state)) in ["system", "probe_a", "probe_b"]
        .iter()
        .zip(s.states())
        .enumerate()
    {
        let rep = state.validate_positivity(samples, seed.wrapping_add(k as u64))?;
        all &= report(
            out,
            &format!("positivity {name}"),
            rep.passed,
            format!(
                "max violation {:e} over {} pairs",
                rep.max_violation, rep.samples
            ),
        )?;
    }
    if coupled.zones_spacelike() {
        let lambda = s.lambda_grid().last().copied().unwrap_or(0.0).max(1.0);
        let image = coupled.theta_apply(
            lambda,
            &TripleFunction::probe_only(Probe::A, s.mode(Probe::A).f1.field()),
        )?;
        let leak = image.probe(Probe::B).max_abs();
        all &= report(
            out,
            "causal factorization",
            leak <= 1e-12,
            format!("probe-B slot {leak:e} at λ = {lambda}"),
        )?;
    } else {
        writeln!(
            out,
            "SKIP causal factorization: coupling zones are causally connected"
        )?;
    }
    let mut worst = f64::INFINITY;
    for &lambda in s.lambda_grid() {
        match assemble_blocks(s, lambda) {
            Ok(g) => worst = worst.min(g.uncertainty_margin()),
            Err(Error::UncertaintyViolation { min_eigenvalue }) => {
                worst = worst.min(min_eigenvalue)
            }
            Err(e) => return Err(e),
        }
    }
    all &= report(
        out,
        "uncertainty",
        worst >= -UNCERTAINTY_TOL,
        format!(
            "min eigenvalue of γ + iΩ {worst:e} over {} couplings",
            s.lambda_grid().len()
        ),
    )?;
    Ok(all)
}
