//! Subcommand bodies. Each writes its report to `out` and leaves exit-code
//! mapping to the caller.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use avgcons_core::rules::Linearity;
use avgcons_core::sim::default_horizon;
use avgcons_core::spectral::{Source, DEFAULT_PROBE_STEP};
use avgcons_core::text::sig6;
use avgcons_core::{
    convergence_time, eigen_decompose, eigenvalue_interval_check, first_failing_window,
    lower_bound_value, matrix_of, numerical_jacobian, run, sample_variance,
    worst_case_convergence_time, ConvergenceReport64, Error, GraphSequence, InitStrategy,
    LinearizationMatrix64, Result, RuleRegistry64, StepRule,
};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, InitSpec};
use crate::fit::{fit_scaling, ScalingFitReport};

/// Result of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    /// Not reached, audit failed, validation failed.
    ScientificFailure,
}

/// Rounds simulated by `simulate` when no `t-max` is given.
pub const SIMULATE_DEFAULT_ROUNDS: u64 = 100;

fn resolve_rule(cfg: &ExperimentConfig) -> Result<Arc<dyn StepRule<f64>>> {
    RuleRegistry64::default().resolve(&cfg.rule, &cfg.rule_params)
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| io_err(path, e))
}

/// Reads a state vector: numbers separated by whitespace or commas.
pub fn read_state_file(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut x = vec![];
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("");
        for tok in line.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()) {
            x.push(tok.parse().map_err(|_| Error::Parse {
                line: i + 1,
                message: format!("not a number: `{tok}`"),
            })?);
        }
    }
    Ok(x)
}

fn linearization(rule: &dyn StepRule<f64>, seq: &GraphSequence) -> Result<LinearizationMatrix64> {
    let g = seq.constant_graph().ok_or_else(|| {
        Error::Unsupported(format!("{} is not a constant sequence", seq.descriptor()))
    })?;
    if rule.linearity() == Linearity::Linear {
        matrix_of(rule, g)
    } else {
        numerical_jacobian(|x: &[f64]| rule.step(g, x), &vec![0.0; g.n()], DEFAULT_PROBE_STEP)
    }
}

fn file_state(path: &Path, n: usize) -> Result<Vec<f64>> {
    let x = read_state_file(path)?;
    if x.len() != n {
        return Err(Error::Config(format!(
            "{} holds {} values for {n} agents",
            path.display(),
            x.len()
        )));
    }
    Ok(x)
}

/// A single start for `simulate`; `random:<k>` uses the first restart.
fn simulation_start(cfg: &ExperimentConfig, rule: &dyn StepRule<f64>, seq: &GraphSequence) -> Result<Vec<f64>> {
    match &cfg.init {
        InitSpec::File(path) => file_state(path, seq.n()),
        InitSpec::Random { .. } => Ok(avgcons_core::sim::random_init(seq.n(), cfg.seed, 0)),
        InitSpec::Spectral => {
            if rule.linearity() != Linearity::Linear {
                return Err(Error::Unsupported(format!(
                    "spectral init needs a linear rule; `{}` is nonlinear",
                    rule.name()
                )));
            }
            eigen_decompose(&linearization(rule, seq)?)?.v.ok_or_else(|| {
                Error::Unsupported("matrix has no real subdominant eigenvalue in (0, 1)".into())
            })
        }
    }
}

pub fn cmd_simulate(cfg: &ExperimentConfig, out: &mut dyn Write) -> Result<Outcome> {
    let rule = resolve_rule(cfg)?;
    let seq = cfg.sequence(cfg.single_n()?)?;
    let x0 = simulation_start(cfg, rule.as_ref(), &seq)?;
    if sample_variance(&x0, None) == 0.0 {
        return Err(Error::Degenerate("initial state is already a consensus vector".into()));
    }
    let t_max = cfg.t_max.unwrap_or(SIMULATE_DEFAULT_ROUNDS);
    let traj = run(rule.as_ref(), &seq, &x0, t_max)?.with_seed(cfg.seed);
    fs::create_dir_all(&cfg.out).map_err(|e| io_err(&cfg.out, e))?;
    let tpath = cfg.out.join("trajectory.csv");
    let vpath = cfg.out.join("variance.csv");
    let mut w = create(&tpath)?;
    traj.write_csv(&mut w).and_then(|_| w.flush()).map_err(|e| io_err(&tpath, e))?;
    let mut w = create(&vpath)?;
    traj.write_variance_csv(&mut w).and_then(|_| w.flush()).map_err(|e| io_err(&vpath, e))?;
    writeln!(out, "rule={}", traj.rule())?;
    writeln!(out, "seq={}", traj.descriptor())?;
    writeln!(out, "n={}", traj.n())?;
    writeln!(out, "t_max={t_max}")?;
    writeln!(out, "V0={}", sig6(traj.variance()[0]))?;
    writeln!(out, "V_final={}", sig6(*traj.variance().last().expect("t = 0 is stored")))?;
    writeln!(out, "trajectory={}", tpath.display())?;
    writeln!(out, "variance={}", vpath.display())?;
    Ok(Outcome::Success)
}

fn horizon(cfg: &ExperimentConfig, n: usize) -> u64 {
    cfg.t_max.unwrap_or_else(|| default_horizon(n, cfg.window, cfg.epsilon))
}

/// Convergence time for one sequence under the configured init strategy.
pub fn measure(cfg: &ExperimentConfig, rule: &dyn StepRule<f64>, seq: &GraphSequence) -> Result<ConvergenceReport64> {
    let t_max = horizon(cfg, seq.n());
    match &cfg.init {
        InitSpec::File(path) => convergence_time(rule, seq, &file_state(path, seq.n())?, cfg.epsilon, t_max),
        InitSpec::Spectral => {
            Ok(worst_case_convergence_time(rule, seq, cfg.epsilon, &InitStrategy::Spectral, t_max)?.report)
        }
        InitSpec::Random { k } => {
            let strategy = InitStrategy::RandomRestarts { k: *k, seed: cfg.seed };
            Ok(worst_case_convergence_time(rule, seq, cfg.epsilon, &strategy, t_max)?.report)
        }
    }
}

pub fn cmd_tconv(cfg: &ExperimentConfig, out: &mut dyn Write) -> Result<Outcome> {
    let rule = resolve_rule(cfg)?;
    let seq = cfg.sequence(cfg.single_n()?)?;
    let report = measure(cfg, rule.as_ref(), &seq)?;
    writeln!(out, "rule={}", rule.name())?;
    writeln!(out, "seq={}", seq.descriptor())?;
    writeln!(out, "n={}", seq.n())?;
    write!(out, "{}", report.to_text())?;
    if seq.n() >= 3 {
        writeln!(out, "lower_bound={}", sig6(lower_bound_value(seq.n(), cfg.epsilon)?))?;
    }
    Ok(if report.reached() { Outcome::Success } else { Outcome::ScientificFailure })
}

/// Measures every `n` of the sweep on `cfg.jobs` threads, in `n` order.
pub fn scaling_sweep(cfg: &ExperimentConfig) -> Result<ScalingFitReport> {
    if cfg.n_list.len() < 3 {
        return Err(Error::Config("scaling needs at least three values in n-list".into()));
    }
    if let Some(n) = cfg.n_list.iter().find(|&&n| n < 3) {
        return Err(Error::Config(format!("scaling needs every n >= 3, got {n}")));
    }
    let rule = resolve_rule(cfg)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let points: Vec<(usize, Option<u64>)> = pool.install(|| {
        cfg.n_list
            .par_iter()
            .map(|&n| {
                let seq = cfg.sequence(Some(n))?;
                Ok((n, measure(cfg, rule.as_ref(), &seq)?.t))
            })
            .collect::<Result<_>>()
    })?;
    fit_scaling(&points, cfg.epsilon, cfg.window)
}

pub fn cmd_scaling(cfg: &ExperimentConfig, out: &mut dyn Write) -> Result<Outcome> {
    let report = scaling_sweep(cfg)?;
    fs::create_dir_all(&cfg.out).map_err(|e| io_err(&cfg.out, e))?;
    let path = cfg.out.join("scaling.csv");
    let mut w = create(&path)?;
    report.write_csv(&mut w).and_then(|_| w.flush()).map_err(|e| io_err(&path, e))?;
    writeln!(out, "rule={}", cfg.rule)?;
    writeln!(out, "epsilon={}", sig6(cfg.epsilon))?;
    writeln!(out, "B={}", cfg.window)?;
    if report.all_reached() {
        write!(out, "{}", report.to_text())?;
    } else {
        let missing: Vec<String> =
            report.points.iter().filter(|p| p.t.is_none()).map(|p| p.n.to_string()).collect();
        writeln!(out, "not_reached={}", missing.join(","))?;
        writeln!(out, "fit=aborted")?;
    }
    writeln!(out, "csv={}", path.display())?;
    Ok(if report.all_reached() && report.audit_pass() {
        Outcome::Success
    } else {
        Outcome::ScientificFailure
    })
}

pub fn cmd_spectral(cfg: &ExperimentConfig, out: &mut dyn Write) -> Result<Outcome> {
    let rule = resolve_rule(cfg)?;
    let seq = cfg.sequence(cfg.single_n()?)?;
    let a = linearization(rule.as_ref(), &seq)?;
    let report = eigen_decompose(&a)?;
    writeln!(out, "rule={}", rule.name())?;
    writeln!(out, "seq={}", seq.descriptor())?;
    if let Source::Numerical { h } = a.source {
        writeln!(out, "linearization=numerical h={h:e}")?;
    }
    write!(out, "{}", report.to_text(seq.n()))?;
    Ok(if eigenvalue_interval_check(&report, seq.n()) {
        Outcome::Success
    } else {
        Outcome::ScientificFailure
    })
}

/// Default validation horizon when `t-max` is absent: 100 windows.
pub fn validation_horizon(cfg: &ExperimentConfig) -> u64 {
    cfg.t_max.unwrap_or(100 * cfg.window)
}

pub fn cmd_validate(cfg: &ExperimentConfig, out: &mut dyn Write) -> Result<Outcome> {
    let seq = cfg.sequence(cfg.single_n()?)?;
    let h = validation_horizon(cfg);
    let failing = first_failing_window(&seq, cfg.window, h).map_err(|e| match e {
        Error::Argument(m) => Error::Config(m),
        other => other,
    })?;
    writeln!(out, "seq={}", seq.descriptor())?;
    writeln!(out, "B={}", cfg.window)?;
    writeln!(out, "horizon={h}")?;
    match failing {
        None => {
            writeln!(out, "result=pass")?;
            Ok(Outcome::Success)
        }
        Some(w) => {
            writeln!(out, "result=fail")?;
            writeln!(out, "first_failing_window=k={} rounds=[{},{}]", w.k, w.start, w.end)?;
            Ok(Outcome::ScientificFailure)
        }
    }
}

/// Process exit status for an error: 3 for numerical failures, 1 otherwise.
pub fn error_exit_code(e: &Error) -> u8 {
    match e {
        Error::Numerical { .. } => 3,
        _ => 1,
    }
}
