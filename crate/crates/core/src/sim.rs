//! Trajectories, the sample-variance functional and convergence time.
//!
//! The variance along a trajectory is always measured against the mean of the
//! initial state. Convergence time is the first round after which the
//! variance stays at or below `eps * V(x(0))`; on a finite horizon that is
//! the round after the last upward crossing of the threshold.

use std::fmt::Write as _;
use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::rules::{Linearity, StepRule};
use crate::scalar::Real;
use crate::sequence::GraphSequence;
use crate::spectral::{check_epsilon, eigen_decompose, matrix_of, SpectralCertificate};
use crate::text::sig6;

/// Above this many stored values a trajectory keeps checkpoints only.
pub const FULL_STORAGE_LIMIT: usize = 100_000_000;

#[derive(Debug, Clone, PartialEq)]
enum Storage<T> {
    /// Row-major `(t_max + 1) x n`.
    Full(Vec<T>),
    /// States at `t = 0, every, 2*every, ...` and the final round.
    Checkpoints { every: u64, states: Vec<(u64, Vec<T>)> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    n: usize,
    rule: String,
    descriptor: String,
    seed: Option<u64>,
    reference_mean: T,
    variance: Vec<T>,
    storage: Storage<T>,
}

impl<T: Real> Trajectory<T> {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rule(&self) -> &str {
        &self.rule
    }

    pub fn descriptor(&self) -> &str {
        &self.descriptor
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn t_max(&self) -> u64 {
        self.variance.len() as u64 - 1
    }

    /// Mean of `x(0)`.
    pub fn reference_mean(&self) -> T {
        self.reference_mean
    }

    /// `V(x(t))` for every round.
    pub fn variance(&self) -> &[T] {
        &self.variance
    }

    pub fn is_full(&self) -> bool {
        matches!(self.storage, Storage::Full(_))
    }

    /// `x(t)` when it was stored.
    pub fn state(&self, t: u64) -> Option<&[T]> {
        match &self.storage {
            Storage::Full(flat) => {
                let start = (t as usize).checked_mul(self.n)?;
                flat.get(start..start + self.n)
            }
            Storage::Checkpoints { states, .. } => states
                .binary_search_by_key(&t, |(s, _)| *s)
                .ok()
                .map(|k| states[k].1.as_slice()),
        }
    }

    pub fn stored_states(&self) -> Box<dyn Iterator<Item = (u64, &[T])> + '_> {
        match &self.storage {
            Storage::Full(flat) => Box::new(
                flat.chunks_exact(self.n)
                    .enumerate()
                    .map(|(t, s)| (t as u64, s)),
            ),
            Storage::Checkpoints { states, .. } => {
                Box::new(states.iter().map(|(t, s)| (*t, s.as_slice())))
            }
        }
    }

    pub fn final_state(&self) -> &[T] {
        self.state(self.t_max()).expect("final state always stored")
    }

    /// `t,agent,value` rows for every stored state, agents 1-indexed.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "t,agent,value")?;
        for (t, state) in self.stored_states() {
            for (i, v) in state.iter().enumerate() {
                writeln!(out, "{t},{},{v}", i + 1)?;
            }
        }
        Ok(())
    }

    /// `t,V` rows.
    pub fn write_variance_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "t,V")?;
        for (t, v) in self.variance.iter().enumerate() {
            writeln!(out, "{t},{v}")?;
        }
        Ok(())
    }
}

fn mean<T: Real>(x: &[T]) -> T {
    x.iter().copied().sum::<T>() / T::from_usize_lossy(x.len())
}

/// `sum_i (x_i - m)^2` with `m` the given reference mean, or the mean of `x`.
pub fn sample_variance<T: Real>(x: &[T], reference_mean: Option<T>) -> T {
    let m = reference_mean.unwrap_or_else(|| mean(x));
    x.iter().map(|&v| (v - m) * (v - m)).sum()
}

fn check_state<T: Real>(x: &[T], round: u64) -> Result<()> {
    match x.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::numerical(
            format!("non-finite value at agent {} in round {round}", i + 1),
            Some(i + 1),
        )),
        None => Ok(()),
    }
}

fn check_dim<T>(seq: &GraphSequence, x0: &[T]) -> Result<()> {
    if x0.len() != seq.n() {
        return Err(Error::arg(format!(
            "initial state has {} entries, sequence has {} agents",
            x0.len(),
            seq.n()
        )));
    }
    Ok(())
}

/// `x(t+1) = f_{G(t)}(x(t))` for `t < t_max`.
pub fn run<T: Real, R: StepRule<T> + ?Sized>(
    rule: &R,
    seq: &GraphSequence,
    x0: &[T],
    t_max: u64,
) -> Result<Trajectory<T>> {
    check_dim(seq, x0)?;
    check_state(x0, 0)?;
    let n = x0.len();
    let m0 = mean(x0);
    let full = (t_max as usize)
        .checked_add(1)
        .and_then(|len| len.checked_mul(n))
        .is_some_and(|total| total <= FULL_STORAGE_LIMIT);
    let every = n as u64;

    let mut storage = if full {
        let mut flat = Vec::with_capacity((t_max as usize + 1) * n);
        flat.extend_from_slice(x0);
        Storage::Full(flat)
    } else {
        Storage::Checkpoints {
            every,
            states: vec![(0, x0.to_vec())],
        }
    };
    let mut variance = Vec::with_capacity(t_max as usize + 1);
    variance.push(sample_variance(x0, Some(m0)));
    let mut x = x0.to_vec();
    for t in 0..t_max {
        x = rule.step(&seq.graph_at(t), &x)?;
        check_state(&x, t + 1)?;
        variance.push(sample_variance(&x, Some(m0)));
        match &mut storage {
            Storage::Full(flat) => flat.extend_from_slice(&x),
            Storage::Checkpoints { every, states } => {
                if (t + 1) % *every == 0 || t + 1 == t_max {
                    states.push((t + 1, x.clone()));
                }
            }
        }
    }
    Ok(Trajectory {
        n,
        rule: rule.name().to_string(),
        descriptor: seq.descriptor().to_string(),
        seed: None,
        reference_mean: m0,
        variance,
        storage,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport<T> {
    /// First round after which `V <= eps V(0)` held through the horizon;
    /// `None` when the horizon ended above the threshold.
    pub t: Option<u64>,
    pub epsilon: T,
    pub horizon: u64,
    /// Rounds actually simulated; shorter than `horizon` when a monotone
    /// guarantee allowed stopping at the crossing.
    pub rounds_simulated: u64,
    /// The crossing is known to be permanent, not just observed.
    pub certified: bool,
    pub v0: T,
    pub v_at_t: Option<T>,
}

impl<T: Real> ConvergenceReport<T> {
    pub fn reached(&self) -> bool {
        self.t.is_some()
    }

    /// Flat `key=value` block.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let t = self.t.map_or("not-reached".to_string(), |t| t.to_string());
        let _ = writeln!(out, "T={t}");
        let _ = writeln!(out, "certified={}", self.certified);
        let _ = writeln!(out, "epsilon={}", sig6(self.epsilon.as_f64()));
        let _ = writeln!(out, "horizon={}", self.horizon);
        let _ = writeln!(out, "rounds_simulated={}", self.rounds_simulated);
        let _ = writeln!(out, "V0={}", sig6(self.v0.as_f64()));
        if let Some(v) = self.v_at_t {
            let _ = writeln!(out, "V_at_T={}", sig6(v.as_f64()));
        }
        out
    }
}

/// `max(1000, ceil(50 n^2 B ln(1/eps)))`.
pub fn default_horizon(n: usize, window: u64, epsilon: f64) -> u64 {
    let scaled = 50.0 * (n * n) as f64 * window as f64 * (1.0 / epsilon).ln();
    (scaled.ceil() as u64).max(1000)
}

pub fn convergence_time<T: Real, R: StepRule<T> + ?Sized>(
    rule: &R,
    seq: &GraphSequence,
    x0: &[T],
    epsilon: T,
    t_max: u64,
) -> Result<ConvergenceReport<T>> {
    convergence_time_certified(rule, seq, x0, epsilon, t_max, None)
}

/// [`convergence_time`] with an optional spectral certificate for the
/// (constant) map being iterated.
pub fn convergence_time_certified<T: Real, R: StepRule<T> + ?Sized>(
    rule: &R,
    seq: &GraphSequence,
    x0: &[T],
    epsilon: T,
    t_max: u64,
    certificate: Option<&SpectralCertificate<T>>,
) -> Result<ConvergenceReport<T>> {
    check_epsilon(epsilon)?;
    check_dim(seq, x0)?;
    check_state(x0, 0)?;
    let m0 = mean(x0);
    let v0 = sample_variance(x0, Some(m0));
    if v0 == T::zero() {
        return Err(Error::Degenerate(
            "initial state is a consensus vector; convergence time is undefined".into(),
        ));
    }
    let threshold = epsilon * v0;
    let guaranteed = rule.variance_monotone() || certificate.is_some();

    let mut x = x0.to_vec();
    let mut v = v0;
    let mut last_above: Option<u64> = None;
    let mut last_increase: Option<u64> = None;
    let mut v_at_crossing = v0;
    let mut t = 0;
    loop {
        if v > threshold {
            last_above = Some(t);
        } else {
            if last_above.is_none_or(|a| a + 1 == t) {
                v_at_crossing = v;
            }
            if guaranteed {
                break;
            }
        }
        if t == t_max {
            break;
        }
        x = rule.step(&seq.graph_at(t), &x)?;
        t += 1;
        check_state(&x, t)?;
        let next = sample_variance(&x, Some(m0));
        if next > v {
            last_increase = Some(t);
        }
        v = next;
    }
    let reached = v <= threshold;
    let crossing = last_above.map_or(0, |a| a + 1);
    let observed_monotone = last_increase.is_none_or(|s| s <= crossing);
    let certified = reached && (certificate.is_some() || (rule.variance_monotone() && observed_monotone));
    Ok(ConvergenceReport {
        t: reached.then_some(crossing),
        epsilon,
        horizon: t_max,
        rounds_simulated: t,
        certified,
        v0,
        v_at_t: reached.then_some(v_at_crossing),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitStrategy {
    /// Start on the subdominant eigenvector (linear rules, constant sequences).
    Spectral,
    /// Worst of `k` uniform random starts in `[-1, 1]^n`.
    RandomRestarts { k: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorstCaseReport<T> {
    pub report: ConvergenceReport<T>,
    /// The initial state achieving the reported time.
    pub x0: Vec<T>,
    pub trials: usize,
}

/// Restart `index` of a `random-restarts` search: uniform in `[-1, 1]^n`.
pub fn random_init<T: Real>(n: usize, seed: u64, index: u64) -> Vec<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    (0..n).map(|_| T::lit(rng.gen_range(-1.0..1.0))).collect()
}

fn later<T: Real>(a: &ConvergenceReport<T>, b: &ConvergenceReport<T>) -> bool {
    match (a.t, b.t) {
        (None, _) => false,
        (Some(_), None) => true,
        (Some(x), Some(y)) => y > x,
    }
}

pub fn worst_case_convergence_time<T: Real, R: StepRule<T> + ?Sized>(
    rule: &R,
    seq: &GraphSequence,
    epsilon: T,
    strategy: &InitStrategy,
    t_max: u64,
) -> Result<WorstCaseReport<T>> {
    match *strategy {
        InitStrategy::Spectral => {
            if rule.linearity() != Linearity::Linear {
                return Err(Error::Unsupported(format!(
                    "spectral init needs a linear rule; `{}` is nonlinear",
                    rule.name()
                )));
            }
            let g = seq.constant_graph().ok_or_else(|| {
                Error::Unsupported("spectral init needs a constant graph sequence".into())
            })?;
            let a = matrix_of(rule, g)?;
            let spectrum = eigen_decompose(&a)?;
            let x0 = spectrum.v.clone().ok_or_else(|| {
                Error::Unsupported("matrix has no real subdominant eigenvalue in (0, 1)".into())
            })?;
            let cert = SpectralCertificate::from_report(&spectrum);
            let report =
                convergence_time_certified(rule, seq, &x0, epsilon, t_max, cert.as_ref())?;
            Ok(WorstCaseReport {
                report,
                x0,
                trials: 1,
            })
        }
        InitStrategy::RandomRestarts { k, seed } => {
            if k == 0 {
                return Err(Error::arg("random-restarts needs k >= 1"));
            }
            let mut worst: Option<WorstCaseReport<T>> = None;
            for index in 0..k as u64 {
                let x0 = random_init(seq.n(), seed, index);
                let report = convergence_time(rule, seq, &x0, epsilon, t_max)?;
                if worst.as_ref().is_none_or(|w| later(&w.report, &report)) {
                    worst = Some(WorstCaseReport {
                        report,
                        x0,
                        trials: k,
                    });
                }
            }
            Ok(worst.expect("k >= 1"))
        }
    }
}

/// Order of a vector norm: finite `p >= 1` or infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormOrder<T> {
    P(T),
    Infinity,
}

/// `|| x - m 1 ||_p`.
///
/// Finite orders are evaluated as `M (sum (|d_i|/M)^p)^(1/p)` with
/// `M = max |d_i|`; this keeps `||.||_inf <= ||.||_2 <= sqrt(n) ||.||_inf`
/// exact in floating point.
pub fn p_norm_distance<T: Real>(x: &[T], reference_mean: T, order: NormOrder<T>) -> Result<T> {
    let biggest = x
        .iter()
        .fold(T::zero(), |acc, &v| acc.max((v - reference_mean).abs()));
    match order {
        NormOrder::Infinity => Ok(biggest),
        NormOrder::P(p) if p >= T::one() => {
            if biggest == T::zero() {
                return Ok(T::zero());
            }
            let sum: T = x
                .iter()
                .map(|&v| ((v - reference_mean).abs() / biggest).powf(p))
                .sum();
            let root = if p == T::lit(2.0) {
                sum.sqrt()
            } else {
                sum.powf(p.recip())
            };
            Ok(biggest * root)
        }
        NormOrder::P(p) => Err(Error::arg(format!("norm order {p} below 1"))),
    }
}
