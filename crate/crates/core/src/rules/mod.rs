//! Update rules: per-agent local maps, whole-vector steps, and the policies
//! that pick their step sizes.
//!
//! A [`LocalRule`] computes one agent's next value from its own value and its
//! neighbors' values (in ascending neighbor order). [`lift`] applies it to all
//! agents synchronously. Rules that need more than the neighborhood, such as
//! load balancing, implement [`StepRule`] directly.

mod load_balancing;
mod named;
mod plugins;
mod registry;

use std::sync::Arc;

pub use load_balancing::{load_balancing_step, LoadBalancing, Selection};
pub use named::{
    max_degree_step, metropolis_step, EpsilonPolicy, MaxDegree, MaxDegreeLocal, Metropolis,
    MetropolisLocal, WeightPolicy,
};
pub use plugins::{CubicPerturbed, Identity, LinearWeights};
pub use registry::RuleRegistry;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::matrix::Matrix;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Linearity {
    Linear,
    Nonlinear,
}

/// Coefficients of a linear local update: `x_i' = own * x_i + sum_k neighbors[k] * x_{N_i[k]}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearRow<T> {
    pub own: T,
    pub neighbors: Vec<T>,
}

pub trait LocalRule<T: Real>: Send + Sync {
    fn name(&self) -> &str;

    /// Next value of 1-indexed `agent` given its value and its neighbors'
    /// values in ascending neighbor order.
    fn update(&self, g: &Graph, agent: usize, own: T, neighbors: &[T]) -> Result<T>;

    fn linearity(&self) -> Linearity {
        Linearity::Nonlinear
    }

    /// Exact coefficients for rules declared linear.
    fn linear_row(&self, _g: &Graph, _agent: usize) -> Option<Result<LinearRow<T>>> {
        None
    }

    /// Whether every step is guaranteed not to increase the sample variance.
    fn variance_monotone(&self) -> bool {
        false
    }
}

/// A whole-vector update `x(t+1) = f_G(t)(x(t))`.
pub trait StepRule<T: Real>: Send + Sync {
    fn name(&self) -> &str;

    fn step(&self, g: &Graph, x: &[T]) -> Result<Vec<T>>;

    fn linearity(&self) -> Linearity {
        Linearity::Nonlinear
    }

    /// The matrix `A` with `step(g, x) = A x`, for rules declared linear.
    fn matrix(&self, _g: &Graph) -> Option<Result<Matrix<T>>> {
        None
    }

    fn variance_monotone(&self) -> bool {
        false
    }
}

impl<T: Real, R: StepRule<T> + ?Sized> StepRule<T> for Arc<R> {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn step(&self, g: &Graph, x: &[T]) -> Result<Vec<T>> {
        (**self).step(g, x)
    }
    fn linearity(&self) -> Linearity {
        (**self).linearity()
    }
    fn matrix(&self, g: &Graph) -> Option<Result<Matrix<T>>> {
        (**self).matrix(g)
    }
    fn variance_monotone(&self) -> bool {
        (**self).variance_monotone()
    }
}

pub(crate) fn check_len<T>(g: &Graph, x: &[T]) -> Result<()> {
    if x.len() != g.n() {
        return Err(Error::arg(format!(
            "state has {} entries, graph has {} agents",
            x.len(),
            g.n()
        )));
    }
    Ok(())
}

/// Synchronous application of a local rule to every agent.
#[derive(Debug, Clone)]
pub struct Lifted<R> {
    rule: R,
}

pub fn lift<R>(rule: R) -> Lifted<R> {
    Lifted { rule }
}

impl<R> Lifted<R> {
    pub fn inner(&self) -> &R {
        &self.rule
    }
}

impl<T: Real, R: LocalRule<T>> StepRule<T> for Lifted<R> {
    fn name(&self) -> &str {
        self.rule.name()
    }

    fn step(&self, g: &Graph, x: &[T]) -> Result<Vec<T>> {
        check_len(g, x)?;
        let mut buf = Vec::with_capacity(g.max_degree());
        (0..g.n())
            .map(|i| {
                buf.clear();
                buf.extend(g.adjacency(i).iter().map(|&j| x[j]));
                self.rule.update(g, i + 1, x[i], &buf)
            })
            .collect()
    }

    fn linearity(&self) -> Linearity {
        self.rule.linearity()
    }

    fn matrix(&self, g: &Graph) -> Option<Result<Matrix<T>>> {
        if self.rule.linearity() != Linearity::Linear {
            return None;
        }
        let mut a = Matrix::zeros(g.n(), g.n());
        for i in 0..g.n() {
            let row = match self.rule.linear_row(g, i + 1)? {
                Ok(row) => row,
                Err(e) => return Some(Err(e)),
            };
            a[(i, i)] = row.own;
            for (&j, &w) in g.adjacency(i).iter().zip(&row.neighbors) {
                a[(i, j)] = w;
            }
        }
        Some(Ok(a))
    }

    fn variance_monotone(&self) -> bool {
        self.rule.variance_monotone()
    }
}

/// Step-size policies for the three named rules.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleParams<T> {
    pub max_degree: EpsilonPolicy<T>,
    pub metropolis: WeightPolicy<T>,
    pub load_balancing: Selection,
}

impl<T> Default for RuleParams<T> {
    fn default() -> Self {
        RuleParams {
            max_degree: EpsilonPolicy::Boundary,
            metropolis: WeightPolicy::Boundary,
            load_balancing: Selection::Strict,
        }
    }
}
