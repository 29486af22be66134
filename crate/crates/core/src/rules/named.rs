//! The max-degree and Metropolis averaging rules.

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::matrix::Matrix;
use crate::rules::{check_len, LinearRow, Linearity, LocalRule, RuleParams, StepRule};
use crate::scalar::Real;

/// How the max-degree rule picks `eps(t)`; must satisfy `eps(t) <= 1/(d(t)+1)`
/// where `d(t)` is the largest degree in the round's graph.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EpsilonPolicy<T> {
    /// `1/(d(t)+1)` with the true maximum degree.
    Boundary,
    /// `1/(b+1)` from an a-priori degree bound `b >= d(t)`.
    DegreeBound(usize),
    Fixed(T),
}

impl<T: Real> EpsilonPolicy<T> {
    pub fn epsilon(&self, g: &Graph) -> Result<T> {
        let d = g.max_degree();
        let limit = T::one() / T::from_usize_lossy(d + 1);
        match *self {
            EpsilonPolicy::Boundary => Ok(limit),
            EpsilonPolicy::DegreeBound(b) if b >= d => Ok(T::one() / T::from_usize_lossy(b + 1)),
            EpsilonPolicy::DegreeBound(b) => Err(Error::Config(format!(
                "degree bound {b} below the graph's maximum degree {d}"
            ))),
            EpsilonPolicy::Fixed(eps) if eps >= T::zero() && eps <= limit => Ok(eps),
            EpsilonPolicy::Fixed(eps) => Err(Error::Config(format!(
                "max-degree epsilon {eps} outside [0, 1/(d+1)] = [0, {limit}] for d = {d}"
            ))),
        }
    }
}

/// How the Metropolis rule weighs edge `{i,j}`; must satisfy
/// `eps_ij <= min(1/(d_i+1), 1/(d_j+1))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightPolicy<T> {
    /// `min(1/(d_i+1), 1/(d_j+1))`.
    Boundary,
    /// The boundary weight scaled by a factor in `(0, 1]`.
    Scaled(T),
    Fixed(T),
}

impl<T: Real> WeightPolicy<T> {
    pub fn weight(&self, d_i: usize, d_j: usize) -> Result<T> {
        let limit = T::one() / T::from_usize_lossy(d_i.max(d_j) + 1);
        match *self {
            WeightPolicy::Boundary => Ok(limit),
            WeightPolicy::Scaled(f) if f > T::zero() && f <= T::one() => Ok(f * limit),
            WeightPolicy::Scaled(f) => Err(Error::Config(format!(
                "Metropolis scale factor {f} outside (0, 1]"
            ))),
            WeightPolicy::Fixed(w) if w >= T::zero() && w <= limit => Ok(w),
            WeightPolicy::Fixed(w) => Err(Error::Config(format!(
                "Metropolis weight {w} exceeds min(1/(d_i+1), 1/(d_j+1)) = {limit} \
                 for degrees ({d_i}, {d_j})"
            ))),
        }
    }
}

fn max_degree_update<T: Real>(eps: T, own: T, neighbors: &[T]) -> T {
    let pull: T = neighbors.iter().map(|&xj| xj - own).sum();
    own + eps * pull
}

fn metropolis_update<T: Real>(
    policy: &WeightPolicy<T>,
    g: &Graph,
    i: usize,
    own: T,
    neighbors: &[T],
) -> Result<T> {
    let d_i = g.degree(i);
    let mut pull = T::zero();
    for (&j, &xj) in g.adjacency(i).iter().zip(neighbors) {
        pull = pull + policy.weight(d_i, g.degree(j))? * (xj - own);
    }
    Ok(own + pull)
}

fn gather<T: Real>(g: &Graph, x: &[T], i: usize, buf: &mut Vec<T>) {
    buf.clear();
    buf.extend(g.adjacency(i).iter().map(|&j| x[j]));
}

/// `x_i' = x_i + eps(t) * sum_{j in N_i} (x_j - x_i)`.
pub fn max_degree_step<T: Real>(g: &Graph, x: &[T], params: &RuleParams<T>) -> Result<Vec<T>> {
    check_len(g, x)?;
    let eps = params.max_degree.epsilon(g)?;
    let mut buf = Vec::new();
    Ok((0..g.n())
        .map(|i| {
            gather(g, x, i, &mut buf);
            max_degree_update(eps, x[i], &buf)
        })
        .collect())
}

/// `x_i' = x_i + sum_{j in N_i} eps_ij (x_j - x_i)`.
pub fn metropolis_step<T: Real>(g: &Graph, x: &[T], params: &RuleParams<T>) -> Result<Vec<T>> {
    check_len(g, x)?;
    let mut buf = Vec::new();
    (0..g.n())
        .map(|i| {
            gather(g, x, i, &mut buf);
            metropolis_update(&params.metropolis, g, i, x[i], &buf)
        })
        .collect()
}

fn max_degree_matrix<T: Real>(policy: &EpsilonPolicy<T>, g: &Graph) -> Result<Matrix<T>> {
    let eps = policy.epsilon(g)?;
    let mut a = Matrix::zeros(g.n(), g.n());
    for i in 0..g.n() {
        a[(i, i)] = T::one() - eps * T::from_usize_lossy(g.degree(i));
        for &j in g.adjacency(i) {
            a[(i, j)] = eps;
        }
    }
    Ok(a)
}

fn metropolis_row<T: Real>(policy: &WeightPolicy<T>, g: &Graph, i: usize) -> Result<LinearRow<T>> {
    let neighbors = g
        .adjacency(i)
        .iter()
        .map(|&j| policy.weight(g.degree(i), g.degree(j)))
        .collect::<Result<Vec<T>>>()?;
    let own = T::one() - neighbors.iter().copied().sum::<T>();
    Ok(LinearRow { own, neighbors })
}

fn metropolis_matrix<T: Real>(policy: &WeightPolicy<T>, g: &Graph) -> Result<Matrix<T>> {
    let mut a = Matrix::zeros(g.n(), g.n());
    for i in 0..g.n() {
        let row = metropolis_row(policy, g, i)?;
        a[(i, i)] = row.own;
        for (&j, w) in g.adjacency(i).iter().zip(row.neighbors) {
            a[(i, j)] = w;
        }
    }
    Ok(a)
}

#[derive(Debug, Clone)]
pub struct MaxDegree<T> {
    pub policy: EpsilonPolicy<T>,
}

impl<T: Real> StepRule<T> for MaxDegree<T> {
    fn name(&self) -> &str {
        "max-degree"
    }

    fn step(&self, g: &Graph, x: &[T]) -> Result<Vec<T>> {
        let params = RuleParams {
            max_degree: self.policy,
            ..Default::default()
        };
        max_degree_step(g, x, &params)
    }

    fn linearity(&self) -> Linearity {
        Linearity::Linear
    }

    fn matrix(&self, g: &Graph) -> Option<Result<Matrix<T>>> {
        Some(max_degree_matrix(&self.policy, g))
    }

    fn variance_monotone(&self) -> bool {
        true
    }
}

#[derive(Debug, Clone)]
pub struct Metropolis<T> {
    pub policy: WeightPolicy<T>,
}

impl<T: Real> StepRule<T> for Metropolis<T> {
    fn name(&self) -> &str {
        "metropolis"
    }

    fn step(&self, g: &Graph, x: &[T]) -> Result<Vec<T>> {
        let params = RuleParams {
            metropolis: self.policy,
            ..Default::default()
        };
        metropolis_step(g, x, &params)
    }

    fn linearity(&self) -> Linearity {
        Linearity::Linear
    }

    fn matrix(&self, g: &Graph) -> Option<Result<Matrix<T>>> {
        Some(metropolis_matrix(&self.policy, g))
    }

    fn variance_monotone(&self) -> bool {
        true
    }
}

/// Max-degree as a per-agent rule, for use with [`crate::rules::lift`].
#[derive(Debug, Clone)]
pub struct MaxDegreeLocal<T> {
    pub policy: EpsilonPolicy<T>,
}

impl<T: Real> LocalRule<T> for MaxDegreeLocal<T> {
    fn name(&self) -> &str {
        "max-degree"
    }

    fn update(&self, g: &Graph, _agent: usize, own: T, neighbors: &[T]) -> Result<T> {
        Ok(max_degree_update(self.policy.epsilon(g)?, own, neighbors))
    }

    fn linearity(&self) -> Linearity {
        Linearity::Linear
    }

    fn linear_row(&self, g: &Graph, agent: usize) -> Option<Result<LinearRow<T>>> {
        Some(self.policy.epsilon(g).map(|eps| LinearRow {
            own: T::one() - eps * T::from_usize_lossy(g.degree(agent - 1)),
            neighbors: vec![eps; g.degree(agent - 1)],
        }))
    }

    fn variance_monotone(&self) -> bool {
        true
    }
}

/// Metropolis as a per-agent rule, for use with [`crate::rules::lift`].
#[derive(Debug, Clone)]
pub struct MetropolisLocal<T> {
    pub policy: WeightPolicy<T>,
}

impl<T: Real> LocalRule<T> for MetropolisLocal<T> {
    fn name(&self) -> &str {
        "metropolis"
    }

    fn update(&self, g: &Graph, agent: usize, own: T, neighbors: &[T]) -> Result<T> {
        metropolis_update(&self.policy, g, agent - 1, own, neighbors)
    }

    fn linearity(&self) -> Linearity {
        Linearity::Linear
    }

    fn linear_row(&self, g: &Graph, agent: usize) -> Option<Result<LinearRow<T>>> {
        Some(metropolis_row(&self.policy, g, agent - 1))
    }

    fn variance_monotone(&self) -> bool {
        true
    }
}
