//! Non-standard rules: identity, a smooth nonlinear rule, and user-supplied
//! linear weights.

use std::fmt;

use crate::error::Result;
use crate::graph::Graph;
use crate::rules::{LinearRow, Linearity, LocalRule, WeightPolicy};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, Default)]
pub struct Identity;

impl<T: Real> LocalRule<T> for Identity {
    fn name(&self) -> &str {
        "identity"
    }

    fn update(&self, _g: &Graph, _agent: usize, own: T, _neighbors: &[T]) -> Result<T> {
        Ok(own)
    }

    fn linearity(&self) -> Linearity {
        Linearity::Linear
    }

    fn linear_row(&self, g: &Graph, agent: usize) -> Option<Result<LinearRow<T>>> {
        Some(Ok(LinearRow {
            own: T::one(),
            neighbors: vec![T::zero(); g.degree(agent - 1)],
        }))
    }

    fn variance_monotone(&self) -> bool {
        true
    }
}

/// Metropolis averaging plus `c * sum_j (x_j - x_i)^3`.
///
/// The cubic term and its first derivative vanish at every consensus vector,
/// so the linearization at the origin is the Metropolis matrix. The term is
/// antisymmetric per edge, so the sum of the state is preserved as well.
#[derive(Debug, Clone)]
pub struct CubicPerturbed<T> {
    pub weights: WeightPolicy<T>,
    pub coefficient: T,
}

impl<T: Real> CubicPerturbed<T> {
    pub fn new(coefficient: T) -> Self {
        CubicPerturbed {
            weights: WeightPolicy::Boundary,
            coefficient,
        }
    }
}

impl<T: Real> LocalRule<T> for CubicPerturbed<T> {
    fn name(&self) -> &str {
        "cubic"
    }

    fn update(&self, g: &Graph, agent: usize, own: T, neighbors: &[T]) -> Result<T> {
        let i = agent - 1;
        let mut linear = T::zero();
        let mut cubic = T::zero();
        for (&j, &xj) in g.adjacency(i).iter().zip(neighbors) {
            let diff = xj - own;
            linear = linear + self.weights.weight(g.degree(i), g.degree(j))? * diff;
            cubic = cubic + diff * diff * diff;
        }
        Ok(own + linear + self.coefficient * cubic)
    }
}

/// A linear local rule with caller-supplied coefficients.
///
/// `weight(g, i, j)` gives the coefficient on neighbor `j` in agent `i`'s
/// update (both 1-indexed); the self coefficient is `1 - sum_j weight(g, i, j)`
/// so consensus is always fixed.
pub struct LinearWeights<F> {
    name: String,
    weight: F,
}

impl<F> LinearWeights<F> {
    pub fn new(name: impl Into<String>, weight: F) -> Self {
        LinearWeights {
            name: name.into(),
            weight,
        }
    }
}

impl<F> fmt::Debug for LinearWeights<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LinearWeights").field("name", &self.name).finish()
    }
}

impl<T, F> LocalRule<T> for LinearWeights<F>
where
    T: Real,
    F: Fn(&Graph, usize, usize) -> T + Send + Sync,
{
    fn name(&self) -> &str {
        &self.name
    }

    fn update(&self, g: &Graph, agent: usize, own: T, neighbors: &[T]) -> Result<T> {
        let pull: T = g
            .adjacency(agent - 1)
            .iter()
            .zip(neighbors)
            .map(|(&j, &xj)| (self.weight)(g, agent, j + 1) * (xj - own))
            .sum();
        Ok(own + pull)
    }

    fn linearity(&self) -> Linearity {
        Linearity::Linear
    }

    fn linear_row(&self, g: &Graph, agent: usize) -> Option<Result<LinearRow<T>>> {
        let neighbors: Vec<T> = g
            .adjacency(agent - 1)
            .iter()
            .map(|&j| (self.weight)(g, agent, j + 1))
            .collect();
        let own = T::one() - neighbors.iter().copied().sum::<T>();
        Some(Ok(LinearRow { own, neighbors }))
    }
}
