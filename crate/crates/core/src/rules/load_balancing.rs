//! Load balancing by mutual selection.
//!
//! Each agent picks the neighbor holding the largest value above its own and
//! the neighbor holding the smallest value below its own. Two agents that
//! picked each other move a third of their difference. Whether a pair forms
//! depends on the neighbors' other neighbors, so this is not a local rule.

use std::str::FromStr;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rules::{check_len, RuleParams, StepRule};
use crate::scalar::Real;

/// Which neighbors are candidates for the "above" and "below" slots.
/// Ties between equally valued candidates go to the lowest agent index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Selection {
    /// Strictly above / strictly below.
    #[default]
    Strict,
    /// Equal values count for either slot.
    Inclusive,
}

impl FromStr for Selection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "strict" => Ok(Selection::Strict),
            "inclusive" => Ok(Selection::Inclusive),
            other => Err(Error::arg(format!("unknown load-balancing selection `{other}`"))),
        }
    }
}

// 0-indexed (above, below) picks per agent
fn select<T: Real>(g: &Graph, x: &[T], mode: Selection) -> Vec<(Option<usize>, Option<usize>)> {
    let above = |xj: T, xi: T| match mode {
        Selection::Strict => xj > xi,
        Selection::Inclusive => xj >= xi,
    };
    let below = |xj: T, xi: T| match mode {
        Selection::Strict => xj < xi,
        Selection::Inclusive => xj <= xi,
    };
    (0..g.n())
        .map(|i| {
            let mut up: Option<usize> = None;
            let mut down: Option<usize> = None;
            // ascending scan, replace only on strict improvement
            for &j in g.adjacency(i) {
                if above(x[j], x[i]) && up.is_none_or(|u| x[j] > x[u]) {
                    up = Some(j);
                }
                if below(x[j], x[i]) && down.is_none_or(|d| x[j] < x[d]) {
                    down = Some(j);
                }
            }
            (up, down)
        })
        .collect()
}

pub fn load_balancing_step<T: Real>(g: &Graph, x: &[T], params: &RuleParams<T>) -> Result<Vec<T>> {
    check_len(g, x)?;
    let picks = select(g, x, params.load_balancing);
    let chose = |i: usize, j: usize| picks[i].0 == Some(j) || picks[i].1 == Some(j);
    let third = T::one() / T::lit(3.0);
    Ok((0..g.n())
        .map(|i| {
            let pull: T = g
                .adjacency(i)
                .iter()
                .filter(|&&j| chose(i, j) && chose(j, i))
                .map(|&j| third * (x[j] - x[i]))
                .sum();
            x[i] + pull
        })
        .collect())
}

#[derive(Debug, Clone, Default)]
pub struct LoadBalancing {
    pub selection: Selection,
}

impl<T: Real> StepRule<T> for LoadBalancing {
    fn name(&self) -> &str {
        "load-balancing"
    }

    fn step(&self, g: &Graph, x: &[T]) -> Result<Vec<T>> {
        let params = RuleParams {
            load_balancing: self.selection,
            ..Default::default()
        };
        load_balancing_step(g, x, &params)
    }
}
