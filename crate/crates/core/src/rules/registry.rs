use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rules::{
    lift, CubicPerturbed, Identity, Linearity, LoadBalancing, MaxDegree, Metropolis, RuleParams,
    StepRule,
};
use crate::scalar::Real;
use crate::spectral::consensus_fixed_point_check;

/// Resolves rule tags (`max-degree`, `metropolis`, `load-balancing`,
/// `custom:<id>`) to step rules.
pub struct RuleRegistry<T: Real> {
    custom: BTreeMap<String, Arc<dyn StepRule<T>>>,
}

impl<T: Real> Default for RuleRegistry<T> {
    /// Registry with the `identity` and `cubic` plugins preinstalled.
    fn default() -> Self {
        let mut reg = RuleRegistry::empty();
        reg.register("identity", Arc::new(lift(Identity)))
            .expect("identity fixes consensus");
        reg.register("cubic", Arc::new(lift(CubicPerturbed::new(T::lit(0.1)))))
            .expect("cubic plugin fixes consensus");
        reg
    }
}

impl<T: Real> RuleRegistry<T> {
    pub fn empty() -> Self {
        RuleRegistry {
            custom: BTreeMap::new(),
        }
    }

    /// Adds `custom:<id>`. Nonlinear rules must map every sampled consensus
    /// vector to itself on a set of probe graphs, or they are rejected.
    pub fn register(&mut self, id: &str, rule: Arc<dyn StepRule<T>>) -> Result<()> {
        if id.is_empty() || id.contains(char::is_whitespace) {
            return Err(Error::arg(format!("invalid plugin id `{id}`")));
        }
        if rule.linearity() == Linearity::Nonlinear {
            let probes = [
                Graph::line(4)?,
                Graph::complete(4)?,
                Graph::star(5)?,
                Graph::edgeless(3)?,
            ];
            let samples = [-10.0, 0.0, 1.0, 3.5, 1e6].map(T::lit);
            for g in &probes {
                let map = |x: &[T]| rule.step(g, x);
                if !consensus_fixed_point_check(map, g.n(), &samples)? {
                    return Err(Error::Config(format!(
                        "plugin `{id}` does not fix consensus vectors on {} agents",
                        g.n()
                    )));
                }
            }
        }
        self.custom.insert(id.to_string(), rule);
        Ok(())
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.custom.keys().map(String::as_str)
    }

    pub fn resolve(&self, tag: &str, params: &RuleParams<T>) -> Result<Arc<dyn StepRule<T>>> {
        match tag {
            "max-degree" => Ok(Arc::new(MaxDegree {
                policy: params.max_degree,
            })),
            "metropolis" => Ok(Arc::new(Metropolis {
                policy: params.metropolis,
            })),
            "load-balancing" => Ok(Arc::new(LoadBalancing {
                selection: params.load_balancing,
            })),
            _ => {
                let id = tag
                    .strip_prefix("custom:")
                    .ok_or_else(|| Error::arg(format!("unknown rule `{tag}`")))?;
                self.custom
                    .get(id)
                    .cloned()
                    .ok_or_else(|| Error::arg(format!("no plugin registered as `{id}`")))
            }
        }
    }
}
