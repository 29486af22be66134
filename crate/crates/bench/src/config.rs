//! Experiment configuration: a flat `key = value` file merged with
//! command-line overrides.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use avgcons_core::sequence::load_periodic_dir;
use avgcons_core::{
    make_sequence, EpsilonPolicy, Error, GeneratorParams, GraphSequence, Result, RuleParams64,
    SequenceKind, WeightPolicy,
};

/// Every key accepted in a config file or as a `--<key>` flag.
pub const KEYS: &[&str] = &[
    "rule",
    "seq",
    "n",
    "n-list",
    "epsilon",
    "B",
    "seed",
    "init",
    "t-max",
    "out",
    "jobs",
    "max-degree-eps",
    "metropolis-weight",
    "selection",
    "edge-prob",
];

#[derive(Debug, Clone, PartialEq)]
pub enum InitSpec {
    Spectral,
    Random { k: usize },
    File(PathBuf),
}

impl std::str::FromStr for InitSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "spectral" {
            return Ok(InitSpec::Spectral);
        }
        if let Some(k) = s.strip_prefix("random:") {
            let k = parse_num::<usize>("init", k)?;
            if k == 0 {
                return Err(Error::Config("init random:<k> needs k >= 1".into()));
            }
            return Ok(InitSpec::Random { k });
        }
        if let Some(path) = s.strip_prefix("file:") {
            return Ok(InitSpec::File(PathBuf::from(path)));
        }
        Err(Error::Config(format!(
            "init must be spectral, random:<k> or file:<path>, got `{s}`"
        )))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SequenceSpec {
    Generated(SequenceKind),
    PeriodicDir(PathBuf),
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub rule: String,
    pub rule_params: RuleParams64,
    pub seq: SequenceSpec,
    pub extra_edge_prob: f64,
    /// Connectivity window `B`.
    pub window: u64,
    /// Empty for periodic lists without an explicit `n`; the size then comes
    /// from the graph files.
    pub n_list: Vec<usize>,
    pub epsilon: f64,
    pub init: InitSpec,
    pub seed: u64,
    pub t_max: Option<u64>,
    pub out: PathBuf,
    pub jobs: usize,
}

/// Raw settings before validation. Later layers override earlier ones.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    values: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn parse_file_text(text: &str) -> Result<Self> {
        let mut raw = RawConfig::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: i + 1,
                message: format!("expected `key = value`, got `{line}`"),
            })?;
            raw.set(k.trim(), v.trim()).map_err(|e| Error::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
        }
        Ok(raw)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse_file_text(&fs::read_to_string(path)?)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !KEYS.contains(&key) {
            return Err(Error::Config(format!("unknown key `{key}`")));
        }
        // `n` and `n-list` fill the same slot
        let key = if key == "n" { "n-list" } else { key };
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn merge(&mut self, other: RawConfig) {
        self.values.extend(other.values);
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn resolve(&self) -> Result<ExperimentConfig> {
        let rule = self.get("rule").unwrap_or("metropolis").to_string();
        let mut rule_params = RuleParams64::default();
        if let Some(v) = self.get("max-degree-eps") {
            rule_params.max_degree = parse_epsilon_policy(v)?;
        }
        if let Some(v) = self.get("metropolis-weight") {
            rule_params.metropolis = parse_weight_policy(v)?;
        }
        if let Some(v) = self.get("selection") {
            rule_params.load_balancing = v.parse().map_err(config)?;
        }
        let seq = match self.get("seq").unwrap_or("constant-line") {
            s if s.starts_with("periodic-list:") => {
                SequenceSpec::PeriodicDir(PathBuf::from(&s["periodic-list:".len()..]))
            }
            "periodic-list" => {
                return Err(Error::Config(
                    "periodic-list needs a directory: periodic-list:<dir>".into(),
                ))
            }
            s => SequenceSpec::Generated(s.parse().map_err(config)?),
        };
        let n_list = match self.get("n-list") {
            Some(v) => parse_n_list(v)?,
            None => vec![],
        };
        let epsilon = self.get("epsilon").map_or(Ok(0.01), |v| parse_num("epsilon", v))?;
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::Config(format!("epsilon must lie in (0, 1), got {epsilon}")));
        }
        let window = self.get("B").map_or(Ok(1), |v| parse_num("B", v))?;
        if window == 0 {
            return Err(Error::Config("B must be at least 1".into()));
        }
        let extra_edge_prob = self.get("edge-prob").map_or(Ok(0.0), |v| parse_num("edge-prob", v))?;
        if !(0.0..=1.0).contains(&extra_edge_prob) {
            return Err(Error::Config(format!("edge-prob must lie in [0, 1], got {extra_edge_prob}")));
        }
        let jobs = self.get("jobs").map_or(Ok(1), |v| parse_num("jobs", v))?;
        if jobs == 0 {
            return Err(Error::Config("jobs must be at least 1".into()));
        }
        Ok(ExperimentConfig {
            rule,
            rule_params,
            seq,
            extra_edge_prob,
            window,
            n_list,
            epsilon,
            init: self.get("init").unwrap_or("spectral").parse()?,
            seed: self.get("seed").map_or(Ok(0), |v| parse_num("seed", v))?,
            t_max: self.get("t-max").map(|v| parse_num("t-max", v)).transpose()?,
            out: PathBuf::from(self.get("out").unwrap_or(".")),
            jobs,
        })
    }
}

fn config(e: Error) -> Error {
    match e {
        Error::Argument(m) => Error::Config(m),
        other => other,
    }
}

fn parse_num<N: std::str::FromStr>(key: &str, v: &str) -> Result<N> {
    v.trim()
        .parse()
        .map_err(|_| Error::Config(format!("cannot parse {key} value `{v}`")))
}

fn parse_n_list(v: &str) -> Result<Vec<usize>> {
    let mut ns = v
        .split(',')
        .map(|s| parse_num::<usize>("n", s))
        .collect::<Result<Vec<_>>>()?;
    if let Some(&bad) = ns.iter().find(|&&n| n < 2) {
        return Err(Error::Config(format!("every n must be at least 2, got {bad}")));
    }
    ns.sort_unstable();
    ns.dedup();
    Ok(ns)
}

/// `boundary`, `bound:<b>` or a fixed value.
fn parse_epsilon_policy(v: &str) -> Result<EpsilonPolicy<f64>> {
    if v == "boundary" {
        Ok(EpsilonPolicy::Boundary)
    } else if let Some(b) = v.strip_prefix("bound:") {
        Ok(EpsilonPolicy::DegreeBound(parse_num("max-degree-eps", b)?))
    } else {
        Ok(EpsilonPolicy::Fixed(parse_num("max-degree-eps", v)?))
    }
}

/// `boundary`, `scaled:<f>` or a fixed value.
fn parse_weight_policy(v: &str) -> Result<WeightPolicy<f64>> {
    if v == "boundary" {
        Ok(WeightPolicy::Boundary)
    } else if let Some(f) = v.strip_prefix("scaled:") {
        Ok(WeightPolicy::Scaled(parse_num("metropolis-weight", f)?))
    } else {
        Ok(WeightPolicy::Fixed(parse_num("metropolis-weight", v)?))
    }
}

impl ExperimentConfig {
    /// Builds the graph sequence for `n` (ignored when a periodic directory
    /// fixes the size and `n` is `None`).
    pub fn sequence(&self, n: Option<usize>) -> Result<GraphSequence> {
        match &self.seq {
            SequenceSpec::PeriodicDir(dir) => {
                let graphs = load_periodic_dir(dir)?;
                let seq = GraphSequence::periodic(graphs)?;
                if let Some(n) = n.filter(|&n| n != seq.n()) {
                    return Err(Error::Config(format!(
                        "n = {n} does not match the {} agents in {}",
                        seq.n(),
                        dir.display()
                    )));
                }
                Ok(seq)
            }
            SequenceSpec::Generated(kind) => {
                let n = n.ok_or_else(|| Error::Config("n is required".into()))?;
                let params = GeneratorParams {
                    extra_edge_prob: self.extra_edge_prob,
                    ..GeneratorParams::default()
                };
                make_sequence(*kind, n, &params, self.seed).map_err(config)
            }
        }
    }

    /// The single system size for commands that take one `n`.
    pub fn single_n(&self) -> Result<Option<usize>> {
        match self.n_list.as_slice() {
            [] if matches!(self.seq, SequenceSpec::PeriodicDir(_)) => Ok(None),
            [] => Err(Error::Config("n is required".into())),
            [n] => Ok(Some(*n)),
            _ => Err(Error::Config("this command takes a single n, not a list".into())),
        }
    }
}
