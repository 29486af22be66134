//! Time-varying graph schedules and the windowed connectivity checks run
//! over them.

use std::borrow::Cow;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::Graph;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SequenceKind {
    ConstantLine,
    ConstantRing,
    ConstantComplete,
    ConstantStar,
    ConstantEdgeless,
    PeriodicList,
    RoundRobinSingleEdge,
    SeededRandomSpanning,
}

impl SequenceKind {
    pub fn tag(self) -> &'static str {
        match self {
            SequenceKind::ConstantLine => "constant-line",
            SequenceKind::ConstantRing => "constant-ring",
            SequenceKind::ConstantComplete => "constant-complete",
            SequenceKind::ConstantStar => "constant-star",
            SequenceKind::ConstantEdgeless => "constant-edgeless",
            SequenceKind::PeriodicList => "periodic-list",
            SequenceKind::RoundRobinSingleEdge => "round-robin-single-edge",
            SequenceKind::SeededRandomSpanning => "seeded-random-spanning",
        }
    }
}

impl FromStr for SequenceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "constant-line" => SequenceKind::ConstantLine,
            "constant-ring" => SequenceKind::ConstantRing,
            "constant-complete" => SequenceKind::ConstantComplete,
            "constant-star" => SequenceKind::ConstantStar,
            "constant-edgeless" => SequenceKind::ConstantEdgeless,
            "periodic-list" => SequenceKind::PeriodicList,
            "round-robin-single-edge" => SequenceKind::RoundRobinSingleEdge,
            "seeded-random-spanning" => SequenceKind::SeededRandomSpanning,
            other => return Err(Error::arg(format!("unknown sequence kind `{other}`"))),
        })
    }
}

/// Generator parameters; each kind reads only the fields it needs.
#[derive(Debug, Clone, Default)]
pub struct GeneratorParams {
    /// Graphs cycled by `periodic-list`.
    pub graphs: Vec<Graph>,
    /// Probability of each non-tree edge in `seeded-random-spanning`.
    pub extra_edge_prob: f64,
}

#[derive(Debug, Clone)]
enum Schedule {
    Constant(Graph),
    Periodic(Vec<Graph>),
    RoundRobin,
    RandomSpanning { seed: u64, extra_edge_prob: f64 },
}

/// A deterministic map from round `t` to the graph used in that round.
#[derive(Debug, Clone)]
pub struct GraphSequence {
    n: usize,
    schedule: Schedule,
    descriptor: String,
}

impl GraphSequence {
    /// Every round uses `g`.
    pub fn constant(g: Graph) -> Self {
        let descriptor = format!("constant n={} edges={}", g.n(), g.edge_count());
        GraphSequence {
            n: g.n(),
            schedule: Schedule::Constant(g),
            descriptor,
        }
    }

    /// Round `t` uses `graphs[t mod len]`.
    pub fn periodic(graphs: Vec<Graph>) -> Result<Self> {
        let first = graphs
            .first()
            .ok_or_else(|| Error::arg("periodic-list needs at least one graph"))?;
        let n = first.n();
        if let Some(bad) = graphs.iter().find(|g| g.n() != n) {
            return Err(Error::arg(format!(
                "periodic-list mixes {n}- and {}-agent graphs",
                bad.n()
            )));
        }
        let descriptor = format!("periodic-list n={n} period={}", graphs.len());
        Ok(GraphSequence {
            n,
            schedule: Schedule::Periodic(graphs),
            descriptor,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn descriptor(&self) -> &str {
        &self.descriptor
    }

    /// The graph when every round is the same one.
    pub fn constant_graph(&self) -> Option<&Graph> {
        match &self.schedule {
            Schedule::Constant(g) => Some(g),
            Schedule::Periodic(list) if list.len() == 1 => Some(&list[0]),
            _ => None,
        }
    }

    pub fn graph_at(&self, t: u64) -> Cow<'_, Graph> {
        match &self.schedule {
            Schedule::Constant(g) => Cow::Borrowed(g),
            Schedule::Periodic(list) => Cow::Borrowed(&list[(t % list.len() as u64) as usize]),
            Schedule::RoundRobin => {
                let i = (t % (self.n as u64 - 1)) as usize + 1;
                Cow::Owned(Graph::new(self.n, [(i, i + 1)]).expect("line edge in range"))
            }
            Schedule::RandomSpanning {
                seed,
                extra_edge_prob,
            } => Cow::Owned(random_spanning(self.n, *seed, t, *extra_edge_prob)),
        }
    }
}

fn random_spanning(n: usize, seed: u64, t: u64, extra_edge_prob: f64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(t);
    let mut order: Vec<usize> = (1..=n).collect();
    order.shuffle(&mut rng);
    let mut edges: Vec<(usize, usize)> = (1..n)
        .map(|k| (order[k], order[rng.gen_range(0..k)]))
        .collect();
    if extra_edge_prob > 0.0 {
        for i in 1..=n {
            for j in i + 1..=n {
                if rng.gen_bool(extra_edge_prob) {
                    edges.push((i, j));
                }
            }
        }
    }
    Graph::new(n, edges).expect("generated edges in range")
}

impl fmt::Display for GraphSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.descriptor)
    }
}

pub fn make_sequence(
    kind: SequenceKind,
    n: usize,
    params: &GeneratorParams,
    seed: u64,
) -> Result<GraphSequence> {
    if n == 0 {
        return Err(Error::arg("sequence needs at least one agent"));
    }
    let constant = |g: Graph| {
        let mut seq = GraphSequence::constant(g);
        seq.descriptor = format!("{} n={n}", kind.tag());
        Ok(seq)
    };
    match kind {
        SequenceKind::ConstantLine => constant(Graph::line(n)?),
        SequenceKind::ConstantRing => constant(Graph::ring(n)?),
        SequenceKind::ConstantComplete => constant(Graph::complete(n)?),
        SequenceKind::ConstantStar => constant(Graph::star(n)?),
        SequenceKind::ConstantEdgeless => constant(Graph::edgeless(n)?),
        SequenceKind::PeriodicList => {
            let seq = GraphSequence::periodic(params.graphs.clone())?;
            if seq.n != n {
                return Err(Error::arg(format!(
                    "periodic-list graphs have {} agents, expected {n}",
                    seq.n
                )));
            }
            Ok(seq)
        }
        SequenceKind::RoundRobinSingleEdge => {
            if n < 2 {
                return Err(Error::arg("round-robin-single-edge needs n >= 2"));
            }
            Ok(GraphSequence {
                n,
                schedule: Schedule::RoundRobin,
                descriptor: format!("round-robin-single-edge n={n}"),
            })
        }
        SequenceKind::SeededRandomSpanning => {
            let p = params.extra_edge_prob;
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::arg(format!("extra edge probability {p} outside [0,1]")));
            }
            Ok(GraphSequence {
                n,
                schedule: Schedule::RandomSpanning {
                    seed,
                    extra_edge_prob: p,
                },
                descriptor: format!("seeded-random-spanning n={n} p={p} seed={seed}"),
            })
        }
    }
}

/// Graph whose edges are the union of `E(s)` for `s` in `[t0, t1]`.
pub fn union_graph(seq: &GraphSequence, t0: u64, t1: u64) -> Result<Graph> {
    if t0 > t1 {
        return Err(Error::arg(format!("empty window [{t0}, {t1}]")));
    }
    let mut acc = seq.graph_at(t0).into_owned();
    // a periodic schedule repeats after one period
    let span = match &seq.schedule {
        Schedule::Constant(_) => 0,
        Schedule::Periodic(list) => (t1 - t0).min(list.len() as u64 - 1),
        Schedule::RoundRobin => (t1 - t0).min(seq.n as u64 - 2),
        Schedule::RandomSpanning { .. } => t1 - t0,
    };
    for s in t0 + 1..=t0 + span {
        acc.extend_edges(&seq.graph_at(s));
    }
    Ok(acc)
}

/// The `k`-th connectivity window, rounds `k*B ..= (k+1)*B`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub k: u64,
    pub start: u64,
    pub end: u64,
}

/// First window `[kB, (k+1)B]` with `(k+1)B <= horizon` whose union graph is
/// disconnected. Consecutive windows share their boundary round.
pub fn first_failing_window(
    seq: &GraphSequence,
    window: u64,
    horizon: u64,
) -> Result<Option<Window>> {
    if window == 0 {
        return Err(Error::arg("window length B must be at least 1"));
    }
    if horizon < window {
        return Err(Error::arg(format!("horizon {horizon} shorter than window {window}")));
    }
    let mut k = 0;
    while (k + 1) * window <= horizon {
        let (start, end) = (k * window, (k + 1) * window);
        if !union_graph(seq, start, end)?.is_connected() {
            return Ok(Some(Window { k, start, end }));
        }
        k += 1;
    }
    Ok(None)
}

pub fn validate_b_connectivity(seq: &GraphSequence, window: u64, horizon: u64) -> Result<bool> {
    Ok(first_failing_window(seq, window, horizon)?.is_none())
}

const PERIOD_FILE: &str = "period";

/// Loads a periodic schedule from a directory holding `period` (one line,
/// `period <p>`) and graph files `0.graph` .. `<p-1>.graph`.
pub fn load_periodic_dir(dir: &Path) -> Result<Vec<Graph>> {
    let decl = fs::read_to_string(dir.join(PERIOD_FILE))?;
    let period = decl
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with('#'))
        .and_then(|l| l.strip_prefix("period"))
        .and_then(|v| v.trim().parse::<usize>().ok())
        .ok_or(Error::Parse {
            line: 1,
            message: "expected `period <count>`".into(),
        })?;
    if period == 0 {
        return Err(Error::arg("period must be positive"));
    }
    (0..period)
        .map(|k| fs::read_to_string(dir.join(format!("{k}.graph")))?.parse())
        .collect()
}

pub fn write_periodic_dir(dir: &Path, graphs: &[Graph]) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(PERIOD_FILE), format!("period {}\n", graphs.len()))?;
    for (k, g) in graphs.iter().enumerate() {
        fs::write(dir.join(format!("{k}.graph")), g.to_string())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn alternating() -> GraphSequence {
        GraphSequence::periodic(vec![
            Graph::new(3, [(1, 2)]).unwrap(),
            Graph::new(3, [(2, 3)]).unwrap(),
        ])
        .unwrap()
    }

    fn seq(kind: SequenceKind, n: usize) -> GraphSequence {
        make_sequence(kind, n, &GeneratorParams::default(), 0).unwrap()
    }

    #[test]
    fn union_of_alternating_edges() {
        let u = union_graph(&alternating(), 0, 1).unwrap();
        assert_eq!(u, Graph::new(3, [(1, 2), (2, 3)]).unwrap());
    }

    #[test]
    fn single_round_window_is_the_scheduled_graph() {
        let s = seq(SequenceKind::SeededRandomSpanning, 6);
        assert_eq!(union_graph(&s, 4, 4).unwrap(), *s.graph_at(4));
    }

    #[test]
    fn reversed_window_is_rejected() {
        assert!(union_graph(&alternating(), 3, 2).is_err());
    }

    #[test]
    fn constant_line_union_is_the_line() {
        let s = seq(SequenceKind::ConstantLine, 4);
        assert_eq!(union_graph(&s, 3, 40).unwrap(), Graph::line(4).unwrap());
        assert_eq!(*s.graph_at(0), Graph::new(4, [(1, 2), (2, 3), (3, 4)]).unwrap());
    }

    #[test]
    fn b_connectivity_examples() {
        assert!(validate_b_connectivity(&alternating(), 1, 10).unwrap());
        let edgeless = seq(SequenceKind::ConstantEdgeless, 3);
        assert!(!validate_b_connectivity(&edgeless, 3, 10).unwrap());
        let line = seq(SequenceKind::ConstantLine, 5);
        assert!(validate_b_connectivity(&line, 1, 10).unwrap());
    }

    #[test]
    fn round_robin_cycles_line_edges() {
        let s = seq(SequenceKind::RoundRobinSingleEdge, 3);
        assert_eq!(*s.graph_at(0), Graph::new(3, [(1, 2)]).unwrap());
        assert_eq!(*s.graph_at(1), Graph::new(3, [(2, 3)]).unwrap());
        assert_eq!(*s.graph_at(2), Graph::new(3, [(1, 2)]).unwrap());
    }

    #[test]
    fn round_robin_windows() {
        let s = seq(SequenceKind::RoundRobinSingleEdge, 5);
        assert_eq!(first_failing_window(&s, 4, 100).unwrap(), None);
        assert_eq!(
            first_failing_window(&s, 2, 100).unwrap(),
            Some(Window { k: 0, start: 0, end: 2 })
        );
    }

    #[test]
    fn periodic_indexing() {
        let graphs: Vec<Graph> = (0..3)
            .map(|k| Graph::new(4, [(k + 1, k + 2)]).unwrap())
            .collect();
        let s = make_sequence(
            SequenceKind::PeriodicList,
            4,
            &GeneratorParams {
                graphs: graphs.clone(),
                ..Default::default()
            },
            0,
        )
        .unwrap();
        assert_eq!(*s.graph_at(7), graphs[1]);
    }

    #[test]
    fn generator_errors() {
        assert!("nope".parse::<SequenceKind>().is_err());
        let empty = GeneratorParams::default();
        assert!(make_sequence(SequenceKind::PeriodicList, 3, &empty, 0).is_err());
        assert!(make_sequence(SequenceKind::RoundRobinSingleEdge, 1, &empty, 0).is_err());
        let bad_p = GeneratorParams {
            extra_edge_prob: 1.5,
            ..Default::default()
        };
        assert!(make_sequence(SequenceKind::SeededRandomSpanning, 3, &bad_p, 0).is_err());
    }

    #[test]
    fn random_spanning_is_seeded_and_connected() {
        let a = make_sequence(SequenceKind::SeededRandomSpanning, 12, &GeneratorParams::default(), 7)
            .unwrap();
        let b = a.clone();
        for t in 0..20 {
            let g = a.graph_at(t);
            assert!(g.is_connected());
            assert_eq!(g.edge_count(), 11);
            assert_eq!(*g, *b.graph_at(t));
        }
        assert_ne!(*a.graph_at(0), *a.graph_at(1));
    }

    #[test]
    fn periodic_dir_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let graphs = vec![Graph::line(4).unwrap(), Graph::star(4).unwrap()];
        write_periodic_dir(dir.path(), &graphs).unwrap();
        assert_eq!(load_periodic_dir(dir.path()).unwrap(), graphs);
    }
}
