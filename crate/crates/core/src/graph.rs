//! Undirected communication graphs on agents `1..=n`.
//!
//! Agents are 1-indexed at every public boundary (constructors, neighbor
//! queries, the text format). Internally adjacency is kept 0-indexed so the
//! update rules can index state vectors directly; [`Graph::adjacency`] exposes
//! that view.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// An unordered agent pair, stored with `lo < hi` (1-indexed).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    lo: usize,
    hi: usize,
}

impl Edge {
    pub fn new(i: usize, j: usize) -> Result<Self> {
        if i == j {
            return Err(Error::arg(format!("self-loop at agent {i}")));
        }
        if i == 0 || j == 0 {
            return Err(Error::arg("agents are 1-indexed"));
        }
        Ok(Edge {
            lo: i.min(j),
            hi: i.max(j),
        })
    }

    pub fn endpoints(&self) -> (usize, usize) {
        (self.lo, self.hi)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: BTreeSet<Edge>,
    // 0-indexed, ascending
    adj: Vec<Vec<usize>>,
}

impl Graph {
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::arg("graph needs at least one agent"));
        }
        let mut set = BTreeSet::new();
        for (i, j) in edges {
            let e = Edge::new(i, j)?;
            if e.hi > n {
                return Err(Error::arg(format!("edge {{{i},{j}}} outside agents 1..={n}")));
            }
            set.insert(e);
        }
        Ok(Self::from_edge_set(n, set))
    }

    fn from_edge_set(n: usize, edges: BTreeSet<Edge>) -> Self {
        let mut adj = vec![Vec::new(); n];
        for e in &edges {
            adj[e.lo - 1].push(e.hi - 1);
            adj[e.hi - 1].push(e.lo - 1);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        Graph { n, edges, adj }
    }

    pub fn edgeless(n: usize) -> Result<Self> {
        Self::new(n, std::iter::empty())
    }

    /// Path `1 - 2 - ... - n`.
    pub fn line(n: usize) -> Result<Self> {
        Self::new(n, (1..n).map(|i| (i, i + 1)))
    }

    pub fn ring(n: usize) -> Result<Self> {
        let closing = (n > 2).then_some((n, 1));
        Self::new(n, (1..n).map(|i| (i, i + 1)).chain(closing))
    }

    pub fn complete(n: usize) -> Result<Self> {
        Self::new(n, (1..=n).flat_map(|i| (i + 1..=n).map(move |j| (i, j))))
    }

    /// Star centered on agent 1.
    pub fn star(n: usize) -> Result<Self> {
        Self::new(n, (2..=n).map(|j| (1, j)))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        Edge::new(i, j).is_ok_and(|e| self.edges.contains(&e))
    }

    /// Neighbors of agent `i` in ascending order, both 1-indexed.
    ///
    /// The fixed order is what lets a local rule map the message from the
    /// same neighbor to the same argument slot every round.
    pub fn neighbors(&self, i: usize) -> Result<Vec<usize>> {
        self.check_agent(i)?;
        Ok(self.adj[i - 1].iter().map(|&j| j + 1).collect())
    }

    /// 0-indexed neighbor list of 0-indexed agent `i`.
    pub fn adjacency(&self, i: usize) -> &[usize] {
        &self.adj[i]
    }

    /// Degree of 0-indexed agent `i`.
    pub fn degree(&self, i: usize) -> usize {
        self.adj[i].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &v in &self.adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    queue.push_back(v);
                }
            }
        }
        count == self.n
    }

    /// Graph on the same agents whose edge set is the union of both.
    pub fn union(&self, other: &Graph) -> Result<Graph> {
        if self.n != other.n {
            return Err(Error::arg(format!(
                "cannot union graphs on {} and {} agents",
                self.n, other.n
            )));
        }
        let edges = self.edges.union(&other.edges).copied().collect();
        Ok(Self::from_edge_set(self.n, edges))
    }

    pub(crate) fn extend_edges(&mut self, other: &Graph) {
        let before = self.edges.len();
        self.edges.extend(other.edges.iter().copied());
        if self.edges.len() != before {
            *self = Self::from_edge_set(self.n, std::mem::take(&mut self.edges));
        }
    }

    fn check_agent(&self, i: usize) -> Result<()> {
        if i == 0 || i > self.n {
            return Err(Error::arg(format!("agent {i} outside 1..={}", self.n)));
        }
        Ok(())
    }
}

/// Text format: `n <count>` followed by one `e <i> <j>` line per edge.
/// Blank lines and lines starting with `#` are ignored.
impl fmt::Display for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "n {}", self.n)?;
        for e in &self.edges {
            writeln!(f, "e {} {}", e.lo, e.hi)?;
        }
        Ok(())
    }
}

impl FromStr for Graph {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut n = None;
        let mut edges = Vec::new();
        for (idx, raw) in s.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                line: line_no,
                message,
            };
            let fields: Vec<&str> = line.split_whitespace().collect();
            let int = |tok: &str| {
                tok.parse::<usize>()
                    .map_err(|e| parse_err(format!("bad integer `{tok}`: {e}")))
            };
            match fields.as_slice() {
                ["n", count] if n.is_none() => n = Some(int(count)?),
                ["n", _] => return Err(parse_err("duplicate `n` line".into())),
                ["e", i, j] => {
                    if n.is_none() {
                        return Err(parse_err("edge before `n` line".into()));
                    }
                    edges.push((int(i)?, int(j)?));
                }
                _ => return Err(parse_err(format!("unrecognized line `{line}`"))),
            }
        }
        let n = n.ok_or(Error::Parse {
            line: 0,
            message: "missing `n` line".into(),
        })?;
        Graph::new(n, edges)
    }
}
