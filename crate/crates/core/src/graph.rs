//! Simple undirected graphs with dense vertex ids.

use std::collections::VecDeque;
use std::fmt::Write as _;

use thiserror::Error;

/// An undirected edge stored with `u < v`.
pub type Edge = (usize, usize);

/// Orders the endpoints of an edge.
#[inline]
pub fn edge(u: usize, v: usize) -> Edge {
    if u < v {
        (u, v)
    } else {
        (v, u)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("duplicate edge {0}-{1}")]
    DuplicateEdge(usize, usize),
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("vertex {vertex} out of range for n = {n}")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Immutable simple undirected graph on vertices `0..n`.
///
/// Neighbor lists are kept sorted so that every traversal, and therefore
/// every seeded experiment built on top of it, is deterministic.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Graph {
    adjacency: Vec<Vec<usize>>,
    m: usize,
}

impl Graph {
    /// Builds a graph from an edge list, rejecting loops and parallel edges.
    pub fn from_edges(n: usize, edges: &[Edge]) -> Result<Self, GraphError> {
        let mut adjacency = vec![Vec::new(); n];
        for &(u, v) in edges {
            for w in [u, v] {
                if w >= n {
                    return Err(GraphError::VertexOutOfRange { vertex: w, n });
                }
            }
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for (u, list) in adjacency.iter_mut().enumerate() {
            list.sort_unstable();
            if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
                let (a, b) = edge(u, w[0]);
                return Err(GraphError::DuplicateEdge(a, b));
            }
        }
        Ok(Graph {
            adjacency,
            m: edges.len(),
        })
    }

    pub fn n(&self) -> usize {
        self.adjacency.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    #[inline]
    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n() && self.adjacency[u].binary_search(&v).is_ok()
    }

    /// All edges as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(u, list)| list.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    pub fn min_degree(&self) -> Option<usize> {
        self.adjacency.iter().map(Vec::len).min()
    }

    pub fn is_connected(&self) -> bool {
        let n = self.n();
        if n == 0 {
            return true;
        }
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut reached = 1;
        while let Some(u) = queue.pop_front() {
            for &v in &self.adjacency[u] {
                if !seen[v] {
                    seen[v] = true;
                    reached += 1;
                    queue.push_back(v);
                }
            }
        }
        reached == n
    }

    /// True iff the graph is connected and every vertex has degree at least `d`.
    pub fn check_connected_min_degree(&self, d: usize) -> bool {
        self.is_connected() && self.min_degree().is_none_or(|m| m >= d)
    }

    /// Parses the text format: a header line `n m` followed by `m` lines `u v`.
    /// Blank lines and lines starting with `#` are ignored.
    pub fn parse(text: &str) -> Result<Self, GraphError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (line, header) = lines.next().ok_or(GraphError::Parse {
            line: 0,
            message: "missing `n m` header".into(),
        })?;
        let [n, m] = parse_pair(line, header)?;
        let mut edges = Vec::with_capacity(m);
        for (line, body) in lines {
            edges.push(parse_pair(line, body).map(|[u, v]| (u, v))?);
        }
        if edges.len() != m {
            return Err(GraphError::Parse {
                line: 1,
                message: format!("header declares {m} edges, found {}", edges.len()),
            });
        }
        Graph::from_edges(n, &edges)
    }

    /// Serializes in the format accepted by [`Graph::parse`].
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.n(), self.m());
        for (u, v) in self.edges() {
            let _ = writeln!(out, "{u} {v}");
        }
        out
    }
}

fn parse_pair(line: usize, body: &str) -> Result<[usize; 2], GraphError> {
    let err = |message: String| GraphError::Parse { line, message };
    let mut it = body.split_whitespace();
    let mut next = || -> Result<usize, GraphError> {
        let tok = it.next().ok_or_else(|| err("expected two integers".into()))?;
        tok.parse().map_err(|_| err(format!("not a vertex id: {tok:?}")))
    };
    let pair = [next()?, next()?];
    if it.next().is_some() {
        return Err(err("trailing tokens".into()));
    }
    Ok(pair)
}
