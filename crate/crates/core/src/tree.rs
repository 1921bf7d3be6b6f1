//! Spanning trees of a [`Graph`].

use std::collections::VecDeque;

use thiserror::Error;

use crate::graph::{edge, Edge, Graph};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TreeError {
    #[error("expected {expected} edges, got {got}")]
    WrongEdgeCount { expected: usize, got: usize },
    #[error("edge {0}-{1} is not an edge of the graph")]
    NotAGraphEdge(usize, usize),
    #[error("edge set is not connected")]
    Disconnected,
}

/// A spanning tree: `n - 1` graph edges forming a connected acyclic subgraph.
///
/// Edges are kept sorted, so two trees are equal iff their edge sets are.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpanningTree {
    edges: Vec<Edge>,
    adjacency: Vec<Vec<usize>>,
}

impl SpanningTree {
    /// Validates `edges` as a spanning tree of `g`.
    pub fn new(g: &Graph, edges: impl IntoIterator<Item = Edge>) -> Result<Self, TreeError> {
        let tree = Self::from_edges(g.n(), edges)?;
        if let Some(&(u, v)) = tree.edges.iter().find(|&&(u, v)| !g.has_edge(u, v)) {
            return Err(TreeError::NotAGraphEdge(u, v));
        }
        Ok(tree)
    }

    /// Validates `edges` as a tree on vertices `0..n`, without reference to a host graph.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = Edge>) -> Result<Self, TreeError> {
        let mut edges: Vec<Edge> = edges.into_iter().map(|(u, v)| edge(u, v)).collect();
        edges.sort_unstable();
        edges.dedup();
        let expected = n.saturating_sub(1);
        if edges.len() != expected {
            return Err(TreeError::WrongEdgeCount {
                expected,
                got: edges.len(),
            });
        }
        let mut adjacency = vec![Vec::new(); n];
        for &(u, v) in &edges {
            if v >= n || u == v {
                return Err(TreeError::Disconnected);
            }
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        let tree = SpanningTree { edges, adjacency };
        if !tree.is_connected() {
            return Err(TreeError::Disconnected);
        }
        Ok(tree)
    }

    fn is_connected(&self) -> bool {
        let n = self.n();
        if n == 0 {
            return true;
        }
        let mut seen = vec![false; n];
        seen[0] = true;
        let mut queue = VecDeque::from([0]);
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

    pub fn n(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn into_edges(self) -> Vec<Edge> {
        self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn is_leaf(&self, v: usize) -> bool {
        self.degree(v) == 1
    }

    /// The leaf set, ascending.
    pub fn leaves(&self) -> Vec<usize> {
        (0..self.n()).filter(|&v| self.is_leaf(v)).collect()
    }

    pub fn leaf_count(&self) -> usize {
        (0..self.n()).filter(|&v| self.is_leaf(v)).count()
    }

    /// The unique tree neighbor of a leaf.
    pub fn parent(&self, leaf: usize) -> Option<usize> {
        match self.adjacency[leaf].as_slice() {
            [p] => Some(*p),
            _ => None,
        }
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adjacency.iter().map(Vec::len).collect()
    }
}
