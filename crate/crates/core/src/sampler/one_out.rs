use std::collections::BTreeMap;

use rand::Rng;

use super::{ensure_connected, SampleError};
use crate::count::degree_product;
use crate::graph::{edge, Edge, Graph};
use crate::tree::SpanningTree;

/// A 1-out digraph: each vertex points at exactly one of its graph neighbors.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OneOutDigraph {
    out: Vec<usize>,
}

/// Undirected support of a digraph's arcs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Support {
    pub edges: Vec<Edge>,
    pub is_tree: bool,
}

impl OneOutDigraph {
    /// Wraps an explicit choice of out-neighbors, checking each arc is a graph edge.
    pub fn new(g: &Graph, out: Vec<usize>) -> Option<Self> {
        (out.len() == g.n() && out.iter().enumerate().all(|(v, &u)| g.has_edge(v, u)))
            .then_some(OneOutDigraph { out })
    }

    pub fn out(&self, v: usize) -> usize {
        self.out[v]
    }

    pub fn n(&self) -> usize {
        self.out.len()
    }

    /// `U(D)`: the simple undirected graph of the arcs, flagged when it is a
    /// spanning tree (n - 1 distinct edges, connected).
    pub fn underlying(&self) -> Support {
        let mut edges: Vec<Edge> = self
            .out
            .iter()
            .enumerate()
            .map(|(v, &u)| edge(v, u))
            .collect();
        edges.sort_unstable();
        edges.dedup();
        let is_tree = SpanningTree::from_edges(self.n(), edges.iter().copied()).is_ok();
        Support { edges, is_tree }
    }

    /// Vertices with in-degree zero (the digraph's leaves).
    pub fn in_degree_zero(&self) -> Vec<usize> {
        let mut hit = vec![false; self.n()];
        for &u in &self.out {
            hit[u] = true;
        }
        (0..self.n()).filter(|&v| !hit[v]).collect()
    }
}

/// Independently picks a uniform out-neighbor for every vertex.
pub fn sample_one_out_digraph<R: Rng + ?Sized>(
    g: &Graph,
    rng: &mut R,
) -> Result<OneOutDigraph, SampleError> {
    let out = (0..g.n())
        .map(|v| {
            let nbrs = g.neighbors(v);
            if nbrs.is_empty() {
                Err(SampleError::IsolatedVertex(v))
            } else {
                Ok(nbrs[rng.random_range(0..nbrs.len())])
            }
        })
        .collect::<Result<_, _>>()?;
    Ok(OneOutDigraph { out })
}

/// Samples 1-out digraphs until the support is a tree. Each spanning tree is
/// the support of exactly n - 1 digraphs, so the accepted tree is uniform.
/// Returns the tree and the number of digraphs drawn.
pub fn sample_rejection_one_out<R: Rng + ?Sized>(
    g: &Graph,
    rng: &mut R,
    max_attempts: u64,
) -> Result<(SpanningTree, u64), SampleError> {
    ensure_connected(g)?;
    if g.n() == 1 {
        return Ok((SpanningTree::new(g, []).expect("trivial tree"), 1));
    }
    for attempt in 1..=max_attempts {
        let support = sample_one_out_digraph(g, rng)?.underlying();
        if support.is_tree {
            let tree = SpanningTree::new(g, support.edges).expect("tree support");
            return Ok((tree, attempt));
        }
    }
    Err(SampleError::AttemptsExhausted(max_attempts))
}

/// Exhaustive tally of all `d(G)` 1-out digraphs by their tree support.
#[derive(Debug, Clone)]
pub struct DigraphCensus {
    pub digraphs: u64,
    pub tree_supported: u64,
    /// Number of digraphs whose support is each spanning tree.
    pub per_tree: BTreeMap<Vec<Edge>, u64>,
}

impl DigraphCensus {
    /// True iff every tree seen is the support of exactly `n - 1` digraphs.
    pub fn uniform_multiplicity(&self, n: usize) -> bool {
        self.per_tree.values().all(|&c| c == (n as u64).saturating_sub(1))
    }
}

/// Enumerates every 1-out digraph of `g` (mixed-radix over neighbor choices).
pub fn digraph_census(g: &Graph, limit: u64) -> Result<DigraphCensus, SampleError> {
    let total = degree_product(g);
    let digraphs = u64::try_from(&total)
        .ok()
        .filter(|&t| t <= limit)
        .ok_or_else(|| SampleError::TooManyDigraphs {
            count: total.to_string(),
            limit,
        })?;
    if let Some(v) = (0..g.n()).find(|&v| g.degree(v) == 0) {
        return Err(SampleError::IsolatedVertex(v));
    }
    let n = g.n();
    let mut digits = vec![0usize; n];
    let mut census = DigraphCensus {
        digraphs,
        tree_supported: 0,
        per_tree: BTreeMap::new(),
    };
    for _ in 0..digraphs {
        let d = OneOutDigraph {
            out: (0..n).map(|v| g.neighbors(v)[digits[v]]).collect(),
        };
        let support = d.underlying();
        if support.is_tree {
            census.tree_supported += 1;
            *census.per_tree.entry(support.edges).or_default() += 1;
        }
        for (v, digit) in digits.iter_mut().enumerate() {
            *digit += 1;
            if *digit < g.degree(v) {
                break;
            }
            *digit = 0;
        }
    }
    Ok(census)
}
