use rand::Rng;

use super::{ensure_connected, SampleError};
use crate::graph::{edge, Graph};
use crate::tree::SpanningTree;

const NONE: usize = usize::MAX;

/// Wilson's algorithm: loop-erased random walks from each vertex not yet in
/// the tree until they hit it. Exactly uniform for any root choice.
pub fn sample_wilson<R: Rng + ?Sized>(g: &Graph, rng: &mut R) -> Result<SpanningTree, SampleError> {
    ensure_connected(g)?;
    let n = g.n();
    if n <= 1 {
        return Ok(SpanningTree::new(g, []).expect("trivial tree"));
    }
    let mut in_tree = vec![false; n];
    let mut next = vec![NONE; n];
    in_tree[rng.random_range(0..n)] = true;
    for start in 0..n {
        // Overwriting `next` on revisits erases loops implicitly.
        let mut u = start;
        while !in_tree[u] {
            let nbrs = g.neighbors(u);
            next[u] = nbrs[rng.random_range(0..nbrs.len())];
            u = next[u];
        }
        let mut u = start;
        while !in_tree[u] {
            in_tree[u] = true;
            u = next[u];
        }
    }
    let edges = next
        .iter()
        .enumerate()
        .filter(|&(_, &p)| p != NONE)
        .map(|(v, &p)| edge(v, p));
    Ok(SpanningTree::new(g, edges).expect("Wilson produced a non-tree"))
}

/// Aldous–Broder: run a simple random walk until it has covered the graph and
/// keep the edge through which each vertex was first entered.
pub fn sample_aldous_broder<R: Rng + ?Sized>(
    g: &Graph,
    rng: &mut R,
) -> Result<SpanningTree, SampleError> {
    ensure_connected(g)?;
    let n = g.n();
    let mut visited = vec![false; n];
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    if n > 0 {
        let mut u = rng.random_range(0..n);
        visited[u] = true;
        while edges.len() + 1 < n {
            let nbrs = g.neighbors(u);
            let v = nbrs[rng.random_range(0..nbrs.len())];
            if !visited[v] {
                visited[v] = true;
                edges.push(edge(u, v));
            }
            u = v;
        }
    }
    Ok(SpanningTree::new(g, edges).expect("Aldous-Broder produced a non-tree"))
}
