//! Exact spanning-tree counting and enumeration.

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::graph::{Edge, Graph};
use crate::tree::SpanningTree;

/// Exact non-negative integer count.
pub type BigCount = BigUint;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CountError {
    #[error("CapExceeded: {count} spanning trees exceed the cap of {cap}")]
    CapExceeded { count: BigCount, cap: u64 },
}

/// Determinant of a square integer matrix by fraction-free (Bareiss)
/// elimination with row pivoting. Every division is exact.
pub fn bareiss_determinant(mut a: Vec<Vec<BigInt>>) -> BigInt {
    let n = a.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut negate = false;
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if a[k][k].is_zero() {
            let Some(p) = (k + 1..n).find(|&i| !a[i][k].is_zero()) else {
                return BigInt::zero();
            };
            a.swap(k, p);
            negate = !negate;
        }
        let (head, tail) = a.split_at_mut(k + 1);
        let pivot_row = &head[k];
        for row in tail.iter_mut() {
            for j in k + 1..n {
                let num = &row[j] * &pivot_row[k] - &row[k] * &pivot_row[j];
                row[j] = num / &prev;
            }
            row[k] = BigInt::zero();
        }
        prev = pivot_row[k].clone();
    }
    let det = a[n - 1][n - 1].clone();
    if negate {
        -det
    } else {
        det
    }
}

/// Laplacian of `g` with the last row and column removed.
pub fn reduced_laplacian(g: &Graph) -> Vec<Vec<BigInt>> {
    let k = g.n().saturating_sub(1);
    let mut m = vec![vec![BigInt::zero(); k]; k];
    for (v, row) in m.iter_mut().enumerate() {
        row[v] = BigInt::from(g.degree(v));
        for &u in g.neighbors(v) {
            if u < k {
                row[u] = BigInt::from(-1);
            }
        }
    }
    m
}

/// Number of labeled spanning trees (0 for a disconnected or empty graph).
pub fn count_spanning_trees(g: &Graph) -> BigCount {
    if g.n() == 0 {
        return BigCount::zero();
    }
    let det = bareiss_determinant(reduced_laplacian(g));
    debug_assert!(!det.is_negative());
    det.to_biguint().unwrap_or_default()
}

/// `d(G)`: the product of all vertex degrees.
pub fn degree_product(g: &Graph) -> BigCount {
    (0..g.n()).map(|v| BigCount::from(g.degree(v))).product()
}

/// Checks `count_spanning_trees(g) * (n - 1) <= degree_product(g)` exactly.
pub fn check_kostochka_upper_bound(g: &Graph) -> bool {
    let n = g.n();
    count_spanning_trees(g) * BigCount::from(n.saturating_sub(1)) <= degree_product(g)
}

/// Every labeled spanning tree of `g` exactly once, by edge contraction and deletion.
///
/// Fails with [`CountError::CapExceeded`] before doing any enumeration work
/// when the exact count exceeds `cap`.
pub fn enumerate_spanning_trees(g: &Graph, cap: u64) -> Result<Vec<SpanningTree>, CountError> {
    let count = count_spanning_trees(g);
    if count > BigCount::from(cap) {
        return Err(CountError::CapExceeded { count, cap });
    }
    if count.is_zero() {
        return Ok(Vec::new());
    }
    let edges: Vec<Edge> = g.edges().collect();
    let mut out = Vec::new();
    let mut chosen = Vec::with_capacity(g.n());
    let remaining: Vec<usize> = (0..edges.len()).collect();
    branch(g.n(), &edges, &mut chosen, remaining, &mut out);
    Ok(out
        .into_iter()
        .map(|t| SpanningTree::new(g, t).expect("enumeration produced a non-tree"))
        .collect())
}

/// Component labels of `0..n` under the edges `edges[ids]`.
fn components(n: usize, edges: &[Edge], ids: impl Iterator<Item = usize>) -> Vec<usize> {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for id in ids {
        let (u, v) = edges[id];
        let (a, b) = (find(&mut parent, u), find(&mut parent, v));
        if a != b {
            parent[a] = b;
        }
    }
    (0..n).map(|x| find(&mut parent, x)).collect()
}

// Invariant on entry: chosen ∪ remaining spans a connected graph and chosen is a forest.
fn branch(
    n: usize,
    edges: &[Edge],
    chosen: &mut Vec<usize>,
    mut remaining: Vec<usize>,
    out: &mut Vec<Vec<Edge>>,
) {
    if chosen.len() + 1 == n {
        out.push(chosen.iter().map(|&i| edges[i]).collect());
        return;
    }
    // Drop edges that became loops after contracting `chosen`.
    let comp = components(n, edges, chosen.iter().copied());
    remaining.retain(|&i| comp[edges[i].0] != comp[edges[i].1]);
    let Some((&e, rest)) = remaining.split_first() else {
        return;
    };
    let rest = rest.to_vec();

    chosen.push(e);
    branch(n, edges, chosen, rest.clone(), out);
    chosen.pop();

    let joined = components(n, edges, chosen.iter().chain(rest.iter()).copied());
    if joined.iter().all(|&c| c == joined[0]) {
        branch(n, edges, chosen, rest, out);
    }
}
