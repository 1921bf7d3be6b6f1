//! Canonical codes of unlabeled trees and isomorphism-class counting.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::count::{enumerate_spanning_trees, CountError};
use crate::graph::{Edge, Graph};
use crate::rng::{Purpose, Streams};
use crate::sampler::{sample_wilson, SampleError};
use crate::tree::SpanningTree;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IsoError {
    #[error("NotATree: {0}")]
    NotATree(#[from] crate::tree::TreeError),
}

/// Center-rooted AHU encoding over the bytes `(` and `)`. For trees with two
/// centers the smaller of the two rootings is kept, so equal codes mean
/// isomorphic trees.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CanonicalTreeCode {
    n: usize,
    bytes: Vec<u8>,
}

impl CanonicalTreeCode {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }
}

impl fmt::Display for CanonicalTreeCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(std::str::from_utf8(&self.bytes).expect("ascii"))
    }
}

pub fn canonical_code(t: &SpanningTree) -> CanonicalTreeCode {
    let n = t.n();
    let bytes = match centers(t).as_slice() {
        [] => Vec::new(),
        [c] => rooted_code(t, *c),
        [a, b] => rooted_code(t, *a).min(rooted_code(t, *b)),
        _ => unreachable!("a tree has at most two centers"),
    };
    CanonicalTreeCode { n, bytes }
}

pub fn canonical_code_from_edges(
    n: usize,
    edges: impl IntoIterator<Item = Edge>,
) -> Result<CanonicalTreeCode, IsoError> {
    Ok(canonical_code(&SpanningTree::from_edges(n, edges)?))
}

/// Strips leaves layer by layer until one or two vertices remain.
fn centers(t: &SpanningTree) -> Vec<usize> {
    let n = t.n();
    if n <= 2 {
        return (0..n).collect();
    }
    let mut degree = t.degrees();
    let mut layer: Vec<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
    let mut remaining = n;
    while remaining > 2 {
        remaining -= layer.len();
        let mut next = Vec::new();
        for &v in &layer {
            for &u in t.neighbors(v) {
                degree[u] -= 1;
                if degree[u] == 1 {
                    next.push(u);
                }
            }
        }
        layer = next;
    }
    layer.sort_unstable();
    layer
}

fn rooted_code(t: &SpanningTree, root: usize) -> Vec<u8> {
    let n = t.n();
    let mut parent = vec![usize::MAX; n];
    let mut order = Vec::with_capacity(n);
    parent[root] = root;
    order.push(root);
    let mut i = 0;
    while i < order.len() {
        let u = order[i];
        i += 1;
        for &v in t.neighbors(u) {
            if parent[v] == usize::MAX {
                parent[v] = u;
                order.push(v);
            }
        }
    }
    let mut children: Vec<Vec<Vec<u8>>> = vec![Vec::new(); n];
    let mut code = Vec::new();
    for &v in order.iter().rev() {
        let mut kids = std::mem::take(&mut children[v]);
        kids.sort_unstable();
        code = Vec::with_capacity(2 + kids.iter().map(Vec::len).sum::<usize>());
        code.push(b'(');
        for k in kids {
            code.extend_from_slice(&k);
        }
        code.push(b')');
        if v != root {
            children[parent[v]].push(std::mem::take(&mut code));
        }
    }
    code
}

/// Number of vertices of each degree.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize)]
#[serde(transparent)]
pub struct DegreeHistogram(pub BTreeMap<usize, usize>);

impl DegreeHistogram {
    pub fn from_degrees(degrees: impl IntoIterator<Item = usize>) -> Self {
        let mut h = BTreeMap::new();
        for d in degrees {
            *h.entry(d).or_default() += 1;
        }
        DegreeHistogram(h)
    }

    pub fn get(&self, k: usize) -> usize {
        self.0.get(&k).copied().unwrap_or(0)
    }

    pub fn vertex_count(&self) -> usize {
        self.0.values().sum()
    }

    pub fn degree_sum(&self) -> usize {
        self.0.iter().map(|(k, c)| k * c).sum()
    }
}

pub fn degree_histogram(t: &SpanningTree) -> DegreeHistogram {
    DegreeHistogram::from_degrees(t.degrees())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CountMode {
    Exact,
    Sampled,
}

impl std::str::FromStr for CountMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "exact" => Ok(CountMode::Exact),
            "sampled" => Ok(CountMode::Sampled),
            _ => Err(format!("unknown mode '{s}', expected exact or sampled")),
        }
    }
}

#[derive(Debug, Error)]
pub enum NonIsoError {
    #[error(transparent)]
    Count(#[from] CountError),
    #[error(transparent)]
    Sample(#[from] SampleError),
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct NonIsoCount {
    pub mode: CountMode,
    /// Distinct isomorphism classes found (exact, or a lower bound when sampled).
    pub classes: usize,
    /// Labeled spanning trees examined.
    pub trees_examined: u64,
    /// Classes seen exactly once (sampled mode).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub singletons: Option<usize>,
    /// Good–Turing estimate of the probability mass of unseen classes.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unseen_mass_estimate: Option<f64>,
}

/// Counts isomorphism classes among the spanning trees of `g`.
///
/// Exact mode enumerates every spanning tree and fails with `CapExceeded`
/// when there are more than `budget`. Sampled mode draws `budget` uniform
/// trees (trial `i` on stream `(Tree, i)` of `seed`), so the count is
/// monotone in the budget.
pub fn count_non_iso_spanning_trees(
    g: &Graph,
    mode: CountMode,
    budget: u64,
    seed: u64,
) -> Result<NonIsoCount, NonIsoError> {
    match mode {
        CountMode::Exact => {
            let trees = enumerate_spanning_trees(g, budget)?;
            let codes: HashSet<CanonicalTreeCode> = trees.par_iter().map(canonical_code).collect();
            Ok(NonIsoCount {
                mode,
                classes: codes.len(),
                trees_examined: trees.len() as u64,
                singletons: None,
                unseen_mass_estimate: None,
            })
        }
        CountMode::Sampled => {
            let streams = Streams::new(seed);
            let codes = (0..budget)
                .into_par_iter()
                .map(|i| {
                    sample_wilson(g, &mut streams.stream(Purpose::Tree, i)).map(|t| canonical_code(&t))
                })
                .collect::<Result<Vec<_>, _>>()?;
            let mut freq: HashMap<CanonicalTreeCode, u64> = HashMap::new();
            for c in codes {
                *freq.entry(c).or_default() += 1;
            }
            let singletons = freq.values().filter(|&&c| c == 1).count();
            Ok(NonIsoCount {
                mode,
                classes: freq.len(),
                trees_examined: budget,
                singletons: Some(singletons),
                unseen_mass_estimate: (budget > 0).then(|| singletons as f64 / budget as f64),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{bipartite, complete, cycle};
    use rand::seq::SliceRandom;
    use rand::Rng;

    /// Uniform labeled tree on `n` vertices from a random Prüfer sequence.
    fn random_tree<R: Rng>(n: usize, rng: &mut R) -> Vec<Edge> {
        if n < 2 {
            return Vec::new();
        }
        let seq: Vec<usize> = (0..n - 2).map(|_| rng.random_range(0..n)).collect();
        let mut degree = vec![1usize; n];
        for &x in &seq {
            degree[x] += 1;
        }
        let mut edges = Vec::with_capacity(n - 1);
        for &x in &seq {
            let leaf = (0..n).find(|&v| degree[v] == 1).unwrap();
            edges.push((leaf, x));
            degree[leaf] -= 1;
            degree[x] -= 1;
        }
        let rest: Vec<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
        edges.push((rest[0], rest[1]));
        edges
    }

    /// Isomorphism by trying every vertex permutation.
    fn brute_isomorphic(n: usize, a: &[Edge], b: &[Edge]) -> bool {
        let norm = |e: &[Edge]| {
            let mut v: Vec<Edge> = e.iter().map(|&(x, y)| (x.min(y), x.max(y))).collect();
            v.sort_unstable();
            v
        };
        let target = norm(b);
        let mut perm: Vec<usize> = (0..n).collect();
        let mut c = vec![0usize; n];
        let mapped = |perm: &[usize]| norm(&a.iter().map(|&(x, y)| (perm[x], perm[y])).collect::<Vec<_>>());
        if mapped(&perm) == target {
            return true;
        }
        // Heap's algorithm.
        let mut i = 0;
        while i < n {
            if c[i] < i {
                if i % 2 == 0 {
                    perm.swap(0, i);
                } else {
                    perm.swap(c[i], i);
                }
                if mapped(&perm) == target {
                    return true;
                }
                c[i] += 1;
                i = 0;
            } else {
                c[i] = 0;
                i += 1;
            }
        }
        false
    }

    fn code(n: usize, edges: &[Edge]) -> CanonicalTreeCode {
        canonical_code_from_edges(n, edges.iter().copied()).unwrap()
    }

    #[test]
    fn path_and_star_differ() {
        let p4 = code(4, &[(0, 1), (1, 2), (2, 3)]);
        let star = code(4, &[(0, 1), (0, 2), (0, 3)]);
        assert_ne!(p4, star);
        assert_eq!(p4, code(4, &[(2, 0), (0, 3), (3, 1)]));
    }

    #[test]
    fn tiny_trees() {
        assert_eq!(code(0, &[]).as_bytes(), b"");
        assert_eq!(code(1, &[]).to_string(), "()");
        assert_eq!(code(2, &[(0, 1)]).to_string(), "(())");
        assert_eq!(code(3, &[(0, 1), (1, 2)]).to_string(), "(()())");
        assert!(matches!(
            canonical_code_from_edges(3, [(0, 1)]),
            Err(IsoError::NotATree(_))
        ));
    }

    #[test]
    fn k4_has_two_classes() {
        let trees = enumerate_spanning_trees(&complete(4), 100).unwrap();
        let codes: HashSet<_> = trees.iter().map(canonical_code).collect();
        assert_eq!(trees.len(), 16);
        assert_eq!(codes.len(), 2);
    }

    #[test]
    fn histograms() {
        let star = SpanningTree::from_edges(5, (1..5).map(|v| (0, v))).unwrap();
        let h = degree_histogram(&star);
        assert_eq!(h.0, BTreeMap::from([(1, 4), (4, 1)]));
        let p5 = SpanningTree::from_edges(5, (1..5).map(|v| (v - 1, v))).unwrap();
        let h = degree_histogram(&p5);
        assert_eq!(h.0, BTreeMap::from([(1, 2), (2, 3)]));
        assert_eq!((h.vertex_count(), h.degree_sum()), (5, 8));
    }

    #[test]
    fn exact_class_counts() {
        let count = |g: &Graph| {
            count_non_iso_spanning_trees(g, CountMode::Exact, 10_000, 0)
                .unwrap()
                .classes
        };
        assert_eq!(count(&complete(4)), 2);
        assert_eq!(count(&cycle(6)), 1);
        assert!(matches!(
            count_non_iso_spanning_trees(&complete(6), CountMode::Exact, 100, 0),
            Err(NonIsoError::Count(CountError::CapExceeded { .. }))
        ));
    }

    #[test]
    fn k24_matches_brute_force_classes() {
        // All 5-edge subsets of K_{2,4} that form trees, grouped by brute-force isomorphism.
        let g = bipartite(2, 4);
        let all: Vec<Edge> = g.edges().collect();
        let mut trees: Vec<Vec<Edge>> = Vec::new();
        for mask in 0u32..1 << all.len() {
            if mask.count_ones() != 5 {
                continue;
            }
            let e: Vec<Edge> = (0..all.len()).filter(|i| mask >> i & 1 == 1).map(|i| all[i]).collect();
            if SpanningTree::from_edges(6, e.iter().copied()).is_ok() {
                trees.push(e);
            }
        }
        assert_eq!(trees.len(), 32);
        let mut reps: Vec<&Vec<Edge>> = Vec::new();
        for t in &trees {
            if !reps.iter().any(|r| brute_isomorphic(6, r, t)) {
                reps.push(t);
            }
        }
        let counted = count_non_iso_spanning_trees(&g, CountMode::Exact, 1000, 0).unwrap();
        assert_eq!(counted.classes, reps.len());
        assert_eq!(counted.trees_examined, 32);
    }

    #[test]
    fn sampled_count_is_monotone() {
        let g = complete(7);
        let mut last = 0;
        for budget in [1, 10, 50, 200, 1000] {
            let c = count_non_iso_spanning_trees(&g, CountMode::Sampled, budget, 5).unwrap();
            assert!(c.classes >= last);
            assert!(c.classes <= 11);
            last = c.classes;
        }
        // Seven-vertex trees fall into 11 classes; 1000 samples of K7 see most.
        assert!(last >= 8);
    }

    proptest::proptest! {
        #[test]
        fn codes_agree_with_brute_force(n in 1usize..=7, seed: u64, relabel: bool) {
            let mut rng = Streams::new(seed).stream(Purpose::Instance, 0);
            let a = random_tree(n, &mut rng);
            let b = if relabel {
                let mut perm: Vec<usize> = (0..n).collect();
                perm.shuffle(&mut rng);
                a.iter().map(|&(x, y)| (perm[x], perm[y])).collect()
            } else {
                random_tree(n, &mut rng)
            };
            let (ca, cb) = (code(n, &a), code(n, &b));
            proptest::prop_assert_eq!(ca == cb, brute_isomorphic(n, &a, &b));
            if relabel {
                proptest::prop_assert_eq!(&ca, &cb);
            }
            let ha = DegreeHistogram::from_degrees(SpanningTree::from_edges(n, a).unwrap().degrees());
            let hb = DegreeHistogram::from_degrees(SpanningTree::from_edges(n, b).unwrap().degrees());
            if ha != hb {
                proptest::prop_assert_ne!(ca, cb);
            }
            proptest::prop_assert_eq!(ha.vertex_count(), n);
            proptest::prop_assert_eq!(ha.degree_sum(), 2 * (n - 1));
        }
    }
}
