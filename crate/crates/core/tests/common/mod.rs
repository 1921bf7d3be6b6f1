//! Helpers shared by the integration tests: a graph corpus, random graphs
//! and trees, and a brute-force tree isomorphism oracle.
#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use ustree::generate::{bipartite, complete, cycle, path};
use ustree::{Edge, Graph, GraphSpec, Purpose, Streams};

/// Uniformly random edge sets on `n` vertices, resampled until connected.
pub fn random_connected_graph<R: Rng>(n: usize, p: f64, rng: &mut R) -> Graph {
    loop {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if rng.random_bool(p) {
                    edges.push((u, v));
                }
            }
        }
        let g = Graph::from_edges(n, &edges).unwrap();
        if g.is_connected() {
            return g;
        }
    }
}

/// Fifty random connected graphs on 2 to 7 vertices.
pub fn small_random_graphs(seed: u64) -> Vec<Graph> {
    let s = Streams::new(seed);
    (0..50)
        .map(|i| {
            let mut rng = s.stream(Purpose::Instance, i);
            let n = rng.random_range(2..=7);
            let p = rng.random_range(0.3..0.9);
            random_connected_graph(n, p, &mut rng)
        })
        .collect()
}

/// Named graphs used by the bound checks.
pub fn corpus() -> Vec<(String, Graph)> {
    let mut out: Vec<(String, Graph)> = Vec::new();
    for n in 2..=12 {
        out.push((format!("complete:{n}"), complete(n)));
    }
    for n in 3..=12 {
        out.push((format!("cycle:{n}"), cycle(n)));
    }
    for n in 2..=8 {
        out.push((format!("path:{n}"), path(n)));
    }
    for (a, b) in [(1, 5), (2, 3), (2, 7), (3, 3), (3, 10), (3, 60), (4, 9), (8, 40)] {
        out.push((format!("bipartite:{a},{b}"), bipartite(a, b)));
    }
    for spec in [
        "regular:3,10",
        "regular:3,30",
        "regular:4,15",
        "regular:8,60",
        "gnp:20,0.3,2",
        "gnp:40,0.2,3",
    ] {
        let g = spec.parse::<GraphSpec>().unwrap().generate(7).unwrap();
        out.push((spec.to_string(), g));
    }
    for (i, g) in small_random_graphs(99).into_iter().enumerate() {
        out.push((format!("random#{i}"), g));
    }
    out
}

/// Uniform labeled tree on `n` vertices from a random Prüfer sequence.
pub fn random_tree<R: Rng>(n: usize, rng: &mut R) -> Vec<Edge> {
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

pub fn relabel<R: Rng>(n: usize, edges: &[Edge], rng: &mut R) -> Vec<Edge> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    edges.iter().map(|&(u, v)| (perm[u], perm[v])).collect()
}

fn normalize(edges: impl Iterator<Item = Edge>) -> Vec<Edge> {
    let mut v: Vec<Edge> = edges.map(|(x, y)| (x.min(y), x.max(y))).collect();
    v.sort_unstable();
    v
}

/// Tries every permutation of `0..n` (Heap's algorithm).
pub fn brute_isomorphic(n: usize, a: &[Edge], b: &[Edge]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let target = normalize(b.iter().copied());
    let mut perm: Vec<usize> = (0..n).collect();
    let hits = |perm: &[usize]| normalize(a.iter().map(|&(x, y)| (perm[x], perm[y]))) == target;
    if hits(&perm) {
        return true;
    }
    let mut c = vec![0usize; n];
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            if hits(&perm) {
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
