//! Deterministic generators for the graph families used in experiments.

use std::collections::HashSet;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rand::Rng;
use thiserror::Error;

use crate::graph::{edge, Edge, Graph, GraphError};
use crate::rng::{Purpose, Streams};

/// Upper bound on whole-graph resamples for rejection-based families.
pub const MAX_GENERATION_ATTEMPTS: usize = 1000;

/// Number of double-edge switches per edge after the pairing stage.
const SWITCHES_PER_EDGE: usize = 100;

/// Consecutive failed stub pairings before a pairing is restarted.
const STUCK_PAIRINGS: usize = 1000;

#[derive(Debug, Error)]
pub enum GenerateError {
    #[error("infeasible graph spec: {0}")]
    InfeasibleSpec(String),
    #[error("no valid graph after {0} attempts")]
    GenerationRetriesExhausted(usize),
    #[error("cannot parse graph spec {spec:?}: {reason}")]
    BadSpec { spec: String, reason: String },
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// A graph family and its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum GraphSpec {
    Complete(usize),
    /// `K_{a,b}`: vertices `0..a` form one side, `a..a+b` the other.
    Bipartite(usize, usize),
    Regular { d: usize, n: usize },
    /// `G(n, p)` conditioned (by resampling) on connectivity and minimum degree `d`.
    GnpMinDegree { n: usize, p: f64, d: usize },
    Cycle(usize),
    Path(usize),
    FromFile(PathBuf),
}

impl GraphSpec {
    /// Checks that the parameters can produce a connected graph.
    pub fn validate(&self) -> Result<(), GenerateError> {
        let bad = |msg: String| Err(GenerateError::InfeasibleSpec(msg));
        match *self {
            GraphSpec::Complete(n) | GraphSpec::Path(n) if n == 0 => bad("need n >= 1".into()),
            GraphSpec::Bipartite(a, b) if a == 0 || b == 0 => {
                bad(format!("bipartite({a},{b}) needs both sides non-empty"))
            }
            GraphSpec::Regular { d, n } => {
                if d == 0 || d >= n {
                    bad(format!("regular({d},{n}) needs 1 <= d < n"))
                } else if (d * n) % 2 == 1 {
                    bad(format!("regular({d},{n}): d*n is odd"))
                } else if d == 1 && n != 2 {
                    bad(format!("regular(1,{n}) is a perfect matching, never connected"))
                } else {
                    Ok(())
                }
            }
            GraphSpec::GnpMinDegree { n, p, d } => {
                if n == 0 || !(p > 0.0 && p <= 1.0) || d >= n.max(2) {
                    bad(format!("gnp({n},{p},{d}) needs n >= 1, 0 < p <= 1, d < n"))
                } else {
                    Ok(())
                }
            }
            GraphSpec::Cycle(n) if n < 3 => bad(format!("cycle({n}) needs n >= 3")),
            _ => Ok(()),
        }
    }

    /// The minimum degree every generated graph is guaranteed to have.
    pub fn implied_min_degree(&self) -> Option<usize> {
        Some(match *self {
            GraphSpec::Complete(n) => n - 1,
            GraphSpec::Bipartite(a, b) => a.min(b),
            GraphSpec::Regular { d, .. } | GraphSpec::GnpMinDegree { d, .. } => d,
            GraphSpec::Cycle(_) => 2,
            GraphSpec::Path(n) => usize::from(n > 1),
            GraphSpec::FromFile(_) => return None,
        })
    }

    /// Builds the graph; deterministic in `(self, seed)`.
    pub fn generate(&self, seed: u64) -> Result<Graph, GenerateError> {
        self.validate()?;
        let mut rng = Streams::new(seed).stream(Purpose::Generate, 0);
        let graph = match *self {
            GraphSpec::Complete(n) => complete(n),
            GraphSpec::Bipartite(a, b) => bipartite(a, b),
            GraphSpec::Cycle(n) => cycle(n),
            GraphSpec::Path(n) => path(n),
            GraphSpec::Regular { d, n } => random_regular(d, n, &mut rng)?,
            GraphSpec::GnpMinDegree { n, p, d } => gnp_min_degree(n, p, d, &mut rng)?,
            GraphSpec::FromFile(ref path) => {
                let text = std::fs::read_to_string(path).map_err(|source| GenerateError::Io {
                    path: path.clone(),
                    source,
                })?;
                Graph::parse(&text)?
            }
        };
        Ok(graph)
    }
}

impl fmt::Display for GraphSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphSpec::Complete(n) => write!(f, "complete:{n}"),
            GraphSpec::Bipartite(a, b) => write!(f, "bipartite:{a},{b}"),
            GraphSpec::Regular { d, n } => write!(f, "regular:{d},{n}"),
            GraphSpec::GnpMinDegree { n, p, d } => write!(f, "gnp:{n},{p},{d}"),
            GraphSpec::Cycle(n) => write!(f, "cycle:{n}"),
            GraphSpec::Path(n) => write!(f, "path:{n}"),
            GraphSpec::FromFile(p) => write!(f, "file:{}", p.display()),
        }
    }
}

impl FromStr for GraphSpec {
    type Err = GenerateError;

    /// Accepts `complete:N`, `bipartite:A,B`, `regular:D,N`, `gnp:N,P,D`
    /// (alias `gnp-min-degree`), `cycle:N`, `path:N` and `file:PATH`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let fail = |reason: &str| GenerateError::BadSpec {
            spec: s.to_string(),
            reason: reason.to_string(),
        };
        let (family, args) = s.split_once(':').ok_or_else(|| fail("expected FAMILY:ARGS"))?;
        if family == "file" {
            return Ok(GraphSpec::FromFile(PathBuf::from(args)));
        }
        let parts: Vec<&str> = args.split(',').map(str::trim).collect();
        let int = |i: usize| -> Result<usize, GenerateError> {
            parts
                .get(i)
                .and_then(|p| p.parse().ok())
                .ok_or_else(|| fail("expected a non-negative integer"))
        };
        let arity = |k: usize| {
            if parts.len() == k {
                Ok(())
            } else {
                Err(fail(&format!("expected {k} parameter(s)")))
            }
        };
        match family {
            "complete" => arity(1).and(Ok(GraphSpec::Complete(int(0)?))),
            "cycle" => arity(1).and(Ok(GraphSpec::Cycle(int(0)?))),
            "path" => arity(1).and(Ok(GraphSpec::Path(int(0)?))),
            "bipartite" => arity(2).and(Ok(GraphSpec::Bipartite(int(0)?, int(1)?))),
            "regular" => arity(2).and(Ok(GraphSpec::Regular {
                d: int(0)?,
                n: int(1)?,
            })),
            "gnp" | "gnp-min-degree" => {
                arity(3)?;
                let p = parts[1].parse().map_err(|_| fail("expected a probability"))?;
                Ok(GraphSpec::GnpMinDegree {
                    n: int(0)?,
                    p,
                    d: int(2)?,
                })
            }
            _ => Err(fail("unknown family")),
        }
    }
}

fn from_edges(n: usize, edges: &[Edge]) -> Graph {
    Graph::from_edges(n, edges).expect("generator emitted an invalid edge list")
}

pub fn complete(n: usize) -> Graph {
    let edges: Vec<Edge> = (0..n)
        .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
        .collect();
    from_edges(n, &edges)
}

pub fn bipartite(a: usize, b: usize) -> Graph {
    let edges: Vec<Edge> = (0..a)
        .flat_map(|u| (a..a + b).map(move |v| (u, v)))
        .collect();
    from_edges(a + b, &edges)
}

pub fn cycle(n: usize) -> Graph {
    let edges: Vec<Edge> = (0..n).map(|i| edge(i, (i + 1) % n)).collect();
    from_edges(n, &edges)
}

pub fn path(n: usize) -> Graph {
    let edges: Vec<Edge> = (1..n).map(|i| (i - 1, i)).collect();
    from_edges(n, &edges)
}

/// Random simple d-regular graph: sequential stub pairing that rejects loops
/// and repeated edges, followed by `100 * m` double-edge switches. Resampled
/// until connected.
fn random_regular<R: Rng>(d: usize, n: usize, rng: &mut R) -> Result<Graph, GenerateError> {
    for _ in 0..MAX_GENERATION_ATTEMPTS {
        let Some(mut edges) = pair_stubs(d, n, rng) else {
            continue;
        };
        let switches = SWITCHES_PER_EDGE * edges.len();
        switch_edges(&mut edges, switches, rng);
        let g = from_edges(n, &edges);
        if g.is_connected() {
            return Ok(g);
        }
    }
    Err(GenerateError::GenerationRetriesExhausted(MAX_GENERATION_ATTEMPTS))
}

fn pair_stubs<R: Rng>(d: usize, n: usize, rng: &mut R) -> Option<Vec<Edge>> {
    let mut stubs: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, d)).collect();
    let mut present = HashSet::with_capacity(n * d / 2);
    let mut edges = Vec::with_capacity(n * d / 2);
    let mut failures = 0;
    while !stubs.is_empty() {
        let i = rng.random_range(0..stubs.len());
        let j = rng.random_range(0..stubs.len());
        let (u, v) = (stubs[i], stubs[j]);
        if i == j || u == v || present.contains(&edge(u, v)) {
            failures += 1;
            if failures > STUCK_PAIRINGS {
                return None;
            }
            continue;
        }
        failures = 0;
        present.insert(edge(u, v));
        edges.push(edge(u, v));
        let (hi, lo) = if i > j { (i, j) } else { (j, i) };
        stubs.swap_remove(hi);
        stubs.swap_remove(lo);
    }
    Some(edges)
}

fn switch_edges<R: Rng>(edges: &mut [Edge], switches: usize, rng: &mut R) {
    if edges.len() < 2 {
        return;
    }
    let mut present: HashSet<Edge> = edges.iter().copied().collect();
    for _ in 0..switches {
        let i = rng.random_range(0..edges.len());
        let j = rng.random_range(0..edges.len());
        if i == j {
            continue;
        }
        let ((a, b), (c, d)) = (edges[i], edges[j]);
        let (x, y) = if rng.random_bool(0.5) {
            ((a, c), (b, d))
        } else {
            ((a, d), (b, c))
        };
        if x.0 == x.1 || y.0 == y.1 {
            continue;
        }
        let (x, y) = (edge(x.0, x.1), edge(y.0, y.1));
        if x == y || present.contains(&x) || present.contains(&y) {
            continue;
        }
        present.remove(&edges[i]);
        present.remove(&edges[j]);
        present.insert(x);
        present.insert(y);
        edges[i] = x;
        edges[j] = y;
    }
}

fn gnp_min_degree<R: Rng>(n: usize, p: f64, d: usize, rng: &mut R) -> Result<Graph, GenerateError> {
    for _ in 0..MAX_GENERATION_ATTEMPTS {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if rng.random_bool(p) {
                    edges.push((u, v));
                }
            }
        }
        let g = from_edges(n, &edges);
        if g.check_connected_min_degree(d) {
            return Ok(g);
        }
    }
    Err(GenerateError::GenerationRetriesExhausted(MAX_GENERATION_ATTEMPTS))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gen(spec: &str, seed: u64) -> Result<Graph, GenerateError> {
        spec.parse::<GraphSpec>()?.generate(seed)
    }

    #[test]
    fn bipartite_2_3() {
        let g = gen("bipartite:2,3", 0).unwrap();
        assert_eq!((g.n(), g.m()), (5, 6));
        let mut degrees: Vec<usize> = (0..5).map(|v| g.degree(v)).collect();
        degrees.sort_unstable();
        assert_eq!(degrees, vec![2, 2, 2, 3, 3]);
    }

    #[test]
    fn regular_3_4_is_k4() {
        assert_eq!(gen("regular:3,4", 9).unwrap(), complete(4));
    }

    #[test]
    fn infeasible_specs() {
        for spec in ["regular:3,5", "regular:4,4", "regular:1,6", "cycle:2", "bipartite:0,3"] {
            assert!(
                matches!(gen(spec, 0), Err(GenerateError::InfeasibleSpec(_))),
                "{spec}"
            );
        }
        for spec in ["regular:3", "star:4", "complete:x", "gnp:10,abc,2", "nocolon"] {
            assert!(matches!(gen(spec, 0), Err(GenerateError::BadSpec { .. })), "{spec}");
        }
    }

    #[test]
    fn gnp_retries_exhaust() {
        // Minimum degree 5 on 6 vertices forces K_6, which p = 0.05 essentially never yields.
        assert!(matches!(
            gen("gnp:6,0.05,5", 1),
            Err(GenerateError::GenerationRetriesExhausted(MAX_GENERATION_ATTEMPTS))
        ));
    }

    #[test]
    fn regular_degree_audit_and_determinism() {
        for (d, n) in [(3, 10), (4, 31), (8, 200), (2, 12)] {
            let spec = GraphSpec::Regular { d, n };
            let g = spec.generate(5).unwrap();
            assert!((0..n).all(|v| g.degree(v) == d));
            assert!(g.check_connected_min_degree(d));
            assert_eq!(g, spec.generate(5).unwrap());
        }
    }

    #[test]
    fn gnp_meets_min_degree() {
        let spec: GraphSpec = "gnp:60,0.2,4".parse().unwrap();
        let g = spec.generate(3).unwrap();
        assert!(g.check_connected_min_degree(4));
        assert_eq!(g, spec.generate(3).unwrap());
    }

    #[test]
    fn display_round_trips() {
        for s in ["complete:6", "bipartite:3,40", "regular:8,200", "gnp:300,0.05,8", "cycle:5"] {
            assert_eq!(s.parse::<GraphSpec>().unwrap().to_string(), s);
        }
        assert_eq!(
            "gnp-min-degree:10,0.5,2".parse::<GraphSpec>().unwrap(),
            GraphSpec::GnpMinDegree { n: 10, p: 0.5, d: 2 }
        );
    }

    #[test]
    fn from_file() {
        let dir = std::env::temp_dir().join(format!("ustree-gen-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("c4.txt");
        std::fs::write(&path, cycle(4).to_text()).unwrap();
        let g = GraphSpec::FromFile(path).generate(0).unwrap();
        assert_eq!(g, cycle(4));
        let missing = GraphSpec::FromFile(dir.join("missing.txt")).generate(0);
        assert!(matches!(missing, Err(GenerateError::Io { .. })));
    }

    #[test]
    fn implied_min_degree_holds() {
        for s in ["complete:7", "bipartite:3,9", "regular:4,20", "cycle:9", "path:5", "gnp:40,0.3,3"] {
            let spec: GraphSpec = s.parse().unwrap();
            let g = spec.generate(11).unwrap();
            assert!(g.check_connected_min_degree(spec.implied_min_degree().unwrap()), "{s}");
        }
    }
}
