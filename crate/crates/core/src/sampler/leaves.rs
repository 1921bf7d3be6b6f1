use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use super::{ensure_connected, SampleError, SamplerKind};
use crate::graph::Graph;
use crate::rng::{Purpose, Streams};
use crate::serde_util::{display, display_seq};

/// `P(v has in-degree 0 in a uniform 1-out digraph) = Π_{u ∈ N(v)} (1 - 1/d(u))`,
/// exactly, for every vertex.
pub fn exact_leaf_probabilities(g: &Graph) -> Vec<BigRational> {
    (0..g.n())
        .map(|v| {
            // Group neighbors by degree so each factor is one big power.
            let mut by_degree: BTreeMap<usize, u32> = BTreeMap::new();
            for &u in g.neighbors(v) {
                *by_degree.entry(g.degree(u)).or_default() += 1;
            }
            let (mut num, mut den) = (BigInt::from(1), BigInt::from(1));
            for (d, k) in by_degree {
                num *= BigInt::from(d - 1).pow(k);
                den *= BigInt::from(d).pow(k);
            }
            BigRational::new(num, den)
        })
        .collect()
}

/// `s(v) = Σ_{u ∈ N(v)} 1/d(u)`, exactly.
pub fn s_values(g: &Graph) -> Vec<BigRational> {
    (0..g.n())
        .map(|v| {
            g.neighbors(v)
                .iter()
                .map(|&u| BigRational::new(1.into(), g.degree(u).into()))
                .fold(BigRational::zero(), |acc, x| acc + x)
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct LeafStatsReport {
    pub n: usize,
    pub sampler: SamplerKind,
    pub trials: u64,
    #[serde(serialize_with = "display_seq")]
    pub exact_leaf_probability: Vec<BigRational>,
    #[serde(serialize_with = "display_seq")]
    pub s_values: Vec<BigRational>,
    #[serde(serialize_with = "display")]
    pub s_sum: BigRational,
    /// Exact expected number of in-degree-0 vertices of a uniform 1-out digraph.
    #[serde(serialize_with = "display")]
    pub expected_digraph_leaves: BigRational,
    pub expected_digraph_leaves_approx: f64,
    /// `expected_digraph_leaves >= n / 4`; guaranteed when the minimum degree is at least 2.
    pub expectation_bound_holds: bool,
    pub min_degree: usize,
    pub leaf_counts: Vec<usize>,
    /// Rejection attempts per trial, when the rejection sampler was used.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub attempts: Option<Vec<u64>>,
    pub leaf_count_histogram: BTreeMap<usize, u64>,
    pub mean_leaf_count: f64,
    pub mean_leaf_fraction: f64,
    pub min_leaf_count: usize,
}

/// Exact 1-out leaf probabilities plus sampled leaf counts of `trials`
/// uniform spanning trees. Trial `t` uses stream `(Tree, t)` of `seed`.
pub fn leaf_stats(
    g: &Graph,
    trials: u64,
    sampler: SamplerKind,
    seed: u64,
) -> Result<LeafStatsReport, SampleError> {
    ensure_connected(g)?;
    let n = g.n();
    let probs = exact_leaf_probabilities(g);
    let s = s_values(g);
    let s_sum = s.iter().fold(BigRational::zero(), |acc, x| acc + x);
    let expected = probs.iter().fold(BigRational::zero(), |acc, x| acc + x);
    let quarter_n = BigRational::new(n.into(), 4.into());

    let streams = Streams::new(seed);
    let sampled = (0..trials)
        .into_par_iter()
        .map(|t| sampler.sample(g, &mut streams.stream(Purpose::Tree, t)))
        .collect::<Result<Vec<_>, _>>()?;
    let leaf_counts: Vec<usize> = sampled.iter().map(|s| s.tree.leaf_count()).collect();
    let attempts = matches!(sampler, SamplerKind::Rejection { .. })
        .then(|| sampled.iter().map(|s| s.attempts).collect());
    let mut histogram = BTreeMap::new();
    for &c in &leaf_counts {
        *histogram.entry(c).or_default() += 1;
    }
    let mean = leaf_counts.iter().sum::<usize>() as f64 / trials.max(1) as f64;

    Ok(LeafStatsReport {
        n,
        sampler,
        trials,
        expected_digraph_leaves_approx: expected.to_f64().unwrap_or(f64::NAN),
        expectation_bound_holds: expected >= quarter_n,
        exact_leaf_probability: probs,
        s_values: s,
        s_sum,
        expected_digraph_leaves: expected,
        min_degree: g.min_degree().unwrap_or(0),
        min_leaf_count: leaf_counts.iter().copied().min().unwrap_or(0),
        leaf_counts,
        attempts,
        leaf_count_histogram: histogram,
        mean_leaf_count: mean,
        mean_leaf_fraction: if n == 0 { 0.0 } else { mean / n as f64 },
    })
}
