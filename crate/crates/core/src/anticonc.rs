//! Anticoncentration experiments.
//!
//! Point masses are bounded through collisions: for any distribution,
//! `max_x p_x <= sqrt(Σ_x p_x^2)`, and `Σ p^2` has an unbiased pairwise
//! estimator. Outcomes are compared through 128-bit SHA-256 digests.

use std::collections::HashMap;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest as _, Sha256};
use thiserror::Error;

use crate::generate::bipartite;
use crate::graph::Graph;
use crate::reconfig::{pipeline_step, Branch, LeafSelection};
use crate::rng::{Purpose, Streams};
use crate::sampler::SampleError;
use crate::serde_util::display;
use crate::stats::{least_squares, quantile, slope_weights};
use crate::tree::SpanningTree;
use crate::tree_iso::{canonical_code, degree_histogram, DegreeHistogram};

pub const BOOTSTRAP_REPLICATES: usize = 1000;
pub const CI_METHOD: &str = "bias-corrected basic bootstrap, multinomial resampling";

/// `k -> #{v : d_H(v) + b_v = k}`.
pub type DegreeVector = DegreeHistogram;

/// 128-bit outcome digest.
pub type Digest = u128;

pub fn digest_bytes(bytes: &[u8]) -> Digest {
    let h = Sha256::digest(bytes);
    u128::from_le_bytes(h[..16].try_into().expect("32-byte hash"))
}

pub fn digest_vector(v: &DegreeVector) -> Digest {
    let mut bytes = Vec::with_capacity(16 * v.0.len());
    for (&k, &c) in &v.0 {
        bytes.extend_from_slice(&(k as u64).to_le_bytes());
        bytes.extend_from_slice(&(c as u64).to_le_bytes());
    }
    digest_bytes(&bytes)
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AnticoncError {
    #[error("InvalidInstance: {0}")]
    InvalidInstance(String),
    #[error("TooFewTrials: need at least 2, got {0}")]
    TooFewTrials(u64),
    #[error("InvalidSizes: {0}")]
    InvalidSizes(String),
    #[error(transparent)]
    Sample(#[from] SampleError),
}

/// The bipartite 1-out model: a bipartite graph on parts `A` and `B`, each
/// `A`-vertex keeping one uniform incident edge, with per-vertex offsets `b_v`.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct BipartiteOneOutInstance {
    n: usize,
    /// `A`, ascending.
    a_side: Vec<usize>,
    /// Sorted `B`-neighbors of each `A`-vertex, aligned with `a_side`.
    neighbors: Vec<Vec<usize>>,
    offsets: Vec<usize>,
}

impl BipartiteOneOutInstance {
    pub fn new(
        n: usize,
        a_side_neighbors: Vec<(usize, Vec<usize>)>,
        offsets: Vec<usize>,
    ) -> Result<Self, AnticoncError> {
        let bad = |m: String| Err(AnticoncError::InvalidInstance(m));
        if offsets.len() != n {
            return bad(format!("{} offsets for {n} vertices", offsets.len()));
        }
        let mut in_a = vec![false; n];
        for (v, _) in &a_side_neighbors {
            if *v >= n || std::mem::replace(&mut in_a[*v], true) {
                return bad(format!("A-vertex {v} out of range or repeated"));
            }
        }
        let mut entries = a_side_neighbors;
        entries.sort_unstable_by_key(|(v, _)| *v);
        for (v, nbrs) in entries.iter_mut() {
            nbrs.sort_unstable();
            nbrs.dedup();
            if nbrs.is_empty() {
                return bad(format!("A-vertex {v} has no neighbors"));
            }
            if let Some(u) = nbrs.iter().find(|&&u| u >= n || in_a[u]) {
                return bad(format!("neighbor {u} of A-vertex {v} is not in B"));
            }
        }
        let (a_side, neighbors) = entries.into_iter().unzip();
        Ok(BipartiteOneOutInstance {
            n,
            a_side,
            neighbors,
            offsets,
        })
    }

    /// The model hidden in a leaf reconfiguration: `A = L`, `B = V \ L`,
    /// `A`-`B` edges from each leaf to its potential parents and
    /// `b_v = d_{T[B]}(v)`. The degree vector of `H` is then exactly the
    /// degree histogram of the reconfigured tree.
    pub fn from_leaf_selection(t: &SpanningTree, selection: &LeafSelection) -> Self {
        let n = t.n();
        let offsets = (0..n)
            .map(|v| {
                if selection.contains(v) {
                    0
                } else {
                    t.neighbors(v).iter().filter(|&&u| !selection.contains(u)).count()
                }
            })
            .collect();
        let entries = selection.iter().map(|(v, p)| (v, p.to_vec())).collect();
        Self::new(n, entries, offsets).expect("valid leaf selection")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn a_side(&self) -> &[usize] {
        &self.a_side
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    /// `c = |A| / n`.
    pub fn c(&self) -> f64 {
        self.a_side.len() as f64 / self.n as f64
    }

    /// Minimum degree over `A`.
    pub fn d(&self) -> usize {
        self.neighbors.iter().map(Vec::len).min().unwrap_or(0)
    }

    /// Number of equally likely edge choices, saturating.
    pub fn outcome_count(&self) -> u128 {
        self.neighbors
            .iter()
            .fold(1u128, |acc, p| acc.saturating_mul(p.len() as u128))
    }

    fn vector_for(&self, choices: impl Iterator<Item = usize>) -> DegreeVector {
        let mut deg = self.offsets.clone();
        for (&v, u) in self.a_side.iter().zip(choices) {
            deg[v] += 1;
            deg[u] += 1;
        }
        DegreeHistogram::from_degrees(deg)
    }
}

/// One draw of `H`: each `A`-vertex, in ascending order, keeps one uniform
/// edge. The draw order matches `reconfigure`, so the same stream yields the
/// same choices.
pub fn sample_h<R: Rng + ?Sized>(inst: &BipartiteOneOutInstance, rng: &mut R) -> DegreeVector {
    inst.vector_for(
        inst.neighbors
            .iter()
            .map(|p| p[rng.random_range(0..p.len())])
            .collect::<Vec<_>>()
            .into_iter(),
    )
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CollisionEstimates {
    /// Unbiased estimate of `Σ p_x^2`.
    pub collision: f64,
    /// `sqrt(collision)`, an upper-bound proxy for `max_x p_x`.
    pub max_mass_bound: f64,
    pub ci95: [f64; 2],
    pub ci99: [f64; 2],
    pub max_mass_bound_ci95: [f64; 2],
    pub max_observed_frequency: f64,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CollisionReport {
    pub seed: u64,
    pub trials: u64,
    pub colliding_pairs: u64,
    pub distinct_outcomes: usize,
    pub estimates: CollisionEstimates,
    pub ci_method: &'static str,
    pub bootstrap_replicates: usize,
    #[serde(skip)]
    pub digests: Vec<Digest>,
}

/// Collision statistics of per-trial digests with bootstrap intervals.
///
/// The bootstrap resamples the empirical outcome counts multinomially
/// (replicate `i` on stream `(Bootstrap, i)` of `seed`) and uses the spread
/// of `U* - V`, where `V = Σ (c/N)^2` is the collision probability of the
/// resampled population, so the interval centers on the unbiased estimate.
pub fn collision_report(digests: Vec<Digest>, seed: u64) -> CollisionReport {
    let trials = digests.len() as u64;
    assert!(trials >= 2, "collision estimates need two trials");
    let mut sorted = digests.clone();
    sorted.sort_unstable();
    let counts: Vec<u64> = sorted
        .chunk_by(|a, b| a == b)
        .map(|c| c.len() as u64)
        .collect();
    let n = trials as f64;
    let pairs: u64 = counts.iter().map(|&c| c * (c - 1) / 2).sum();
    let u = u_statistic(&counts, trials);
    let v: f64 = counts.iter().map(|&c| (c as f64 / n).powi(2)).sum();

    let streams = Streams::new(seed);
    let mut deltas: Vec<f64> = (0..BOOTSTRAP_REPLICATES as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = streams.stream(Purpose::Bootstrap, i);
            u_statistic(&resample(&counts, trials, &mut rng), trials) - v
        })
        .collect();
    deltas.sort_unstable_by(f64::total_cmp);
    let interval = |level: f64| {
        let tail = (1.0 - level) / 2.0;
        [
            (u - quantile(&deltas, 1.0 - tail)).clamp(0.0, 1.0),
            (u - quantile(&deltas, tail)).clamp(0.0, 1.0),
        ]
    };
    let ci95 = interval(0.95);
    CollisionReport {
        seed,
        trials,
        colliding_pairs: pairs,
        distinct_outcomes: counts.len(),
        estimates: CollisionEstimates {
            collision: u,
            max_mass_bound: u.sqrt(),
            ci95,
            ci99: interval(0.99),
            max_mass_bound_ci95: [ci95[0].sqrt(), ci95[1].sqrt()],
            max_observed_frequency: counts.iter().copied().max().unwrap_or(0) as f64 / n,
        },
        ci_method: CI_METHOD,
        bootstrap_replicates: BOOTSTRAP_REPLICATES,
        digests,
    }
}

fn u_statistic(counts: &[u64], trials: u64) -> f64 {
    let pairs: u128 = counts.iter().map(|&c| c as u128 * c.saturating_sub(1) as u128).sum();
    pairs as f64 / (trials as f64 * (trials as f64 - 1.0))
}

/// One multinomial resample of `trials` draws from the empirical counts.
fn resample<R: Rng + ?Sized>(counts: &[u64], trials: u64, rng: &mut R) -> Vec<u64> {
    if (counts.len() as u64) * 16 < trials {
        // Few classes: sequential conditional binomials.
        let mut left = trials;
        let mut mass_left = trials;
        let mut out = Vec::with_capacity(counts.len());
        for &c in counts {
            if left == 0 || mass_left == c {
                out.push(left);
                left = 0;
            } else {
                let x = Binomial::new(left, c as f64 / mass_left as f64)
                    .expect("probability in range")
                    .sample(rng);
                out.push(x);
                left -= x;
            }
            mass_left -= c;
        }
        out
    } else {
        // Many classes: draw trial indices directly.
        let class_of: Vec<u32> = counts
            .iter()
            .enumerate()
            .flat_map(|(i, &c)| std::iter::repeat_n(i as u32, c as usize))
            .collect();
        let mut out = vec![0u64; counts.len()];
        for _ in 0..trials {
            out[class_of[rng.random_range(0..class_of.len())] as usize] += 1;
        }
        out
    }
}

/// Collision report for `trials` draws of `H`; trial `i` uses stream `(Model, i)`.
pub fn estimate_max_point_mass(
    inst: &BipartiteOneOutInstance,
    trials: u64,
    seed: u64,
) -> Result<CollisionReport, AnticoncError> {
    if trials < 2 {
        return Err(AnticoncError::TooFewTrials(trials));
    }
    let streams = Streams::new(seed);
    let digests = (0..trials)
        .into_par_iter()
        .map(|i| digest_vector(&sample_h(inst, &mut streams.stream(Purpose::Model, i))))
        .collect();
    Ok(collision_report(digests, seed))
}

/// The exact distribution of the degree vector, by enumerating every outcome.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ExactCollision {
    pub outcomes: u64,
    pub distinct_vectors: usize,
    #[serde(serialize_with = "display")]
    pub collision: BigRational,
    #[serde(serialize_with = "display")]
    pub max_mass: BigRational,
}

impl ExactCollision {
    pub fn collision_f64(&self) -> f64 {
        self.collision.to_f64().unwrap_or(f64::NAN)
    }
}

/// `Σ p^2` and `max p` by exhaustive enumeration, or `None` when there are
/// more than `max_outcomes` outcomes.
pub fn exhaustive_collision(
    inst: &BipartiteOneOutInstance,
    max_outcomes: u64,
) -> Option<ExactCollision> {
    let total = inst.outcome_count();
    if total > max_outcomes as u128 {
        return None;
    }
    let total = total as u64;
    let sizes: Vec<usize> = inst.neighbors.iter().map(Vec::len).collect();
    let mut digits = vec![0usize; sizes.len()];
    let mut freq: HashMap<Digest, u64> = HashMap::new();
    for _ in 0..total {
        let v = inst.vector_for(inst.neighbors.iter().zip(&digits).map(|(p, &i)| p[i]));
        *freq.entry(digest_vector(&v)).or_default() += 1;
        for (k, d) in digits.iter_mut().enumerate() {
            *d += 1;
            if *d < sizes[k] {
                break;
            }
            *d = 0;
        }
    }
    let sq: BigUint = freq.values().map(|&c| BigUint::from(c) * c).sum();
    let max = freq.values().copied().max().unwrap_or(0);
    let t = BigUint::from(total);
    Some(ExactCollision {
        outcomes: total,
        distinct_vectors: freq.len(),
        collision: BigRational::new(sq.into(), (&t * &t).into()),
        max_mass: BigRational::new(max.into(), t.into()),
    })
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PipelineCollisionReport {
    pub seed: u64,
    pub n: usize,
    pub trials: u64,
    /// Collisions of degree histograms of the reconfigured trees.
    pub histogram: CollisionReport,
    /// Collisions of canonical codes (isomorphism classes) of the reconfigured trees.
    pub code: CollisionReport,
    /// Code collisions never exceed histogram collisions.
    pub code_within_histogram: bool,
    pub l1_branch_trials: u64,
    pub mean_selection_size: f64,
    pub min_selection_size: usize,
}

/// Runs `trials` pipeline draws (uniform tree, random subset, strategy,
/// reconfiguration) and estimates collisions of the reconfigured trees.
pub fn pipeline_collision(
    g: &Graph,
    trials: u64,
    seed: u64,
) -> Result<PipelineCollisionReport, AnticoncError> {
    if trials < 2 {
        return Err(AnticoncError::TooFewTrials(trials));
    }
    let streams = Streams::new(seed);
    let rows = (0..trials)
        .into_par_iter()
        .map(|i| {
            let s = pipeline_step(g, &streams, i)?;
            let hist = digest_vector(&degree_histogram(&s.reconfigured));
            let code = digest_bytes(canonical_code(&s.reconfigured).as_bytes());
            Ok((hist, code, s.outcome.branch, s.outcome.selection.len()))
        })
        .collect::<Result<Vec<_>, SampleError>>()?;
    let l1 = rows.iter().filter(|r| r.2 == Branch::L1).count() as u64;
    let sizes: Vec<usize> = rows.iter().map(|r| r.3).collect();
    let histogram = collision_report(rows.iter().map(|r| r.0).collect(), seed);
    let code = collision_report(rows.iter().map(|r| r.1).collect(), seed);
    Ok(PipelineCollisionReport {
        seed,
        n: g.n(),
        trials,
        code_within_histogram: code.colliding_pairs <= histogram.colliding_pairs,
        histogram,
        code,
        l1_branch_trials: l1,
        mean_selection_size: sizes.iter().sum::<usize>() as f64 / trials as f64,
        min_selection_size: sizes.iter().copied().min().unwrap_or(0),
    })
}

/// Sorted bin counts of `balls` uniform balls in `bins` bins, as a digest.
fn multinomial_outcome<R: Rng + ?Sized>(balls: u64, bins: usize, rng: &mut R) -> Digest {
    let mut left = balls;
    let mut counts = Vec::with_capacity(bins);
    for k in 0..bins {
        let rest = (bins - k) as f64;
        let x = if k + 1 == bins {
            left
        } else {
            Binomial::new(left, 1.0 / rest).expect("valid").sample(rng)
        };
        counts.push(x);
        left -= x;
    }
    counts.sort_unstable();
    let bytes: Vec<u8> = counts.iter().flat_map(|c| c.to_le_bytes()).collect();
    digest_bytes(&bytes)
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ScalingRow {
    pub n: usize,
    pub seed: u64,
    pub pipeline: PipelineCollisionReport,
    /// Multinomial heuristic: `n - d` balls into `d` bins, sorted counts.
    pub baseline: CollisionReport,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SlopeFit {
    pub slope: f64,
    pub ci95: [f64; 2],
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ScalingReport {
    pub exploratory: bool,
    pub d: usize,
    pub trials: u64,
    pub seed: u64,
    pub rows: Vec<ScalingRow>,
    /// Fit of log(max-mass bound of isomorphism classes) against log n.
    pub slope: SlopeFit,
    pub histogram_slope: SlopeFit,
    pub collision_slope: SlopeFit,
    /// Fit of log(mode frequency) of the multinomial baseline against log n.
    pub baseline_slope: SlopeFit,
    pub baseline_collision_slope: SlopeFit,
    /// `-(d - 1) / 2`.
    pub conjectured_slope: f64,
    pub strictly_decreasing: bool,
    pub slope_ci_method: &'static str,
}

/// Collision scaling of the pipeline on `K_{d, n-d}` for each `n` in `sizes`,
/// alongside the multinomial baseline. Size `j` uses child stream `j` of `seed`.
pub fn conjecture_scaling(
    d: usize,
    sizes: &[usize],
    trials: u64,
    seed: u64,
) -> Result<ScalingReport, AnticoncError> {
    if sizes.len() < 2 || sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(AnticoncError::InvalidSizes("need at least two increasing sizes".into()));
    }
    if let Some(&n) = sizes.iter().find(|&&n| n <= 2 * d) {
        return Err(AnticoncError::InvalidSizes(format!("size {n} must exceed 2d = {}", 2 * d)));
    }
    let root = Streams::new(seed);
    let mut rows = Vec::with_capacity(sizes.len());
    for (j, &n) in sizes.iter().enumerate() {
        let child = root.child(j as u64);
        let pipeline = pipeline_collision(&bipartite(d, n - d), trials, child.master())?;
        let digests = (0..trials)
            .into_par_iter()
            .map(|i| multinomial_outcome((n - d) as u64, d, &mut child.stream(Purpose::Baseline, i)))
            .collect();
        let baseline = collision_report(digests, child.master());
        rows.push(ScalingRow {
            n,
            seed: child.master(),
            pipeline,
            baseline,
        });
    }
    let fit = |f: &dyn Fn(&ScalingRow) -> (f64, [f64; 2])| fit_log_log(&rows, f);
    let bound = |r: &CollisionReport| {
        let e = &r.estimates;
        (e.max_mass_bound, e.max_mass_bound_ci95)
    };
    let collision = |r: &CollisionReport| (r.estimates.collision, r.estimates.ci95);
    let mode = |r: &CollisionReport| {
        // Binomial standard error of the observed mode frequency.
        let p = r.estimates.max_observed_frequency;
        let se = (p * (1.0 - p) / r.trials as f64).sqrt();
        (p, [p - 1.96 * se, p + 1.96 * se])
    };
    let slope = fit(&|r| bound(&r.pipeline.code));
    let histogram_slope = fit(&|r| bound(&r.pipeline.histogram));
    let collision_slope = fit(&|r| collision(&r.pipeline.code));
    let baseline_slope = fit(&|r| mode(&r.baseline));
    let baseline_collision_slope = fit(&|r| collision(&r.baseline));
    let strictly_decreasing = rows.windows(2).all(|w| {
        w[1].pipeline.code.estimates.max_mass_bound < w[0].pipeline.code.estimates.max_mass_bound
    });
    Ok(ScalingReport {
        exploratory: true,
        d,
        trials,
        seed,
        rows,
        slope,
        histogram_slope,
        collision_slope,
        baseline_slope,
        baseline_collision_slope,
        conjectured_slope: -((d - 1) as f64) / 2.0,
        strictly_decreasing,
        slope_ci_method: "delta method from per-size 95% intervals",
    })
}

/// Least-squares slope of `log y` on `log n`. Each point's standard error on
/// the log scale is read off its 95% interval and propagated linearly.
fn fit_log_log(rows: &[ScalingRow], value: &dyn Fn(&ScalingRow) -> (f64, [f64; 2])) -> SlopeFit {
    let xs: Vec<f64> = rows.iter().map(|r| (r.n as f64).ln()).collect();
    let points: Vec<(f64, [f64; 2])> = rows.iter().map(value).collect();
    let ys: Vec<f64> = points.iter().map(|(y, _)| y.ln()).collect();
    let slope = least_squares(&xs, &ys).slope;
    let floor = f64::MIN_POSITIVE;
    let var: f64 = slope_weights(&xs)
        .iter()
        .zip(&points)
        .map(|(w, (_, [lo, hi]))| {
            let se = (hi.max(floor).ln() - lo.max(floor).ln()) / (2.0 * 1.96);
            (w * se).powi(2)
        })
        .sum();
    let half = 1.96 * var.sqrt();
    SlopeFit {
        slope,
        ci95: [slope - half, slope + half],
    }
}
