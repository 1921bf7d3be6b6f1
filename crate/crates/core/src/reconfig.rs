//! Leaf selections, uniformly random leaf reconfigurations, the two-branch
//! strategy built on a random vertex subset, and a reversibility auditor.
//!
//! All thresholds are integer comparisons: `deg > n^(1/3)` is `deg^3 > n`,
//! `|L1| >= n/256` is `256 |L1| >= n`, `|P1(v)| >= deg/2` is `2 |P1(v)| >= deg`
//! and `|P2(v)| >= deg/4` is `4 |P2(v)| >= deg`.

use std::fmt;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::graph::{edge, Edge, Graph};
use crate::rng::{Purpose, Streams};
use crate::sampler::{sample_wilson, SampleError};
use crate::tree::SpanningTree;

/// `deg > n^(1/3)`, evaluated as `deg^3 > n`.
#[inline]
pub fn above_cube_root(deg: usize, n: usize) -> bool {
    (deg as u128).pow(3) > n as u128
}

/// A vertex subset `R`. Random subsets include each vertex independently
/// with probability 1/2 and remember the stream they were drawn from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VertexSubset {
    #[serde(serialize_with = "serialize_members")]
    members: Vec<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    origin: Option<SubsetOrigin>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SubsetOrigin {
    pub master_seed: u64,
    pub index: u64,
    pub inclusion_probability: f64,
}

fn serialize_members<S: serde::Serializer>(m: &[bool], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(m.iter().enumerate().filter(|(_, &b)| b).map(|(v, _)| v))
}

impl Eq for SubsetOrigin {}

impl VertexSubset {
    pub fn empty(n: usize) -> Self {
        VertexSubset {
            members: vec![false; n],
            origin: None,
        }
    }

    pub fn full(n: usize) -> Self {
        VertexSubset {
            members: vec![true; n],
            origin: None,
        }
    }

    pub fn from_vertices(n: usize, vertices: impl IntoIterator<Item = usize>) -> Self {
        let mut s = Self::empty(n);
        for v in vertices {
            s.members[v] = true;
        }
        s
    }

    /// One fair coin per vertex.
    pub fn sample<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        VertexSubset {
            members: (0..n).map(|_| rng.random_bool(0.5)).collect(),
            origin: None,
        }
    }

    /// Draws from stream `(Subset, index)` of `streams` and records it.
    pub fn sample_from(n: usize, streams: &Streams, index: u64) -> Self {
        let mut s = Self::sample(n, &mut streams.stream(Purpose::Subset, index));
        s.origin = Some(SubsetOrigin {
            master_seed: streams.master(),
            index,
            inclusion_probability: 0.5,
        });
        s
    }

    #[inline]
    pub fn contains(&self, v: usize) -> bool {
        self.members[v]
    }

    pub fn len(&self) -> usize {
        self.members.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn vertices(&self) -> impl Iterator<Item = usize> + '_ {
        self.members.iter().enumerate().filter(|(_, &b)| b).map(|(v, _)| v)
    }

    pub fn origin(&self) -> Option<SubsetOrigin> {
        self.origin
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SelectionError {
    #[error("selected vertex {0} is not a leaf of the tree")]
    NotALeaf(usize),
    #[error("selected leaves are not strictly increasing")]
    Unsorted,
    #[error("parent of leaf {0} is not among its potential parents")]
    ParentMissing(usize),
    #[error("potential parent {parent} of leaf {leaf} is not a graph neighbor")]
    NotANeighbor { leaf: usize, parent: usize },
    #[error("potential parent {parent} of leaf {leaf} is itself selected")]
    ParentIsSelected { leaf: usize, parent: usize },
}

/// `(L, P)`: leaves to reconfigure and, for each, its sorted potential parents.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct LeafSelection {
    leaves: Vec<usize>,
    potential_parents: Vec<Vec<usize>>,
}

impl LeafSelection {
    /// Builds a selection from `(leaf, potential parents)` pairs.
    pub fn new(mut entries: Vec<(usize, Vec<usize>)>) -> Self {
        entries.sort_unstable_by_key(|(v, _)| *v);
        let (leaves, potential_parents) = entries
            .into_iter()
            .map(|(v, mut p)| {
                p.sort_unstable();
                p.dedup();
                (v, p)
            })
            .unzip();
        LeafSelection {
            leaves,
            potential_parents,
        }
    }

    pub fn leaves(&self) -> &[usize] {
        &self.leaves
    }

    pub fn len(&self) -> usize {
        self.leaves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.leaves.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &[usize])> + '_ {
        self.leaves
            .iter()
            .zip(&self.potential_parents)
            .map(|(&v, p)| (v, p.as_slice()))
    }

    pub fn potential_parents(&self, leaf: usize) -> Option<&[usize]> {
        self.leaves
            .binary_search(&leaf)
            .ok()
            .map(|i| self.potential_parents[i].as_slice())
    }

    pub fn contains(&self, v: usize) -> bool {
        self.leaves.binary_search(&v).is_ok()
    }

    /// Checks `L ⊆ L(T)` and `p_T(v) ∈ P(v) ⊆ N_G(v) \ L` for every `v ∈ L`.
    pub fn validate(&self, g: &Graph, t: &SpanningTree) -> Result<(), SelectionError> {
        if self.leaves.windows(2).any(|w| w[0] >= w[1]) {
            return Err(SelectionError::Unsorted);
        }
        for (leaf, parents) in self.iter() {
            let parent = t.parent(leaf).ok_or(SelectionError::NotALeaf(leaf))?;
            if parents.binary_search(&parent).is_err() {
                return Err(SelectionError::ParentMissing(leaf));
            }
            for &u in parents {
                if !g.has_edge(leaf, u) {
                    return Err(SelectionError::NotANeighbor { leaf, parent: u });
                }
                if self.contains(u) {
                    return Err(SelectionError::ParentIsSelected { leaf, parent: u });
                }
            }
        }
        Ok(())
    }

    /// Number of distinct `(L, P)`-reconfigurations, saturating.
    pub fn reconfiguration_count(&self) -> u128 {
        self.potential_parents
            .iter()
            .fold(1u128, |acc, p| acc.saturating_mul(p.len() as u128))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Branch {
    #[serde(rename = "L1-branch")]
    L1,
    #[serde(rename = "L2-branch")]
    L2,
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Branch::L1 => "L1-branch",
            Branch::L2 => "L2-branch",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct StrategyOutcome {
    pub branch: Branch,
    pub selection: LeafSelection,
    pub l1_size: usize,
    /// Only computed when the L1 branch is not taken.
    pub l2_size: Option<usize>,
}

impl StrategyOutcome {
    /// Component-wise comparison used by the reversibility audit.
    pub fn difference(&self, other: &StrategyOutcome) -> Option<ViolationKind> {
        if self.branch != other.branch {
            return Some(ViolationKind::Branch {
                before: self.branch,
                after: other.branch,
            });
        }
        if self.selection.leaves != other.selection.leaves {
            return Some(ViolationKind::Leaves);
        }
        self.selection
            .iter()
            .zip(other.selection.iter())
            .find(|((_, a), (_, b))| a != b)
            .map(|((v, _), _)| ViolationKind::PotentialParents { vertex: v })
    }
}

/// `P1(v) = {u ∈ N_G(v) : u ∉ R or d_G(u) > n^(1/3)}`.
pub fn potential_parents_p1(g: &Graph, r: &VertexSubset, v: usize) -> Vec<usize> {
    let n = g.n();
    g.neighbors(v)
        .iter()
        .copied()
        .filter(|&u| !r.contains(u) || above_cube_root(g.degree(u), n))
        .collect()
}

/// `P2(v) = {u ∈ N_G(v) : u ∉ R or |N_T(u) \ R| >= 2}`.
pub fn potential_parents_p2(g: &Graph, t: &SpanningTree, r: &VertexSubset, v: usize) -> Vec<usize> {
    g.neighbors(v)
        .iter()
        .copied()
        .filter(|&u| !r.contains(u) || tree_neighbors_outside(t, r, u) >= 2)
        .collect()
}

fn tree_neighbors_outside(t: &SpanningTree, r: &VertexSubset, u: usize) -> usize {
    t.neighbors(u).iter().filter(|&&w| !r.contains(w)).count()
}

/// The leaf selection strategy: prefer low-degree leaves in `R` whose parent
/// stays available (`L1`), falling back to high-degree leaves (`L2`) when
/// fewer than `n/256` low-degree leaves qualify.
pub fn strategy_s(g: &Graph, t: &SpanningTree, r: &VertexSubset) -> StrategyOutcome {
    let out = select(g, t, r, ParentTests { p1: true, p2: true });
    debug_assert_eq!(out.selection.validate(g, t), Ok(()));
    out
}

/// Which `p_T(v) ∈ P(v)` membership tests are applied; both are always on
/// outside of mutation tests.
#[derive(Clone, Copy)]
struct ParentTests {
    p1: bool,
    p2: bool,
}

fn select(g: &Graph, t: &SpanningTree, r: &VertexSubset, tests: ParentTests) -> StrategyOutcome {
    let n = g.n();
    let candidates: Vec<usize> = t.leaves().into_iter().filter(|&v| r.contains(v)).collect();

    let mut l1 = Vec::new();
    for &v in &candidates {
        if above_cube_root(g.degree(v), n) {
            continue;
        }
        let p1 = potential_parents_p1(g, r, v);
        let parent = t.parent(v).expect("leaf");
        if (!tests.p1 || p1.binary_search(&parent).is_ok()) && 2 * p1.len() >= g.degree(v) {
            l1.push((v, p1));
        }
    }
    let l1_size = l1.len();
    if 256 * l1_size >= n {
        return finish(Branch::L1, l1, l1_size, None);
    }

    let wide: Vec<bool> = (0..n).map(|u| tree_neighbors_outside(t, r, u) >= 2).collect();
    let mut l2 = Vec::new();
    for &v in &candidates {
        if !above_cube_root(g.degree(v), n) {
            continue;
        }
        let p2: Vec<usize> = g
            .neighbors(v)
            .iter()
            .copied()
            .filter(|&u| !r.contains(u) || wide[u])
            .collect();
        let parent = t.parent(v).expect("leaf");
        if (!tests.p2 || p2.binary_search(&parent).is_ok()) && 4 * p2.len() >= g.degree(v) {
            l2.push((v, p2));
        }
    }
    let l2_size = l2.len();
    finish(Branch::L2, l2, l1_size, Some(l2_size))
}

fn finish(
    branch: Branch,
    entries: Vec<(usize, Vec<usize>)>,
    l1_size: usize,
    l2_size: Option<usize>,
) -> StrategyOutcome {
    StrategyOutcome {
        branch,
        selection: LeafSelection::new(entries),
        l1_size,
        l2_size,
    }
}

/// Detaches every selected leaf and reattaches it to a uniformly random
/// potential parent, independently per leaf. The input tree is untouched.
pub fn reconfigure<R: Rng + ?Sized>(
    g: &Graph,
    t: &SpanningTree,
    selection: &LeafSelection,
    rng: &mut R,
) -> SpanningTree {
    debug_assert_eq!(selection.validate(g, t), Ok(()));
    let choices: Vec<usize> = selection
        .iter()
        .map(|(_, parents)| parents[rng.random_range(0..parents.len())])
        .collect();
    apply_choices(g, t, selection, &choices)
}

fn apply_choices(
    g: &Graph,
    t: &SpanningTree,
    selection: &LeafSelection,
    new_parents: &[usize],
) -> SpanningTree {
    // A selected leaf's only tree edge goes to its parent, which is never selected.
    let mut edges: Vec<Edge> = t
        .edges()
        .iter()
        .copied()
        .filter(|&(u, v)| !selection.contains(u) && !selection.contains(v))
        .collect();
    edges.extend(
        selection
            .leaves()
            .iter()
            .zip(new_parents)
            .map(|(&v, &u)| edge(v, u)),
    );
    SpanningTree::new(g, edges).expect("leaf reconfiguration produced a non-tree")
}

/// Every tree reachable by an `(L, P)`-reconfiguration of `t`, or `None`
/// when there are more than `cap` of them.
pub fn all_reconfigurations(
    g: &Graph,
    t: &SpanningTree,
    selection: &LeafSelection,
    cap: u128,
) -> Option<Vec<SpanningTree>> {
    if selection.reconfiguration_count() > cap {
        return None;
    }
    let sizes: Vec<usize> = selection.iter().map(|(_, p)| p.len()).collect();
    let mut digits = vec![0usize; sizes.len()];
    let mut out = Vec::new();
    loop {
        let choice: Vec<usize> = selection
            .iter()
            .zip(&digits)
            .map(|((_, p), &i)| p[i])
            .collect();
        out.push(apply_choices(g, t, selection, &choice));
        let mut k = 0;
        loop {
            if k == sizes.len() {
                return Some(out);
            }
            digits[k] += 1;
            if digits[k] < sizes[k] {
                break;
            }
            digits[k] = 0;
            k += 1;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum ViolationKind {
    Branch { before: Branch, after: Branch },
    Leaves,
    PotentialParents { vertex: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub trial: u64,
    #[serde(flatten)]
    pub kind: ViolationKind,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ReversibilityAudit {
    pub trials: u64,
    pub branch: Branch,
    pub selection_size: usize,
    /// Sorted by trial index.
    pub violations: Vec<Violation>,
}

/// Audits reversibility of [`strategy_s`] at `(t, r)`.
pub fn audit_reversibility(
    g: &Graph,
    t: &SpanningTree,
    r: &VertexSubset,
    trials: u64,
    seed: u64,
) -> ReversibilityAudit {
    audit_reversibility_with(g, t, r, trials, seed, strategy_s)
}

/// Samples `trials` reconfigurations `T'` of `t` under `strategy(t, r)` and
/// recomputes `strategy(T', r)` from scratch, recording every mismatch.
/// Trial `i` draws from stream `(Reconfigure, i)` of `seed`.
pub fn audit_reversibility_with<F>(
    g: &Graph,
    t: &SpanningTree,
    r: &VertexSubset,
    trials: u64,
    seed: u64,
    strategy: F,
) -> ReversibilityAudit
where
    F: Fn(&Graph, &SpanningTree, &VertexSubset) -> StrategyOutcome + Sync,
{
    let before = strategy(g, t, r);
    let streams = Streams::new(seed);
    let violations = (0..trials)
        .into_par_iter()
        .filter_map(|trial| {
            let mut rng = streams.stream(Purpose::Reconfigure, trial);
            let t2 = reconfigure_unchecked(g, t, &before.selection, &mut rng);
            let after = strategy(g, &t2, r);
            before
                .difference(&after)
                .map(|kind| Violation { trial, kind })
        })
        .collect();
    ReversibilityAudit {
        trials,
        branch: before.branch,
        selection_size: before.selection.len(),
        violations,
    }
}

// Strategies under audit may emit selections that break the (L, P) rules
// (mutants do); the reconfiguration itself still yields a spanning tree
// as long as no potential parent is selected.
fn reconfigure_unchecked<R: Rng + ?Sized>(
    g: &Graph,
    t: &SpanningTree,
    selection: &LeafSelection,
    rng: &mut R,
) -> SpanningTree {
    let choices: Vec<usize> = selection
        .iter()
        .map(|(_, parents)| parents[rng.random_range(0..parents.len())])
        .collect();
    apply_choices(g, t, selection, &choices)
}

/// One run of the full pipeline: uniform tree, random subset, strategy, reconfiguration.
#[derive(Debug, Clone)]
pub struct PipelineSample {
    pub tree: SpanningTree,
    pub subset: VertexSubset,
    pub outcome: StrategyOutcome,
    pub reconfigured: SpanningTree,
}

/// Trial `trial` of the pipeline; the tree, subset and reconfiguration each
/// come from their own stream so that the subset is independent of the tree.
pub fn pipeline_step(g: &Graph, streams: &Streams, trial: u64) -> Result<PipelineSample, SampleError> {
    let tree = sample_wilson(g, &mut streams.stream(Purpose::Tree, trial))?;
    let subset = VertexSubset::sample_from(g.n(), streams, trial);
    let outcome = strategy_s(g, &tree, &subset);
    let reconfigured = reconfigure(
        g,
        &tree,
        &outcome.selection,
        &mut streams.stream(Purpose::Reconfigure, trial),
    );
    Ok(PipelineSample {
        tree,
        subset,
        outcome,
        reconfigured,
    })
}
