use std::collections::{BTreeMap, HashMap, HashSet};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use ustree::anticonc::{
    conjecture_scaling, digest_bytes, estimate_max_point_mass, exhaustive_collision,
    pipeline_collision, AnticoncError, BipartiteOneOutInstance, CollisionReport, Digest,
};
use ustree::count::{check_kostochka_upper_bound, count_spanning_trees, enumerate_spanning_trees};
use ustree::reconfig::{audit_reversibility, pipeline_step, strategy_s, VertexSubset};
use ustree::sampler::{leaf_stats, sample_wilson, SampleError, SamplerKind};
use ustree::stats::chi_square_uniform;
use ustree::tree_iso::{count_non_iso_spanning_trees, NonIsoError};
use ustree::{Graph, Purpose, SpanningTree, Streams};

use crate::report::Table;
use crate::{CliError, Command, Experiment, RunConfig};

/// A command's results payload, optional CSV rows, and an optional domain
/// failure that should still produce a report.
pub struct Output {
    pub results: Value,
    pub table: Option<Table>,
    pub failure: Option<String>,
}

impl Output {
    fn new(results: impl Serialize) -> Self {
        Output {
            results: serde_json::to_value(results).expect("serializable results"),
            table: None,
            failure: None,
        }
    }

    fn with_table(mut self, header: &[&str], rows: Vec<Vec<String>>) -> Self {
        self.table = Some(Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows,
        });
        self
    }
}

/// Command-specific flags echoed into the report config.
pub fn options(command: &Command) -> Value {
    match command {
        Command::CountExact => json!({}),
        Command::Enumerate { cap } => json!({ "cap": cap }),
        Command::Sample {
            sampler,
            max_attempts,
        }
        | Command::Experiment {
            kind: Experiment::Leaves {
                sampler,
                max_attempts,
            },
        } => json!({ "sampler": sampler.name(), "maxAttempts": max_attempts }),
        Command::Reconfigure {
            dump_selections,
            audit_trials,
        } => json!({ "dumpSelections": dump_selections, "auditTrials": audit_trials }),
        Command::CountNoniso { mode, budget } => json!({ "mode": mode, "budget": budget }),
        Command::Experiment { kind } => match kind {
            Experiment::Lemma35 {
                exact_limit,
                per_trial_digests,
            } => json!({ "exactLimit": exact_limit, "perTrialDigests": per_trial_digests }),
            Experiment::Pipeline { per_trial_digests } => {
                json!({ "perTrialDigests": per_trial_digests })
            }
            Experiment::Conjecture { d, sizes } => json!({ "d": d, "sizes": sizes }),
            Experiment::Uniformity { sampler, cap } => json!({ "sampler": sampler, "cap": cap }),
            Experiment::Leaves { .. } => unreachable!("handled above"),
        },
    }
}

fn sample_error(e: SampleError) -> CliError {
    CliError::Domain(e.to_string())
}

fn anticonc_error(e: AnticoncError) -> CliError {
    match e {
        AnticoncError::TooFewTrials(_) | AnticoncError::InvalidSizes(_) => {
            CliError::Usage(e.to_string())
        }
        _ => CliError::Domain(e.to_string()),
    }
}

fn with_max_attempts(sampler: SamplerKind, max_attempts: Option<u64>) -> SamplerKind {
    match (sampler, max_attempts) {
        (SamplerKind::Rejection { .. }, Some(m)) => SamplerKind::Rejection { max_attempts: m },
        (s, _) => s,
    }
}

fn hex(d: Digest) -> String {
    format!("{d:032x}")
}

fn tree_digest(t: &SpanningTree) -> Digest {
    let bytes: Vec<u8> = t
        .edges()
        .iter()
        .flat_map(|&(u, v)| [(u as u64).to_le_bytes(), (v as u64).to_le_bytes()])
        .flatten()
        .collect();
    digest_bytes(&bytes)
}

fn edges_cell(t: &SpanningTree) -> String {
    t.edges()
        .iter()
        .map(|(u, v)| format!("{u}-{v}"))
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn dispatch(command: &Command, g: Option<&Graph>, config: &RunConfig) -> Result<Output, CliError> {
    let seed = config.seed;
    let trials = config.trials;
    let graph = || g.expect("graph resolved for this command");
    match command {
        Command::CountExact => count_exact(graph()),
        Command::Enumerate { cap } => enumerate(graph(), *cap),
        Command::Sample {
            sampler,
            max_attempts,
        } => sample(graph(), with_max_attempts(*sampler, *max_attempts), trials, seed),
        Command::Reconfigure {
            dump_selections,
            audit_trials,
        } => reconfigure(graph(), trials, seed, *audit_trials, *dump_selections),
        Command::CountNoniso { mode, budget } => {
            let r = count_non_iso_spanning_trees(graph(), *mode, *budget, seed).map_err(|e| match e {
                NonIsoError::Count(c) => CliError::Domain(c.to_string()),
                NonIsoError::Sample(s) => sample_error(s),
            })?;
            Ok(Output::new(r))
        }
        Command::Experiment { kind } => match kind {
            Experiment::Lemma35 {
                exact_limit,
                per_trial_digests,
            } => lemma35(graph(), trials, seed, *exact_limit, *per_trial_digests),
            Experiment::Pipeline { per_trial_digests } => {
                let r = pipeline_collision(graph(), trials, seed).map_err(anticonc_error)?;
                let rows = r
                    .histogram
                    .digests
                    .iter()
                    .zip(&r.code.digests)
                    .enumerate()
                    .map(|(i, (h, c))| vec![i.to_string(), hex(*h), hex(*c)])
                    .collect();
                let mut results = serde_json::to_value(&r).expect("serializable");
                if *per_trial_digests {
                    results["histogram"]["perTrialDigests"] = digests_value(&r.histogram);
                    results["code"]["perTrialDigests"] = digests_value(&r.code);
                }
                Ok(Output::new(results).with_table(&["trial", "histogramDigest", "codeDigest"], rows))
            }
            Experiment::Conjecture { d, sizes } => {
                let r = conjecture_scaling(*d, sizes, trials, seed).map_err(anticonc_error)?;
                let rows = r
                    .rows
                    .iter()
                    .map(|row| {
                        let c = &row.pipeline.code.estimates;
                        let h = &row.pipeline.histogram.estimates;
                        let b = &row.baseline.estimates;
                        [
                            row.n as f64,
                            c.collision,
                            c.max_mass_bound,
                            c.max_mass_bound_ci95[0],
                            c.max_mass_bound_ci95[1],
                            h.collision,
                            h.max_mass_bound,
                            b.collision,
                            b.max_observed_frequency,
                        ]
                        .iter()
                        .map(|x| x.to_string())
                        .collect()
                    })
                    .collect();
                Ok(Output::new(r).with_table(
                    &[
                        "n",
                        "codeCollision",
                        "maxMassBound",
                        "maxMassBoundLo",
                        "maxMassBoundHi",
                        "histogramCollision",
                        "histogramMaxMassBound",
                        "baselineCollision",
                        "baselineModeFrequency",
                    ],
                    rows,
                ))
            }
            Experiment::Leaves {
                sampler,
                max_attempts,
            } => {
                let r = leaf_stats(graph(), trials, with_max_attempts(*sampler, *max_attempts), seed)
                    .map_err(sample_error)?;
                let rows = r
                    .leaf_counts
                    .iter()
                    .enumerate()
                    .map(|(i, c)| {
                        let attempts = r.attempts.as_ref().map_or(1, |a| a[i]);
                        vec![i.to_string(), c.to_string(), attempts.to_string()]
                    })
                    .collect();
                Ok(Output::new(r).with_table(&["trial", "leaves", "attempts"], rows))
            }
            Experiment::Uniformity { sampler, cap } => uniformity(graph(), sampler, *cap, trials, seed),
        },
    }
}

fn count_exact(g: &Graph) -> Result<Output, CliError> {
    Ok(Output::new(json!({
        "spanningTrees": count_spanning_trees(g).to_string(),
        "kostochkaUpperBoundHolds": check_kostochka_upper_bound(g),
    })))
}

fn enumerate(g: &Graph, cap: u64) -> Result<Output, CliError> {
    let trees = enumerate_spanning_trees(g, cap).map_err(|e| CliError::Domain(e.to_string()))?;
    let rows = trees
        .iter()
        .enumerate()
        .map(|(i, t)| vec![i.to_string(), edges_cell(t)])
        .collect();
    let edges: Vec<&[(usize, usize)]> = trees.iter().map(|t| t.edges()).collect();
    Ok(Output::new(json!({ "count": trees.len().to_string(), "trees": edges }))
        .with_table(&["index", "edges"], rows))
}

fn sample(g: &Graph, sampler: SamplerKind, trials: u64, seed: u64) -> Result<Output, CliError> {
    let streams = Streams::new(seed);
    let sampled = (0..trials)
        .into_par_iter()
        .map(|i| sampler.sample(g, &mut streams.stream(Purpose::Tree, i)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(sample_error)?;
    let mut histogram: BTreeMap<usize, u64> = BTreeMap::new();
    let mut distinct = HashSet::new();
    let mut rows = Vec::with_capacity(sampled.len());
    for (i, s) in sampled.iter().enumerate() {
        let leaves = s.tree.leaf_count();
        *histogram.entry(leaves).or_default() += 1;
        let d = tree_digest(&s.tree);
        distinct.insert(d);
        rows.push(vec![
            i.to_string(),
            leaves.to_string(),
            s.attempts.to_string(),
            hex(d),
            edges_cell(&s.tree),
        ]);
    }
    let n = trials as f64;
    let total_leaves: usize = sampled.iter().map(|s| s.tree.leaf_count()).sum();
    let total_attempts: u64 = sampled.iter().map(|s| s.attempts).sum();
    Ok(Output::new(json!({
        "sampler": sampler.name(),
        "trials": trials,
        "n": g.n(),
        "meanLeafCount": total_leaves as f64 / n,
        "meanLeafFraction": total_leaves as f64 / n / g.n().max(1) as f64,
        "leafCountHistogram": histogram,
        "meanAttempts": total_attempts as f64 / n,
        "distinctTrees": distinct.len(),
    }))
    .with_table(&["trial", "leaves", "attempts", "treeDigest", "edges"], rows))
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct ReconfigureTrial {
    trial: u64,
    branch: String,
    selection_size: usize,
    l1_size: usize,
    l2_size: Option<usize>,
    min_potential_parents: Option<usize>,
    median_potential_parents: Option<f64>,
    violations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    subset: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    selection: Option<Value>,
}

fn median(sorted: &[usize]) -> Option<f64> {
    let k = sorted.len();
    (k > 0).then(|| {
        if k % 2 == 1 {
            sorted[k / 2] as f64
        } else {
            (sorted[k / 2 - 1] + sorted[k / 2]) as f64 / 2.0
        }
    })
}

fn reconfigure(
    g: &Graph,
    trials: u64,
    seed: u64,
    audit_trials: u64,
    dump: bool,
) -> Result<Output, CliError> {
    let streams = Streams::new(seed);
    let per_trial = (0..trials)
        .into_par_iter()
        .map(|i| {
            let t = sample_wilson(g, &mut streams.stream(Purpose::Tree, i))?;
            let r = VertexSubset::sample_from(g.n(), &streams, i);
            let out = strategy_s(g, &t, &r);
            let audit = audit_reversibility(g, &t, &r, audit_trials, streams.child(i).master());
            let mut sizes: Vec<usize> = out.selection.iter().map(|(_, p)| p.len()).collect();
            sizes.sort_unstable();
            Ok(ReconfigureTrial {
                trial: i,
                branch: out.branch.to_string(),
                selection_size: out.selection.len(),
                l1_size: out.l1_size,
                l2_size: out.l2_size,
                min_potential_parents: sizes.first().copied(),
                median_potential_parents: median(&sizes),
                violations: audit.violations.len(),
                subset: dump.then(|| serde_json::to_value(&r).expect("serializable")),
                selection: dump.then(|| serde_json::to_value(&out.selection).expect("serializable")),
            })
        })
        .collect::<Result<Vec<_>, SampleError>>()
        .map_err(sample_error)?;
    let total_violations: usize = per_trial.iter().map(|t| t.violations).sum();
    let l1 = per_trial.iter().filter(|t| t.branch == "L1-branch").count();
    let rows = per_trial
        .iter()
        .map(|t| {
            vec![
                t.trial.to_string(),
                t.branch.clone(),
                t.selection_size.to_string(),
                t.min_potential_parents.map_or(String::new(), |x| x.to_string()),
                t.median_potential_parents.map_or(String::new(), |x| x.to_string()),
                t.violations.to_string(),
            ]
        })
        .collect();
    let mut output = Output::new(json!({
        "auditTrialsPerTrial": audit_trials,
        "totalViolations": total_violations,
        "l1BranchTrials": l1,
        "meanSelectionSize": per_trial.iter().map(|t| t.selection_size).sum::<usize>() as f64 / trials as f64,
        "trials": per_trial,
    }))
    .with_table(
        &["trial", "branch", "selectionSize", "minPotentialParents", "medianPotentialParents", "violations"],
        rows,
    );
    if total_violations > 0 {
        output.failure = Some(format!(
            "ReversibilityViolation: {total_violations} audited reconfigurations changed the selection"
        ));
    }
    Ok(output)
}

fn digests_value(r: &CollisionReport) -> Value {
    Value::Array(r.digests.iter().map(|&d| Value::String(hex(d))).collect())
}

fn lemma35(
    g: &Graph,
    trials: u64,
    seed: u64,
    exact_limit: u64,
    per_trial_digests: bool,
) -> Result<Output, CliError> {
    // The instance comes from pipeline trial 0: its tree, subset and selection.
    let streams = Streams::new(seed);
    let t = sample_wilson(g, &mut streams.stream(Purpose::Tree, 0)).map_err(sample_error)?;
    let r = VertexSubset::sample_from(g.n(), &streams, 0);
    let out = strategy_s(g, &t, &r);
    let inst = BipartiteOneOutInstance::from_leaf_selection(&t, &out.selection);
    let report = estimate_max_point_mass(&inst, trials, seed).map_err(anticonc_error)?;
    let exact = exhaustive_collision(&inst, exact_limit);
    let within = exact.as_ref().map(|e| {
        let x = e.collision_f64();
        let [lo, hi] = report.estimates.ci99;
        lo <= x && x <= hi
    });
    let mut results = serde_json::to_value(&report).expect("serializable");
    let outcomes = inst.outcome_count();
    results["instance"] = json!({
        "n": inst.n(),
        "aSize": inst.a_side().len(),
        "c": inst.c(),
        "d": inst.d(),
        "branch": out.branch,
        "outcomes": if outcomes == u128::MAX { "overflow".to_string() } else { outcomes.to_string() },
    });
    results["exact"] = serde_json::to_value(&exact).expect("serializable");
    results["exactWithinCi99"] = json!(within);
    if per_trial_digests {
        results["perTrialDigests"] = digests_value(&report);
    }
    let rows = report
        .digests
        .iter()
        .enumerate()
        .map(|(i, d)| vec![i.to_string(), hex(*d)])
        .collect();
    Ok(Output::new(results).with_table(&["trial", "vectorDigest"], rows))
}

fn uniformity(g: &Graph, sampler: &str, cap: u64, trials: u64, seed: u64) -> Result<Output, CliError> {
    let pipeline = sampler == "pipeline";
    let kind = if pipeline {
        None
    } else {
        Some(sampler.parse::<SamplerKind>().map_err(CliError::Usage)?)
    };
    let trees = enumerate_spanning_trees(g, cap).map_err(|e| CliError::Domain(e.to_string()))?;
    let index: HashMap<&SpanningTree, usize> = trees.iter().enumerate().map(|(i, t)| (t, i)).collect();
    let streams = Streams::new(seed);
    let hits = (0..trials)
        .into_par_iter()
        .map(|i| {
            let t = match kind {
                Some(k) => k.sample(g, &mut streams.stream(Purpose::Tree, i))?.tree,
                None => pipeline_step(g, &streams, i)?.reconfigured,
            };
            Ok(index[&t])
        })
        .collect::<Result<Vec<_>, SampleError>>()
        .map_err(sample_error)?;
    let mut counts = vec![0u64; trees.len()];
    for h in hits {
        counts[h] += 1;
    }
    let test = chi_square_uniform(&counts);
    let rows = counts
        .iter()
        .zip(&trees)
        .enumerate()
        .map(|(i, (c, t))| vec![i.to_string(), c.to_string(), edges_cell(t)])
        .collect();
    Ok(Output::new(json!({
        "sampler": sampler,
        "spanningTrees": trees.len().to_string(),
        "trials": trials,
        "chiSquare": test,
        "passesAt1e-3": test.passes(1e-3),
        "counts": counts,
    }))
    .with_table(&["tree", "count", "edges"], rows))
}
