//! Acceptance gate. Runs every criterion at its pinned tolerance, prints one
//! PASS/FAIL line each, and exits non-zero if any criterion fails.

mod common;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand::Rng;
use rayon::prelude::*;

use ustree::anticonc::{
    conjecture_scaling, estimate_max_point_mass, exhaustive_collision, BipartiteOneOutInstance,
};
use ustree::count::{check_kostochka_upper_bound, count_spanning_trees, degree_product, enumerate_spanning_trees};
use ustree::generate::{bipartite, complete, cycle};
use ustree::reconfig::{audit_reversibility, pipeline_step, strategy_s, VertexSubset};
use ustree::sampler::{digraph_census, exact_leaf_probabilities, sample_wilson, SamplerKind};
use ustree::stats::chi_square_uniform;
use ustree::tree_iso::{canonical_code, canonical_code_from_edges};
use ustree::{Graph, GraphSpec, Purpose, SpanningTree, Streams};

// Pinned tolerances.
const CAYLEY_TIME_LIMIT: Duration = Duration::from_secs(1);
const ENUMERATION_TIME_LIMIT: Duration = Duration::from_secs(30);
const CENSUS_TIME_LIMIT: Duration = Duration::from_secs(60);
const CENSUS_DIGRAPH_LIMIT: u64 = 1_000_000;
const SAMPLER_TIME_LIMIT: Duration = Duration::from_secs(60);
const CHI_SQUARE_SIGNIFICANCE: f64 = 1e-3;
const UNIFORMITY_SAMPLES: u64 = 100_000;
const LEAF_FRACTION_TOLERANCE: f64 = 0.05;
const AUDIT_TRIALS_TOTAL: u64 = 10_000;
const SELECTION_TRIALS: u64 = 500;
const MODEL_TRIALS: u64 = 100_000;
const MODEL_MAX_OUTCOMES: u64 = 1 << 20;
const SCALING_TRIALS: u64 = 100_000;
const SCALING_HALF_SLOPE: f64 = -0.5;
const BASELINE_SLOPE_TOLERANCE: f64 = 0.25;
const ISO_PAIRS: u64 = 1000;
const ISO_MAX_VERTICES: usize = 8;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 13] = [
        ("Cayley exactness", c01_cayley),
        ("enumeration oracle", c02_enumeration),
        ("Kostochka upper bound", c03_kostochka),
        ("1-out digraph census", c04_census),
        ("sampler uniformity", c05_samplers),
        ("exact leaf-expectation bound", c06_leaf_expectation),
        ("leaf count at desk scale", c07_leaf_count),
        ("reversibility", c08_reversibility),
        ("uniformity through reconfiguration", c09_pipeline_uniformity),
        ("linear selection size", c10_selection_size),
        ("bipartite model estimator vs exact", c11_model_exactness),
        ("anticoncentration scaling", c12_scaling),
        ("canonicalization", c13_canonical),
    ];
    let filter = std::env::args().nth(1).filter(|a| !a.starts_with('-'));
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let id = i + 1;
        if filter.as_deref().is_some_and(|f| f != id.to_string() && !name.contains(f)) {
            continue;
        }
        let start = Instant::now();
        let result = std::panic::catch_unwind(run).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        let tag = if result.pass { "PASS" } else { "FAIL" };
        println!(
            "{tag} criterion {id:>2} ({name}): {} [{:.2}s]",
            result.detail,
            start.elapsed().as_secs_f64()
        );
        failed += usize::from(!result.pass);
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}

fn c01_cayley() -> Outcome {
    let start = Instant::now();
    let bad: Vec<usize> = (3..=9usize)
        .filter(|&n| count_spanning_trees(&complete(n)) != BigUint::from(n).pow(n as u32 - 2))
        .collect();
    let elapsed = start.elapsed();
    outcome(
        bad.is_empty() && elapsed < CAYLEY_TIME_LIMIT,
        format!("n = 3..9 exact, mismatches {bad:?}, {:.3}s < 1s", elapsed.as_secs_f64()),
    )
}

fn c02_enumeration() -> Outcome {
    let start = Instant::now();
    let graphs = common::small_random_graphs(2);
    let mismatches = graphs
        .iter()
        .filter(|g| {
            let trees = enumerate_spanning_trees(g, 1 << 20).unwrap();
            let distinct: HashSet<_> = trees.iter().collect();
            BigUint::from(trees.len()) != count_spanning_trees(g) || distinct.len() != trees.len()
        })
        .count();
    let elapsed = start.elapsed();
    outcome(
        mismatches == 0 && elapsed < ENUMERATION_TIME_LIMIT,
        format!("{} graphs, {mismatches} mismatches, {:.2}s < 30s", graphs.len(), elapsed.as_secs_f64()),
    )
}

fn c03_kostochka() -> Outcome {
    let corpus = common::corpus();
    let violations: Vec<String> = corpus
        .par_iter()
        .filter(|(_, g)| !check_kostochka_upper_bound(g))
        .map(|(name, _)| name.clone())
        .collect();
    outcome(
        violations.is_empty(),
        format!("{} corpus graphs, violations {violations:?}", corpus.len()),
    )
}

fn c04_census() -> Outcome {
    let start = Instant::now();
    let mut graphs = vec![
        complete(4),
        complete(5),
        complete(6),
        complete(7),
        cycle(5),
        cycle(8),
        bipartite(2, 3),
        bipartite(3, 4),
        bipartite(3, 5),
        GraphSpec::Regular { d: 3, n: 10 }.generate(4).unwrap(),
    ];
    graphs.push(common::random_connected_graph(8, 0.5, &mut Streams::new(4).stream(Purpose::Instance, 0)));
    let mut exceptions = 0;
    let mut checked = 0;
    for g in graphs.iter().filter(|g| degree_product(g) <= BigUint::from(CENSUS_DIGRAPH_LIMIT)).take(10) {
        checked += 1;
        let census = digraph_census(g, CENSUS_DIGRAPH_LIMIT).unwrap();
        let tau = count_spanning_trees(g);
        let all_trees_seen = BigUint::from(census.per_tree.len()) == tau;
        if !census.uniform_multiplicity(g.n()) || !all_trees_seen {
            exceptions += 1;
        }
    }
    let elapsed = start.elapsed();
    outcome(
        checked == 10 && exceptions == 0 && elapsed < CENSUS_TIME_LIMIT,
        format!(
            "{checked} graphs with d(G) <= 1e6, {exceptions} exceptions, {:.2}s < 60s",
            elapsed.as_secs_f64()
        ),
    )
}

fn tree_index(g: &Graph) -> HashMap<SpanningTree, usize> {
    enumerate_spanning_trees(g, 1000)
        .unwrap()
        .into_iter()
        .enumerate()
        .map(|(i, t)| (t, i))
        .collect()
}

fn uniformity_p_value(g: &Graph, trials: u64, draw: impl Fn(u64) -> SpanningTree + Sync) -> f64 {
    let index = tree_index(g);
    let hits: Vec<usize> = (0..trials).into_par_iter().map(|i| index[&draw(i)]).collect();
    let mut counts = vec![0u64; index.len()];
    for h in hits {
        counts[h] += 1;
    }
    chi_square_uniform(&counts).p_value
}

fn c05_samplers() -> Outcome {
    let start = Instant::now();
    let graphs = [("K4", complete(4)), ("C5", cycle(5)), ("K2,3", bipartite(2, 3))];
    let samplers = [
        SamplerKind::Wilson,
        SamplerKind::AldousBroder,
        SamplerKind::Rejection { max_attempts: 10_000 },
    ];
    let mut worst = 1.0f64;
    let mut failures = Vec::new();
    for (gi, (name, g)) in graphs.iter().enumerate() {
        for sampler in samplers {
            let streams = Streams::new(500 + gi as u64);
            let p = uniformity_p_value(g, UNIFORMITY_SAMPLES, |i| {
                sampler.sample(g, &mut streams.stream(Purpose::Tree, i)).unwrap().tree
            });
            worst = worst.min(p);
            if p < CHI_SQUARE_SIGNIFICANCE {
                failures.push(format!("{name}/{sampler}: p = {p:.2e}"));
            }
        }
    }
    let elapsed = start.elapsed();
    outcome(
        failures.is_empty() && elapsed < SAMPLER_TIME_LIMIT,
        format!(
            "3 graphs x 3 samplers x 1e5, min p = {worst:.4} >= 1e-3, failures {failures:?}, {:.1}s < 60s",
            elapsed.as_secs_f64()
        ),
    )
}

fn c06_leaf_expectation() -> Outcome {
    let specs = [
        "complete:3",
        "complete:10",
        "complete:40",
        "cycle:3",
        "cycle:10",
        "cycle:101",
        "bipartite:2,2",
        "bipartite:2,30",
        "bipartite:3,60",
        "bipartite:8,200",
        "bipartite:20,25",
        "regular:3,20",
        "regular:3,200",
        "regular:4,51",
        "regular:8,200",
        "regular:16,300",
        "gnp:30,0.2,2",
        "gnp:60,0.1,3",
        "gnp:100,0.08,4",
        "gnp:300,0.05,8",
    ];
    let mut violations = Vec::new();
    let mut tightest = f64::INFINITY;
    for (i, spec) in specs.iter().enumerate() {
        let g = spec.parse::<GraphSpec>().unwrap().generate(600 + i as u64).unwrap();
        assert!(g.min_degree().unwrap() >= 2);
        let total = exact_leaf_probabilities(&g)
            .into_iter()
            .fold(BigRational::from_integer(0.into()), |a, p| a + p);
        let quarter = BigRational::new(g.n().into(), 4.into());
        tightest = tightest.min((&total / &quarter).to_f64().unwrap());
        if total < quarter {
            violations.push(spec.to_string());
        }
    }
    outcome(
        violations.is_empty(),
        format!(
            "{} graphs, exact rational sums, min ratio to n/4 = {tightest:.4}, violations {violations:?}",
            specs.len()
        ),
    )
}

fn c07_leaf_count() -> Outcome {
    let g = complete(100);
    let streams = Streams::new(7);
    let counts: Vec<usize> = (0..1000u64)
        .into_par_iter()
        .map(|i| sample_wilson(&g, &mut streams.stream(Purpose::Tree, i)).unwrap().leaf_count())
        .collect();
    let min = *counts.iter().min().unwrap();
    let mean = counts.iter().sum::<usize>() as f64 / counts.len() as f64 / 100.0;
    let target = (-1.0f64).exp();
    let pass = 8 * min > 100 && (mean - target).abs() <= LEAF_FRACTION_TOLERANCE;
    outcome(
        pass,
        format!("K100 x 1000: min leaves {min} > 12.5, mean fraction {mean:.4} vs 1/e = {target:.4} +- 0.05"),
    )
}

fn c08_reversibility() -> Outcome {
    let graphs: Vec<(&str, Graph)> = vec![
        ("K3,60", bipartite(3, 60)),
        ("K8,200", bipartite(8, 200)),
        ("regular(8,200)", GraphSpec::Regular { d: 8, n: 200 }.generate(8).unwrap()),
        (
            "gnp(300,0.05,8)",
            GraphSpec::GnpMinDegree { n: 300, p: 0.05, d: 8 }.generate(8).unwrap(),
        ),
    ];
    // 25 sampled (T, R) pairs per graph, 100 reconfigurations each.
    let pairs = 25u64;
    let per_pair = AUDIT_TRIALS_TOTAL / (graphs.len() as u64 * pairs);
    let mut audited = 0;
    let mut violations = 0;
    let mut selected = 0usize;
    for (gi, (_, g)) in graphs.iter().enumerate() {
        let streams = Streams::new(800 + gi as u64);
        for k in 0..pairs {
            let t = sample_wilson(g, &mut streams.stream(Purpose::Tree, k)).unwrap();
            let r = VertexSubset::sample_from(g.n(), &streams, k);
            let audit = audit_reversibility(g, &t, &r, per_pair, streams.child(k).master());
            audited += audit.trials;
            violations += audit.violations.len();
            selected += audit.selection_size;
        }
    }
    outcome(
        violations == 0 && audited == AUDIT_TRIALS_TOTAL,
        format!(
            "{audited} audited trials on K3,60 / K8,200 / regular(8,200) / gnp(300,0.05,8), \
             mean |L| {:.1}, {violations} violations",
            selected as f64 / (graphs.len() as u64 * pairs) as f64
        ),
    )
}

fn c09_pipeline_uniformity() -> Outcome {
    let mut details = Vec::new();
    let mut pass = true;
    for (gi, (name, g)) in [("K4", complete(4)), ("K2,3", bipartite(2, 3))].into_iter().enumerate() {
        let streams = Streams::new(900 + gi as u64);
        let p = uniformity_p_value(&g, UNIFORMITY_SAMPLES, |i| {
            pipeline_step(&g, &streams, i).unwrap().reconfigured
        });
        pass &= p >= CHI_SQUARE_SIGNIFICANCE;
        details.push(format!("{name} p = {p:.4}"));
    }
    outcome(pass, format!("1e5 pipeline runs each: {} (>= 1e-3)", details.join(", ")))
}

fn c10_selection_size() -> Outcome {
    let n = 2048;
    let d = 16;
    let graphs = [
        ("K16,2032", bipartite(d, n - d)),
        ("regular(16,2048)", GraphSpec::Regular { d, n }.generate(10).unwrap()),
    ];
    let mut details = Vec::new();
    let mut pass = true;
    for (gi, (name, g)) in graphs.iter().enumerate() {
        let streams = Streams::new(1000 + gi as u64);
        let sizes: Vec<usize> = (0..SELECTION_TRIALS)
            .into_par_iter()
            .map(|i| {
                let t = sample_wilson(g, &mut streams.stream(Purpose::Tree, i)).unwrap();
                let r = VertexSubset::sample_from(n, &streams, i);
                strategy_s(g, &t, &r).selection.len()
            })
            .collect();
        let min = *sizes.iter().min().unwrap();
        let small = sizes.iter().filter(|&&l| 256 * l < n).count();
        pass &= small == 0;
        details.push(format!("{name}: min |L| {min}, {small} trials below n/256"));
    }
    outcome(pass, format!("500 trials each: {}", details.join("; ")))
}

fn c11_model_exactness() -> Outcome {
    let mut instances: Vec<(String, BipartiteOneOutInstance)> = vec![
        (
            "K2,2".into(),
            BipartiteOneOutInstance::new(4, vec![(0, vec![2, 3]), (1, vec![2, 3])], vec![0; 4]).unwrap(),
        ),
        (
            "star-5 distinct offsets".into(),
            BipartiteOneOutInstance::new(6, vec![(0, (1..6).collect())], vec![0, 2, 4, 6, 8, 10])
                .unwrap(),
        ),
    ];
    // A random 4 x 6 bipartite instance with random offsets.
    let mut rng = Streams::new(1100).stream(Purpose::Instance, 0);
    let entries = (0..4)
        .map(|v| {
            let nbrs: Vec<usize> = (4..10).filter(|_| rng.random_bool(0.6)).collect();
            (v, if nbrs.is_empty() { vec![4] } else { nbrs })
        })
        .collect();
    let offsets = (0..10).map(|v| if v < 4 { 0 } else { rng.random_range(0..3) }).collect();
    instances.push(("random 4x6".into(), BipartiteOneOutInstance::new(10, entries, offsets).unwrap()));
    // The model hidden in one leaf reconfiguration of K_{3,12}.
    let g = bipartite(3, 12);
    let streams = Streams::new(1101);
    let sel = (0..)
        .map(|i| {
            let t = sample_wilson(&g, &mut streams.stream(Purpose::Tree, i)).unwrap();
            let r = VertexSubset::sample_from(g.n(), &streams, i);
            let sel = strategy_s(&g, &t, &r).selection;
            (t, sel)
        })
        .find(|(_, sel)| sel.len() >= 3 && sel.reconfiguration_count() <= MODEL_MAX_OUTCOMES as u128)
        .unwrap();
    instances.push((
        "K3,12 leaf selection".into(),
        BipartiteOneOutInstance::from_leaf_selection(&sel.0, &sel.1),
    ));

    let mut pass = true;
    let mut details = Vec::new();
    for (i, (name, inst)) in instances.iter().enumerate() {
        let exact = exhaustive_collision(inst, MODEL_MAX_OUTCOMES).unwrap();
        let report = estimate_max_point_mass(inst, MODEL_TRIALS, 1110 + i as u64).unwrap();
        let truth = exact.collision_f64();
        let [lo, hi] = report.estimates.ci99;
        let ok = lo <= truth && truth <= hi;
        pass &= ok;
        details.push(format!(
            "{name}: exact {truth:.6} in [{lo:.6}, {hi:.6}] {}",
            if ok { "yes" } else { "NO" }
        ));
    }
    outcome(pass, details.join("; "))
}

fn c12_scaling() -> Outcome {
    let report = conjecture_scaling(3, &[50, 100, 200, 400], SCALING_TRIALS, 1200).unwrap();
    let bounds: Vec<String> = report
        .rows
        .iter()
        .map(|r| format!("{}:{:.4}", r.n, r.pipeline.code.estimates.max_mass_bound))
        .collect();
    let pass = report.strictly_decreasing && report.slope.slope < 0.0;
    let half = report.slope.slope <= SCALING_HALF_SLOPE;
    let baseline_ok =
        (report.baseline_slope.slope - report.conjectured_slope).abs() <= BASELINE_SLOPE_TOLERANCE;
    outcome(
        pass,
        format!(
            "max-mass bound {} strictly decreasing, slope {:.3} (95% CI [{:.3}, {:.3}]) < 0; \
             exploratory: slope <= -0.5 {}, histogram slope {:.3}, collision slope {:.3}, \
             multinomial baseline slope {:.3} vs {:.1} +- 0.25 {}",
            bounds.join(" "),
            report.slope.slope,
            report.slope.ci95[0],
            report.slope.ci95[1],
            if half { "yes" } else { "no" },
            report.histogram_slope.slope,
            report.collision_slope.slope,
            report.baseline_slope.slope,
            report.conjectured_slope,
            if baseline_ok { "yes" } else { "no" },
        ),
    )
}

fn c13_canonical() -> Outcome {
    let trees = enumerate_spanning_trees(&complete(4), 100).unwrap();
    let codes: HashSet<_> = trees.iter().map(canonical_code).collect();
    let streams = Streams::new(1300);
    let results: Vec<(bool, bool)> = (0..ISO_PAIRS)
        .into_par_iter()
        .map(|i| {
            let mut rng = streams.stream(Purpose::Instance, i);
            let n = rng.random_range(1..=ISO_MAX_VERTICES);
            let a = common::random_tree(n, &mut rng);
            let b = if rng.random_bool(0.5) {
                common::relabel(n, &a, &mut rng)
            } else {
                common::random_tree(n, &mut rng)
            };
            let same_code = canonical_code_from_edges(n, a.iter().copied()).unwrap()
                == canonical_code_from_edges(n, b.iter().copied()).unwrap();
            (same_code, common::brute_isomorphic(n, &a, &b))
        })
        .collect();
    let mismatches = results.iter().filter(|(c, b)| c != b).count();
    let isomorphic = results.iter().filter(|(_, b)| *b).count();
    let by_size: BTreeMap<usize, usize> = trees.iter().fold(BTreeMap::new(), |mut m, t| {
        *m.entry(t.leaf_count()).or_default() += 1;
        m
    });
    outcome(
        trees.len() == 16 && codes.len() == 2 && mismatches == 0,
        format!(
            "K4: {} trees, {} codes (leaf counts {by_size:?}); {ISO_PAIRS} pairs on <= 8 vertices \
             ({isomorphic} isomorphic), {mismatches} mismatches",
            trees.len(),
            codes.len()
        ),
    )
}
