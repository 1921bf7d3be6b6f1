//! Argument parsing, graph resolution and report output for the `ustree` binary.

mod commands;
mod report;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use ustree::sampler::SamplerKind;
use ustree::tree_iso::CountMode;
use ustree::{GenerateError, Graph, GraphSpec};

pub use report::{Report, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "ustree", version, about = "Uniform spanning tree experiments")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalArgs {
    /// Graph file (edge list with an `n m` header), or a FAMILY:ARGS spec.
    #[arg(long, global = true, value_name = "FILE", conflicts_with = "generator")]
    pub graph: Option<String>,
    /// Generated graph: complete:N, bipartite:A,B, regular:D,N, gnp:N,P,D, cycle:N, path:N.
    #[arg(long = "gen", global = true, value_name = "SPEC")]
    pub generator: Option<String>,
    /// Master seed; drawn from the OS and echoed in the report when absent.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    pub jobs: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Exact spanning tree count and the degree-product upper bound.
    CountExact,
    /// List every spanning tree.
    Enumerate {
        #[arg(long, default_value_t = 100_000)]
        cap: u64,
    },
    /// Draw uniform spanning trees.
    Sample {
        #[arg(long, default_value = "wilson")]
        sampler: SamplerKind,
        /// Cap on proposals per tree for the rejection sampler.
        #[arg(long)]
        max_attempts: Option<u64>,
    },
    /// Apply the leaf reconfiguration strategy and audit its reversibility.
    Reconfigure {
        /// Include each trial's subset and leaf selection.
        #[arg(long)]
        dump_selections: bool,
        /// Reconfigurations audited per trial.
        #[arg(long, default_value_t = 10)]
        audit_trials: u64,
    },
    /// Count isomorphism classes of spanning trees.
    CountNoniso {
        #[arg(long, default_value = "exact")]
        mode: CountMode,
        /// Tree cap in exact mode, number of samples in sampled mode.
        #[arg(long, default_value_t = 100_000)]
        budget: u64,
    },
    /// Monte Carlo experiments.
    Experiment {
        #[command(subcommand)]
        kind: Experiment,
    },
}

#[derive(Subcommand, Debug, Clone)]
pub enum Experiment {
    /// Collision estimate for the bipartite 1-out model of one leaf selection.
    Lemma35 {
        /// Also compute the exact collision probability up to this many outcomes.
        #[arg(long, default_value_t = 1 << 20)]
        exact_limit: u64,
        #[arg(long)]
        per_trial_digests: bool,
    },
    /// Collision estimates for reconfigured trees.
    Pipeline {
        #[arg(long)]
        per_trial_digests: bool,
    },
    /// Collision scaling on K_{d,n-d} with a multinomial baseline (exploratory).
    Conjecture {
        #[arg(long, default_value_t = 3)]
        d: usize,
        #[arg(long, value_delimiter = ',', default_value = "50,100,200,400")]
        sizes: Vec<usize>,
    },
    /// Exact 1-out leaf probabilities and sampled tree leaf counts.
    Leaves {
        #[arg(long, default_value = "wilson")]
        sampler: SamplerKind,
        #[arg(long)]
        max_attempts: Option<u64>,
    },
    /// Chi-square test of a sampler (or the reconfiguration pipeline) against uniform.
    Uniformity {
        /// wilson, ab, reject or pipeline.
        #[arg(long, default_value = "wilson")]
        sampler: String,
        /// Maximum number of spanning trees to enumerate.
        #[arg(long, default_value_t = 10_000)]
        cap: u64,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::CountExact => "count-exact",
            Command::Enumerate { .. } => "enumerate",
            Command::Sample { .. } => "sample",
            Command::Reconfigure { .. } => "reconfigure",
            Command::CountNoniso { .. } => "count-noniso",
            Command::Experiment { kind } => match kind {
                Experiment::Lemma35 { .. } => "experiment lemma35",
                Experiment::Pipeline { .. } => "experiment pipeline",
                Experiment::Conjecture { .. } => "experiment conjecture",
                Experiment::Leaves { .. } => "experiment leaves",
                Experiment::Uniformity { .. } => "experiment uniformity",
            },
        }
    }

    fn needs_graph(&self) -> bool {
        !matches!(
            self,
            Command::Experiment {
                kind: Experiment::Conjecture { .. }
            }
        )
    }
}

/// A failed run: usage errors exit with 2, domain errors with 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CliError {
    Usage(String),
    Domain(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Domain(_) => 1,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Domain(m) => m,
        }
    }
}

/// Resolves `--gen` / `--graph` into a graph and a label for the report.
pub fn resolve_graph(global: &GlobalArgs, seed: u64) -> Result<(String, Graph), CliError> {
    let spec = match (&global.generator, &global.graph) {
        (Some(s), _) => s
            .parse::<GraphSpec>()
            .map_err(|e| CliError::Usage(format!("InvalidSpec: {e}")))?,
        // A --graph value that reads as a spec is treated as one.
        (None, Some(g)) => g
            .parse::<GraphSpec>()
            .unwrap_or_else(|_| GraphSpec::FromFile(PathBuf::from(g))),
        (None, None) => {
            return Err(CliError::Usage(
                "MissingGraph: pass --graph FILE or --gen SPEC".into(),
            ))
        }
    };
    let graph = spec.generate(seed).map_err(|e| match e {
        GenerateError::InfeasibleSpec(_) | GenerateError::BadSpec { .. } => {
            CliError::Usage(format!("InvalidSpec: {e}"))
        }
        GenerateError::Io { .. } | GenerateError::Graph(_) => {
            CliError::Usage(format!("InvalidGraphFile: {e}"))
        }
        GenerateError::GenerationRetriesExhausted(_) => {
            CliError::Domain(format!("GenerationRetriesExhausted: {e}"))
        }
    })?;
    let label = match &spec {
        GraphSpec::FromFile(p) => p.display().to_string(),
        s => s.to_string(),
    };
    Ok((label, graph))
}

/// Parses `args`, runs the command, writes the report and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                ErrorKind::UnknownArgument => {
                    eprintln!("UnknownFlag");
                    2
                }
                _ => 2,
            };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}

fn execute(cli: &Cli) -> Result<i32, CliError> {
    let started = chrono::Utc::now();
    let (seed, seed_generated) = match cli.global.seed {
        Some(s) => (s, false),
        None => (rand::random::<u64>(), true),
    };
    if let Some(jobs) = cli.global.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs as usize)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot start {jobs} workers: {e}")))?;
    }
    let graph = if cli.command.needs_graph() {
        Some(resolve_graph(&cli.global, seed)?)
    } else {
        None
    };
    let config = RunConfig {
        command: cli.command.name().to_string(),
        graph: graph.as_ref().map(|(label, _)| label.clone()),
        seed,
        seed_generated,
        trials: cli.global.trials,
        format: cli.global.format,
        out: cli.global.out.clone(),
        jobs: cli.global.jobs,
        options: commands::options(&cli.command),
    };
    let output = commands::dispatch(&cli.command, graph.as_ref().map(|(_, g)| g), &config)?;
    let failure = output.failure.clone();
    let report = Report::new(config, output, started);
    report::write(&report, cli.global.format, cli.global.out.as_deref())
        .map_err(|e| CliError::Usage(format!("cannot write report: {e}")))?;
    match failure {
        Some(msg) => {
            eprintln!("error: {msg}");
            Ok(1)
        }
        None => Ok(0),
    }
}
