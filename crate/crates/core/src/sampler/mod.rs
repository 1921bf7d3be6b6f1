//! Uniform spanning tree samplers and leaf statistics.
//!
//! Three independent routes to the uniform distribution on spanning trees:
//! Wilson's loop-erased random walks (the default), the Aldous–Broder cover
//! walk, and rejection sampling of uniformly random 1-out digraphs.

mod leaves;
mod one_out;
mod walk;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::graph::Graph;
use crate::tree::SpanningTree;

pub use leaves::{exact_leaf_probabilities, leaf_stats, s_values, LeafStatsReport};
pub use one_out::{
    digraph_census, sample_one_out_digraph, sample_rejection_one_out, DigraphCensus,
    OneOutDigraph, Support,
};
pub use walk::{sample_aldous_broder, sample_wilson};

/// Default cap on rejection attempts per accepted tree.
pub const DEFAULT_MAX_ATTEMPTS: u64 = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SampleError {
    #[error("graph is not connected")]
    Disconnected,
    #[error("vertex {0} has no neighbors")]
    IsolatedVertex(usize),
    #[error("AttemptsExhausted: no tree-supported digraph in {0} attempts")]
    AttemptsExhausted(u64),
    #[error("graph has {count} 1-out digraphs, above the census limit {limit}")]
    TooManyDigraphs { count: String, limit: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerKind {
    Wilson,
    AldousBroder,
    Rejection { max_attempts: u64 },
}

/// One sampled tree plus the number of proposals it took (1 for the walk samplers).
#[derive(Debug, Clone)]
pub struct Sampled {
    pub tree: SpanningTree,
    pub attempts: u64,
}

impl SamplerKind {
    pub fn sample<R: Rng + ?Sized>(&self, g: &Graph, rng: &mut R) -> Result<Sampled, SampleError> {
        match *self {
            SamplerKind::Wilson => sample_wilson(g, rng).map(|tree| Sampled { tree, attempts: 1 }),
            SamplerKind::AldousBroder => {
                sample_aldous_broder(g, rng).map(|tree| Sampled { tree, attempts: 1 })
            }
            SamplerKind::Rejection { max_attempts } => {
                sample_rejection_one_out(g, rng, max_attempts)
                    .map(|(tree, attempts)| Sampled { tree, attempts })
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SamplerKind::Wilson => "wilson",
            SamplerKind::AldousBroder => "ab",
            SamplerKind::Rejection { .. } => "reject",
        }
    }
}

impl fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SamplerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "wilson" => Ok(SamplerKind::Wilson),
            "ab" | "aldous-broder" => Ok(SamplerKind::AldousBroder),
            "reject" | "rejection" => Ok(SamplerKind::Rejection {
                max_attempts: DEFAULT_MAX_ATTEMPTS,
            }),
            other => Err(format!("unknown sampler {other:?} (wilson|ab|reject)")),
        }
    }
}

fn ensure_connected(g: &Graph) -> Result<(), SampleError> {
    if g.is_connected() {
        Ok(())
    } else {
        Err(SampleError::Disconnected)
    }
}
