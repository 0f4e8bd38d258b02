//! Separation experiments: benchmark pairs, margin tests of random-parameter
//! models, symmetry suites and random-pair sweeps.
//!
//! A model separates two graphs under one parameter draw when the L∞ distance
//! between their global features (the margin) exceeds [`TAU_SEP`]; it fails to
//! separate when the margin is below [`TAU_EQ`]. Anything in between is
//! reported as [`Verdict::Mixed`] rather than rounded either way.

pub mod invariance;
pub mod pairs;
pub mod separation;
pub mod sweep;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gennet::{self, GenNetParams, InitScale, ModelConfig, ModelError};
use crate::geomgraph::io::GraphIoError;
use crate::geomgraph::GraphError;
use crate::iggnn::{self, IggnnConfig, IggnnParams};
use crate::Graph;

pub use invariance::{invariance_suite, InvarianceReport};
pub use pairs::{builtin_pair, gen_k_chain_pair, gen_pair_a, gen_pair_b, load_pair, PairSpec, Provenance};
pub use separation::{render_table, run_separation, ExperimentReport, SeparationConfig, SeparationResult};
pub use sweep::{generic_pair_sweep, random_connected_graph, SweepConfig, SweepKind, SweepReport};

/// Margins above this count as separated.
pub const TAU_SEP: f64 = 1e-6;
/// Margins below this count as equal.
pub const TAU_EQ: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("schema error: {0}")]
    Schema(#[from] GraphIoError),
    #[error("invariant violation: {0}")]
    InvariantViolation(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Gennet,
    Iggnn,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Gennet => "gennet",
            ModelKind::Iggnn => "iggnn",
        })
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gennet" => Ok(ModelKind::Gennet),
            "iggnn" => Ok(ModelKind::Iggnn),
            other => Err(format!("unknown model {other:?} (expected gennet or iggnn)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Separated,
    NotSeparated,
    Mixed,
}

impl Verdict {
    /// `Separated` iff every margin exceeds [`TAU_SEP`], `NotSeparated` iff
    /// every margin is below [`TAU_EQ`].
    pub fn from_margins(margins: &[f64]) -> Self {
        if !margins.is_empty() && margins.iter().all(|&m| m > TAU_SEP) {
            Verdict::Separated
        } else if margins.iter().all(|&m| m < TAU_EQ) {
            Verdict::NotSeparated
        } else {
            Verdict::Mixed
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Separated => "separated",
            Verdict::NotSeparated => "not_separated",
            Verdict::Mixed => "mixed",
        })
    }
}

impl FromStr for Verdict {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "separated" => Ok(Verdict::Separated),
            "not_separated" => Ok(Verdict::NotSeparated),
            "mixed" => Ok(Verdict::Mixed),
            other => Err(format!("unknown verdict {other:?} (expected separated, not_separated or mixed)")),
        }
    }
}

/// `2 n d + 1`: GenNet channels / I-GGNN width that make random parameters
/// maximally expressive on graphs with `n` nodes in `R^d`.
pub fn auto_channels(n: usize, d: usize) -> usize {
    ModelConfig::maximal_channels(n, d)
}

/// Architecture choice shared by every experiment. `channels` is the GenNet
/// channel count or the I-GGNN width.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub depth: usize,
    pub channels: usize,
    pub dim: usize,
    pub init: InitScale,
}

/// One parameter draw of either model.
#[derive(Debug, Clone)]
pub enum Model {
    Gennet(GenNetParams<f64>),
    Iggnn(IggnnParams<f64>),
}

impl ModelSpec {
    pub fn new(kind: ModelKind, depth: usize, channels: usize, dim: usize) -> Self {
        Self { kind, depth, channels, dim, init: InitScale::default() }
    }

    /// Draws parameters; GenNet gates are sized for the features of `sample`.
    pub fn instantiate(&self, seed: u64, sample: &Graph) -> Result<Model, ModelError> {
        match self.kind {
            ModelKind::Gennet => {
                let node_dim = sample.node_feature_dim().unwrap_or(0);
                let edge_dim = sample.edge_features().map_or(0, |e| e.dim());
                let config = ModelConfig::new(self.depth, self.channels, self.dim)?.with_features(node_dim, edge_dim).with_init(self.init);
                Ok(Model::Gennet(gennet::init_params(&config, seed)?))
            }
            ModelKind::Iggnn => {
                let config = IggnnConfig::new(self.depth, self.channels, self.dim)?.with_init(self.init);
                Ok(Model::Iggnn(iggnn::init_iggnn_params(&config, seed)?))
            }
        }
    }
}

impl Model {
    /// Global invariant feature vector of `g`.
    pub fn global(&self, g: &Graph) -> Result<Vec<f64>, ModelError> {
        match self {
            Model::Gennet(p) => Ok(gennet::forward(g, p)?.global),
            Model::Iggnn(p) => iggnn::iggnn_forward(g, p),
        }
    }
}

/// L∞ distance between two feature vectors of equal length.
pub fn margin(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}
