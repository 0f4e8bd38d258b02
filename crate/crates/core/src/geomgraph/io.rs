//! JSON graph files:
//!
//! ```text
//! {"d": 2, "positions": [[0.0, 0.0], [1.0, 0.0]], "edges": [[0, 1]],
//!  "node_features": [[..], ..], "edge_features": [[0, 1, [..]], ..]}
//! ```
//!
//! The two feature keys are optional. Coordinates are parsed with correct
//! rounding; non-finite values are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{GeometricGraph, GraphError};

#[derive(Debug, Error)]
pub enum GraphIoError {
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("schema error: {0}")]
    Schema(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// On-disk form of a geometric graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphFile {
    pub d: usize,
    pub positions: Vec<Vec<f64>>,
    pub edges: Vec<(usize, usize)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node_features: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edge_features: Option<Vec<(usize, usize, Vec<f64>)>>,
}

impl GraphFile {
    pub fn into_graph(self) -> Result<GeometricGraph<f64>, GraphIoError> {
        if self.positions.is_empty() {
            return Err(GraphIoError::Schema("\"positions\" is empty".into()));
        }
        if let Some(row) = self.positions.iter().position(|r| r.len() != self.d) {
            return Err(GraphIoError::Schema(format!("positions[{row}] does not have length d = {}", self.d)));
        }
        let mut g = GeometricGraph::build(&self.edges, &self.positions)?;
        if let Some(f) = self.node_features {
            g = g.with_node_features(&f)?;
        }
        if let Some(e) = self.edge_features {
            let list: Vec<((usize, usize), Vec<f64>)> = e.into_iter().map(|(i, j, v)| ((i, j), v)).collect();
            g = g.with_edge_features(&list)?;
        }
        Ok(g)
    }

    pub fn from_graph(g: &GeometricGraph<f64>) -> Self {
        Self {
            d: g.d(),
            positions: g.positions(),
            edges: g.edges(),
            node_features: g.node_feature_dim().map(|_| (0..g.n()).map(|i| g.node_feature(i).unwrap().to_vec()).collect()),
            edge_features: g.edge_features().map(|ef| ef.iter().map(|((i, j), v)| (i, j, v.to_vec())).collect()),
        }
    }
}

pub fn parse_graph(text: &str) -> Result<GeometricGraph<f64>, GraphIoError> {
    serde_json::from_str::<GraphFile>(text)?.into_graph()
}

pub fn read_graph(path: &Path) -> Result<GeometricGraph<f64>, GraphIoError> {
    let text = std::fs::read_to_string(path).map_err(|source| GraphIoError::Io { path: path.display().to_string(), source })?;
    parse_graph(&text)
}
