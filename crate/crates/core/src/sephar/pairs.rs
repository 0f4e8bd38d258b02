//! Benchmark pairs: k-chains, pair a, pair b, and pairs loaded from JSON.

use std::f64::consts::FRAC_1_SQRT_2;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::geomgraph::io::GraphFile;
use crate::geomgraph::{edge_distance_multiset, multiset_gap};
use crate::Graph;

/// Tolerance on edge-length multisets of builtin pairs.
pub const BUILTIN_EDGE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Builtin,
    File,
}

/// Two geometric graphs on the same node count and dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct PairSpec {
    pub name: String,
    pub g: Graph,
    pub h: Graph,
    pub expected_isomorphic: bool,
    pub provenance: Provenance,
}

impl PairSpec {
    fn builtin(name: String, g: Graph, h: Graph) -> Self {
        let pair = Self { name, g, h, expected_isomorphic: false, provenance: Provenance::Builtin };
        debug_assert!(pair.edge_lengths_match(BUILTIN_EDGE_TOL));
        pair
    }

    pub fn edge_lengths_match(&self, tol: f64) -> bool {
        multiset_gap(&edge_distance_multiset(&self.g), &edge_distance_multiset(&self.h)).is_some_and(|gap| gap <= tol)
    }

    fn check(self) -> Result<Self, HarnessError> {
        if self.g.n() != self.h.n() || self.g.d() != self.h.d() {
            return Err(HarnessError::InvariantViolation(format!(
                "pair {:?}: G is n={}, d={} but H is n={}, d={}",
                self.name,
                self.g.n(),
                self.g.d(),
                self.h.n(),
                self.h.d()
            )));
        }
        Ok(self)
    }
}

fn path_edges(n: usize) -> Vec<(usize, usize)> {
    (1..n).map(|i| (i - 1, i)).collect()
}

/// k-chain pair on `k + 2` nodes in the plane, labeled along the path:
/// node 0 is the left end `(−√2/2, √2/2)`, nodes `1..=k` sit at `(i − 1, 0)`,
/// and node `k + 1` is the right end at `(k − 1 + √2/2, ±√2/2)`, above the
/// line in `G` and below it in `H`. All edges have unit length.
pub fn gen_k_chain_pair(k: usize) -> Result<PairSpec, HarnessError> {
    if k < 2 {
        return Err(HarnessError::InvalidArgument(format!("k-chain needs k >= 2, got {k}")));
    }
    let h = FRAC_1_SQRT_2;
    let build = |sign: f64| -> Graph {
        let mut pts = Vec::with_capacity(k + 2);
        pts.push(vec![-h, h]);
        pts.extend((0..k).map(|i| vec![i as f64, 0.0]));
        pts.push(vec![(k - 1) as f64 + h, sign * h]);
        Graph::build(&path_edges(k + 2), &pts).expect("valid chain")
    };
    Ok(PairSpec::builtin(format!("k_chain_{k}"), build(1.0), build(-1.0)))
}

/// Four-node unit-step planar path turning by `turns[0]` at node 1 and
/// `turns[1]` at node 2 (degrees, counter-clockwise positive).
pub fn turning_path(turns: [f64; 2]) -> Graph {
    let mut pts = vec![vec![0.0, 0.0], vec![1.0, 0.0]];
    let mut heading = 0.0f64;
    for turn in turns {
        heading += turn.to_radians();
        let last = pts.last().unwrap().clone();
        pts.push(vec![last[0] + heading.cos(), last[1] + heading.sin()]);
    }
    Graph::build(&path_edges(4), &pts).expect("valid path")
}

/// Turns (50°, 70°) against (80°, 70°): equal edges, different `|p0 − p2|`.
pub fn gen_pair_a() -> PairSpec {
    PairSpec::builtin("pair_a".into(), turning_path([50.0, 70.0]), turning_path([80.0, 70.0]))
}

/// Turns (60°, 60°) against (60°, −60°): equal one- and two-hop distances,
/// different end-to-end distance.
pub fn gen_pair_b() -> PairSpec {
    PairSpec::builtin("pair_b".into(), turning_path([60.0, 60.0]), turning_path([60.0, -60.0]))
}

/// Resolves `pair_a`, `pair_b` and `k_chain_<k>`.
pub fn builtin_pair(name: &str) -> Option<PairSpec> {
    match name {
        "pair_a" => Some(gen_pair_a()),
        "pair_b" => Some(gen_pair_b()),
        _ => name.strip_prefix("k_chain_")?.parse().ok().and_then(|k| gen_k_chain_pair(k).ok()),
    }
}

/// On-disk pair: `{"name": …, "G": <graph>, "H": <graph>, "expected_isomorphic": bool}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairFile {
    pub name: String,
    #[serde(rename = "G")]
    pub g: GraphFile,
    #[serde(rename = "H")]
    pub h: GraphFile,
    pub expected_isomorphic: bool,
}

impl PairFile {
    pub fn from_pair(pair: &PairSpec) -> Self {
        Self {
            name: pair.name.clone(),
            g: GraphFile::from_graph(&pair.g),
            h: GraphFile::from_graph(&pair.h),
            expected_isomorphic: pair.expected_isomorphic,
        }
    }

    pub fn into_pair(self) -> Result<PairSpec, HarnessError> {
        PairSpec {
            name: self.name,
            g: self.g.into_graph()?,
            h: self.h.into_graph()?,
            expected_isomorphic: self.expected_isomorphic,
            provenance: Provenance::File,
        }
        .check()
    }
}

pub fn parse_pair(text: &str) -> Result<PairSpec, HarnessError> {
    serde_json::from_str::<PairFile>(text).map_err(HarnessError::from)?.into_pair()
}

pub fn load_pair(path: &Path) -> Result<PairSpec, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io { path: path.display().to_string(), source })?;
    parse_pair(&text)
}
