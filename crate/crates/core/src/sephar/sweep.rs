//! Sweeps over random pairs of small geometric graphs, labeled by the
//! brute-force isomorphism oracle.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{auto_channels, margin, HarnessError, ModelKind, ModelSpec, Verdict, TAU_EQ, TAU_SEP};
use crate::gennet::InitScale;
use crate::geomgraph::{
    apply_permutation, apply_rigid_motion, is_connected, is_geometrically_isomorphic, sample_positions_with, PermutationMap, RigidMotion,
    MAX_ORACLE_NODES,
};
use crate::{rng, Graph};

/// Positional tolerance of the isomorphism oracle.
pub const ORACLE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepKind {
    /// Two independently sampled connected graphs.
    Random,
    /// A connected graph and a permuted, rigidly moved copy.
    Isomorphic,
    /// A two-component graph and the same graph with one component rigidly
    /// moved.
    Disconnected,
}

impl fmt::Display for SweepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepKind::Random => "random",
            SweepKind::Isomorphic => "isomorphic",
            SweepKind::Disconnected => "disconnected",
        })
    }
}

impl FromStr for SweepKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "random" => Ok(SweepKind::Random),
            "isomorphic" => Ok(SweepKind::Isomorphic),
            "disconnected" => Ok(SweepKind::Disconnected),
            other => Err(format!("unknown sweep kind {other:?} (expected random, isomorphic or disconnected)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepConfig {
    pub kind: SweepKind,
    pub count: usize,
    pub n: usize,
    pub d: usize,
    pub model: ModelKind,
    /// Defaults to `d + 1`.
    pub depth: Option<usize>,
    /// Defaults to `2 n d + 1`.
    pub channels: Option<usize>,
    pub seed: u64,
    pub init: InitScale,
}

impl SweepConfig {
    pub fn new(kind: SweepKind, count: usize, n: usize, d: usize, model: ModelKind, seed: u64) -> Self {
        Self { kind, count, n, d, model, depth: None, channels: None, seed, init: InitScale::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepItem {
    pub index: usize,
    pub edges_g: usize,
    pub edges_h: usize,
    /// Oracle label.
    pub isomorphic: bool,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub kind: SweepKind,
    pub model: ModelKind,
    pub count: usize,
    pub n: usize,
    pub d: usize,
    pub depth: usize,
    pub channels: usize,
    pub seed: u64,
    pub isomorphic_pairs: usize,
    /// Non-isomorphic pairs with margin above the separation threshold.
    pub separated_non_isomorphic: usize,
    /// Isomorphic pairs with margin above the separation threshold (should be 0).
    pub separated_isomorphic: usize,
    /// Pairs with margin below the equality threshold.
    pub equal: usize,
    /// Pairs with margin between the two thresholds.
    pub ambiguous: usize,
    pub verdict: Verdict,
    pub items: Vec<SweepItem>,
}

/// Erdős–Rényi graph with edge probability 1/2, resampled until connected,
/// with positions uniform in `[-1, 1]^d`.
pub fn random_connected_graph<R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> Graph {
    loop {
        let edges: Vec<(usize, usize)> =
            (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).filter(|_| rng.gen_bool(0.5)).collect::<Vec<_>>();
        let g = Graph::build(&edges, &sample_positions_with(rng, n, d)).expect("valid random graph");
        if is_connected(&g) {
            return g;
        }
    }
}

/// Random motion whose orthogonal part has determinant `−1` iff `reflect`.
fn signed_motion<R: Rng + ?Sized>(d: usize, reflect: bool, rng: &mut R) -> RigidMotion<f64> {
    let m = RigidMotion::random(d, rng);
    if (m.determinant() < 0.0) != reflect {
        m.reflected()
    } else {
        m
    }
}

fn disconnected_pair<R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> (Graph, Graph) {
    let left = rng.gen_range(1..n);
    let a = random_connected_graph(left, d, rng);
    let b = random_connected_graph(n - left, d, rng);
    let mut edges = a.edges();
    edges.extend(b.edges().into_iter().map(|(i, j)| (i + left, j + left)));
    let mut positions = a.positions();
    positions.extend(b.positions());
    let moved_range = if rng.gen_bool(0.5) { 0..left } else { left..n };
    let motion = signed_motion(d, rng.gen_bool(0.5), rng);
    let mut moved = positions.clone();
    for i in moved_range {
        moved[i] = motion.apply_point(&positions[i]);
    }
    let p = PermutationMap::random(n, rng);
    let g = apply_permutation(&Graph::build(&edges, &positions).expect("valid union"), &p).expect("same size");
    let h = apply_permutation(&Graph::build(&edges, &moved).expect("valid union"), &p).expect("same size");
    (g, h)
}

/// Samples `count` pairs as described by `cfg.kind` (item `k` from stream
/// `(seed, k)`), labels each with the isomorphism oracle and records the
/// margin of one fresh parameter draw per item.
pub fn generic_pair_sweep(cfg: &SweepConfig) -> Result<SweepReport, HarnessError> {
    if cfg.count == 0 || cfg.d == 0 {
        return Err(HarnessError::InvalidArgument("need count >= 1 and d >= 1".into()));
    }
    let min_n = if cfg.kind == SweepKind::Disconnected { 2 } else { 1 };
    if cfg.n < min_n || cfg.n > MAX_ORACLE_NODES {
        return Err(HarnessError::InvalidArgument(format!("{} sweep needs {min_n} <= n <= {MAX_ORACLE_NODES}, got {}", cfg.kind, cfg.n)));
    }
    let spec = ModelSpec {
        kind: cfg.model,
        depth: cfg.depth.unwrap_or(cfg.d + 1),
        channels: cfg.channels.unwrap_or_else(|| auto_channels(cfg.n, cfg.d)),
        dim: cfg.d,
        init: cfg.init,
    };
    let items = (0..cfg.count)
        .into_par_iter()
        .map(|index| -> Result<SweepItem, HarnessError> {
            let mut r = rng::stream(cfg.seed, index as u64);
            let (g, h) = match cfg.kind {
                SweepKind::Random => (random_connected_graph(cfg.n, cfg.d, &mut r), random_connected_graph(cfg.n, cfg.d, &mut r)),
                SweepKind::Isomorphic => {
                    let g = random_connected_graph(cfg.n, cfg.d, &mut r);
                    let p = PermutationMap::random(cfg.n, &mut r);
                    let m = signed_motion(cfg.d, index % 2 == 1, &mut r);
                    let h = apply_rigid_motion(&apply_permutation(&g, &p)?, &m)?;
                    (g, h)
                }
                SweepKind::Disconnected => disconnected_pair(cfg.n, cfg.d, &mut r),
            };
            let isomorphic = is_geometrically_isomorphic(&g, &h, ORACLE_TOL)?.isomorphic;
            let model = spec.instantiate(rng::derive_seed(cfg.seed, index as u64), &g)?;
            Ok(SweepItem {
                index,
                edges_g: g.edge_count(),
                edges_h: h.edge_count(),
                isomorphic,
                margin: margin(&model.global(&g)?, &model.global(&h)?),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let margins: Vec<f64> = items.iter().map(|it| it.margin).collect();
    Ok(SweepReport {
        kind: cfg.kind,
        model: cfg.model,
        count: cfg.count,
        n: cfg.n,
        d: cfg.d,
        depth: spec.depth,
        channels: spec.channels,
        seed: cfg.seed,
        isomorphic_pairs: items.iter().filter(|it| it.isomorphic).count(),
        separated_non_isomorphic: items.iter().filter(|it| !it.isomorphic && it.margin > TAU_SEP).count(),
        separated_isomorphic: items.iter().filter(|it| it.isomorphic && it.margin > TAU_SEP).count(),
        equal: items.iter().filter(|it| it.margin < TAU_EQ).count(),
        ambiguous: items.iter().filter(|it| it.margin >= TAU_EQ && it.margin <= TAU_SEP).count(),
        verdict: Verdict::from_margins(&margins),
        items,
    })
}
