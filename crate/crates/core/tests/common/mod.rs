//! Shared fixtures: the golden graph suite, an independent nalgebra rank
//! oracle, and golden-file helpers.
#![allow(dead_code)]

use std::path::PathBuf;

use geosep::geomgraph::{power_graph, sample_positions_with};
use geosep::{rng, Graph};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

/// Seed of the golden rigidity positions (trial 0 of this seed).
pub const GOLDEN_SEED: u64 = 0;
/// Relative singular-value cutoff shared with the library.
pub const RANK_TOL: f64 = 1e-8;

pub fn golden_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join("golden").join(name)
}

/// Set `GEOSEP_BLESS=1` to rewrite golden files from the oracles.
pub fn blessing() -> bool {
    std::env::var_os("GEOSEP_BLESS").is_some()
}

pub fn topology(n: usize, edges: &[(usize, usize)]) -> Graph {
    Graph::build(edges, &vec![vec![0.0]; n]).unwrap()
}

pub fn path(n: usize) -> Graph {
    topology(n, &(1..n).map(|i| (i - 1, i)).collect::<Vec<_>>())
}

pub fn cycle(n: usize) -> Graph {
    topology(n, &(0..n).map(|i| (i, (i + 1) % n)).collect::<Vec<_>>())
}

pub fn complete(n: usize) -> Graph {
    topology(n, &(0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect::<Vec<_>>())
}

/// Named topologies whose rigidity ranks are pinned in golden files.
pub fn golden_suite() -> Vec<(&'static str, Graph)> {
    vec![
        ("triangle", complete(3)),
        ("path4", path(4)),
        ("path6", path(6)),
        ("k4", complete(4)),
        ("k5", complete(5)),
        ("k6", complete(6)),
        ("cycle5", cycle(5)),
        ("cycle6", cycle(6)),
        ("kite", topology(4, &[(0, 1), (0, 2), (1, 2), (1, 3), (2, 3)])),
        ("k33", topology(6, &[(0, 3), (0, 4), (0, 5), (1, 3), (1, 4), (1, 5), (2, 3), (2, 4), (2, 5)])),
        ("prism", topology(6, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (0, 3), (1, 4), (2, 5)])),
        ("octahedron", topology(6, &[(0, 1), (0, 2), (0, 3), (0, 4), (5, 1), (5, 2), (5, 3), (5, 4), (1, 2), (2, 3), (3, 4), (4, 1)])),
        ("path6_pow2", power_graph(&path(6), 2)),
        ("path6_pow3", power_graph(&path(6), 3)),
        ("path6_pow4", power_graph(&path(6), 4)),
        ("cycle7_pow2", power_graph(&cycle(7), 2)),
    ]
}

/// `a` placed at the positions the library uses for trial `trial` of `seed`.
pub fn realization(a: &Graph, d: usize, seed: u64, trial: u64) -> Graph {
    Graph::build(&a.edges(), &sample_positions_with(&mut rng::stream(seed, trial), a.n(), d)).unwrap()
}

/// Rigidity matrix assembled independently of the library, as nalgebra.
pub fn oracle_rigidity_matrix(g: &Graph) -> DMatrix<f64> {
    let (n, d) = (g.n(), g.d());
    let edges = g.edges();
    let mut m = DMatrix::zeros(edges.len(), n * d);
    for (row, (i, j)) in edges.into_iter().enumerate() {
        for k in 0..d {
            let diff = g.position(i)[k] - g.position(j)[k];
            m[(row, i * d + k)] = diff;
            m[(row, j * d + k)] = -diff;
        }
    }
    m
}

pub fn oracle_rank(m: &DMatrix<f64>) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let largest = sv.iter().cloned().fold(0.0, f64::max);
    if largest == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_TOL * largest).count()
}

/// Stress-matrix rank of a random equilibrium stress, computed with
/// nalgebra: the left null space comes from the full `U` of the rigidity
/// matrix padded to a square.
pub fn oracle_stress_rank(g: &Graph, seed: u64) -> usize {
    let r = oracle_rigidity_matrix(g);
    let m = r.nrows();
    let cols = r.ncols().max(m);
    let mut padded = DMatrix::zeros(m, cols);
    padded.view_mut((0, 0), (m, r.ncols())).copy_from(&r);
    let svd = padded.svd(true, false);
    let u = svd.u.unwrap();
    let largest = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let null: Vec<usize> = (0..svd.singular_values.len()).filter(|&k| svd.singular_values[k] <= RANK_TOL * largest).collect();
    if null.is_empty() {
        return 0;
    }
    let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
    let mut omega = nalgebra::DVector::zeros(m);
    for &k in &null {
        let z: f64 = StandardNormal.sample(&mut rng);
        omega += u.column(k) * z;
    }
    omega /= omega.norm();
    let n = g.n();
    let mut stress = DMatrix::zeros(n, n);
    for (e, (i, j)) in g.edges().into_iter().enumerate() {
        stress[(i, j)] -= omega[e];
        stress[(j, i)] -= omega[e];
        stress[(i, i)] += omega[e];
        stress[(j, j)] += omega[e];
    }
    oracle_rank(&stress)
}

/// One pinned rigidity record, computed by the nalgebra oracle.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct GoldenRanks {
    pub n: usize,
    pub d: usize,
    pub edges: usize,
    pub rigidity_rank: usize,
    pub rigidity_rank_expected: usize,
    pub stress_rank: Option<usize>,
    pub generically_rigid: bool,
    pub generically_globally_rigid: bool,
}

pub type GoldenTable = std::collections::BTreeMap<String, GoldenRanks>;

pub const RIGIDITY_GOLDEN: &str = "rigidity_ranks.json";

/// Oracle verdicts at the trial-0 positions of [`GOLDEN_SEED`].
pub fn oracle_entry(a: &Graph, d: usize) -> GoldenRanks {
    let n = a.n();
    let g = realization(a, d, GOLDEN_SEED, 0);
    let rigidity_rank = if g.edge_count() == 0 { 0 } else { oracle_rank(&oracle_rigidity_matrix(&g)) };
    let rigidity_rank_expected = if n > d { n * d - d * (d + 1) / 2 } else { n * (n - 1) / 2 };
    let generically_rigid = rigidity_rank == rigidity_rank_expected;
    let (stress_rank, generically_globally_rigid) = if n <= d + 1 {
        (None, a.edge_count() == n * (n - 1) / 2)
    } else if generically_rigid {
        let s = oracle_stress_rank(&g, GOLDEN_SEED);
        (Some(s), s == n - d - 1)
    } else {
        (None, false)
    };
    GoldenRanks {
        n,
        d,
        edges: a.edge_count(),
        rigidity_rank,
        rigidity_rank_expected,
        stress_rank,
        generically_rigid,
        generically_globally_rigid,
    }
}

pub fn oracle_table() -> GoldenTable {
    let mut table = GoldenTable::new();
    for (name, a) in golden_suite() {
        for d in [2, 3] {
            table.insert(format!("{name}/d{d}"), oracle_entry(&a, d));
        }
    }
    table
}

pub fn load_golden_table() -> GoldenTable {
    let text = std::fs::read_to_string(golden_path(RIGIDITY_GOLDEN)).expect("golden rigidity file (bless with GEOSEP_BLESS=1)");
    serde_json::from_str(&text).unwrap()
}

pub fn write_golden(name: &str, text: &str) {
    let path = golden_path(name);
    std::fs::create_dir_all(path.parent().unwrap()).unwrap();
    std::fs::write(path, text).unwrap();
}
