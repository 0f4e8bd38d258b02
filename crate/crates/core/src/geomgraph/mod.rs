//! Geometric graphs: a combinatorial graph together with a position in
//! `R^d` for every node, optionally carrying node and edge features.
//!
//! Symmetries are node permutations composed with rigid motions (`O(d)`
//! plus translations). This module also owns the hop-distance machinery
//! (k-hop multisets, power graphs, components) and a brute-force
//! geometric-isomorphism oracle used as ground truth by the tests.

mod hops;
pub mod io;
mod iso;
mod symmetry;

use std::collections::BTreeMap;

use rand::Rng;
use thiserror::Error;

use crate::rng;
use crate::scalar::Real;

pub use hops::{connected_components, diameter, hop_distances, is_connected, is_k_connected, khop_distance_multisets, power_graph};
pub use iso::{is_geometrically_isomorphic, procrustes, IsoVerdict, MAX_ORACLE_NODES};
pub use symmetry::{apply_permutation, apply_rigid_motion, PermutationMap, RigidMotion};

/// Absolute tolerance for "equal" features and coordinates.
pub const EQ_TOL: f64 = 1e-9;
/// Tolerance on `QᵀQ = I` for rigid motions.
pub const ORTHO_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("node index {index} out of range for {n} nodes")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("self loop at node {0}")]
    SelfLoop(usize),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("edge features of ({0}, {1}) and ({1}, {0}) differ")]
    AsymmetricEdgeFeature(usize, usize),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("size mismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("invalid rotation: {0}")]
    InvalidRotation(String),
    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),
    #[error("isomorphism oracle limited to {max} nodes, got {n}")]
    TooLarge { n: usize, max: usize },
}

/// Per-edge feature vectors, stored once per undirected edge under `(min, max)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeFeatures<T> {
    dim: usize,
    values: BTreeMap<(usize, usize), Vec<T>>,
}

impl<T: Real> EdgeFeatures<T> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> Option<&[T]> {
        self.values.get(&ordered(i, j)).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), &[T])> {
        self.values.iter().map(|(&k, v)| (k, v.as_slice()))
    }
}

/// A geometric graph `(A, X)`, optionally featured `(A, X, F, E)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometricGraph<T> {
    d: usize,
    neighbors: Vec<Vec<usize>>,
    positions: Vec<T>,
    node_features: Option<(usize, Vec<T>)>,
    edge_features: Option<EdgeFeatures<T>>,
}

#[inline]
fn ordered(i: usize, j: usize) -> (usize, usize) {
    if i < j {
        (i, j)
    } else {
        (j, i)
    }
}

impl<T: Real> GeometricGraph<T> {
    /// Builds a graph from an undirected edge list and one position row per
    /// node. Edges may be given in either orientation.
    pub fn build(edges: &[(usize, usize)], positions: &[Vec<T>]) -> Result<Self, GraphError> {
        let d = positions.first().map(Vec::len).ok_or_else(|| GraphError::ShapeMismatch("graph needs at least one node".into()))?;
        if let Some((i, row)) = positions.iter().enumerate().find(|(_, r)| r.len() != d) {
            return Err(GraphError::ShapeMismatch(format!("position row {i} has length {}, expected {d}", row.len())));
        }
        Self::from_flat(d, positions.iter().flatten().copied().collect(), edges)
    }

    /// Builds a graph from row-major positions of dimension `d`.
    pub fn from_flat(d: usize, positions: Vec<T>, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        if d == 0 || positions.len() % d != 0 || positions.is_empty() {
            return Err(GraphError::ShapeMismatch(format!("{} coordinates do not form rows of dimension {d}", positions.len())));
        }
        if positions.iter().any(|x| !x.is_finite()) {
            return Err(GraphError::NonFinite("positions"));
        }
        let n = positions.len() / d;
        let mut neighbors = vec![Vec::new(); n];
        for &(i, j) in edges {
            for index in [i, j] {
                if index >= n {
                    return Err(GraphError::IndexOutOfRange { index, n });
                }
            }
            if i == j {
                return Err(GraphError::SelfLoop(i));
            }
            if neighbors[i].contains(&j) {
                let (a, b) = ordered(i, j);
                return Err(GraphError::DuplicateEdge(a, b));
            }
            neighbors[i].push(j);
            neighbors[j].push(i);
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        Ok(Self { d, neighbors, positions, node_features: None, edge_features: None })
    }

    /// Attaches one feature row per node.
    pub fn with_node_features(mut self, features: &[Vec<T>]) -> Result<Self, GraphError> {
        if features.len() != self.n() {
            return Err(GraphError::ShapeMismatch(format!("{} node feature rows for {} nodes", features.len(), self.n())));
        }
        let dim = features[0].len();
        if features.iter().any(|r| r.len() != dim) {
            return Err(GraphError::ShapeMismatch("ragged node features".into()));
        }
        let flat: Vec<T> = features.iter().flatten().copied().collect();
        if flat.iter().any(|x| !x.is_finite()) {
            return Err(GraphError::NonFinite("node features"));
        }
        self.node_features = Some((dim, flat));
        Ok(self)
    }

    /// Attaches edge features. Every edge needs a value; listing both
    /// orientations is allowed if they agree.
    pub fn with_edge_features(mut self, features: &[((usize, usize), Vec<T>)]) -> Result<Self, GraphError> {
        let dim = features.first().map_or(0, |(_, v)| v.len());
        let mut values: BTreeMap<(usize, usize), Vec<T>> = BTreeMap::new();
        for ((i, j), v) in features {
            let (i, j) = (*i, *j);
            let n = self.n();
            for index in [i, j] {
                if index >= n {
                    return Err(GraphError::IndexOutOfRange { index, n });
                }
            }
            if !self.has_edge(i, j) {
                return Err(GraphError::ShapeMismatch(format!("edge feature on non-edge ({i}, {j})")));
            }
            if v.len() != dim {
                return Err(GraphError::ShapeMismatch("ragged edge features".into()));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(GraphError::NonFinite("edge features"));
            }
            let key = ordered(i, j);
            match values.get(&key) {
                Some(existing) if existing != v => return Err(GraphError::AsymmetricEdgeFeature(key.0, key.1)),
                Some(_) => {}
                None => {
                    values.insert(key, v.clone());
                }
            }
        }
        if values.len() != self.edge_count() {
            return Err(GraphError::ShapeMismatch(format!("{} edge features for {} edges", values.len(), self.edge_count())));
        }
        self.edge_features = Some(EdgeFeatures { dim, values });
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.neighbors.len()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Sorted neighbor list of node `i`.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i < self.n() && self.neighbors[i].binary_search(&j).is_ok()
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Undirected edges `(i, j)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.neighbors.iter().enumerate().flat_map(|(i, ns)| ns.iter().filter(move |&&j| j > i).map(move |&j| (i, j))).collect()
    }

    pub fn position(&self, i: usize) -> &[T] {
        &self.positions[i * self.d..(i + 1) * self.d]
    }

    pub fn positions_flat(&self) -> &[T] {
        &self.positions
    }

    pub fn positions(&self) -> Vec<Vec<T>> {
        self.positions.chunks(self.d).map(<[T]>::to_vec).collect()
    }

    pub fn node_feature_dim(&self) -> Option<usize> {
        self.node_features.as_ref().map(|(dim, _)| *dim)
    }

    pub fn node_feature(&self, i: usize) -> Option<&[T]> {
        self.node_features.as_ref().map(|(dim, f)| &f[i * dim..(i + 1) * dim])
    }

    pub fn edge_features(&self) -> Option<&EdgeFeatures<T>> {
        self.edge_features.as_ref()
    }

    pub fn has_features(&self) -> bool {
        self.node_features.is_some() || self.edge_features.is_some()
    }

    /// `‖x_i − x_j‖`.
    pub fn distance(&self, i: usize, j: usize) -> T {
        self.position(i).iter().zip(self.position(j)).fold(T::zero(), |acc, (&a, &b)| acc + (a - b) * (a - b)).sqrt()
    }

    /// Same graph with new positions (features kept).
    pub fn with_positions_flat(&self, positions: Vec<T>) -> Result<Self, GraphError> {
        if positions.len() != self.positions.len() {
            return Err(GraphError::SizeMismatch { expected: self.positions.len(), got: positions.len() });
        }
        if positions.iter().any(|x| !x.is_finite()) {
            return Err(GraphError::NonFinite("positions"));
        }
        Ok(Self { positions, ..self.clone() })
    }

    /// Graph with identical adjacency, positions and node features but no
    /// edge features.
    pub fn without_edge_features(&self) -> Self {
        Self { edge_features: None, ..self.clone() }
    }

    pub(crate) fn from_parts(
        d: usize,
        neighbors: Vec<Vec<usize>>,
        positions: Vec<T>,
        node_features: Option<(usize, Vec<T>)>,
        edge_features: Option<EdgeFeatures<T>>,
    ) -> Self {
        Self { d, neighbors, positions, node_features, edge_features }
    }

    pub(crate) fn node_features_raw(&self) -> Option<&(usize, Vec<T>)> {
        self.node_features.as_ref()
    }

    pub(crate) fn edge_features_from_map(dim: usize, values: BTreeMap<(usize, usize), Vec<T>>) -> EdgeFeatures<T> {
        EdgeFeatures { dim, values }
    }
}

/// `n` i.i.d. uniform points in `[-1, 1]^d` from the seeded generator.
pub fn sample_generic_positions<T: Real>(n: usize, d: usize, seed: u64) -> Vec<Vec<T>> {
    sample_positions_with(&mut rng::seeded(seed), n, d)
}

pub fn sample_positions_with<T: Real, R: Rng + ?Sized>(rng: &mut R, n: usize, d: usize) -> Vec<Vec<T>> {
    (0..n).map(|_| rng::symmetric_unit_vec(rng, d)).collect()
}

/// Sorted edge lengths, one per undirected edge.
pub fn edge_distance_multiset<T: Real>(g: &GeometricGraph<T>) -> Vec<T> {
    let mut out: Vec<T> = g.edges().into_iter().map(|(i, j)| g.distance(i, j)).collect();
    sort_reals(&mut out);
    out
}

pub(crate) fn sort_reals<T: Real>(v: &mut [T]) {
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
}

/// Largest entrywise gap between two equally sized sorted lists; `None`
/// when lengths differ.
pub fn multiset_gap<T: Real>(a: &[T], b: &[T]) -> Option<T> {
    (a.len() == b.len()).then(|| a.iter().zip(b).fold(T::zero(), |m, (&x, &y)| m.max((x - y).abs())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(rows: &[[f64; 2]]) -> Vec<Vec<f64>> {
        rows.iter().map(|r| r.to_vec()).collect()
    }

    #[test]
    fn minimal_graph() {
        let g = GeometricGraph::build(&[(0, 1)], &p(&[[0.0, 0.0], [1.0, 0.0]])).unwrap();
        assert_eq!((g.n(), g.d(), g.edge_count()), (2, 2, 1));
    }

    #[test]
    fn self_loop_rejected() {
        let err = GeometricGraph::build(&[(0, 0)], &p(&[[0.0, 0.0]])).unwrap_err();
        assert_eq!(err, GraphError::SelfLoop(0));
    }

    #[test]
    fn triangle_degrees() {
        let g = GeometricGraph::build(&[(0, 1), (1, 2), (2, 0)], &p(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])).unwrap();
        assert!((0..3).all(|i| g.degree(i) == 2));
        assert_eq!(g.edges(), vec![(0, 1), (0, 2), (1, 2)]);
    }

    #[test]
    fn construction_errors() {
        let pts = p(&[[0.0, 0.0], [1.0, 0.0]]);
        assert_eq!(GeometricGraph::build(&[(0, 2)], &pts).unwrap_err(), GraphError::IndexOutOfRange { index: 2, n: 2 });
        assert_eq!(GeometricGraph::build(&[(0, 1), (1, 0)], &pts).unwrap_err(), GraphError::DuplicateEdge(0, 1));
        let ragged = vec![vec![0.0, 0.0], vec![1.0]];
        assert!(matches!(GeometricGraph::build(&[], &ragged), Err(GraphError::ShapeMismatch(_))));
        let nan = p(&[[0.0, f64::NAN]]);
        assert_eq!(GeometricGraph::build(&[], &nan).unwrap_err(), GraphError::NonFinite("positions"));
    }

    #[test]
    fn edge_feature_validation() {
        let g = GeometricGraph::build(&[(0, 1), (1, 2)], &p(&[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])).unwrap();
        let ok = g.clone().with_edge_features(&[((0, 1), vec![1.0]), ((1, 0), vec![1.0]), ((2, 1), vec![3.0])]).unwrap();
        assert_eq!(ok.edge_features().unwrap().get(1, 2), Some(&[3.0][..]));
        assert_eq!(
            g.clone().with_edge_features(&[((0, 1), vec![1.0]), ((1, 0), vec![2.0]), ((1, 2), vec![0.0])]).unwrap_err(),
            GraphError::AsymmetricEdgeFeature(0, 1)
        );
        assert!(matches!(g.clone().with_edge_features(&[((0, 1), vec![1.0])]), Err(GraphError::ShapeMismatch(_))));
        assert!(matches!(
            g.with_edge_features(&[((0, 2), vec![1.0]), ((0, 1), vec![1.0]), ((1, 2), vec![1.0])]),
            Err(GraphError::ShapeMismatch(_))
        ));
    }

    #[test]
    fn sampling_is_deterministic() {
        let a: Vec<Vec<f64>> = sample_generic_positions(3, 2, 7);
        let b: Vec<Vec<f64>> = sample_generic_positions(3, 2, 7);
        assert_eq!(a, b);
        assert!(a.iter().flatten().all(|x| (-1.0..=1.0).contains(x)));
    }

    #[test]
    fn sampled_pairwise_distances_are_distinct() {
        let pts: Vec<Vec<f64>> = sample_generic_positions(5, 3, 1);
        let complete: Vec<(usize, usize)> = (0..5).flat_map(|i| ((i + 1)..5).map(move |j| (i, j))).collect();
        let g = GeometricGraph::build(&complete, &pts).unwrap();
        let dists = edge_distance_multiset(&g);
        assert_eq!(dists.len(), 10);
        assert!(dists.windows(2).all(|w| w[1] - w[0] > 1e-9));
    }

    #[test]
    fn sampled_difference_pairs_are_full_rank() {
        let pts: Vec<Vec<f64>> = sample_generic_positions(4, 2, 2);
        let diffs: Vec<[f64; 2]> =
            (0..4).flat_map(|i| ((i + 1)..4).map(move |j| (i, j))).map(|(i, j)| [pts[i][0] - pts[j][0], pts[i][1] - pts[j][1]]).collect();
        for a in 0..diffs.len() {
            for b in (a + 1)..diffs.len() {
                let det = diffs[a][0] * diffs[b][1] - diffs[a][1] * diffs[b][0];
                assert!(det.abs() > 1e-9, "difference vectors {a},{b} are dependent");
            }
        }
    }

    #[test]
    fn edge_multisets() {
        let g = GeometricGraph::build(&[], &p(&[[0.0, 0.0], [1.0, 0.0]])).unwrap();
        assert!(edge_distance_multiset(&g).is_empty());
        let h = 3f64.sqrt() / 2.0;
        let tri = GeometricGraph::build(&[(0, 1), (1, 2), (0, 2)], &p(&[[0.0, 0.0], [1.0, 0.0], [0.5, h]])).unwrap();
        for x in edge_distance_multiset(&tri) {
            assert!((x - 1.0).abs() < 1e-15);
        }
    }
}
