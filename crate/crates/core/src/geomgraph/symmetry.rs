use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;

use super::{ordered, GeometricGraph, GraphError, ORTHO_TOL};
use crate::linalg::{dot, norm, Matrix};
use crate::rng;
use crate::scalar::Real;

/// An element of `E(d)`: `x ↦ Q x + t` with `Q ∈ O(d)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RigidMotion<T> {
    rotation: Matrix<T>,
    translation: Vec<T>,
}

fn ortho_tol<T: Real>(d: usize) -> T {
    T::of(ORTHO_TOL).max(T::epsilon() * T::of(16.0 * d as f64))
}

impl<T: Real> RigidMotion<T> {
    pub fn new(rotation: Matrix<T>, translation: Vec<T>) -> Result<Self, GraphError> {
        let d = translation.len();
        if rotation.rows() != d || rotation.cols() != d {
            return Err(GraphError::DimensionMismatch { expected: d, got: rotation.rows() });
        }
        let defect = rotation.orthogonality_defect();
        if !(defect <= ortho_tol::<T>(d)) {
            return Err(GraphError::InvalidRotation(format!("|QᵀQ - I| = {defect}")));
        }
        Ok(Self { rotation, translation })
    }

    pub fn identity(d: usize) -> Self {
        Self { rotation: Matrix::identity(d), translation: vec![T::zero(); d] }
    }

    pub fn translation_only(t: Vec<T>) -> Self {
        Self { rotation: Matrix::identity(t.len()), translation: t }
    }

    /// Counter-clockwise planar rotation by `angle` radians.
    pub fn rotation_2d(angle: T) -> Self {
        let (s, c) = angle.sin_cos();
        Self { rotation: Matrix::from_row_major(2, 2, vec![c, -s, s, c]), translation: vec![T::zero(); 2] }
    }

    /// Haar-distributed orthogonal matrix (either determinant sign) and a
    /// translation uniform in `[-1, 1]^d`.
    pub fn random<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Self {
        let rotation = random_orthogonal(d, rng);
        let translation = rng::symmetric_unit_vec(rng, d);
        Self { rotation, translation }
    }

    /// Composes with the reflection that negates the first coordinate, which
    /// flips the sign of `det Q`.
    pub fn reflected(mut self) -> Self {
        let d = self.dim();
        for i in 0..d {
            self.rotation[(i, 0)] = -self.rotation[(i, 0)];
        }
        self
    }

    pub fn dim(&self) -> usize {
        self.translation.len()
    }

    pub fn rotation(&self) -> &Matrix<T> {
        &self.rotation
    }

    pub fn translation(&self) -> &[T] {
        &self.translation
    }

    pub fn determinant(&self) -> T {
        determinant(&self.rotation)
    }

    pub fn apply_point(&self, x: &[T]) -> Vec<T> {
        self.rotation.mul_vec(x).into_iter().zip(&self.translation).map(|(a, &b)| a + b).collect()
    }

    /// `Q v`, ignoring the translation.
    pub fn rotate(&self, v: &[T]) -> Vec<T> {
        self.rotation.mul_vec(v)
    }
}

/// Haar-random `O(d)` element via Gram-Schmidt on a Gaussian matrix.
pub fn random_orthogonal<T: Real, R: Rng + ?Sized>(d: usize, rng: &mut R) -> Matrix<T> {
    loop {
        let mut cols: Vec<Vec<T>> = Vec::with_capacity(d);
        let mut degenerate = false;
        for _ in 0..d {
            let mut v: Vec<T> = (0..d).map(|_| rng::standard_normal(rng)).collect();
            for c in &cols {
                let proj = dot(&v, c);
                for (vi, &ci) in v.iter_mut().zip(c) {
                    *vi = *vi - proj * ci;
                }
            }
            let len = norm(&v);
            if len < T::of(1e-6) {
                degenerate = true;
                break;
            }
            cols.push(v.into_iter().map(|x| x / len).collect());
        }
        if degenerate {
            continue;
        }
        let mut q = Matrix::zeros(d, d);
        for (j, c) in cols.iter().enumerate() {
            for i in 0..d {
                q[(i, j)] = c[i];
            }
        }
        return q;
    }
}

/// Determinant by Gaussian elimination with partial pivoting.
pub(crate) fn determinant<T: Real>(m: &Matrix<T>) -> T {
    let n = m.rows();
    let mut a = m.clone();
    let mut det = T::one();
    for col in 0..n {
        let pivot = (col..n).max_by(|&x, &y| a[(x, col)].abs().partial_cmp(&a[(y, col)].abs()).expect("finite")).expect("non-empty range");
        if a[(pivot, col)] == T::zero() {
            return T::zero();
        }
        if pivot != col {
            for j in 0..n {
                let tmp = a[(col, j)];
                a[(col, j)] = a[(pivot, j)];
                a[(pivot, j)] = tmp;
            }
            det = -det;
        }
        det = det * a[(col, col)];
        for r in (col + 1)..n {
            let factor = a[(r, col)] / a[(col, col)];
            for j in col..n {
                a[(r, j)] = a[(r, j)] - factor * a[(col, j)];
            }
        }
    }
    det
}

/// Node relabeling: node `i` of the image carries node `mapping[i]` of the source.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PermutationMap {
    mapping: Vec<usize>,
}

impl PermutationMap {
    pub fn new(mapping: Vec<usize>) -> Result<Self, GraphError> {
        let n = mapping.len();
        let mut seen = vec![false; n];
        for &m in &mapping {
            if m >= n || seen[m] {
                return Err(GraphError::InvalidPermutation(format!("{mapping:?} is not a bijection on 0..{n}")));
            }
            seen[m] = true;
        }
        Ok(Self { mapping })
    }

    pub fn identity(n: usize) -> Self {
        Self { mapping: (0..n).collect() }
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut mapping: Vec<usize> = (0..n).collect();
        mapping.shuffle(rng);
        Self { mapping }
    }

    pub fn len(&self) -> usize {
        self.mapping.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mapping.is_empty()
    }

    pub fn get(&self, i: usize) -> usize {
        self.mapping[i]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.mapping
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.mapping.len()];
        for (i, &m) in self.mapping.iter().enumerate() {
            inv[m] = i;
        }
        Self { mapping: inv }
    }
}

/// `x_i ↦ Q x_i + t` on every node; adjacency and features are untouched.
pub fn apply_rigid_motion<T: Real>(g: &GeometricGraph<T>, m: &RigidMotion<T>) -> Result<GeometricGraph<T>, GraphError> {
    if m.dim() != g.d() {
        return Err(GraphError::DimensionMismatch { expected: g.d(), got: m.dim() });
    }
    let positions = (0..g.n()).flat_map(|i| m.apply_point(g.position(i))).collect();
    g.with_positions_flat(positions)
}

/// `P G = (P A Pᵀ, P X)`: node `i` of the result is node `p(i)` of `g`.
pub fn apply_permutation<T: Real>(g: &GeometricGraph<T>, p: &PermutationMap) -> Result<GeometricGraph<T>, GraphError> {
    let n = g.n();
    if p.len() != n {
        return Err(GraphError::SizeMismatch { expected: n, got: p.len() });
    }
    let inv = p.inverse();
    let neighbors: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            let mut ns: Vec<usize> = g.neighbors(p.get(i)).iter().map(|&b| inv.get(b)).collect();
            ns.sort_unstable();
            ns
        })
        .collect();
    let positions = (0..n).flat_map(|i| g.position(p.get(i)).to_vec()).collect();
    let node_features =
        g.node_features_raw().map(|(dim, _)| (*dim, (0..n).flat_map(|i| g.node_feature(p.get(i)).unwrap().to_vec()).collect()));
    let edge_features = g.edge_features().map(|ef| {
        let values: BTreeMap<_, _> = ef.iter().map(|((a, b), v)| (ordered(inv.get(a), inv.get(b)), v.to_vec())).collect();
        GeometricGraph::edge_features_from_map(ef.dim(), values)
    });
    Ok(GeometricGraph::from_parts(g.d(), neighbors, positions, node_features, edge_features))
}
