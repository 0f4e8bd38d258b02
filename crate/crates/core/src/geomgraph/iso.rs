use super::{GeometricGraph, GraphError, PermutationMap, RigidMotion};
use crate::linalg::{complete_orthonormal, svd, Matrix};
use crate::scalar::Real;

/// Node cap for the factorial search.
pub const MAX_ORACLE_NODES: usize = 10;

/// Outcome of the brute-force isomorphism search.
#[derive(Debug, Clone)]
pub struct IsoVerdict<T> {
    pub isomorphic: bool,
    /// `(P, m)` with `apply_rigid_motion(apply_permutation(G, P), m) ≈ H`.
    pub witness: Option<(PermutationMap, RigidMotion<T>)>,
    /// Max pointwise error of the best alignment examined; infinite when no
    /// labeling survived the combinatorial and distance pruning.
    pub residual: T,
}

/// Least-squares rigid motion (reflections allowed) taking `source[i]` onto
/// `target[i]`.
pub fn procrustes<T: Real>(source: &[&[T]], target: &[&[T]]) -> RigidMotion<T> {
    let n = source.len();
    assert_eq!(n, target.len());
    assert!(n > 0);
    let d = source[0].len();
    let centroid = |pts: &[&[T]]| -> Vec<T> {
        let inv = T::one() / T::of(n as f64);
        (0..d).map(|k| pts.iter().map(|p| p[k]).sum::<T>() * inv).collect()
    };
    let (cx, cy) = (centroid(source), centroid(target));
    let mut cov = Matrix::zeros(d, d);
    for (x, y) in source.iter().zip(target) {
        for a in 0..d {
            for b in 0..d {
                cov[(a, b)] = cov[(a, b)] + (y[a] - cy[a]) * (x[b] - cx[b]);
            }
        }
    }
    let dec = svd(&cov).expect("finite covariance");
    let u = complete_orthonormal(&dec.u);
    let rotation = &u * &dec.v.transpose();
    let rotated = rotation.mul_vec(&cx);
    let translation = cy.iter().zip(&rotated).map(|(&a, &b)| a - b).collect();
    RigidMotion::new(rotation, translation).expect("product of orthogonal factors is orthogonal")
}

struct Search<'a, T> {
    g: &'a GeometricGraph<T>,
    h: &'a GeometricGraph<T>,
    tol: T,
    assignment: Vec<usize>,
    used: Vec<bool>,
    best: T,
}

impl<T: Real> Search<'_, T> {
    fn features_match(&self, a: Option<&[T]>, b: Option<&[T]>) -> bool {
        match (a, b) {
            (None, None) => true,
            (Some(a), Some(b)) => a.len() == b.len() && a.iter().zip(b).all(|(&x, &y)| (x - y).abs() <= self.tol),
            _ => false,
        }
    }

    fn compatible(&self, i: usize, target: usize) -> bool {
        let (g, h) = (self.g, self.h);
        if g.degree(i) != h.degree(target) || !self.features_match(g.node_feature(i), h.node_feature(target)) {
            return false;
        }
        let slack = self.tol + self.tol;
        for (j, &pj) in self.assignment.iter().enumerate() {
            let adjacent = g.has_edge(i, j);
            if adjacent != h.has_edge(target, pj) {
                return false;
            }
            if adjacent {
                let fg = g.edge_features().and_then(|e| e.get(i, j));
                let fh = h.edge_features().and_then(|e| e.get(target, pj));
                if !self.features_match(fg, fh) {
                    return false;
                }
            }
            if (g.distance(i, j) - h.distance(target, pj)).abs() > slack {
                return false;
            }
        }
        true
    }

    fn run(&mut self) -> Option<(PermutationMap, RigidMotion<T>)> {
        let i = self.assignment.len();
        if i == self.g.n() {
            return self.align();
        }
        for target in 0..self.h.n() {
            if self.used[target] || !self.compatible(i, target) {
                continue;
            }
            self.used[target] = true;
            self.assignment.push(target);
            if let Some(w) = self.run() {
                return Some(w);
            }
            self.assignment.pop();
            self.used[target] = false;
        }
        None
    }

    fn align(&mut self) -> Option<(PermutationMap, RigidMotion<T>)> {
        let n = self.g.n();
        let source: Vec<&[T]> = (0..n).map(|i| self.g.position(i)).collect();
        let target: Vec<&[T]> = self.assignment.iter().map(|&j| self.h.position(j)).collect();
        let motion = procrustes(&source, &target);
        let residual = source
            .iter()
            .zip(&target)
            .map(|(x, y)| motion.apply_point(x).iter().zip(y.iter()).fold(T::zero(), |acc, (&a, &b)| acc + (a - b) * (a - b)).sqrt())
            .fold(T::zero(), T::max);
        self.best = self.best.min(residual);
        if residual <= self.tol {
            let p = PermutationMap::new(self.assignment.clone()).expect("search builds bijections");
            Some((p.inverse(), motion))
        } else {
            None
        }
    }
}

/// Exhaustive search over adjacency-preserving labelings, each aligned by
/// orthogonal Procrustes. Intended as test ground truth for `n ≤ 10`.
pub fn is_geometrically_isomorphic<T: Real>(g: &GeometricGraph<T>, h: &GeometricGraph<T>, tol: T) -> Result<IsoVerdict<T>, GraphError> {
    for n in [g.n(), h.n()] {
        if n > MAX_ORACLE_NODES {
            return Err(GraphError::TooLarge { n, max: MAX_ORACLE_NODES });
        }
    }
    if g.d() != h.d() {
        return Err(GraphError::DimensionMismatch { expected: g.d(), got: h.d() });
    }
    let not_iso = IsoVerdict { isomorphic: false, witness: None, residual: T::infinity() };
    if g.n() != h.n() || g.edge_count() != h.edge_count() {
        return Ok(not_iso);
    }
    let mut degrees_g: Vec<usize> = (0..g.n()).map(|i| g.degree(i)).collect();
    let mut degrees_h: Vec<usize> = (0..h.n()).map(|i| h.degree(i)).collect();
    degrees_g.sort_unstable();
    degrees_h.sort_unstable();
    if degrees_g != degrees_h {
        return Ok(not_iso);
    }
    let mut search = Search { g, h, tol, assignment: Vec::with_capacity(g.n()), used: vec![false; h.n()], best: T::infinity() };
    let witness = search.run();
    Ok(IsoVerdict { isomorphic: witness.is_some(), residual: search.best, witness })
}
