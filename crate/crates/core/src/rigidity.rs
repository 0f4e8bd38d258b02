//! Numerical rigidity: rigidity matrices, randomized generic (global)
//! rigidity tests and distance equivalence.
//!
//! Generic rigidity compares the rank of the rigidity matrix at random
//! positions against `n d − d(d+1)/2`. Generic global rigidity (for
//! `n ≥ d + 2`) additionally asks that a random equilibrium stress `ω`, drawn
//! from the left null space of the rigidity matrix, gives a stress matrix of
//! rank `n − d − 1`. Smaller graphs are globally rigid exactly when complete.
//! Both tests can only err on a measure-zero set of positions, so every trial
//! must agree; disagreement is reported as [`RigidityError::Inconclusive`].

use serde::Serialize;
use thiserror::Error;

use crate::geomgraph::{is_connected, power_graph, sample_positions_with, GeometricGraph, GraphError};
use crate::linalg::{self, LinalgError, Matrix, DEFAULT_RANK_TOL};
use crate::rng;
use crate::scalar::Real;

pub const DEFAULT_TRIALS: usize = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RigidityError {
    #[error("graph has no edges")]
    NoEdges,
    #[error("edge sets differ")]
    EdgeSetMismatch,
    #[error("graph is disconnected")]
    Disconnected,
    #[error("{what}: {positive} of {trials} trials said yes")]
    Inconclusive { what: &'static str, positive: usize, trials: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Outcome of the randomized rigidity tests. Ranks are the maxima over
/// trials.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RigidityReport {
    pub n: usize,
    pub d: usize,
    pub rigidity_rank: usize,
    pub rigidity_rank_expected: usize,
    pub stress_rank: Option<usize>,
    pub stress_rank_expected: Option<usize>,
    pub generically_rigid: bool,
    pub generically_globally_rigid: bool,
    pub trials: usize,
    pub seed: u64,
}

/// Relative singular-value cutoff: `1e-8`, raised for low-precision scalars.
pub fn rank_tolerance<T: Real>() -> T {
    T::of(DEFAULT_RANK_TOL).max(T::epsilon() * T::of(1000.0))
}

/// `|E| × n d` matrix with one row per edge `(i, j)`, `i < j`, in
/// lexicographic order: `x_i − x_j` in block `i`, `x_j − x_i` in block `j`.
pub fn rigidity_matrix<T: Real>(g: &GeometricGraph<T>) -> Result<Matrix<T>, RigidityError> {
    let edges = g.edges();
    if edges.is_empty() {
        return Err(RigidityError::NoEdges);
    }
    let d = g.d();
    let mut m = Matrix::zeros(edges.len(), g.n() * d);
    for (row, &(i, j)) in edges.iter().enumerate() {
        for k in 0..d {
            let diff = g.position(i)[k] - g.position(j)[k];
            m[(row, i * d + k)] = diff;
            m[(row, j * d + k)] = -diff;
        }
    }
    Ok(m)
}

/// Number of singular values above `rel_tol` times the largest.
pub fn numerical_rank<T: Real>(m: &Matrix<T>, rel_tol: T) -> Result<usize, RigidityError> {
    m.check_finite()?;
    Ok(linalg::numerical_rank(m, rel_tol)?)
}

/// Rank of the rigidity matrix of a generic infinitesimally rigid framework:
/// `n d − d(d+1)/2` for `n ≥ d + 1`, and `n(n−1)/2` (the simplex) otherwise.
pub fn expected_rigidity_rank(n: usize, d: usize) -> usize {
    if n > d {
        n * d - d * (d + 1) / 2
    } else {
        n * (n - 1) / 2
    }
}

fn is_complete<T: Real>(a: &GeometricGraph<T>) -> bool {
    let n = a.n();
    a.edge_count() == n * (n - 1) / 2
}

/// `a` with fresh uniform positions in `[-1, 1]^d` from stream `trial` of
/// `seed`; the input positions only contribute the topology.
fn generic_realization<T: Real>(a: &GeometricGraph<T>, d: usize, seed: u64, trial: usize) -> Result<GeometricGraph<T>, RigidityError> {
    let pts = sample_positions_with::<T, _>(&mut rng::stream(seed, trial as u64), a.n(), d);
    Ok(GeometricGraph::build(&a.edges(), &pts)?)
}

fn rigidity_rank_of<T: Real>(g: &GeometricGraph<T>) -> Result<usize, RigidityError> {
    if g.edge_count() == 0 {
        return Ok(0);
    }
    numerical_rank(&rigidity_matrix(g)?, rank_tolerance())
}

/// Stress matrix `Ω` with `Ω_ij = −ω_ij` on edges and `Ω_ii = Σ_j ω_ij`.
pub fn stress_matrix<T: Real>(g: &GeometricGraph<T>, omega: &[T]) -> Matrix<T> {
    let mut m = Matrix::zeros(g.n(), g.n());
    for (&(i, j), &w) in g.edges().iter().zip(omega) {
        m[(i, j)] = -w;
        m[(j, i)] = -w;
        m[(i, i)] = m[(i, i)] + w;
        m[(j, j)] = m[(j, j)] + w;
    }
    m
}

/// Rank of the stress matrix of one random unit equilibrium stress, or 0
/// when the framework carries no stress.
fn random_stress_rank<T: Real>(g: &GeometricGraph<T>, seed: u64, trial: usize) -> Result<usize, RigidityError> {
    let tol = rank_tolerance();
    let basis = linalg::left_null_space(&rigidity_matrix(g)?, tol)?;
    if basis.cols() == 0 {
        return Ok(0);
    }
    // A separate stream family from the positions keeps the two draws
    // independent.
    let mut r = rng::stream(seed ^ 0x5354_5245_5353, trial as u64);
    let coeffs: Vec<T> = (0..basis.cols()).map(|_| rng::standard_normal(&mut r)).collect();
    let mut omega = basis.mul_vec(&coeffs);
    let len = linalg::norm(&omega);
    omega.iter_mut().for_each(|w| *w = *w / len);
    Ok(linalg::numerical_rank(&stress_matrix(g, &omega), tol)?)
}

fn unanimous(what: &'static str, verdicts: &[bool]) -> Result<bool, RigidityError> {
    let positive = verdicts.iter().filter(|&&v| v).count();
    if positive == 0 || positive == verdicts.len() {
        Ok(positive > 0)
    } else {
        Err(RigidityError::Inconclusive { what, positive, trials: verdicts.len() })
    }
}

fn check_args(d: usize, trials: usize) -> Result<(), RigidityError> {
    if trials == 0 || d == 0 {
        return Err(RigidityError::InvalidArgument(format!("need d >= 1 and trials >= 1 (got d = {d}, trials = {trials})")));
    }
    Ok(())
}

/// Randomized generic rigidity test of the topology of `a` in `R^d`.
pub fn is_generically_rigid<T: Real>(a: &GeometricGraph<T>, d: usize, seed: u64, trials: usize) -> Result<RigidityReport, RigidityError> {
    check_args(d, trials)?;
    let (n, expected) = (a.n(), expected_rigidity_rank(a.n(), d));
    let mut ranks = Vec::with_capacity(trials);
    for t in 0..trials {
        ranks.push(rigidity_rank_of(&generic_realization(a, d, seed, t)?)?);
    }
    let verdicts: Vec<bool> = ranks.iter().map(|&r| r == expected).collect();
    let rigid = unanimous("generic rigidity", &verdicts)?;
    Ok(RigidityReport {
        n,
        d,
        rigidity_rank: ranks.into_iter().max().unwrap_or(0),
        rigidity_rank_expected: expected,
        stress_rank: None,
        stress_rank_expected: None,
        generically_rigid: rigid,
        generically_globally_rigid: false,
        trials,
        seed,
    })
}

/// Randomized generic global rigidity test of the topology of `a` in `R^d`.
pub fn is_generically_globally_rigid<T: Real>(
    a: &GeometricGraph<T>,
    d: usize,
    seed: u64,
    trials: usize,
) -> Result<RigidityReport, RigidityError> {
    let mut report = is_generically_rigid(a, d, seed, trials)?;
    let n = a.n();
    if n <= d + 1 {
        report.generically_globally_rigid = is_complete(a);
        return Ok(report);
    }
    let expected = n - d - 1;
    report.stress_rank_expected = Some(expected);
    if !report.generically_rigid {
        return Ok(report);
    }
    let mut ranks = Vec::with_capacity(trials);
    for t in 0..trials {
        ranks.push(random_stress_rank(&generic_realization(a, d, seed, t)?, seed, t)?);
    }
    let verdicts: Vec<bool> = ranks.iter().map(|&r| r == expected).collect();
    report.generically_globally_rigid = unanimous("generic global rigidity", &verdicts)?;
    report.stress_rank = ranks.into_iter().max();
    Ok(report)
}

/// True iff `g` and `h` have the same edge set and every edge has the same
/// length in both, within `tol`.
pub fn distance_equivalent<T: Real>(g: &GeometricGraph<T>, h: &GeometricGraph<T>, tol: T) -> Result<bool, RigidityError> {
    if g.n() != h.n() || g.edges() != h.edges() {
        return Err(RigidityError::EdgeSetMismatch);
    }
    Ok(g.edges().into_iter().all(|(i, j)| (g.distance(i, j) - h.distance(i, j)).abs() <= tol))
}

/// Smallest `k ≥ 1` for which `A^k` is generically globally rigid in `R^d`.
/// For connected `A` this is at most `d + 1`.
pub fn minimal_globally_rigid_power<T: Real>(a: &GeometricGraph<T>, d: usize, seed: u64) -> Result<usize, RigidityError> {
    if !is_connected(a) {
        return Err(RigidityError::Disconnected);
    }
    // A^(n−1) is complete, so the loop always terminates.
    for k in 1..a.n().max(2) {
        if is_generically_globally_rigid(&power_graph(a, k), d, seed, DEFAULT_TRIALS)?.generically_globally_rigid {
            return Ok(k);
        }
    }
    Ok(a.n().max(2) - 1)
}
