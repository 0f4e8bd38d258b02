//! Randomized symmetry checks: global features under `S_n × E(d)` and, for
//! GenNet, layer-by-layer equivariance.

use rayon::prelude::*;
use serde::Serialize;

use super::{margin, HarnessError, Model, ModelKind, ModelSpec};
use crate::gennet::{forward_states, EquivariantState};
use crate::geomgraph::{apply_permutation, apply_rigid_motion, PermutationMap, RigidMotion};
use crate::{rng, Graph, Motion};

/// Global features must agree within this bound.
pub const GLOBAL_TOL: f64 = 1e-8;
/// Per-layer GenNet states must commute with the symmetry within this bound.
pub const LAYER_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvarianceReport {
    pub model: ModelKind,
    pub n: usize,
    pub d: usize,
    pub depth: usize,
    pub channels: usize,
    pub trials: usize,
    pub seed: u64,
    /// Trials whose orthogonal part had determinant −1.
    pub reflections: usize,
    pub max_global_deviation: f64,
    /// GenNet only.
    pub max_layer_deviation: Option<f64>,
    pub passed: bool,
}

/// `max_{i,c} ‖Q v_{p(i),c} − v'_{i,c}‖_∞`, where node `i` of the moved
/// graph is node `p(i)` of the original.
fn equivariance_gap(orig: &EquivariantState<f64>, moved: &EquivariantState<f64>, p: &PermutationMap, m: &Motion) -> f64 {
    let mut gap = 0.0f64;
    for i in 0..orig.n() {
        for c in 0..orig.channels() {
            let expected = m.rotate(orig.channel(p.get(i), c));
            gap = gap.max(margin(&expected, moved.channel(i, c)));
        }
    }
    gap
}

/// Trial `t` uses parameters from `derive_seed(seed, t)` and a permutation
/// and rigid motion from stream `(seed, t)`; odd trials use an orthogonal
/// part with determinant −1, even trials one with determinant +1.
pub fn invariance_suite(g: &Graph, spec: &ModelSpec, trials: usize, seed: u64) -> Result<InvarianceReport, HarnessError> {
    if trials == 0 {
        return Err(HarnessError::InvalidArgument("need trials >= 1".into()));
    }
    let per_trial = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<(f64, Option<f64>), HarnessError> {
            let model = spec.instantiate(rng::derive_seed(seed, t as u64), g)?;
            let mut r = rng::stream(seed, t as u64);
            let p = PermutationMap::random(g.n(), &mut r);
            let mut m = RigidMotion::random(g.d(), &mut r);
            if (m.determinant() < 0.0) != (t % 2 == 1) {
                m = m.reflected();
            }
            let moved = apply_rigid_motion(&apply_permutation(g, &p)?, &m)?;
            let global = margin(&model.global(g)?, &model.global(&moved)?);
            let layer = match &model {
                Model::Gennet(params) => {
                    let a = forward_states(g, params)?;
                    let b = forward_states(&moved, params)?;
                    Some(a.iter().zip(&b).map(|(x, y)| equivariance_gap(x, y, &p, &m)).fold(0.0, f64::max))
                }
                Model::Iggnn(_) => None,
            };
            Ok((global, layer))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let max_global_deviation = per_trial.iter().map(|t| t.0).fold(0.0, f64::max);
    let max_layer_deviation = per_trial.iter().map(|t| t.1).try_fold(0.0f64, |acc, x| x.map(|x| acc.max(x)));
    Ok(InvarianceReport {
        model: spec.kind,
        n: g.n(),
        d: g.d(),
        depth: spec.depth,
        channels: spec.channels,
        trials,
        seed,
        reflections: trials / 2,
        max_global_deviation,
        max_layer_deviation,
        passed: max_global_deviation < GLOBAL_TOL && max_layer_deviation.is_none_or(|x| x < LAYER_TOL),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geomgraph::sample_generic_positions;
    use crate::sephar::random_connected_graph;

    #[test]
    fn edgeless_graph_is_exact() {
        let g = Graph::build(&[], &sample_generic_positions(5, 3, 0)).unwrap();
        for kind in [ModelKind::Gennet, ModelKind::Iggnn] {
            let r = invariance_suite(&g, &ModelSpec::new(kind, 2, 4, 3), 4, 1).unwrap();
            assert_eq!(r.max_global_deviation, 0.0);
            assert!(r.passed);
        }
    }

    #[test]
    fn random_connected_graph_passes() {
        let g = random_connected_graph(8, 3, &mut rng::seeded(2));
        let r = invariance_suite(&g, &ModelSpec::new(ModelKind::Gennet, 4, 9, 3), 6, 3).unwrap();
        assert!(r.passed, "{r:?}");
        assert_eq!(r.reflections, 3);
        assert!(r.max_layer_deviation.unwrap() > 0.0 || r.max_global_deviation == 0.0);
        let r = invariance_suite(&g, &ModelSpec::new(ModelKind::Iggnn, 2, 49, 3), 6, 3).unwrap();
        assert!(r.passed && r.max_layer_deviation.is_none());
    }
}
