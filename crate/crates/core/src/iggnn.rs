//! I-GGNN: invariant message passing on edge lengths with an injective
//! sum-of-`tanh` multiset aggregator.
//!
//! ```text
//! s_i^(t+1)_r = Σ_{j ∈ N(i)} tanh(A_r · (s_j^(t), ‖x_i − x_j‖) + b_r),   s^(0) = 0
//! out_r       = Σ_i tanh(R_r · s_i^(T) + c_r)
//! ```
//!
//! All layers share the width `W = 2 d N + 1`. The first layer reads only the
//! distance coordinate, which is the same as feeding `s^(0) = 0`.

use serde::{Deserialize, Serialize};

use crate::gennet::{global_readout, unit_from_json, unit_json, InitScale, ModelError, TanhUnit};
use crate::geomgraph::GeometricGraph;
use crate::linalg::Matrix;
use crate::rng;
use crate::scalar::Real;

/// Separation threshold shared with the harness: outputs closer than this
/// count as equal.
pub const EQUALITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IggnnConfig {
    pub depth: usize,
    pub width: usize,
    pub dim: usize,
    #[serde(default)]
    pub init: InitScale,
}

impl IggnnConfig {
    pub fn new(depth: usize, width: usize, dim: usize) -> Result<Self, ModelError> {
        let cfg = Self { depth, width, dim, init: InitScale::default() };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Width `2 d N + 1` for graphs with at most `max_nodes` nodes.
    pub fn for_nodes(depth: usize, dim: usize, max_nodes: usize) -> Result<Self, ModelError> {
        Self::new(depth, Self::injective_width(dim, max_nodes), dim)
    }

    pub fn injective_width(dim: usize, max_nodes: usize) -> usize {
        2 * dim * max_nodes + 1
    }

    pub fn with_init(mut self, init: InitScale) -> Self {
        self.init = init;
        self
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.depth == 0 || self.width == 0 || self.dim == 0 {
            return Err(ModelError::InvalidConfig(format!(
                "depth, width and dim must be positive (got {}, {}, {})",
                self.depth, self.width, self.dim
            )));
        }
        Ok(())
    }

    /// Inputs per unit of layer `t`.
    pub fn layer_inputs(&self, t: usize) -> usize {
        if t == 0 {
            1
        } else {
            self.width + 1
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IggnnParams<T> {
    config: IggnnConfig,
    /// `layers[t][r]`; the last weight multiplies the edge length.
    layers: Vec<Vec<TanhUnit<T>>>,
    readout: Vec<TanhUnit<T>>,
}

/// Draw order: layer units by `(t, r)`, then readout units by `r`. Each unit
/// with `f` inputs is uniform on `[-1/√f, 1/√f]` under the default scale.
pub fn init_iggnn_params<T: Real>(config: &IggnnConfig, seed: u64) -> Result<IggnnParams<T>, ModelError> {
    config.validate()?;
    let mut rng = rng::seeded(seed);
    let layers = (0..config.depth)
        .map(|t| (0..config.width).map(|_| TanhUnit::random(config.layer_inputs(t), config.init, &mut rng)).collect())
        .collect();
    let readout = (0..config.width).map(|_| TanhUnit::random(config.width, config.init, &mut rng)).collect();
    Ok(IggnnParams { config: *config, layers, readout })
}

impl<T: Real> IggnnParams<T> {
    pub fn config(&self) -> &IggnnConfig {
        &self.config
    }

    pub fn layer(&self, t: usize) -> &[TanhUnit<T>] {
        &self.layers[t]
    }

    pub fn layer_mut(&mut self, t: usize) -> &mut [TanhUnit<T>] {
        &mut self.layers[t]
    }

    pub fn readout(&self) -> &[TanhUnit<T>] {
        &self.readout
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().chain(std::iter::once(&self.readout)).flatten().map(|u| u.weights.len() + 1).sum()
    }

    /// `{"config": …, "layers": {"t,r": unit}, "readout": {"r": unit}}` with
    /// `t` from 0 and `r` from 1.
    pub fn to_json(&self) -> serde_json::Value {
        let mut layers = serde_json::Map::new();
        for (t, units) in self.layers.iter().enumerate() {
            for (r, u) in units.iter().enumerate() {
                layers.insert(format!("{t},{}", r + 1), unit_json(&u.weights, u.bias));
            }
        }
        let readout: serde_json::Map<String, serde_json::Value> =
            self.readout.iter().enumerate().map(|(r, u)| ((r + 1).to_string(), unit_json(&u.weights, u.bias))).collect();
        serde_json::json!({
            "config": serde_json::to_value(self.config).expect("config serializes"),
            "layers": layers,
            "readout": readout,
        })
    }

    pub fn from_json(doc: &serde_json::Value) -> Result<Self, ModelError> {
        let config: IggnnConfig = doc
            .get("config")
            .cloned()
            .ok_or_else(|| ModelError::InvalidParams("missing \"config\"".into()))
            .and_then(|c| serde_json::from_value(c).map_err(|e| ModelError::InvalidParams(e.to_string())))?;
        config.validate()?;
        let unit = |section: &str, key: String, inputs: usize| -> Result<TanhUnit<T>, ModelError> {
            let v = doc
                .get(section)
                .and_then(|s| s.get(&key))
                .ok_or_else(|| ModelError::InvalidParams(format!("missing {section}[{key:?}]")))?;
            let (weights, bias) = unit_from_json(v, inputs, &key)?;
            Ok(TanhUnit { weights, bias })
        };
        let layers = (0..config.depth)
            .map(|t| (0..config.width).map(|r| unit("layers", format!("{t},{}", r + 1), config.layer_inputs(t))).collect())
            .collect::<Result<Vec<Vec<_>>, _>>()?;
        let readout = (0..config.width).map(|r| unit("readout", (r + 1).to_string(), config.width)).collect::<Result<_, _>>()?;
        Ok(Self { config, layers, readout })
    }
}

/// One aggregation step. `scalars` is `n × W`, or `n × 0` for the first
/// layer (whose units read the distance only).
pub fn iggnn_layer<T: Real>(g: &GeometricGraph<T>, scalars: &Matrix<T>, units: &[TanhUnit<T>]) -> Result<Matrix<T>, ModelError> {
    let inputs = scalars.cols() + 1;
    if scalars.rows() != g.n() || units.iter().any(|u| u.weights.len() != inputs) {
        return Err(ModelError::ShapeMismatch(format!(
            "layer expects {} inputs per neighbor, got {} scalar rows of width {} for {} nodes",
            units.first().map_or(0, |u| u.weights.len()),
            scalars.rows(),
            scalars.cols(),
            g.n()
        )));
    }
    let width = scalars.cols();
    let mut out = Matrix::zeros(g.n(), units.len());
    for i in 0..g.n() {
        for &j in g.neighbors(i) {
            let r = g.distance(i, j);
            let s = scalars.row(j);
            for (q, u) in units.iter().enumerate() {
                let pre = crate::linalg::dot(&u.weights[..width], s) + u.weights[width] * r + u.bias;
                out[(i, q)] = out[(i, q)] + pre.tanh();
            }
        }
    }
    Ok(out)
}

/// Node scalars after `T` layers (`T = params.config().depth`).
pub fn iggnn_node_scalars<T: Real>(g: &GeometricGraph<T>, params: &IggnnParams<T>) -> Result<Matrix<T>, ModelError> {
    if g.d() != params.config.dim {
        return Err(ModelError::ShapeMismatch(format!("model dimension {} but graph dimension {}", params.config.dim, g.d())));
    }
    let mut state = Matrix::zeros(g.n(), 0);
    for units in &params.layers {
        state = iggnn_layer(g, &state, units)?;
    }
    Ok(state)
}

/// Global `W`-vector: `T` layers from zero, then the sorted-order
/// sum-of-`tanh` readout.
pub fn iggnn_forward<T: Real>(g: &GeometricGraph<T>, params: &IggnnParams<T>) -> Result<Vec<T>, ModelError> {
    global_readout(&iggnn_node_scalars(g, params)?, &params.readout)
}

/// True iff `iggnn_forward` agrees on `g` and `h` within [`EQUALITY_TOL`] for
/// every seed.
pub fn distance_fingerprint_equal<T: Real>(
    g: &GeometricGraph<T>,
    h: &GeometricGraph<T>,
    config: &IggnnConfig,
    seeds: &[u64],
) -> Result<bool, ModelError> {
    if seeds.is_empty() {
        return Err(ModelError::InvalidConfig("need at least one seed".into()));
    }
    for &seed in seeds {
        let p = init_iggnn_params::<T>(config, seed)?;
        let (a, b) = (iggnn_forward(g, &p)?, iggnn_forward(h, &p)?);
        if a.iter().zip(&b).any(|(x, y)| (*x - *y).abs().as_f64() >= EQUALITY_TOL) {
            return Ok(false);
        }
    }
    Ok(true)
}
