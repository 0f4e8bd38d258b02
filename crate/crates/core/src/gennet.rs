//! GenNet: multi-channel equivariant message passing with single-layer
//! `tanh` filters, a squared-norm node readout and a sum-of-`tanh` global
//! readout. Forward pass only; parameters are drawn at random.
//!
//! One layer maps the per-node channel vectors `v_{j,c} ∈ R^d` to
//!
//! ```text
//! v'_{i,q} = Σ_{j ∈ N(i)} [ φ_{q,0}(r_ij, ‖v_j‖) (x_i − x_j) + Σ_c φ_{q,c}(r_ij, ‖v_j‖) v_{j,c} ]
//! ```
//!
//! where `r_ij = ‖x_i − x_j‖`, `‖v_j‖ ∈ R^C` holds the channel norms and each
//! `φ_{q,c}(r, u) = tanh(a·(r, u) + b)`. With node/edge features every
//! neighbor term is additionally scaled by `ψ_n(f_i) · ψ_e(f_ij)`, both affine.
//! After `T` layers, `s_{i,q} = ‖Σ_c θ_{c,q} v_{i,c}‖²` and
//! `s_q = Σ_i tanh(w_q · s_i + b_q)`.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geomgraph::GeometricGraph;
use crate::linalg::{dot, Matrix};
use crate::rng;
use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid model configuration: {0}")]
    InvalidConfig(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("graph has no {0} features but the featured layer needs them")]
    MissingFeatures(&'static str),
    #[error("invalid parameter document: {0}")]
    InvalidParams(String),
}

/// Architecture hyper-parameters. `node_feature_dim` / `edge_feature_dim`
/// size the affine feature gates and are zero for plain geometric graphs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub depth: usize,
    pub channels: usize,
    pub dim: usize,
    #[serde(default)]
    pub node_feature_dim: usize,
    #[serde(default)]
    pub edge_feature_dim: usize,
    #[serde(default)]
    pub init: InitScale,
}

/// Width of the uniform parameter draw.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitScale {
    /// For a unit with `f` inputs: filter weights uniform on `[-1/f, 1/f]`,
    /// every other scalar (filter biases, `θ`, global units, feature gates)
    /// uniform on `[-1/√f, 1/√f]`. Filters read all `C` channel norms, so
    /// their weights shrink faster; this keeps pre-activations O(1) through
    /// depth and `tanh` out of saturation.
    #[default]
    FanIn,
    /// Every scalar uniform on `[-1, 1]`.
    Unit,
}

impl InitScale {
    pub(crate) fn sqrt_factor<T: Real>(self, fan_in: usize) -> T {
        match self {
            InitScale::FanIn => T::one() / T::of(fan_in.max(1) as f64).sqrt(),
            InitScale::Unit => T::one(),
        }
    }

    fn linear_factor<T: Real>(self, fan_in: usize) -> T {
        match self {
            InitScale::FanIn => T::one() / T::of(fan_in.max(1) as f64),
            InitScale::Unit => T::one(),
        }
    }
}

impl ModelConfig {
    pub fn new(depth: usize, channels: usize, dim: usize) -> Result<Self, ModelError> {
        let cfg = Self { depth, channels, dim, node_feature_dim: 0, edge_feature_dim: 0, init: InitScale::default() };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_init(mut self, init: InitScale) -> Self {
        self.init = init;
        self
    }

    pub fn with_features(mut self, node_feature_dim: usize, edge_feature_dim: usize) -> Self {
        self.node_feature_dim = node_feature_dim;
        self.edge_feature_dim = edge_feature_dim;
        self
    }

    /// `2 N d + 1`, the channel count for which random parameters are
    /// maximally expressive on generic graphs with at most `max_nodes` nodes.
    pub fn maximal_channels(max_nodes: usize, dim: usize) -> usize {
        2 * max_nodes * dim + 1
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.depth == 0 || self.channels == 0 || self.dim == 0 {
            return Err(ModelError::InvalidConfig(format!(
                "depth, channels and dim must be positive (got {}, {}, {})",
                self.depth, self.channels, self.dim
            )));
        }
        Ok(())
    }
}

/// `x ↦ tanh(w·x + b)`: a one-layer network with scalar output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TanhUnit<T> {
    pub weights: Vec<T>,
    pub bias: T,
}

fn random_unit<T: Real, R: Rng + ?Sized>(inputs: usize, weight_scale: T, bias_scale: T, rng: &mut R) -> (Vec<T>, T) {
    let weights = rng::symmetric_unit_vec::<T, R>(rng, inputs).into_iter().map(|w| w * weight_scale).collect();
    let bias = rng::symmetric_unit::<T, R>(rng) * bias_scale;
    (weights, bias)
}

impl<T: Real> TanhUnit<T> {
    fn random_filter<R: Rng + ?Sized>(inputs: usize, scale: InitScale, rng: &mut R) -> Self {
        let (weights, bias) = random_unit(inputs, scale.linear_factor(inputs), scale.sqrt_factor(inputs), rng);
        Self { weights, bias }
    }

    pub(crate) fn random<R: Rng + ?Sized>(inputs: usize, scale: InitScale, rng: &mut R) -> Self {
        let s = scale.sqrt_factor(inputs);
        let (weights, bias) = random_unit(inputs, s, s, rng);
        Self { weights, bias }
    }

    #[inline]
    pub fn eval(&self, x: &[T]) -> T {
        (dot(&self.weights, x) + self.bias).tanh()
    }

    /// `tanh(w_0 * head + w[1..]·tail + b)` without building the concatenation.
    #[inline]
    fn eval_split(&self, head: T, tail: &[T]) -> T {
        (self.weights[0] * head + dot(&self.weights[1..], tail) + self.bias).tanh()
    }
}

/// `x ↦ w·x + b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineUnit<T> {
    pub weights: Vec<T>,
    pub bias: T,
}

impl<T: Real> AffineUnit<T> {
    pub(crate) fn random<R: Rng + ?Sized>(inputs: usize, scale: InitScale, rng: &mut R) -> Self {
        let s = scale.sqrt_factor(inputs);
        let (weights, bias) = random_unit(inputs, s, s, rng);
        Self { weights, bias }
    }

    #[inline]
    pub fn eval(&self, x: &[T]) -> T {
        dot(&self.weights, x) + self.bias
    }
}

/// Parameters of one message-passing layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams<T> {
    channels: usize,
    /// `φ_{q,c}` at `q * (C + 1) + c`; `c = 0` filters the relative position.
    filters: Vec<TanhUnit<T>>,
    node_gates: Vec<AffineUnit<T>>,
    edge_gates: Vec<AffineUnit<T>>,
}

impl<T: Real> LayerParams<T> {
    pub fn filter(&self, q: usize, c: usize) -> &TanhUnit<T> {
        &self.filters[q * (self.channels + 1) + c]
    }

    pub fn filter_mut(&mut self, q: usize, c: usize) -> &mut TanhUnit<T> {
        &mut self.filters[q * (self.channels + 1) + c]
    }

    pub fn node_gate(&self, q: usize) -> &AffineUnit<T> {
        &self.node_gates[q]
    }

    pub fn node_gate_mut(&mut self, q: usize) -> &mut AffineUnit<T> {
        &mut self.node_gates[q]
    }

    pub fn edge_gate(&self, q: usize) -> &AffineUnit<T> {
        &self.edge_gates[q]
    }

    pub fn edge_gate_mut(&mut self, q: usize) -> &mut AffineUnit<T> {
        &mut self.edge_gates[q]
    }

    pub fn channels(&self) -> usize {
        self.channels
    }
}

/// All learnable scalars of a GenNet model.
#[derive(Debug, Clone, PartialEq)]
pub struct GenNetParams<T> {
    config: ModelConfig,
    layers: Vec<LayerParams<T>>,
    /// `θ`, indexed `(c, q)`.
    readout: Matrix<T>,
    global: Vec<TanhUnit<T>>,
}

/// Draws every parameter independently and uniformly on a symmetric
/// interval whose width is set by `config.init`.
///
/// Draw order: filters by `(t, q, c)`, then `θ` row-major, then the global
/// units, then the feature gates. Gates come last so a featured model shares
/// every other parameter with the plain model of the same seed.
pub fn init_params<T: Real>(config: &ModelConfig, seed: u64) -> Result<GenNetParams<T>, ModelError> {
    config.validate()?;
    let c = config.channels;
    let scale = config.init;
    let mut rng = rng::seeded(seed);
    let mut layers: Vec<LayerParams<T>> = (0..config.depth)
        .map(|_| LayerParams {
            channels: c,
            filters: (0..c * (c + 1)).map(|_| TanhUnit::random_filter(1 + c, scale, &mut rng)).collect(),
            node_gates: Vec::new(),
            edge_gates: Vec::new(),
        })
        .collect();
    let theta_scale: T = scale.sqrt_factor(c);
    let theta = rng::symmetric_unit_vec::<T, _>(&mut rng, c * c).into_iter().map(|w| w * theta_scale).collect();
    let readout = Matrix::from_row_major(c, c, theta);
    let global = (0..c).map(|_| TanhUnit::random(c, scale, &mut rng)).collect();
    for layer in &mut layers {
        for _ in 0..c {
            layer.node_gates.push(AffineUnit::random(config.node_feature_dim, scale, &mut rng));
            layer.edge_gates.push(AffineUnit::random(config.edge_feature_dim, scale, &mut rng));
        }
    }
    Ok(GenNetParams { config: *config, layers, readout, global })
}

impl<T: Real> GenNetParams<T> {
    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn layer(&self, t: usize) -> &LayerParams<T> {
        &self.layers[t]
    }

    pub fn layer_mut(&mut self, t: usize) -> &mut LayerParams<T> {
        &mut self.layers[t]
    }

    pub fn readout(&self) -> &Matrix<T> {
        &self.readout
    }

    pub fn readout_mut(&mut self) -> &mut Matrix<T> {
        &mut self.readout
    }

    pub fn global_units(&self) -> &[TanhUnit<T>] {
        &self.global
    }

    pub fn global_units_mut(&mut self) -> &mut [TanhUnit<T>] {
        &mut self.global
    }

    /// Total number of scalars.
    pub fn parameter_count(&self) -> usize {
        let units = |u: &[TanhUnit<T>]| u.iter().map(|x| x.weights.len() + 1).sum::<usize>();
        let gates = |u: &[AffineUnit<T>]| u.iter().map(|x| x.weights.len() + 1).sum::<usize>();
        self.layers.iter().map(|l| units(&l.filters) + gates(&l.node_gates) + gates(&l.edge_gates)).sum::<usize>()
            + self.readout.rows() * self.readout.cols()
            + units(&self.global)
    }

    /// Every scalar, in draw order.
    pub fn flat(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.parameter_count());
        for l in &self.layers {
            for f in &l.filters {
                out.extend_from_slice(&f.weights);
                out.push(f.bias);
            }
        }
        out.extend_from_slice(self.readout.as_slice());
        for g in &self.global {
            out.extend_from_slice(&g.weights);
            out.push(g.bias);
        }
        for l in &self.layers {
            for (n, e) in l.node_gates.iter().zip(&l.edge_gates) {
                out.extend_from_slice(&n.weights);
                out.push(n.bias);
                out.extend_from_slice(&e.weights);
                out.push(e.bias);
            }
        }
        out
    }
}

/// Per-node equivariant channels: `n x C` vectors in `R^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct EquivariantState<T> {
    n: usize,
    channels: usize,
    d: usize,
    data: Vec<T>,
}

impl<T: Real> EquivariantState<T> {
    pub fn zeros(n: usize, channels: usize, d: usize) -> Self {
        Self { n, channels, d, data: vec![T::zero(); n * channels * d] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// `v_{i,c}`.
    pub fn channel(&self, i: usize, c: usize) -> &[T] {
        let start = (i * self.channels + c) * self.d;
        &self.data[start..start + self.d]
    }

    pub fn channel_mut(&mut self, i: usize, c: usize) -> &mut [T] {
        let start = (i * self.channels + c) * self.d;
        &mut self.data[start..start + self.d]
    }

    /// All channels of node `i`, contiguous.
    fn node(&self, i: usize) -> &[T] {
        let w = self.channels * self.d;
        &self.data[i * w..(i + 1) * w]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    /// Channel norms `‖v_{i,c}‖`, row-major `n x C`.
    pub fn channel_norms(&self) -> Vec<T> {
        self.data.chunks(self.d).map(|v| dot(v, v).sqrt()).collect()
    }

    /// Largest absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.data.iter().zip(&other.data).fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()))
    }
}

/// Invariant outputs of a forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct InvariantFeatures<T> {
    /// `s_i`, `n x C`.
    pub node_scalars: Matrix<T>,
    pub global: Vec<T>,
}

fn check_state<T: Real>(g: &GeometricGraph<T>, state: &EquivariantState<T>, layer: &LayerParams<T>) -> Result<(), ModelError> {
    if state.n != g.n() || state.d != g.d() || state.channels != layer.channels {
        return Err(ModelError::ShapeMismatch(format!(
            "state is {}x{}x{} but graph has n={}, d={} and the layer has {} channels",
            state.n,
            state.channels,
            state.d,
            g.n(),
            g.d(),
            layer.channels
        )));
    }
    Ok(())
}

/// Scalar gate `ψ_n(f_i) ψ_e(f_ij)` for channel `q`; `None` means the plain
/// (ungated) update.
type Gate<'a, T> = Option<&'a dyn Fn(usize, usize, usize) -> T>;

fn aggregate<T: Real>(
    g: &GeometricGraph<T>,
    state: &EquivariantState<T>,
    layer: &LayerParams<T>,
    gate: Gate<'_, T>,
) -> EquivariantState<T> {
    let (n, cc, d) = (g.n(), layer.channels, g.d());
    let norms = state.channel_norms();
    let mut out = EquivariantState::zeros(n, cc, d);
    let mut diff = vec![T::zero(); d];
    let mut term = vec![T::zero(); d];
    for i in 0..n {
        let xi = g.position(i);
        for &j in g.neighbors(i) {
            let xj = g.position(j);
            for k in 0..d {
                diff[k] = xi[k] - xj[k];
            }
            let r = dot(&diff, &diff).sqrt();
            let norms_j = &norms[j * cc..(j + 1) * cc];
            let vj = state.node(j);
            for q in 0..cc {
                let phi0 = layer.filter(q, 0).eval_split(r, norms_j);
                for k in 0..d {
                    term[k] = phi0 * diff[k];
                }
                for c in 0..cc {
                    let phi = layer.filter(q, c + 1).eval_split(r, norms_j);
                    let v = &vj[c * d..(c + 1) * d];
                    for k in 0..d {
                        term[k] = term[k] + phi * v[k];
                    }
                }
                let acc = out.channel_mut(i, q);
                match gate {
                    None => {
                        for k in 0..d {
                            acc[k] = acc[k] + term[k];
                        }
                    }
                    Some(gate) => {
                        let scale = gate(i, j, q);
                        for k in 0..d {
                            acc[k] = acc[k] + scale * term[k];
                        }
                    }
                }
            }
        }
    }
    out
}

/// One equivariant aggregation step (no features).
pub fn layer_forward<T: Real>(
    g: &GeometricGraph<T>,
    state: &EquivariantState<T>,
    layer: &LayerParams<T>,
) -> Result<EquivariantState<T>, ModelError> {
    check_state(g, state, layer)?;
    Ok(aggregate(g, state, layer, None))
}

/// Aggregation with every neighbor term scaled by `ψ_n(f_i) · ψ_e(f_ij)`.
/// A feature kind the graph lacks contributes a factor of one, but at least
/// one kind must be present.
pub fn featured_layer_forward<T: Real>(
    g: &GeometricGraph<T>,
    state: &EquivariantState<T>,
    layer: &LayerParams<T>,
) -> Result<EquivariantState<T>, ModelError> {
    check_state(g, state, layer)?;
    if !g.has_features() {
        return Err(ModelError::MissingFeatures("node or edge"));
    }
    let node_dim = layer.node_gates[0].weights.len();
    let edge_dim = layer.edge_gates[0].weights.len();
    if let Some(dim) = g.node_feature_dim() {
        if dim != node_dim {
            return Err(ModelError::ShapeMismatch(format!("node features have dim {dim}, model expects {node_dim}")));
        }
    }
    if let Some(ef) = g.edge_features() {
        if ef.dim() != edge_dim {
            return Err(ModelError::ShapeMismatch(format!("edge features have dim {}, model expects {edge_dim}", ef.dim())));
        }
    }
    let gate = |i: usize, j: usize, q: usize| -> T {
        let node = g.node_feature(i).map_or(T::one(), |f| layer.node_gates[q].eval(f));
        let edge = g.edge_features().and_then(|ef| ef.get(i, j)).map_or(T::one(), |f| layer.edge_gates[q].eval(f));
        node * edge
    };
    Ok(aggregate(g, state, layer, Some(&gate)))
}

/// `s_{i,q} = ‖Σ_c θ_{c,q} v_{i,c}‖²`.
pub fn node_readout<T: Real>(state: &EquivariantState<T>, theta: &Matrix<T>) -> Result<Matrix<T>, ModelError> {
    let cc = state.channels;
    if theta.rows() != cc || theta.cols() != cc {
        return Err(ModelError::ShapeMismatch(format!("θ is {}x{}, state has {cc} channels", theta.rows(), theta.cols())));
    }
    let d = state.d;
    let mut out = Matrix::zeros(state.n, cc);
    let mut mix = vec![T::zero(); d];
    for i in 0..state.n {
        for q in 0..cc {
            mix.iter_mut().for_each(|m| *m = T::zero());
            for c in 0..cc {
                let w = theta[(c, q)];
                for (m, &v) in mix.iter_mut().zip(state.channel(i, c)) {
                    *m = *m + w * v;
                }
            }
            out[(i, q)] = dot(&mix, &mix);
        }
    }
    Ok(out)
}

/// Rows of `m` in lexicographic order; ties keep their original order.
pub(crate) fn sorted_rows<T: Real>(m: &Matrix<T>) -> Vec<&[T]> {
    let mut rows: Vec<&[T]> = (0..m.rows()).map(|i| m.row(i)).collect();
    rows.sort_by(|a, b| {
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| x.partial_cmp(y).expect("finite features"))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    rows
}

/// `s_q = Σ_i tanh(w_q·s_i + b_q)`, summing node rows in sorted order so the
/// result is bitwise independent of node labeling.
pub fn global_readout<T: Real>(node_scalars: &Matrix<T>, units: &[TanhUnit<T>]) -> Result<Vec<T>, ModelError> {
    if units.iter().any(|u| u.weights.len() != node_scalars.cols()) {
        return Err(ModelError::ShapeMismatch(format!(
            "global units expect {} inputs, node scalars have {}",
            units.first().map_or(0, |u| u.weights.len()),
            node_scalars.cols()
        )));
    }
    let rows = sorted_rows(node_scalars);
    Ok(units.iter().map(|u| rows.iter().fold(T::zero(), |acc, row| acc + u.eval(row))).collect())
}

/// States `v^(0) = 0, v^(1), …, v^(T)`.
pub fn forward_states<T: Real>(g: &GeometricGraph<T>, params: &GenNetParams<T>) -> Result<Vec<EquivariantState<T>>, ModelError> {
    let cfg = &params.config;
    if g.d() != cfg.dim {
        return Err(ModelError::ShapeMismatch(format!("graph has d={}, model expects {}", g.d(), cfg.dim)));
    }
    let featured = g.has_features();
    let mut states = Vec::with_capacity(cfg.depth + 1);
    states.push(EquivariantState::zeros(g.n(), cfg.channels, g.d()));
    for layer in &params.layers {
        let prev = states.last().expect("initial state");
        let next = if featured { featured_layer_forward(g, prev, layer)? } else { layer_forward(g, prev, layer)? };
        states.push(next);
    }
    Ok(states)
}

/// Full pipeline: zero init, `T` layers (gated iff the graph has features),
/// node readout, global readout.
pub fn forward<T: Real>(g: &GeometricGraph<T>, params: &GenNetParams<T>) -> Result<InvariantFeatures<T>, ModelError> {
    let states = forward_states(g, params)?;
    let node_scalars = node_readout(states.last().expect("at least one state"), &params.readout)?;
    let global = global_readout(&node_scalars, &params.global)?;
    Ok(InvariantFeatures { node_scalars, global })
}

pub(crate) fn unit_json<T: Real>(weights: &[T], bias: T) -> serde_json::Value {
    serde_json::json!({
        "weights": weights.iter().map(|w| w.as_f64()).collect::<Vec<_>>(),
        "bias": bias.as_f64(),
    })
}

pub(crate) fn unit_from_json<T: Real>(v: &serde_json::Value, inputs: usize, what: &str) -> Result<(Vec<T>, T), ModelError> {
    let bad = || ModelError::InvalidParams(format!("{what}: expected {{\"weights\": [{inputs} numbers], \"bias\": number}}"));
    let weights = v
        .get("weights")
        .and_then(|w| w.as_array())
        .ok_or_else(bad)?
        .iter()
        .map(|x| x.as_f64().map(T::of))
        .collect::<Option<Vec<T>>>()
        .ok_or_else(bad)?;
    let bias = v.get("bias").and_then(|b| b.as_f64()).map(T::of).ok_or_else(bad)?;
    if weights.len() != inputs || weights.iter().any(|w| !w.is_finite()) || !bias.is_finite() {
        return Err(bad());
    }
    Ok((weights, bias))
}

impl<T: Real> GenNetParams<T> {
    /// JSON document with filters keyed `"t,q,c"` (`t` from 0, output
    /// channel `q` from 1, input `c` from 0 where `c = 0` is the
    /// relative-position filter), gates keyed `"t,q"`, `readout` as rows of
    /// `θ` indexed `[c][q]` and `global` as one unit per output channel.
    pub fn to_json(&self) -> serde_json::Value {
        let cc = self.config.channels;
        let mut filters = serde_json::Map::new();
        let mut node_gates = serde_json::Map::new();
        let mut edge_gates = serde_json::Map::new();
        for (t, layer) in self.layers.iter().enumerate() {
            for q in 0..cc {
                for c in 0..=cc {
                    let u = layer.filter(q, c);
                    filters.insert(format!("{t},{},{c}", q + 1), unit_json(&u.weights, u.bias));
                }
                let n = &layer.node_gates[q];
                let e = &layer.edge_gates[q];
                node_gates.insert(format!("{t},{}", q + 1), unit_json(&n.weights, n.bias));
                edge_gates.insert(format!("{t},{}", q + 1), unit_json(&e.weights, e.bias));
            }
        }
        let readout: Vec<Vec<f64>> = self.readout.to_rows().into_iter().map(|r| r.into_iter().map(Real::as_f64).collect()).collect();
        serde_json::json!({
            "config": serde_json::to_value(self.config).expect("config serializes"),
            "filters": filters,
            "readout": readout,
            "global": self.global.iter().map(|u| unit_json(&u.weights, u.bias)).collect::<Vec<_>>(),
            "node_gates": node_gates,
            "edge_gates": edge_gates,
        })
    }

    pub fn from_json(doc: &serde_json::Value) -> Result<Self, ModelError> {
        let config: ModelConfig = doc
            .get("config")
            .cloned()
            .ok_or_else(|| ModelError::InvalidParams("missing \"config\"".into()))
            .and_then(|c| serde_json::from_value(c).map_err(|e| ModelError::InvalidParams(e.to_string())))?;
        config.validate()?;
        let cc = config.channels;
        let section = |name: &str| -> Result<&serde_json::Value, ModelError> {
            doc.get(name).ok_or_else(|| ModelError::InvalidParams(format!("missing \"{name}\"")))
        };
        let (filters, node_gates, edge_gates) = (section("filters")?, section("node_gates")?, section("edge_gates")?);
        let lookup = |map: &serde_json::Value, key: String| -> Result<serde_json::Value, ModelError> {
            map.get(&key).cloned().ok_or_else(|| ModelError::InvalidParams(format!("missing key {key:?}")))
        };
        let mut layers = Vec::with_capacity(config.depth);
        for t in 0..config.depth {
            let mut layer = LayerParams { channels: cc, filters: Vec::new(), node_gates: Vec::new(), edge_gates: Vec::new() };
            for q in 0..cc {
                for c in 0..=cc {
                    let key = format!("{t},{},{c}", q + 1);
                    let (weights, bias) = unit_from_json(&lookup(filters, key.clone())?, 1 + cc, &key)?;
                    layer.filters.push(TanhUnit { weights, bias });
                }
                let key = format!("{t},{}", q + 1);
                let (weights, bias) = unit_from_json(&lookup(node_gates, key.clone())?, config.node_feature_dim, &key)?;
                layer.node_gates.push(AffineUnit { weights, bias });
                let (weights, bias) = unit_from_json(&lookup(edge_gates, key.clone())?, config.edge_feature_dim, &key)?;
                layer.edge_gates.push(AffineUnit { weights, bias });
            }
            layers.push(layer);
        }
        let rows: Vec<Vec<f64>> =
            serde_json::from_value(section("readout")?.clone()).map_err(|e| ModelError::InvalidParams(format!("readout: {e}")))?;
        if rows.len() != cc || rows.iter().any(|r| r.len() != cc) {
            return Err(ModelError::InvalidParams(format!("readout must be {cc}x{cc}")));
        }
        let readout = Matrix::from_row_major(cc, cc, rows.into_iter().flatten().map(T::of).collect());
        let global_list = section("global")?
            .as_array()
            .filter(|a| a.len() == cc)
            .ok_or_else(|| ModelError::InvalidParams(format!("global must list {cc} units")))?;
        let global = global_list
            .iter()
            .enumerate()
            .map(|(q, v)| unit_from_json(v, cc, &format!("global[{q}]")).map(|(weights, bias)| TanhUnit { weights, bias }))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { config, layers, readout, global })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geomgraph::{sample_generic_positions, PermutationMap, RigidMotion};

    fn cfg(depth: usize, channels: usize, dim: usize) -> ModelConfig {
        ModelConfig::new(depth, channels, dim).unwrap()
    }

    /// Straight-line evaluation of one layer, written independently of
    /// `aggregate`: nested vectors, explicit concatenated filter inputs.
    fn reference_layer(g: &GeometricGraph<f64>, v: &[Vec<Vec<f64>>], layer: &LayerParams<f64>, featured: bool) -> Vec<Vec<Vec<f64>>> {
        let (n, d, cc) = (g.n(), g.d(), layer.channels());
        let mut out = vec![vec![vec![0.0; d]; cc]; n];
        for i in 0..n {
            for q in 0..cc {
                for j in 0..n {
                    if !g.has_edge(i, j) {
                        continue;
                    }
                    let diff: Vec<f64> = (0..d).map(|k| g.position(i)[k] - g.position(j)[k]).collect();
                    let mut input = vec![diff.iter().map(|x| x * x).sum::<f64>().sqrt()];
                    input.extend(v[j].iter().map(|ch| ch.iter().map(|x| x * x).sum::<f64>().sqrt()));
                    let phi = |c: usize| {
                        let u = layer.filter(q, c);
                        (u.weights.iter().zip(&input).map(|(a, b)| a * b).sum::<f64>() + u.bias).tanh()
                    };
                    let mut gate = 1.0;
                    if featured {
                        if let Some(f) = g.node_feature(i) {
                            let u = layer.node_gate(q);
                            gate *= u.weights.iter().zip(f).map(|(a, b)| a * b).sum::<f64>() + u.bias;
                        }
                        if let Some(f) = g.edge_features().and_then(|e| e.get(i, j)) {
                            let u = layer.edge_gate(q);
                            gate *= u.weights.iter().zip(f).map(|(a, b)| a * b).sum::<f64>() + u.bias;
                        }
                    }
                    for k in 0..d {
                        let mut term = phi(0) * diff[k];
                        for c in 0..cc {
                            term += phi(c + 1) * v[j][c][k];
                        }
                        out[i][q][k] += gate * term;
                    }
                }
            }
        }
        out
    }

    fn nested(state: &EquivariantState<f64>) -> Vec<Vec<Vec<f64>>> {
        (0..state.n()).map(|i| (0..state.channels()).map(|c| state.channel(i, c).to_vec()).collect()).collect()
    }

    fn random_graph(n: usize, d: usize, seed: u64) -> GeometricGraph<f64> {
        let pts = sample_generic_positions(n, d, seed);
        let edges: Vec<(usize, usize)> =
            (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).filter(|&(i, j)| (i * 7 + j * 3 + seed as usize) % 3 != 0).collect();
        GeometricGraph::build(&edges, &pts).unwrap()
    }

    fn max_gap(a: &[Vec<Vec<f64>>], b: &[Vec<Vec<f64>>]) -> f64 {
        a.iter().flatten().flatten().zip(b.iter().flatten().flatten()).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
    }

    #[test]
    fn init_is_deterministic_and_seed_sensitive() {
        let c = cfg(2, 3, 2);
        let a = init_params::<f64>(&c, 4).unwrap();
        assert_eq!(a, init_params::<f64>(&c, 4).unwrap());
        let b = init_params::<f64>(&c, 5).unwrap();
        assert!(a.flat().iter().zip(b.flat()).all(|(x, y)| *x != y));
    }

    #[test]
    fn parameter_count_matches_type_definition() {
        // T=1, C=1: filters 1*1*2 units of 3 scalars, θ 1, global 1 unit of
        // 2 scalars, gates 2 bias-only units.
        let p = init_params::<f64>(&cfg(1, 1, 2), 0).unwrap();
        assert_eq!(p.parameter_count(), 6 + 1 + 2 + 2);
        assert_eq!(p.flat().len(), 11);
        // with d_n = 2, d_e = 3 the gates carry 3 + 4 scalars.
        let p = init_params::<f64>(&cfg(1, 1, 2).with_features(2, 3), 0).unwrap();
        assert_eq!(p.parameter_count(), 6 + 1 + 2 + 7);
    }

    #[test]
    fn init_ranges() {
        let unit = init_params::<f64>(&cfg(1, 4, 2).with_init(InitScale::Unit), 1).unwrap();
        assert!(unit.flat().iter().all(|x| (-1.0..=1.0).contains(x)));
        let fan = init_params::<f64>(&cfg(1, 4, 2), 1).unwrap();
        for q in 0..4 {
            for c in 0..=4 {
                let f = fan.layer(0).filter(q, c);
                assert!(f.weights.iter().all(|w| w.abs() <= 0.2));
                assert!(f.bias.abs() <= 1.0 / 5f64.sqrt());
            }
        }
        assert!(fan.readout().as_slice().iter().all(|w| w.abs() <= 0.5));
        // same draws, different widths
        let ratio = unit.layer(0).filter(1, 2).weights[3] / fan.layer(0).filter(1, 2).weights[3];
        assert!((ratio - 5.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_config() {
        assert!(matches!(ModelConfig::new(0, 3, 2), Err(ModelError::InvalidConfig(_))));
        assert!(matches!(ModelConfig::new(1, 0, 2), Err(ModelError::InvalidConfig(_))));
    }

    #[test]
    fn single_edge_from_zero_state() {
        let g = GeometricGraph::build(&[(0, 1)], &[vec![0.3, -0.2], vec![-0.5, 0.4]]).unwrap();
        let p = init_params::<f64>(&cfg(1, 3, 2), 9).unwrap();
        let out = layer_forward(&g, &EquivariantState::zeros(2, 3, 2), p.layer(0)).unwrap();
        let r = g.distance(0, 1);
        for q in 0..3 {
            let f = p.layer(0).filter(q, 0);
            let phi = (f.weights[0] * r + f.bias).tanh();
            let expected = [phi * 0.8, phi * -0.6];
            let got = out.channel(0, q);
            assert!((got[0] - expected[0]).abs() < 1e-15 && (got[1] - expected[1]).abs() < 1e-15);
        }
    }

    #[test]
    fn isolated_node_gets_zero() {
        let g = GeometricGraph::build(&[(0, 1)], &[vec![0.0, 0.0], vec![1.0, 0.0], vec![5.0, 5.0]]).unwrap();
        let p = init_params::<f64>(&cfg(2, 2, 2), 1).unwrap();
        let states = forward_states(&g, &p).unwrap();
        for s in &states {
            for c in 0..2 {
                assert_eq!(s.channel(2, c), &[0.0, 0.0]);
            }
        }
    }

    #[test]
    fn layer_matches_reference() {
        let g = random_graph(5, 3, 2);
        let p = init_params::<f64>(&cfg(3, 4, 3), 6).unwrap();
        let mut state = EquivariantState::zeros(5, 4, 3);
        let mut reference = nested(&state);
        for t in 0..3 {
            state = layer_forward(&g, &state, p.layer(t)).unwrap();
            reference = reference_layer(&g, &reference, p.layer(t), false);
            assert!(max_gap(&nested(&state), &reference) < 1e-12, "layer {t}");
        }
    }

    fn featured_graph() -> GeometricGraph<f64> {
        let g = random_graph(5, 2, 8);
        let nf: Vec<Vec<f64>> = sample_generic_positions(5, 2, 30);
        let ef: Vec<((usize, usize), Vec<f64>)> =
            g.edges().into_iter().enumerate().map(|(k, e)| (e, vec![0.1 * k as f64, 1.0 - 0.05 * k as f64, 0.5])).collect();
        g.with_node_features(&nf).unwrap().with_edge_features(&ef).unwrap()
    }

    #[test]
    fn unit_gates_reduce_to_plain_layer() {
        let g = featured_graph();
        let mut p = init_params::<f64>(&cfg(2, 3, 2).with_features(2, 3), 2).unwrap();
        for t in 0..2 {
            for q in 0..3 {
                let n = p.layer_mut(t).node_gate_mut(q);
                n.weights.iter_mut().for_each(|w| *w = 0.0);
                n.bias = 1.0;
                let e = p.layer_mut(t).edge_gate_mut(q);
                e.weights.iter_mut().for_each(|w| *w = 0.0);
                e.bias = 1.0;
            }
        }
        let plain = g.without_edge_features();
        let mut a = EquivariantState::zeros(5, 3, 2);
        let mut b = a.clone();
        for t in 0..2 {
            a = featured_layer_forward(&g, &a, p.layer(t)).unwrap();
            b = layer_forward(&plain, &b, p.layer(t)).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn zero_edge_gate_annihilates() {
        let g = featured_graph();
        let mut p = init_params::<f64>(&cfg(1, 3, 2).with_features(2, 3), 2).unwrap();
        for q in 0..3 {
            let e = p.layer_mut(0).edge_gate_mut(q);
            e.weights.iter_mut().for_each(|w| *w = 0.0);
            e.bias = 0.0;
        }
        let out = featured_layer_forward(&g, &EquivariantState::zeros(5, 3, 2), p.layer(0)).unwrap();
        assert!(out.as_slice().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn featured_layer_matches_reference() {
        let g = featured_graph();
        let p = init_params::<f64>(&cfg(3, 3, 2).with_features(2, 3), 21).unwrap();
        let states = forward_states(&g, &p).unwrap();
        let mut reference = nested(&states[0]);
        for t in 0..3 {
            reference = reference_layer(&g, &reference, p.layer(t), true);
            assert!(max_gap(&nested(&states[t + 1]), &reference) < 1e-12, "layer {t}");
        }
    }

    #[test]
    fn featured_errors() {
        let g = random_graph(4, 2, 1);
        let p = init_params::<f64>(&cfg(1, 2, 2).with_features(1, 1), 0).unwrap();
        let s = EquivariantState::zeros(4, 2, 2);
        assert_eq!(featured_layer_forward(&g, &s, p.layer(0)).unwrap_err(), ModelError::MissingFeatures("node or edge"));
        let g = g.with_node_features(&[vec![1.0, 2.0], vec![0.0, 0.0], vec![1.0, 1.0], vec![3.0, 3.0]]).unwrap();
        assert!(matches!(featured_layer_forward(&g, &s, p.layer(0)), Err(ModelError::ShapeMismatch(_))));
        let wrong = EquivariantState::zeros(4, 3, 2);
        assert!(matches!(layer_forward(&g, &wrong, p.layer(0)), Err(ModelError::ShapeMismatch(_))));
    }

    #[test]
    fn readout_basics() {
        let zero = EquivariantState::<f64>::zeros(3, 2, 2);
        let theta = Matrix::from_row_major(2, 2, vec![0.3, -0.1, 0.7, 0.2]);
        assert!(node_readout(&zero, &theta).unwrap().as_slice().iter().all(|&x| x == 0.0));

        let mut single = EquivariantState::<f64>::zeros(2, 1, 3);
        single.channel_mut(0, 0).copy_from_slice(&[1.0, 2.0, 2.0]);
        single.channel_mut(1, 0).copy_from_slice(&[0.5, 0.0, 0.0]);
        let s = node_readout(&single, &Matrix::identity(1)).unwrap();
        assert_eq!(s.as_slice(), &[9.0, 0.25]);

        assert!(matches!(node_readout(&zero, &Matrix::identity(3)), Err(ModelError::ShapeMismatch(_))));
    }

    #[test]
    fn readout_is_rotation_invariant() {
        let g = random_graph(5, 3, 3);
        let p = init_params::<f64>(&cfg(2, 4, 3), 3).unwrap();
        let state = forward_states(&g, &p).unwrap().pop().unwrap();
        let m = RigidMotion::random(3, &mut rng::seeded(12)).reflected();
        let mut rotated = state.clone();
        for i in 0..5 {
            for c in 0..4 {
                let v = m.rotate(state.channel(i, c));
                rotated.channel_mut(i, c).copy_from_slice(&v);
            }
        }
        let a = node_readout(&state, p.readout()).unwrap();
        let b = node_readout(&rotated, p.readout()).unwrap();
        for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn global_readout_singleton_and_permutation() {
        let units = vec![TanhUnit { weights: vec![0.5, -0.25], bias: 0.1 }, TanhUnit { weights: vec![-1.0, 0.3], bias: -0.2 }];
        let one = Matrix::from_row_major(1, 2, vec![0.7, 1.3]);
        let g = global_readout(&one, &units).unwrap();
        assert_eq!(g, vec![units[0].eval(&[0.7, 1.3]), units[1].eval(&[0.7, 1.3])]);

        let rows = vec![vec![0.1, 0.9], vec![2.0, -1.0], vec![0.1, 0.3], vec![7.5, 0.0]];
        let a = global_readout(&Matrix::from_rows(&rows).unwrap(), &units).unwrap();
        let shuffled = vec![rows[3].clone(), rows[0].clone(), rows[2].clone(), rows[1].clone()];
        let b = global_readout(&Matrix::from_rows(&shuffled).unwrap(), &units).unwrap();
        assert_eq!(a, b);

        assert!(matches!(global_readout(&Matrix::zeros(2, 3), &units), Err(ModelError::ShapeMismatch(_))));
    }

    #[test]
    fn edgeless_forward_is_constant() {
        let g = GeometricGraph::build(&[], &sample_generic_positions::<f64>(4, 2, 0)).unwrap();
        let p = init_params::<f64>(&cfg(3, 3, 2), 5).unwrap();
        let out = forward(&g, &p).unwrap();
        for (q, u) in p.global_units().iter().enumerate() {
            let one = u.bias.tanh();
            assert_eq!(out.global[q], ((one + one) + one) + one);
        }
    }

    #[test]
    fn forward_is_invariant_under_symmetries() {
        let g = random_graph(6, 3, 5);
        let p = init_params::<f64>(&cfg(3, 5, 3), 8).unwrap();
        let mut r = rng::seeded(77);
        let perm = PermutationMap::random(6, &mut r);
        let m = RigidMotion::random(3, &mut r);
        let moved = crate::geomgraph::apply_rigid_motion(&crate::geomgraph::apply_permutation(&g, &perm).unwrap(), &m).unwrap();
        let (a, b) = (forward(&g, &p).unwrap(), forward(&moved, &p).unwrap());
        for (x, y) in a.global.iter().zip(&b.global) {
            assert!((x - y).abs() < 1e-8);
        }
    }

    #[test]
    fn params_json_round_trip() {
        let p = init_params::<f64>(&cfg(2, 3, 2).with_features(1, 2), 13).unwrap();
        let doc = p.to_json();
        assert!(doc["filters"].get("1,3,3").is_some());
        assert!(doc["filters"].get("0,0,0").is_none());
        assert_eq!(GenNetParams::<f64>::from_json(&doc).unwrap(), p);
        let mut broken = doc.clone();
        broken["filters"].as_object_mut().unwrap().remove("0,1,2");
        assert!(matches!(GenNetParams::<f64>::from_json(&broken), Err(ModelError::InvalidParams(_))));
    }

    #[test]
    fn dimension_mismatch_in_forward() {
        let g = random_graph(3, 2, 0);
        let p = init_params::<f64>(&cfg(1, 2, 3), 0).unwrap();
        assert!(matches!(forward(&g, &p), Err(ModelError::ShapeMismatch(_))));
    }
}
