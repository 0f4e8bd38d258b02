//! Margin tests on a pair across random parameter draws.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use super::pairs::PairSpec;
use super::{auto_channels, margin, HarnessError, ModelKind, ModelSpec, Verdict, TAU_SEP};
use crate::gennet::InitScale;
use crate::geomgraph::power_graph;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeparationConfig {
    pub model: ModelKind,
    pub power: usize,
    pub depth: usize,
    /// `None` picks `2 n d + 1` for the pair's `n` and `d`.
    pub channels: Option<usize>,
    pub trials: usize,
    pub seed: u64,
    pub init: InitScale,
}

impl SeparationConfig {
    pub fn new(model: ModelKind, power: usize, depth: usize, trials: usize, seed: u64) -> Self {
        Self { model, power, depth, channels: None, trials, seed, init: InitScale::default() }
    }

    pub fn with_channels(mut self, channels: usize) -> Self {
        self.channels = Some(channels);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeparationResult {
    pub pair: String,
    pub model: ModelKind,
    pub power: usize,
    pub depth: usize,
    pub channels: usize,
    pub trials: usize,
    pub seed: u64,
    /// One margin per trial, in trial order.
    pub margins: Vec<f64>,
    pub separated_count: usize,
    pub verdict: Verdict,
}

impl SeparationResult {
    pub fn min_margin(&self) -> f64 {
        self.margins.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_margin(&self) -> f64 {
        self.margins.iter().copied().fold(0.0, f64::max)
    }
}

/// Replaces both members of `pair` by their `power`-th power graphs, then for
/// each trial draws parameters from `derive_seed(seed, trial)` and records
/// the L∞ margin between the two global feature vectors.
pub fn run_separation(pair: &PairSpec, cfg: &SeparationConfig) -> Result<SeparationResult, HarnessError> {
    if cfg.trials == 0 || cfg.power == 0 {
        return Err(HarnessError::InvalidArgument(format!("need trials >= 1 and power >= 1 (got {} and {})", cfg.trials, cfg.power)));
    }
    let (n, d) = (pair.g.n().max(pair.h.n()), pair.g.d());
    let spec = ModelSpec {
        kind: cfg.model,
        depth: cfg.depth,
        channels: cfg.channels.unwrap_or_else(|| auto_channels(n, d)),
        dim: d,
        init: cfg.init,
    };
    let g = power_graph(&pair.g, cfg.power);
    let h = power_graph(&pair.h, cfg.power);
    let margins = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let model = spec.instantiate(rng::derive_seed(cfg.seed, t as u64), &g)?;
            Ok(margin(&model.global(&g)?, &model.global(&h)?))
        })
        .collect::<Result<Vec<f64>, HarnessError>>()?;
    Ok(SeparationResult {
        pair: pair.name.clone(),
        model: cfg.model,
        power: cfg.power,
        depth: cfg.depth,
        channels: spec.channels,
        trials: cfg.trials,
        seed: cfg.seed,
        separated_count: margins.iter().filter(|&&m| m > TAU_SEP).count(),
        verdict: Verdict::from_margins(&margins),
        margins,
    })
}

/// A batch of separation runs with the settings that produced them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub config: serde_json::Value,
    pub seeds: Vec<u64>,
    pub results: Vec<SeparationResult>,
    /// Only filled in on request: timings would break byte-identical reruns.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_clock_seconds: Option<f64>,
}

/// Aligned text table: one row per `(pair, model)`, one column per power,
/// cells `verdict k/trials [min, max]` with margins at 3 decimals.
pub fn render_table(results: &[SeparationResult]) -> String {
    let powers: BTreeSet<usize> = results.iter().map(|r| r.power).collect();
    let mut rows: Vec<(String, ModelKind)> = Vec::new();
    for r in results {
        if !rows.iter().any(|(p, m)| *p == r.pair && *m == r.model) {
            rows.push((r.pair.clone(), r.model));
        }
    }
    let mut header = vec!["pair".to_string(), "model".to_string()];
    header.extend(powers.iter().map(|p| format!("power {p}")));
    let mut table = vec![header];
    for (pair, model) in &rows {
        let mut line = vec![pair.clone(), model.to_string()];
        for &p in &powers {
            let cell = results
                .iter()
                .find(|r| r.pair == *pair && r.model == *model && r.power == p)
                .map(|r| format!("{} {}/{} [{:.3e}, {:.3e}]", r.verdict, r.separated_count, r.trials, r.min_margin(), r.max_margin()))
                .unwrap_or_else(|| "-".to_string());
            line.push(cell);
        }
        table.push(line);
    }
    let widths: Vec<usize> = (0..table[0].len()).map(|c| table.iter().map(|row| row[c].chars().count()).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for row in &table {
        let cells: Vec<String> = row.iter().zip(&widths).map(|(cell, w)| format!("{cell:<w$}")).collect();
        let _ = writeln!(out, "{}", cells.join("  ").trim_end());
    }
    out
}
