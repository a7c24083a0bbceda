//! Discrete rates reachable by an MGS-layered scalable stream.
//!
//! The band `[q_min, q_max]` is split into equal-PSNR enhancement layers,
//! and each layer's rate span is divided among MGS sublayers in proportion
//! to fixed weights. A stream can only be sent at the base rate plus a
//! whole number of MGS increments.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quality::RdParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SvcLayering {
    pub enhancement_layers: usize,
    pub mgs_weights: Vec<f64>,
}

impl Default for SvcLayering {
    fn default() -> Self {
        SvcLayering { enhancement_layers: 3, mgs_weights: vec![4.0, 3.0, 2.0, 3.0, 4.0] }
    }
}

impl SvcLayering {
    pub fn validate(&self) -> Result<()> {
        if self.mgs_weights.is_empty() || self.mgs_weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(Error::config("MGS weights must be positive"));
        }
        Ok(())
    }

    /// PSNR at the top of each layer, base layer first.
    pub fn layer_psnrs(&self, params: &RdParams) -> Vec<f64> {
        let e = self.enhancement_layers;
        let step = (params.q_max_db - params.q_min_db) / e.max(1) as f64;
        (0..=e).map(|k| if k == e && e > 0 { params.q_max_db } else { params.q_min_db + k as f64 * step }).collect()
    }
}

/// Achievable cumulative rates, ascending: the base rate, then every MGS
/// prefix of every enhancement layer.
pub fn discrete_rate_set(params: &RdParams, layering: &SvcLayering) -> Result<Vec<f64>> {
    layering.validate()?;
    let edges = layering
        .layer_psnrs(params)
        .iter()
        .map(|q| params.rate_of_psnr(*q))
        .collect::<Result<Vec<f64>>>()?;
    let total_w: f64 = layering.mgs_weights.iter().sum();
    let mut rates = vec![edges[0]];
    for pair in edges.windows(2) {
        let span = pair[1] - pair[0];
        let mut acc = 0.0;
        for w in &layering.mgs_weights {
            acc += w;
            rates.push(pair[0] + span * acc / total_w);
        }
    }
    Ok(rates)
}

/// Index of the largest point not above `rate`, or `None` below the base.
/// Rates within `1e-9` relative of a point count as reaching it.
pub fn snap_index(rates: &[f64], rate: f64) -> Option<usize> {
    let reach = rate * (1.0 + 1e-9);
    rates.iter().rposition(|r| *r <= reach)
}

/// Bytes each layer contributes to one GOP when streaming at `rate_bps`.
/// Index 0 is the base layer; higher layers are filled bottom up.
pub fn gop_layer_bytes(params: &RdParams, layering: &SvcLayering, rate_bps: f64, gop_seconds: f64) -> Result<Vec<usize>> {
    let edges = layering
        .layer_psnrs(params)
        .iter()
        .map(|q| params.rate_of_psnr(*q))
        .collect::<Result<Vec<f64>>>()?;
    let bytes = |bps: f64| (bps * gop_seconds / 8.0).round() as usize;
    let mut out = vec![bytes(edges[0].min(rate_bps))];
    for pair in edges.windows(2) {
        out.push(bytes((rate_bps.min(pair[1]) - pair[0]).max(0.0)));
    }
    Ok(out)
}
