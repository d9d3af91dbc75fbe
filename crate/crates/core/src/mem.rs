//! Matrix efficiency measure and the linear latency model it is derived
//! from.
//!
//! `MEM = wm*M / (wm*M + wv*V + wd*D)` where `M`, `V`, `D` are the
//! architecture's total matrix ops, vector ops and data elements, and the
//! weights come from `latency = w0 + wm*M + wv*V + wd*D`.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arch::ArchSpec;
use crate::cost::{arch_cost, network_cost, CostBreakdown, CostConfig, CostError};
use crate::network::Network;

#[derive(Debug, Error)]
pub enum MemError {
    #[error("matrix weight must be positive, got {0}")]
    NonPositiveMatrixWeight(f64),
    #[error("weighted cost denominator is {0}; network is degenerate")]
    DegenerateDenominator(f64),
    #[error("mean over an empty set of architectures")]
    EmptySet,
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error("weight file: {0}")]
    Io(#[from] std::io::Error),
    #[error("weight file: {0}")]
    Json(#[from] serde_json::Error),
}

/// Latency-model coefficients in milliseconds per unit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemWeights {
    pub w0: f64,
    pub wm: f64,
    pub wv: f64,
    pub wd: f64,
}

impl MemWeights {
    /// Coefficients measured on the reference NPU at batch 16.
    pub const REFERENCE: MemWeights = MemWeights { w0: 0.773, wm: 2.57e-9, wv: -1.26e-8, wd: 3.36e-8 };

    pub fn new(w0: f64, wm: f64, wv: f64, wd: f64) -> Result<Self, MemError> {
        if !(wm > 0.0) {
            return Err(MemError::NonPositiveMatrixWeight(wm));
        }
        Ok(MemWeights { w0, wm, wv, wd })
    }

    pub fn load(path: &Path) -> Result<Self, MemError> {
        let w: MemWeights = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        MemWeights::new(w.w0, w.wm, w.wv, w.wd)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("weights serialize")
    }
}

impl Default for MemWeights {
    fn default() -> Self {
        MemWeights::REFERENCE
    }
}

/// MEM of raw totals. Only the full denominator is guarded; a negative
/// vector weight is used as given.
pub fn mem_of(m: f64, v: f64, d: f64, w: &MemWeights) -> Result<f64, MemError> {
    if !(w.wm > 0.0) {
        return Err(MemError::NonPositiveMatrixWeight(w.wm));
    }
    let num = w.wm * m;
    let den = num + w.wv * v + w.wd * d;
    if !(den > 0.0) || !den.is_finite() {
        return Err(MemError::DegenerateDenominator(den));
    }
    Ok(num / den)
}

pub fn mem(costs: &CostBreakdown, w: &MemWeights) -> Result<f64, MemError> {
    let (m, v, d) = costs.as_f64();
    mem_of(m, v, d, w)
}

pub fn latency_estimate(costs: &CostBreakdown, w: &MemWeights) -> f64 {
    let (m, v, d) = costs.as_f64();
    w.w0 + w.wm * m + w.wv * v + w.wd * d
}

pub fn network_mem(net: &Network, w: &MemWeights, config: &CostConfig) -> Result<f64, MemError> {
    mem(&network_cost(net, config.batch, config.fusion, &config.rules)?, w)
}

pub fn arch_mem(spec: &ArchSpec, w: &MemWeights, config: &CostConfig) -> Result<f64, MemError> {
    mem(&arch_cost(spec, config)?, w)
}

/// Mean MEM over a design-space sample.
pub fn mmem<'a, I>(nets: I, w: &MemWeights, config: &CostConfig) -> Result<f64, MemError>
where
    I: IntoIterator<Item = &'a Network>,
{
    let mut sum = 0.0;
    let mut count = 0usize;
    for net in nets {
        sum += network_mem(net, w, config)?;
        count += 1;
    }
    if count == 0 {
        return Err(MemError::EmptySet);
    }
    Ok(sum / count as f64)
}

pub fn mmem_specs(specs: &[ArchSpec], w: &MemWeights, config: &CostConfig) -> Result<f64, MemError> {
    if specs.is_empty() {
        return Err(MemError::EmptySet);
    }
    let total: f64 = specs.iter().map(|s| arch_mem(s, w, config)).sum::<Result<f64, _>>()?;
    Ok(total / specs.len() as f64)
}
