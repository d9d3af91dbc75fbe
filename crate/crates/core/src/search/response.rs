use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::features::{encode_features, FEATURE_DIM, STAGE_FEATURES};
use super::SearchError;
use crate::arch::{encode, ArchSpec, EncodingVector, EDGES_PER_BLOCK, MAX_STAGES};
use crate::cost::{arch_cost, CostBreakdown, CostConfig};
use crate::mem::{latency_estimate, MemWeights};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Evaluation {
    pub score: f64,
    pub latency_ms: f64,
}

/// Expensive black box the search optimizes, e.g. train-and-measure.
pub trait ResponseFunction: Sync {
    fn evaluate(&self, spec: &ArchSpec) -> Result<Evaluation, SearchError>;
    fn tag(&self) -> String;
}

/// Deterministic stand-in for training: a seeded linear score over the
/// encoding features, a concave reward for matrix work, and per-encoding
/// noise. Edge weights share one value per operation kind across slots,
/// with a small per-slot perturbation. Latency comes from the linear latency model over the cost counts.
#[derive(Clone, Debug)]
pub struct SyntheticResponse {
    pub seed: u64,
    weights: Vec<f64>,
    pub complexity_gain: f64,
    /// Matrix-op count at which the complexity reward reaches `ln 2`.
    pub complexity_scale: f64,
    pub noise: f64,
    pub latency_weights: MemWeights,
    pub cost: CostConfig,
}

fn fnv1a(values: &[i64], seed: u64) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64 ^ seed;
    for v in values {
        for byte in v.to_le_bytes() {
            h ^= u64::from(byte);
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    h
}

impl SyntheticResponse {
    pub fn new(seed: u64) -> SyntheticResponse {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let kind: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut weights = vec![0.0; FEATURE_DIM];
        weights[0] = rng.gen_range(-0.5..0.5);
        for s in 0..MAX_STAGES {
            let base = 1 + s * STAGE_FEATURES;
            for j in 0..5 {
                weights[base + j] = rng.gen_range(-0.1..0.1);
            }
            for e in 0..EDGES_PER_BLOCK {
                for (c, k) in kind.iter().enumerate() {
                    weights[base + 5 + e * 8 + c] = 0.25 * (k + rng.gen_range(-0.2..0.2));
                }
            }
        }
        SyntheticResponse {
            seed,
            weights,
            complexity_gain: 0.1,
            complexity_scale: 2e10,
            noise: 0.01,
            latency_weights: MemWeights::REFERENCE,
            cost: CostConfig::default(),
        }
    }

    /// Score from precomputed costs, for callers that already have them.
    pub fn score_with_costs(&self, encoding: &EncodingVector, costs: &CostBreakdown) -> f64 {
        let linear: f64 = encode_features(encoding).iter().zip(&self.weights).map(|(x, w)| x * w).sum();
        let complexity = self.complexity_gain * (costs.matrix_ops as f64 / self.complexity_scale).ln_1p();
        let mut rng = ChaCha8Rng::seed_from_u64(fnv1a(encoding.values(), self.seed));
        let jitter = if self.noise > 0.0 { rng.gen_range(-self.noise..self.noise) } else { 0.0 };
        linear + complexity + jitter
    }

    pub fn latency_ms(&self, costs: &CostBreakdown) -> f64 {
        latency_estimate(costs, &self.latency_weights)
    }

    pub fn score(&self, spec: &ArchSpec) -> Result<f64, SearchError> {
        Ok(self.evaluate(spec)?.score)
    }
}

impl ResponseFunction for SyntheticResponse {
    fn evaluate(&self, spec: &ArchSpec) -> Result<Evaluation, SearchError> {
        let encoding = encode(spec)?;
        let costs = arch_cost(spec, &self.cost)?;
        Ok(Evaluation { score: self.score_with_costs(&encoding, &costs), latency_ms: self.latency_ms(&costs) })
    }

    fn tag(&self) -> String {
        format!("synthetic(seed={})", self.seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::isynet;

    #[test]
    fn deterministic_per_seed() {
        let spec = isynet("isynet-n1").unwrap();
        let a = SyntheticResponse::new(3).evaluate(&spec).unwrap();
        assert_eq!(a, SyntheticResponse::new(3).evaluate(&spec).unwrap());
        assert_ne!(a.score, SyntheticResponse::new(4).evaluate(&spec).unwrap().score);
        assert!((a.latency_ms - 237.8).abs() < 1.0, "{}", a.latency_ms);
    }

    #[test]
    fn more_depth_is_rewarded_through_complexity() {
        let mut r = SyntheticResponse::new(0);
        r.noise = 0.0;
        r.weights.iter_mut().for_each(|w| *w = 0.0);
        let base = isynet("isynet-n1").unwrap();
        let deeper = isynet("isynet-n1-s3").unwrap();
        assert!(r.score(&deeper).unwrap() > r.score(&base).unwrap());
    }
}
