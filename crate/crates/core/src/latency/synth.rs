use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{LatencyDataset, LatencyRow};
use crate::mem::MemWeights;

/// Counts are drawn log-uniformly over the given ranges, vector ops never
/// exceed data movement, and latency is the linear model scaled by
/// `1 + U(-noise, noise)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub rows: usize,
    pub seed: u64,
    pub weights: MemWeights,
    pub noise: f64,
    pub matrix_range: (f64, f64),
    pub data_range: (f64, f64),
    pub vector_min: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            rows: 400,
            seed: 0,
            weights: MemWeights::REFERENCE,
            noise: 0.05,
            matrix_range: (1e7, 1e9),
            data_range: (1e6, 10f64.powf(8.5)),
            vector_min: 1e6,
        }
    }
}

fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return lo;
    }
    rng.gen_range(lo.ln()..hi.ln()).exp()
}

/// Counts are rounded to integers and latency to 1e-6 ms so the dataset
/// survives a CSV roundtrip unchanged.
pub fn synthetic_dataset(spec: &SyntheticSpec) -> LatencyDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let w = spec.weights;
    let rows = (0..spec.rows)
        .map(|i| {
            let m = log_uniform(&mut rng, spec.matrix_range.0, spec.matrix_range.1).round();
            let d = log_uniform(&mut rng, spec.data_range.0, spec.data_range.1).round();
            let v = log_uniform(&mut rng, spec.vector_min.min(d), d).round();
            let clean = w.w0 + w.wm * m + w.wv * v + w.wd * d;
            let jitter = if spec.noise > 0.0 { rng.gen_range(-spec.noise..spec.noise) } else { 0.0 };
            let latency = (clean * (1.0 + jitter) * 1e6).round() / 1e6;
            LatencyRow { arch_id: format!("synth-{i:04}"), matrix_ops: m, vector_ops: v, data_ops: d, latency_ms: latency }
        })
        .collect();
    LatencyDataset::new(rows).expect("at least four rows with positive latency")
}
