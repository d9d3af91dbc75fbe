use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::{encode_features, stage_features, STAGE_FEATURES};
use super::meta::MetaDataset;
use super::SearchError;
use crate::arch::{EncodingVector, MAX_BLOCKS, MAX_CHANNEL_INCREMENT};
use crate::latency::regress::{ridge, LinearFit, Standardized};

pub trait Surrogate: Send + Sync {
    fn predict(&self, encoding: &EncodingVector) -> f64;
    fn kind(&self) -> SurrogateKind;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurrogateKind {
    LinearBaseline,
    Recurrent,
}

impl std::str::FromStr for SurrogateKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "linear" | "linear_baseline" => Ok(SurrogateKind::LinearBaseline),
            "recurrent" | "rnn" => Ok(SurrogateKind::Recurrent),
            _ => Err(format!("unknown surrogate '{s}'; expected linear or recurrent")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Accuracy,
    Latency,
}

/// Elman network over the stage groups with a linear read-out, trained by
/// full-batch Adam on squared error of the standardized target.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RnnParams {
    pub hidden: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for RnnParams {
    fn default() -> Self {
        RnnParams { hidden: 16, epochs: 300, learning_rate: 0.01, seed: 0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurrogateConfig {
    pub kind: SurrogateKind,
    /// Penalty of the linear baseline on standardized features.
    pub ridge_alpha: f64,
    pub rnn: RnnParams,
    pub min_records: usize,
}

impl Default for SurrogateConfig {
    fn default() -> Self {
        SurrogateConfig { kind: SurrogateKind::LinearBaseline, ridge_alpha: 1.0, rnn: RnnParams::default(), min_records: 10 }
    }
}

#[derive(Clone, Debug)]
pub struct LinearSurrogate {
    fit: LinearFit,
}

impl LinearSurrogate {
    pub fn fit(encodings: &[&EncodingVector], y: &[f64], alpha: f64) -> Result<Self, SearchError> {
        let x: Vec<Vec<f64>> = encodings.iter().map(|e| encode_features(e)).collect();
        let s = Standardized::new(&x, y);
        let fit = ridge(&s, alpha).map_err(|e| SearchError::Surrogate(e.to_string()))?;
        Ok(LinearSurrogate { fit })
    }
}

impl Surrogate for LinearSurrogate {
    fn predict(&self, encoding: &EncodingVector) -> f64 {
        self.fit.predict(&encode_features(encoding))
    }

    fn kind(&self) -> SurrogateKind {
        SurrogateKind::LinearBaseline
    }
}

/// Stage inputs with counts squashed to roughly unit range.
fn sequence(encoding: &EncodingVector) -> Vec<[f64; STAGE_FEATURES]> {
    let ns = encoding.num_stages().max(0) as usize;
    (0..ns.min(crate::arch::MAX_STAGES))
        .map(|s| {
            let mut f = stage_features(encoding.group(s), true);
            f[0] /= f64::from(MAX_BLOCKS);
            f[1] = (f[1]).ln_1p() / 2.0;
            f[2] /= f64::from(MAX_CHANNEL_INCREMENT);
            f
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct RnnSurrogate {
    hidden: usize,
    /// Row-major hidden x input.
    wx: Vec<f64>,
    /// Row-major hidden x hidden.
    wh: Vec<f64>,
    b: Vec<f64>,
    v: Vec<f64>,
    c: f64,
    y_mean: f64,
    y_scale: f64,
}

struct Grads {
    wx: Vec<f64>,
    wh: Vec<f64>,
    b: Vec<f64>,
    v: Vec<f64>,
    c: f64,
}

impl RnnSurrogate {
    fn forward(&self, seq: &[[f64; STAGE_FEATURES]]) -> Vec<Vec<f64>> {
        let h = self.hidden;
        let mut states = vec![vec![0.0; h]];
        for x in seq {
            let prev = states.last().expect("initial state");
            let next: Vec<f64> = (0..h)
                .map(|i| {
                    let mut a = self.b[i];
                    a += (0..STAGE_FEATURES).map(|j| self.wx[i * STAGE_FEATURES + j] * x[j]).sum::<f64>();
                    a += (0..h).map(|j| self.wh[i * h + j] * prev[j]).sum::<f64>();
                    a.tanh()
                })
                .collect();
            states.push(next);
        }
        states
    }

    fn output(&self, last: &[f64]) -> f64 {
        self.c + self.v.iter().zip(last).map(|(a, b)| a * b).sum::<f64>()
    }

    fn accumulate(&self, seq: &[[f64; STAGE_FEATURES]], target: f64, g: &mut Grads) -> f64 {
        let h = self.hidden;
        let states = self.forward(seq);
        let last = states.last().expect("initial state");
        let err = self.output(last) - target;
        g.c += err;
        for i in 0..h {
            g.v[i] += err * last[i];
        }
        let mut dh: Vec<f64> = self.v.iter().map(|v| err * v).collect();
        for t in (1..states.len()).rev() {
            let (cur, prev, x) = (&states[t], &states[t - 1], &seq[t - 1]);
            let da: Vec<f64> = (0..h).map(|i| dh[i] * (1.0 - cur[i] * cur[i])).collect();
            for i in 0..h {
                g.b[i] += da[i];
                for j in 0..STAGE_FEATURES {
                    g.wx[i * STAGE_FEATURES + j] += da[i] * x[j];
                }
                for j in 0..h {
                    g.wh[i * h + j] += da[i] * prev[j];
                }
            }
            dh = (0..h).map(|j| (0..h).map(|i| self.wh[i * h + j] * da[i]).sum()).collect();
        }
        0.5 * err * err
    }

    pub fn fit(encodings: &[&EncodingVector], y: &[f64], prm: &RnnParams) -> Result<Self, SearchError> {
        let n = y.len() as f64;
        let y_mean = y.iter().sum::<f64>() / n;
        let var = y.iter().map(|v| (v - y_mean).powi(2)).sum::<f64>() / n;
        let y_scale = if var > 0.0 { var.sqrt() } else { 1.0 };
        let targets: Vec<f64> = y.iter().map(|v| (v - y_mean) / y_scale).collect();
        let seqs: Vec<_> = encodings.iter().map(|e| sequence(e)).collect();
        let h = prm.hidden.max(1);
        let mut rng = ChaCha8Rng::seed_from_u64(prm.seed);
        let bound = 1.0 / (h as f64).sqrt();
        let mut init = |len: usize| -> Vec<f64> { (0..len).map(|_| rng.gen_range(-bound..bound)).collect() };
        let mut net = RnnSurrogate {
            hidden: h,
            wx: init(h * STAGE_FEATURES),
            wh: init(h * h),
            b: vec![0.0; h],
            v: init(h),
            c: 0.0,
            y_mean,
            y_scale,
        };
        let sizes = [h * STAGE_FEATURES, h * h, h, h, 1];
        let mut m: Vec<Vec<f64>> = sizes.iter().map(|&s| vec![0.0; s]).collect();
        let mut s2: Vec<Vec<f64>> = sizes.iter().map(|&s| vec![0.0; s]).collect();
        let (beta1, beta2, eps): (f64, f64, f64) = (0.9, 0.999, 1e-8);
        for epoch in 1..=prm.epochs {
            let mut g = Grads { wx: vec![0.0; sizes[0]], wh: vec![0.0; sizes[1]], b: vec![0.0; h], v: vec![0.0; h], c: 0.0 };
            for (seq, &t) in seqs.iter().zip(&targets) {
                net.accumulate(seq, t, &mut g);
            }
            let mut c_grad = [g.c];
            let grads: [&mut [f64]; 5] = [&mut g.wx, &mut g.wh, &mut g.b, &mut g.v, &mut c_grad];
            let mut c_param = [net.c];
            let params: [&mut [f64]; 5] = [&mut net.wx, &mut net.wh, &mut net.b, &mut net.v, &mut c_param];
            let (bc1, bc2) = (1.0 - beta1.powi(epoch as i32), 1.0 - beta2.powi(epoch as i32));
            for (k, (p, gr)) in params.into_iter().zip(grads).enumerate() {
                for i in 0..p.len() {
                    let gi = gr[i] / n;
                    m[k][i] = beta1 * m[k][i] + (1.0 - beta1) * gi;
                    s2[k][i] = beta2 * s2[k][i] + (1.0 - beta2) * gi * gi;
                    p[i] -= prm.learning_rate * (m[k][i] / bc1) / ((s2[k][i] / bc2).sqrt() + eps);
                }
            }
            net.c = c_param[0];
        }
        if net.wx.iter().chain(&net.wh).chain(&net.v).any(|v| !v.is_finite()) {
            return Err(SearchError::Surrogate("recurrent surrogate diverged".into()));
        }
        Ok(net)
    }
}

impl Surrogate for RnnSurrogate {
    fn predict(&self, encoding: &EncodingVector) -> f64 {
        let states = self.forward(&sequence(encoding));
        self.y_mean + self.y_scale * self.output(states.last().expect("initial state"))
    }

    fn kind(&self) -> SurrogateKind {
        SurrogateKind::Recurrent
    }
}

pub fn fit_surrogate(h: &MetaDataset, target: Target, cfg: &SurrogateConfig) -> Result<Box<dyn Surrogate>, SearchError> {
    let need = cfg.min_records.max(2);
    if h.len() < need {
        return Err(SearchError::TooFewRecords { have: h.len(), need });
    }
    let encodings: Vec<&EncodingVector> = h.records().iter().map(|r| &r.encoding).collect();
    let y: Vec<f64> = h
        .records()
        .iter()
        .map(|r| match target {
            Target::Accuracy => r.response,
            Target::Latency => r.latency_ms,
        })
        .collect();
    Ok(match cfg.kind {
        SurrogateKind::LinearBaseline => Box::new(LinearSurrogate::fit(&encodings, &y, cfg.ridge_alpha)?),
        SurrogateKind::Recurrent => Box::new(RnnSurrogate::fit(&encodings, &y, &cfg.rnn)?),
    })
}
