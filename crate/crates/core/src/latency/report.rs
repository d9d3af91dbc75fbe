use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{fit, FittedLatencyModel, Hyperparams, LatencyDataset, LatencyError, Method};
use crate::cost::{network_cost, CostBreakdown, CostConfig, CostError};
use crate::mem::mem;
use crate::plot::{render, Panel, Series};
use crate::presets::{space_sampler, Space};

/// Costs of a fixed design-space sample, reused across weight sets.
#[derive(Clone, Debug)]
pub struct ProbeSet {
    pub space: Space,
    pub costs: Vec<CostBreakdown>,
}

impl ProbeSet {
    /// One seeded sample of `n` networks per space.
    pub fn sample_all(n: usize, seed: u64, config: &CostConfig) -> Result<Vec<ProbeSet>, CostError> {
        Space::ALL
            .iter()
            .enumerate()
            .map(|(i, &space)| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
                let costs = space_sampler(space, n, &mut rng)
                    .iter()
                    .map(|s| network_cost(&s.network, config.batch, config.fusion, &config.rules))
                    .collect::<Result<_, _>>()?;
                Ok(ProbeSet { space, costs })
            })
            .collect()
    }

    /// Mean MEM under the model's weights; `None` if the weights cannot
    /// define MEM (non-positive matrix weight or degenerate denominator).
    pub fn mmem(&self, model: &FittedLatencyModel) -> Option<f64> {
        if self.costs.is_empty() {
            return None;
        }
        let mut sum = 0.0;
        for c in &self.costs {
            sum += mem(c, &model.weights).ok()?;
        }
        Some(sum / self.costs.len() as f64)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MethodRow {
    pub method: Method,
    pub r2: f64,
    pub mape: f64,
    pub weights: crate::mem::MemWeights,
    /// Per probe space, in the order of the probe list.
    pub mmem: Vec<(Space, Option<f64>)>,
}

/// Fits every method and scores the probe spaces with each result.
pub fn method_report(
    data: &LatencyDataset,
    hp: &Hyperparams,
    probes: &[ProbeSet],
) -> Result<Vec<MethodRow>, LatencyError> {
    Method::ALL
        .iter()
        .map(|&method| {
            let model = fit(data, method, hp)?;
            Ok(MethodRow {
                method,
                r2: model.train.r2,
                mape: model.train.mape,
                weights: model.weights,
                mmem: probes.iter().map(|p| (p.space, p.mmem(&model))).collect(),
            })
        })
        .collect()
}

pub fn report_csv(rows: &[MethodRow]) -> String {
    let mut out = String::from("method,r2,mape,w0,wm,wv,wd");
    if let Some(first) = rows.first() {
        for (space, _) in &first.mmem {
            out.push_str(&format!(",mmem_{space}"));
        }
    }
    out.push('\n');
    for r in rows {
        let w = &r.weights;
        out.push_str(&format!("{},{:.6},{:.4},{:.6e},{:.6e},{:.6e},{:.6e}", r.method, r.r2, r.mape, w.w0, w.wm, w.wv, w.wd));
        for (_, v) in &r.mmem {
            match v {
                Some(v) => out.push_str(&format!(",{v:.6}")),
                None => out.push(','),
            }
        }
        out.push('\n');
    }
    out
}

/// Long-format points: one row per (architecture, count kind).
pub fn scatter_csv(data: &LatencyDataset) -> String {
    let mut out = String::from("arch_id,feature,count,latency_ms\n");
    for r in data.rows() {
        for (name, v) in [("matrix_ops", r.matrix_ops), ("vector_ops", r.vector_ops), ("data_ops", r.data_ops)] {
            out.push_str(&format!("{},{name},{v:.0},{:.6}\n", r.arch_id, r.latency_ms));
        }
    }
    out
}

/// Latency against each count, plus vector ops against data movement.
pub fn scatter_svg(data: &LatencyDataset) -> String {
    let rows = data.rows();
    let panel = |title: &str, x_label: &str, y_label: &str, log_y: bool, points: Vec<(f64, f64)>| Panel {
        title: title.into(),
        x_label: x_label.into(),
        y_label: y_label.into(),
        log_x: true,
        log_y,
        series: vec![Series { name: format!("{} architectures", points.len()), color: "#1f77b4", points, line: false }],
    };
    let panels = [
        panel("latency vs matrix ops", "matrix ops", "latency, ms", false, rows.iter().map(|r| (r.matrix_ops, r.latency_ms)).collect()),
        panel("latency vs vector ops", "vector ops", "latency, ms", false, rows.iter().map(|r| (r.vector_ops, r.latency_ms)).collect()),
        panel("latency vs data movement", "data ops", "latency, ms", false, rows.iter().map(|r| (r.data_ops, r.latency_ms)).collect()),
        panel("vector ops vs data movement", "data ops", "vector ops", true, rows.iter().map(|r| (r.data_ops, r.vector_ops)).collect()),
    ];
    render(&panels, 2)
}
