//! Latency regressions over `(matrix_ops, vector_ops, data_ops)` and the
//! MEM weights derived from them.

pub(crate) mod regress;
mod report;
mod synth;

pub use regress::{BayesRidgeParams, LinearFit, SgdParams, SvrParams};
pub use report::{method_report, report_csv, scatter_csv, scatter_svg, MethodRow, ProbeSet};
pub use synth::{synthetic_dataset, SyntheticSpec};

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cost::CostBreakdown;
use crate::mem::{MemError, MemWeights};

use regress::Standardized;

/// A dataset needs at least one row per coefficient.
pub const MIN_ROWS: usize = 4;

#[derive(Debug, Error)]
pub enum LatencyError {
    #[error("dataset has {0} rows; at least {MIN_ROWS} are needed to fit an intercept and three weights")]
    TooFewRows(usize),
    #[error("line {line}: {message}")]
    Row { line: u64, message: String },
    #[error("row '{arch_id}': latency must be positive, got {latency_ms}")]
    NonPositiveLatency { arch_id: String, latency_ms: f64 },
    #[error("design matrix is rank-deficient; use the ridge method instead of ols")]
    RankDeficient,
    #[error("{0} did not converge to finite coefficients")]
    Diverged(&'static str),
    #[error("cannot evaluate on an empty dataset")]
    Empty,
    #[error("target value is zero at row {0}; percentage error is undefined")]
    ZeroTarget(usize),
    #[error("unknown method '{0}'; expected one of ols, ridge, bayes_ridge, omp, sgd, svr")]
    UnknownMethod(String),
    #[error(transparent)]
    Mem(#[from] MemError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatencyRow {
    pub arch_id: String,
    pub matrix_ops: f64,
    pub vector_ops: f64,
    pub data_ops: f64,
    pub latency_ms: f64,
}

impl LatencyRow {
    pub fn from_costs(arch_id: impl Into<String>, costs: &CostBreakdown, latency_ms: f64) -> LatencyRow {
        let (m, v, d) = costs.as_f64();
        LatencyRow { arch_id: arch_id.into(), matrix_ops: m, vector_ops: v, data_ops: d, latency_ms }
    }

    pub fn features(&self) -> [f64; 3] {
        [self.matrix_ops, self.vector_ops, self.data_ops]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LatencyDataset {
    rows: Vec<LatencyRow>,
}

impl LatencyDataset {
    pub fn new(rows: Vec<LatencyRow>) -> Result<LatencyDataset, LatencyError> {
        if rows.len() < MIN_ROWS {
            return Err(LatencyError::TooFewRows(rows.len()));
        }
        if let Some(r) = rows.iter().find(|r| !(r.latency_ms > 0.0)) {
            return Err(LatencyError::NonPositiveLatency { arch_id: r.arch_id.clone(), latency_ms: r.latency_ms });
        }
        Ok(LatencyDataset { rows })
    }

    pub fn rows(&self) -> &[LatencyRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Reads `arch_id,matrix_ops,vector_ops,data_ops,latency_ms` with a
    /// header row. Errors carry the 1-based line number.
    pub fn read_csv<R: Read>(reader: R) -> Result<LatencyDataset, LatencyError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let mut rows = Vec::new();
        for rec in rdr.deserialize::<LatencyRow>() {
            let row = rec.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line());
                LatencyError::Row { line, message: e.to_string() }
            })?;
            if !(row.latency_ms > 0.0) {
                return Err(LatencyError::Row {
                    line: rows.len() as u64 + 2,
                    message: format!("latency must be positive, got {}", row.latency_ms),
                });
            }
            if row.features().iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(LatencyError::Row {
                    line: rows.len() as u64 + 2,
                    message: "operation counts must be finite and non-negative".into(),
                });
            }
            rows.push(row);
        }
        LatencyDataset::new(rows)
    }

    pub fn load(path: &Path) -> Result<LatencyDataset, LatencyError> {
        LatencyDataset::read_csv(std::fs::File::open(path)?)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), LatencyError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["arch_id", "matrix_ops", "vector_ops", "data_ops", "latency_ms"])?;
        for r in &self.rows {
            w.write_record([
                r.arch_id.clone(),
                format!("{:.0}", r.matrix_ops),
                format!("{:.0}", r.vector_ops),
                format!("{:.0}", r.data_ops),
                format!("{:.6}", r.latency_ms),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    fn design(&self) -> (Vec<Vec<f64>>, Vec<f64>) {
        let x = self.rows.iter().map(|r| r.features().to_vec()).collect();
        let y = self.rows.iter().map(|r| r.latency_ms).collect();
        (x, y)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Ols,
    Ridge,
    BayesRidge,
    Omp,
    Sgd,
    Svr,
}

impl Method {
    pub const ALL: [Method; 6] = [Method::Ols, Method::Ridge, Method::BayesRidge, Method::Omp, Method::Sgd, Method::Svr];

    pub fn name(self) -> &'static str {
        match self {
            Method::Ols => "ols",
            Method::Ridge => "ridge",
            Method::BayesRidge => "bayes_ridge",
            Method::Omp => "omp",
            Method::Sgd => "sgd",
            Method::Svr => "svr",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = LatencyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| LatencyError::UnknownMethod(s.to_string()))
    }
}

/// Settings for every method; each fit records the full set it ran with.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    /// Penalty on standardized coefficients.
    pub ridge_alpha: f64,
    pub omp_nonzero: usize,
    pub bayes: BayesRidgeParams,
    pub sgd: SgdParams,
    pub svr: SvrParams,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            ridge_alpha: 1.0,
            omp_nonzero: 3,
            bayes: BayesRidgeParams::default(),
            sgd: SgdParams::default(),
            svr: SvrParams::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitMetrics {
    pub r2: f64,
    /// Percent.
    pub mape: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FittedLatencyModel {
    pub method: Method,
    /// Raw coefficients; `wm` may be non-positive here.
    pub weights: MemWeights,
    pub train: FitMetrics,
    pub iterations: usize,
    pub hyperparams: Hyperparams,
}

impl FittedLatencyModel {
    pub fn predict(&self, row: &LatencyRow) -> f64 {
        let w = &self.weights;
        w.w0 + w.wm * row.matrix_ops + w.wv * row.vector_ops + w.wd * row.data_ops
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }
}

pub fn fit(data: &LatencyDataset, method: Method, hp: &Hyperparams) -> Result<FittedLatencyModel, LatencyError> {
    let (x, y) = data.design();
    let s = Standardized::new(&x, &y);
    let lf = match method {
        Method::Ols => regress::ols(&s)?,
        Method::Ridge => regress::ridge(&s, hp.ridge_alpha)?,
        Method::BayesRidge => regress::bayes_ridge(&s, &hp.bayes)?,
        Method::Omp => regress::omp(&s, hp.omp_nonzero)?,
        Method::Sgd => regress::sgd(&s, &hp.sgd)?,
        Method::Svr => regress::svr(&s, &hp.svr)?,
    };
    let weights = MemWeights { w0: lf.intercept, wm: lf.coef[0], wv: lf.coef[1], wd: lf.coef[2] };
    let mut model =
        FittedLatencyModel { method, weights, train: FitMetrics { r2: 0.0, mape: 0.0 }, iterations: lf.iterations, hyperparams: *hp };
    model.train = evaluate(&model, data)?;
    Ok(model)
}

/// R² and MAPE of `predict` against raw targets.
pub fn metrics(pred: &[f64], y: &[f64]) -> Result<FitMetrics, LatencyError> {
    if y.is_empty() {
        return Err(LatencyError::Empty);
    }
    if let Some(i) = y.iter().position(|v| *v == 0.0) {
        return Err(LatencyError::ZeroTarget(i));
    }
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let ss_res: f64 = pred.iter().zip(y).map(|(p, v)| (v - p).powi(2)).sum();
    let r2 = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else if ss_res == 0.0 {
        1.0
    } else {
        f64::NEG_INFINITY
    };
    let mape = pred.iter().zip(y).map(|(p, v)| ((p - v) / v).abs()).sum::<f64>() / n * 100.0;
    Ok(FitMetrics { r2, mape })
}

pub fn evaluate(model: &FittedLatencyModel, data: &LatencyDataset) -> Result<FitMetrics, LatencyError> {
    let pred: Vec<f64> = data.rows().iter().map(|r| model.predict(r)).collect();
    let y: Vec<f64> = data.rows().iter().map(|r| r.latency_ms).collect();
    metrics(&pred, &y)
}

pub fn derive_mem_weights(model: &FittedLatencyModel) -> Result<MemWeights, LatencyError> {
    let w = model.weights;
    Ok(MemWeights::new(w.w0, w.wm, w.wv, w.wd)?)
}
