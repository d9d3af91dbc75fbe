//! Surrogate-model-based search over the architecture space and Pareto
//! utilities.
//!
//! The loop keeps a history of evaluated architectures, fits one surrogate
//! for the response and one for latency, proposes the best predicted
//! candidates under a latency budget, evaluates them and repeats.

mod features;
mod meta;
mod pareto;
mod response;
mod smbo;
mod surrogate;

pub use features::{encode_features, stage_features, FEATURE_DIM, STAGE_FEATURES};
pub use meta::{encoding_header, MetaDataset, MetaRecord};
pub use pareto::{pareto_front, pareto_indices, ParetoFront, ParetoPoint};
pub use response::{Evaluation, ResponseFunction, SyntheticResponse};
pub use smbo::{
    propose, random_search, run_smbo, Candidate, ProposeOptions, RunManifest, SmboConfig, SmboFailure, SmboOutcome,
};
pub use surrogate::{
    fit_surrogate, LinearSurrogate, RnnParams, RnnSurrogate, Surrogate, SurrogateConfig, SurrogateKind, Target,
};

use thiserror::Error;

use crate::arch::ArchError;
use crate::cost::CostError;

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("history has {have} records; at least {need} are needed to fit a surrogate")]
    TooFewRecords { have: usize, need: usize },
    #[error("no candidate is predicted within {budget_ms} ms (fastest predicted {fastest_ms:.3} ms); raise the budget")]
    NoFeasible { budget_ms: f64, fastest_ms: f64 },
    #[error("surrogate fit failed: {0}")]
    Surrogate(String),
    #[error("evaluator failed: {0}")]
    Evaluator(String),
    #[error("line {line}: {message}")]
    Row { line: u64, message: String },
    #[error(transparent)]
    Arch(#[from] ArchError),
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
