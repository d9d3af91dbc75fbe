//! NPU-aware architecture search toolkit.
//!
//! * [`arch`]: the block-structured search space, its integer encoding and
//!   shape inference.
//! * [`cost`]: matrix/vector/data operation counts, parameters and MACs.
//! * [`mem`]: matrix efficiency measure and the linear latency model.
//! * [`latency`]: fitting latency regressions on measured or synthetic data.
//! * [`search`]: surrogate-model-based search and Pareto utilities.
//! * [`scaler`]: per-stage depth scaling under latency budgets.
//! * [`presets`]: built-in architectures and design-space samplers.

pub mod arch;
pub mod cost;
pub mod latency;
pub mod mem;
pub mod network;
pub mod plot;
pub mod presets;
pub mod scaler;
pub mod search;
