mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "npunas", version, about = "NPU-aware architecture costing, latency fitting, search and scaling")]
pub struct Cli {
    /// Seed for every random draw of the command.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output file (directory for `search`); stdout when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Output format; each command lists the formats it supports.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// MEM, latency estimate and cost breakdown of one architecture.
    Mem(MemArgs),
    /// Fit latency regressions on a measurement CSV.
    FitLatency(FitLatencyArgs),
    /// Write the synthetic latency dataset.
    SynthLatency(SynthLatencyArgs),
    /// Surrogate-model-based search against the synthetic response.
    Search(SearchArgs),
    /// Per-stage depth scaling under latency budgets.
    Scale(ScaleArgs),
    /// Non-dominated rows of a CSV by latency (lower) and score (higher).
    Pareto(ParetoArgs),
    /// Architecture JSON, encoding CSV or per-layer costs of a preset or file.
    Export(ExportArgs),
    /// Seeded design-space sample with per-network costs and MEM.
    SampleSpace(SampleSpaceArgs),
}

#[derive(Args, Debug, Clone)]
#[group(required = true, multiple = false)]
pub struct ArchSource {
    /// Built-in architecture name, e.g. isynet-n0.
    #[arg(long)]
    pub preset: Option<String>,
    /// Architecture JSON file.
    #[arg(long)]
    pub arch: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct CostArgs {
    #[arg(long, default_value_t = 16)]
    pub batch: u32,
    /// Input resolution (square).
    #[arg(long, default_value_t = 224)]
    pub resolution: u32,
    /// Cost BN and activations after convolutions separately.
    #[arg(long)]
    pub no_fusion: bool,
    /// Latency-model weights JSON (w0, wm, wv, wd); reference weights otherwise.
    #[arg(long)]
    pub weights: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct MemArgs {
    #[command(flatten)]
    pub source: ArchSource,
    #[command(flatten)]
    pub cost: CostArgs,
    /// Emit the per-layer breakdown instead of the summary (csv only).
    #[arg(long)]
    pub layers: bool,
}

#[derive(Args, Debug)]
pub struct FitLatencyArgs {
    /// CSV with arch_id,matrix_ops,vector_ops,data_ops,latency_ms.
    pub dataset: PathBuf,
    /// Comma-separated methods or `all`.
    #[arg(long, default_value = "all")]
    pub method: String,
    /// Write the weights of the first listed method here.
    #[arg(long)]
    pub weights_out: Option<PathBuf>,
    /// Write a scatter plot of latency against each count (csv or svg by extension).
    #[arg(long)]
    pub scatter: Option<PathBuf>,
    /// Networks sampled per design space for the mMEM columns; 0 skips them.
    #[arg(long, default_value_t = 100)]
    pub probe_samples: usize,
    #[arg(long, default_value_t = 1.0)]
    pub ridge_alpha: f64,
    #[arg(long, default_value_t = 3)]
    pub omp_nonzero: usize,
}

#[derive(Args, Debug)]
pub struct SynthLatencyArgs {
    #[arg(long, default_value_t = 400)]
    pub rows: usize,
    /// Relative half-width of the uniform multiplicative noise.
    #[arg(long, default_value_t = 0.05)]
    pub noise: f64,
}

#[derive(Args, Debug)]
pub struct SearchArgs {
    #[arg(long, default_value_t = 50)]
    pub warmup: usize,
    #[arg(long, default_value_t = 10)]
    pub rounds: usize,
    #[arg(long, default_value_t = 1000)]
    pub pool: usize,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    /// Latency budget in ms; unbounded when omitted.
    #[arg(long)]
    pub budget: Option<f64>,
    /// linear or recurrent.
    #[arg(long, default_value = "linear")]
    pub surrogate: String,
    /// Seed of the synthetic response function; defaults to --seed.
    #[arg(long)]
    pub response_seed: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ScoreKind {
    /// Seeded synthetic response.
    Synthetic,
    /// Logarithm of matrix operations.
    Macs,
}

#[derive(Args, Debug)]
pub struct ScaleArgs {
    #[command(flatten)]
    pub source: ArchSource,
    #[command(flatten)]
    pub cost: CostArgs,
    /// Comma-separated latency budgets in ms.
    #[arg(long, value_delimiter = ',', required = true)]
    pub budgets: Vec<f64>,
    /// Comma-separated multipliers applied to every stage.
    #[arg(long, value_delimiter = ',', default_value = "1,1.25,1.5,2,3")]
    pub grid: Vec<f64>,
    #[arg(long, default_value_t = 100_000)]
    pub cap: usize,
    #[arg(long, value_enum, default_value_t = ScoreKind::Synthetic)]
    pub score: ScoreKind,
}

#[derive(Args, Debug)]
pub struct ParetoArgs {
    pub input: PathBuf,
    #[arg(long, default_value = "latency_ms")]
    pub latency_col: String,
    #[arg(long, default_value = "accuracy")]
    pub score_col: String,
}

#[derive(Args, Debug)]
pub struct ExportArgs {
    #[command(flatten)]
    pub source: ArchSource,
    #[command(flatten)]
    pub cost: CostArgs,
    /// Per-layer cost CSV instead of the architecture itself.
    #[arg(long)]
    pub costs: bool,
}

#[derive(Args, Debug)]
pub struct SampleSpaceArgs {
    /// isynet, resnet_like, mobilenetv2_like or mnasnet_like.
    #[arg(long)]
    pub space: String,
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[command(flatten)]
    pub cost: CostArgs,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {:#}", e.error);
            ExitCode::from(e.code)
        }
    }
}
