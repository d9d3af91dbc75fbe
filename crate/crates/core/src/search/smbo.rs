use std::collections::BTreeSet;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::meta::{MetaDataset, MetaRecord};
use super::response::{Evaluation, ResponseFunction};
use super::surrogate::{fit_surrogate, Surrogate, SurrogateConfig, SurrogateKind, Target};
use super::SearchError;
use crate::arch::{encode, mutate_within, sample_random, ArchSpec, EncodingVector, SpaceConstraints};

#[derive(Clone, Debug)]
pub struct ProposeOptions {
    /// Mutation sources; empty means the pool is purely random.
    pub parents: Vec<ArchSpec>,
    /// Encodings that may not be proposed (already evaluated).
    pub exclude: BTreeSet<EncodingVector>,
    pub constraints: SpaceConstraints,
    /// Share of the pool produced by mutating parents.
    pub mutation_fraction: f64,
}

impl Default for ProposeOptions {
    fn default() -> Self {
        ProposeOptions {
            parents: Vec::new(),
            exclude: BTreeSet::new(),
            constraints: SpaceConstraints::default(),
            mutation_fraction: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Candidate {
    pub spec: ArchSpec,
    pub encoding: EncodingVector,
    pub predicted_score: f64,
    pub predicted_latency_ms: f64,
}

/// Draws a pool, drops candidates predicted over budget and returns the
/// `k` best by predicted score (ties by encoding).
#[allow(clippy::too_many_arguments)]
pub fn propose<R: Rng + ?Sized>(
    pool_size: usize,
    budget_ms: f64,
    acc: &dyn Surrogate,
    lat: &dyn Surrogate,
    k: usize,
    rng: &mut R,
    opts: &ProposeOptions,
) -> Result<Vec<Candidate>, SearchError> {
    let mut seen = BTreeSet::new();
    let mut pool = Vec::with_capacity(pool_size);
    let mutants = if opts.parents.is_empty() { 0 } else { (pool_size as f64 * opts.mutation_fraction).round() as usize };
    let mut attempts = 0;
    while pool.len() < pool_size && attempts < pool_size * 20 {
        attempts += 1;
        let spec = if pool.len() < mutants {
            let parent = &opts.parents[rng.gen_range(0..opts.parents.len())];
            mutate_within(parent, &opts.constraints, rng)
        } else {
            sample_random(rng, &opts.constraints)
        };
        let encoding = encode(&spec)?;
        if opts.exclude.contains(&encoding) || !seen.insert(encoding.clone()) {
            continue;
        }
        pool.push((spec, encoding));
    }
    let scored: Vec<Candidate> = pool
        .into_par_iter()
        .map(|(spec, encoding)| Candidate {
            predicted_score: acc.predict(&encoding),
            predicted_latency_ms: lat.predict(&encoding),
            spec,
            encoding,
        })
        .collect();
    let fastest = scored.iter().map(|c| c.predicted_latency_ms).fold(f64::INFINITY, f64::min);
    let mut feasible: Vec<Candidate> = scored.into_iter().filter(|c| c.predicted_latency_ms <= budget_ms).collect();
    if feasible.is_empty() {
        return Err(SearchError::NoFeasible { budget_ms, fastest_ms: fastest });
    }
    feasible.sort_by(|a, b| b.predicted_score.total_cmp(&a.predicted_score).then_with(|| a.encoding.cmp(&b.encoding)));
    feasible.truncate(k);
    Ok(feasible)
}

#[derive(Clone, Debug)]
pub struct SmboConfig {
    pub warmup: usize,
    pub rounds: usize,
    pub pool: usize,
    pub k: usize,
    pub budget_ms: f64,
    pub surrogate: SurrogateConfig,
    pub constraints: SpaceConstraints,
    pub mutation_fraction: f64,
    /// Parents for mutation are the best this many feasible records.
    pub parents: usize,
}

impl Default for SmboConfig {
    fn default() -> Self {
        SmboConfig {
            warmup: 50,
            rounds: 10,
            pool: 1000,
            k: 10,
            budget_ms: f64::INFINITY,
            surrogate: SurrogateConfig::default(),
            constraints: SpaceConstraints::default(),
            mutation_fraction: 0.5,
            parents: 10,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SmboOutcome {
    pub history: MetaDataset,
    /// Best response within the budget, if any record is feasible.
    pub best: Option<MetaRecord>,
}

/// Evaluation failure after some records were collected.
#[derive(Debug, thiserror::Error)]
#[error("search aborted after {} records: {source}", partial.len())]
pub struct SmboFailure {
    pub partial: MetaDataset,
    #[source]
    pub source: SearchError,
}

/// Evaluates in parallel, appends in input order, stops at the first
/// failure.
fn evaluate_into(
    h: &mut MetaDataset,
    specs: &[ArchSpec],
    evaluator: &dyn ResponseFunction,
) -> Result<(), SearchError> {
    let results: Vec<Result<Evaluation, SearchError>> = specs.par_iter().map(|s| evaluator.evaluate(s)).collect();
    for (spec, res) in specs.iter().zip(results) {
        let ev = res?;
        h.push_spec(spec, ev.score, ev.latency_ms)?;
    }
    Ok(())
}

/// Up to `n` distinct random specs not already in `h`.
fn distinct_samples<R: Rng + ?Sized>(n: usize, constraints: &SpaceConstraints, rng: &mut R) -> Vec<ArchSpec> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(n);
    let mut attempts = 0;
    while out.len() < n && attempts < n * 20 + 100 {
        attempts += 1;
        let spec = sample_random(rng, constraints);
        if seen.insert(encode(&spec).expect("samples are in-space")) {
            out.push(spec);
        }
    }
    out
}

pub fn run_smbo<R: Rng + ?Sized>(
    cfg: &SmboConfig,
    evaluator: &dyn ResponseFunction,
    rng: &mut R,
) -> Result<SmboOutcome, SmboFailure> {
    let mut h = MetaDataset::new();
    macro_rules! attempt {
        ($e:expr) => {
            match $e {
                Ok(v) => v,
                Err(source) => return Err(SmboFailure { partial: h, source }),
            }
        };
    }
    let warm = distinct_samples(cfg.warmup, &cfg.constraints, rng);
    attempt!(evaluate_into(&mut h, &warm, evaluator));
    for _ in 0..cfg.rounds {
        let acc = attempt!(fit_surrogate(&h, Target::Accuracy, &cfg.surrogate));
        let lat = attempt!(fit_surrogate(&h, Target::Latency, &cfg.surrogate));
        let mut ranked: Vec<&MetaRecord> = h.records().iter().filter(|r| r.latency_ms <= cfg.budget_ms).collect();
        ranked.sort_by(|a, b| b.response.total_cmp(&a.response).then_with(|| a.encoding.cmp(&b.encoding)));
        let opts = ProposeOptions {
            parents: ranked.iter().take(cfg.parents).map(|r| r.spec()).collect(),
            exclude: h.records().iter().map(|r| r.encoding.clone()).collect(),
            constraints: cfg.constraints.clone(),
            mutation_fraction: cfg.mutation_fraction,
        };
        let picks = attempt!(propose(cfg.pool, cfg.budget_ms, acc.as_ref(), lat.as_ref(), cfg.k, rng, &opts));
        let specs: Vec<ArchSpec> = picks.into_iter().map(|c| c.spec).collect();
        attempt!(evaluate_into(&mut h, &specs, evaluator));
    }
    let best = h.best_within(cfg.budget_ms).cloned();
    Ok(SmboOutcome { history: h, best })
}

/// Baseline: `n` distinct uniform samples, all evaluated.
pub fn random_search<R: Rng + ?Sized>(
    n: usize,
    budget_ms: f64,
    constraints: &SpaceConstraints,
    evaluator: &dyn ResponseFunction,
    rng: &mut R,
) -> Result<SmboOutcome, SmboFailure> {
    let mut h = MetaDataset::new();
    let specs = distinct_samples(n, constraints, rng);
    if let Err(source) = evaluate_into(&mut h, &specs, evaluator) {
        return Err(SmboFailure { partial: h, source });
    }
    let best = h.best_within(budget_ms).cloned();
    Ok(SmboOutcome { history: h, best })
}

/// Everything needed to rerun a search.
#[derive(Clone, Debug, PartialEq, Serialize, serde::Deserialize)]
pub struct RunManifest {
    pub seed: u64,
    pub warmup: usize,
    pub rounds: usize,
    pub pool: usize,
    pub k: usize,
    /// `None` means unbounded.
    pub budget_ms: Option<f64>,
    pub surrogate: SurrogateKind,
    pub evaluator: String,
    pub records: usize,
}

impl RunManifest {
    pub fn new(seed: u64, cfg: &SmboConfig, evaluator: &dyn ResponseFunction, records: usize) -> Self {
        RunManifest {
            seed,
            warmup: cfg.warmup,
            rounds: cfg.rounds,
            pool: cfg.pool,
            k: cfg.k,
            budget_ms: cfg.budget_ms.is_finite().then_some(cfg.budget_ms),
            surrogate: cfg.surrogate.kind,
            evaluator: evaluator.tag(),
            records,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }
}
