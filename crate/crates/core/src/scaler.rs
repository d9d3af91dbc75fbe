//! Per-stage depth scaling under latency budgets.
//!
//! Every stage gets its own multiplier from a small grid; the scaled block
//! count is `round(c * NB)` (halves round up) clamped to the legal range.
//! Variants are costed with the linear latency model and the non-dominated
//! ones under each budget are reported.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::arch::{validate, ArchError, ArchSpec, MAX_BLOCKS};
use crate::cost::{arch_cost, CostBreakdown, CostConfig, CostError};
use crate::mem::{latency_estimate, MemWeights};
use crate::search::{pareto_front, ParetoFront, ParetoPoint};

#[derive(Debug, Error)]
pub enum ScalerError {
    #[error("grid yields {variants} combinations, above the cap of {cap}; use fewer multipliers per stage")]
    CapExceeded { variants: u128, cap: usize },
    #[error("multiplier {0} is not a positive finite number")]
    BadMultiplier(f64),
    #[error("grid has {grid} per-stage lists but the architecture has {stages} stages")]
    StageMismatch { grid: usize, stages: usize },
    #[error("budget {0} ms is not positive")]
    BadBudget(f64),
    #[error(transparent)]
    Arch(#[from] ArchError),
    #[error(transparent)]
    Cost(#[from] CostError),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingGrid {
    /// One list per stage, or a single list shared by every stage.
    pub multipliers: Vec<Vec<f64>>,
    pub cap: usize,
}

impl Default for ScalingGrid {
    fn default() -> Self {
        ScalingGrid::uniform(vec![1.0, 1.25, 1.5, 2.0, 3.0])
    }
}

impl ScalingGrid {
    pub const DEFAULT_CAP: usize = 100_000;

    pub fn uniform(values: Vec<f64>) -> Self {
        ScalingGrid { multipliers: vec![values], cap: ScalingGrid::DEFAULT_CAP }
    }

    pub fn per_stage(lists: Vec<Vec<f64>>) -> Self {
        ScalingGrid { multipliers: lists, cap: ScalingGrid::DEFAULT_CAP }
    }

    fn for_stage(&self, s: usize) -> &[f64] {
        if self.multipliers.len() == 1 {
            &self.multipliers[0]
        } else {
            &self.multipliers[s]
        }
    }

    fn check(&self, stages: usize) -> Result<(), ScalerError> {
        if self.multipliers.len() != 1 && self.multipliers.len() != stages {
            return Err(ScalerError::StageMismatch { grid: self.multipliers.len(), stages });
        }
        for &c in self.multipliers.iter().flatten() {
            if !(c > 0.0 && c.is_finite()) {
                return Err(ScalerError::BadMultiplier(c));
            }
        }
        Ok(())
    }
}

/// `round(c * nb)` with halves rounded up, clamped to `1..=20`.
pub fn scale_depth(nb: u32, c: f64) -> u32 {
    let v = (c * f64::from(nb) + 0.5).floor();
    v.clamp(1.0, f64::from(MAX_BLOCKS)) as u32
}

fn with_depths(base: &ArchSpec, depths: &[u32]) -> ArchSpec {
    let mut out = base.clone();
    for (st, &nb) in out.stages.iter_mut().zip(depths) {
        st.nb = nb;
    }
    out
}

/// Cartesian product of per-stage multipliers, first stage varying
/// slowest; variants with equal depths appear once, at first occurrence.
pub fn enumerate_scaled(base: &ArchSpec, grid: &ScalingGrid) -> Result<Vec<ArchSpec>, ScalerError> {
    let report = validate(base);
    if !report.is_valid() {
        return Err(ArchError::Invalid(report).into());
    }
    let ns = base.stages.len();
    grid.check(ns)?;
    let choices: Vec<Vec<u32>> =
        (0..ns).map(|s| grid.for_stage(s).iter().map(|&c| scale_depth(base.stages[s].nb, c)).collect()).collect();
    let total: u128 = choices.iter().map(|c| c.len() as u128).product();
    if total > grid.cap as u128 {
        return Err(ScalerError::CapExceeded { variants: total, cap: grid.cap });
    }
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    let mut idx = vec![0usize; ns];
    if choices.iter().any(|c| c.is_empty()) {
        return Ok(out);
    }
    loop {
        let depths: Vec<u32> = idx.iter().enumerate().map(|(s, &i)| choices[s][i]).collect();
        if seen.insert(depths.clone()) {
            out.push(with_depths(base, &depths));
        }
        let mut s = ns;
        loop {
            if s == 0 {
                return Ok(out);
            }
            s -= 1;
            idx[s] += 1;
            if idx[s] < choices[s].len() {
                break;
            }
            idx[s] = 0;
        }
    }
}

/// Same multiplier on every stage.
pub fn uniform_depth_scale(base: &ArchSpec, coefficient: f64) -> ArchSpec {
    let depths: Vec<u32> = base.stages.iter().map(|s| scale_depth(s.nb, coefficient)).collect();
    with_depths(base, &depths)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScaledVariant {
    pub id: usize,
    pub spec: ArchSpec,
    pub latency_ms: f64,
    pub score: f64,
}

impl ScaledVariant {
    pub fn depths(&self) -> Vec<u32> {
        self.spec.depths()
    }
}

/// Scores a variant given its cost counts.
pub type ScoreFn<'a> = dyn Fn(&ArchSpec, &CostBreakdown) -> f64 + Sync + 'a;

/// Costs and scores every spec in parallel; ids follow input order.
pub fn evaluate_variants(
    specs: Vec<ArchSpec>,
    weights: &MemWeights,
    config: &CostConfig,
    score: &ScoreFn<'_>,
) -> Result<Vec<ScaledVariant>, ScalerError> {
    specs
        .into_par_iter()
        .enumerate()
        .map(|(id, spec)| {
            let costs = arch_cost(&spec, config)?;
            let latency_ms = latency_estimate(&costs, weights);
            let score = score(&spec, &costs);
            Ok(ScaledVariant { id, spec, latency_ms, score })
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct BudgetFront {
    pub budget_ms: f64,
    pub front: ParetoFront<ScaledVariant>,
    /// Set when nothing fits the budget.
    pub warning: Option<String>,
}

/// Pareto set of the variants within each budget.
pub fn fronts_for_budgets(variants: &[ScaledVariant], budgets: &[f64]) -> Result<Vec<BudgetFront>, ScalerError> {
    budgets
        .iter()
        .map(|&budget_ms| {
            if !(budget_ms > 0.0) {
                return Err(ScalerError::BadBudget(budget_ms));
            }
            let points: Vec<ParetoPoint<ScaledVariant>> = variants
                .iter()
                .filter(|v| v.latency_ms <= budget_ms)
                .map(|v| ParetoPoint::new(v.latency_ms, v.score, v.clone()))
                .collect();
            let front = pareto_front(&points);
            let warning = front
                .is_empty()
                .then(|| format!("no scaled variant fits within {budget_ms} ms; the fastest needs more"));
            Ok(BudgetFront { budget_ms, front, warning })
        })
        .collect()
}

pub fn scale_to_budget(
    base: &ArchSpec,
    grid: &ScalingGrid,
    budgets: &[f64],
    weights: &MemWeights,
    config: &CostConfig,
    score: &ScoreFn<'_>,
) -> Result<Vec<BudgetFront>, ScalerError> {
    if let Some(&b) = budgets.iter().find(|b| !(**b > 0.0)) {
        return Err(ScalerError::BadBudget(b));
    }
    let variants = evaluate_variants(enumerate_scaled(base, grid)?, weights, config, score)?;
    fronts_for_budgets(&variants, budgets)
}

/// Highest score within the budget, ties to the lower id.
pub fn best_within(variants: &[ScaledVariant], budget_ms: f64) -> Option<&ScaledVariant> {
    variants
        .iter()
        .filter(|v| v.latency_ms <= budget_ms)
        .min_by(|a, b| b.score.total_cmp(&a.score).then(a.id.cmp(&b.id)))
}

/// One row per variant: `variant_id,depths,latency_ms,score` followed by a
/// 0/1 Pareto flag per budget.
pub fn report_csv(variants: &[ScaledVariant], fronts: &[BudgetFront]) -> String {
    let mut out = String::from("variant_id,depths,latency_ms,score");
    for f in fronts {
        out.push_str(&format!(",pareto_{}", f.budget_ms));
    }
    out.push('\n');
    let members: Vec<BTreeSet<usize>> =
        fronts.iter().map(|f| f.front.points.iter().map(|p| p.payload.id).collect()).collect();
    for v in variants {
        let depths: Vec<String> = v.depths().iter().map(|d| d.to_string()).collect();
        out.push_str(&format!("{},{},{:.6},{:.9}", v.id, depths.join("-"), v.latency_ms, v.score));
        for m in &members {
            out.push_str(if m.contains(&v.id) { ",1" } else { ",0" });
        }
        out.push('\n');
    }
    out
}
