use npunas::arch::{validate, ArchSpec};
use npunas::cost::{CostBreakdown, CostConfig};
use npunas::mem::MemWeights;
use npunas::presets::isynet;
use npunas::scaler::{enumerate_scaled, evaluate_variants, fronts_for_budgets, ScalingGrid};

fn macs_score(_: &ArchSpec, c: &CostBreakdown) -> f64 {
    (c.matrix_ops as f64).ln()
}

#[test]
fn every_variant_is_valid() {
    for name in ["isynet-n0", "isynet-n1", "isynet-n2"] {
        let specs = enumerate_scaled(&isynet(name).unwrap(), &ScalingGrid::default()).unwrap();
        assert!(!specs.is_empty());
        for s in &specs {
            assert!(validate(s).is_valid(), "{name}: {:?}", s.depths());
            assert!(s.depths().iter().all(|&d| (1..=20).contains(&d)));
        }
    }
}

#[test]
fn larger_budgets_admit_deeper_fronts() {
    let specs = enumerate_scaled(&isynet("isynet-n1").unwrap(), &ScalingGrid::default()).unwrap();
    let variants = evaluate_variants(specs, &MemWeights::REFERENCE, &CostConfig::default(), &macs_score).unwrap();
    let budgets = [240.0, 260.0, 300.0, 350.0, 450.0, 600.0];
    let fronts = fronts_for_budgets(&variants, &budgets).unwrap();
    let deepest: Vec<u32> = fronts
        .iter()
        .map(|f| f.front.points.iter().map(|p| p.payload.spec.total_blocks()).max().unwrap_or(0))
        .collect();
    assert!(deepest.windows(2).all(|w| w[0] <= w[1]), "{deepest:?}");
    for f in &fronts {
        assert!(f.front.points.iter().all(|p| p.latency <= f.budget_ms));
    }
}
