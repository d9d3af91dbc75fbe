//! End-to-end acceptance checks. Prints one line per criterion and exits
//! nonzero if any fails.

use std::path::Path;
use std::process::{Command, ExitCode};

use npunas::arch::{decode, encode, sample_random, ArchSpec, ImageShape, SpaceConstraints};
use npunas::cost::{network_cost, network_macs, network_params, CostBreakdown, CostConfig};
use npunas::latency::{fit, Hyperparams, LatencyDataset, Method};
use npunas::mem::{mem, mem_of, mmem, MemWeights};
use npunas::network::{HeadSpec, NetBuilder, OpKind};
use npunas::presets::{builtin, isynet, space_sampler, Space, CATALOG};
use npunas::scaler::{best_within, enumerate_scaled, evaluate_variants, uniform_depth_scale, ScalingGrid};
use npunas::search::{pareto_indices, random_search, run_smbo, ParetoPoint, SmboConfig, SyntheticResponse};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PARAM_TOL_ISYNET: f64 = 0.10;
const PARAM_TOL_RESNET: f64 = 0.05;
const MAC_TOL: f64 = 0.10;
const MEM_EXPECTED: f64 = 0.888;
const MEM_TOL: f64 = 1e-3;
const MEM_SCALE_TOL: f64 = 1e-12;
const COEF_TOL: f64 = 0.10;
const MIN_R2: f64 = 0.9;
const MAX_MAPE: f64 = 15.0;
const OMP_TOL: f64 = 1e-9;
const MAX_R2_SPREAD: f64 = 0.05;
const MIN_WINS: usize = 15;
const SEEDS: u64 = 20;
const SEARCH_BUDGET_MS: f64 = 3000.0;
const SEARCH_EVALS: usize = 150;
const SCALE_BUDGET_MS: f64 = 300.0;

type Outcome = Result<String, String>;

fn within(actual: f64, expected: f64, rel: f64) -> bool {
    ((actual - expected) / expected).abs() <= rel
}

fn criterion_1() -> Outcome {
    let expected: [(&str, f64, f64); 10] = [
        ("isynet-n0", 9.59e6, PARAM_TOL_ISYNET),
        ("isynet-n1", 7.42e6, PARAM_TOL_ISYNET),
        ("isynet-n1-s1", 7.82e6, PARAM_TOL_ISYNET),
        ("isynet-n1-s2", 8.86e6, PARAM_TOL_ISYNET),
        ("isynet-n1-s3", 10.81e6, PARAM_TOL_ISYNET),
        ("isynet-n2", 19.43e6, PARAM_TOL_ISYNET),
        ("isynet-n3", 20.47e6, PARAM_TOL_ISYNET),
        ("resnet-18", 11.69e6, PARAM_TOL_RESNET),
        ("resnet-34", 21.8e6, PARAM_TOL_RESNET),
        ("resnet-50", 25.56e6, PARAM_TOL_RESNET),
    ];
    let mut notes = Vec::new();
    let mut ok = true;
    for (name, want, tol) in expected {
        let net = builtin(name).unwrap().network(ImageShape::imagenet(), &HeadSpec::default()).unwrap();
        let got = network_params(&net) as f64;
        let dev = (got - want) / want;
        ok &= within(got, want, tol);
        notes.push(format!("{name} {:+.1}%", 100.0 * dev));
    }
    let msg = notes.join(", ");
    if ok { Ok(msg) } else { Err(msg) }
}

fn criterion_2() -> Outcome {
    let expected = [("isynet-n0", 1.13e9), ("isynet-n1", 2.85e9), ("isynet-n1-s3", 4.12e9), ("isynet-n3", 7.32e9)];
    let mut notes = Vec::new();
    let mut ok = true;
    for (name, want) in expected {
        let net = builtin(name).unwrap().network(ImageShape::imagenet(), &HeadSpec::default()).unwrap();
        let got = network_macs(&net) as f64;
        ok &= within(got, want, MAC_TOL);
        notes.push(format!("{name} {:+.1}%", 100.0 * (got - want) / want));
    }
    let msg = notes.join(", ");
    if ok { Ok(msg) } else { Err(msg) }
}

fn criterion_3() -> Outcome {
    let w = MemWeights::REFERENCE;
    let point = mem_of(1e9, 1e6, 1e7, &w).map_err(|e| e.to_string())?;
    if (point - MEM_EXPECTED).abs() > MEM_TOL {
        return Err(format!("MEM(1e9,1e6,1e7) = {point}"));
    }

    let mut b = NetBuilder::new("vector-only", ImageShape::new(56, 56, 64));
    b.same("bn", OpKind::BatchNorm).same("relu", OpKind::Relu).pool("pool", OpKind::MaxPool { k: 3, stride: 2 });
    let cfg = CostConfig::default();
    let costs = network_cost(&b.finish(), cfg.batch, cfg.fusion, &cfg.rules).map_err(|e| e.to_string())?;
    let vector_only = mem(&costs, &w).map_err(|e| e.to_string())?;
    if vector_only != 0.0 {
        return Err(format!("vector-only network MEM = {vector_only}"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut tested = 0;
    while tested < 10_000 {
        let c = CostBreakdown::new(
            rng.gen_range(0..=1u64 << 40),
            rng.gen_range(0..=1u64 << 36),
            rng.gen_range(0..=1u64 << 38),
        );
        let (m, v, d) = c.as_f64();
        if !(w.wv * v + w.wd * d > 0.0) {
            continue;
        }
        tested += 1;
        let x = mem(&c, &w).map_err(|e| format!("{c:?}: {e}"))?;
        if !(0.0..1.0).contains(&x) {
            return Err(format!("MEM {x} outside [0,1) for {c:?}"));
        }
        let k: f64 = rng.gen_range(1e-3..1e3);
        let scaled = mem_of(m * k, v * k, d * k, &w).map_err(|e| e.to_string())?;
        if x > 0.0 && ((scaled - x) / x).abs() > MEM_SCALE_TOL || x == 0.0 && scaled != 0.0 {
            return Err(format!("scale {k}: {x} vs {scaled}"));
        }
    }
    Ok(format!("MEM(1e9,1e6,1e7) = {point:.6}; vector-only = 0; 10000 triples in [0,1) and scale-invariant"))
}

fn criterion_4() -> Outcome {
    let w = MemWeights::REFERENCE;
    let cfg = CostConfig::default();
    let sizes = [(Space::Isynet, 1000), (Space::ResnetLike, 1000), (Space::Mobilenetv2Like, 100), (Space::MnasnetLike, 100)];
    let mut notes = Vec::new();
    let mut ok = true;
    for seed in 0..5u64 {
        let mut values = Vec::new();
        for (space, n) in sizes {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let nets = space_sampler(space, n, &mut rng);
            values.push(mmem(nets.iter().map(|s| &s.network), &w, &cfg).map_err(|e| e.to_string())?);
        }
        let holds = values[0] > values[1] && values[1] > values[2].max(values[3]);
        ok &= holds;
        notes.push(format!(
            "seed {seed}: {:.4} > {:.4} > max({:.4}, {:.4}){}",
            values[0],
            values[1],
            values[2],
            values[3],
            if holds { "" } else { " VIOLATED" }
        ));
    }
    let msg = notes.join("; ");
    if ok { Ok(msg) } else { Err(msg) }
}

fn criterion_5() -> Outcome {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/synthetic_latency.csv");
    let data = LatencyDataset::load(&path).map_err(|e| e.to_string())?;
    let hp = Hyperparams::default();
    let models: Vec<_> = Method::ALL.iter().map(|&m| fit(&data, m, &hp)).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    let ols = &models[0];
    let omp = models.iter().find(|m| m.method == Method::Omp).unwrap();
    let r = MemWeights::REFERENCE;
    let pairs = [(ols.weights.w0, r.w0), (ols.weights.wm, r.wm), (ols.weights.wv, r.wv), (ols.weights.wd, r.wd)];
    let coef_ok = pairs.iter().all(|&(got, want)| within(got, want, COEF_TOL));
    let omp_ok = [
        (ols.weights.w0, omp.weights.w0),
        (ols.weights.wm, omp.weights.wm),
        (ols.weights.wv, omp.weights.wv),
        (ols.weights.wd, omp.weights.wd),
    ]
    .iter()
    .all(|&(a, b)| (a - b).abs() <= OMP_TOL * a.abs().max(1e-300) || (a - b).abs() <= OMP_TOL);
    let r2s: Vec<f64> = models.iter().map(|m| m.train.r2).collect();
    let spread = r2s.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - r2s.iter().cloned().fold(f64::INFINITY, f64::min);
    let fit_ok = ols.train.r2 >= MIN_R2 && ols.train.mape <= MAX_MAPE;
    let msg = format!(
        "ols coef dev {}; R2 {:.4}; MAPE {:.2}%; OMP==OLS {omp_ok}; R2 spread {spread:.2e}",
        pairs.iter().map(|(g, w)| format!("{:+.1}%", 100.0 * (g - w) / w)).collect::<Vec<_>>().join("/"),
        ols.train.r2,
        ols.train.mape
    );
    if coef_ok && omp_ok && fit_ok && spread <= MAX_R2_SPREAD { Ok(msg) } else { Err(msg) }
}

fn brute_force_front(points: &[ParetoPoint<usize>]) -> Vec<usize> {
    let mut keep: Vec<usize> = (0..points.len()).filter(|&i| !points.iter().any(|q| q.dominates(&points[i]))).collect();
    keep.sort_by(|&a, &b| points[a].latency.total_cmp(&points[b].latency).then(a.cmp(&b)));
    keep
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for set in 0..1000 {
        let n = rng.gen_range(0..=200);
        let coarse = set % 2 == 0;
        let points: Vec<ParetoPoint<usize>> = (0..n)
            .map(|i| {
                let (l, s) = if coarse {
                    (f64::from(rng.gen_range(0..10)), f64::from(rng.gen_range(0..10)))
                } else {
                    (rng.gen_range(0.0..100.0), rng.gen_range(0.0..1.0))
                };
                ParetoPoint::new(l, s, i)
            })
            .collect();
        if pareto_indices(&points) != brute_force_front(&points) {
            return Err(format!("set {set} (n = {n}) differs from the brute-force front"));
        }
    }
    Ok("1000 sets (half with tied coordinates) match the brute-force oracle".into())
}

fn criterion_7() -> Outcome {
    let cfg = SmboConfig { budget_ms: SEARCH_BUDGET_MS, ..SmboConfig::default() };
    assert_eq!(cfg.warmup + cfg.rounds * cfg.k, SEARCH_EVALS);
    let mut wins = 0;
    for seed in 0..SEEDS {
        let ev = SyntheticResponse::new(seed);
        let smbo = run_smbo(&cfg, &ev, &mut ChaCha8Rng::seed_from_u64(seed)).map_err(|e| e.to_string())?;
        if smbo.history.len() != SEARCH_EVALS {
            return Err(format!("seed {seed}: SMBO evaluated {} architectures", smbo.history.len()));
        }
        let random = random_search(
            SEARCH_EVALS,
            SEARCH_BUDGET_MS,
            &cfg.constraints,
            &ev,
            &mut ChaCha8Rng::seed_from_u64(seed + 1000),
        )
        .map_err(|e| e.to_string())?;
        let best = |o: &Option<npunas::search::MetaRecord>| o.as_ref().map_or(f64::NEG_INFINITY, |r| r.response);
        if smbo.best.is_some() && best(&smbo.best) >= best(&random.best) {
            wins += 1;
        }
    }
    let msg = format!("SMBO >= random in {wins}/{SEEDS} seeds at {SEARCH_BUDGET_MS} ms, {SEARCH_EVALS} evaluations");
    if wins >= MIN_WINS { Ok(msg) } else { Err(msg) }
}

fn criterion_8() -> Outcome {
    let n1 = isynet("isynet-n1").unwrap();
    let grid = ScalingGrid::default();
    let specs = enumerate_scaled(&n1, &grid).map_err(|e| e.to_string())?;
    if !specs.iter().any(|s| s.depths() == [1, 1, 4, 6, 3]) {
        return Err("grid misses depths (1,1,4,6,3)".into());
    }

    let w = MemWeights::REFERENCE;
    let cfg = CostConfig::default();
    let lat = |name: &str| -> f64 {
        let spec = isynet(name).unwrap();
        npunas::mem::latency_estimate(&npunas::cost::arch_cost(&spec, &cfg).unwrap(), &w)
    };
    let order: Vec<f64> = ["isynet-n1", "isynet-n1-s1", "isynet-n1-s2", "isynet-n1-s3"].iter().map(|n| lat(n)).collect();
    if !order.windows(2).all(|p| p[0] < p[1]) {
        return Err(format!("latency order violated: {order:?}"));
    }

    let mut wins = 0;
    for seed in 0..SEEDS {
        let ev = SyntheticResponse::new(seed);
        let score = |s: &ArchSpec, c: &CostBreakdown| ev.score_with_costs(&encode(s).unwrap(), c);
        let per_stage = evaluate_variants(specs.clone(), &w, &cfg, &score).map_err(|e| e.to_string())?;
        let uniform_specs: Vec<ArchSpec> = grid.multipliers[0].iter().map(|&c| uniform_depth_scale(&n1, c)).collect();
        let uniform = evaluate_variants(uniform_specs, &w, &cfg, &score).map_err(|e| e.to_string())?;
        let best = |v: &[npunas::scaler::ScaledVariant]| best_within(v, SCALE_BUDGET_MS).map_or(f64::NEG_INFINITY, |x| x.score);
        if best(&per_stage) >= best(&uniform) && best(&per_stage).is_finite() {
            wins += 1;
        }
    }
    let msg = format!(
        "grid has 1-1-4-6-3; latency {:.1} < {:.1} < {:.1} < {:.1} ms; per-stage >= uniform in {wins}/{SEEDS} seeds at {SCALE_BUDGET_MS} ms",
        order[0], order[1], order[2], order[3]
    );
    if wins >= MIN_WINS { Ok(msg) } else { Err(msg) }
}

fn run_cli(args: &[&str]) -> Result<Vec<u8>, String> {
    let o = Command::new(env!("CARGO_BIN_EXE_npunas")).args(args).output().map_err(|e| e.to_string())?;
    if !o.status.success() {
        return Err(format!("npunas {}: {}", args.join(" "), String::from_utf8_lossy(&o.stderr)));
    }
    Ok(o.stdout)
}

fn criterion_9() -> Outcome {
    let mut presets = 0;
    for name in CATALOG {
        if let Some(spec) = builtin(name).unwrap().as_arch() {
            let back = decode(&encode(spec).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
            if &back != spec {
                return Err(format!("{name} does not round-trip"));
            }
            presets += 1;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let constraints = SpaceConstraints::default();
    for i in 0..10_000 {
        let spec = sample_random(&mut rng, &constraints);
        let back = decode(&encode(&spec).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        if back != spec {
            return Err(format!("random spec {i} does not round-trip"));
        }
    }

    let dir = std::env::temp_dir().join(format!("npunas-acceptance-{}", std::process::id()));
    let runs: [&[&str]; 4] = [
        &["sample-space", "--space", "isynet", "--n", "50", "--seed", "4"],
        &["scale", "--preset", "isynet-n1", "--budgets", "250,300", "--seed", "2"],
        &["synth-latency", "--seed", "3"],
        &["fit-latency", "../../data/synthetic_latency.csv", "--probe-samples", "10", "--seed", "1"],
    ];
    let mut csvs = 0;
    for args in runs {
        let args: Vec<&str> = args.to_vec();
        if run_cli(&args)? != run_cli(&args)? {
            return Err(format!("npunas {} differs between runs", args.join(" ")));
        }
        csvs += 1;
    }
    let mut meta = Vec::new();
    for r in 0..2 {
        let out = dir.join(format!("run{r}"));
        let out_s = out.to_str().unwrap().to_string();
        run_cli(&["search", "--seed", "7", "--warmup", "30", "--rounds", "3", "--pool", "300", "--out", &out_s])?;
        meta.push(std::fs::read(out.join("meta_dataset.csv")).map_err(|e| e.to_string())?);
    }
    let _ = std::fs::remove_dir_all(&dir);
    if meta[0] != meta[1] {
        return Err("search meta_dataset.csv differs between runs".into());
    }
    csvs += 1;
    Ok(format!("{presets} presets and 10000 random specs round-trip; {csvs} CLI outputs byte-identical on rerun"))
}

fn main() -> ExitCode {
    std::env::set_current_dir(env!("CARGO_MANIFEST_DIR")).expect("manifest dir exists");
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("parameter counts", criterion_1),
        ("MAC counts", criterion_2),
        ("MEM formula", criterion_3),
        ("mMEM ordering", criterion_4),
        ("latency lab", criterion_5),
        ("Pareto oracle", criterion_6),
        ("SMBO vs random", criterion_7),
        ("depth scaler", criterion_8),
        ("roundtrip and reruns", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(msg) => println!("criterion {} ({name}): PASS  {msg}", i + 1),
            Err(msg) => {
                failed += 1;
                println!("criterion {} ({name}): FAIL  {msg}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
