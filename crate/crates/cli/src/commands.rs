use std::path::Path;

use npunas::arch::{encode, validate, ArchError, ArchSpec, ImageShape};
use npunas::cost::{network_cost, network_cost_report, network_macs, network_params, CostBreakdown, CostConfig};
use npunas::latency::{
    derive_mem_weights, fit, report_csv, scatter_csv, scatter_svg, synthetic_dataset, FittedLatencyModel,
    Hyperparams, LatencyDataset, Method, MethodRow, ProbeSet, SyntheticSpec,
};
use npunas::mem::{latency_estimate, mem, MemWeights};
use npunas::network::{lower_arch, Network};
use npunas::plot::{render, Panel, Series};
use npunas::presets::{builtin, space_sampler, Preset, Space};
use npunas::scaler::{evaluate_variants, fronts_for_budgets, enumerate_scaled, ScalingGrid};
use npunas::search::{
    encoding_header, pareto_indices, run_smbo, ParetoPoint, RunManifest, SearchError, SmboConfig, SurrogateConfig,
    SurrogateKind, SyntheticResponse,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::output::{emit, read_file, user_msg, write_file, CliError, CliResult, OrUser};
use crate::{
    ArchSource, Cli, Command, CostArgs, ExportArgs, FitLatencyArgs, Format, MemArgs, ParetoArgs, SampleSpaceArgs,
    ScaleArgs, ScoreKind, SearchArgs, SynthLatencyArgs,
};

pub fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Mem(a) => cmd_mem(cli, a),
        Command::FitLatency(a) => cmd_fit_latency(cli, a),
        Command::SynthLatency(a) => cmd_synth_latency(cli, a),
        Command::Search(a) => cmd_search(cli, a),
        Command::Scale(a) => cmd_scale(cli, a),
        Command::Pareto(a) => cmd_pareto(cli, a),
        Command::Export(a) => cmd_export(cli, a),
        Command::SampleSpace(a) => cmd_sample_space(cli, a),
    }
}

fn format_of(cli: &Cli, default: Format, allowed: &[Format], command: &str) -> CliResult<Format> {
    let f = cli.format.unwrap_or(default);
    if allowed.contains(&f) {
        Ok(f)
    } else {
        Err(user_msg(format!("{command} does not support --format {f:?}").to_lowercase()))
    }
}

fn out(cli: &Cli) -> Option<&Path> {
    cli.out.as_deref()
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

impl CostArgs {
    fn config(&self) -> CostConfig {
        CostConfig {
            input: ImageShape::new(self.resolution, self.resolution, 3),
            batch: self.batch,
            fusion: !self.no_fusion,
            ..CostConfig::default()
        }
    }

    fn weights(&self) -> CliResult<MemWeights> {
        match &self.weights {
            Some(p) => MemWeights::load(p).or_user_ctx(format!("weights file {}", p.display())),
            None => Ok(MemWeights::REFERENCE),
        }
    }
}

fn load_arch(path: &Path) -> CliResult<ArchSpec> {
    let spec = ArchSpec::from_json(&read_file(path)?).or_user_ctx(format!("{}", path.display()))?;
    let report = validate(&spec);
    if !report.is_valid() {
        return Err(CliError::user(ArchError::Invalid(report)).map_ctx(path));
    }
    Ok(spec)
}

impl CliError {
    fn map_ctx(self, path: &Path) -> CliError {
        CliError { error: self.error.context(path.display().to_string()), code: self.code }
    }
}

impl ArchSource {
    fn resolve(&self) -> CliResult<(String, Preset)> {
        match (&self.preset, &self.arch) {
            (Some(name), _) => Ok((name.clone(), builtin(name).or_user()?)),
            (None, Some(path)) => {
                let name = path.file_stem().map_or("arch".into(), |s| s.to_string_lossy().into_owned());
                Ok((name, Preset::Arch(load_arch(path)?)))
            }
            (None, None) => Err(user_msg("one of --preset or --arch is required")),
        }
    }

    fn network(&self, cost: &CostArgs) -> CliResult<(String, Preset, Network)> {
        let (name, preset) = self.resolve()?;
        let cfg = cost.config();
        let mut net = preset.network(cfg.input, &cfg.head).or_user()?;
        net.name = name.clone();
        Ok((name, preset, net))
    }

    fn arch_only(&self, command: &str) -> CliResult<(String, ArchSpec)> {
        let (name, preset) = self.resolve()?;
        match preset {
            Preset::Arch(spec) => Ok((name, spec)),
            Preset::Reference(_) => {
                Err(user_msg(format!("'{name}' is a reference network outside the search space; {command} needs a searchable architecture")))
            }
        }
    }
}

#[derive(Serialize)]
struct MemReport {
    name: String,
    mem: f64,
    latency_ms: f64,
    matrix_ops: u64,
    vector_ops: u64,
    data_ops: u64,
    params: u64,
    macs: u64,
    batch: u32,
    weights: MemWeights,
}

fn cmd_mem(cli: &Cli, a: &MemArgs) -> CliResult<()> {
    let format = format_of(cli, Format::Csv, &[Format::Csv, Format::Json], "mem")?;
    let weights = a.cost.weights()?;
    let cfg = a.cost.config();
    let (name, _, net) = a.source.network(&a.cost)?;
    if a.layers {
        let report = network_cost_report(&net, cfg.batch, cfg.fusion, &cfg.rules).map_err(CliError::internal)?;
        return match format {
            Format::Json => emit(out(cli), &to_json(&report)),
            _ => emit(out(cli), &report.to_csv()),
        };
    }
    let costs = network_cost(&net, cfg.batch, cfg.fusion, &cfg.rules).map_err(CliError::internal)?;
    let r = MemReport {
        name,
        mem: mem(&costs, &weights).or_user()?,
        latency_ms: latency_estimate(&costs, &weights),
        matrix_ops: costs.matrix_ops,
        vector_ops: costs.vector_ops,
        data_ops: costs.data_ops,
        params: network_params(&net),
        macs: network_macs(&net),
        batch: cfg.batch,
        weights,
    };
    let text = match format {
        Format::Json => to_json(&r),
        _ => format!(
            "name,mem,latency_ms,matrix_ops,vector_ops,data_ops,params,macs\n{},{:.9},{:.6},{},{},{},{},{}\n",
            r.name, r.mem, r.latency_ms, r.matrix_ops, r.vector_ops, r.data_ops, r.params, r.macs
        ),
    };
    emit(out(cli), &text)
}

fn parse_methods(spec: &str) -> CliResult<Vec<Method>> {
    if spec.trim() == "all" {
        return Ok(Method::ALL.to_vec());
    }
    let mut methods = Vec::new();
    for tok in spec.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let m: Method = tok.parse().or_user()?;
        if !methods.contains(&m) {
            methods.push(m);
        }
    }
    if methods.is_empty() {
        return Err(user_msg("--method lists no method"));
    }
    Ok(methods)
}

#[derive(Serialize)]
struct FitOutput<'a> {
    rows: &'a [MethodRow],
    models: &'a [FittedLatencyModel],
}

fn cmd_fit_latency(cli: &Cli, a: &FitLatencyArgs) -> CliResult<()> {
    let format = format_of(cli, Format::Csv, &[Format::Csv, Format::Json], "fit-latency")?;
    let methods = parse_methods(&a.method)?;
    let data = LatencyDataset::load(&a.dataset).or_user_ctx(a.dataset.display())?;
    let mut hp = Hyperparams { ridge_alpha: a.ridge_alpha, omp_nonzero: a.omp_nonzero, ..Hyperparams::default() };
    hp.sgd.seed = cli.seed;
    let probes = if a.probe_samples > 0 {
        ProbeSet::sample_all(a.probe_samples, cli.seed, &CostConfig::default()).map_err(CliError::internal)?
    } else {
        Vec::new()
    };
    let mut models = Vec::new();
    let mut rows = Vec::new();
    for &m in &methods {
        let model = fit(&data, m, &hp).or_user_ctx(format!("method {m}"))?;
        rows.push(MethodRow {
            method: m,
            r2: model.train.r2,
            mape: model.train.mape,
            weights: model.weights,
            mmem: probes.iter().map(|p| (p.space, p.mmem(&model))).collect(),
        });
        models.push(model);
    }
    if let Some(path) = &a.weights_out {
        let w = derive_mem_weights(&models[0]).or_user_ctx(format!("weights from {}", models[0].method))?;
        write_file(path, &format!("{}\n", w.to_json()))?;
    }
    if let Some(path) = &a.scatter {
        let svg = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("svg"));
        write_file(path, &if svg { scatter_svg(&data) } else { scatter_csv(&data) })?;
    }
    let text = match format {
        Format::Json => to_json(&FitOutput { rows: &rows, models: &models }),
        _ => report_csv(&rows),
    };
    emit(out(cli), &text)
}

fn cmd_synth_latency(cli: &Cli, a: &SynthLatencyArgs) -> CliResult<()> {
    format_of(cli, Format::Csv, &[Format::Csv], "synth-latency")?;
    if !(a.noise >= 0.0 && a.noise < 1.0) {
        return Err(user_msg("--noise must be in [0, 1)"));
    }
    if a.rows < npunas::latency::MIN_ROWS {
        return Err(user_msg(format!("--rows must be at least {}", npunas::latency::MIN_ROWS)));
    }
    let data = synthetic_dataset(&SyntheticSpec { rows: a.rows, seed: cli.seed, noise: a.noise, ..SyntheticSpec::default() });
    emit(out(cli), &data.to_csv_string())
}

fn cmd_search(cli: &Cli, a: &SearchArgs) -> CliResult<()> {
    format_of(cli, Format::Csv, &[Format::Csv], "search")?;
    let dir = cli.out.as_deref().ok_or_else(|| user_msg("search needs --out DIR for its artifacts"))?;
    let kind: SurrogateKind = a.surrogate.parse().map_err(|e: String| user_msg(e))?;
    if let Some(b) = a.budget {
        if !(b > 0.0) {
            return Err(user_msg("--budget must be positive"));
        }
    }
    if a.k == 0 || a.pool == 0 {
        return Err(user_msg("--k and --pool must be positive"));
    }
    let cfg = SmboConfig {
        warmup: a.warmup,
        rounds: a.rounds,
        pool: a.pool,
        k: a.k,
        budget_ms: a.budget.unwrap_or(f64::INFINITY),
        surrogate: SurrogateConfig { kind, rnn: npunas::search::RnnParams { seed: cli.seed, ..Default::default() }, ..SurrogateConfig::default() },
        ..SmboConfig::default()
    };
    let evaluator = SyntheticResponse::new(a.response_seed.unwrap_or(cli.seed));
    let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
    let meta_path = dir.join("meta_dataset.csv");
    match run_smbo(&cfg, &evaluator, &mut rng) {
        Ok(outcome) => {
            write_file(&meta_path, &outcome.history.to_csv_string())?;
            let manifest = RunManifest::new(cli.seed, &cfg, &evaluator, outcome.history.len());
            write_file(&dir.join("manifest.json"), &format!("{}\n", manifest.to_json()))?;
            match &outcome.best {
                Some(best) => write_file(&dir.join("best_arch.json"), &format!("{}\n", best.spec().to_json()))?,
                None => eprintln!("warning: no evaluated architecture fits the budget; best_arch.json not written"),
            }
            Ok(())
        }
        Err(failure) => {
            write_file(&meta_path, &failure.partial.to_csv_string())?;
            let code = match failure.source {
                SearchError::NoFeasible { .. } | SearchError::TooFewRecords { .. } => 1,
                _ => 2,
            };
            let msg = format!("{failure}; partial history written to {}", meta_path.display());
            Err(CliError { error: anyhow::anyhow!(msg), code })
        }
    }
}

fn cmd_scale(cli: &Cli, a: &ScaleArgs) -> CliResult<()> {
    let format = format_of(cli, Format::Csv, &[Format::Csv, Format::Json, Format::Svg], "scale")?;
    let (_, base) = a.source.arch_only("scale")?;
    let weights = a.cost.weights()?;
    let cfg = a.cost.config();
    let grid = ScalingGrid { multipliers: vec![a.grid.clone()], cap: a.cap };
    let specs = enumerate_scaled(&base, &grid).or_user()?;
    let synthetic = SyntheticResponse::new(cli.seed);
    let score = |spec: &ArchSpec, costs: &CostBreakdown| match a.score {
        ScoreKind::Synthetic => synthetic.score_with_costs(&encode(spec).expect("scaled specs are valid"), costs),
        ScoreKind::Macs => (costs.matrix_ops as f64).ln(),
    };
    let variants = evaluate_variants(specs, &weights, &cfg, &score).map_err(CliError::internal)?;
    let fronts = fronts_for_budgets(&variants, &a.budgets).or_user()?;
    for f in &fronts {
        if let Some(w) = &f.warning {
            eprintln!("warning: {w}");
        }
    }
    let text = match format {
        Format::Json => to_json(&fronts),
        Format::Svg => {
            let mut series =
                vec![Series { name: "variants".into(), color: "#bbbbbb", points: variants.iter().map(|v| (v.latency_ms, v.score)).collect(), line: false }];
            const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
            for (i, f) in fronts.iter().enumerate() {
                series.push(Series {
                    name: format!("front <= {} ms", f.budget_ms),
                    color: COLORS[i % COLORS.len()],
                    points: f.front.points.iter().map(|p| (p.latency, p.score)).collect(),
                    line: true,
                });
            }
            render(
                &[Panel {
                    title: "depth-scaled variants".into(),
                    x_label: "estimated latency, ms".into(),
                    y_label: "score".into(),
                    log_x: false,
                    log_y: false,
                    series,
                }],
                1,
            )
        }
        Format::Csv => npunas::scaler::report_csv(&variants, &fronts),
    };
    emit(out(cli), &text)
}

fn cmd_pareto(cli: &Cli, a: &ParetoArgs) -> CliResult<()> {
    let format = format_of(cli, Format::Csv, &[Format::Csv, Format::Json, Format::Svg], "pareto")?;
    let file = std::fs::File::open(&a.input).or_user_ctx(format!("cannot read {}", a.input.display()))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let headers = rdr.headers().or_user()?.clone();
    let col = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| user_msg(format!("{}: no column '{name}'", a.input.display())))
    };
    let (li, si) = (col(&a.latency_col)?, col(&a.score_col)?);
    let mut rows = Vec::new();
    let mut points = Vec::new();
    for rec in rdr.records() {
        let rec = rec.or_user_ctx(a.input.display())?;
        let line = rec.position().map_or(0, |p| p.line());
        let num = |i: usize| {
            rec.get(i)
                .and_then(|t| t.parse::<f64>().ok())
                .ok_or_else(|| user_msg(format!("{} line {line}: column {i} is not a number", a.input.display())))
        };
        points.push(ParetoPoint::new(num(li)?, num(si)?, rows.len()));
        rows.push(rec);
    }
    let front = pareto_indices(&points);
    let text = match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(&headers).map_err(CliError::internal)?;
            for &i in &front {
                w.write_record(&rows[i]).map_err(CliError::internal)?;
            }
            String::from_utf8(w.into_inner().map_err(|e| CliError::internal(anyhow::anyhow!("{e}")))?)
                .map_err(CliError::internal)?
        }
        Format::Json => {
            let objs: Vec<serde_json::Map<String, serde_json::Value>> = front
                .iter()
                .map(|&i| {
                    headers
                        .iter()
                        .zip(rows[i].iter())
                        .map(|(h, v)| (h.to_string(), serde_json::Value::String(v.to_string())))
                        .collect()
                })
                .collect();
            to_json(&objs)
        }
        Format::Svg => render(
            &[Panel {
                title: "Pareto front".into(),
                x_label: a.latency_col.clone(),
                y_label: a.score_col.clone(),
                log_x: false,
                log_y: false,
                series: vec![
                    Series { name: "all".into(), color: "#bbbbbb", points: points.iter().map(|p| (p.latency, p.score)).collect(), line: false },
                    Series {
                        name: "non-dominated".into(),
                        color: "#d62728",
                        points: front.iter().map(|&i| (points[i].latency, points[i].score)).collect(),
                        line: true,
                    },
                ],
            }],
            1,
        ),
    };
    emit(out(cli), &text)
}

fn cmd_export(cli: &Cli, a: &ExportArgs) -> CliResult<()> {
    if a.costs {
        format_of(cli, Format::Csv, &[Format::Csv], "export --costs")?;
        let cfg = a.cost.config();
        let (_, _, net) = a.source.network(&a.cost)?;
        let report = network_cost_report(&net, cfg.batch, cfg.fusion, &cfg.rules).map_err(CliError::internal)?;
        return emit(out(cli), &report.to_csv());
    }
    let format = format_of(cli, Format::Json, &[Format::Json, Format::Csv], "export")?;
    let (_, spec) = a.source.arch_only("export")?;
    let text = match format {
        Format::Csv => {
            let enc = encode(&spec).or_user()?;
            format!("{}\n{}\n", encoding_header().join(","), enc.to_csv_row())
        }
        _ => format!("{}\n", spec.to_json()),
    };
    emit(out(cli), &text)
}

#[derive(Serialize)]
struct SampleRow {
    index: usize,
    name: String,
    matrix_ops: u64,
    vector_ops: u64,
    data_ops: u64,
    mem: f64,
    latency_ms: f64,
}

#[derive(Serialize)]
struct SampleOutput {
    space: Space,
    n: usize,
    seed: u64,
    mmem: f64,
    networks: Vec<SampleRow>,
}

fn cmd_sample_space(cli: &Cli, a: &SampleSpaceArgs) -> CliResult<()> {
    let format = format_of(cli, Format::Csv, &[Format::Csv, Format::Json], "sample-space")?;
    let space: Space = a.space.parse().map_err(|e: String| user_msg(e))?;
    if a.n == 0 {
        return Err(user_msg("--n must be at least 1"));
    }
    let weights = a.cost.weights()?;
    let cfg = a.cost.config();
    let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
    let mut rows = Vec::with_capacity(a.n);
    for (index, s) in space_sampler(space, a.n, &mut rng).into_iter().enumerate() {
        let net = match &s.spec {
            Some(spec) => lower_arch(spec, cfg.input, &cfg.head).or_user()?,
            None => s.network,
        };
        let c = network_cost(&net, cfg.batch, cfg.fusion, &cfg.rules).map_err(CliError::internal)?;
        rows.push(SampleRow {
            index,
            name: format!("{space}-{index:04}"),
            matrix_ops: c.matrix_ops,
            vector_ops: c.vector_ops,
            data_ops: c.data_ops,
            mem: mem(&c, &weights).or_user()?,
            latency_ms: latency_estimate(&c, &weights),
        });
    }
    let mmem = rows.iter().map(|r| r.mem).sum::<f64>() / rows.len() as f64;
    let text = match format {
        Format::Json => to_json(&SampleOutput { space, n: a.n, seed: cli.seed, mmem, networks: rows }),
        _ => {
            eprintln!("mMEM({space}, n={}) = {mmem:.6}", a.n);
            let mut s = String::from("index,name,matrix_ops,vector_ops,data_ops,mem,latency_ms\n");
            for r in &rows {
                s.push_str(&format!(
                    "{},{},{},{},{},{:.9},{:.6}\n",
                    r.index, r.name, r.matrix_ops, r.vector_ops, r.data_ops, r.mem, r.latency_ms
                ));
            }
            s
        }
    };
    emit(out(cli), &text)
}
