use std::path::Path;
use std::process::{Command, Output};

fn npunas(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_npunas")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn dataset() -> String {
    concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/synthetic_latency.csv").to_string()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn mem_of_preset_is_a_fraction() {
    let o = npunas(&["mem", "--preset", "isynet-n0"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    let mem: f64 = row[1].parse().unwrap();
    assert!((0.0..1.0).contains(&mem));
    assert_eq!(row[3], "37002608640");
}

#[test]
fn bad_arch_file_is_a_user_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"stages\": [").unwrap();
    let o = npunas(&["mem", "--arch", p(&bad)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("bad.json"));

    std::fs::write(&bad, "{\"stages\": []}").unwrap();
    assert_eq!(npunas(&["mem", "--arch", p(&bad)]).status.code(), Some(1));
}

#[test]
fn exported_arch_reads_back() {
    let dir = tempfile::tempdir().unwrap();
    let arch = dir.path().join("n1.json");
    assert!(npunas(&["export", "--preset", "isynet-n1", "--out", p(&arch)]).status.success());
    let from_file = stdout(&npunas(&["mem", "--arch", p(&arch)]));
    let from_preset = stdout(&npunas(&["mem", "--preset", "isynet-n1"]));
    let tail = |s: &str| s.lines().nth(1).unwrap().split_once(',').unwrap().1.to_string();
    assert_eq!(tail(&from_file), tail(&from_preset));
}

#[test]
fn weights_file_changes_latency() {
    let dir = tempfile::tempdir().unwrap();
    let w = dir.path().join("w.json");
    std::fs::write(&w, r#"{"w0": 1.0, "wm": 5e-9, "wv": 1e-8, "wd": 2e-8}"#).unwrap();
    let a = stdout(&npunas(&["mem", "--preset", "isynet-n0"]));
    let b = npunas(&["mem", "--preset", "isynet-n0", "--weights", p(&w)]);
    assert!(b.status.success(), "{}", stderr(&b));
    assert_ne!(a, stdout(&b));

    std::fs::write(&w, r#"{"w0": 1.0, "wm": -5e-9, "wv": 1e-8, "wd": 2e-8}"#).unwrap();
    assert_eq!(npunas(&["mem", "--preset", "isynet-n0", "--weights", p(&w)]).status.code(), Some(1));
}

#[test]
fn fit_latency_reports_every_method() {
    let dir = tempfile::tempdir().unwrap();
    let weights = dir.path().join("weights.json");
    let scatter = dir.path().join("scatter.svg");
    let o = npunas(&[
        "fit-latency",
        &dataset(),
        "--probe-samples",
        "5",
        "--weights-out",
        p(&weights),
        "--scatter",
        p(&scatter),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 7);
    let row = |name: &str| lines.iter().find(|l| l.starts_with(&format!("{name},"))).unwrap().split_once(',').unwrap().1;
    assert_eq!(row("ols"), row("omp"));
    assert!(std::fs::read_to_string(&scatter).unwrap().starts_with("<svg"));

    let m = npunas(&["mem", "--preset", "isynet-n0", "--weights", p(&weights)]);
    assert!(m.status.success(), "{}", stderr(&m));
}

#[test]
fn malformed_dataset_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    let mut text: String = std::fs::read_to_string(dataset()).unwrap().lines().take(6).map(|l| format!("{l}\n")).collect();
    text.push_str("broken,1,2,oops,4\n");
    std::fs::write(&bad, text).unwrap();
    let o = npunas(&["fit-latency", p(&bad), "--probe-samples", "0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 7"), "{}", stderr(&o));

    let o = npunas(&["fit-latency", &dataset(), "--method", "lasso", "--probe-samples", "0"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn synth_latency_matches_shipped_dataset() {
    let o = npunas(&["synth-latency"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), std::fs::read_to_string(dataset()).unwrap());
}

#[test]
fn search_without_rounds_keeps_only_warmup() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = npunas(&["search", "--rounds", "0", "--warmup", "12", "--out", p(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let meta = std::fs::read_to_string(out.join("meta_dataset.csv")).unwrap();
    assert_eq!(meta.lines().count(), 13);
    assert_eq!(meta.lines().next().unwrap().split(',').count(), 57);
    assert!(out.join("best_arch.json").exists());
    let manifest = std::fs::read_to_string(out.join("manifest.json")).unwrap();
    assert!(manifest.contains("\"records\": 12"));
}

#[test]
fn search_needs_an_output_directory() {
    assert_eq!(npunas(&["search", "--rounds", "0"]).status.code(), Some(1));
}

#[test]
fn search_with_too_small_history_keeps_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = npunas(&["search", "--rounds", "1", "--warmup", "3", "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(1));
    let meta = std::fs::read_to_string(out.join("meta_dataset.csv")).unwrap();
    assert_eq!(meta.lines().count(), 4);
}

#[test]
fn scale_reaches_deeper_family_member() {
    let o = npunas(&["scale", "--preset", "isynet-n1", "--grid", "1,3", "--budgets", "300,400"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.lines().any(|l| l.split(',').nth(1) == Some("1-1-4-6-3")));
    assert_eq!(text.lines().count(), 33);
    assert!(text.starts_with("variant_id,depths,latency_ms,score,pareto_300,pareto_400\n"));
}

#[test]
fn scale_warns_on_infeasible_budget_and_rejects_references() {
    let o = npunas(&["scale", "--preset", "isynet-n1", "--grid", "1", "--budgets", "1"]);
    assert!(o.status.success());
    assert!(stderr(&o).contains("warning"));
    assert_eq!(npunas(&["scale", "--preset", "resnet-50", "--budgets", "300"]).status.code(), Some(1));
    let o = npunas(&["scale", "--preset", "isynet-n1", "--budgets", "300", "--cap", "10"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("cap"));
}

#[test]
fn pareto_keeps_non_dominated_rows() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("pts.csv");
    std::fs::write(&f, "name,latency_ms,accuracy\na,1,5\nb,2,6\nc,3,4\n").unwrap();
    let o = npunas(&["pareto", p(&f)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o), "name,latency_ms,accuracy\na,1,5\nb,2,6\n");
    assert_eq!(npunas(&["pareto", p(&f), "--score-col", "top1"]).status.code(), Some(1));
}

#[test]
fn export_formats() {
    let o = npunas(&["export", "--preset", "isynet-n0", "--format", "csv"]);
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[1].split(',').count(), 55);
    let costs = stdout(&npunas(&["export", "--preset", "resnet-50", "--costs"]));
    assert!(costs.lines().count() > 50);
    assert_eq!(npunas(&["export", "--preset", "resnet-50"]).status.code(), Some(1));
}

#[test]
fn sample_space_reports_mmem() {
    let o = npunas(&["sample-space", "--space", "mobilenetv2_like", "--n", "4"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().count(), 5);
    assert!(stderr(&o).contains("mMEM"));
    assert_eq!(npunas(&["sample-space", "--space", "vgg"]).status.code(), Some(1));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(npunas(&["mem"]).status.code(), Some(1));
    assert_eq!(npunas(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(npunas(&["mem", "--preset", "isynet-n0", "--format", "svg"]).status.code(), Some(1));
    assert_eq!(npunas(&["--help"]).status.code(), Some(0));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let runs: Vec<Vec<&str>> = vec![
        vec!["search", "--rounds", "2", "--warmup", "20", "--pool", "200", "--seed", "5"],
        vec!["scale", "--preset", "isynet-n1", "--budgets", "250,300", "--seed", "3"],
        vec!["sample-space", "--space", "isynet", "--n", "20", "--seed", "9"],
    ];
    for (i, args) in runs.iter().enumerate() {
        let mut outs = Vec::new();
        for r in 0..2 {
            let target = dir.path().join(format!("{i}-{r}"));
            let mut a = args.clone();
            a.extend(["--out", p(&target)]);
            let o = npunas(&a);
            assert!(o.status.success(), "{}", stderr(&o));
            outs.push(target);
        }
        if outs[0].is_dir() {
            for name in ["meta_dataset.csv", "manifest.json", "best_arch.json"] {
                assert_eq!(std::fs::read(outs[0].join(name)).unwrap(), std::fs::read(outs[1].join(name)).unwrap());
            }
        } else {
            assert_eq!(std::fs::read(&outs[0]).unwrap(), std::fs::read(&outs[1]).unwrap());
        }
    }
}
