use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spatial-attn")).args(args).output().unwrap()
}

fn run_ok(dir: &Path, extra: &[&str]) {
    let mut args = vec!["run", "--dataset", "controlled_a", "--n-pairs", "4", "--no-timing", "--output-dir"];
    args.push(dir.to_str().unwrap());
    args.extend_from_slice(extra);
    let out = cli(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

/// (item_id, answer, correct, confidence) per prediction row.
fn answers(dir: &Path) -> Vec<(String, String, String, String)> {
    let mut r = csv::Reader::from_path(dir.join("predictions.csv")).unwrap();
    r.records()
        .map(|rec| {
            let rec = rec.unwrap();
            (rec[0].to_string(), rec[2].to_string(), rec[3].to_string(), rec[4].to_string())
        })
        .collect()
}

/// accuracy, pair, set and f1 columns of report.csv.
fn rates(dir: &Path) -> Vec<String> {
    let mut r = csv::Reader::from_path(dir.join("report.csv")).unwrap();
    let rec = r.records().next().unwrap().unwrap();
    rec.iter().skip(8).map(String::from).collect()
}

#[test]
fn unit_scaling_matches_baseline() {
    let tmp = tempfile::tempdir().unwrap();
    let (base, unit) = (tmp.path().join("base"), tmp.path().join("unit"));
    run_ok(&base, &["--method", "baseline"]);
    run_ok(&unit, &["--method", "scaling_vis", "--weight1", "1"]);
    assert_eq!(answers(&base), answers(&unit));
    assert_eq!(rates(&base), rates(&unit));
}

#[test]
fn collapsed_adaptive_matches_scaling() {
    let tmp = tempfile::tempdir().unwrap();
    let (adapt, scale) = (tmp.path().join("adapt"), tmp.path().join("scale"));
    let flags = ["--misplacement-prob", "0.5"];
    run_ok(&adapt, &[&["--method", "adapt_vis", "--weight1", "0.8", "--weight2", "0.8", "--threshold", "0.4"][..], &flags].concat());
    run_ok(&scale, &[&["--method", "scaling_vis", "--weight1", "0.8"][..], &flags].concat());
    assert_eq!(answers(&adapt), answers(&scale));
    assert_eq!(rates(&adapt), rates(&scale));
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let flags = ["--method", "adapt_vis", "--weight1", "0.5", "--weight2", "1.5", "--threshold", "0.6", "--emit-heatmaps", "--emit-traces"];
    run_ok(&a, &flags);
    run_ok(&b, &flags);
    for f in ["report.csv", "per_label.csv", "predictions.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let mut maps = 0;
    for sub in ["heatmaps", "traces"] {
        for entry in fs::read_dir(a.join(sub)).unwrap() {
            let name = entry.unwrap().file_name();
            assert_eq!(fs::read(a.join(sub).join(&name)).unwrap(), fs::read(b.join(sub).join(&name)).unwrap());
            maps += 1;
        }
    }
    assert_eq!(maps, 2 * 16);
}

fn fails_with(args: &[&str], needle: &str) {
    let out = cli(args);
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.trim_end().lines().count(), 1, "{err}");
    assert!(err.contains(needle), "{err}");
}

#[test]
fn usage_errors_are_one_line() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().to_str().unwrap();
    fails_with(&["run", "--dataset", "imagenet", "--method", "baseline", "--output-dir", dir], "unknown dataset");
    fails_with(&["run", "--dataset", "controlled_a", "--method", "magic", "--output-dir", dir], "magic");
    fails_with(&["run", "--dataset", "controlled_a", "--method", "scaling_vis", "--output-dir", dir], "--weight1");
    fails_with(&["run", "--dataset", "controlled_a", "--method", "adapt_vis", "--weight1", "0.5", "--weight2", "2", "--output-dir", dir], "--threshold");
    fails_with(&["run", "--dataset", "controlled_a", "--method", "additive", "--output-dir", dir], "--constant");
    fails_with(&["tune", "--dataset", "controlled_a", "--val-fraction", "0", "--output-dir", dir], "--val-fraction");
    fails_with(&["tune", "--dataset", "controlled_a", "--val-fraction", "1", "--output-dir", dir], "--val-fraction");
}

#[test]
fn one_point_grid_is_chosen() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().to_str().unwrap();
    let out = cli(&[
        "tune", "--dataset", "controlled_a", "--n-pairs", "10", "--alpha-grid", "0.8", "--beta-min", "0.35",
        "--beta-max", "0.35", "--output-dir", dir,
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let spec = fs::read_to_string(tmp.path().join("tuned_spec.toml")).unwrap();
    assert_eq!(spec, "method = \"adapt_vis\"\nweight1 = 0.8\nweight2 = 0.8\nthreshold = 0.35\n");
    let report = fs::read_to_string(tmp.path().join("tune_report.csv")).unwrap();
    assert_eq!(report.lines().count(), 4);
}

#[test]
fn run_file_supplies_defaults() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.toml");
    let out_dir = tmp.path().join("out");
    fs::write(&cfg, format!("dataset = \"controlled_b\"\nmethod = \"additive\"\nconstant = 0.5\nn_pairs = 2\noutput_dir = {:?}\ntemplate = \"Is the {{subject}} near the {{reference}}?\"\n", out_dir)).unwrap();
    let out = cli(&["run", "--config", cfg.to_str().unwrap(), "--no-timing"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(answers(&out_dir).len(), 8);
    fs::write(&cfg, "dataset = \"controlled_b\"\nsurprise = 1\n").unwrap();
    let out = cli(&["run", "--config", cfg.to_str().unwrap(), "--method", "baseline"]);
    assert!(!out.status.success());
}
