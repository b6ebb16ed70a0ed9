use std::path::Path;
use std::process::{Command, Output};

fn ordqual(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ordqual")).current_dir(dir).args(args).output().unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = ordqual(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

/// Exit code and the parsed single-line error.
fn fails(dir: &Path, args: &[&str]) -> (i32, serde_json::Value) {
    let out = ordqual(dir, args);
    let stderr = String::from_utf8(out.stderr).unwrap();
    let last = stderr.lines().last().unwrap_or_default();
    (out.status.code().unwrap(), serde_json::from_str(last).unwrap_or_else(|_| panic!("not json: {stderr}")))
}

fn synth(dir: &Path, n: &str, seed: &str) {
    ok(dir, &["synth", "--out", "data.csv", "--truth", "truth.csv", "--n", n, "--seed", seed]);
}

#[test]
fn synth_fit_evaluate_beats_uniform_guessing() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    synth(d, "4000", "11");
    ok(d, &["fit", "data.csv", "--out", "class.json", "--unit", "class"]);
    ok(d, &["evaluate", "data.csv", "--model", "class=class.json", "--unit", "class", "--out-dir", "eval"]);
    let accuracy = std::fs::read_to_string(d.join("eval/accuracy.csv")).unwrap();
    let row = accuracy.lines().find(|l| l.starts_with("class,class,")).unwrap();
    let acc: f64 = row.split(',').nth(2).unwrap().parse().unwrap();
    assert!(acc > 1.0 / 6.0, "{acc}");
    let calibration = std::fs::read_to_string(d.join("eval/calibration.csv")).unwrap();
    assert_eq!(calibration.lines().next().unwrap(), "unit,model,class,diff,stderr");
    assert_eq!(calibration.lines().count(), 1 + 2 * 6);
    assert!(d.join("eval/calibration_plot.csv").exists());
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    synth(d, "1500", "3");
    let truth = std::fs::read(d.join("truth.csv")).unwrap();
    synth(d, "1500", "3");
    assert_eq!(std::fs::read(d.join("truth.csv")).unwrap(), truth);
    for name in ["a.json", "b.json"] {
        ok(d, &["fit", "data.csv", "--out", name, "--unit", "revision", "--seed", "4"]);
    }
    assert_eq!(std::fs::read(d.join("a.json")).unwrap(), std::fs::read(d.join("b.json")).unwrap());
    for name in ["s1.csv", "s2.csv"] {
        ok(d, &["score", "a.json", "data.csv", "--out", name, "--draws", "1500", "--seed", "9"]);
    }
    assert_eq!(std::fs::read(d.join("s1.csv")).unwrap(), std::fs::read(d.join("s2.csv")).unwrap());
    let header = std::fs::read_to_string(d.join("s1.csv")).unwrap();
    assert_eq!(header.lines().next().unwrap(), "id,phi,ci_low,ci_high,phi_norm,predicted_class,mpqc,evenly_spaced");
    assert_eq!(header.lines().count(), 1501);
}

#[test]
fn compare_correlates_score_files() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    synth(d, "1000", "5");
    ok(d, &["fit", "data.csv", "--out", "art.json", "--unit", "article"]);
    ok(d, &["fit", "data.csv", "--out", "cls.json", "--unit", "class", "--penalty", "none"]);
    ok(d, &["score", "art.json", "data.csv", "--out", "art.csv", "--thresholds-out", "art_thresholds.csv"]);
    ok(d, &["score", "cls.json", "data.csv", "--out", "cls.csv"]);
    let table = ok(d, &["compare", "art.csv", "cls.csv", "--baselines", "--column", "phi_norm"]);
    let rows: Vec<Vec<&str>> = table.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 16);
    for r in &rows {
        let (p, k): (f64, f64) = (r[2].parse().unwrap(), r[3].parse().unwrap());
        if r[0] == r[1] {
            assert_eq!((p, k), (1.0, 1.0));
        } else {
            assert!(k > 0.0, "{r:?}");
        }
    }
    let thresholds = std::fs::read_to_string(d.join("art_thresholds.csv")).unwrap();
    assert_eq!(thresholds.lines().count(), 6);
    assert_eq!(fails(d, &["compare", "art.csv"]).0, 2);
}

#[test]
fn weights_accept_custom_population_and_dataset_counts() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("pop.txt"), "unit = mine\nstub = 1\nstart = 1\nc = 1\nb = 1\nga = 1\nfa = 4\n").unwrap();
    let out = ok(d, &["weights", "--population", "pop.txt", "--sample-counts", "1,1,1,1,1,1"]);
    let last = out.lines().last().unwrap();
    assert_eq!(last, "mine,FA,1,4,2.6666666666666665");
    synth(d, "600", "1");
    let out = ok(d, &["weights", "--unit", "class", "--dataset", "data.csv"]);
    assert_eq!(out.lines().count(), 7);
    std::fs::write(d.join("bad.txt"), "stub = 1\nstart = 1\nc = 1\nb = 1\nga = 1\n").unwrap();
    let (code, err) = fails(d, &["weights", "--population", "bad.txt"]);
    assert_eq!((code, err["error"].as_str().unwrap()), (1, "MissingClass"));
    assert_eq!(fails(d, &["weights", "--unit", "custom"]).0, 2);
    assert_eq!(fails(d, &["weights", "--unit", "article", "--population", "pop.txt"]).0, 2);
}

#[test]
fn validate_strict_and_lenient() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let text =
        "id,p_stub,p_start,p_c,p_b,p_ga,p_fa,label\na,0.5,0.5,0,0,0,0,Stub\nb,0.9,0.9,0,0,0,0,Start\nc,0,0,0,0,0,1,A\n";
    std::fs::write(d.join("d.csv"), text).unwrap();
    let (code, err) = fails(d, &["validate", "d.csv"]);
    assert_eq!(code, 1);
    assert_eq!(err["error"], "InvalidRows");
    let rows: Vec<u64> = err["rows"].as_array().unwrap().iter().map(|r| r["row"].as_u64().unwrap()).collect();
    assert_eq!(rows, [2, 3]);
    let report: serde_json::Value =
        serde_json::from_str(&ok(d, &["validate", "d.csv", "--lenient", "--report", "r.json"])).unwrap();
    assert_eq!(report["valid"], 1);
    assert_eq!(report["rows_read"], 3);
    assert_eq!(report["class_counts"]["Stub"], 1);
    assert!(d.join("r.json").exists());
    std::fs::write(d.join("m.csv"), "id,p_stub,p_start,p_c,p_b,p_ga,label\n").unwrap();
    assert_eq!(fails(d, &["validate", "m.csv"]).1["error"], "MissingColumn");
}

#[test]
fn usage_and_data_errors_use_distinct_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let (code, err) = fails(d, &["fit"]);
    assert_eq!(code, 2);
    assert_eq!(err["error"], "UsageError");
    assert_eq!(fails(d, &["frobnicate"]).0, 2);
    assert_eq!(fails(d, &["synth", "--out", "x.csv", "--truth", "t.csv", "--thresholds", "1,0,2,3,4"]).0, 2);
    let (code, err) = fails(d, &["fit", "missing.csv", "--out", "m.json"]);
    assert_eq!((code, err["error"].as_str().unwrap()), (1, "IoFailure"));
    // A single-class dataset cannot be fit.
    std::fs::write(
        d.join("one.csv"),
        "id,p_stub,p_start,p_c,p_b,p_ga,p_fa,label\na,1,0,0,0,0,0,Stub\nb,0.9,0.1,0,0,0,0,Stub\n",
    )
    .unwrap();
    let (code, err) = fails(d, &["fit", "one.csv", "--out", "m.json"]);
    assert_eq!((code, err["error"].as_str().unwrap()), (1, "TooFewClasses"));
    assert!(!d.join("m.json").exists());
    std::fs::write(d.join("old.json"), "{\"schema_version\": 0}").unwrap();
    synth(d, "100", "0");
    let (code, err) = fails(d, &["score", "old.json", "data.csv", "--out", "s.csv"]);
    assert_eq!((code, err["error"].as_str().unwrap()), (1, "SchemaVersionMismatch"));
    assert!(ok(d, &["--help"]).contains("Usage"));
}

#[test]
fn config_file_supplies_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("cfg.toml"), "n = 300\nseed = 8\nkappa = 20.0\nunit = \"revision\"\npenalty = \"none\"\n")
        .unwrap();
    ok(d, &["--config", "cfg.toml", "synth", "--out", "a.csv", "--truth", "ta.csv"]);
    ok(d, &["synth", "--out", "b.csv", "--truth", "tb.csv", "--n", "300", "--seed", "8", "--kappa", "20"]);
    assert_eq!(std::fs::read(d.join("a.csv")).unwrap(), std::fs::read(d.join("b.csv")).unwrap());
    ok(d, &["fit", "a.csv", "--out", "c.json", "--config", "cfg.toml"]);
    ok(d, &["fit", "a.csv", "--out", "f.json", "--unit", "revision", "--penalty", "none"]);
    assert_eq!(std::fs::read(d.join("c.json")).unwrap(), std::fs::read(d.join("f.json")).unwrap());
    std::fs::write(d.join("bad.toml"), "sede = 1\n").unwrap();
    assert_eq!(fails(d, &["--config", "bad.toml", "synth", "--out", "x.csv", "--truth", "y.csv"]).0, 2);
}

#[test]
fn jsonl_input_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let mut lines = String::new();
    for (i, label) in ["Stub", "Start", "C", "B", "GA", "FA"].iter().cycle().take(60).enumerate() {
        let mut p = [0.02; 6];
        p[i % 6] = 0.9;
        lines.push_str(&format!(
            "{{\"id\":\"r{i}\",\"p_stub\":{},\"p_start\":{},\"p_c\":{},\"p_b\":{},\"p_ga\":{},\"p_fa\":{},\"label\":\"{label}\"}}\n",
            p[0], p[1], p[2], p[3], p[4], p[5]
        ));
    }
    std::fs::write(d.join("d.jsonl"), lines).unwrap();
    let report: serde_json::Value = serde_json::from_str(&ok(d, &["validate", "d.jsonl"])).unwrap();
    assert_eq!(report["valid"], 60);
}
