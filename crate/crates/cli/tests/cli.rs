use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn nhca(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nhca"))
        .args(args)
        .env("NHCA_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Three tight clusters at (0,0), (10,0), (0,10); points on rings of radius
/// 0.1–0.4 so the layout is deterministic.
fn corner_csv(flip_every: Option<usize>) -> String {
    let centers = [(0.0, 0.0), (10.0, 0.0), (0.0, 10.0)];
    let names = ["a", "b", "c"];
    let mut out = String::from("x,y,label\n");
    let mut row = 0;
    for (k, (cx, cy)) in centers.iter().enumerate() {
        for i in 0..20 {
            let t = i as f64 * 0.7;
            let r = 0.1 + 0.3 * (i % 4) as f64 / 3.0;
            let label = match flip_every {
                Some(n) if row % n == 0 => names[(k + 1) % 3],
                _ => names[k],
            };
            out.push_str(&format!("{},{},{label}\n", cx + r * t.cos(), cy + r * t.sin()));
            row += 1;
        }
    }
    out
}

fn eval_json(model: &Path, data: &str) -> Value {
    let out = nhca(&["eval", "--model", path(model), "--data", data, "--format", "json"]);
    assert!(out.status.success(), "{}", stderr(&out));
    serde_json::from_str(&stdout(&out)).unwrap()
}

#[test]
fn train_then_eval_on_iris() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("m.json");
    let out = nhca(&[
        "train", "--data", "iris", "--variant", "gepsvm", "--strategy", "oaa", "--model-out", path(&model),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("training accuracy"));
    assert!(model.exists());

    let report = eval_json(&model, "iris");
    assert_eq!(report["schema"], 1);
    assert_eq!(report["samples"], 150);
    assert!(report["accuracy"].as_f64().unwrap() > 0.9);
    let classes = report["classes"].as_array().unwrap();
    assert_eq!(classes.len(), 3);
    for c in classes {
        let total: u64 = ["tp", "fp", "tn", "fn"].iter().map(|k| c[k].as_u64().unwrap()).sum();
        assert_eq!(total, 150);
    }
}

#[test]
fn corner_model_scores_its_training_data_and_flipped_labels() {
    let dir = tempfile::tempdir().unwrap();
    let train = dir.path().join("corners.csv");
    let flipped = dir.path().join("flipped.csv");
    fs::write(&train, corner_csv(None)).unwrap();
    fs::write(&flipped, corner_csv(Some(10))).unwrap();
    for variant in ["gepsvm", "reggepsvm", "igepsvm", "twsvm"] {
        for strategy in ["oaa", "bt", "tds"] {
            let model = dir.path().join(format!("{variant}-{strategy}.json"));
            let out = nhca(&[
                "train", "--data", path(&train), "--variant", variant, "--strategy", strategy,
                "--model-out", path(&model), "--describe",
            ]);
            assert!(out.status.success(), "{}", stderr(&out));
            assert_eq!(eval_json(&model, path(&train))["accuracy"], 1.0, "{variant}-{strategy}");
            // every tenth label is wrong, so a perfect model scores 0.9
            let acc = eval_json(&model, path(&flipped))["accuracy"].as_f64().unwrap();
            assert!((acc - 0.9).abs() < 1e-12, "{variant}-{strategy}: {acc}");
        }
    }
}

#[test]
fn eval_text_and_csv_formats() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("m.json");
    assert!(nhca(&["train", "--data", "wine", "--variant", "twsvm", "--strategy", "tds", "--model-out", path(&model)])
        .status
        .success());
    let text = stdout(&nhca(&["eval", "--model", path(&model), "--data", "wine"]));
    assert!(text.contains("samples: 178") && text.contains("accuracy:"));
    let csv = stdout(&nhca(&["eval", "--model", path(&model), "--data", "wine", "--format", "csv"]));
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "class,tp,fp,tn,fn");
    assert_eq!(lines.len(), 5);
    assert!(lines[4].starts_with("accuracy,"));
}

#[test]
fn exit_codes() {
    let unknown = nhca(&["train", "--data", "iris", "--variant", "svm", "--strategy", "oaa", "--model-out", "x"]);
    assert_eq!(unknown.status.code(), Some(2));

    let missing = nhca(&[
        "train", "--data", "/no/such/file.csv", "--variant", "gepsvm", "--strategy", "oaa", "--model-out", "x",
    ]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(stderr(&missing).contains("file not found"), "{}", stderr(&missing));

    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("m.json");
    assert!(nhca(&["train", "--data", "iris", "--variant", "gepsvm", "--strategy", "bt", "--model-out", path(&model)])
        .status
        .success());
    let mismatch = nhca(&["eval", "--model", path(&model), "--data", "wine"]);
    assert_eq!(mismatch.status.code(), Some(1));

    let bad_grid = dir.path().join("grid.json");
    fs::write(&bad_grid, r#"{"lambda": [1.0]}"#).unwrap();
    let out = nhca(&["benchmark", "--datasets", "iris", "--grid", path(&bad_grid)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("lambda"));
}

#[test]
fn benchmark_json_structure() {
    let out = nhca(&["benchmark", "--datasets", "iris,wine", "--format", "json"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let report: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["schema"], 1);
    assert_eq!(report["kernel"], "linear");
    assert_eq!(report["columns"].as_array().unwrap().len(), 12);
    assert_eq!(report["averages"].as_array().unwrap().len(), 12);
    let cells = report["cells"].as_array().unwrap();
    assert_eq!(cells.len(), 24);
    for cell in cells {
        let folds = cell["result"]["per_fold_accuracy"].as_array().unwrap();
        assert_eq!(folds.len(), 5);
    }
    for row in report["row_wlt"].as_array().unwrap() {
        let t = &row[1];
        let sum = t["win"].as_u64().unwrap() + t["loss"].as_u64().unwrap() + t["tie"].as_u64().unwrap();
        assert_eq!(sum, 12);
    }
    let group_total = |key: &str| -> u64 {
        report[key]
            .as_array()
            .unwrap()
            .iter()
            .map(|g| g[1]["win"].as_u64().unwrap() + g[1]["loss"].as_u64().unwrap() + g[1]["tie"].as_u64().unwrap())
            .sum()
    };
    assert_eq!(group_total("variant_wlt"), 24);
    assert_eq!(group_total("strategy_wlt"), 24);
}

#[test]
fn benchmark_text_table_layout() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("report.txt");
    let out = nhca(&["benchmark", "--datasets", "iris", "--output", path(&file)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = fs::read_to_string(&file).unwrap();
    for needle in ["Acc", "SD", "Time", "W-L-T"] {
        assert!(text.contains(needle), "missing {needle}:\n{text}");
    }
    let csv = stdout(&nhca(&["benchmark", "--datasets", "iris", "--variants", "twsvm", "--format", "csv"]));
    assert_eq!(csv.lines().count(), 4);
    assert!(csv.starts_with("dataset,variant,strategy,accuracy,sd,time_seconds,outcome"));
}
