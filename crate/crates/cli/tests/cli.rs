use std::path::{Path, PathBuf};
use std::process::Command;

use fried_core::fairness::{dominates, TradeoffPoint};

const SMALL: &str = r#"{
  "dataset": {"kind": "synth_bias", "spec": {"n": 300, "seed": 3}},
  "preset": "synth_bias",
  "train": {"epochs": 4, "architecture": {"hidden": [8, 4], "latent_dim": 3, "critic_hidden": [8]}},
  "eval": {"folds": 2, "downstream": {"classifier": {"hidden": [4], "epochs": 5, "learning_rate": 0.05, "batch_size": 32}}},
  "sweep": {"beta_grid": [0.0, 1.0], "lambda_grid": [0.0, 0.5]},
  "estimator": {"classifier": {"hidden": [8], "epochs": 5, "learning_rate": 0.05, "batch_size": 64}},
  "cmi": {"separability": {"permutations": 3}},
  "audit": {
    "target": {"kind": "linear", "weights": [["informative_1", 1.0], ["proxy", 0.5], ["protected", 2.0]], "bias": 0.0},
    "shapley": {"n_samples": 50},
    "background_size": 10,
    "n_instances": 5
  }
}"#;

fn fried(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_fried"))
        .args(args)
        .env("FRIED_THREADS", "1")
        .output()
        .expect("binary runs");
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("config.json");
    std::fs::write(&p, text).unwrap();
    p
}

fn run_ok(cmd: &str, cfg: &Path, out: &Path, seed: u64) {
    let seed = seed.to_string();
    let (code, err) = fried(&[
        cmd,
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--seed",
        &seed,
    ]);
    assert_eq!(code, 0, "{cmd} failed: {err}");
}

fn read(p: PathBuf) -> Vec<u8> {
    std::fs::read(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

fn csv_rows(p: PathBuf) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(p).unwrap();
    r.records().map(|rec| rec.unwrap().iter().map(str::to_string).collect()).collect()
}

#[test]
fn train_writes_model_and_history_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run_ok("train", &cfg, &a, 5);
    run_ok("train", &cfg, &b, 5);
    assert_eq!(read(a.join("model.json")), read(b.join("model.json")));
    assert_eq!(read(a.join("train_manifest.json")), read(b.join("train_manifest.json")));
    assert_eq!(csv_rows(a.join("history.csv")).len(), 4);
    let c = dir.path().join("c");
    run_ok("train", &cfg, &c, 6);
    assert_ne!(read(a.join("model.json")), read(c.join("model.json")));
}

#[test]
fn eval_cmi_and_audit_read_the_trained_model() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("run");
    run_ok("train", &cfg, &out, 1);
    run_ok("eval", &cfg, &out, 1);
    run_ok("cmi", &cfg, &out, 1);
    run_ok("audit", &cfg, &out, 1);

    let eval: serde_json::Value = serde_json::from_slice(&read(out.join("eval.json"))).unwrap();
    let acc = eval["point"]["accuracy_mean"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&acc));

    let cmi: serde_json::Value = serde_json::from_slice(&read(out.join("cmi.json"))).unwrap();
    assert!(cmi["representation"]["cmi"].as_f64().unwrap().is_finite());
    assert!(cmi["shuffled_control"]["tau"].as_f64().unwrap() >= 0.02);
    let first = read(out.join("cmi.json"));
    run_ok("cmi", &cfg, &out, 1);
    assert_eq!(first, read(out.join("cmi.json")));

    // Two informative columns, the proxy and the protected column.
    for name in ["audit_direct.csv", "audit_indirect.csv"] {
        let rows = csv_rows(out.join(name));
        assert_eq!(rows.len(), 4, "{name}");
        let mut ranks: Vec<usize> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
        ranks.sort_unstable();
        assert_eq!(ranks, vec![1, 2, 3, 4]);
    }
    let direct = csv_rows(out.join("audit_direct.csv"));
    let x2 = direct.iter().find(|r| r[0] == "informative_2").unwrap();
    assert_eq!(x2[1].parse::<f64>().unwrap(), 0.0);
}

#[test]
fn constant_audit_target_gives_zero_attributions() {
    let dir = tempfile::tempdir().unwrap();
    let text = SMALL.replace(
        r#"{"kind": "linear", "weights": [["informative_1", 1.0], ["proxy", 0.5], ["protected", 2.0]], "bias": 0.0}"#,
        r#"{"kind": "constant", "value": 0.3}"#,
    );
    let cfg = write_config(dir.path(), &text);
    let out = dir.path().join("run");
    run_ok("train", &cfg, &out, 0);
    run_ok("audit", &cfg, &out, 0);
    for name in ["audit_direct.csv", "audit_indirect.csv"] {
        for row in csv_rows(out.join(name)) {
            assert_eq!(row[1].parse::<f64>().unwrap(), 0.0, "{name}");
        }
    }
}

fn parse_points(rows: &[Vec<String>]) -> Vec<TradeoffPoint> {
    rows.iter()
        .map(|r| {
            let f: Vec<f64> = r.iter().map(|v| v.parse().unwrap()).collect();
            TradeoffPoint {
                beta: f[0],
                lambda: f[1],
                delta_dp_mean: f[2],
                delta_dp_std: f[3],
                accuracy_mean: f[4],
                accuracy_std: f[5],
                folds: Vec::new(),
            }
        })
        .collect()
}

#[test]
fn sweep_writes_all_points_and_an_undominated_front() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run_ok("sweep", &cfg, &a, 2);
    run_ok("sweep", &cfg, &b, 2);
    for name in ["sweep_all.csv", "sweep_front.csv", "sweep_manifest.json"] {
        assert_eq!(read(a.join(name)), read(b.join(name)), "{name}");
    }
    let all = csv_rows(a.join("sweep_all.csv"));
    let front = csv_rows(a.join("sweep_front.csv"));
    assert_eq!(all.len(), 4);
    assert!(!front.is_empty());
    assert!(front.iter().all(|r| all.contains(r)));
    let all_pts = parse_points(&all);
    for f in parse_points(&front) {
        assert!(all_pts.iter().all(|q| !dominates(q, &f)));
    }
    for p in &all_pts {
        let on_front = parse_points(&front).iter().any(|f| f.beta == p.beta && f.lambda == p.lambda);
        if !on_front {
            assert!(all_pts.iter().any(|q| dominates(q, p)));
        }
    }
}

#[test]
fn gen_data_round_trips_through_the_csv_loader() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("data");
    run_ok("gen-data", &cfg, &out, 0);
    let rows = csv_rows(out.join("dataset.csv"));
    assert_eq!(rows.len(), 300);
    let text = r#"{
      "dataset": {"kind": "csv", "path": "data/dataset.csv",
                  "schema": {"label": {"column": "label", "positive": "1"}, "protected": [{"column": "protected", "positive": "1"}]}},
      "train": {"epochs": 2, "architecture": {"hidden": [4], "latent_dim": 2, "critic_hidden": [4]}}
    }"#;
    let cfg2 = write_config(dir.path(), text);
    run_ok("train", &cfg2, &dir.path().join("m"), 0);
}

#[test]
fn invalid_inputs_fail_without_partial_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("d.csv");
    std::fs::write(&csv_path, "a,b,y\n1,0,1\n2,1,0\n").unwrap();

    let cases = [
        (r#"{"dataset": {"kind": "csv", "path": "d.csv", "schema": {"label": {"column": "y", "positive": "1"}, "protected": [{"column": "missing", "positive": "1"}]}}}"#, 3),
        (r#"{"dataset": {"kind": "synth_bias"}, "train": {"learning_rate": -1.0}}"#, 2),
        (r#"{"dataset": {"kind": "synth_bias"}, "preset": "unknown"}"#, 2),
        (r#"{"dataset": {"kind": "synth_bias"}, "train": {"bogus": 1}}"#, 2),
        ("not json", 2),
    ];
    for (i, (text, expected)) in cases.iter().enumerate() {
        let cfg = write_config(dir.path(), text);
        let out = dir.path().join(format!("out{i}"));
        let (code, err) = fried(&["train", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert_eq!(code, *expected, "case {i}: {err}");
        assert!(!err.is_empty());
        assert!(!out.exists(), "case {i} left outputs");
    }
}

#[test]
fn missing_model_and_divergence_have_distinct_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("empty");
    let (code, _) = fried(&["eval", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, 3);
    assert!(!out.exists());

    let diverging = SMALL.replace(r#""epochs": 4,"#, r#""epochs": 4, "learning_rate": 1e12,"#);
    let cfg = write_config(dir.path(), &diverging);
    let out = dir.path().join("div");
    let (code, err) = fried(&["train", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, 4, "{err}");
    assert!(!out.exists());
}

#[test]
fn bad_thread_count_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = Command::new(env!("CARGO_BIN_EXE_fried"))
        .args(["gen-data", "--config", cfg.to_str().unwrap(), "--out"])
        .arg(dir.path().join("o"))
        .env("FRIED_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
