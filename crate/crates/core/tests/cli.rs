use std::path::Path;
use std::process::{Command, Output};

fn pricecast(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pricecast"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr_json(out: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().last().expect("an error line");
    serde_json::from_str(line).expect("single-line JSON error")
}

#[test]
fn gen_train_evaluate_predict_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    let config = dir.path().join("run.toml");
    let run = dir.path().join("run");
    std::fs::write(&config, "epochs = 3\nseed = 4\n").unwrap();

    let out = pricecast(&["gen", "--out", s(&data), "--regions", "2", "--weeks", "60", "--seed", "1"]);
    assert!(out.status.success(), "{out:?}");

    let stats = dir.path().join("corr.csv");
    let out = pricecast(&["stats", "--data", s(&data), "--out", s(&stats)]);
    assert!(out.status.success(), "{out:?}");
    assert!(String::from_utf8_lossy(&out.stdout).contains("rows kept: 240"));
    assert!(std::fs::read_to_string(&stats).unwrap().starts_with(",Date,AveragePrice"));

    let out = pricecast(&["train", "--data", s(&data), "--config", s(&config), "--out-dir", s(&run)]);
    assert!(out.status.success(), "{out:?}");
    for f in ["checkpoint.json", "loss_curve.csv", "train_report.json", "resolved_config.toml"] {
        assert!(run.join(f).exists(), "missing {f}");
    }
    let curve = std::fs::read_to_string(run.join("loss_curve.csv")).unwrap();
    assert_eq!(curve.lines().count(), 4);
    let resolved = std::fs::read_to_string(run.join("resolved_config.toml")).unwrap();
    assert!(resolved.contains("epochs = 3") && resolved.contains("batch_size = 32"));

    let ckpt = run.join("checkpoint.json");
    let out = pricecast(&["evaluate", "--data", s(&data), "--checkpoint", s(&ckpt), "--out-dir", s(&run)]);
    assert!(out.status.success(), "{out:?}");
    let preds = std::fs::read_to_string(run.join("predictions.csv")).unwrap();
    assert!(preds.starts_with("date,region,type,actual,predicted\n"));
    let metrics: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(run.join("metrics.json")).unwrap()).unwrap();
    let (mse, rmse) = (metrics["mse"].as_f64().unwrap(), metrics["rmse"].as_f64().unwrap());
    assert!((rmse * rmse - mse).abs() < 1e-9);
    assert_eq!(metrics["n_samples"].as_u64().unwrap() as usize, preds.lines().count() - 1);

    // first 13 rows: one series, twelve weeks of history
    let text = std::fs::read_to_string(&data).unwrap();
    let window: String = text.lines().take(13).map(|l| format!("{l}\n")).collect();
    let window_path = dir.path().join("window.csv");
    std::fs::write(&window_path, window).unwrap();
    let out = pricecast(&["predict", "--checkpoint", s(&ckpt), "--window", s(&window_path)]);
    assert!(out.status.success(), "{out:?}");
    let price: f64 = String::from_utf8_lossy(&out.stdout).trim().parse().unwrap();
    assert!(price.is_finite() && price > 0.0);
}

#[test]
fn malformed_csv_names_the_missing_column() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("bad.csv");
    std::fs::write(
        &data,
        "Date,type,year,Region,4046,4225,4770,Salesvolume,weather\n2015-01-04,conventional,2015,Albany,1,2,3,4,0.5\n",
    )
    .unwrap();
    let out = pricecast(&["train", "--data", s(&data), "--out-dir", s(&dir.path().join("o"))]);
    assert!(!out.status.success());
    let err = stderr_json(&out);
    assert_eq!(err["error"], "schema");
    assert!(err["message"].as_str().unwrap().contains("AveragePrice"));
}

#[test]
fn bad_config_key_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    let config = dir.path().join("c.toml");
    std::fs::write(&config, "epoch = 3\n").unwrap();
    assert!(pricecast(&["gen", "--out", s(&data), "--regions", "1", "--weeks", "30"]).status.success());
    let out = pricecast(&["train", "--data", s(&data), "--config", s(&config), "--out-dir", s(dir.path())]);
    assert!(!out.status.success());
    assert_eq!(stderr_json(&out)["error"], "config");
}

#[test]
fn gradcheck_passes_with_fixed_seed() {
    let out = pricecast(&["gradcheck", "--seed", "7"]);
    assert!(out.status.success(), "{out:?}");
    assert!(String::from_utf8_lossy(&out.stdout).contains(": ok"));
}
