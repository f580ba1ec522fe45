//! Acceptance gate. Runs every criterion, prints one PASS/FAIL line each,
//! and exits nonzero if any fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use pricecast::config::Settings;
use pricecast::data::{
    clean, fit_feature_spec, gen_synthetic, mean_std, prepare, read_csv, training_rows, NumericColumn, SplitRatios,
};
use pricecast::diffcore::Tensor;
use pricecast::evaluation::{constant_mean_baseline, evaluate};
use pricecast::gradcheck::{run_gradcheck, REL_TOLERANCE};
use pricecast::loss::{huber_mean, huber_value, mse, rmse, HuberDelta};
use pricecast::model::{forward, tcn_forward, HeadWidths, ModelConfig, TcnConfig};
use pricecast::training::{mean_loss, train, AdamConfig, TrainConfig};
use pricecast::workflow::{train_on_table, write_training_artifacts};
use rand::Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, Duration, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn gradient_oracle() -> Outcome {
    let mut worst = 0.0f64;
    for seed in 0..5 {
        let report = run_gradcheck(seed).map_err(|e| e.to_string())?;
        ensure(report.checks.len() >= 10, || "not every parameter tensor checked".into())?;
        ensure(report.passed, || format!("seed {seed}: max rel error {:.3e}", report.max_rel_error))?;
        worst = worst.max(report.max_rel_error);
    }
    Ok(format!("max relative error {worst:.2e} < {REL_TOLERANCE:.0e} over 5 seeds"))
}

fn causality() -> Outcome {
    let tcn = TcnConfig {
        input_channels: 3,
        hidden_channels: 5,
        num_blocks: 4,
        kernel_size: 3,
        dilation_base: 2,
    };
    let cfg = ModelConfig::new(tcn, HeadWidths::default(), 16).map_err(|e| e.to_string())?;
    let mut r = common::rng(99);
    let params = common::random_params(&cfg, &mut r);
    let x = common::random_window(3, 16, &mut r);
    let base = tcn_forward(&x, &cfg.tcn, &params).map_err(|e| e.to_string())?;
    for t0 in 0..16 {
        let mut data = x.data().to_vec();
        for ch in 0..3 {
            data[ch * 16 + t0] -= 1.0 + 0.5 * ch as f64;
        }
        let out = tcn_forward(&Tensor::new(vec![3, 16], data).unwrap(), &cfg.tcn, &params).map_err(|e| e.to_string())?;
        for ch in 0..5 {
            for t in 0..t0 {
                let i = ch * 16 + t;
                ensure(base.data()[i].to_bits() == out.data()[i].to_bits(), || {
                    format!("perturbing t0={t0} changed channel {ch} at t={t}")
                })?;
            }
        }
    }
    Ok("16 perturbation positions, earlier outputs bit-identical".into())
}

fn composition_oracle() -> Outcome {
    let mut r = common::rng(31);
    let mut worst = 0.0f64;
    for case in 0..100 {
        let cfg = common::random_config(&mut r);
        let params = common::random_params(&cfg, &mut r);
        let (f, l) = (cfg.tcn.input_channels, cfg.window);
        let x = common::random_window(f, l, &mut r);
        let got = forward(&x, &cfg, &params).map_err(|e| e.to_string())?;
        let want = common::reference_forward(x.data(), f, l, &cfg, &params);
        let diff = (got - want).abs();
        ensure(diff <= 1e-10, || format!("instance {case}: |{got} - {want}| = {diff:.3e}"))?;
        worst = worst.max(diff);
    }
    Ok(format!("100 instances, max |diff| {worst:.2e}"))
}

fn huber_correctness() -> Outcome {
    for delta in [0.1, 0.5, 1.0, 2.0, 7.25] {
        let d = HuberDelta::new(delta).unwrap();
        let half_sq = 0.5 * delta * delta;
        ensure(huber_value(delta, d) == half_sq, || format!("quadratic branch at δ={delta}"))?;
        ensure(delta * (delta - 0.5 * delta) == half_sq, || format!("linear branch at δ={delta}"))?;
        ensure(huber_value(0.5 * delta, d) == 0.125 * delta * delta, || "inner value".into())?;
        ensure(huber_value(3.0 * delta, d) == delta * (3.0 * delta - 0.5 * delta), || "outer value".into())?;
    }
    let v = huber_mean(&[0.5, 2.0], &[0.0, 0.0], HuberDelta::default()).map_err(|e| e.to_string())?;
    ensure(v == 0.8125, || format!("fixture gave {v}"))?;
    Ok("boundary continuity exact, fixture = 0.8125".into())
}

fn metric_identity() -> Outcome {
    let mut r = common::rng(5);
    for _ in 0..200 {
        let n = r.random_range(1..100);
        let y: Vec<f64> = (0..n).map(|_| r.random_range(-10.0..10.0)).collect();
        let yh: Vec<f64> = (0..n).map(|_| r.random_range(-10.0..10.0)).collect();
        let (m, s) = (mse(&y, &yh).unwrap(), rmse(&y, &yh).unwrap());
        ensure((s * s - m).abs() <= 1e-9, || format!("rmse² {} vs mse {m}", s * s))?;
    }
    let echo = 1.23f64 * 1.23;
    ensure((echo - 1.51).abs() < 0.005, || format!("1.23² = {echo}"))?;
    Ok(format!("200 random vectors; 1.23² = {echo:.4} ≈ 1.51"))
}

fn overfit() -> Outcome {
    let all = SplitRatios {
        train: 1.0,
        val: 0.0,
        test: 0.0,
    };
    let data = prepare(&gen_synthetic(1, 10, 21), 6, all).map_err(|e| e.to_string())?;
    ensure(data.train.len() == 8, || format!("{} samples", data.train.len()))?;
    let tcn = TcnConfig {
        input_channels: data.spec.dim(),
        hidden_channels: 8,
        num_blocks: 2,
        kernel_size: 3,
        dilation_base: 2,
    };
    let widths = HeadWidths {
        d_mlp: 16,
        d_h: 8,
        d_a: 8,
    };
    let cfg = ModelConfig::new(tcn, widths, 6).map_err(|e| e.to_string())?;
    let tc = TrainConfig {
        epochs: 500,
        batch_size: 8,
        adam: AdamConfig {
            learning_rate: 1e-2,
            ..Default::default()
        },
        seed: 1,
        ..Default::default()
    };
    let init = pricecast::model::init_params(&cfg, 1);
    let (params, _) = train(&cfg, init, &data.train, &[], &tc).map_err(|e| e.to_string())?;
    let loss = mean_loss(&cfg, &params, &data.train, tc.huber_delta).map_err(|e| e.to_string())?;
    ensure(loss < 1e-2, || format!("final train Huber loss {loss:.4e}"))?;
    Ok(format!("final train Huber loss {loss:.3e} < 1e-2"))
}

fn skill() -> Outcome {
    let settings = Settings::default();
    let outcome = train_on_table(&gen_synthetic(5, 200, 7), &settings).map_err(|e| e.to_string())?;
    let d = &outcome.data;
    let ckpt = &outcome.checkpoint;
    let model = evaluate(&ckpt.params, &ckpt.config, &d.test, &d.spec).map_err(|e| e.to_string())?;
    let baseline = constant_mean_baseline(&d.train, &d.test, &d.spec).map_err(|e| e.to_string())?;

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    write_training_artifacts(dir.path(), &outcome, &settings).map_err(|e| e.to_string())?;
    let curve = std::fs::read_to_string(dir.path().join("loss_curve.csv")).map_err(|e| e.to_string())?;
    let train_loss = |epoch: usize| -> f64 {
        let line = curve.lines().nth(epoch).expect("epoch row");
        line.split(',').nth(1).unwrap().parse().unwrap()
    };
    let (e1, e10) = (train_loss(1), train_loss(10));
    ensure(model.metrics.rmse < baseline.metrics.rmse, || {
        format!("model RMSE {:.4} vs baseline {:.4}", model.metrics.rmse, baseline.metrics.rmse)
    })?;
    ensure(e10 < e1, || format!("epoch-10 loss {e10} not below epoch-1 loss {e1}"))?;
    Ok(format!(
        "test RMSE {:.4} USD vs baseline {:.4}; train loss epoch 1 {e1:.4} → epoch 10 {e10:.4}",
        model.metrics.rmse, baseline.metrics.rmse
    ))
}

fn determinism() -> Outcome {
    let settings = Settings {
        epochs: 8,
        batch_size: 16,
        seed: 12,
        ..Default::default()
    };
    let table = gen_synthetic(3, 90, 11);
    let a = train_on_table(&table, &settings).map_err(|e| e.to_string())?;
    let b = train_on_table(&table, &settings).map_err(|e| e.to_string())?;
    let (ja, jb) = (a.checkpoint.to_json().unwrap(), b.checkpoint.to_json().unwrap());
    ensure(ja == jb && a.checkpoint.bit_eq(&b.checkpoint), || "checkpoints differ".into())?;
    ensure(a.report.same_outcome(&b.report), || "reports differ".into())?;
    Ok(format!("checkpoints ({} bytes) and reports identical", ja.len()))
}

const FIXTURE: &str = "\
Date,AveragePrice,type,year,Region,4046,4225,4770,Salesvolume,weather
2015-01-04,1.33,conventional,2015,Albany,1036.74,54454.85,48.16,64236.62,0.41
2015-01-11,1.35,conventional,2015,Albany,674.28,44638.81,58.33,54876.98,0.38
2015-01-18,-99,conventional,2015,Albany,794.70,109149.67,130.50,118220.22,0.35
2015-01-25,1.06,conventional,2015,Albany,1132.00,71976.41,72.58,78992.15,0.33
2015-02-01,0.99,conventional,2015,Albany,941.48,43838.39,75.78,51039.60,-99
2015-02-08,0.98,conventional,2015,Albany,1184.27,48067.99,43.61,55979.78,0.30
2015-02-15,1.02,conventional,2015,Albany,,47911.51,52.11,54010.77,0.31
2015-02-22,1.07,conventional,2015,Albany,874.91,51307.03,61.47,60240.02,0.33
2015-03-01,1.12,conventional,2015,Albany,920.33,50412.44,66.01,59986.12,0.36
2015-03-08,1.09,conventional,2015,Albany,901.72,49730.18,59.40,57733.25,0.39
";

fn data_contracts() -> Outcome {
    let (table, _) = read_csv(FIXTURE.as_bytes()).map_err(|e| e.to_string())?;
    let (kept, report) = clean(&table).map_err(|e| e.to_string())?;
    ensure(table.len() == 10 && kept.len() == 7, || format!("{} → {}", table.len(), kept.len()))?;

    let ratios = SplitRatios::default();
    let synth = gen_synthetic(3, 80, 2);
    let data = prepare(&synth, 12, ratios).map_err(|e| e.to_string())?;
    let rows = training_rows(&synth, 12, ratios).map_err(|e| e.to_string())?;
    for (i, col) in NumericColumn::FEATURES.iter().enumerate() {
        let z: Vec<f64> = data.spec.encode(&rows).iter().map(|r| r[i]).collect();
        let (m, s) = mean_std(&z);
        ensure(m.abs() < 1e-9 && (s - 1.0).abs() < 1e-9, || {
            format!("{}: mean {m:.3e}, std {s}", col.header())
        })?;
    }

    let train_keys: std::collections::BTreeSet<_> =
        rows.iter().map(|r| (r.region.clone(), r.kind, r.date)).collect();
    let mut perturbed = synth.clone();
    for r in &mut perturbed.records {
        if !train_keys.contains(&(r.region.clone(), r.kind, r.date)) {
            r.average_price += 5.0;
            r.weather = 1.0 - r.weather;
        }
    }
    let refit = prepare(&perturbed, 12, ratios).map_err(|e| e.to_string())?;
    ensure(refit.spec == data.spec, || "encoding changed when non-training rows changed".into())?;
    ensure(fit_feature_spec(&rows).map_err(|e| e.to_string())? == data.spec, || "refit differs".into())?;
    Ok(format!(
        "10 → 7 rows ({} dropped); standardized train columns exact; no leakage",
        report.dropped()
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("1 gradient oracle", Duration::from_secs(10), gradient_oracle),
        ("2 causality", Duration::from_secs(5), causality),
        ("3 composition oracle", Duration::from_secs(60), composition_oracle),
        ("4 huber correctness", Duration::from_secs(60), huber_correctness),
        ("5 metric identity", Duration::from_secs(60), metric_identity),
        ("6 overfit", Duration::from_secs(120), overfit),
        ("7 skill over baseline", Duration::from_secs(300), skill),
        ("8 determinism", Duration::from_secs(300), determinism),
        ("9 data contracts", Duration::from_secs(60), data_contracts),
    ];
    let mut failed = 0;
    for (name, limit, check) in criteria {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let elapsed = start.elapsed();
        let result = match result {
            Ok(msg) if elapsed > limit => Err(format!("{msg}; took {elapsed:.1?}, limit {limit:?}")),
            other => other,
        };
        match result {
            Ok(msg) => println!("PASS  criterion {name}: {msg} ({elapsed:.2?})"),
            Err(msg) => {
                failed += 1;
                println!("FAIL  criterion {name}: {msg} ({elapsed:.2?})");
            }
        }
    }
    println!("{} of 9 criteria passed", 9 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
