//! End-to-end steps shared by the command-line tool and the tests.

use std::path::{Path, PathBuf};

use crate::config::Settings;
use crate::data::{clean, group_series, prepare, prepare_with_spec, CleanReport, PreparedData, RecordTable, SplitRatios};
use crate::diffcore::Tensor;
use crate::error::{Error, Result};
use crate::evaluation::{evaluate, Evaluation};
use crate::model::{forward, init_params, Checkpoint};
use crate::training::{train, TrainReport};

pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const LOSS_CURVE_FILE: &str = "loss_curve.csv";
pub const TRAIN_REPORT_FILE: &str = "train_report.json";
pub const RESOLVED_CONFIG_FILE: &str = "resolved_config.toml";
pub const PREDICTIONS_FILE: &str = "predictions.csv";
pub const METRICS_FILE: &str = "metrics.json";

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub checkpoint: Checkpoint,
    pub report: TrainReport,
    pub clean_report: CleanReport,
    pub data: PreparedData,
}

/// Cleans, encodes, windows, splits and trains. The report's final metrics
/// are computed on the validation split, or the training split when the
/// validation split is empty.
pub fn train_on_table(table: &RecordTable, settings: &Settings) -> Result<TrainOutcome> {
    settings.validate()?;
    let (cleaned, clean_report) = clean(table)?;
    let ratios = settings.split_ratios();
    let data = prepare(&cleaned, settings.window, ratios)?;
    let cfg = settings.model_config(data.spec.dim())?;
    let tc = settings.train_config()?;
    let init = init_params(&cfg, settings.seed);
    log::info!(
        "model: {} parameters, receptive field {}",
        init.num_parameters(),
        cfg.tcn.receptive_field()
    );

    let (params, mut report) = train(&cfg, init, &data.train, &data.val, &tc)?;
    let scored = if data.val.is_empty() { &data.train } else { &data.val };
    report.final_metrics = Some(evaluate(&params, &cfg, scored, &data.spec)?.metrics);

    let checkpoint = Checkpoint::new(cfg, params).with_features(data.spec.clone(), ratios);
    Ok(TrainOutcome {
        checkpoint,
        report,
        clean_report,
        data,
    })
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Writes the checkpoint, loss curve, report and resolved settings into
/// `out_dir`, returning the paths written.
pub fn write_training_artifacts(out_dir: &Path, outcome: &TrainOutcome, settings: &Settings) -> Result<Vec<PathBuf>> {
    ensure_dir(out_dir)?;
    let ckpt = out_dir.join(CHECKPOINT_FILE);
    crate::model::save_checkpoint(&ckpt, &outcome.checkpoint)?;
    let curve = out_dir.join(LOSS_CURVE_FILE);
    outcome.report.save_loss_curve(&curve)?;
    let report = out_dir.join(TRAIN_REPORT_FILE);
    let json = serde_json::to_string_pretty(&outcome.report)?;
    std::fs::write(&report, json + "\n").map_err(|e| Error::io(&report, e))?;
    let resolved = out_dir.join(RESOLVED_CONFIG_FILE);
    std::fs::write(&resolved, settings.to_toml()?).map_err(|e| Error::io(&resolved, e))?;
    Ok(vec![ckpt, curve, report, resolved])
}

fn stored_encoding(ckpt: &Checkpoint) -> Result<(crate::data::FeatureSpec, SplitRatios)> {
    let spec = ckpt
        .features
        .clone()
        .ok_or_else(|| Error::Checkpoint("checkpoint carries no feature encoding".into()))?;
    Ok((spec, ckpt.split.unwrap_or_default()))
}

/// Rebuilds the test split of `table` with the checkpoint's encoding and
/// ratios, and scores the model on it.
pub fn evaluate_checkpoint(table: &RecordTable, ckpt: &Checkpoint) -> Result<Evaluation> {
    let (spec, ratios) = stored_encoding(ckpt)?;
    let (cleaned, _) = clean(table)?;
    let data = prepare_with_spec(&cleaned, spec, ckpt.config.window, ratios)?;
    evaluate(&ckpt.params, &ckpt.config, &data.test, &data.spec)
}

/// Forecast in price units for the step after the last `L` rows of
/// `table`, which must hold a single (region, type) series.
pub fn predict_next(table: &RecordTable, ckpt: &Checkpoint) -> Result<f64> {
    let (spec, _) = stored_encoding(ckpt)?;
    let (cleaned, _) = clean(table)?;
    let series = group_series(&cleaned)?;
    let keys: std::collections::BTreeSet<_> = series.iter().map(|s| &s.key).collect();
    if keys.len() != 1 {
        return Err(Error::Contract(format!(
            "prediction window must hold one region/type series, found {}",
            keys.len()
        )));
    }
    let last = series.last().expect("one series");
    let l = ckpt.config.window;
    if last.rows.len() < l {
        return Err(Error::EmptyDataset(format!(
            "prediction window needs {l} consecutive weekly rows, got {}",
            last.rows.len()
        )));
    }
    let tail = &last.rows[last.rows.len() - l..];
    let f = spec.dim();
    let mut x = vec![0.0; f * l];
    for (t, row) in tail.iter().enumerate() {
        let (enc, unseen) = spec.encode_row(row);
        if unseen {
            log::warn!("category {}/{} was not seen during training", row.region, row.kind);
        }
        for (c, v) in enc.into_iter().enumerate() {
            x[c * l + t] = v;
        }
    }
    let z = forward(&Tensor::new(vec![f, l], x)?, &ckpt.config, &ckpt.params)?;
    Ok(spec.target_stats().destandardize(z))
}
