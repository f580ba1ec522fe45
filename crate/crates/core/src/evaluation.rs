//! Test-set scoring in price units and export of the per-sample series.

use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{AvocadoType, FeatureSpec, WindowedSample};
use crate::error::{Error, Result};
use crate::loss::{mse, rmse};
use crate::model::{forward, ModelConfig, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub mse: f64,
    pub rmse: f64,
    pub n_samples: usize,
}

impl Metrics {
    pub fn from_pairs(actual: &[f64], predicted: &[f64]) -> Result<Self> {
        Ok(Self {
            mse: mse(actual, predicted)?,
            rmse: rmse(actual, predicted)?,
            n_samples: actual.len(),
        })
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub date: NaiveDate,
    pub region: String,
    #[serde(rename = "type")]
    pub kind: AvocadoType,
    pub actual: f64,
    pub predicted: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub metrics: Metrics,
    pub rows: Vec<PredictionRow>,
}

/// Standardized-scale model outputs for each sample, in input order.
pub fn predict_samples(cfg: &ModelConfig, params: &ModelParams, samples: &[WindowedSample]) -> Result<Vec<f64>> {
    samples
        .par_iter()
        .map(|s| forward(&s.window, cfg, params))
        .collect()
}

/// Scores standardized predictions against each sample's raw target.
pub fn evaluate_predictions(samples: &[WindowedSample], predicted_z: &[f64], spec: &FeatureSpec) -> Result<Evaluation> {
    if samples.is_empty() {
        return Err(Error::EmptyDataset("no test samples to evaluate".into()));
    }
    if samples.len() != predicted_z.len() {
        return Err(Error::Dimension {
            op: "evaluate",
            left: vec![samples.len()],
            right: vec![predicted_z.len()],
        });
    }
    let target = spec.target_stats();
    let rows: Vec<PredictionRow> = samples
        .iter()
        .zip(predicted_z)
        .map(|(s, &z)| PredictionRow {
            date: s.target_date,
            region: s.key.region.clone(),
            kind: s.key.kind,
            actual: s.target_raw,
            predicted: target.destandardize(z),
        })
        .collect();
    let actual: Vec<f64> = rows.iter().map(|r| r.actual).collect();
    let predicted: Vec<f64> = rows.iter().map(|r| r.predicted).collect();
    Ok(Evaluation {
        metrics: Metrics::from_pairs(&actual, &predicted)?,
        rows,
    })
}

pub fn evaluate(
    params: &ModelParams,
    cfg: &ModelConfig,
    test: &[WindowedSample],
    spec: &FeatureSpec,
) -> Result<Evaluation> {
    if test.is_empty() {
        return Err(Error::EmptyDataset("no test samples to evaluate".into()));
    }
    let z = predict_samples(cfg, params, test)?;
    evaluate_predictions(test, &z, spec)
}

/// Predicts the mean raw training target for every test sample.
pub fn constant_mean_baseline(
    train: &[WindowedSample],
    test: &[WindowedSample],
    spec: &FeatureSpec,
) -> Result<Evaluation> {
    if train.is_empty() {
        return Err(Error::EmptyDataset("baseline needs training samples".into()));
    }
    let mean = train.iter().map(|s| s.target_raw).sum::<f64>() / train.len() as f64;
    let z = spec.target_stats().standardize(mean);
    evaluate_predictions(test, &vec![z; test.len()], spec)
}

/// Writes rows sorted by date (stable for equal dates), header
/// `date,region,type,actual,predicted`.
pub fn write_prediction_series<W: Write>(rows: &[PredictionRow], writer: W) -> Result<()> {
    let mut sorted: Vec<&PredictionRow> = rows.iter().collect();
    sorted.sort_by_key(|r| r.date);
    // header written by hand so an empty table still gets one
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    w.write_record(["date", "region", "type", "actual", "predicted"])?;
    for r in sorted {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

pub fn export_prediction_series(rows: &[PredictionRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_prediction_series(rows, file)
}

pub fn read_prediction_series<R: Read>(reader: R) -> Result<Vec<PredictionRow>> {
    let mut r = csv::Reader::from_reader(reader);
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}
