use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamConfig, AdamState};
use crate::data::WindowedSample;
use crate::diffcore::Tape;
use crate::error::{Error, Result};
use crate::evaluation::Metrics;
use crate::loss::{huber_loss_on, HuberDelta};
use crate::model::{forward_graph, ModelConfig, ModelParams, ParamVars};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub huber_delta: HuberDelta,
    pub seed: u64,
    pub early_stop_patience: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            batch_size: 32,
            adam: AdamConfig::default(),
            huber_delta: HuberDelta::default(),
            seed: 0,
            early_stop_patience: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if self.early_stop_patience == Some(0) {
            return Err(Error::Config("early_stop_patience must be at least 1".into()));
        }
        self.adam.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub train_loss: Vec<f64>,
    /// Empty when training ran without a validation set.
    pub val_loss: Vec<f64>,
    /// 1-based epoch whose parameters were returned.
    pub best_epoch: usize,
    pub epochs_run: usize,
    pub final_metrics: Option<Metrics>,
    pub wall_time_secs: f64,
}

impl TrainReport {
    /// Bitwise equality of everything except the wall time.
    pub fn same_outcome(&self, other: &TrainReport) -> bool {
        fn bits(v: &[f64]) -> Vec<u64> {
            v.iter().map(|x| x.to_bits()).collect()
        }
        fn metric_bits(m: &Option<Metrics>) -> Option<(u64, u64, usize)> {
            m.map(|m| (m.mse.to_bits(), m.rmse.to_bits(), m.n_samples))
        }
        bits(&self.train_loss) == bits(&other.train_loss)
            && bits(&self.val_loss) == bits(&other.val_loss)
            && self.best_epoch == other.best_epoch
            && self.epochs_run == other.epochs_run
            && metric_bits(&self.final_metrics) == metric_bits(&other.final_metrics)
    }

    pub fn write_loss_curve<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["epoch", "train_loss", "val_loss"])?;
        for (i, t) in self.train_loss.iter().enumerate() {
            let val = self.val_loss.get(i).map(f64::to_string).unwrap_or_default();
            w.write_record([(i + 1).to_string(), t.to_string(), val])?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }

    pub fn save_loss_curve(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_loss_curve(file)
    }
}

/// Loss and per-tensor gradients of one sample, in `ModelParams::named` order.
pub fn sample_gradient(
    cfg: &ModelConfig,
    params: &ModelParams,
    sample: &WindowedSample,
    delta: HuberDelta,
) -> Result<(f64, Vec<Vec<f64>>)> {
    let mut tape = Tape::new();
    let vars = ParamVars::register(&mut tape, params, true);
    let x = tape.constant(sample.window.clone());
    let y_hat = forward_graph(&mut tape, x, cfg, &vars)?;
    let loss = huber_loss_on(&mut tape, y_hat, &[sample.target], delta)?;
    tape.backward(loss)?;
    Ok((tape.value(loss).item()?, vars.grads(&tape)))
}

fn sample_loss(cfg: &ModelConfig, params: &ModelParams, s: &WindowedSample, delta: HuberDelta) -> Result<f64> {
    let mut tape = Tape::new();
    let vars = ParamVars::register(&mut tape, params, false);
    let x = tape.constant(s.window.clone());
    let y_hat = forward_graph(&mut tape, x, cfg, &vars)?;
    let loss = huber_loss_on(&mut tape, y_hat, &[s.target], delta)?;
    tape.value(loss).item()
}

/// Mean Huber loss over `samples`, summed in index order.
pub fn mean_loss(
    cfg: &ModelConfig,
    params: &ModelParams,
    samples: &[WindowedSample],
    delta: HuberDelta,
) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySequence("mean_loss"));
    }
    let losses: Vec<f64> = samples
        .par_iter()
        .map(|s| sample_loss(cfg, params, s, delta))
        .collect::<Result<_>>()?;
    Ok(losses.iter().sum::<f64>() / samples.len() as f64)
}

fn diverged(e: Error, epoch: usize, batch: usize) -> Error {
    match e {
        Error::NonFinite { .. } => Error::Divergence { epoch, batch },
        other => other,
    }
}

/// Mini-batch Adam on the mean Huber loss. Returns the parameters from the
/// epoch with the lowest validation loss, or from the last epoch when `val`
/// is empty.
pub fn train(
    cfg: &ModelConfig,
    init: ModelParams,
    train: &[WindowedSample],
    val: &[WindowedSample],
    tc: &TrainConfig,
) -> Result<(ModelParams, TrainReport)> {
    let started = Instant::now();
    tc.validate()?;
    cfg.validate()?;
    init.validate(cfg)?;
    if train.is_empty() {
        return Err(Error::EmptyDataset("no training samples".into()));
    }

    let mut params = init;
    params.set_requires_grad(true);
    let mut state = AdamState::for_tensors(params.tensors());
    let mut rng = ChaCha8Rng::seed_from_u64(tc.seed);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let delta = tc.huber_delta;

    let mut report = TrainReport {
        train_loss: Vec::with_capacity(tc.epochs),
        val_loss: Vec::new(),
        best_epoch: 0,
        epochs_run: 0,
        final_metrics: None,
        wall_time_secs: 0.0,
    };
    let mut best: Option<(f64, ModelParams)> = None;

    for epoch in 1..=tc.epochs {
        order.shuffle(&mut rng);
        let mut sample_losses = vec![0.0; train.len()];

        for (b, batch) in order.chunks(tc.batch_size).enumerate() {
            let results: Vec<(f64, Vec<Vec<f64>>)> = batch
                .par_iter()
                .map(|&i| sample_gradient(cfg, &params, &train[i], delta))
                .collect::<Result<_>>()
                .map_err(|e| diverged(e, epoch, b))?;

            let mut total: Vec<Vec<f64>> = params.tensors().iter().map(|t| vec![0.0; t.len()]).collect();
            for (&i, (loss, grads)) in batch.iter().zip(&results) {
                sample_losses[i] = *loss;
                for (acc, g) in total.iter_mut().zip(grads) {
                    for (a, v) in acc.iter_mut().zip(g) {
                        *a += v;
                    }
                }
            }
            let scale = 1.0 / batch.len() as f64;
            let mut finite = true;
            for (t, mut g) in params.tensors_mut().into_iter().zip(total) {
                g.iter_mut().for_each(|v| *v *= scale);
                finite &= g.iter().all(|v| v.is_finite());
                t.set_grad(g)?;
            }
            if !finite {
                return Err(Error::Divergence { epoch, batch: b });
            }
            let mut tensors = params.tensors_mut();
            adam_step(&mut tensors, &mut state, &tc.adam)?;
            if tensors.iter().any(|t| t.data().iter().any(|v| !v.is_finite())) {
                return Err(Error::Divergence { epoch, batch: b });
            }
        }

        let train_loss = sample_losses.iter().sum::<f64>() / train.len() as f64;
        if !train_loss.is_finite() {
            return Err(Error::Divergence { epoch, batch: 0 });
        }
        report.train_loss.push(train_loss);
        report.epochs_run = epoch;

        let score = if val.is_empty() {
            None
        } else {
            let v = mean_loss(cfg, &params, val, delta).map_err(|e| diverged(e, epoch, 0))?;
            report.val_loss.push(v);
            Some(v)
        };
        log::debug!("epoch {epoch}: train {train_loss:.6} val {score:?}");

        match score {
            Some(v) if best.as_ref().is_none_or(|(b, _)| v < *b) => {
                best = Some((v, params.clone()));
                report.best_epoch = epoch;
            }
            Some(_) => {}
            None => report.best_epoch = epoch,
        }
        if let (Some(p), Some(_)) = (tc.early_stop_patience, score) {
            if epoch - report.best_epoch >= p {
                log::info!("early stop at epoch {epoch}, best epoch {}", report.best_epoch);
                break;
            }
        }
    }

    let mut out = match best {
        Some((_, p)) => p,
        None => params,
    };
    out.clear_grads();
    report.wall_time_secs = started.elapsed().as_secs_f64();
    Ok((out, report))
}
