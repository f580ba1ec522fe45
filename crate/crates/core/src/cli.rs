use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::config::Settings;
use crate::data::{clean, correlation_matrix, gen_synthetic, load_csv, save_csv, DEFAULT_CORRELATION_COLUMNS};
use crate::error::{Error, Result};
use crate::evaluation::export_prediction_series;
use crate::gradcheck::run_gradcheck;
use crate::model::load_checkpoint;
use crate::workflow::{
    evaluate_checkpoint, predict_next, train_on_table, write_training_artifacts, METRICS_FILE, PREDICTIONS_FILE,
};

#[derive(Debug, Parser)]
#[command(name = "pricecast", version, about = "Weekly avocado price forecaster")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic dataset.
    Gen {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 5)]
        regions: usize,
        #[arg(long, default_value_t = 200)]
        weeks: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Clean a dataset, print row counts and write its correlation matrix.
    Stats {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write the cleaned rows here.
        #[arg(long)]
        cleaned: Option<PathBuf>,
    },
    /// Train a model and write its checkpoint, loss curve and report.
    Train {
        #[arg(long)]
        data: PathBuf,
        /// TOML settings file; every key is optional.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Score a checkpoint on the test split of a dataset.
    Evaluate {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Forecast the week after the rows of a single-series CSV.
    Predict {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        window: PathBuf,
    },
    /// Compare analytic gradients with finite differences on a tiny model.
    Gradcheck {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen {
            out,
            regions,
            weeks,
            seed,
        } => {
            let table = gen_synthetic(regions, weeks, seed);
            save_csv(&out, &table)?;
            println!("wrote {} rows to {}", table.len(), out.display());
        }

        Command::Stats { data, out, cleaned } => {
            let (table, load) = load_csv(&data)?;
            let (kept, report) = clean(&table)?;
            println!("rows read: {}", load.rows);
            for (column, n) in load.null_counts.iter().filter(|(_, n)| *n > 0) {
                println!("  empty {column}: {n}");
            }
            println!("dropped (missing value): {}", report.sentinel_dropped);
            println!("dropped (price <= 0): {}", report.nonpositive_price_dropped);
            println!("rows kept: {}", report.kept);
            correlation_matrix(&kept, &DEFAULT_CORRELATION_COLUMNS)?.save_csv(&out)?;
            println!("correlation matrix: {}", out.display());
            if let Some(path) = cleaned {
                save_csv(&path, &kept)?;
                println!("cleaned rows: {}", path.display());
            }
        }

        Command::Train { data, config, out_dir } => {
            let settings = match &config {
                Some(p) => Settings::load(p)?,
                None => Settings::default(),
            };
            log::info!("resolved settings:\n{}", settings.to_toml()?);
            let (table, _) = load_csv(&data)?;
            let outcome = train_on_table(&table, &settings)?;
            let written = write_training_artifacts(&out_dir, &outcome, &settings)?;
            let r = &outcome.report;
            println!(
                "trained {} epochs in {:.1}s, best epoch {}",
                r.epochs_run, r.wall_time_secs, r.best_epoch
            );
            if let Some(m) = r.final_metrics {
                println!("validation mse {:.6} rmse {:.6} (n = {})", m.mse, m.rmse, m.n_samples);
            }
            for p in written {
                println!("wrote {}", p.display());
            }
        }

        Command::Evaluate {
            data,
            checkpoint,
            out_dir,
        } => {
            let ckpt = load_checkpoint(&checkpoint)?;
            let (table, _) = load_csv(&data)?;
            let eval = evaluate_checkpoint(&table, &ckpt)?;
            std::fs::create_dir_all(&out_dir).map_err(|e| Error::io(&out_dir, e))?;
            export_prediction_series(&eval.rows, out_dir.join(PREDICTIONS_FILE))?;
            eval.metrics.save_json(out_dir.join(METRICS_FILE))?;
            let m = eval.metrics;
            println!("test mse {:.6} rmse {:.6} (n = {})", m.mse, m.rmse, m.n_samples);
        }

        Command::Predict { checkpoint, window } => {
            let ckpt = load_checkpoint(&checkpoint)?;
            let (table, _) = load_csv(&window)?;
            println!("{:.4}", predict_next(&table, &ckpt)?);
        }

        Command::Gradcheck { seed } => {
            let report = run_gradcheck(seed)?;
            for c in &report.checks {
                println!("{:<20} max rel error {:.3e}", c.name, c.max_rel_error);
            }
            println!(
                "max rel error {:.3e} (tolerance {:.0e}): {}",
                report.max_rel_error,
                report.tolerance,
                if report.passed { "ok" } else { "FAILED" }
            );
            if !report.passed {
                return Err(Error::Contract(format!(
                    "gradient check failed: max relative error {:.3e}",
                    report.max_rel_error
                )));
            }
        }
    }
    Ok(())
}
