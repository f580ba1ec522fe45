//! Per-series supervised windows and the chronological train/val/test split.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::features::FeatureSpec;
use super::record::{AvocadoType, RawRecord, RecordTable};
use crate::diffcore::Tensor;
use crate::error::{Error, Result};

/// Largest date gap, in days, between consecutive rows of one segment.
pub const MAX_STEP_DAYS: i64 = 7;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SeriesKey {
    pub region: String,
    pub kind: AvocadoType,
}

/// A gap-free, strictly date-ordered run of rows for one (region, type).
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub key: SeriesKey,
    /// Index of this run among the runs of the same key.
    pub segment: usize,
    pub rows: Vec<RawRecord>,
}

/// Groups rows by (region, type), sorts each group by date and cuts it
/// wherever consecutive dates are more than [`MAX_STEP_DAYS`] apart.
pub fn group_series(table: &RecordTable) -> Result<Vec<Series>> {
    let mut groups: BTreeMap<SeriesKey, Vec<RawRecord>> = BTreeMap::new();
    for r in &table.records {
        groups
            .entry(SeriesKey {
                region: r.region.clone(),
                kind: r.kind,
            })
            .or_default()
            .push(r.clone());
    }
    let mut out = Vec::new();
    for (key, mut rows) in groups {
        rows.sort_by_key(|r| r.date);
        if let Some(w) = rows.windows(2).find(|w| w[0].date == w[1].date) {
            return Err(Error::Contract(format!(
                "duplicate date {} in series {} / {}",
                w[0].date, key.region, key.kind
            )));
        }
        let mut segment = 0;
        let mut current: Vec<RawRecord> = Vec::new();
        for r in rows {
            if let Some(last) = current.last() {
                if (r.date - last.date).num_days() > MAX_STEP_DAYS {
                    out.push(Series {
                        key: key.clone(),
                        segment,
                        rows: std::mem::take(&mut current),
                    });
                    segment += 1;
                }
            }
            current.push(r);
        }
        if !current.is_empty() {
            out.push(Series {
                key: key.clone(),
                segment,
                rows: current,
            });
        }
    }
    Ok(out)
}

/// A series encoded with a fitted [`FeatureSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedSeries {
    pub key: SeriesKey,
    pub segment: usize,
    pub dates: Vec<NaiveDate>,
    /// `len × F`
    pub features: Vec<Vec<f64>>,
    pub target_z: Vec<f64>,
    pub target_raw: Vec<f64>,
}

impl EncodedSeries {
    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }
}

pub fn encode_series(series: &Series, spec: &FeatureSpec) -> EncodedSeries {
    let target = spec.target_stats();
    EncodedSeries {
        key: series.key.clone(),
        segment: series.segment,
        dates: series.rows.iter().map(|r| r.date).collect(),
        features: spec.encode(&series.rows),
        target_z: series
            .rows
            .iter()
            .map(|r| target.standardize(r.average_price))
            .collect(),
        target_raw: series.rows.iter().map(|r| r.average_price).collect(),
    }
}

/// Total order used for chronological splitting: target date first, then
/// series identity and position to break ties deterministically.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct TimelineKey {
    pub date: NaiveDate,
    pub key: SeriesKey,
    pub segment: usize,
    pub position: usize,
}

pub trait Chronological {
    fn timeline_key(&self) -> TimelineKey;
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowedSample {
    /// `[F × L]`, column `t` is step `t` of the window.
    pub window: Tensor,
    /// Standardized price at the step after the window.
    pub target: f64,
    pub target_raw: f64,
    pub target_date: NaiveDate,
    pub key: SeriesKey,
    pub segment: usize,
    /// Index of the target row within its series.
    pub position: usize,
}

impl Chronological for WindowedSample {
    fn timeline_key(&self) -> TimelineKey {
        TimelineKey {
            date: self.target_date,
            key: self.key.clone(),
            segment: self.segment,
            position: self.position,
        }
    }
}

/// Target positions with `window` steps of history in a series of `len`.
pub fn window_positions(len: usize, window: usize) -> std::ops::Range<usize> {
    if len > window {
        window..len
    } else {
        0..0
    }
}

/// One sample per position with `window` history steps and a target step:
/// `len − window` samples, none when the series is too short.
pub fn make_windows(series: &EncodedSeries, window: usize) -> Vec<WindowedSample> {
    let positions = window_positions(series.len(), window);
    if positions.is_empty() {
        log::warn!(
            "series {} / {} (segment {}) has {} rows, needs at least {}; skipped",
            series.key.region,
            series.key.kind,
            series.segment,
            series.len(),
            window + 1
        );
        return Vec::new();
    }
    let f = series.features.first().map_or(0, Vec::len);
    positions
        .map(|pos| {
            let start = pos - window;
            let mut data = Vec::with_capacity(f * window);
            for feat in 0..f {
                data.extend((start..pos).map(|t| series.features[t][feat]));
            }
            WindowedSample {
                window: Tensor::new(vec![f, window], data)
                    .expect("encoded features are finite"),
                target: series.target_z[pos],
                target_raw: series.target_raw[pos],
                target_date: series.dates[pos],
                key: series.key.clone(),
                segment: series.segment,
                position: pos,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self {
            train: 0.70,
            val: 0.15,
            test: 0.15,
        }
    }
}

impl SplitRatios {
    pub fn validate(&self) -> Result<()> {
        let parts = [self.train, self.val, self.test];
        if parts.iter().any(|r| !r.is_finite() || *r < 0.0) {
            return Err(Error::Config("split ratios must be non-negative".into()));
        }
        let total: f64 = parts.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("split ratios sum to {total}, not 1")));
        }
        if self.train <= 0.0 {
            return Err(Error::Config("train ratio must be positive".into()));
        }
        Ok(())
    }

    /// `(train, val)` counts out of `n`; the test part takes the rest.
    pub fn counts(&self, n: usize) -> (usize, usize) {
        let part = |r: f64| ((n as f64) * r + 1e-9).floor() as usize;
        let train = part(self.train).min(n);
        let val = part(self.val).min(n - train);
        (train, val)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split<T> {
    pub train: Vec<T>,
    pub val: Vec<T>,
    pub test: Vec<T>,
}

/// Orders items by target time and cuts them into consecutive train, val
/// and test blocks. Nothing is shuffled across time.
pub fn split_chronological<T: Chronological>(mut items: Vec<T>, ratios: SplitRatios) -> Result<Split<T>> {
    ratios.validate()?;
    items.sort_by_cached_key(|s| s.timeline_key());
    let (n_train, n_val) = ratios.counts(items.len());
    let test = items.split_off(n_train + n_val);
    let val = items.split_off(n_train);
    Ok(Split {
        train: items,
        val,
        test,
    })
}
