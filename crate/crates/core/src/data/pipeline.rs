use std::collections::BTreeSet;

use super::features::{fit_feature_spec, FeatureSpec};
use super::record::{RawRecord, RecordTable};
use super::windows::{
    encode_series, group_series, make_windows, split_chronological, window_positions,
    Chronological, Series, Split, SplitRatios, TimelineKey, WindowedSample,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct PreparedData {
    pub spec: FeatureSpec,
    pub train: Vec<WindowedSample>,
    pub val: Vec<WindowedSample>,
    pub test: Vec<WindowedSample>,
}

// Window location before any encoding, so the split can be decided first.
struct WindowRef {
    series: usize,
    timeline: TimelineKey,
}

impl Chronological for WindowRef {
    fn timeline_key(&self) -> TimelineKey {
        self.timeline.clone()
    }
}

fn window_refs(series: &[Series], window: usize) -> Vec<WindowRef> {
    series
        .iter()
        .enumerate()
        .flat_map(|(si, s)| {
            window_positions(s.rows.len(), window).map(move |pos| WindowRef {
                series: si,
                timeline: TimelineKey {
                    date: s.rows[pos].date,
                    key: s.key.clone(),
                    segment: s.segment,
                    position: pos,
                },
            })
        })
        .collect()
}

/// Rows touched by training windows (history and target), in series order.
pub fn training_rows(table: &RecordTable, window: usize, ratios: SplitRatios) -> Result<Vec<RawRecord>> {
    let series = group_series(table)?;
    let split = split_chronological(window_refs(&series, window), ratios)?;
    if split.train.is_empty() {
        return Err(Error::EmptyDataset(format!(
            "no training windows of length {window} could be formed"
        )));
    }
    let used: BTreeSet<(usize, usize)> = split
        .train
        .iter()
        .flat_map(|w| {
            let pos = w.timeline.position;
            (pos - window..=pos).map(move |r| (w.series, r))
        })
        .collect();
    Ok(used
        .into_iter()
        .map(|(s, r)| series[s].rows[r].clone())
        .collect())
}

/// Fits the feature encoding on training rows only, then windows and
/// splits the whole table.
pub fn prepare(table: &RecordTable, window: usize, ratios: SplitRatios) -> Result<PreparedData> {
    let rows = training_rows(table, window, ratios)?;
    let spec = fit_feature_spec(&rows)?;
    prepare_with_spec(table, spec, window, ratios)
}

/// Windows and splits `table` with an already-fitted encoding.
pub fn prepare_with_spec(
    table: &RecordTable,
    spec: FeatureSpec,
    window: usize,
    ratios: SplitRatios,
) -> Result<PreparedData> {
    let samples: Vec<WindowedSample> = group_series(table)?
        .iter()
        .flat_map(|s| make_windows(&encode_series(s, &spec), window))
        .collect();
    let Split { train, val, test } = split_chronological(samples, ratios)?;
    log::info!(
        "windows: {} train, {} val, {} test (L = {window}, F = {})",
        train.len(),
        val.len(),
        test.len(),
        spec.dim()
    );
    Ok(PreparedData {
        spec,
        train,
        val,
        test,
    })
}
