//! Z-score standardization of numeric columns and one-hot encoding of
//! type and region, fitted on training rows only.

use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use super::record::{AvocadoType, NumericColumn, RawRecord};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub column: NumericColumn,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
}

impl ColumnStats {
    pub fn standardize(&self, v: f64) -> f64 {
        (v - self.mean) / self.std
    }

    pub fn destandardize(&self, z: f64) -> f64 {
        z * self.std + self.mean
    }
}

/// Frozen encoding. Feature order: numeric columns, then type one-hot,
/// then region one-hot, both vocabularies sorted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub numeric: Vec<ColumnStats>,
    pub types: Vec<AvocadoType>,
    pub regions: Vec<String>,
}

/// Population mean and standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub fn fit_feature_spec<'a, I>(train_rows: I) -> Result<FeatureSpec>
where
    I: IntoIterator<Item = &'a RawRecord>,
{
    let rows: Vec<&RawRecord> = train_rows.into_iter().collect();
    if rows.is_empty() {
        return Err(Error::EmptyDataset("no training rows to fit features on".into()));
    }
    let mut numeric = Vec::with_capacity(NumericColumn::FEATURES.len());
    for col in NumericColumn::FEATURES {
        let values: Vec<f64> = rows.iter().map(|r| r.numeric(col)).collect();
        let (mean, std) = mean_std(&values);
        if std.is_nan() || std <= 0.0 {
            return Err(Error::ConstantColumn {
                column: col.header().to_string(),
            });
        }
        numeric.push(ColumnStats { column: col, mean, std });
    }
    let types: BTreeSet<AvocadoType> = rows.iter().map(|r| r.kind).collect();
    let regions: BTreeSet<&str> = rows.iter().map(|r| r.region.as_str()).collect();
    Ok(FeatureSpec {
        numeric,
        types: types.into_iter().collect(),
        regions: regions.into_iter().map(str::to_string).collect(),
    })
}

impl FeatureSpec {
    pub fn dim(&self) -> usize {
        self.numeric.len() + self.types.len() + self.regions.len()
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.numeric
            .iter()
            .map(|s| s.column.header().to_string())
            .chain(self.types.iter().map(|t| format!("type={t}")))
            .chain(self.regions.iter().map(|r| format!("Region={r}")))
            .collect()
    }

    pub fn stats(&self, col: NumericColumn) -> Option<&ColumnStats> {
        self.numeric.iter().find(|s| s.column == col)
    }

    pub fn target_stats(&self) -> &ColumnStats {
        self.stats(NumericColumn::AveragePrice)
            .expect("price is always a feature column")
    }

    /// Encodes one row. The flag is true when its type or region is not in
    /// the vocabulary; that one-hot block is then all zeros.
    pub fn encode_row(&self, rec: &RawRecord) -> (Vec<f64>, bool) {
        let mut out = Vec::with_capacity(self.dim());
        out.extend(self.numeric.iter().map(|s| s.standardize(rec.numeric(s.column))));
        let mut unseen = false;
        let ti = self.types.iter().position(|&t| t == rec.kind);
        unseen |= ti.is_none();
        out.extend((0..self.types.len()).map(|i| if Some(i) == ti { 1.0 } else { 0.0 }));
        let ri = self.regions.iter().position(|r| *r == rec.region);
        unseen |= ri.is_none();
        out.extend((0..self.regions.len()).map(|i| if Some(i) == ri { 1.0 } else { 0.0 }));
        (out, unseen)
    }

    /// Encodes rows into a `rows × dim` matrix, warning once per unseen
    /// category.
    pub fn encode<'a, I>(&self, rows: I) -> Vec<Vec<f64>>
    where
        I: IntoIterator<Item = &'a RawRecord>,
    {
        let mut warned: HashSet<(String, AvocadoType)> = HashSet::new();
        rows.into_iter()
            .map(|r| {
                let (v, unseen) = self.encode_row(r);
                if unseen && warned.insert((r.region.clone(), r.kind)) {
                    log::warn!(
                        "category not seen in training (region {:?}, type {}); one-hot left at zero",
                        r.region,
                        r.kind
                    );
                }
                v
            })
            .collect()
    }

    /// Inverse of the numeric part of [`encode_row`](Self::encode_row).
    pub fn decode_numeric(&self, encoded: &[f64]) -> Vec<(NumericColumn, f64)> {
        self.numeric
            .iter()
            .zip(encoded)
            .map(|(s, &z)| (s.column, s.destandardize(z)))
            .collect()
    }
}
