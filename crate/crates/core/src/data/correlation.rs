use std::io::Write;
use std::path::Path;

use super::record::{Column, RecordTable};
use crate::error::{Error, Result};

/// Columns shown by default: the date ordinal and every numeric column.
pub const DEFAULT_CORRELATION_COLUMNS: [Column; 8] = [
    Column::Date,
    Column::AveragePrice,
    Column::Plu4046,
    Column::Plu4225,
    Column::Plu4770,
    Column::SalesVolume,
    Column::Weather,
    Column::Year,
];

/// Pairwise Pearson correlations. `None` marks entries involving a
/// zero-variance column.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub labels: Vec<String>,
    pub values: Vec<Vec<Option<f64>>>,
}

impl CorrelationMatrix {
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.values[i][j]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Square labeled CSV; undefined entries are written as `NA`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec![String::new()];
        header.extend(self.labels.iter().cloned());
        w.write_record(&header)?;
        for (label, row) in self.labels.iter().zip(&self.values) {
            let mut rec = vec![label.clone()];
            rec.extend(row.iter().map(|v| match v {
                Some(x) => x.to_string(),
                None => "NA".into(),
            }));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(file)
    }
}

pub fn correlation_matrix(table: &RecordTable, columns: &[Column]) -> Result<CorrelationMatrix> {
    if table.len() < 2 {
        return Err(Error::EmptyDataset(format!(
            "correlation needs at least 2 rows, got {}",
            table.len()
        )));
    }
    let mut series = Vec::with_capacity(columns.len());
    for &c in columns {
        let values: Option<Vec<f64>> = table
            .records
            .iter()
            .map(|r| c.correlation_value(r))
            .collect();
        let values = values.ok_or_else(|| {
            Error::Config(format!("column {} is not numeric", c.header()))
        })?;
        series.push(center(values));
    }

    let k = columns.len();
    let mut values = vec![vec![None; k]; k];
    for i in 0..k {
        for j in i..k {
            let r = match (&series[i], &series[j]) {
                (Some((a, na)), Some((b, nb))) => {
                    if i == j {
                        Some(1.0)
                    } else {
                        let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                        Some((dot / (na * nb)).clamp(-1.0, 1.0))
                    }
                }
                _ => None,
            };
            values[i][j] = r;
            values[j][i] = r;
        }
    }
    Ok(CorrelationMatrix {
        labels: columns.iter().map(|c| c.header().to_string()).collect(),
        values,
    })
}

// Mean-centred values and their Euclidean norm; None for zero variance.
fn center(values: Vec<f64>) -> Option<(Vec<f64>, f64)> {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let centred: Vec<f64> = values.into_iter().map(|v| v - mean).collect();
    let norm = centred.iter().map(|v| v * v).sum::<f64>().sqrt();
    (norm > 0.0).then_some((centred, norm))
}
