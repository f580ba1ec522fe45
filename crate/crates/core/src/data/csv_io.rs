use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use chrono::{Datelike, NaiveDate};

use super::record::{AvocadoType, Column, RawRecord, RecordTable, SENTINEL};
use crate::error::{Error, Result};

/// Row count and per-column count of empty cells seen while loading.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadReport {
    pub rows: usize,
    pub null_counts: Vec<(String, usize)>,
}

impl LoadReport {
    pub fn total_nulls(&self) -> usize {
        self.null_counts.iter().map(|(_, n)| n).sum()
    }
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<(RecordTable, LoadReport)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file)
}

/// Parses a table with the record schema. Header names match
/// case-insensitively; unknown extra columns are ignored. Empty numeric
/// cells count as nulls and are stored as the sentinel so `clean` drops
/// the row.
pub fn read_csv<R: Read>(reader: R) -> Result<(RecordTable, LoadReport)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let headers = rdr.headers()?.clone();
    let mut index: HashMap<Column, usize> = HashMap::new();
    for (i, h) in headers.iter().enumerate() {
        if let Some(c) = Column::from_header(h) {
            index.entry(c).or_insert(i);
        }
    }
    for c in Column::ALL {
        if !index.contains_key(&c) {
            return Err(Error::Schema {
                column: c.header().to_string(),
            });
        }
    }

    let mut nulls: HashMap<Column, usize> = HashMap::new();
    let mut records = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let cell = |c: Column| row.get(index[&c]).unwrap_or("");
        let row_err = |message: String| Error::Row { line, message };

        let mut number = |c: Column| -> Result<f64> {
            let s = cell(c);
            if s.is_empty() {
                *nulls.entry(c).or_default() += 1;
                return Ok(SENTINEL);
            }
            let v: f64 = s
                .parse()
                .map_err(|_| row_err(format!("{}: cannot parse {s:?} as a number", c.header())))?;
            if !v.is_finite() {
                return Err(row_err(format!("{}: non-finite value {s:?}", c.header())));
            }
            Ok(v)
        };

        let average_price = number(Column::AveragePrice)?;
        let plu4046 = number(Column::Plu4046)?;
        let plu4225 = number(Column::Plu4225)?;
        let plu4770 = number(Column::Plu4770)?;
        let sales_volume = number(Column::SalesVolume)?;
        let weather = number(Column::Weather)?;
        let year_value = number(Column::Year)?;

        let date_text = cell(Column::Date);
        let date = NaiveDate::parse_from_str(date_text, "%Y-%m-%d")
            .map_err(|_| row_err(format!("Date: expected YYYY-MM-DD, got {date_text:?}")))?;
        let kind: AvocadoType = cell(Column::Type)
            .parse()
            .map_err(|e: String| row_err(format!("type: {e}")))?;
        let region = cell(Column::Region).to_string();
        if region.is_empty() {
            return Err(row_err("Region: empty".into()));
        }

        if year_value.fract() != 0.0 {
            return Err(row_err(format!("year: {year_value} is not an integer")));
        }
        let year = year_value as i32;
        if year_value != SENTINEL && year != date.year() {
            return Err(row_err(format!(
                "year {year} does not match date {date}"
            )));
        }

        records.push(RawRecord {
            date,
            average_price,
            kind,
            year,
            region,
            plu4046,
            plu4225,
            plu4770,
            sales_volume,
            weather,
        });
    }

    let report = LoadReport {
        rows: records.len(),
        null_counts: Column::ALL
            .iter()
            .map(|c| (c.header().to_string(), nulls.get(c).copied().unwrap_or(0)))
            .collect(),
    };
    Ok((RecordTable::new(records), report))
}

pub fn write_csv<W: Write>(writer: W, table: &RecordTable) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(Column::ALL.iter().map(|c| c.header()))?;
    for r in &table.records {
        w.write_record([
            r.date.format("%Y-%m-%d").to_string(),
            r.average_price.to_string(),
            r.kind.to_string(),
            r.year.to_string(),
            r.region.clone(),
            r.plu4046.to_string(),
            r.plu4225.to_string(),
            r.plu4770.to_string(),
            r.sales_volume.to_string(),
            r.weather.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

pub fn save_csv(path: impl AsRef<Path>, table: &RecordTable) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(file, table)
}
