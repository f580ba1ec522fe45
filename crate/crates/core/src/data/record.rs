use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

/// Placeholder the source data uses for a missing value.
pub const SENTINEL: f64 = -99.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AvocadoType {
    Conventional,
    Organic,
}

impl AvocadoType {
    pub fn as_str(self) -> &'static str {
        match self {
            AvocadoType::Conventional => "conventional",
            AvocadoType::Organic => "organic",
        }
    }
}

impl fmt::Display for AvocadoType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AvocadoType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "conventional" => Ok(AvocadoType::Conventional),
            "organic" => Ok(AvocadoType::Organic),
            other => Err(format!("unknown type {other:?}")),
        }
    }
}

/// One weekly observation for a (region, type) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawRecord {
    pub date: NaiveDate,
    pub average_price: f64,
    pub kind: AvocadoType,
    pub year: i32,
    pub region: String,
    pub plu4046: f64,
    pub plu4225: f64,
    pub plu4770: f64,
    pub sales_volume: f64,
    /// Unitless meteorological index.
    pub weather: f64,
}

impl RawRecord {
    pub fn numeric(&self, col: NumericColumn) -> f64 {
        match col {
            NumericColumn::AveragePrice => self.average_price,
            NumericColumn::Plu4046 => self.plu4046,
            NumericColumn::Plu4225 => self.plu4225,
            NumericColumn::Plu4770 => self.plu4770,
            NumericColumn::SalesVolume => self.sales_volume,
            NumericColumn::Weather => self.weather,
            NumericColumn::Year => self.year as f64,
        }
    }

    pub fn has_sentinel(&self) -> bool {
        NumericColumn::ALL.iter().any(|&c| self.numeric(c) == SENTINEL)
    }

    pub fn date_ordinal(&self) -> f64 {
        self.date.num_days_from_ce() as f64
    }

    pub fn year_matches_date(&self) -> bool {
        self.year == self.date.year()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RecordTable {
    pub records: Vec<RawRecord>,
}

impl RecordTable {
    pub fn new(records: Vec<RawRecord>) -> Self {
        Self { records }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Numeric columns of the record schema.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NumericColumn {
    AveragePrice,
    Plu4046,
    Plu4225,
    Plu4770,
    SalesVolume,
    Weather,
    Year,
}

impl NumericColumn {
    pub const ALL: [NumericColumn; 7] = [
        NumericColumn::AveragePrice,
        NumericColumn::Plu4046,
        NumericColumn::Plu4225,
        NumericColumn::Plu4770,
        NumericColumn::SalesVolume,
        NumericColumn::Weather,
        NumericColumn::Year,
    ];

    /// Columns standardized into model inputs. Year is left out: it is a
    /// step function of the date and is often constant over a training span.
    pub const FEATURES: [NumericColumn; 6] = [
        NumericColumn::AveragePrice,
        NumericColumn::Plu4046,
        NumericColumn::Plu4225,
        NumericColumn::Plu4770,
        NumericColumn::SalesVolume,
        NumericColumn::Weather,
    ];

    pub fn header(self) -> &'static str {
        match self {
            NumericColumn::AveragePrice => "AveragePrice",
            NumericColumn::Plu4046 => "4046",
            NumericColumn::Plu4225 => "4225",
            NumericColumn::Plu4770 => "4770",
            NumericColumn::SalesVolume => "Salesvolume",
            NumericColumn::Weather => "weather",
            NumericColumn::Year => "year",
        }
    }
}

/// Every column of the input table, in canonical header order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Column {
    Date,
    AveragePrice,
    Type,
    Year,
    Region,
    Plu4046,
    Plu4225,
    Plu4770,
    SalesVolume,
    Weather,
}

impl Column {
    pub const ALL: [Column; 10] = [
        Column::Date,
        Column::AveragePrice,
        Column::Type,
        Column::Year,
        Column::Region,
        Column::Plu4046,
        Column::Plu4225,
        Column::Plu4770,
        Column::SalesVolume,
        Column::Weather,
    ];

    pub fn header(self) -> &'static str {
        match self {
            Column::Date => "Date",
            Column::Type => "type",
            Column::Region => "Region",
            other => other.as_numeric().map(NumericColumn::header).unwrap_or(""),
        }
    }

    pub fn from_header(name: &str) -> Option<Column> {
        let name = name.trim();
        Column::ALL
            .into_iter()
            .find(|c| c.header().eq_ignore_ascii_case(name))
    }

    pub fn as_numeric(self) -> Option<NumericColumn> {
        match self {
            Column::AveragePrice => Some(NumericColumn::AveragePrice),
            Column::Year => Some(NumericColumn::Year),
            Column::Plu4046 => Some(NumericColumn::Plu4046),
            Column::Plu4225 => Some(NumericColumn::Plu4225),
            Column::Plu4770 => Some(NumericColumn::Plu4770),
            Column::SalesVolume => Some(NumericColumn::SalesVolume),
            Column::Weather => Some(NumericColumn::Weather),
            Column::Date | Column::Type | Column::Region => None,
        }
    }

    /// Value used for correlation: the day ordinal for dates, the raw value
    /// for numeric columns, nothing for categorical ones.
    pub fn correlation_value(self, rec: &RawRecord) -> Option<f64> {
        match self {
            Column::Date => Some(rec.date_ordinal()),
            c => c.as_numeric().map(|n| rec.numeric(n)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn headers_round_trip_case_insensitively() {
        for c in Column::ALL {
            assert_eq!(Column::from_header(c.header()), Some(c));
            assert_eq!(Column::from_header(&c.header().to_uppercase()), Some(c));
        }
        assert_eq!(Column::from_header("Total Bags"), None);
    }

    #[test]
    fn type_parses_loosely() {
        assert_eq!(" Organic ".parse::<AvocadoType>(), Ok(AvocadoType::Organic));
        assert!("hass".parse::<AvocadoType>().is_err());
    }
}
