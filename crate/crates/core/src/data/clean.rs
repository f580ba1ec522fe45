use super::record::RecordTable;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CleanReport {
    pub input_rows: usize,
    pub sentinel_dropped: usize,
    pub nonpositive_price_dropped: usize,
    pub kept: usize,
}

impl CleanReport {
    pub fn dropped(&self) -> usize {
        self.sentinel_dropped + self.nonpositive_price_dropped
    }
}

/// Drops rows carrying the `-99` placeholder in any numeric column, then
/// rows whose price is not positive.
pub fn clean(table: &RecordTable) -> Result<(RecordTable, CleanReport)> {
    let mut report = CleanReport {
        input_rows: table.len(),
        ..Default::default()
    };
    let mut kept = Vec::with_capacity(table.len());
    for r in &table.records {
        if r.has_sentinel() {
            report.sentinel_dropped += 1;
        } else if r.average_price <= 0.0 {
            report.nonpositive_price_dropped += 1;
        } else {
            kept.push(r.clone());
        }
    }
    report.kept = kept.len();
    if kept.is_empty() {
        return Err(Error::EmptyDataset(format!(
            "all {} rows were dropped by cleaning",
            table.len()
        )));
    }
    log::info!(
        "clean: kept {} of {} rows ({} sentinel, {} non-positive price)",
        report.kept,
        report.input_rows,
        report.sentinel_dropped,
        report.nonpositive_price_dropped
    );
    Ok((RecordTable::new(kept), report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::record::{AvocadoType, RawRecord, SENTINEL};
    use chrono::NaiveDate;

    fn row(week: i64) -> RawRecord {
        let date = NaiveDate::from_ymd_opt(2015, 1, 4).unwrap() + chrono::Duration::weeks(week);
        RawRecord {
            date,
            average_price: 1.0 + week as f64 * 0.01,
            kind: AvocadoType::Conventional,
            year: 2015,
            region: "A".into(),
            plu4046: 10.0,
            plu4225: 20.0,
            plu4770: 3.0,
            sales_volume: 40.0,
            weather: 0.5,
        }
    }

    #[test]
    fn sentinel_volume_row_is_dropped() {
        let mut r = row(0);
        r.sales_volume = SENTINEL;
        let t = RecordTable::new(vec![r, row(1)]);
        let (out, rep) = clean(&t).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(rep.sentinel_dropped, 1);
    }

    #[test]
    fn no_sentinels_is_noop() {
        let t = RecordTable::new((0..5).map(row).collect());
        let (out, rep) = clean(&t).unwrap();
        assert_eq!(out, t);
        assert_eq!(rep.dropped(), 0);
    }

    #[test]
    fn ten_rows_three_sentinels_leave_seven() {
        let mut rows: Vec<RawRecord> = (0..10).map(row).collect();
        rows[1].plu4046 = SENTINEL;
        rows[4].weather = SENTINEL;
        rows[8].average_price = SENTINEL;
        let (out, rep) = clean(&RecordTable::new(rows)).unwrap();
        assert_eq!(out.len(), 7);
        assert_eq!(rep.sentinel_dropped, 3);
    }

    #[test]
    fn nonpositive_price_is_dropped() {
        let mut r = row(0);
        r.average_price = 0.0;
        let (out, rep) = clean(&RecordTable::new(vec![r, row(1)])).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(rep.nonpositive_price_dropped, 1);
    }

    #[test]
    fn all_dropped_is_error() {
        let mut r = row(0);
        r.year = SENTINEL as i32;
        assert!(matches!(
            clean(&RecordTable::new(vec![r])),
            Err(Error::EmptyDataset(_))
        ));
    }

    #[test]
    fn idempotent() {
        let mut rows: Vec<RawRecord> = (0..6).map(row).collect();
        rows[2].plu4770 = SENTINEL;
        let (once, _) = clean(&RecordTable::new(rows)).unwrap();
        let (twice, rep) = clean(&once).unwrap();
        assert_eq!(once, twice);
        assert_eq!(rep.dropped(), 0);
    }
}
