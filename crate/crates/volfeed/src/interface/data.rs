//! Daily price CSV ingestion and log-return computation.
//!
//! Accepts FRED-style exports (`DATE,DJIA` with "." for missing values)
//! and generic `date,close` files with configurable column names and date
//! format. Missing or non-positive prices are dropped and counted;
//! calendar gaps (weekends, holidays) are treated as consecutive trading
//! days.

use chrono::NaiveDate;
use serde::Serialize;

use crate::error::{Error, Result};

/// Dated daily closing prices.
#[derive(Debug, Clone)]
pub struct PriceSeries {
    dates: Vec<NaiveDate>,
    closes: Vec<f64>,
    source_label: String,
}

impl PriceSeries {
    pub fn new(dates: Vec<NaiveDate>, closes: Vec<f64>, source_label: impl Into<String>) -> Result<Self> {
        if dates.len() != closes.len() {
            return Err(Error::Data("dates and closes must be the same length".into()));
        }
        if closes.iter().any(|c| !c.is_finite() || *c <= 0.0) {
            return Err(Error::Data("all closing prices must be finite and positive".into()));
        }
        for w in dates.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::Data(format!("dates must be strictly increasing: {} then {}", w[0], w[1])));
            }
        }
        Ok(Self { dates, closes, source_label: source_label.into() })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn closes(&self) -> &[f64] {
        &self.closes
    }

    pub fn source_label(&self) -> &str {
        &self.source_label
    }

    pub fn len(&self) -> usize {
        self.closes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.closes.is_empty()
    }
}

/// Column/format schema for a price CSV.
#[derive(Debug, Clone, Serialize)]
pub struct CsvSchema {
    pub date_column: String,
    pub price_column: String,
    pub date_format: String,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self {
            date_column: "DATE".into(),
            price_column: String::new(), // empty: first non-date column
            date_format: "%Y-%m-%d".into(),
        }
    }
}

/// Ingestion outcome: the series plus counts of what was dropped.
#[derive(Debug)]
pub struct LoadedPrices {
    pub series: PriceSeries,
    /// Rows with a missing or non-positive price field.
    pub dropped_rows: usize,
    /// Rows that failed to parse at all.
    pub skipped_rows: usize,
}

/// Load a daily price CSV. Rows with missing ("." or empty) or
/// non-positive prices are dropped with a count; duplicate dates are an
/// error; more than 1% unparseable rows is a hard error.
pub fn load_price_csv(path: &std::path::Path, schema: &CsvSchema) -> Result<LoadedPrices> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_path(path)?;
    let headers = reader.headers()?.clone();
    let date_idx = headers
        .iter()
        .position(|h| h.eq_ignore_ascii_case(&schema.date_column))
        .ok_or_else(|| Error::Data(format!("date column '{}' not found in {:?}", schema.date_column, headers)))?;
    let price_idx = if schema.price_column.is_empty() {
        (0..headers.len())
            .find(|i| *i != date_idx)
            .ok_or_else(|| Error::Data("no price column available".into()))?
    } else {
        headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(&schema.price_column))
            .ok_or_else(|| Error::Data(format!("price column '{}' not found in {:?}", schema.price_column, headers)))?
    };

    let mut dates = Vec::new();
    let mut closes = Vec::new();
    let mut dropped = 0usize;
    let mut skipped = 0usize;
    let mut total = 0usize;
    for record in reader.records() {
        total += 1;
        let record = match record {
            Ok(r) => r,
            Err(_) => {
                skipped += 1;
                continue;
            }
        };
        let date_str = record.get(date_idx).unwrap_or("");
        let date = match NaiveDate::parse_from_str(date_str, &schema.date_format) {
            Ok(d) => d,
            Err(_) => {
                skipped += 1;
                continue;
            }
        };
        let raw = record.get(price_idx).unwrap_or("").trim();
        if raw.is_empty() || raw == "." || raw.eq_ignore_ascii_case("na") || raw.eq_ignore_ascii_case("null") {
            dropped += 1;
            continue;
        }
        let price: f64 = match raw.replace(',', "").parse() {
            Ok(p) => p,
            Err(_) => {
                skipped += 1;
                continue;
            }
        };
        if !price.is_finite() || price <= 0.0 {
            dropped += 1;
            continue;
        }
        if let Some(last) = dates.last() {
            if date == *last {
                return Err(Error::Data(format!("duplicate date {date} in {}", path.display())));
            }
        }
        dates.push(date);
        closes.push(price);
    }
    if total > 0 && skipped as f64 > 0.01 * total as f64 {
        return Err(Error::Data(format!(
            "{skipped} of {total} rows unparseable (> 1%) in {}",
            path.display()
        )));
    }
    if skipped > 0 {
        eprintln!("warning: skipped {skipped} unparseable rows in {}", path.display());
    }
    if dropped > 0 {
        eprintln!("warning: dropped {dropped} rows with missing or non-positive prices in {}", path.display());
    }
    let label = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    // out-of-order (not merely duplicate) dates also surface here
    let series = PriceSeries::new(dates, closes, label)?;
    Ok(LoadedPrices { series, dropped_rows: dropped, skipped_rows: skipped })
}

/// Daily log returns `r_t = ln(p_{t+1}) - ln(p_t)`; length is one less
/// than the price series.
pub fn log_returns(prices: &PriceSeries) -> Result<Vec<f64>> {
    if prices.len() < 2 {
        return Err(Error::InsufficientData("log returns need at least 2 prices".into()));
    }
    Ok(prices.closes().windows(2).map(|w| (w[1] / w[0]).ln()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_csv(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn well_formed_three_rows() {
        let f = write_csv("DATE,DJIA\n2020-01-01,100\n2020-01-02,101\n2020-01-03,99.5\n");
        let loaded = load_price_csv(f.path(), &CsvSchema::default()).unwrap();
        assert_eq!(loaded.series.len(), 3);
        assert_eq!(loaded.dropped_rows, 0);
    }

    #[test]
    fn zero_price_dropped_with_count() {
        let f = write_csv("DATE,DJIA\n2020-01-01,100\n2020-01-02,0\n2020-01-03,99.5\n");
        let loaded = load_price_csv(f.path(), &CsvSchema::default()).unwrap();
        assert_eq!(loaded.series.len(), 2);
        assert_eq!(loaded.dropped_rows, 1);
    }

    #[test]
    fn fred_fixture_with_missing_values() {
        // 10 rows, 2 missing ('.') -> length 8
        let mut body = String::from("DATE,DJIA\n");
        for (i, v) in ["100", "101", ".", "103", "104", ".", "106", "107", "108", "109"].iter().enumerate() {
            body.push_str(&format!("2020-01-{:02},{v}\n", i + 1));
        }
        let f = write_csv(&body);
        let loaded = load_price_csv(f.path(), &CsvSchema::default()).unwrap();
        assert_eq!(loaded.series.len(), 8);
        assert_eq!(loaded.dropped_rows, 2);
    }

    #[test]
    fn duplicate_dates_are_an_error() {
        let f = write_csv("DATE,DJIA\n2020-01-01,100\n2020-01-01,101\n");
        assert!(load_price_csv(f.path(), &CsvSchema::default()).is_err());
    }

    #[test]
    fn custom_schema() {
        let f = write_csv("day,price\n01/02/2020,100\n02/02/2020,110\n");
        let schema = CsvSchema {
            date_column: "day".into(),
            price_column: "price".into(),
            date_format: "%d/%m/%Y".into(),
        };
        let loaded = load_price_csv(f.path(), &schema).unwrap();
        assert_eq!(loaded.series.len(), 2);
    }

    #[test]
    fn log_return_closed_forms() {
        let dates = vec![
            NaiveDate::from_ymd_opt(2020, 1, 1).unwrap(),
            NaiveDate::from_ymd_opt(2020, 1, 2).unwrap(),
        ];
        let p = PriceSeries::new(dates.clone(), vec![100.0, 100.0], "t").unwrap();
        assert_eq!(log_returns(&p).unwrap(), vec![0.0]);
        let p = PriceSeries::new(dates, vec![100.0, 110.0], "t").unwrap();
        let r = log_returns(&p).unwrap();
        assert!((r[0] - 1.1f64.ln()).abs() < 1e-12);
        assert!((r[0] - 0.09531).abs() < 1e-5);
    }

    #[test]
    fn log_returns_telescope() {
        let dates: Vec<NaiveDate> =
            (1..=20).map(|d| NaiveDate::from_ymd_opt(2020, 3, d).unwrap()).collect();
        let closes: Vec<f64> = (1..=20).map(|i| 100.0 + (i as f64 * 7.3).sin() * 5.0).collect();
        let p = PriceSeries::new(dates, closes.clone(), "t").unwrap();
        let sum: f64 = log_returns(&p).unwrap().iter().sum();
        assert!((sum - (closes.last().unwrap() / closes[0]).ln()).abs() < 1e-12);
    }
}
