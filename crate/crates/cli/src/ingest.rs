//! CSV ingestion: hourly price and solar files, daily inflow, and head tables.
//!
//! Schemas (header row required):
//!
//! | file   | header                         |
//! |--------|--------------------------------|
//! | price  | `timestamp,usd_per_mwh`        |
//! | solar  | `timestamp,capacity_factor`    |
//! | inflow | `date,m3_per_day`              |
//! | head   | `volume_m3,head_m`             |
//!
//! Timestamps are plain local-standard ISO-8601 hours; no DST handling.

use chrono::{Datelike, Duration, NaiveDate, NaiveDateTime};
use hydro_fpv::{ExogenousSeries, StepRange};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IngestError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{path}: expected header `{expected}`, found `{found}`")]
    Schema {
        path: String,
        expected: String,
        found: String,
    },
    #[error("{path}:{line}: missing value in column `{column}`")]
    MissingValue {
        path: String,
        line: u64,
        column: String,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: u64,
        message: String,
    },
    #[error("{path}:{line}: gap in series, missing {expected}")]
    Gap {
        path: String,
        line: u64,
        expected: String,
    },
    #[error("{path}:{line}: {message}")]
    Range {
        path: String,
        line: u64,
        message: String,
    },
    #[error("{0}")]
    Mismatch(String),
}

const TIMESTAMP_FORMATS: [&str; 4] = [
    "%Y-%m-%dT%H:%M:%S",
    "%Y-%m-%dT%H:%M",
    "%Y-%m-%d %H:%M:%S",
    "%Y-%m-%d %H:%M",
];

pub fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    TIMESTAMP_FORMATS
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
}

pub fn format_timestamp(ts: NaiveDateTime) -> String {
    ts.format("%Y-%m-%dT%H:%M:%S").to_string()
}

/// One parsed row: line number, key column, value.
struct Row {
    line: u64,
    key: String,
    value: f64,
}

fn read_two_columns(path: &Path, header: [&str; 2]) -> Result<Vec<Row>, IngestError> {
    let name = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)
        .map_err(|e| IngestError::Io {
            path: name.clone(),
            message: e.to_string(),
        })?;
    let found = reader
        .headers()
        .map_err(|e| IngestError::Io {
            path: name.clone(),
            message: e.to_string(),
        })?
        .iter()
        .collect::<Vec<_>>()
        .join(",");
    if found != header.join(",") {
        return Err(IngestError::Schema {
            path: name,
            expected: header.join(","),
            found,
        });
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| IngestError::Parse {
            path: name.clone(),
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize| -> Result<&str, IngestError> {
            match record.get(i) {
                Some(v) if !v.is_empty() => Ok(v),
                _ => Err(IngestError::MissingValue {
                    path: name.clone(),
                    line,
                    column: header[i].to_string(),
                }),
            }
        };
        let key = field(0)?.to_string();
        let raw = field(1)?;
        let value: f64 = raw.parse().map_err(|_| IngestError::Parse {
            path: name.clone(),
            line,
            message: format!("`{raw}` is not a number"),
        })?;
        if !value.is_finite() {
            return Err(IngestError::Range {
                path: name.clone(),
                line,
                message: format!("`{raw}` is not finite"),
            });
        }
        if record.len() > 2 {
            return Err(IngestError::Parse {
                path: name.clone(),
                line,
                message: format!("expected 2 columns, found {}", record.len()),
            });
        }
        rows.push(Row { line, key, value });
    }
    Ok(rows)
}

/// An hourly series with its timestamps.
#[derive(Debug, Clone, PartialEq)]
pub struct Hourly {
    pub start: NaiveDateTime,
    pub values: Vec<f64>,
}

impl Hourly {
    pub fn timestamp(&self, t: usize) -> NaiveDateTime {
        self.start + Duration::hours(t as i64)
    }
}

fn read_hourly(path: &Path, value_column: &str) -> Result<Hourly, IngestError> {
    let name = path.display().to_string();
    let rows = read_two_columns(path, ["timestamp", value_column])?;
    let Some(first) = rows.first() else {
        return Err(IngestError::Mismatch(format!("{name}: no data rows")));
    };
    let parse = |row: &Row| {
        parse_timestamp(&row.key).ok_or_else(|| IngestError::Parse {
            path: name.clone(),
            line: row.line,
            message: format!("`{}` is not an ISO-8601 timestamp", row.key),
        })
    };
    let start = parse(first)?;
    let mut values = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        let ts = parse(row)?;
        let expected = start + Duration::hours(i as i64);
        if ts > expected {
            return Err(IngestError::Gap {
                path: name.clone(),
                line: row.line,
                expected: format_timestamp(expected),
            });
        }
        if ts < expected {
            return Err(IngestError::Parse {
                path: name.clone(),
                line: row.line,
                message: format!("timestamp {} is duplicated or out of order", row.key),
            });
        }
        values.push(row.value);
    }
    Ok(Hourly { start, values })
}

pub fn read_price(path: &Path) -> Result<Hourly, IngestError> {
    let h = read_hourly(path, "usd_per_mwh")?;
    if let Some(t) = h.values.iter().position(|x| *x < 0.0) {
        return Err(IngestError::Range {
            path: path.display().to_string(),
            line: t as u64 + 2,
            message: format!("negative price {} is not supported", h.values[t]),
        });
    }
    Ok(h)
}

pub fn read_solar(path: &Path) -> Result<Hourly, IngestError> {
    let h = read_hourly(path, "capacity_factor")?;
    if let Some(t) = h.values.iter().position(|x| !(0.0..=1.0).contains(x)) {
        return Err(IngestError::Range {
            path: path.display().to_string(),
            line: t as u64 + 2,
            message: format!("capacity factor {} outside [0, 1]", h.values[t]),
        });
    }
    Ok(h)
}

/// Daily inflow volumes keyed by date.
#[derive(Debug, Clone, PartialEq)]
pub struct Daily {
    pub start: NaiveDate,
    pub values: Vec<f64>,
}

pub fn read_inflow(path: &Path) -> Result<Daily, IngestError> {
    let name = path.display().to_string();
    let rows = read_two_columns(path, ["date", "m3_per_day"])?;
    let Some(first) = rows.first() else {
        return Err(IngestError::Mismatch(format!("{name}: no data rows")));
    };
    let parse = |row: &Row| {
        NaiveDate::parse_from_str(&row.key, "%Y-%m-%d").map_err(|_| IngestError::Parse {
            path: name.clone(),
            line: row.line,
            message: format!("`{}` is not a YYYY-MM-DD date", row.key),
        })
    };
    let start = parse(first)?;
    let mut values = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        let d = parse(row)?;
        let expected = start + Duration::days(i as i64);
        if d > expected {
            return Err(IngestError::Gap {
                path: name.clone(),
                line: row.line,
                expected: expected.format("%Y-%m-%d").to_string(),
            });
        }
        if d < expected {
            return Err(IngestError::Parse {
                path: name.clone(),
                line: row.line,
                message: format!("date {} is duplicated or out of order", row.key),
            });
        }
        if row.value < 0.0 {
            return Err(IngestError::Range {
                path: name.clone(),
                line: row.line,
                message: format!("negative inflow {}", row.value),
            });
        }
        values.push(row.value);
    }
    Ok(Daily { start, values })
}

pub fn read_head_table(path: &Path) -> Result<Vec<(f64, f64)>, IngestError> {
    read_two_columns(path, ["volume_m3", "head_m"])?
        .into_iter()
        .map(|r| match r.key.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok((v, r.value)),
            _ => Err(IngestError::Parse {
                path: path.display().to_string(),
                line: r.line,
                message: format!("`{}` is not a number", r.key),
            }),
        })
        .collect()
}

/// Aligned hourly inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub start: NaiveDateTime,
    pub series: ExogenousSeries,
}

impl Dataset {
    pub fn timestamp(&self, t: usize) -> NaiveDateTime {
        self.start + Duration::hours(t as i64)
    }

    /// Consecutive calendar-month spans of the horizon, with `YYYY-MM` labels.
    pub fn calendar_months(&self) -> Vec<(String, StepRange)> {
        let mut out: Vec<(String, StepRange)> = Vec::new();
        for t in 0..self.series.len() {
            let ts = self.timestamp(t);
            let label = format!("{:04}-{:02}", ts.year(), ts.month());
            match out.last_mut() {
                Some((l, span)) if *l == label => span.end = t + 1,
                _ => out.push((label, StepRange::new(t, t + 1))),
            }
        }
        out
    }
}

/// Joins price, solar and inflow; each day's inflow is spread evenly over its 24 hours.
pub fn align(price: Hourly, solar: Hourly, inflow: Daily) -> Result<Dataset, IngestError> {
    if price.values.len() != solar.values.len() {
        return Err(IngestError::Mismatch(format!(
            "price has {} hours but solar has {}",
            price.values.len(),
            solar.values.len()
        )));
    }
    if price.start != solar.start {
        return Err(IngestError::Mismatch(format!(
            "price starts at {} but solar starts at {}",
            format_timestamp(price.start),
            format_timestamp(solar.start)
        )));
    }
    if price.start.time() != chrono::NaiveTime::MIN {
        return Err(IngestError::Mismatch(format!(
            "hourly series must start at midnight, got {}",
            format_timestamp(price.start)
        )));
    }
    if !price.values.len().is_multiple_of(24) {
        return Err(IngestError::Mismatch(format!(
            "hourly series must cover whole days, got {} hours",
            price.values.len()
        )));
    }
    let days = price.values.len() / 24;
    if inflow.start != price.start.date() || inflow.values.len() != days {
        return Err(IngestError::Mismatch(format!(
            "inflow must cover {days} days from {}, got {} days from {}",
            price.start.date(),
            inflow.values.len(),
            inflow.start
        )));
    }
    let hourly_inflow = inflow
        .values
        .iter()
        .flat_map(|d| std::iter::repeat_n(d / 24.0, 24))
        .collect();
    let series = ExogenousSeries::new(price.values, solar.values, hourly_inflow)
        .map_err(|e| IngestError::Mismatch(e.to_string()))?;
    Ok(Dataset {
        start: price.start,
        series,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn file(dir: &tempfile::TempDir, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        std::fs::File::create(&p)
            .unwrap()
            .write_all(body.as_bytes())
            .unwrap();
        p
    }

    fn hourly_body(header: &str, hours: usize, value: impl Fn(usize) -> String) -> String {
        let start = parse_timestamp("2023-03-01T00:00").unwrap();
        let mut s = format!("timestamp,{header}\n");
        for t in 0..hours {
            s += &format!(
                "{},{}\n",
                format_timestamp(start + Duration::hours(t as i64)),
                value(t)
            );
        }
        s
    }

    #[test]
    fn two_days_disaggregate_uniformly() {
        let dir = tempfile::tempdir().unwrap();
        let price = file(
            &dir,
            "p.csv",
            &hourly_body("usd_per_mwh", 48, |t| format!("{}", 30 + t)),
        );
        let solar = file(
            &dir,
            "s.csv",
            &hourly_body("capacity_factor", 48, |_| "0.5".into()),
        );
        let inflow = file(
            &dir,
            "i.csv",
            "date,m3_per_day\n2023-03-01,2400\n2023-03-02,4800\n",
        );
        let ds = align(
            read_price(&price).unwrap(),
            read_solar(&solar).unwrap(),
            read_inflow(&inflow).unwrap(),
        )
        .unwrap();
        assert_eq!(ds.series.len(), 48);
        assert!(ds.series.inflow[..24].iter().all(|x| *x == 100.0));
        assert!(ds.series.inflow[24..].iter().all(|x| *x == 200.0));
        assert_eq!(
            ds.calendar_months(),
            vec![("2023-03".to_string(), StepRange::new(0, 48))]
        );
    }

    #[test]
    fn missing_hour_names_timestamp() {
        let dir = tempfile::tempdir().unwrap();
        let mut body = hourly_body("usd_per_mwh", 6, |_| "40".into());
        body = body.replace("2023-03-01T03:00:00,40\n", "");
        let price = file(&dir, "p.csv", &body);
        let err = read_price(&price).unwrap_err();
        assert!(
            matches!(&err, IngestError::Gap { expected, line: 5, .. } if expected == "2023-03-01T03:00:00"),
            "{err}"
        );
    }

    #[test]
    fn capacity_factor_out_of_range() {
        let dir = tempfile::tempdir().unwrap();
        let solar = file(
            &dir,
            "s.csv",
            &hourly_body("capacity_factor", 4, |t| {
                if t == 2 {
                    "1.2".into()
                } else {
                    "0.4".into()
                }
            }),
        );
        assert!(matches!(
            read_solar(&solar),
            Err(IngestError::Range { line: 4, .. })
        ));
    }

    #[test]
    fn missing_value_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let price = file(
            &dir,
            "p.csv",
            "timestamp,usd_per_mwh\n2023-03-01T00:00,40\n2023-03-01T01:00,\n",
        );
        assert!(matches!(
            read_price(&price),
            Err(IngestError::MissingValue { line: 3, .. })
        ));
    }

    #[test]
    fn header_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let price = file(&dir, "p.csv", "time,price\n2023-03-01T00:00,40\n");
        assert!(matches!(
            read_price(&price),
            Err(IngestError::Schema { .. })
        ));
    }

    #[test]
    fn length_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let price = file(
            &dir,
            "p.csv",
            &hourly_body("usd_per_mwh", 48, |_| "40".into()),
        );
        let solar = file(
            &dir,
            "s.csv",
            &hourly_body("capacity_factor", 24, |_| "0.5".into()),
        );
        let inflow = file(
            &dir,
            "i.csv",
            "date,m3_per_day\n2023-03-01,2400\n2023-03-02,4800\n",
        );
        let err = align(
            read_price(&price).unwrap(),
            read_solar(&solar).unwrap(),
            read_inflow(&inflow).unwrap(),
        );
        assert!(matches!(err, Err(IngestError::Mismatch(_))));

        let solar = file(
            &dir,
            "s2.csv",
            &hourly_body("capacity_factor", 48, |_| "0.5".into()),
        );
        let short = file(&dir, "i2.csv", "date,m3_per_day\n2023-03-01,2400\n");
        let err = align(
            read_price(&price).unwrap(),
            read_solar(&solar).unwrap(),
            read_inflow(&short).unwrap(),
        );
        assert!(matches!(err, Err(IngestError::Mismatch(_))));
    }

    #[test]
    fn inflow_gap() {
        let dir = tempfile::tempdir().unwrap();
        let inflow = file(
            &dir,
            "i.csv",
            "date,m3_per_day\n2023-03-01,2400\n2023-03-03,4800\n",
        );
        assert!(
            matches!(read_inflow(&inflow), Err(IngestError::Gap { expected, .. }) if expected == "2023-03-02")
        );
    }

    #[test]
    fn calendar_months_split() {
        let ds = Dataset {
            start: parse_timestamp("2023-01-31T00:00").unwrap(),
            series: ExogenousSeries::new(vec![1.0; 48], vec![0.0; 48], vec![0.0; 48]).unwrap(),
        };
        let months = ds.calendar_months();
        assert_eq!(months.len(), 2);
        assert_eq!(months[0], ("2023-01".into(), StepRange::new(0, 24)));
        assert_eq!(months[1], ("2023-02".into(), StepRange::new(24, 48)));
    }
}
