//! Output files. Everything a command produces is rendered in memory first and then
//! written with temp-file-and-rename, so a failing command leaves no partial files.

use hydro_fpv::{DispatchRecord, ExogenousSeries};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

use crate::error::CliError;
use crate::ingest::{format_timestamp, Dataset};

pub const TRAJECTORY_HEADER: [&str; 11] = [
    "t",
    "timestamp",
    "lambda",
    "alpha",
    "inflow",
    "s",
    "h",
    "u",
    "v",
    "theta_hat",
    "revenue",
];

/// One row of a trajectory CSV. Floats are written in shortest round-trip form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub t: usize,
    pub timestamp: String,
    pub lambda: f64,
    pub alpha: f64,
    pub inflow: f64,
    pub s: f64,
    pub h: f64,
    pub u: f64,
    pub v: f64,
    pub theta_hat: f64,
    pub revenue: f64,
}

impl TrajectoryRow {
    pub fn new(rec: &DispatchRecord, dataset: &Dataset) -> Self {
        Self::from_series(
            rec,
            &dataset.series,
            format_timestamp(dataset.timestamp(rec.t)),
        )
    }

    pub fn from_series(rec: &DispatchRecord, series: &ExogenousSeries, timestamp: String) -> Self {
        Self {
            t: rec.t,
            timestamp,
            lambda: series.lambda[rec.t],
            alpha: series.alpha[rec.t],
            inflow: series.inflow[rec.t],
            s: rec.s,
            h: rec.h,
            u: rec.u,
            v: rec.v,
            theta_hat: rec.theta_hat,
            revenue: rec.revenue,
        }
    }

    pub fn record(&self) -> DispatchRecord {
        DispatchRecord {
            t: self.t,
            s: self.s,
            h: self.h,
            u: self.u,
            v: self.v,
            theta_hat: self.theta_hat,
            revenue: self.revenue,
        }
    }
}

pub fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| CliError::Output {
            path: "<csv>".into(),
            source: std::io::Error::other(e),
        })?;
    }
    w.into_inner().map_err(|e| CliError::Output {
        path: "<csv>".into(),
        source: std::io::Error::other(e.to_string()),
    })
}

pub fn trajectory_csv(rows: &[TrajectoryRow]) -> Result<Vec<u8>, CliError> {
    csv_bytes(rows)
}

pub fn read_trajectory_csv(bytes: &[u8]) -> Result<Vec<TrajectoryRow>, csv::Error> {
    let mut r = csv::Reader::from_reader(bytes);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != TRAJECTORY_HEADER {
        return Err(csv::Error::from(std::io::Error::new(
            std::io::ErrorKind::InvalidData,
            format!("unexpected trajectory header {}", header.join(",")),
        )));
    }
    r.deserialize().collect()
}

pub fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut v = serde_json::to_vec_pretty(value).map_err(|e| CliError::Output {
        path: "<json>".into(),
        source: std::io::Error::other(e),
    })?;
    v.push(b'\n');
    Ok(v)
}

/// Files produced by a command, keyed by name within the output directory.
#[derive(Debug, Default)]
pub struct Outputs {
    pub files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    pub fn add(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.to_string(), bytes));
    }

    /// Writes every file to `dir` through a temporary sibling and a rename.
    pub fn write_to(&self, dir: &Path) -> Result<Vec<std::path::PathBuf>, CliError> {
        let io_err = |path: &Path, source| CliError::Output {
            path: path.display().to_string(),
            source,
        };
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        let mut written = Vec::with_capacity(self.files.len());
        for (name, bytes) in &self.files {
            let target = dir.join(name);
            let tmp = dir.join(format!(".{name}.tmp"));
            let mut f = std::fs::File::create(&tmp).map_err(|e| io_err(&tmp, e))?;
            f.write_all(bytes).map_err(|e| io_err(&tmp, e))?;
            f.sync_all().map_err(|e| io_err(&tmp, e))?;
            drop(f);
            std::fs::rename(&tmp, &target).map_err(|e| io_err(&target, e))?;
            written.push(target);
        }
        Ok(written)
    }
}
