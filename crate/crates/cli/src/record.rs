//! Result persistence: a JSON record plus a per-iteration CSV table.

use std::path::{Path, PathBuf};

use lptd_core::simnet::{RunMetrics, ScenarioConfig};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Column order is part of the output format; append only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRow {
    pub iteration: u32,
    pub weight_present: usize,
    pub truth_present: usize,
    pub max_deviation: Option<f64>,
    pub rmse_vs_oracle: Option<f64>,
    pub rmse_vs_planted: Option<f64>,
    pub bytes_so_far: u64,
    pub max_device_exps: u64,
    pub max_device_muls: u64,
    pub rejections: u64,
}

pub const ITERATION_HEADER: &str = "iteration,weight_present,truth_present,max_deviation,rmse_vs_oracle,rmse_vs_planted,bytes_so_far,max_device_exps,max_device_muls,rejections";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleComparison {
    pub iteration: u32,
    pub max_deviation: Option<f64>,
    pub rmse: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub scenario_digest: String,
    pub tool_version: String,
    pub config: ScenarioConfig,
    /// Digest of the key bundle the run used, if any.
    pub key_bundle: Option<String>,
    pub tolerance: f64,
    pub oracle: Vec<OracleComparison>,
    pub metrics: RunMetrics,
    pub started_unix_ms: u64,
    pub finished_unix_ms: u64,
}

impl ResultRecord {
    pub fn rows(&self) -> Vec<IterationRow> {
        self.metrics
            .iterations
            .iter()
            .map(|it| IterationRow {
                iteration: it.iteration,
                weight_present: it.weight_present.len(),
                truth_present: it.truth_present.len(),
                max_deviation: it.max_deviation,
                rmse_vs_oracle: it.rmse_vs_oracle,
                rmse_vs_planted: it.rmse_vs_planted,
                bytes_so_far: it.bytes_so_far,
                max_device_exps: it.max_device_exps,
                max_device_muls: it.max_device_muls,
                rejections: it.rejections,
            })
            .collect()
    }

    /// Writes `<digest>.json` and `<digest>.csv` under `dir` and returns
    /// both paths.
    pub fn write(&self, dir: &Path) -> Result<(PathBuf, PathBuf), CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let stem = &self.scenario_digest[..16];
        let json = dir.join(format!("{stem}.json"));
        let csv_path = dir.join(format!("{stem}.csv"));
        let text = serde_json::to_string_pretty(self).map_err(|e| CliError::Run(e.to_string()))?;
        std::fs::write(&json, text).map_err(|e| CliError::io(&json, e))?;
        write_csv(&csv_path, &self.rows(), ITERATION_HEADER)?;
        Ok((json, csv_path))
    }
}

pub fn oracle_comparison(m: &RunMetrics) -> Vec<OracleComparison> {
    m.iterations
        .iter()
        .map(|it| OracleComparison {
            iteration: it.iteration,
            max_deviation: it.max_deviation,
            rmse: it.rmse_vs_oracle,
        })
        .collect()
}

/// Writes `rows` with a header even when empty.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T], header: &str) -> Result<(), CliError> {
    let file = std::fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    write_rows(file, rows, header).map_err(|e| CliError::io(path, e))
}

pub fn write_rows<W: std::io::Write, T: Serialize>(
    out: W,
    rows: &[T],
    header: &str,
) -> Result<(), csv::Error> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    w.write_record(header.split(','))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn unix_ms() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_matches_row_fields() {
        let row = IterationRow {
            iteration: 1,
            weight_present: 2,
            truth_present: 2,
            max_deviation: None,
            rmse_vs_oracle: Some(0.5),
            rmse_vs_planted: None,
            bytes_so_far: 9,
            max_device_exps: 0,
            max_device_muls: 4,
            rejections: 0,
        };
        let mut w = csv::Writer::from_writer(Vec::new());
        w.serialize(&row).unwrap();
        let text = String::from_utf8(w.into_inner().unwrap()).unwrap();
        assert_eq!(text.lines().next().unwrap(), ITERATION_HEADER);
        assert_eq!(text.lines().nth(1).unwrap(), "1,2,2,,0.5,,9,0,4,0");
    }
}
