use std::path::Path;

use anyhow::{Context, Result};
use nsosc_core::table::{FrequencyTable, Row, Usability};
use serde::{Deserialize, Serialize};

/// Everything the JSON file holds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub table: FrequencyTable,
    /// Present when the sweep included the reference method.
    pub usability: Option<Vec<Usability>>,
}

pub fn csv_string(rows: &[Row]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    if rows.is_empty() {
        w.write_record(["epsilon", "method", "omega", "pct_error", "h1", "h2", "residual_norm", "status"])?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?)?)
}

pub fn parse_csv(text: &str) -> Result<Vec<Row>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.deserialize().map(|row| row.context("bad CSV row")).collect()
}

pub fn write_csv(rows: &[Row], path: &Path) -> Result<()> {
    std::fs::write(path, csv_string(rows)?).with_context(|| format!("writing {}", path.display()))
}

pub fn read_csv(path: &Path) -> Result<Vec<Row>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_csv(&text)
}

pub fn write_json(report: &Report, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn read_json(path: &Path) -> Result<Report> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_waveform(samples: &[(f64, f64)], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    w.write_record(["t", "x"])?;
    for (t, x) in samples {
        w.write_record([t.to_string(), x.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nsosc_core::table::Method;

    #[test]
    fn rows_survive_csv() {
        let rows = vec![
            Row {
                epsilon: 0.1,
                method: Method::Hg,
                omega: Some(1.0 / 3.0),
                pct_error: Some(1e-17),
                h1: Some(-0.36174),
                h2: None,
                residual_norm: Some(2.5e-13),
                status: "ok".into(),
            },
            Row {
                epsilon: 0.2,
                method: Method::Hb2,
                omega: None,
                pct_error: None,
                h1: None,
                h2: None,
                residual_norm: None,
                status: "error: hb failed: no root, \"quoted\"".into(),
            },
        ];
        let text = csv_string(&rows).unwrap();
        assert!(text.starts_with("epsilon,method,omega,pct_error,h1,h2,residual_norm,status\n"));
        assert!(text.contains("0.2,hb2,,,,,,"));
        assert_eq!(parse_csv(&text).unwrap(), rows);
    }
}
