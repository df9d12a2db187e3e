//! CSV datasets and JSON documents.
//!
//! Dataset CSV: a header `f0,...,f{d-1}` optionally followed by `label`, one
//! point per row. Floats are written in the shortest form that parses back to
//! the same `f64`.

use std::fs::File;
use std::io::Write;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use dqaem::Dataset;
use serde::Serialize;

use crate::error::{CliError, CliResult};

pub const JSON_SCHEMA_VERSION: u32 = 1;

pub fn write_dataset_csv(path: &Path, data: &Dataset) -> CliResult<()> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    let mut header: Vec<String> = (0..data.dim()).map(|j| format!("f{j}")).collect();
    if data.labels.is_some() {
        header.push("label".into());
    }
    let csv_err = |e: csv::Error| CliError::input(path, e);
    w.write_record(&header).map_err(csv_err)?;
    for (i, y) in data.points().iter().enumerate() {
        let mut row: Vec<String> = y.iter().map(|v| v.to_string()).collect();
        if let Some(labels) = &data.labels {
            row.push(labels[i].to_string());
        }
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn read_dataset_csv(path: &Path) -> CliResult<Dataset> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let header = r.headers().map_err(|e| CliError::input(path, e))?.clone();
    let has_label = header.iter().next_back() == Some("label");
    let d = header.len() - usize::from(has_label);
    if d == 0 {
        return Err(CliError::input(path, "no feature columns"));
    }
    for (j, name) in header.iter().take(d).enumerate() {
        if name != format!("f{j}") {
            return Err(CliError::input(
                path,
                format!("expected column `f{j}`, found `{name}`"),
            ));
        }
    }
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (line, record) in r.records().enumerate() {
        let record = record.map_err(|e| CliError::input(path, e))?;
        let row = record
            .iter()
            .take(d)
            .map(|s| s.parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect::<Option<Vec<f64>>>()
            .ok_or_else(|| CliError::input(path, format!("row {}: invalid number", line + 1)))?;
        rows.push(row);
        if has_label {
            let label = record[d].parse::<usize>().map_err(|_| {
                CliError::input(
                    path,
                    format!("row {}: invalid label `{}`", line + 1, &record[d]),
                )
            })?;
            labels.push(label);
        }
    }
    if rows.is_empty() {
        return Err(CliError::input(path, "no data rows"));
    }
    let data = Dataset::from_rows(&rows).map_err(|e| CliError::input(path, e))?;
    if has_label {
        data.with_labels(labels)
            .map_err(|e| CliError::input(path, e))
    } else {
        Ok(data)
    }
}

/// Top-level wrapper of every JSON output.
#[derive(Serialize)]
pub struct Document<'a, T: Serialize> {
    pub schema_version: u32,
    pub kind: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generated_at: Option<u64>,
    #[serde(flatten)]
    pub body: T,
}

pub fn write_json<T: Serialize>(
    path: &Path,
    kind: &str,
    body: T,
    timestamp: bool,
) -> CliResult<()> {
    let generated_at = timestamp.then(|| {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs())
    });
    let doc = Document {
        schema_version: JSON_SCHEMA_VERSION,
        kind,
        generated_at,
        body,
    };
    let mut text = serde_json::to_string_pretty(&doc).map_err(|e| CliError::input(path, e))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::input(path, e))
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    let mut f = File::create(path).map_err(|e| CliError::io(path, e))?;
    f.write_all(text.as_bytes())
        .map_err(|e| CliError::io(path, e))
}
