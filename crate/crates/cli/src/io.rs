//! Deterministic artifact input and output.
//!
//! Decay statistics travel as CSV with the fixed header
//! `observable,m,mean,variance,count`; shadow records as newline-delimited
//! `m<TAB>gate_ids<TAB>outcome_bits` lines with comma-joined ids. Floats
//! are printed with 17 significant digits so every `f64` round-trips
//! bit-faithfully, and all files are written through a temporary file
//! followed by an atomic rename.

use std::fs;
use std::io::Write;
use std::path::Path;

use sha2::{Digest, Sha256};

use rbsim_core::protocols::{DecayDataset, ShadowRecord};

use crate::error::{schema, CliError, Result};

/// The exact decay CSV header, in column order.
pub const DECAY_HEADER: [&str; 5] = ["observable", "m", "mean", "variance", "count"];

/// One parsed row of a decay CSV file.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct DecayRow {
    pub observable: String,
    pub m: usize,
    pub mean: f64,
    pub variance: f64,
    pub count: usize,
}

/// Hex digest of the SHA-256 hash of the bytes.
pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Formats a float with 17 significant digits, enough to round-trip `f64`.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes bytes through a temporary file in the target directory followed
/// by an atomic rename, so readers never observe a partial artifact.
pub fn atomic_write(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(parent) if !parent.as_os_str().is_empty() => parent,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Simulation(format!("cannot create {}: {e}", dir.display())))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .map_err(|e| CliError::Simulation(format!("cannot stage {}: {e}", path.display())))?;
    tmp.write_all(contents)
        .map_err(|e| CliError::Simulation(format!("cannot stage {}: {e}", path.display())))?;
    tmp.persist(path)
        .map_err(|e| CliError::Simulation(format!("cannot write {}: {e}", path.display())))?;
    Ok(())
}

/// Serializes a decay dataset as CSV in cell order.
pub fn decay_csv(dataset: &DecayDataset) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(DECAY_HEADER).expect("in-memory write");
    for cell in &dataset.cells {
        writer
            .write_record([
                cell.observable.as_str(),
                &cell.m.to_string(),
                &format_float(cell.mean),
                &format_float(cell.variance),
                &cell.count.to_string(),
            ])
            .expect("in-memory write");
    }
    let bytes = writer.into_inner().expect("in-memory flush");
    String::from_utf8(bytes).expect("CSV output is UTF-8")
}

pub fn write_decay_csv(path: &Path, dataset: &DecayDataset) -> Result<()> {
    atomic_write(path, decay_csv(dataset).as_bytes())
}

/// Parses decay CSV text, validating the exact header and every field.
pub fn parse_decay_csv(text: &str) -> Result<Vec<DecayRow>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let headers = reader.headers().map_err(schema)?.clone();
    if headers.iter().ne(DECAY_HEADER) {
        return Err(CliError::Schema(format!(
            "decay CSV header must be {:?}",
            DECAY_HEADER.join(",")
        )));
    }
    let mut rows = Vec::new();
    for (index, record) in reader.records().enumerate() {
        let record = record.map_err(schema)?;
        let line = index + 2;
        if record.len() != DECAY_HEADER.len() {
            return Err(CliError::Schema(format!(
                "line {line}: expected {} fields, got {}",
                DECAY_HEADER.len(),
                record.len()
            )));
        }
        let parse_count = |field: &str, name: &str| {
            field.parse::<usize>().map_err(|_| {
                CliError::Schema(format!("line {line}: {name} is not an integer: {field:?}"))
            })
        };
        let parse_value = |field: &str, name: &str| {
            field
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| {
                    CliError::Schema(format!(
                        "line {line}: {name} is not a finite number: {field:?}"
                    ))
                })
        };
        let m = parse_count(&record[1], "m")?;
        if m == 0 {
            return Err(CliError::Schema(format!(
                "line {line}: sequence length must be at least 1"
            )));
        }
        rows.push(DecayRow {
            observable: record[0].to_string(),
            m,
            mean: parse_value(&record[2], "mean")?,
            variance: parse_value(&record[3], "variance")?,
            count: parse_count(&record[4], "count")?,
        });
    }
    if rows.is_empty() {
        return Err(CliError::Schema("decay CSV has no data rows".into()));
    }
    Ok(rows)
}

pub fn read_decay_csv(path: &Path) -> Result<Vec<DecayRow>> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Schema(format!("cannot read {}: {e}", path.display())))?;
    parse_decay_csv(&text)
}

/// Observable labels of the rows, in first-appearance order.
pub fn observables_of(rows: &[DecayRow]) -> Vec<String> {
    let mut labels: Vec<String> = Vec::new();
    for row in rows {
        if !labels.contains(&row.observable) {
            labels.push(row.observable.clone());
        }
    }
    labels
}

/// `(m, mean)` series of one observable, sorted by length.
pub fn series_of(rows: &[DecayRow], observable: &str) -> Vec<(f64, f64)> {
    let mut points: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.observable == observable)
        .map(|r| (r.m as f64, r.mean))
        .collect();
    points.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("lengths are finite"));
    points
}

/// Serializes shadow records, one line per record.
pub fn records_text(records: &[ShadowRecord]) -> String {
    let mut out = String::new();
    for record in records {
        let ids: Vec<String> = record.gate_ids.iter().map(ToString::to_string).collect();
        let bits: String = record
            .outcome
            .iter()
            .map(|&b| if b { '1' } else { '0' })
            .collect();
        out.push_str(&record.m.to_string());
        out.push('\t');
        out.push_str(&ids.join(","));
        out.push('\t');
        out.push_str(&bits);
        out.push('\n');
    }
    out
}

pub fn write_records(path: &Path, records: &[ShadowRecord]) -> Result<()> {
    atomic_write(path, records_text(records).as_bytes())
}

/// Parses shadow record text, the inverse of [`records_text`].
pub fn parse_records(text: &str) -> Result<Vec<ShadowRecord>> {
    let mut records = Vec::new();
    for (index, line) in text.lines().enumerate() {
        let line_no = index + 1;
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(CliError::Schema(format!(
                "record line {line_no}: expected 3 tab-separated fields, got {}",
                fields.len()
            )));
        }
        let m: usize = fields[0].parse().map_err(|_| {
            CliError::Schema(format!(
                "record line {line_no}: bad sequence length {:?}",
                fields[0]
            ))
        })?;
        if m == 0 {
            return Err(CliError::Schema(format!(
                "record line {line_no}: sequence length must be at least 1"
            )));
        }
        let mut gate_ids = Vec::new();
        for part in fields[1].split(',') {
            gate_ids.push(part.parse::<usize>().map_err(|_| {
                CliError::Schema(format!("record line {line_no}: bad gate id {part:?}"))
            })?);
        }
        let mut outcome = Vec::with_capacity(fields[2].len());
        for ch in fields[2].chars() {
            outcome.push(match ch {
                '0' => false,
                '1' => true,
                other => {
                    return Err(CliError::Schema(format!(
                        "record line {line_no}: bad outcome bit {other:?}"
                    )))
                }
            });
        }
        if outcome.is_empty() {
            return Err(CliError::Schema(format!(
                "record line {line_no}: empty outcome bitstring"
            )));
        }
        records.push(ShadowRecord {
            m,
            gate_ids,
            outcome,
        });
    }
    if records.is_empty() {
        return Err(CliError::Schema("record file has no records".into()));
    }
    Ok(records)
}

pub fn read_records(path: &Path) -> Result<Vec<ShadowRecord>> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Schema(format!("cannot read {}: {e}", path.display())))?;
    parse_records(&text)
}
