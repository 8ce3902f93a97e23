//! The dataset CSV format.
//!
//! ```text
//! timestamp,ds18s20_temp_c,sht10_temp_c,sht10_humidity_pct,yl69_raw,sen13322_raw,vwc_true
//! 1498694400,17.0625,17.21,81.3,652,714,0.0551
//! ```
//!
//! Columns may appear in any order but all seven must be present exactly once.
//! Only `vwc_true` may be empty. Values are written with 9 significant digits.

use super::{Dataset, DatasetError, SensorChannel, SensorRecord};
use std::fmt::Write as _;

pub const CSV_HEADER: &str =
    "timestamp,ds18s20_temp_c,sht10_temp_c,sht10_humidity_pct,yl69_raw,sen13322_raw,vwc_true";

#[derive(Clone, Copy, PartialEq)]
enum Col {
    Timestamp,
    Channel(SensorChannel),
    Target,
}

fn parse_header(line: &str) -> Result<Vec<Col>, DatasetError> {
    let mut cols = Vec::new();
    for name in line.split(',') {
        let name = name.trim();
        let col = match name {
            "timestamp" => Col::Timestamp,
            "vwc_true" => Col::Target,
            other => Col::Channel(other.parse()?),
        };
        if cols.contains(&col) {
            return Err(DatasetError::MalformedRow(1));
        }
        cols.push(col);
    }
    if !cols.contains(&Col::Timestamp) {
        return Err(DatasetError::MissingColumn("timestamp".into()));
    }
    for c in SensorChannel::ALL {
        if !cols.contains(&Col::Channel(c)) {
            return Err(DatasetError::MissingColumn(c.column().into()));
        }
    }
    if !cols.contains(&Col::Target) {
        return Err(DatasetError::MissingColumn("vwc_true".into()));
    }
    Ok(cols)
}

fn parse_value(field: &str, column: &str, line: usize) -> Result<f64, DatasetError> {
    let v: f64 = field.parse().map_err(|_| DatasetError::MalformedRow(line))?;
    if !v.is_finite() {
        return Err(DatasetError::RangeViolation(column.to_string(), v));
    }
    Ok(v)
}

/// Parses dataset CSV text. Rows keep file order.
pub fn parse_csv(text: &str, source: &str) -> Result<Dataset, DatasetError> {
    let mut lines = text.split('\n').enumerate().map(|(i, l)| (i + 1, l.strip_suffix('\r').unwrap_or(l)));
    let header = loop {
        match lines.next() {
            Some((_, l)) if l.trim().is_empty() => continue,
            Some((_, l)) => break l,
            None => return Err(DatasetError::MissingColumn("timestamp".into())),
        }
    };
    let cols = parse_header(header)?;

    let mut records: Vec<SensorRecord> = Vec::new();
    for (lineno, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols.len() {
            return Err(DatasetError::MalformedRow(lineno));
        }
        let mut rec = SensorRecord { timestamp: 0, values: [0.0; 5], vwc_true: None };
        for (field, col) in fields.iter().map(|f| f.trim()).zip(&cols) {
            match *col {
                Col::Timestamp => {
                    rec.timestamp = field.parse().map_err(|_| DatasetError::MalformedRow(lineno))?;
                }
                Col::Channel(c) => {
                    let v = parse_value(field, c.column(), lineno)?;
                    let (lo, hi) = c.range();
                    if v < lo || v > hi {
                        return Err(DatasetError::RangeViolation(c.column().into(), v));
                    }
                    rec.values[c.index()] = v;
                }
                Col::Target => {
                    if !field.is_empty() {
                        let v = parse_value(field, "vwc_true", lineno)?;
                        if !(0.0..=1.0).contains(&v) {
                            return Err(DatasetError::RangeViolation("vwc_true".into(), v));
                        }
                        rec.vwc_true = Some(v);
                    }
                }
            }
        }
        if let Some(prev) = records.last() {
            if rec.timestamp <= prev.timestamp {
                return Err(DatasetError::NonMonotoneTimestamp(lineno));
            }
        }
        records.push(rec);
    }
    Dataset::new(source, records)
}

/// Formats `v` with 9 significant digits in positional notation, trailing zeros trimmed.
pub fn format_sig9(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return if v == 0.0 { "0".to_string() } else { v.to_string() };
    }
    let mag = v.abs().log10().floor() as i32;
    let decimals = (8 - mag).max(0) as usize;
    let mut s = format!("{:.*}", decimals, v);
    if s.contains('.') {
        let trimmed = s.trim_end_matches('0').trim_end_matches('.').len();
        s.truncate(trimmed);
    }
    if s == "-0" {
        s = "0".to_string();
    }
    s
}

/// Writes the dataset in canonical column order.
pub fn write_csv(ds: &Dataset) -> String {
    let mut out = String::with_capacity(64 * (ds.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in ds.records() {
        let _ = write!(out, "{}", r.timestamp);
        for c in SensorChannel::ALL {
            out.push(',');
            out.push_str(&format_sig9(r.value(c)));
        }
        out.push(',');
        if let Some(v) = r.vwc_true {
            out.push_str(&format_sig9(v));
        }
        out.push('\n');
    }
    out
}
