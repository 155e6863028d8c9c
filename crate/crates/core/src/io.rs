//! CSV and JSON persistence.
//!
//! Series are stored one sample per row, one channel per column, with an
//! optional trailing `label` column. Numbers are written with 17 significant
//! digits so values round-trip bit-exactly. JSON documents carry a
//! top-level `"schema": 1`.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::stats::TimeSeries;

pub const SCHEMA_VERSION: u64 = 1;

/// `x` at 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Where class labels come from when reading a series.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum LabelColumn {
    /// A header column named `label` (or `class`), if present.
    #[default]
    Auto,
    /// The last column.
    Last,
    /// No labels.
    None,
}

pub fn write_series<W: Write>(ts: &TimeSeries, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header: Vec<String> = (1..=ts.dim()).map(|i| format!("x{i}")).collect();
    if ts.labels().is_some() {
        header.push("label".into());
    }
    out.write_record(&header)?;
    let data = ts.data();
    for t in 0..ts.len() {
        let mut rec: Vec<String> = data.column(t).iter().map(|&v| fmt_f64(v)).collect();
        if let Some(l) = ts.labels() {
            rec.push(l[t].to_string());
        }
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_series_file(ts: &TimeSeries, path: &Path) -> Result<()> {
    write_series(ts, File::create(path)?)
}

/// Reads rows of numbers; the first row is a header iff any of its fields
/// fails to parse as a number.
fn read_table<R: Read>(r: R) -> Result<(Option<Vec<String>>, Vec<Vec<f64>>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(r);
    let mut header = None;
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let parsed: std::result::Result<Vec<f64>, _> =
            rec.iter().map(|f| f.parse::<f64>()).collect();
        match parsed {
            Ok(v) => rows.push(v),
            Err(_) if i == 0 => header = Some(rec.iter().map(str::to_owned).collect()),
            Err(e) => {
                return Err(Error::InvalidData(format!("row {}: {e}", i + 1)));
            }
        }
    }
    Ok((header, rows))
}

pub fn read_series<R: Read>(r: R, labels: LabelColumn) -> Result<TimeSeries> {
    let (header, rows) = read_table(r)?;
    if rows.is_empty() {
        return Err(Error::InvalidData("no data rows".into()));
    }
    let width = rows[0].len();
    let label_idx = match labels {
        LabelColumn::None => None,
        LabelColumn::Last => Some(width - 1),
        LabelColumn::Auto => header.as_ref().and_then(|h| {
            h.iter()
                .position(|c| c.eq_ignore_ascii_case("label") || c.eq_ignore_ascii_case("class"))
        }),
    };
    let dim = width - usize::from(label_idx.is_some());
    if dim == 0 {
        return Err(Error::InvalidData("no data columns".into()));
    }
    let mut data = DMatrix::zeros(dim, rows.len());
    let mut lab = Vec::with_capacity(rows.len());
    for (t, row) in rows.iter().enumerate() {
        if row.len() != width {
            return Err(Error::InvalidData(format!(
                "row {} has {} fields, expected {width}",
                t + 1,
                row.len()
            )));
        }
        let mut r = 0;
        for (c, &v) in row.iter().enumerate() {
            if Some(c) == label_idx {
                if v != 1.0 && v != 2.0 {
                    return Err(Error::InvalidData(format!("label {v} at row {} not in {{1, 2}}", t + 1)));
                }
                lab.push(v as u8);
            } else {
                data[(r, t)] = v;
                r += 1;
            }
        }
    }
    if label_idx.is_some() {
        TimeSeries::with_labels(data, lab)
    } else {
        TimeSeries::new(data)
    }
}

pub fn read_series_file(path: &Path, labels: LabelColumn) -> Result<TimeSeries> {
    read_series(File::open(path)?, labels)
}

/// Matrix rows as CSV rows, no header.
pub fn write_matrix<W: Write>(m: &DMatrix<f64>, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for row in m.row_iter() {
        out.write_record(row.iter().map(|&v| fmt_f64(v)))?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_matrix<R: Read>(r: R) -> Result<DMatrix<f64>> {
    let (_, rows) = read_table(r)?;
    let n = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidData("ragged or empty matrix".into()));
    }
    Ok(DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j]))
}

/// Serializes `value` and adds the schema version. Non-object values are
/// wrapped as `{"schema": 1, "value": ...}`.
pub fn to_versioned_json<T: Serialize>(value: &T) -> Result<Value> {
    let v = serde_json::to_value(value)?;
    Ok(match v {
        Value::Object(mut map) => {
            map.insert("schema".into(), Value::from(SCHEMA_VERSION));
            Value::Object(map)
        }
        other => serde_json::json!({ "schema": SCHEMA_VERSION, "value": other }),
    })
}

pub fn write_json_file<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let v = to_versioned_json(value)?;
    let mut f = File::create(path)?;
    serde_json::to_writer_pretty(&mut f, &v)?;
    f.write_all(b"\n")?;
    Ok(())
}
