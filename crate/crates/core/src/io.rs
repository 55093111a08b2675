//! CSV/JSON file formats and atomic writes.
//!
//! Series CSV: header `index,value`; integer index, `.`-decimal value; rows
//! sorted and gap-free. Regime sidecar: `index,regime` (0-based regime ids).

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::series::TimeSeries;

/// Reads a CSV whose first column is an integer index and the remaining
/// columns are finite reals. Indices must increase by exactly one per row.
pub fn read_numeric_csv(path: &Path, header: &[&str]) -> Result<Vec<(i64, Vec<f64>)>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(file);
    let csv_err = |line: u64, message: String| Error::Csv {
        path: path.to_path_buf(),
        line,
        message,
    };

    let mut rows = Vec::new();
    let mut saw_header = false;
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            csv_err(line, e.to_string())
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if !saw_header {
            let got: Vec<&str> = record.iter().collect();
            if got != header {
                return Err(csv_err(
                    line,
                    format!(
                        "expected header {}, got {}",
                        header.join(","),
                        got.join(",")
                    ),
                ));
            }
            saw_header = true;
            continue;
        }
        if record.len() != header.len() {
            return Err(csv_err(
                line,
                format!("expected {} fields, got {}", header.len(), record.len()),
            ));
        }
        let index: i64 = record[0]
            .parse()
            .map_err(|_| csv_err(line, format!("bad index {:?}", &record[0])))?;
        let mut vals = Vec::with_capacity(header.len() - 1);
        for (name, field) in header[1..].iter().zip(record.iter().skip(1)) {
            let v: f64 = field
                .parse()
                .map_err(|_| csv_err(line, format!("bad {name} {field:?}")))?;
            if !v.is_finite() {
                return Err(csv_err(line, format!("non-finite {name} {field:?}")));
            }
            vals.push(v);
        }
        if let Some((prev, _)) = rows.last() {
            if index != prev + 1 {
                return Err(csv_err(
                    line,
                    format!(
                        "index {index} does not follow {prev}; rows must be sorted and gap-free"
                    ),
                ));
            }
        }
        rows.push((index, vals));
    }
    if !saw_header {
        return Err(csv_err(1, "missing header".into()));
    }
    Ok(rows)
}

pub fn read_series_csv(path: &Path) -> Result<TimeSeries> {
    let rows = read_numeric_csv(path, &["index", "value"])?;
    let Some(&(start, _)) = rows.first() else {
        return Err(Error::Csv {
            path: path.to_path_buf(),
            line: 2,
            message: "no data rows".into(),
        });
    };
    TimeSeries::with_index(rows.into_iter().map(|(_, v)| v[0]).collect(), start, 1.0)
}

pub fn write_series_csv(path: &Path, series: &TimeSeries) -> Result<()> {
    let mut out = String::with_capacity(series.len() * 24);
    out.push_str("index,value\n");
    for (i, v) in series.values().iter().enumerate() {
        out.push_str(&format!("{},{}\n", series.index_at(i), v));
    }
    write_atomic(path, out.as_bytes())
}

pub fn write_regimes_csv(path: &Path, start_index: i64, regimes: &[usize]) -> Result<()> {
    let mut out = String::from("index,regime\n");
    for (i, r) in regimes.iter().enumerate() {
        out.push_str(&format!("{},{}\n", start_index + i as i64, r));
    }
    write_atomic(path, out.as_bytes())
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}
