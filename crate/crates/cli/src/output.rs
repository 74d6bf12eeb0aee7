//! Report files: one JSON document and one CSV table per run, both written
//! through a temporary file in the target directory and renamed into place.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use openness_core::LogReal;
use serde::Serialize;

/// `(sign, log10 |x|, decimal)`; the decimal reads `overflow` or
/// `underflow` when `x` is outside double range.
pub fn logreal_cells(x: LogReal) -> [String; 3] {
    let decimal = match x.to_f64_checked() {
        Some(v) => format!("{v:e}"),
        None if x.ln_abs() > 0.0 => "overflow".to_string(),
        None => "underflow".to_string(),
    };
    let log10 = if x.is_zero() {
        "-inf".to_string()
    } else {
        x.log10_abs().to_string()
    };
    [x.sign().to_string(), log10, decimal]
}

/// Plain decimal for moderate magnitudes, scientific otherwise.
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 || !x.is_finite() || (1e-4..1e7).contains(&x.abs()) {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

pub fn logreal_header(name: &str) -> [String; 3] {
    [format!("{name}_sign"), format!("{name}_log10"), name.to_string()]
}

#[derive(Debug, Default)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<I, S>(header: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// CSV body without the comment line.
    pub fn body(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        Ok(w.into_inner().context("flushing CSV buffer")?)
    }
}

/// Row builder that keeps header and cells in step.
#[derive(Default)]
pub struct Row(Vec<String>);

impl Row {
    pub fn cell(mut self, v: impl ToString) -> Self {
        self.0.push(v.to_string());
        self
    }

    pub fn num(mut self, x: f64) -> Self {
        self.0.push(fmt_f64(x));
        self
    }

    pub fn logreal(mut self, x: LogReal) -> Self {
        self.0.extend(logreal_cells(x));
        self
    }

    pub fn finish(self) -> Vec<String> {
        self.0
    }
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).with_context(|| format!("creating temp file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

/// Writes the table with a leading `#` comment naming the command and the
/// generation time; everything after that line is deterministic.
pub fn write_csv(path: &Path, command: &str, table: &Table) -> Result<()> {
    let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let mut bytes = format!("# openness {command} generated_unix={secs}\n").into_bytes();
    bytes.extend(table.body()?);
    write_atomic(path, &bytes)
}

/// CSV path paired with a JSON report path.
pub fn csv_path(json: &Path) -> PathBuf {
    json.with_extension("csv")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn logreal_columns() {
        assert_eq!(logreal_cells(LogReal::from_f64(-1.0)), ["-1", "0", "-1e0"]);
        assert_eq!(logreal_cells(LogReal::from_ln(1000.0))[2], "overflow");
        assert_eq!(logreal_cells(LogReal::from_ln(-1000.0))[2], "underflow");
        assert_eq!(logreal_cells(LogReal::ZERO), ["0", "-inf", "0e0"]);
        assert_eq!(logreal_header("A"), ["A_sign", "A_log10", "A"]);
    }

    #[test]
    fn float_cells() {
        assert_eq!(fmt_f64(0.25), "0.25");
        assert_eq!(fmt_f64(2.0e-16), "2e-16");
        assert_eq!(fmt_f64(-3.5e9), "-3.5e9");
        assert_eq!(fmt_f64(0.0), "0");
    }

    #[test]
    fn atomic_csv_has_one_comment_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let mut t = Table::new(["a", "b"]);
        t.push(Row::default().cell(1).cell("x,y").finish());
        write_csv(&path, "test", &t).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("# openness test"));
        assert_eq!(lines.collect::<Vec<_>>(), ["a,b", "1,\"x,y\""]);
    }
}
