//! Numeric CSV tables: header row, 17 significant digits.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use crate::diagnostics::LevelSetTrace;
use crate::error::{Error, Result};

/// `v` with 17 significant digits; parses back to the same bits.
pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

/// A header plus rows of equal width.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) -> Result<()> {
        if row.len() != self.header.len() {
            return Err(Error::LengthMismatch { expected: self.header.len(), got: row.len() });
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    /// Row-major index of the first non-finite entry.
    pub fn first_non_finite(&self) -> Option<usize> {
        self.rows.iter().flatten().position(|v| !v.is_finite())
    }
}

pub fn write_csv<W: Write>(out: W, table: &Table) -> Result<()> {
    if let Some(idx) = table.first_non_finite() {
        return Err(Error::NonFinite(idx));
    }
    let mut w = csv::Writer::from_writer(out);
    let fail = |e: csv::Error| Error::Format(e.to_string());
    w.write_record(&table.header).map_err(fail)?;
    for row in &table.rows {
        if row.len() != table.header.len() {
            return Err(Error::LengthMismatch { expected: table.header.len(), got: row.len() });
        }
        w.write_record(row.iter().map(|v| format_value(*v))).map_err(fail)?;
    }
    w.flush().map_err(|e| Error::Format(e.to_string()))?;
    Ok(())
}

pub fn write_csv_file(path: &Path, table: &Table) -> Result<()> {
    // refuse before touching the file
    if let Some(idx) = table.first_non_finite() {
        return Err(Error::NonFinite(idx));
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(std::io::BufWriter::new(file), table).map_err(|e| match e {
        Error::Format(msg) => Error::io(path, std::io::Error::other(msg)),
        other => other,
    })
}

/// Parses a numeric table; every row must match the header width and every
/// cell must be a finite number.
pub fn parse_csv(text: &str) -> Result<Table> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).flexible(false).from_reader(text.as_bytes());
    let header: Vec<String> = r.headers().map_err(|e| Error::Format(e.to_string()))?.iter().map(|h| h.trim().to_string()).collect();
    if header.is_empty() || header.iter().any(String::is_empty) {
        return Err(Error::Format("empty column name".into()));
    }
    for (i, h) in header.iter().enumerate() {
        if header[..i].contains(h) {
            return Err(Error::Format(format!("duplicate column `{h}`")));
        }
    }
    let mut rows = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| Error::Format(e.to_string()))?;
        let row = rec
            .iter()
            .map(|cell| {
                let v: f64 = cell.trim().parse().map_err(|_| Error::Format(format!("row {}: `{cell}` is not a number", line + 1)))?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::Format(format!("row {}: non-finite `{cell}`", line + 1)))
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(Table { header, rows })
}

pub const TRACE_COLUMNS: [&str; 3] = ["t", "x", "valid"];

/// Columns `t, x, valid`; invalid samples carry `x = 0`.
pub fn trace_table(trace: &LevelSetTrace) -> Table {
    let mut t = Table::new(&TRACE_COLUMNS);
    for k in 0..trace.len() {
        let valid = trace.valid[k];
        let x = if valid { trace.positions[k] } else { 0.0 };
        t.rows.push(vec![trace.times[k], x, if valid { 1.0 } else { 0.0 }]);
    }
    t
}

/// Inverse of [`trace_table`]. The level itself is not stored.
pub fn parse_trace(text: &str, lambda: f64) -> Result<LevelSetTrace> {
    let table = parse_csv(text)?;
    let col = |name: &str| table.column(name).ok_or_else(|| Error::Format(format!("missing column `{name}`")));
    let (ts, xs, valid) = (col("t")?, col("x")?, col("valid")?);
    let mut trace = LevelSetTrace::new(lambda);
    for k in 0..ts.len() {
        let v = valid[k];
        let ok = if v == 1.0 {
            true
        } else if v == 0.0 {
            false
        } else {
            return Err(Error::Format(format!("row {}: valid flag {v} not 0 or 1", k + 1)));
        };
        if k > 0 && !(ts[k] > ts[k - 1]) {
            return Err(Error::Format(format!("row {}: times not increasing", k + 1)));
        }
        if ok && !(xs[k] > 0.0) {
            return Err(Error::Format(format!("row {}: valid position must be > 0", k + 1)));
        }
        trace.times.push(ts[k]);
        trace.positions.push(if ok { xs[k] } else { f64::NAN });
        trace.valid.push(ok);
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_table_is_header_only() {
        let mut buf = Vec::new();
        write_csv(&mut buf, &Table::new(&["t", "u"])).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "t,u\n");
    }

    #[test]
    fn nan_is_refused_with_index() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec![1.0, 2.0]).unwrap();
        t.push(vec![3.0, f64::NAN]).unwrap();
        assert!(matches!(write_csv(Vec::new(), &t), Err(Error::NonFinite(3))));
    }

    #[test]
    fn values_round_trip() {
        let mut t = Table::new(&["v"]);
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02e23, f64::MIN_POSITIVE] {
            t.push(vec![v]).unwrap();
        }
        let mut buf = Vec::new();
        write_csv(&mut buf, &t).unwrap();
        let back = parse_csv(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn ragged_rows_rejected() {
        assert!(parse_csv("a,b\n1,2\n3\n").is_err());
        assert!(parse_csv("a,a\n1,2\n").is_err());
        assert!(parse_csv("a\nnan\n").is_err());
    }

    #[test]
    fn trace_round_trip() {
        let mut tr = LevelSetTrace::new(0.1);
        tr.times = vec![1.0, 2.0, 3.0];
        tr.positions = vec![5.0, f64::NAN, 7.5];
        tr.valid = vec![true, false, true];
        let mut buf = Vec::new();
        write_csv(&mut buf, &trace_table(&tr)).unwrap();
        let back = parse_trace(std::str::from_utf8(&buf).unwrap(), 0.1).unwrap();
        assert_eq!(back.times, tr.times);
        assert_eq!(back.valid, tr.valid);
        assert_eq!(back.positions[2], 7.5);
    }
}
