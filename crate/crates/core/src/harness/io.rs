use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

use super::{Metric, RiskRow, RowFlag};

pub const CSV_HEADER: [&str; 10] =
    ["n", "replicate", "metric", "point_value", "risk_value", "std_error", "elbo_final", "iterations", "seed", "flag"];

/// 17 significant digits, so values survive a text round trip exactly.
pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// Appends rows to a CSV file, flushing after each batch.
pub struct CsvRowWriter {
    inner: csv::Writer<BufWriter<File>>,
    written: usize,
}

impl CsvRowWriter {
    pub fn create(path: &Path) -> Result<Self> {
        let file = File::create(path)?;
        let mut inner = csv::Writer::from_writer(BufWriter::new(file));
        inner.write_record(CSV_HEADER).map_err(csv_err)?;
        inner.flush()?;
        Ok(Self { inner, written: 0 })
    }

    pub fn write_batch(&mut self, rows: &[RiskRow]) -> Result<()> {
        for r in rows {
            self.inner
                .write_record([
                    r.n.to_string(),
                    r.replicate.to_string(),
                    r.metric.name().to_string(),
                    format_float(r.point_value),
                    format_float(r.risk_value),
                    format_float(r.std_error),
                    format_float(r.elbo_final),
                    r.iterations.to_string(),
                    r.seed.to_string(),
                    r.flag.as_str().to_string(),
                ])
                .map_err(csv_err)?;
        }
        self.inner.flush()?;
        self.written += rows.len();
        Ok(())
    }

    pub fn rows_written(&self) -> usize {
        self.written
    }
}

pub fn write_rows(path: &Path, rows: &[RiskRow]) -> Result<()> {
    CsvRowWriter::create(path)?.write_batch(rows)
}

pub fn read_rows(path: &Path) -> Result<Vec<RiskRow>> {
    let mut reader = csv::Reader::from_path(path).map_err(csv_err)?;
    let header = reader.headers().map_err(csv_err)?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Config { path: path.display().to_string(), message: "unexpected CSV header".into() });
    }
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let line = i + 2;
        let field = |j: usize| rec.get(j).unwrap_or("");
        let bad = |j: usize| Error::Config { path: format!("line {line}, column {}", CSV_HEADER[j]), message: format!("cannot parse {:?}", field(j)) };
        let int = |j: usize| field(j).parse::<u64>().map_err(|_| bad(j));
        let float = |j: usize| field(j).parse::<f64>().map_err(|_| bad(j));
        rows.push(RiskRow {
            n: int(0)? as usize,
            replicate: int(1)? as usize,
            metric: field(2).parse::<Metric>().map_err(|_| bad(2))?,
            point_value: float(3)?,
            risk_value: float(4)?,
            std_error: float(5)?,
            elbo_final: float(6)?,
            iterations: int(7)? as usize,
            seed: int(8)?,
            flag: RowFlag::parse(field(9)).map_err(|_| bad(9))?,
        });
    }
    Ok(rows)
}

/// Append one JSON document as a line.
pub fn write_report<T: Serialize>(path: &Path, report: &T) -> Result<()> {
    let line = serde_json::to_string(report).map_err(|e| Error::Io(e.to_string()))?;
    let mut f = OpenOptions::new().create(true).append(true).open(path)?;
    writeln!(f, "{line}")?;
    Ok(())
}
