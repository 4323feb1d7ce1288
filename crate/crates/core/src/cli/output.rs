//! Versioned diagnostics CSV and JSON reports.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::functionals::{DiagnosticsRecord, DiagnosticsSeries};

pub const CSV_VERSION_LINE: &str = "# blk-diagnostics v1";

pub const CSV_COLUMNS: [&str; 14] = [
    "t",
    "l2_sq",
    "grad_sq",
    "lap_sq",
    "bilap_sq",
    "trace_uxx0",
    "sup_sq",
    "uy_sq",
    "uyy_sq",
    "ut_sq",
    "l4_4",
    "weighted",
    "weighted_x",
    "weighted_y",
];

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Config(format!("{}: {other:?}", path.display())),
    }
}

pub fn write_diagnostics_to<W: Write>(mut w: W, series: &[DiagnosticsRecord]) -> std::io::Result<()> {
    writeln!(w, "{CSV_VERSION_LINE}")?;
    let mut cw = csv::Writer::from_writer(w);
    if series.is_empty() {
        cw.write_record(CSV_COLUMNS)?;
    }
    for r in series {
        cw.serialize(r)?;
    }
    cw.flush()
}

pub fn write_diagnostics(path: &Path, series: &[DiagnosticsRecord]) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    write_diagnostics_to(BufWriter::new(f), series).map_err(|e| Error::io(path, e))
}

/// Reads a file written by [`write_diagnostics`]; other versions and column
/// layouts are rejected.
pub fn read_diagnostics(path: &Path) -> Result<DiagnosticsSeries> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(f);
    let mut first = String::new();
    r.read_line(&mut first).map_err(|e| Error::io(path, e))?;
    if first.trim_end() != CSV_VERSION_LINE {
        return Err(Error::Config(format!(
            "{}: unsupported diagnostics version line `{}`",
            path.display(),
            first.trim_end()
        )));
    }
    let mut cr = csv::Reader::from_reader(r);
    let header = cr.headers().map_err(|e| csv_err(path, e))?.clone();
    if header.iter().ne(CSV_COLUMNS) {
        return Err(Error::Config(format!(
            "{}: unexpected columns {:?}",
            path.display(),
            header
        )));
    }
    cr.deserialize().map(|rec| rec.map_err(|e| csv_err(path, e))).collect()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Config(e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Writes rows of any serializable type as a plain CSV table.
pub fn write_table<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut cw = csv::Writer::from_writer(BufWriter::new(f));
    for row in rows {
        cw.serialize(row).map_err(|e| csv_err(path, e))?;
    }
    cw.flush().map_err(|e| Error::io(path, e))
}
