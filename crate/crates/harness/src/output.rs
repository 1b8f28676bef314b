use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use crate::error::{HarnessError, Result};
use crate::experiment::{ResultTable, Row};

pub const CSV_HEADER: [&str; 7] = [
    "scheme",
    "mode",
    "sweep_axis",
    "sweep_db",
    "mean_rate",
    "stderr",
    "trials",
];

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> HarnessError + '_ {
    move |source| HarnessError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes the table as CSV. The header is written even when there are no rows.
pub fn write_csv<W: Write>(table: &ResultTable, writer: W) -> std::result::Result<(), csv::Error> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(writer);
    w.write_record(CSV_HEADER)?;
    for row in &table.rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv(table: &ResultTable, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(io_err(path))?;
    write_csv(table, std::io::BufWriter::new(file)).map_err(csv_err(path))
}

pub fn read_csv(path: &Path) -> Result<ResultTable> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let header = r.headers().map_err(csv_err(path))?.clone();
    if !header.iter().eq(CSV_HEADER) {
        return Err(HarnessError::Config(format!(
            "{}: unexpected header {:?}",
            path.display(),
            header
        )));
    }
    let rows = r
        .deserialize::<Row>()
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(csv_err(path))?;
    Ok(ResultTable { rows })
}

/// Gnuplot data: one indexed block per scheme with columns
/// `sweep_db mean_rate stderr`.
pub fn plotdata(table: &ResultTable) -> String {
    let mut out = String::new();
    let mut schemes: Vec<&str> = Vec::new();
    for r in &table.rows {
        if !schemes.contains(&r.scheme.as_str()) {
            schemes.push(&r.scheme);
        }
    }
    for (i, s) in schemes.iter().enumerate() {
        if i > 0 {
            out.push_str("\n\n");
        }
        let _ = writeln!(out, "# {s}");
        for r in table.rows_for(s) {
            let _ = writeln!(out, "{} {} {}", r.sweep_db, r.mean_rate, r.stderr);
        }
    }
    out
}

pub fn emit_plotdata(table: &ResultTable, path: &Path) -> Result<()> {
    std::fs::write(path, plotdata(table)).map_err(io_err(path))
}
