//! CSV and JSON writers for curve tables.
//!
//! Floats are written in Rust's shortest round-trip form, so equal tables
//! give equal bytes.

use std::io::Write;

use serde::Serialize;
use sinebeta_core::table::{CurveRow, CurveTable};

use crate::error::Result;

pub const CSV_HEADER: [&str; 9] = [
    "lambda",
    "value",
    "stderr",
    "engine",
    "beta",
    "delta",
    "order",
    "seed",
    "tail_bound",
];

fn num(x: f64) -> String {
    format!("{x:?}")
}

fn opt<T>(x: Option<T>, f: impl Fn(T) -> String) -> String {
    x.map(f).unwrap_or_default()
}

fn record(r: &CurveRow) -> [String; 9] {
    [
        num(r.lambda),
        num(r.value),
        opt(r.stderr, num),
        r.engine.as_str().to_string(),
        num(r.beta),
        num(r.delta),
        opt(r.order, |k| k.to_string()),
        opt(r.seed, |s| s.to_string()),
        opt(r.tail_bound, num),
    ]
}

/// RFC 4180 CSV with the fixed header and CRLF line endings.
pub fn write_csv<W: Write>(table: &CurveTable, w: W) -> Result<()> {
    let mut out = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(w);
    out.write_record(CSV_HEADER)?;
    for r in &table.rows {
        out.write_record(record(r))?;
    }
    out.flush()?;
    Ok(())
}

pub fn csv_string(table: &CurveTable) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(table, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
}

#[derive(Serialize)]
struct JsonDocument<'a, C: Serialize> {
    config: &'a C,
    rows: &'a [CurveRow],
}

/// Pretty JSON holding the resolved configuration and the rows.
pub fn write_json<W: Write, C: Serialize>(config: &C, table: &CurveTable, mut w: W) -> Result<()> {
    serde_json::to_writer_pretty(
        &mut w,
        &JsonDocument {
            config,
            rows: &table.rows,
        },
    )?;
    writeln!(w)?;
    Ok(())
}

/// Parses a table written by [`write_csv`].
pub fn read_csv<R: std::io::Read>(r: R) -> Result<Vec<csv::StringRecord>> {
    let mut reader = csv::Reader::from_reader(r);
    let header = reader.headers()?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(crate::error::usage(format!(
            "unexpected CSV header {header:?}"
        )));
    }
    Ok(reader.records().collect::<std::result::Result<_, _>>()?)
}
