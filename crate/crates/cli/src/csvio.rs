//! Headerless numeric CSV: one vector per row.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};

/// Parses rows of comma-separated floats; blank lines are skipped. Errors name
/// the 1-based line.
pub fn parse_rows(mut text: impl Read, source: &str) -> Result<Vec<Vec<f64>>> {
    let mut raw = Vec::new();
    text.read_to_end(&mut raw).with_context(|| format!("cannot read {source}"))?;
    // The reader's own line counter ignores blank lines, so count from the byte offset.
    let line_at = |byte: u64| {
        let start = byte as usize;
        let skip = raw[start..].iter().take_while(|&&b| b == b'\n' || b == b'\r').count();
        1 + raw[..start + skip].iter().filter(|&&b| b == b'\n').count()
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(raw.as_slice());
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.with_context(|| format!("{source}: malformed CSV"))?;
        let line = record.position().map_or(0, |p| line_at(p.byte()));
        if record.iter().all(str::is_empty) {
            continue;
        }
        let row = record
            .iter()
            .enumerate()
            .map(|(col, field)| {
                field.parse::<f64>().ok().filter(|x| x.is_finite()).with_context(|| {
                    format!("{source}: line {line}, column {}: `{field}` is not a finite number", col + 1)
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first().map(Vec::len) {
            if row.len() != first {
                bail!("{source}: line {line} has {} columns, expected {first}", row.len());
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn read_rows(path: &Path) -> Result<Vec<Vec<f64>>> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    parse_rows(file, &path.display().to_string())
}

/// `{:.16e}` per value: 17 significant digits, enough to round-trip any f64.
pub fn format_rows(rows: &[Vec<f64>], mut out: impl Write) -> std::io::Result<()> {
    for row in rows {
        let mut first = true;
        for x in row {
            if !first {
                out.write_all(b",")?;
            }
            write!(out, "{x:.16e}")?;
            first = false;
        }
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn write_rows(path: &Path, rows: &[Vec<f64>]) -> Result<()> {
    let file = File::create(path).with_context(|| format!("cannot write {}", path.display()))?;
    format_rows(rows, BufWriter::new(file)).with_context(|| format!("cannot write {}", path.display()))
}
