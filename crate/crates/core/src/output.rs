//! Result-table serialization.
//!
//! Both formats start with a schema line. CSV follows it with a header row in
//! [`COLUMNS`] order; JSON-lines follows it with one object per row. Floats are
//! written as the shortest decimal that parses back to the same value, and
//! absent values are empty CSV fields or JSON `null`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::sweep::SweepResultRow;

pub const SCHEMA: &str = "pnmimo-sweep v1";

/// Column order of the CSV header.
pub const COLUMNS: [&str; 38] = [
    "sweep",
    "point",
    "axis",
    "value",
    "antennas",
    "users",
    "oscillators",
    "q0",
    "sigma_deg_bs",
    "sigma_deg_ue",
    "tau",
    "coherence",
    "snr_db",
    "snr_convention",
    "noise_var",
    "ue",
    "power",
    "total_power",
    "condition_cap",
    "realizations",
    "seed",
    "precoder",
    "alpha",
    "alpha_grid",
    "q_eff",
    "analytical_sinr",
    "empirical_sinr",
    "std_error",
    "rejected",
    "rate_awgn_bound",
    "rate_lapidoth",
    "rate_min",
    "rate_ergodic",
    "delta_pn",
    "rate_definition",
    "analytical_rate",
    "empirical_rate",
    "wall_time",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    JsonLines,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json-lines" | "jsonl" => Ok(Self::JsonLines),
            other => Err(Error::config("format", format!("expected csv or json-lines, got \"{other}\""))),
        }
    }
}

fn format_err(path: &Path, message: impl ToString) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        message: message.to_string(),
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Serializes rows to a writer. `path` only labels errors.
pub fn write_results<W: Write>(rows: &[SweepResultRow], format: Format, out: W, path: &Path) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::EmptyTable);
    }
    let mut out = BufWriter::new(out);
    writeln!(out, "# {SCHEMA}").map_err(io_err(path))?;
    match format {
        Format::Csv => {
            let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(&mut out);
            for r in rows {
                w.serialize(r).map_err(|e| format_err(path, e))?;
            }
            w.flush().map_err(io_err(path))?;
        }
        Format::JsonLines => {
            for r in rows {
                serde_json::to_writer(&mut out, r).map_err(|e| format_err(path, e))?;
                out.write_all(b"\n").map_err(io_err(path))?;
            }
        }
    }
    out.flush().map_err(io_err(path))
}

pub fn emit_results(rows: &[SweepResultRow], format: Format, path: &Path) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::EmptyTable);
    }
    let file = File::create(path).map_err(io_err(path))?;
    write_results(rows, format, file, path)
}

/// Renders rows to a string.
pub fn render_results(rows: &[SweepResultRow], format: Format) -> Result<String> {
    let mut buf = Vec::new();
    write_results(rows, format, &mut buf, Path::new("<memory>"))?;
    String::from_utf8(buf).map_err(|e| format_err(Path::new("<memory>"), e))
}

/// Parses a table written by [`write_results`].
pub fn parse_results<R: Read>(input: R, format: Format, path: &Path) -> Result<Vec<SweepResultRow>> {
    let mut reader = BufReader::new(input);
    let mut first = String::new();
    reader.read_line(&mut first).map_err(io_err(path))?;
    if first.trim_end() != format!("# {SCHEMA}") {
        return Err(format_err(path, format!("expected schema line \"# {SCHEMA}\", got \"{}\"", first.trim_end())));
    }
    match format {
        Format::Csv => csv::Reader::from_reader(reader)
            .deserialize()
            .map(|r| r.map_err(|e| format_err(path, e)))
            .collect(),
        Format::JsonLines => reader
            .lines()
            .filter(|l| !matches!(l, Ok(s) if s.trim().is_empty()))
            .map(|l| {
                let l = l.map_err(io_err(path))?;
                serde_json::from_str(&l).map_err(|e| format_err(path, e))
            })
            .collect(),
    }
}

pub fn read_results(path: &Path, format: Format) -> Result<Vec<SweepResultRow>> {
    let file = File::open(path).map_err(io_err(path))?;
    parse_results(file, format, path)
}
