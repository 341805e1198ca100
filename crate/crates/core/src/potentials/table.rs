//! Plain-text two-column tables.
//!
//! ```text
//! # comments start with '#'
//! units: angstrom cm-1
//! 3.0   1520.4
//! 3.1   1210.9
//! ```
//!
//! The `units:` header is optional (atomic units are assumed without it) and
//! must precede the data. Values are converted to atomic units on load.

use std::path::Path;

use crate::error::{Error, Result};
use crate::units::{LengthUnit, ValueUnit};

/// What the second column holds; restricts the admissible value units.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TableKind {
    Potential,
    Dipole,
}

/// Parsed table in atomic units.
#[derive(Clone, Debug, PartialEq)]
pub struct RawTable {
    pub r: Vec<f64>,
    pub values: Vec<f64>,
}

pub const MIN_TABLE_POINTS: usize = 4;

pub fn parse_table(text: &str, kind: TableKind, source_name: &str) -> Result<RawTable> {
    let err = |line: usize, message: String| Error::Parse {
        source_name: source_name.to_string(),
        line,
        message,
    };
    let mut length = LengthUnit::Bohr;
    let mut value_unit = ValueUnit::Atomic;
    let mut header_seen = false;
    let mut r = Vec::new();
    let mut values = Vec::new();

    for (index, raw) in text.lines().enumerate() {
        let line_no = index + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("units:") {
            if header_seen || !r.is_empty() {
                return Err(err(line_no, "units header must appear once, before the data".into()));
            }
            let fields: Vec<&str> = rest.split_whitespace().collect();
            if fields.len() != 2 {
                return Err(err(line_no, "expected `units: <R-unit> <value-unit>`".into()));
            }
            length = LengthUnit::parse(fields[0])
                .ok_or_else(|| err(line_no, format!("unknown length unit `{}`", fields[0])))?;
            value_unit = ValueUnit::parse(fields[1])
                .ok_or_else(|| err(line_no, format!("unknown value unit `{}`", fields[1])))?;
            let admissible = match kind {
                TableKind::Potential => value_unit.is_energy(),
                TableKind::Dipole => value_unit.is_dipole(),
            };
            if !admissible {
                return Err(err(
                    line_no,
                    format!("unit `{}` does not fit a {kind:?} table", fields[1]),
                ));
            }
            header_seen = true;
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(err(line_no, format!("expected two columns, found {}", fields.len())));
        }
        let parse = |s: &str| {
            s.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| err(line_no, format!("`{s}` is not a finite number")))
        };
        let x = parse(fields[0])? * length.to_bohr();
        let y = parse(fields[1])? * value_unit.to_atomic();
        if let Some(&last) = r.last() {
            if x <= last {
                return Err(err(line_no, format!("R must increase strictly ({x} after {last} bohr)")));
            }
        }
        r.push(x);
        values.push(y);
    }
    if r.len() < MIN_TABLE_POINTS {
        return Err(err(
            text.lines().count(),
            format!("need at least {MIN_TABLE_POINTS} data rows, found {}", r.len()),
        ));
    }
    Ok(RawTable { r, values })
}

pub fn read_table(path: &Path, kind: TableKind) -> Result<RawTable> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_table(&text, kind, &path.display().to_string())
}
