//! Plain-text format for finite control families.
//!
//! ```text
//! d=1 R=1.5
//! 0.5  1
//! 0.5 -1
//!
//! 0.5  0.125
//! 0.5 -0.125
//! ```
//!
//! The header fixes the dimension and the shared radius bound. Each block of
//! non-blank lines is one measure, one atom per line as `weight x1 .. xd`.
//! Lines starting with `#` are ignored.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use super::{Atom, DiscreteMeasure, FiniteFamily};
use crate::error::{Error, Result};

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

fn parse_header(line_no: usize, line: &str) -> Result<(usize, f64)> {
    let mut dim = None;
    let mut radius = None;
    for token in line.split_whitespace() {
        let (key, value) = token
            .split_once('=')
            .ok_or_else(|| parse_err(line_no, format!("expected key=value, found `{token}`")))?;
        match key {
            "d" => {
                let d: usize = value
                    .parse()
                    .map_err(|_| parse_err(line_no, format!("bad dimension `{value}`")))?;
                if d == 0 {
                    return Err(parse_err(line_no, "dimension must be positive"));
                }
                dim = Some(d);
            }
            "R" => {
                radius = Some(
                    value
                        .parse::<f64>()
                        .map_err(|_| parse_err(line_no, format!("bad radius `{value}`")))?,
                );
            }
            other => return Err(parse_err(line_no, format!("unknown header key `{other}`"))),
        }
    }
    match (dim, radius) {
        (Some(d), Some(r)) => Ok((d, r)),
        _ => Err(parse_err(line_no, "header must provide d=<int> R=<float>")),
    }
}

/// Parses the text format. Errors carry the 1-based line number.
pub fn parse_family(text: &str) -> Result<FiniteFamily> {
    let mut header = None;
    let mut measures = Vec::new();
    let mut block: Vec<Atom> = Vec::new();
    let mut block_start = 0;

    let mut flush = |block: &mut Vec<Atom>, start: usize, dim: usize, radius: f64| -> Result<()> {
        if block.is_empty() {
            return Ok(());
        }
        let atoms = core::mem::take(block);
        let mu = DiscreteMeasure::new(dim, radius, atoms).map_err(|e| match e {
            Error::InvalidMeasure(msg) => parse_err(start, format!("measure starting here: {msg}")),
            other => parse_err(start, other.to_string()),
        })?;
        measures.push(mu);
        Ok(())
    };

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.starts_with('#') {
            continue;
        }
        let Some((dim, radius)) = header else {
            if line.is_empty() {
                continue;
            }
            header = Some(parse_header(line_no, line)?);
            continue;
        };
        if line.is_empty() {
            flush(&mut block, block_start, dim, radius)?;
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != dim + 1 {
            return Err(parse_err(
                line_no,
                format!("expected weight and {dim} coordinates, found {} fields", fields.len()),
            ));
        }
        let mut nums = Vec::with_capacity(fields.len());
        for f in &fields {
            nums.push(f.parse::<f64>().map_err(|_| parse_err(line_no, format!("bad number `{f}`")))?);
        }
        if block.is_empty() {
            block_start = line_no;
        }
        block.push(Atom::new(nums[1..].to_vec(), nums[0]));
    }
    let (dim, radius) = header.ok_or_else(|| parse_err(1, "missing header line"))?;
    flush(&mut block, block_start, dim, radius)?;
    if measures.is_empty() {
        return Err(parse_err(text.lines().count().max(1), "family has no measures"));
    }
    FiniteFamily::new(measures)
}

/// Writes a family in the text format, with round-trip exact numbers.
pub fn format_family(family: &FiniteFamily) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "d={} R={:?}", family.dim(), family.radius());
    for (k, mu) in family.measures().iter().enumerate() {
        if k > 0 {
            out.push('\n');
        }
        for atom in mu.atoms() {
            let _ = write!(out, "{:?}", atom.weight);
            for x in &atom.point {
                let _ = write!(out, " {x:?}");
            }
            out.push('\n');
        }
    }
    out
}
