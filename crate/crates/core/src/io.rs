//! Plain-text output formats.
//!
//! CSV files have a header row, `\n` line endings and floats written with 17
//! significant digits, so rerunning with the same seed reproduces them byte
//! for byte. Sequence files hold one line of comma-separated action ids.

use std::fmt::Write as _;
use std::path::Path;

use crate::dynamics::NUM_ACTIONS;
use crate::error::{Error, Result};

/// One CSV cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell<'a> {
    Int(u64),
    Float(f64),
    Text(&'a str),
}

impl From<usize> for Cell<'_> {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<u64> for Cell<'_> {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<f64> for Cell<'_> {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl<'a> From<&'a str> for Cell<'a> {
    fn from(v: &'a str) -> Self {
        Cell::Text(v)
    }
}

/// Scientific notation with 17 significant digits; parses back to the same bits.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Accumulates a CSV document in memory.
#[derive(Debug, Clone)]
pub struct Csv {
    columns: usize,
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut text = header.join(",");
        text.push('\n');
        Self {
            columns: header.len(),
            text,
        }
    }

    pub fn row(&mut self, cells: &[Cell<'_>]) {
        assert_eq!(cells.len(), self.columns, "row width differs from header");
        for (i, cell) in cells.iter().enumerate() {
            if i > 0 {
                self.text.push(',');
            }
            match cell {
                Cell::Int(v) => write!(self.text, "{v}").unwrap(),
                Cell::Float(v) => self.text.push_str(&format_float(*v)),
                Cell::Text(s) => self.text.push_str(s),
            }
        }
        self.text.push('\n');
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, &self.text)?;
        Ok(())
    }
}

/// `t,P` rows.
pub fn profile_csv(points: &[(f64, f64)]) -> Csv {
    let mut csv = Csv::new(&["t", "P"]);
    for &(t, p) in points {
        csv.row(&[t.into(), p.into()]);
    }
    csv
}

pub fn format_sequence(seq: &[usize]) -> String {
    let ids: Vec<String> = seq.iter().map(usize::to_string).collect();
    format!("{}\n", ids.join(","))
}

/// Parses comma-separated action ids; surrounding whitespace is ignored.
pub fn parse_sequence(text: &str) -> Result<Vec<usize>> {
    let text = text.trim();
    if text.is_empty() {
        return Ok(Vec::new());
    }
    text.split(',')
        .map(|token| {
            let token = token.trim();
            match token.parse::<usize>() {
                Ok(id) if id < NUM_ACTIONS => Ok(id),
                _ => Err(Error::Parse(format!(
                    "invalid action id {token:?}; expected an integer in 0..{NUM_ACTIONS}"
                ))),
            }
        })
        .collect()
}

pub fn write_sequence(path: &Path, seq: &[usize]) -> Result<()> {
    std::fs::write(path, format_sequence(seq))?;
    Ok(())
}

pub fn read_sequence(path: &Path) -> Result<Vec<usize>> {
    parse_sequence(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn csv_layout() {
        let mut csv = Csv::new(&["a", "b", "c"]);
        csv.row(&[3usize.into(), 0.1.into(), "ga".into()]);
        assert_eq!(csv.as_str(), "a,b,c\n3,1.0000000000000001e-1,ga\n");
    }

    #[test]
    fn sequence_errors_name_the_token() {
        for (text, token) in [("1,2,x", "\"x\""), ("1,16", "\"16\""), ("1,,2", "\"\""), ("-1", "\"-1\"")] {
            match parse_sequence(text) {
                Err(Error::Parse(msg)) => assert!(msg.contains(token), "{msg}"),
                other => panic!("{text}: {other:?}"),
            }
        }
        assert_eq!(parse_sequence(" \n").unwrap(), Vec::<usize>::new());
        assert_eq!(parse_sequence(" 0, 15 \n").unwrap(), vec![0, 15]);
    }

    proptest! {
        #[test]
        fn floats_round_trip(x in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
            prop_assert_eq!(format_float(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }

        #[test]
        fn sequences_round_trip(seq in proptest::collection::vec(0usize..16, 0..50)) {
            prop_assert_eq!(parse_sequence(&format_sequence(&seq)).unwrap(), seq);
        }
    }
}
