//! Line-oriented text interchange format for conic programs.
//!
//! ```text
//! CONICDUMP 1
//! vars <N> rows <M>
//! cone <FREE|NONNEG|SOC|PSD> <dim-or-side>
//! ...
//! c
//! <N decimal literals, one per line>
//! A
//! <row> <col> <value>      (one line per nonzero)
//! b
//! <M literals, one per line>
//! ```
//!
//! Floats are written with Rust's shortest round-trip formatting, so a
//! dump/parse cycle reproduces the program bit for bit.

use std::fmt::Write as _;

use thiserror::Error;

use crate::{ConeBlock, ConeSpec, ConicProgram};

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {line}: expected {expected}, got {got:?}")]
    Unexpected {
        line: usize,
        expected: &'static str,
        got: String,
    },
    #[error("line {line}: unknown header {got:?}")]
    UnknownHeader { line: usize, got: String },
    #[error("line {line}: malformed number {got:?}")]
    BadNumber { line: usize, got: String },
    #[error("unexpected end of input while reading {0}")]
    Truncated(&'static str),
    #[error("parsed program is inconsistent: {0}")]
    Inconsistent(#[from] crate::ProgramError),
}

impl ConicProgram {
    /// Serializes the program in the interchange format.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        out.push_str("CONICDUMP 1\n");
        let _ = writeln!(out, "vars {} rows {}", self.num_vars(), self.num_rows());
        for blk in self.cone.blocks() {
            let (name, d) = match *blk {
                ConeBlock::Free(d) => ("FREE", d),
                ConeBlock::NonNeg(d) => ("NONNEG", d),
                ConeBlock::SecondOrder(d) => ("SOC", d),
                ConeBlock::Psd(s) => ("PSD", s),
            };
            let _ = writeln!(out, "cone {} {}", name, d);
        }
        out.push_str("c\n");
        for v in &self.c {
            let _ = writeln!(out, "{}", v);
        }
        out.push_str("A\n");
        for &(r, c, v) in &self.a_triplets {
            let _ = writeln!(out, "{} {} {}", r, c, v);
        }
        out.push_str("b\n");
        for v in &self.b {
            let _ = writeln!(out, "{}", v);
        }
        out
    }

    /// Parses a program from the interchange format. Unknown headers are
    /// rejected.
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let (ln, magic) = lines.next().ok_or(ParseError::Truncated("magic"))?;
        if magic != "CONICDUMP 1" {
            return Err(ParseError::Unexpected {
                line: ln,
                expected: "CONICDUMP 1",
                got: magic.to_string(),
            });
        }
        let (ln, dims) = lines.next().ok_or(ParseError::Truncated("dimensions"))?;
        let parts: Vec<&str> = dims.split_whitespace().collect();
        if parts.len() != 4 || parts[0] != "vars" || parts[2] != "rows" {
            return Err(ParseError::Unexpected {
                line: ln,
                expected: "vars <N> rows <M>",
                got: dims.to_string(),
            });
        }
        let nvars: usize = parts[1].parse().map_err(|_| ParseError::BadNumber {
            line: ln,
            got: parts[1].to_string(),
        })?;
        let nrows: usize = parts[3].parse().map_err(|_| ParseError::BadNumber {
            line: ln,
            got: parts[3].to_string(),
        })?;

        let mut cone = ConeSpec::new();
        let mut c: Vec<f64> = Vec::with_capacity(nvars);
        let mut a: Vec<(usize, usize, f64)> = Vec::new();
        let mut b: Vec<f64> = Vec::with_capacity(nrows);

        #[derive(PartialEq)]
        enum Section {
            Cones,
            C,
            A,
            B,
        }
        let mut section = Section::Cones;
        for (ln, line) in lines {
            let first = line.split_whitespace().next().unwrap_or("");
            match first {
                "cone" if section == Section::Cones => {
                    let parts: Vec<&str> = line.split_whitespace().collect();
                    if parts.len() != 3 {
                        return Err(ParseError::Unexpected {
                            line: ln,
                            expected: "cone <KIND> <dim>",
                            got: line.to_string(),
                        });
                    }
                    let d: usize = parts[2].parse().map_err(|_| ParseError::BadNumber {
                        line: ln,
                        got: parts[2].to_string(),
                    })?;
                    let blk = match parts[1] {
                        "FREE" => ConeBlock::Free(d),
                        "NONNEG" => ConeBlock::NonNeg(d),
                        "SOC" => ConeBlock::SecondOrder(d),
                        "PSD" => ConeBlock::Psd(d),
                        other => {
                            return Err(ParseError::UnknownHeader {
                                line: ln,
                                got: other.to_string(),
                            })
                        }
                    };
                    cone.push(blk);
                }
                "c" if line == "c" => section = Section::C,
                "A" if line == "A" => section = Section::A,
                "b" if line == "b" => section = Section::B,
                _ => match section {
                    Section::Cones => {
                        return Err(ParseError::UnknownHeader {
                            line: ln,
                            got: line.to_string(),
                        })
                    }
                    Section::C => {
                        let v: f64 = line.parse().map_err(|_| ParseError::BadNumber {
                            line: ln,
                            got: line.to_string(),
                        })?;
                        c.push(v);
                    }
                    Section::A => {
                        let parts: Vec<&str> = line.split_whitespace().collect();
                        if parts.len() != 3 {
                            return Err(ParseError::Unexpected {
                                line: ln,
                                expected: "<row> <col> <value>",
                                got: line.to_string(),
                            });
                        }
                        let r: usize = parts[0].parse().map_err(|_| ParseError::BadNumber {
                            line: ln,
                            got: parts[0].to_string(),
                        })?;
                        let col: usize = parts[1].parse().map_err(|_| ParseError::BadNumber {
                            line: ln,
                            got: parts[1].to_string(),
                        })?;
                        let v: f64 = parts[2].parse().map_err(|_| ParseError::BadNumber {
                            line: ln,
                            got: parts[2].to_string(),
                        })?;
                        a.push((r, col, v));
                    }
                    Section::B => {
                        let v: f64 = line.parse().map_err(|_| ParseError::BadNumber {
                            line: ln,
                            got: line.to_string(),
                        })?;
                        b.push(v);
                    }
                },
            }
        }
        if c.len() != nvars {
            return Err(ParseError::Truncated("c section"));
        }
        if b.len() != nrows {
            return Err(ParseError::Truncated("b section"));
        }
        Ok(ConicProgram::new(c, a, b, cone)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ConicProgram {
        let mut cone = ConeSpec::new();
        cone.push(ConeBlock::Free(1));
        cone.push(ConeBlock::Psd(2));
        ConicProgram::new(
            vec![0.25, 1.0, 0.0, 1.0],
            vec![(0, 0, 1.0), (0, 1, -0.5), (1, 3, std::f64::consts::PI)],
            vec![1.0, 2.5e-17],
            cone,
        )
        .unwrap()
    }

    #[test]
    fn dump_parse_roundtrip_exact() {
        let p = sample();
        let q = ConicProgram::parse(&p.dump()).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn empty_program_is_header_only() {
        let p = ConicProgram::new(vec![], vec![], vec![], ConeSpec::new()).unwrap();
        let text = p.dump();
        assert_eq!(text, "CONICDUMP 1\nvars 0 rows 0\nc\nA\nb\n");
        let q = ConicProgram::parse(&text).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn unknown_header_rejected() {
        let text = "CONICDUMP 1\nvars 0 rows 0\nwhatever 3\nc\nA\nb\n";
        assert!(matches!(
            ConicProgram::parse(text),
            Err(ParseError::UnknownHeader { .. })
        ));
        let text2 = "CONICDUMP 2\nvars 0 rows 0\nc\nA\nb\n";
        assert!(ConicProgram::parse(text2).is_err());
    }
}
