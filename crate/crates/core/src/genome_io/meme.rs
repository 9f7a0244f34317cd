use std::io::{BufRead, Write};

use crate::scalar::Scalar;

use super::{numbered_lines, ParseError};

/// Rows further than this from summing to one are rejected.
const ROW_SUM_REJECT: f64 = 1e-3;
/// Rows within this distance are taken as they are.
const ROW_SUM_EXACT: f64 = 1e-6;

/// Position weight matrix; each row holds probabilities for `A C G T`.
#[derive(Debug, Clone, PartialEq)]
pub struct PwmMotif<S> {
    pub name: String,
    pub alt_name: Option<String>,
    pub rows: Vec<[S; 4]>,
}

impl<S: Scalar> PwmMotif<S> {
    pub fn width(&self) -> usize {
        self.rows.len()
    }
}

struct Pending<S> {
    name: String,
    alt_name: Option<String>,
    width: Option<usize>,
    rows: Vec<[S; 4]>,
}

impl<S: Scalar> Pending<S> {
    fn finish(self) -> Result<PwmMotif<S>, ParseError> {
        let declared = self.width.unwrap_or(0);
        if self.width.is_none() || self.rows.len() != declared {
            return Err(ParseError::RowCount {
                motif: self.name,
                declared,
                found: self.rows.len(),
            });
        }
        Ok(PwmMotif {
            name: self.name,
            alt_name: self.alt_name,
            rows: self.rows,
        })
    }
}

fn parse_width(line: &str) -> Option<usize> {
    let (_, rest) = line.split_once("w=")?;
    rest.split_whitespace().next()?.parse().ok()
}

fn parse_row(line: &str) -> Option<[f64; 4]> {
    let vals: Vec<f64> = line
        .split_whitespace()
        .map(str::parse)
        .collect::<Result<_, _>>()
        .ok()?;
    <[f64; 4]>::try_from(vals).ok()
}

fn validate_row<S: Scalar>(lineno: usize, row: [f64; 4]) -> Result<[S; 4], ParseError> {
    if let Some(&value) = row.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(ParseError::ProbabilityRange {
            line: lineno,
            value,
        });
    }
    let sum: f64 = row.iter().sum();
    let dev = (sum - 1.0).abs();
    if dev > ROW_SUM_REJECT {
        return Err(ParseError::RowSum { line: lineno, sum });
    }
    let scale = if dev > ROW_SUM_EXACT { sum } else { 1.0 };
    Ok(row.map(|p| S::lit(p / scale)))
}

/// Parses the MEME minimal motif format. Only `MOTIF` headers,
/// `letter-probability matrix:` lines (for `w=`) and matrix rows are
/// interpreted; everything else is skipped.
pub fn parse_meme<S: Scalar, R: BufRead>(reader: R) -> Result<Vec<PwmMotif<S>>, ParseError> {
    let mut motifs = Vec::new();
    let mut cur: Option<Pending<S>> = None;
    // Rows are only read directly after a matrix header.
    let mut in_matrix = false;

    for item in numbered_lines(reader) {
        let (lineno, line) = item?;
        let trimmed = line.trim();
        if let Some(rest) = trimmed.strip_prefix("MOTIF") {
            if let Some(p) = cur.take() {
                motifs.push(p.finish()?);
            }
            let mut names = rest.split_whitespace();
            let name = names.next().ok_or(ParseError::MatrixHeader { line: lineno })?;
            cur = Some(Pending {
                name: name.to_string(),
                alt_name: names.next().map(str::to_string),
                width: None,
                rows: Vec::new(),
            });
            in_matrix = false;
            continue;
        }
        let Some(p) = cur.as_mut() else { continue };
        if trimmed.starts_with("letter-probability matrix") {
            p.width = Some(parse_width(trimmed).ok_or(ParseError::MatrixHeader { line: lineno })?);
            p.rows.clear();
            in_matrix = true;
            continue;
        }
        if !in_matrix || trimmed.is_empty() {
            continue;
        }
        match parse_row(trimmed) {
            Some(row) => {
                if p.rows.len() == p.width.unwrap_or(0) {
                    return Err(ParseError::RowCount {
                        motif: p.name.clone(),
                        declared: p.rows.len(),
                        found: p.rows.len() + 1,
                    });
                }
                p.rows.push(validate_row(lineno, row)?);
            }
            None => in_matrix = false,
        }
    }
    if let Some(p) = cur.take() {
        motifs.push(p.finish()?);
    }
    Ok(motifs)
}

pub fn write_meme<S: Scalar, W: Write>(mut out: W, motifs: &[PwmMotif<S>]) -> std::io::Result<()> {
    writeln!(out, "MEME version 4\n\nALPHABET= ACGT\n\nstrands: + -\n")?;
    for m in motifs {
        match &m.alt_name {
            Some(alt) => writeln!(out, "MOTIF {} {alt}", m.name)?,
            None => writeln!(out, "MOTIF {}", m.name)?,
        }
        writeln!(out, "letter-probability matrix: alength= 4 w= {}", m.rows.len())?;
        for r in &m.rows {
            writeln!(out, " {}\t{}\t{}\t{}", r[0], r[1], r[2], r[3])?;
        }
        writeln!(out)?;
    }
    Ok(())
}
