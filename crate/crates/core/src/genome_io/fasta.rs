use std::collections::HashSet;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{numbered_lines, ParseError};

const LINE_WIDTH: usize = 60;

/// One FASTA record. `bases` is uppercase over `ACGTN`.
///
/// `source_contig`/`source_offset` place the record on a reference contig.
/// They are read from an optional `contig:start` or `contig:start-end` token
/// following the id in the header; without one the record is its own contig
/// starting at 0.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequenceRecord {
    pub id: String,
    pub bases: String,
    pub source_contig: String,
    pub source_offset: u64,
}

impl SequenceRecord {
    /// Record that is a whole contig named by its id.
    pub fn new(id: impl Into<String>, bases: impl Into<String>) -> Self {
        let id = id.into();
        Self {
            source_contig: id.clone(),
            id,
            bases: bases.into(),
            source_offset: 0,
        }
    }

    pub fn with_source(
        id: impl Into<String>,
        bases: impl Into<String>,
        contig: impl Into<String>,
        offset: u64,
    ) -> Self {
        Self {
            id: id.into(),
            bases: bases.into(),
            source_contig: contig.into(),
            source_offset: offset,
        }
    }

    pub fn len(&self) -> usize {
        self.bases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bases.is_empty()
    }
}

fn parse_location(token: &str) -> Option<(String, u64)> {
    let (contig, range) = token.rsplit_once(':')?;
    let start = range.split('-').next()?;
    let offset = start.parse().ok()?;
    (!contig.is_empty()).then(|| (contig.to_string(), offset))
}

/// Parses FASTA text. Lowercase bases are uppercased; anything outside
/// `ACGTN` is rejected with its line number.
pub fn parse_fasta<R: BufRead>(reader: R) -> Result<Vec<SequenceRecord>, ParseError> {
    let mut records: Vec<SequenceRecord> = Vec::new();
    let mut seen = HashSet::new();

    for item in numbered_lines(reader) {
        let (lineno, line) = item?;
        let line = line.trim_end();
        if let Some(header) = line.strip_prefix('>') {
            let mut fields = header.split_whitespace();
            let id = fields
                .next()
                .ok_or(ParseError::EmptyId { line: lineno })?
                .to_string();
            if !seen.insert(id.clone()) {
                return Err(ParseError::DuplicateId { line: lineno, id });
            }
            let (contig, offset) = fields
                .next()
                .and_then(parse_location)
                .unwrap_or_else(|| (id.clone(), 0));
            records.push(SequenceRecord::with_source(id, String::new(), contig, offset));
            continue;
        }
        if line.is_empty() || line.starts_with(';') {
            continue;
        }
        let rec = records
            .last_mut()
            .ok_or(ParseError::MissingHeader { line: lineno })?;
        rec.bases.reserve(line.len());
        for ch in line.chars() {
            let up = ch.to_ascii_uppercase();
            match up {
                'A' | 'C' | 'G' | 'T' | 'N' => rec.bases.push(up),
                _ => return Err(ParseError::IllegalChar { line: lineno, ch }),
            }
        }
    }

    if records.is_empty() {
        return Err(ParseError::Empty);
    }
    Ok(records)
}

pub fn write_fasta<W: Write>(mut out: W, records: &[SequenceRecord]) -> std::io::Result<()> {
    for rec in records {
        if rec.source_contig == rec.id && rec.source_offset == 0 {
            writeln!(out, ">{}", rec.id)?;
        } else {
            writeln!(
                out,
                ">{} {}:{}-{}",
                rec.id,
                rec.source_contig,
                rec.source_offset,
                rec.source_offset + rec.bases.len() as u64
            )?;
        }
        for chunk in rec.bases.as_bytes().chunks(LINE_WIDTH) {
            out.write_all(chunk)?;
            out.write_all(b"\n")?;
        }
    }
    Ok(())
}
