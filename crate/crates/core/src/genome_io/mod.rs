//! Readers and writers for the text formats the toolkit consumes: FASTA
//! sequences, bedGraph conservation tracks, BED region annotations and MEME
//! minimal motif libraries. All coordinates are 0-based half-open.

mod bed;
mod bedgraph;
mod fasta;
mod meme;

use thiserror::Error;

pub use bed::{parse_bed_regions, write_bed_regions, RegionAnnotation, RegionKind};
pub use bedgraph::{parse_bedgraph, write_bedgraph, ConservationTrack, ScoredInterval};
pub use fasta::{parse_fasta, write_fasta, SequenceRecord};
pub use meme::{parse_meme, write_meme, PwmMotif};

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("input contains no records")]
    Empty,
    #[error("line {line}: sequence data before the first `>` header")]
    MissingHeader { line: usize },
    #[error("line {line}: header has no identifier")]
    EmptyId { line: usize },
    #[error("line {line}: duplicate sequence id `{id}`")]
    DuplicateId { line: usize, id: String },
    #[error("line {line}: illegal character {ch:?} in sequence")]
    IllegalChar { line: usize, ch: char },
    #[error("line {line}: expected {expected} columns, found {found}")]
    ColumnCount {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: invalid {field} `{value}`")]
    InvalidNumber {
        line: usize,
        field: &'static str,
        value: String,
    },
    #[error("line {line}: interval start {start} is not below end {end}")]
    EmptyInterval { line: usize, start: u64, end: u64 },
    #[error("{contig}: interval on line {second} overlaps interval on line {first}")]
    Overlap {
        contig: String,
        first: usize,
        second: usize,
    },
    #[error("line {line}: unknown region kind `{kind}`")]
    UnknownRegionKind { line: usize, kind: String },
    #[error("line {line}: malformed matrix header")]
    MatrixHeader { line: usize },
    #[error("motif `{motif}`: declared width {declared} but found {found} rows")]
    RowCount {
        motif: String,
        declared: usize,
        found: usize,
    },
    #[error("line {line}: probability {value} outside [0, 1]")]
    ProbabilityRange { line: usize, value: f64 },
    #[error("line {line}: row sums to {sum}, more than 1e-3 away from 1")]
    RowSum { line: usize, sum: f64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Lines of a text stream paired with their 1-based line numbers.
fn numbered_lines<R: std::io::BufRead>(
    reader: R,
) -> impl Iterator<Item = Result<(usize, String), ParseError>> {
    reader
        .lines()
        .enumerate()
        .map(|(i, l)| l.map(|l| (i + 1, l)).map_err(ParseError::from))
}

fn is_track_comment(line: &str) -> bool {
    let t = line.trim_start();
    t.is_empty() || t.starts_with('#') || t.starts_with("track") || t.starts_with("browser")
}

fn parse_coord(line: usize, field: &'static str, value: &str) -> Result<u64, ParseError> {
    value.trim().parse::<u64>().map_err(|_| ParseError::InvalidNumber {
        line,
        field,
        value: value.to_string(),
    })
}
