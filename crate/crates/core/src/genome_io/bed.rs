use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{is_track_comment, numbered_lines, parse_coord, ParseError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegionKind {
    Promoter,
    Enhancer,
    Exon,
    Intron,
}

impl RegionKind {
    pub const ALL: [RegionKind; 4] = [
        RegionKind::Promoter,
        RegionKind::Enhancer,
        RegionKind::Exon,
        RegionKind::Intron,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RegionKind::Promoter => "promoter",
            RegionKind::Enhancer => "enhancer",
            RegionKind::Exon => "exon",
            RegionKind::Intron => "intron",
        }
    }
}

impl fmt::Display for RegionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RegionKind {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        RegionKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionAnnotation {
    pub contig: String,
    pub start: u64,
    pub end: u64,
    pub kind: RegionKind,
}

/// Parses BED with the region kind in column 4; further columns are ignored.
pub fn parse_bed_regions<R: BufRead>(reader: R) -> Result<Vec<RegionAnnotation>, ParseError> {
    let mut out = Vec::new();
    for item in numbered_lines(reader) {
        let (lineno, line) = item?;
        if is_track_comment(&line) {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() < 4 {
            return Err(ParseError::ColumnCount {
                line: lineno,
                expected: 4,
                found: cols.len(),
            });
        }
        let start = parse_coord(lineno, "start", cols[1])?;
        let end = parse_coord(lineno, "end", cols[2])?;
        if start >= end {
            return Err(ParseError::EmptyInterval {
                line: lineno,
                start,
                end,
            });
        }
        let kind = cols[3]
            .parse::<RegionKind>()
            .map_err(|_| ParseError::UnknownRegionKind {
                line: lineno,
                kind: cols[3].to_string(),
            })?;
        out.push(RegionAnnotation {
            contig: cols[0].to_string(),
            start,
            end,
            kind,
        });
    }
    Ok(out)
}

pub fn write_bed_regions<W: Write>(
    mut out: W,
    regions: &[RegionAnnotation],
) -> std::io::Result<()> {
    for r in regions {
        writeln!(out, "{}\t{}\t{}\t{}", r.contig, r.start, r.end, r.kind)?;
    }
    Ok(())
}
