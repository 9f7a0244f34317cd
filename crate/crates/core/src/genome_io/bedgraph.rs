use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use crate::scalar::Scalar;

use super::{is_track_comment, numbered_lines, parse_coord, ParseError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredInterval<S> {
    pub start: u64,
    pub end: u64,
    pub score: S,
}

/// Per-base conservation scores as disjoint, start-sorted intervals per
/// contig. Positions not covered by any interval score zero.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConservationTrack<S> {
    contigs: BTreeMap<String, Vec<ScoredInterval<S>>>,
}

impl<S: Scalar> ConservationTrack<S> {
    pub fn new() -> Self {
        Self {
            contigs: BTreeMap::new(),
        }
    }

    /// Builds a track from intervals that are already sorted and disjoint.
    /// Panics if they are not.
    pub fn from_sorted(contigs: BTreeMap<String, Vec<ScoredInterval<S>>>) -> Self {
        for ivs in contigs.values() {
            assert!(ivs.iter().all(|iv| iv.start < iv.end));
            assert!(ivs.windows(2).all(|w| w[0].end <= w[1].start));
        }
        Self { contigs }
    }

    pub fn has_contig(&self, contig: &str) -> bool {
        self.contigs.contains_key(contig)
    }

    pub fn contigs(&self) -> impl Iterator<Item = (&str, &[ScoredInterval<S>])> {
        self.contigs.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    pub fn interval_count(&self) -> usize {
        self.contigs.values().map(Vec::len).sum()
    }

    /// Score at one position, `0` where uncovered.
    pub fn score_at(&self, contig: &str, pos: u64) -> S {
        let Some(ivs) = self.contigs.get(contig) else {
            return S::zero();
        };
        let idx = ivs.partition_point(|iv| iv.end <= pos);
        match ivs.get(idx) {
            Some(iv) if iv.start <= pos => iv.score,
            _ => S::zero(),
        }
    }

    /// Appends the per-base scores of `[start, end)` to `out`.
    pub fn fill_scores(&self, contig: &str, start: u64, end: u64, out: &mut Vec<S>) {
        let len = end.saturating_sub(start) as usize;
        let base = out.len();
        out.resize(base + len, S::zero());
        let Some(ivs) = self.contigs.get(contig) else {
            return;
        };
        let first = ivs.partition_point(|iv| iv.end <= start);
        for iv in &ivs[first..] {
            if iv.start >= end {
                break;
            }
            let lo = iv.start.max(start);
            let hi = iv.end.min(end);
            for v in &mut out[base + (lo - start) as usize..base + (hi - start) as usize] {
                *v = iv.score;
            }
        }
    }
}

/// Parses 4-column bedGraph text (`contig start end score`). Header lines
/// (`track`, `browser`, `#`) and blank lines are skipped.
pub fn parse_bedgraph<S: Scalar, R: BufRead>(
    reader: R,
) -> Result<ConservationTrack<S>, ParseError> {
    let mut raw: BTreeMap<String, Vec<(ScoredInterval<S>, usize)>> = BTreeMap::new();

    for item in numbered_lines(reader) {
        let (lineno, line) = item?;
        if is_track_comment(&line) {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 4 {
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
        let score = cols[3]
            .trim()
            .parse::<f64>()
            .ok()
            .filter(|s| s.is_finite())
            .ok_or_else(|| ParseError::InvalidNumber {
                line: lineno,
                field: "score",
                value: cols[3].to_string(),
            })?;
        raw.entry(cols[0].to_string()).or_default().push((
            ScoredInterval {
                start,
                end,
                score: S::lit(score),
            },
            lineno,
        ));
    }

    let mut contigs = BTreeMap::new();
    for (contig, mut ivs) in raw {
        ivs.sort_by_key(|(iv, line)| (iv.start, *line));
        for w in ivs.windows(2) {
            if w[1].0.start < w[0].0.end {
                let (a, b) = (w[0].1, w[1].1);
                return Err(ParseError::Overlap {
                    contig,
                    first: a.min(b),
                    second: a.max(b),
                });
            }
        }
        contigs.insert(contig, ivs.into_iter().map(|(iv, _)| iv).collect());
    }
    Ok(ConservationTrack { contigs })
}

pub fn write_bedgraph<S: Scalar, W: Write>(
    mut out: W,
    track: &ConservationTrack<S>,
) -> std::io::Result<()> {
    for (contig, ivs) in &track.contigs {
        for iv in ivs {
            writeln!(out, "{contig}\t{}\t{}\t{}", iv.start, iv.end, iv.score)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ConservationTrack<f64>, ParseError> {
        parse_bedgraph(text.as_bytes())
    }

    #[test]
    fn single_interval() {
        let t = parse("chr1\t0\t100\t0.5\n").unwrap();
        assert_eq!(t.interval_count(), 1);
        assert_eq!(t.score_at("chr1", 0), 0.5);
        assert_eq!(t.score_at("chr1", 99), 0.5);
    }

    #[test]
    fn overlap_reports_both_lines() {
        match parse("chr1\t0\t10\t1.0\nchr1\t5\t15\t2.0\n") {
            Err(ParseError::Overlap { first, second, .. }) => assert_eq!((first, second), (1, 2)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn uncovered_is_zero() {
        let t = parse("chr1\t10\t20\t3.0\n").unwrap();
        assert_eq!(t.score_at("chr1", 9), 0.0);
        assert_eq!(t.score_at("chr1", 20), 0.0);
        assert_eq!(t.score_at("chrX", 15), 0.0);
    }

    #[test]
    fn bad_rows() {
        assert!(matches!(
            parse("chr1\t0\t10\tabc\n"),
            Err(ParseError::InvalidNumber { field: "score", .. })
        ));
        assert!(matches!(
            parse("chr1\t10\t10\t1\n"),
            Err(ParseError::EmptyInterval { .. })
        ));
        assert!(matches!(
            parse("chr1\t0\t10\n"),
            Err(ParseError::ColumnCount { found: 3, .. })
        ));
    }

    #[test]
    fn unsorted_input_is_sorted_and_filled() {
        let t = parse("track type=bedGraph\nchr1\t5\t8\t2\nchr1\t0\t3\t1\n").unwrap();
        let mut out = Vec::new();
        t.fill_scores("chr1", 1, 9, &mut out);
        assert_eq!(out, vec![1.0, 1.0, 0.0, 0.0, 2.0, 2.0, 2.0, 0.0]);

        let mut buf = Vec::new();
        write_bedgraph(&mut buf, &t).unwrap();
        assert_eq!(parse_bedgraph::<f64, _>(buf.as_slice()).unwrap(), t);
    }
}
