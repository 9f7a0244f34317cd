use std::collections::BTreeMap;

use proptest::collection::{btree_map, vec};
use proptest::prelude::*;

use evolen::genome_io::{
    parse_bed_regions, parse_bedgraph, parse_fasta, parse_meme, write_bed_regions, write_bedgraph,
    write_fasta, write_meme, ConservationTrack, PwmMotif, RegionAnnotation, RegionKind,
    ScoredInterval, SequenceRecord,
};

fn records() -> impl Strategy<Value = Vec<SequenceRecord>> {
    btree_map("[A-Za-z0-9_.]{1,12}", ("[ACGTN]{0,300}", any::<bool>(), 0u64..1_000_000), 1..6)
        .prop_map(|m| {
            m.into_iter()
                .map(|(id, (bases, located, offset))| {
                    if located {
                        SequenceRecord::with_source(id, bases, "chrX", offset)
                    } else {
                        SequenceRecord::new(id, bases)
                    }
                })
                .collect()
        })
}

fn track() -> impl Strategy<Value = ConservationTrack<f64>> {
    btree_map(
        "chr[0-9A-Z]{1,3}",
        vec((0u64..50, 1u64..200, -20.0f64..20.0), 1..30),
        1..4,
    )
    .prop_map(|m| {
        let contigs: BTreeMap<String, Vec<ScoredInterval<f64>>> = m
            .into_iter()
            .map(|(name, parts)| {
                let mut pos = 0;
                let ivs = parts
                    .into_iter()
                    .map(|(gap, len, score)| {
                        let start = pos + gap;
                        pos = start + len;
                        ScoredInterval {
                            start,
                            end: pos,
                            score,
                        }
                    })
                    .collect();
                (name, ivs)
            })
            .collect();
        ConservationTrack::from_sorted(contigs)
    })
}

fn motifs() -> impl Strategy<Value = Vec<PwmMotif<f64>>> {
    let row = vec(0.01f64..1.0, 4).prop_map(|w| {
        let s: f64 = w.iter().sum();
        let mut r = [w[0] / s, w[1] / s, w[2] / s, 0.0];
        r[3] = 1.0 - r[0] - r[1] - r[2];
        r
    });
    vec(
        ("MA[0-9]{4}\\.[0-9]", proptest::option::of("[A-Za-z0-9]{1,8}"), vec(row, 1..15)),
        1..8,
    )
    .prop_map(|ms| {
        ms.into_iter()
            .enumerate()
            .map(|(i, (name, alt_name, rows))| PwmMotif {
                name: format!("{name}_{i}"),
                alt_name,
                rows,
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn fasta_roundtrip(recs in records()) {
        let mut buf = Vec::new();
        write_fasta(&mut buf, &recs).unwrap();
        prop_assert_eq!(parse_fasta(buf.as_slice()).unwrap(), recs);
    }

    /// Sequence lines of any width concatenate, in any case.
    #[test]
    fn fasta_lines_concatenate(bases in "[ACGTNacgtn]{1,400}", widths in vec(1usize..90, 1..20)) {
        let mut text = String::from(">s desc text\n");
        let mut rest = bases.as_str();
        let mut k = 0;
        while !rest.is_empty() {
            let w = widths[k % widths.len()].min(rest.len());
            text.push_str(&rest[..w]);
            text.push_str(if k % 3 == 0 { "\r\n" } else { "\n" });
            rest = &rest[w..];
            k += 1;
        }
        let recs = parse_fasta(text.as_bytes()).unwrap();
        prop_assert_eq!(recs.len(), 1);
        prop_assert_eq!(&recs[0].bases, &bases.to_ascii_uppercase());
    }

    #[test]
    fn bedgraph_roundtrip(t in track()) {
        let mut buf = Vec::new();
        write_bedgraph(&mut buf, &t).unwrap();
        prop_assert_eq!(parse_bedgraph::<f64, _>(buf.as_slice()).unwrap(), t);
    }

    /// Input order of non-overlapping intervals does not matter.
    #[test]
    fn bedgraph_order_invariant(t in track(), seed in any::<u64>()) {
        let mut lines: Vec<String> = Vec::new();
        for (contig, ivs) in t.contigs() {
            for iv in ivs {
                lines.push(format!("{contig}\t{}\t{}\t{}", iv.start, iv.end, iv.score));
            }
        }
        let n = lines.len();
        for i in 0..n {
            let j = (seed as usize).wrapping_mul(i + 7) % n;
            lines.swap(i, j);
        }
        let text = format!("track type=bedGraph\n{}\n", lines.join("\n"));
        prop_assert_eq!(parse_bedgraph::<f64, _>(text.as_bytes()).unwrap(), t);
    }

    #[test]
    fn bed_roundtrip(rs in vec(("chr[0-9]{1,2}", 0u64..1_000_000, 1u64..5000, 0usize..4), 1..40)) {
        let regions: Vec<RegionAnnotation> = rs
            .into_iter()
            .map(|(contig, start, len, k)| RegionAnnotation {
                contig,
                start,
                end: start + len,
                kind: RegionKind::ALL[k],
            })
            .collect();
        let mut buf = Vec::new();
        write_bed_regions(&mut buf, &regions).unwrap();
        prop_assert_eq!(parse_bed_regions(buf.as_slice()).unwrap(), regions);
    }

    #[test]
    fn meme_roundtrip(ms in motifs()) {
        let mut buf = Vec::new();
        write_meme(&mut buf, &ms).unwrap();
        let back: Vec<PwmMotif<f64>> = parse_meme(buf.as_slice()).unwrap();
        prop_assert_eq!(back.len(), ms.len());
        for (a, b) in back.iter().zip(&ms) {
            prop_assert_eq!(&a.name, &b.name);
            prop_assert_eq!(&a.alt_name, &b.alt_name);
            prop_assert_eq!(a.width(), b.width());
            for (ra, rb) in a.rows.iter().zip(&b.rows) {
                for k in 0..4 {
                    prop_assert!((ra[k] - rb[k]).abs() < 1e-12);
                }
            }
        }
    }
}

#[test]
fn f32_track_parses() {
    let t: ConservationTrack<f32> = parse_bedgraph("c\t0\t10\t0.5\nc\t10\t20\t-1.25\n".as_bytes()).unwrap();
    assert_eq!(t.score_at("c", 5), 0.5f32);
    assert_eq!(t.score_at("c", 15), -1.25f32);
    assert_eq!(t.score_at("c", 25), 0.0f32);
}

#[test]
fn parse_errors_carry_line_numbers() {
    let e = parse_fasta(">a\nACGT\nACXT\n".as_bytes()).unwrap_err();
    assert!(e.to_string().contains('3'), "{e}");
    let e = parse_bedgraph::<f64, _>("c\t0\t10\t1\nc\t5\t15\t1\n".as_bytes()).unwrap_err();
    assert!(e.to_string().contains('1') && e.to_string().contains('2'), "{e}");
    let e = parse_bed_regions("c\t0\t10\tsilencer\n".as_bytes()).unwrap_err();
    assert!(e.to_string().contains("silencer"), "{e}");
}
