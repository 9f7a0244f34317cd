#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use evolen::genome_io::{
    write_bed_regions, write_bedgraph, write_fasta, write_meme, ConservationTrack, PwmMotif,
    RegionAnnotation, RegionKind, ScoredInterval, SequenceRecord,
};

pub const BASES: [u8; 4] = *b"ACGT";

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_dna(rng: &mut impl Rng, len: usize) -> String {
    (0..len).map(|_| BASES[rng.random_range(0..4)] as char).collect()
}

/// A genome with one contig, per-bin conservation scores and motifs planted
/// only in the conserved bins.
pub struct Synthetic {
    pub genome: Vec<SequenceRecord>,
    pub track: ConservationTrack<f64>,
    pub motifs: Vec<String>,
    pub regions: Vec<RegionAnnotation>,
    /// Bin indices that were generated as conserved / accelerated.
    pub conserved_bins: Vec<usize>,
    pub accelerated_bins: Vec<usize>,
}

pub struct SyntheticSpec {
    pub length: usize,
    pub bin_size: usize,
    pub motif_count: usize,
    pub conserved_fraction: f64,
    pub accelerated_fraction: f64,
    pub copies_per_bin: usize,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            length: 2_000_000,
            bin_size: 100,
            motif_count: 20,
            conserved_fraction: 0.05,
            accelerated_fraction: 0.05,
            copies_per_bin: 5,
        }
    }
}

pub fn synthetic(seed: u64, spec: &SyntheticSpec) -> Synthetic {
    let mut r = rng(seed);
    let motifs: Vec<String> = (0..spec.motif_count)
        .map(|_| {
            let len = r.random_range(6..=12);
            random_dna(&mut r, len)
        })
        .collect();
    let mut bases = random_dna(&mut r, spec.length).into_bytes();
    let nbins = spec.length / spec.bin_size;
    let mut intervals = Vec::with_capacity(nbins);
    let (mut conserved_bins, mut accelerated_bins) = (Vec::new(), Vec::new());
    for b in 0..nbins {
        let start = b * spec.bin_size;
        let roll: f64 = r.random();
        let score = if roll < spec.conserved_fraction {
            conserved_bins.push(b);
            // Non-overlapping copies laid out left to right.
            let mut pos = start;
            for _ in 0..spec.copies_per_bin {
                let m = motifs[r.random_range(0..motifs.len())].as_bytes();
                let gap = r.random_range(0..=4);
                if pos + gap + m.len() > start + spec.bin_size {
                    break;
                }
                pos += gap;
                bases[pos..pos + m.len()].copy_from_slice(m);
                pos += m.len();
            }
            3.0 + r.random_range(-0.3..0.3)
        } else if roll < spec.conserved_fraction + spec.accelerated_fraction {
            accelerated_bins.push(b);
            -3.0 + r.random_range(-0.3..0.3)
        } else {
            r.random_range(-0.3..0.3)
        };
        intervals.push(ScoredInterval {
            start: start as u64,
            end: (start + spec.bin_size) as u64,
            score,
        });
    }
    let mut contigs = BTreeMap::new();
    contigs.insert("chr1".to_string(), intervals);

    // Alternating region blocks; intron dominates so the background is never
    // empty.
    let mut regions = Vec::new();
    let block = 10 * spec.bin_size;
    let kinds = [
        RegionKind::Promoter,
        RegionKind::Intron,
        RegionKind::Exon,
        RegionKind::Intron,
        RegionKind::Enhancer,
        RegionKind::Intron,
    ];
    for (k, start) in (0..spec.length).step_by(block).enumerate() {
        regions.push(RegionAnnotation {
            contig: "chr1".into(),
            start: start as u64,
            end: (start + block).min(spec.length) as u64,
            kind: kinds[k % kinds.len()],
        });
    }

    Synthetic {
        genome: vec![SequenceRecord::new(
            "chr1",
            String::from_utf8(bases).unwrap(),
        )],
        track: ConservationTrack::from_sorted(contigs),
        motifs,
        regions,
        conserved_bins,
        accelerated_bins,
    }
}

/// One-hot PWM spelling `seq`.
pub fn one_hot_pwm(name: &str, seq: &str) -> PwmMotif<f64> {
    PwmMotif {
        name: name.to_string(),
        alt_name: None,
        rows: seq
            .bytes()
            .map(|b| {
                let mut row = [0.0; 4];
                row[BASES.iter().position(|&x| x == b).unwrap()] = 1.0;
                row
            })
            .collect(),
    }
}

pub struct InputFiles {
    pub fasta: PathBuf,
    pub phylop: PathBuf,
    pub regions: PathBuf,
    pub motifs: PathBuf,
}

pub fn write_inputs(dir: &Path, s: &Synthetic) -> InputFiles {
    let files = InputFiles {
        fasta: dir.join("genome.fa"),
        phylop: dir.join("phylop.bedGraph"),
        regions: dir.join("regions.bed"),
        motifs: dir.join("motifs.meme"),
    };
    write_fasta(BufWriter::new(File::create(&files.fasta).unwrap()), &s.genome).unwrap();
    write_bedgraph(BufWriter::new(File::create(&files.phylop).unwrap()), &s.track).unwrap();
    write_bed_regions(BufWriter::new(File::create(&files.regions).unwrap()), &s.regions).unwrap();
    let pwms: Vec<_> = s
        .motifs
        .iter()
        .enumerate()
        .map(|(i, m)| one_hot_pwm(&format!("M{i}"), m))
        .collect();
    write_meme(BufWriter::new(File::create(&files.motifs).unwrap()), &pwms).unwrap();
    files
}
