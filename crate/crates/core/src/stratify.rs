//! Evolutionary stratification: fixed-size bin means of a conservation
//! track, a global two-tailed z-score rule, and the resulting sequence pools.

use std::fmt;
use std::str::FromStr;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::genome_io::{ConservationTrack, SequenceRecord};
use crate::scalar::{self, Scalar};

pub const DEFAULT_BIN_SIZE: usize = 100;
pub const DEFAULT_Z: f64 = 1.645;

#[derive(Debug, Error, PartialEq)]
pub enum StratifyError {
    #[error("no complete bins to classify")]
    NoBins,
    #[error("z threshold must be positive and finite, got {0}")]
    InvalidZ(f64),
    #[error("bin size must be at least 1")]
    InvalidBinSize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Conserved,
    Neutral,
    Accelerated,
}

impl Category {
    pub const ALL: [Category; 3] = [
        Category::Conserved,
        Category::Neutral,
        Category::Accelerated,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Conserved => "conserved",
            Category::Neutral => "neutral",
            Category::Accelerated => "accelerated",
        }
    }

    /// Three-letter label used for vocabulary files and CLI flags.
    pub fn short(self) -> &'static str {
        match self {
            Category::Conserved => "con",
            Category::Neutral => "neu",
            Category::Accelerated => "acc",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Category::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(s) || c.short().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown category `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StratificationParams<S> {
    pub z: S,
    pub bin_size: usize,
}

impl<S: Scalar> Default for StratificationParams<S> {
    fn default() -> Self {
        Self {
            z: S::lit(DEFAULT_Z),
            bin_size: DEFAULT_BIN_SIZE,
        }
    }
}

impl<S: Scalar> StratificationParams<S> {
    pub fn validate(&self) -> Result<(), StratifyError> {
        if !(self.z > S::zero() && self.z.is_finite()) {
            return Err(StratifyError::InvalidZ(self.z.as_f64()));
        }
        if self.bin_size == 0 {
            return Err(StratifyError::InvalidBinSize);
        }
        Ok(())
    }
}

/// One complete bin of a genome record.
#[derive(Debug, Clone, PartialEq)]
pub struct Bin<S> {
    /// Index of the record in the genome list.
    pub record: usize,
    /// Bin number within the record.
    pub index: usize,
    /// Position of the first base on the record's source contig.
    pub start: u64,
    pub mean: S,
}

/// Bin means in canonical order: genome record order, then bin index.
#[derive(Debug, Clone, PartialEq)]
pub struct BinnedTrack<S> {
    pub bin_size: usize,
    pub bins: Vec<Bin<S>>,
}

impl<S> BinnedTrack<S> {
    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    /// Bases of a bin, borrowed from the genome it was built from.
    pub fn bases<'g>(&self, genome: &'g [SequenceRecord], bin: &Bin<S>) -> &'g str {
        let lo = bin.index * self.bin_size;
        &genome[bin.record].bases[lo..lo + self.bin_size]
    }
}

/// Averages the track over consecutive `bin_size` windows of every genome
/// record. Trailing partial windows are dropped and uncovered bases count
/// as zero.
pub fn bin_track<S: Scalar>(
    genome: &[SequenceRecord],
    track: &ConservationTrack<S>,
    bin_size: usize,
) -> BinnedTrack<S> {
    assert!(bin_size > 0, "bin size must be positive");
    for rec in genome {
        if !track.has_contig(&rec.source_contig) {
            warn!(
                "contig `{}` (record `{}`) has no conservation scores; treating as uncovered",
                rec.source_contig, rec.id
            );
        }
    }
    let width = S::from_count(bin_size as u64);
    let per_record: Vec<Vec<Bin<S>>> = genome
        .par_iter()
        .enumerate()
        .map(|(ri, rec)| {
            let n_bins = rec.len() / bin_size;
            let mut scores = Vec::with_capacity(n_bins * bin_size);
            track.fill_scores(
                &rec.source_contig,
                rec.source_offset,
                rec.source_offset + (n_bins * bin_size) as u64,
                &mut scores,
            );
            scores
                .chunks_exact(bin_size)
                .enumerate()
                .map(|(bi, chunk)| Bin {
                    record: ri,
                    index: bi,
                    start: rec.source_offset + (bi * bin_size) as u64,
                    mean: chunk.iter().copied().sum::<S>() / width,
                })
                .collect()
        })
        .collect();
    BinnedTrack {
        bin_size,
        bins: per_record.into_iter().flatten().collect(),
    }
}

/// Per-bin categories with the statistics that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct Stratification<S> {
    pub mu: S,
    pub sigma: S,
    pub z: S,
    /// Aligned with `BinnedTrack::bins`.
    pub categories: Vec<Category>,
}

impl<S: Scalar> Stratification<S> {
    pub fn upper(&self) -> S {
        self.mu + self.z * self.sigma
    }

    pub fn lower(&self) -> S {
        self.mu - self.z * self.sigma
    }

    pub fn counts(&self) -> [usize; 3] {
        let mut c = [0; 3];
        for cat in &self.categories {
            c[cat.index()] += 1;
        }
        c
    }
}

/// Assigns `conserved` when a bin mean is strictly above `mu + z*sigma`,
/// `accelerated` when strictly below `mu - z*sigma`, `neutral` otherwise.
/// `mu` and the population `sigma` are pooled over all bins.
pub fn classify_bins<S: Scalar>(
    binned: &BinnedTrack<S>,
    params: &StratificationParams<S>,
) -> Result<Stratification<S>, StratifyError> {
    params.validate()?;
    let means: Vec<S> = binned.bins.iter().map(|b| b.mean).collect();
    let mu = scalar::mean(&means).ok_or(StratifyError::NoBins)?;
    let sigma = scalar::population_variance(&means, mu).sqrt();

    let categories = if sigma == S::zero() {
        vec![Category::Neutral; means.len()]
    } else {
        let upper = mu + params.z * sigma;
        let lower = mu - params.z * sigma;
        means
            .iter()
            .map(|&x| {
                if x > upper {
                    Category::Conserved
                } else if x < lower {
                    Category::Accelerated
                } else {
                    Category::Neutral
                }
            })
            .collect()
    };
    Ok(Stratification {
        mu,
        sigma,
        z: params.z,
        categories,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequencePool {
    pub category: Category,
    pub sequences: Vec<SequenceRecord>,
}

impl SequencePool {
    pub fn new(category: Category) -> Self {
        Self {
            category,
            sequences: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }
}

/// Splits classified bins into one pool per category, indexed by
/// `Category::index`. Bins made only of `N` go nowhere.
pub fn extract_pools<S: Scalar>(
    genome: &[SequenceRecord],
    binned: &BinnedTrack<S>,
    strat: &Stratification<S>,
) -> [SequencePool; 3] {
    assert_eq!(binned.bins.len(), strat.categories.len());
    let mut pools = Category::ALL.map(SequencePool::new);
    for (bin, &cat) in binned.bins.iter().zip(&strat.categories) {
        let bases = binned.bases(genome, bin);
        if bases.bytes().all(|b| b == b'N') {
            continue;
        }
        let rec = &genome[bin.record];
        pools[cat.index()].sequences.push(SequenceRecord::with_source(
            format!("{}_b{}", rec.id, bin.index),
            bases,
            rec.source_contig.clone(),
            bin.start,
        ));
    }
    pools
}
