use rayon::prelude::*;
use serde::Serialize;

use crate::encoder::ScoredVocabulary;
use crate::genome_io::RegionKind;
use crate::scalar::Scalar;
use crate::stratify::Category;

use super::AnalysisError;

pub const DEFAULT_ALPHA: f64 = 0.5;

/// One of the 12 region x conservation bins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct EnrichmentBin {
    pub region: RegionKind,
    pub category: Category,
}

impl EnrichmentBin {
    pub const BACKGROUND: EnrichmentBin = EnrichmentBin {
        region: RegionKind::Intron,
        category: Category::Neutral,
    };

    pub fn all() -> impl Iterator<Item = EnrichmentBin> {
        RegionKind::ALL.into_iter().flat_map(|region| {
            Category::ALL
                .into_iter()
                .map(move |category| EnrichmentBin { region, category })
        })
    }

    /// Position in `all()`: region-major.
    pub fn index(self) -> usize {
        self.region as usize * 3 + self.category.index()
    }
}

/// Sequences assigned to each of the 12 bins, indexed by
/// `EnrichmentBin::index`.
pub type BinSequences = [Vec<String>; 12];

/// Token counts for the 12 bins plus smoothing parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct EnrichmentTable<S> {
    pub alpha: S,
    pub vocab_size: usize,
    /// `counts[bin][token]`.
    pub counts: Vec<Vec<u64>>,
    pub totals: [u64; 12],
}

impl<S: Scalar> EnrichmentTable<S> {
    /// Table from raw counts; each row must have one entry per token.
    pub fn from_counts(counts: Vec<Vec<u64>>, alpha: S) -> Result<Self, AnalysisError> {
        assert_eq!(counts.len(), 12);
        let vocab_size = counts[0].len();
        assert!(counts.iter().all(|c| c.len() == vocab_size));
        let totals: [u64; 12] = std::array::from_fn(|b| counts[b].iter().sum());
        if totals[EnrichmentBin::BACKGROUND.index()] == 0 {
            return Err(AnalysisError::EmptyBackground);
        }
        Ok(Self {
            alpha,
            vocab_size,
            counts,
            totals,
        })
    }

    /// `(c + alpha) / (N + alpha * |V|)`.
    pub fn smoothed_frequency(&self, token: usize, bin: EnrichmentBin) -> S {
        let b = bin.index();
        (S::from_count(self.counts[b][token]) + self.alpha)
            / (S::from_count(self.totals[b]) + self.alpha * S::from_count(self.vocab_size as u64))
    }

    /// `log2 f(bin) - log2 f(reference)`.
    pub fn log2_fold_change_vs(&self, token: usize, bin: EnrichmentBin, reference: EnrichmentBin) -> S {
        self.smoothed_frequency(token, bin).log2() - self.smoothed_frequency(token, reference).log2()
    }

    pub fn log2_fold_change(&self, token: usize, bin: EnrichmentBin) -> S {
        self.log2_fold_change_vs(token, bin, EnrichmentBin::BACKGROUND)
    }

    /// Mean log2 fold-change over the whole vocabulary, including tokens
    /// unseen in both bins.
    pub fn mean_log2_fold_change_vs(&self, bin: EnrichmentBin, reference: EnrichmentBin) -> S {
        let sum: S = (0..self.vocab_size)
            .map(|t| self.log2_fold_change_vs(t, bin, reference))
            .sum();
        sum / S::from_count(self.vocab_size as u64)
    }

    /// Mean log2 fold-change against the intron x neutral background, or
    /// `None` when the bin received no tokens.
    pub fn mean_log2_fold_change(&self, bin: EnrichmentBin) -> Option<S> {
        (self.totals[bin.index()] > 0)
            .then(|| self.mean_log2_fold_change_vs(bin, EnrichmentBin::BACKGROUND))
    }
}

/// Counts tokens (boundary characters excluded) in every bin.
pub fn enrichment<S: Scalar>(
    vocab: &ScoredVocabulary,
    bins: &BinSequences,
    alpha: S,
) -> Result<EnrichmentTable<S>, AnalysisError> {
    if bins[EnrichmentBin::BACKGROUND.index()].is_empty() {
        return Err(AnalysisError::EmptyBackground);
    }
    let v = vocab.len();
    let counts: Vec<Vec<u64>> = bins
        .iter()
        .map(|seqs| {
            seqs.par_iter()
                .fold(
                    || vec![0u64; v],
                    |mut acc, s| {
                        for p in vocab.segment(s.as_bytes()) {
                            if let Some(id) = p.token {
                                acc[id as usize] += 1;
                            }
                        }
                        acc
                    },
                )
                .reduce(
                    || vec![0u64; v],
                    |mut a, b| {
                        for (x, y) in a.iter_mut().zip(b) {
                            *x += y;
                        }
                        a
                    },
                )
        })
        .collect();
    EnrichmentTable::from_counts(counts, alpha)
}

/// Absolute gap between the conserved and accelerated enrichment means of
/// one region.
pub fn separation<S: Scalar>(table: &EnrichmentTable<S>, region: RegionKind) -> Result<S, AnalysisError> {
    let get = |category| {
        table
            .mean_log2_fold_change(EnrichmentBin { region, category })
            .ok_or(AnalysisError::MissingBin { region, category })
    };
    Ok((get(Category::Conserved)? - get(Category::Accelerated)?).abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(bin: EnrichmentBin, bin_counts: Vec<u64>, bg: Vec<u64>) -> EnrichmentTable<f64> {
        let v = bg.len();
        let mut counts = vec![vec![0; v]; 12];
        counts[bin.index()] = bin_counts;
        counts[EnrichmentBin::BACKGROUND.index()] = bg;
        EnrichmentTable::from_counts(counts, 0.5).unwrap()
    }

    #[test]
    fn bin_indexing() {
        let all: Vec<_> = EnrichmentBin::all().collect();
        assert_eq!(all.len(), 12);
        for (i, b) in all.iter().enumerate() {
            assert_eq!(b.index(), i);
        }
    }

    #[test]
    fn two_token_hand_case() {
        let bin = EnrichmentBin {
            region: RegionKind::Promoter,
            category: Category::Conserved,
        };
        let t = table(bin, vec![3, 1], vec![1, 3]);
        assert!((t.smoothed_frequency(0, bin) - 0.7).abs() < 1e-15);
        assert!((t.smoothed_frequency(0, EnrichmentBin::BACKGROUND) - 0.3).abs() < 1e-15);
        assert!((t.log2_fold_change(0, bin) - 1.22239).abs() < 1e-5);
        assert!((t.log2_fold_change(1, bin) + 1.22239).abs() < 1e-5);
        assert!(t.mean_log2_fold_change(bin).unwrap().abs() < 1e-15);
        assert_eq!(t.mean_log2_fold_change(EnrichmentBin::BACKGROUND), Some(0.0));
    }

    #[test]
    fn separation_needs_both_bins() {
        let con = EnrichmentBin {
            region: RegionKind::Enhancer,
            category: Category::Conserved,
        };
        let t = table(con, vec![5, 1, 0], vec![1, 1, 1]);
        assert!(matches!(
            separation(&t, RegionKind::Enhancer),
            Err(AnalysisError::MissingBin { .. })
        ));
        let mut counts = t.counts.clone();
        counts[EnrichmentBin { region: RegionKind::Enhancer, category: Category::Accelerated }.index()] =
            vec![5, 1, 0];
        let t = EnrichmentTable::<f64>::from_counts(counts, 0.5).unwrap();
        assert_eq!(separation(&t, RegionKind::Enhancer).unwrap(), 0.0);
    }

    #[test]
    fn empty_background() {
        let mut counts = vec![vec![0u64; 2]; 12];
        counts[0] = vec![1, 1];
        assert!(matches!(
            EnrichmentTable::<f64>::from_counts(counts, 0.5),
            Err(AnalysisError::EmptyBackground)
        ));
    }
}
