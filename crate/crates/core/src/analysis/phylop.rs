use serde::Serialize;

use crate::encoder::{encode_batch, ScoredVocabulary};
use crate::genome_io::{ConservationTrack, SequenceRecord};
use crate::scalar::Scalar;
use crate::stratify::{BinnedTrack, Category, Stratification};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CategoryTokenStats<S> {
    /// Unweighted mean over distinct tokens of each token's pooled mean.
    pub mean_phylop: S,
    /// Percent of distinct tokens whose pooled mean is positive.
    pub pct_positive: S,
    /// Mean over distinct tokens of each token's pooled population variance.
    pub mean_intra_variance: S,
    pub distinct_tokens: usize,
}

/// Per-category token conservation statistics, indexed by
/// `Category::index`. A category without token occurrences has no entry.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhylopTokenStats<S> {
    pub categories: [Option<CategoryTokenStats<S>>; 3],
}

impl<S> PhylopTokenStats<S> {
    pub fn get(&self, cat: Category) -> Option<&CategoryTokenStats<S>> {
        self.categories[cat.index()].as_ref()
    }
}

/// Tokenizes each classified bin on its own; every token occurrence takes
/// the bin's category and pools the per-base scores it spans.
pub fn phylop_token_stats<S: Scalar>(
    vocab: &ScoredVocabulary,
    genome: &[SequenceRecord],
    track: &ConservationTrack<S>,
    binned: &BinnedTrack<S>,
    strat: &Stratification<S>,
) -> PhylopTokenStats<S> {
    assert_eq!(binned.bins.len(), strat.categories.len());
    let seqs: Vec<&str> = binned.bins.iter().map(|b| binned.bases(genome, b)).collect();
    let pieces = encode_batch(vocab, &seqs);

    let v = vocab.len();
    let mut count = vec![[0u64; 3]; v];
    let mut sum = vec![[S::zero(); 3]; v];
    let mut scores = Vec::with_capacity(binned.bin_size);

    let mut for_each_base = |f: &mut dyn FnMut(usize, usize, S)| {
        for ((bin, cat), bin_pieces) in binned.bins.iter().zip(&strat.categories).zip(&pieces) {
            scores.clear();
            let contig = &genome[bin.record].source_contig;
            track.fill_scores(contig, bin.start, bin.start + binned.bin_size as u64, &mut scores);
            for p in bin_pieces {
                let Some(id) = p.token else { continue };
                for &x in &scores[p.start..p.end()] {
                    f(id as usize, cat.index(), x);
                }
            }
        }
    };

    for_each_base(&mut |t, c, x| {
        count[t][c] += 1;
        sum[t][c] = sum[t][c] + x;
    });
    let mean: Vec<[S; 3]> = sum
        .iter()
        .zip(&count)
        .map(|(s, n)| std::array::from_fn(|c| if n[c] > 0 { s[c] / S::from_count(n[c]) } else { S::zero() }))
        .collect();
    let mut ss = vec![[S::zero(); 3]; v];
    for_each_base(&mut |t, c, x| {
        let d = x - mean[t][c];
        ss[t][c] = ss[t][c] + d * d;
    });

    let categories = std::array::from_fn(|c| {
        let observed: Vec<usize> = (0..v).filter(|&t| count[t][c] > 0).collect();
        if observed.is_empty() {
            return None;
        }
        let k = S::from_count(observed.len() as u64);
        let positive = observed.iter().filter(|&&t| mean[t][c] > S::zero()).count();
        Some(CategoryTokenStats {
            mean_phylop: observed.iter().map(|&t| mean[t][c]).sum::<S>() / k,
            pct_positive: S::from_count(positive as u64) / k * S::lit(100.0),
            mean_intra_variance: observed
                .iter()
                .map(|&t| ss[t][c] / S::from_count(count[t][c]))
                .sum::<S>()
                / k,
            distinct_tokens: observed.len(),
        })
    });
    PhylopTokenStats { categories }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::LengthExponent;
    use crate::genome_io::parse_bedgraph;
    use crate::stratify::{bin_track, Bin};

    fn vocab(extra: &[&str]) -> ScoredVocabulary {
        let mut t = vec!["A", "C", "G", "T"];
        t.extend_from_slice(extra);
        ScoredVocabulary::new(t, LengthExponent::Quadratic).unwrap()
    }

    #[test]
    fn single_occurrence_constant_track() {
        let genome = vec![SequenceRecord::new("chr1", "ACGT")];
        let track = parse_bedgraph::<f64, _>("chr1\t0\t4\t0.5\n".as_bytes()).unwrap();
        let binned = bin_track(&genome, &track, 4);
        let strat = Stratification {
            mu: 0.5,
            sigma: 0.0,
            z: 1.645,
            categories: vec![Category::Conserved],
        };
        let s = phylop_token_stats(&vocab(&["ACGT"]), &genome, &track, &binned, &strat);
        let con = s.get(Category::Conserved).unwrap();
        assert_eq!(con.mean_phylop, 0.5);
        assert_eq!(con.mean_intra_variance, 0.0);
        assert_eq!(con.pct_positive, 100.0);
        assert_eq!(con.distinct_tokens, 1);
        assert!(s.get(Category::Neutral).is_none());
    }

    #[test]
    fn pooled_population_variance() {
        let genome = vec![SequenceRecord::new("chr1", "AC")];
        let track = parse_bedgraph::<f64, _>("chr1\t0\t1\t1.0\nchr1\t1\t2\t-1.0\n".as_bytes()).unwrap();
        let binned = BinnedTrack {
            bin_size: 2,
            bins: vec![Bin {
                record: 0,
                index: 0,
                start: 0,
                mean: 0.0,
            }],
        };
        let strat = Stratification {
            mu: 0.0,
            sigma: 0.0,
            z: 1.645,
            categories: vec![Category::Neutral],
        };
        let s = phylop_token_stats(&vocab(&["AC"]), &genome, &track, &binned, &strat);
        let neu = s.get(Category::Neutral).unwrap();
        assert_eq!(neu.mean_phylop, 0.0);
        assert_eq!(neu.mean_intra_variance, 1.0);
        assert_eq!(neu.pct_positive, 0.0);
    }
}
