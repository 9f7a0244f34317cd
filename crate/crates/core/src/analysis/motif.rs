use rayon::prelude::*;
use serde::Serialize;

use crate::encoder::ScoredVocabulary;
use crate::genome_io::PwmMotif;
use crate::scalar::{self, Scalar};

use super::AnalysisError;

const NUCLEOTIDES: [u8; 4] = *b"ACGT";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConsensusParams<S> {
    /// A position is determinate when some nucleotide reaches this.
    pub determinate: S,
    /// Nucleotides at or above this probability are expanded at wildcard
    /// positions.
    pub wildcard: S,
    pub max_variants: usize,
    pub max_len: usize,
}

impl<S: Scalar> Default for ConsensusParams<S> {
    fn default() -> Self {
        Self {
            determinate: S::lit(0.5),
            wildcard: S::lit(0.25),
            max_variants: 256,
            max_len: 12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MotifRecord {
    pub name: String,
    pub consensus: String,
    /// Wildcard expansions in lexicographic order; always contains the
    /// consensus.
    pub variants: Vec<String>,
}

fn argmax<S: Scalar>(row: &[S; 4]) -> usize {
    let mut best = 0;
    for k in 1..4 {
        if row[k] > row[best] {
            best = k;
        }
    }
    best
}

/// Fixed consensus string of a PWM: positions without a nucleotide at the
/// determinate threshold are wildcards, wildcards at either end are trimmed,
/// and every remaining position takes its most probable nucleotide. Motifs
/// that trim to nothing or exceed `max_len` yield `None`.
pub fn pwm_to_consensus<S: Scalar>(
    motif: &PwmMotif<S>,
    params: &ConsensusParams<S>,
) -> Option<MotifRecord> {
    let determinate: Vec<bool> = motif
        .rows
        .iter()
        .map(|r| r.iter().any(|&p| p >= params.determinate))
        .collect();
    let first = determinate.iter().position(|&d| d)?;
    let last = determinate.iter().rposition(|&d| d)?;
    let rows = &motif.rows[first..=last];
    if rows.len() > params.max_len {
        return None;
    }

    let consensus: String = rows
        .iter()
        .map(|r| NUCLEOTIDES[argmax(r)] as char)
        .collect();

    let options: Vec<Vec<u8>> = rows
        .iter()
        .zip(&determinate[first..=last])
        .map(|(r, &det)| {
            let top = argmax(r);
            if det {
                return vec![NUCLEOTIDES[top]];
            }
            (0..4)
                .filter(|&k| k == top || r[k] >= params.wildcard)
                .map(|k| NUCLEOTIDES[k])
                .collect()
        })
        .collect();

    let total = options
        .iter()
        .try_fold(1usize, |acc, o| acc.checked_mul(o.len()))
        .unwrap_or(usize::MAX);
    let variants = if total > params.max_variants {
        vec![consensus.clone()]
    } else {
        let mut out: Vec<Vec<u8>> = vec![Vec::with_capacity(rows.len())];
        for opts in &options {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    opts.iter().map(move |&b| {
                        let mut v = prefix.clone();
                        v.push(b);
                        v
                    })
                })
                .collect();
        }
        out.into_iter()
            .map(|v| String::from_utf8(v).expect("ASCII"))
            .collect()
    };

    Some(MotifRecord {
        name: motif.name.clone(),
        consensus,
        variants,
    })
}

/// Per-motif tokenization outcome.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MotifOutcome<S> {
    pub name: String,
    pub token_count: usize,
    pub perfect_match: bool,
    pub in_vocab: bool,
    /// Mean of `|token| / |consensus|` over the consensus tokens.
    pub token_fraction: S,
    /// Population std of variant token counts.
    pub variant_std: S,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MotifMetrics<S> {
    pub motifs: usize,
    pub avg_tokens_per_motif: S,
    /// Percent of motifs encoded as exactly one token.
    pub perfect_match_rate: S,
    /// Percent of motifs whose consensus is a vocabulary token.
    pub exact_vocab_rate: S,
    pub avg_token_fraction: S,
    pub consistency: S,
}

pub fn motif_outcome<S: Scalar>(vocab: &ScoredVocabulary, motif: &MotifRecord) -> MotifOutcome<S> {
    let pieces = vocab.segment(motif.consensus.as_bytes());
    let width = S::from_count(motif.consensus.len() as u64);
    let fractions: Vec<S> = pieces
        .iter()
        .map(|p| S::from_count(p.len as u64) / width)
        .collect();
    let counts: Vec<S> = motif
        .variants
        .iter()
        .map(|v| S::from_count(vocab.segment(v.as_bytes()).len() as u64))
        .collect();
    let variant_mean = scalar::mean(&counts).unwrap_or_else(S::zero);
    MotifOutcome {
        name: motif.name.clone(),
        token_count: pieces.len(),
        perfect_match: pieces.len() == 1,
        in_vocab: vocab.contains(&motif.consensus),
        token_fraction: scalar::mean(&fractions).unwrap_or_else(S::zero),
        variant_std: scalar::population_variance(&counts, variant_mean).sqrt(),
    }
}

pub fn motif_outcomes<S: Scalar>(
    vocab: &ScoredVocabulary,
    motifs: &[MotifRecord],
) -> Vec<MotifOutcome<S>> {
    motifs.par_iter().map(|m| motif_outcome(vocab, m)).collect()
}

pub fn motif_metrics<S: Scalar>(
    vocab: &ScoredVocabulary,
    motifs: &[MotifRecord],
) -> Result<MotifMetrics<S>, AnalysisError> {
    if motifs.is_empty() {
        return Err(AnalysisError::NoMotifs);
    }
    Ok(summarize(&motif_outcomes(vocab, motifs)))
}

pub fn summarize<S: Scalar>(outcomes: &[MotifOutcome<S>]) -> MotifMetrics<S> {
    let n = S::from_count(outcomes.len() as u64);
    let hundred = S::lit(100.0);
    let pct = |k: usize| S::from_count(k as u64) / n * hundred;
    MotifMetrics {
        motifs: outcomes.len(),
        avg_tokens_per_motif: outcomes
            .iter()
            .map(|o| S::from_count(o.token_count as u64))
            .sum::<S>()
            / n,
        perfect_match_rate: pct(outcomes.iter().filter(|o| o.perfect_match).count()),
        exact_vocab_rate: pct(outcomes.iter().filter(|o| o.in_vocab).count()),
        avg_token_fraction: outcomes.iter().map(|o| o.token_fraction).sum::<S>() / n,
        consistency: outcomes.iter().map(|o| o.variant_std).sum::<S>() / n,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::LengthExponent;

    fn pwm(rows: Vec<[f64; 4]>) -> PwmMotif<f64> {
        PwmMotif {
            name: "m".into(),
            alt_name: None,
            rows,
        }
    }

    fn params() -> ConsensusParams<f64> {
        ConsensusParams::default()
    }

    #[test]
    fn determinate_only() {
        let r = pwm_to_consensus(&pwm(vec![[1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 0.0, 1.0]]), &params())
            .unwrap();
        assert_eq!(r.consensus, "AT");
        assert_eq!(r.variants, vec!["AT"]);
    }

    #[test]
    fn internal_wildcard_expands() {
        let r = pwm_to_consensus(
            &pwm(vec![
                [0.9, 0.03, 0.04, 0.03],
                [0.2, 0.3, 0.25, 0.25],
                [0.05, 0.05, 0.85, 0.05],
            ]),
            &params(),
        )
        .unwrap();
        assert_eq!(r.consensus, "ACG");
        assert_eq!(r.variants, vec!["ACG", "AGG", "ATG"]);
    }

    #[test]
    fn end_wildcards_trimmed() {
        let flat = [0.25; 4];
        let r = pwm_to_consensus(
            &pwm(vec![flat, [0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0], flat]),
            &params(),
        )
        .unwrap();
        assert_eq!(r.consensus, "CG");
        assert!(pwm_to_consensus(&pwm(vec![flat, flat]), &params()).is_none());
    }

    #[test]
    fn too_long_rejected() {
        let rows = vec![[1.0, 0.0, 0.0, 0.0]; 14];
        assert!(pwm_to_consensus(&pwm(rows), &params()).is_none());
        let rows = vec![[1.0, 0.0, 0.0, 0.0]; 12];
        assert!(pwm_to_consensus(&pwm(rows), &params()).is_some());
    }

    #[test]
    fn variant_cap_keeps_consensus_only() {
        let flat = [0.25; 4];
        let det = [1.0, 0.0, 0.0, 0.0];
        let mut rows = vec![det];
        rows.extend(std::iter::repeat_n(flat, 5));
        rows.push(det);
        // 4^5 = 1024 variants > 256
        let r = pwm_to_consensus(&pwm(rows), &params()).unwrap();
        assert_eq!(r.variants, vec![r.consensus.clone()]);
    }

    fn record(consensus: &str) -> MotifRecord {
        MotifRecord {
            name: consensus.into(),
            consensus: consensus.into(),
            variants: vec![consensus.into()],
        }
    }

    #[test]
    fn planted_motif_is_perfect_match() {
        let v = ScoredVocabulary::new(["A", "C", "G", "T", "TAATTAA"], LengthExponent::Quadratic)
            .unwrap();
        let m = motif_metrics::<f64>(&v, &[record("TAATTAA"), record("GGGG")]).unwrap();
        assert_eq!(m.perfect_match_rate, 50.0);
        assert_eq!(m.exact_vocab_rate, 50.0);
        assert_eq!(m.avg_tokens_per_motif, 2.5);
        assert_eq!(m.consistency, 0.0);
    }

    #[test]
    fn token_fraction_of_split_motif() {
        let v = ScoredVocabulary::new(["A", "C", "G", "T", "ACGTA", "CGT"], LengthExponent::Quadratic)
            .unwrap();
        let o = motif_outcome::<f64>(&v, &record("ACGTACGT"));
        assert_eq!(o.token_count, 2);
        assert_eq!(o.token_fraction, (0.625 + 0.375) / 2.0);
    }

    #[test]
    fn consistency_uses_population_std() {
        let v = ScoredVocabulary::new(["A", "C", "G", "T", "ACG"], LengthExponent::Quadratic)
            .unwrap();
        let m = MotifRecord {
            name: "x".into(),
            consensus: "ACG".into(),
            variants: vec!["ACG".into(), "AGG".into()],
        };
        // counts 1 and 3 -> std 1
        let o = motif_outcome::<f64>(&v, &m);
        assert_eq!(o.variant_std, 1.0);
        assert!(motif_metrics::<f64>(&v, &[]).is_err());
    }
}
