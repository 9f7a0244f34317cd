use rayon::prelude::*;
use serde::Serialize;

use crate::encoder::ScoredVocabulary;
use crate::scalar::Scalar;

use super::AnalysisError;

pub const LENGTH_BIN_LABELS: [&str; 4] = ["1-2", "3-5", "6-8", "9+"];

/// Length bin of a token: 1-2, 3-5, 6-8, 9+.
pub fn length_bin(len: usize) -> usize {
    match len {
        0..=2 => 0,
        3..=5 => 1,
        6..=8 => 2,
        _ => 3,
    }
}

/// Distribution of produced token lengths over four bins.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LengthSignature<S> {
    pub probs: [S; 4],
    pub token_count: u64,
}

impl<S: Scalar> LengthSignature<S> {
    pub fn from_counts(counts: [u64; 4]) -> Result<Self, AnalysisError> {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(AnalysisError::NoTokens);
        }
        let n = S::from_count(total);
        Ok(Self {
            probs: counts.map(|c| S::from_count(c) / n),
            token_count: total,
        })
    }

    pub fn from_lengths<I: IntoIterator<Item = usize>>(lengths: I) -> Result<Self, AnalysisError> {
        let mut counts = [0u64; 4];
        for l in lengths {
            counts[length_bin(l)] += 1;
        }
        Self::from_counts(counts)
    }
}

/// Tokenizes every sequence and bins the non-boundary token lengths.
pub fn length_signature<S: Scalar, T: AsRef<str> + Sync>(
    vocab: &ScoredVocabulary,
    sequences: &[T],
) -> Result<LengthSignature<S>, AnalysisError> {
    let counts = sequences
        .par_iter()
        .map(|s| {
            let mut c = [0u64; 4];
            for p in vocab.segment(s.as_ref().as_bytes()) {
                if p.token.is_some() {
                    c[length_bin(p.len)] += 1;
                }
            }
            c
        })
        .reduce(|| [0; 4], |a, b| std::array::from_fn(|i| a[i] + b[i]));
    LengthSignature::from_counts(counts)
}

/// Jensen-Shannon divergence with logarithms in `log_base`. Zero-probability
/// terms contribute nothing. The per-index sum is symmetric in `p` and `q`
/// bit for bit.
pub fn js_divergence<S: Scalar>(p: &[S], q: &[S], log_base: S) -> Result<S, AnalysisError> {
    if p.len() != q.len() {
        return Err(AnalysisError::DimensionMismatch(p.len(), q.len()));
    }
    let half = S::lit(0.5);
    let term = |a: S, m: S| {
        if a > S::zero() {
            a * (a / m).ln()
        } else {
            S::zero()
        }
    };
    let mut total = S::zero();
    for (&a, &b) in p.iter().zip(q) {
        let m = (a + b) * half;
        total = total + (term(a, m) + term(b, m));
    }
    let nats = (total * half).max(S::zero()).min(S::lit(2.0).ln());
    Ok(nats / log_base.ln())
}

pub fn js_distance<S: Scalar>(p: &[S], q: &[S], log_base: S) -> Result<S, AnalysisError> {
    js_divergence(p, q, log_base).map(|d| d.sqrt())
}
