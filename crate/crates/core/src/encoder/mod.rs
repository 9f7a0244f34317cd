//! Length-scored vocabularies and globally optimal segmentation.
//!
//! Every token scores `len^p` (integer). A sequence is cut at each character
//! outside `ACGT`; every such character becomes a single-character span that
//! carries no score, and every `ACGT` run is segmented by dynamic
//! programming to maximise the summed token score. Among equally scoring
//! segmentations the longest final token wins at every DP cell.

mod serialize;
mod trie;

use std::collections::HashSet;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bpe::{is_acgt, BASES};
use crate::merge::MergeReport;

pub use serialize::{load_tokenizer, serialize_tokenizer, TOKENIZER_VERSION};
pub use trie::NucleotideTrie;

#[derive(Debug, Error)]
pub enum TokenizerError {
    #[error("unsupported tokenizer version {0}")]
    Version(u32),
    #[error("checksum mismatch: file says {expected}, content hashes to {actual}")]
    Checksum { expected: String, actual: String },
    #[error("duplicate token `{0}`")]
    Duplicate(String),
    #[error("token `{0}` contains characters outside ACGT")]
    Alphabet(String),
    #[error("base token `{0}` missing")]
    MissingBase(&'static str),
    #[error("token `{token}` has score {score}, expected {expected}")]
    Score {
        token: String,
        score: u64,
        expected: u64,
    },
    #[error("length exponent must be 1 or 2, got {0}")]
    Exponent(u32),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Power applied to token length to obtain its score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub enum LengthExponent {
    Linear = 1,
    Quadratic = 2,
}

impl LengthExponent {
    pub fn score(self, len: usize) -> u64 {
        let l = len as u64;
        match self {
            LengthExponent::Linear => l,
            LengthExponent::Quadratic => l * l,
        }
    }
}

impl TryFrom<u32> for LengthExponent {
    type Error = TokenizerError;

    fn try_from(p: u32) -> Result<Self, TokenizerError> {
        match p {
            1 => Ok(LengthExponent::Linear),
            2 => Ok(LengthExponent::Quadratic),
            _ => Err(TokenizerError::Exponent(p)),
        }
    }
}

impl From<LengthExponent> for u32 {
    fn from(p: LengthExponent) -> u32 {
        p as u32
    }
}

impl fmt::Display for LengthExponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", *self as u32)
    }
}

/// Token list with length-derived scores and a prefix trie.
#[derive(Debug, Clone)]
pub struct ScoredVocabulary {
    tokens: Vec<String>,
    scores: Vec<u64>,
    exponent: LengthExponent,
    trie: NucleotideTrie,
    max_token_len: usize,
}

impl PartialEq for ScoredVocabulary {
    fn eq(&self, other: &Self) -> bool {
        self.exponent == other.exponent && self.tokens == other.tokens
    }
}

impl Eq for ScoredVocabulary {}

impl ScoredVocabulary {
    pub fn new<I, T>(tokens: I, exponent: LengthExponent) -> Result<Self, TokenizerError>
    where
        I: IntoIterator<Item = T>,
        T: Into<String>,
    {
        let tokens: Vec<String> = tokens.into_iter().map(Into::into).collect();
        let mut seen = HashSet::with_capacity(tokens.len());
        let mut trie = NucleotideTrie::new();
        for (i, t) in tokens.iter().enumerate() {
            if !is_acgt(t) {
                return Err(TokenizerError::Alphabet(t.clone()));
            }
            if !seen.insert(t.as_str()) {
                return Err(TokenizerError::Duplicate(t.clone()));
            }
            trie.insert(t.as_bytes(), i as u32);
        }
        if let Some(b) = BASES.iter().find(|b| !seen.contains(**b)) {
            return Err(TokenizerError::MissingBase(b));
        }
        let scores = tokens.iter().map(|t| exponent.score(t.len())).collect();
        let max_token_len = tokens.iter().map(String::len).max().unwrap_or(0);
        Ok(Self {
            tokens,
            scores,
            exponent,
            trie,
            max_token_len,
        })
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn scores(&self) -> &[u64] {
        &self.scores
    }

    pub fn exponent(&self) -> LengthExponent {
        self.exponent
    }

    pub fn max_token_len(&self) -> usize {
        self.max_token_len
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn token(&self, id: u32) -> &str {
        &self.tokens[id as usize]
    }

    pub fn id_of(&self, token: &str) -> Option<u32> {
        self.trie.get(token.as_bytes())
    }

    pub fn contains(&self, token: &str) -> bool {
        self.id_of(token).is_some()
    }

    pub fn trie(&self) -> &NucleotideTrie {
        &self.trie
    }

    /// Same tokens, different exponent.
    pub fn with_exponent(&self, exponent: LengthExponent) -> Self {
        Self {
            scores: self.tokens.iter().map(|t| exponent.score(t.len())).collect(),
            exponent,
            ..self.clone()
        }
    }

    /// Segments `seq` into pieces. Non-`ACGT` bytes become unscored
    /// single-byte pieces.
    pub fn segment(&self, seq: &[u8]) -> Vec<Piece> {
        let mut out = Vec::with_capacity(seq.len() / 2 + 1);
        let mut dp = DpBuffers::default();
        let mut run_start = 0;
        for (i, &b) in seq.iter().enumerate() {
            if trie::base_index(b).is_none() {
                self.segment_run(seq, run_start, i, &mut dp, &mut out);
                out.push(Piece {
                    start: i,
                    len: 1,
                    token: None,
                });
                run_start = i + 1;
            }
        }
        self.segment_run(seq, run_start, seq.len(), &mut dp, &mut out);
        out
    }

    fn segment_run(
        &self,
        seq: &[u8],
        lo: usize,
        hi: usize,
        dp: &mut DpBuffers,
        out: &mut Vec<Piece>,
    ) {
        let n = hi - lo;
        if n == 0 {
            return;
        }
        let run = &seq[lo..hi];
        dp.reset(n);
        dp.best[0] = Some(0);
        for j in 0..n {
            let Some(base) = dp.best[j] else { continue };
            for (len, id) in self.trie.prefixes(run, j) {
                let cand = base + self.scores[id as usize];
                let i = j + len;
                let better = match dp.best[i] {
                    None => true,
                    Some(cur) => cand > cur || (cand == cur && len > dp.back[i].0),
                };
                if better {
                    dp.best[i] = Some(cand);
                    dp.back[i] = (len, id);
                }
            }
        }
        let mark = out.len();
        let mut i = n;
        while i > 0 {
            let (len, id) = dp.back[i];
            assert!(len > 0, "vocabulary cannot segment run");
            out.push(Piece {
                start: lo + i - len,
                len,
                token: Some(id),
            });
            i -= len;
        }
        out[mark..].reverse();
    }

    /// Total score of a segmentation (unscored pieces contribute nothing).
    pub fn total_score(&self, pieces: &[Piece]) -> u64 {
        pieces
            .iter()
            .filter_map(|p| p.token)
            .map(|id| self.scores[id as usize])
            .sum()
    }
}

#[derive(Default)]
struct DpBuffers {
    best: Vec<Option<u64>>,
    back: Vec<(usize, u32)>,
}

impl DpBuffers {
    fn reset(&mut self, n: usize) {
        self.best.clear();
        self.best.resize(n + 1, None);
        self.back.clear();
        self.back.resize(n + 1, (0, 0));
    }
}

/// One segment of an input sequence; `token` is `None` for a boundary
/// character.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Piece {
    pub start: usize,
    pub len: usize,
    pub token: Option<u32>,
}

impl Piece {
    pub fn end(&self) -> usize {
        self.start + self.len
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSpan {
    pub token: String,
    pub start: usize,
    pub end: usize,
}

/// Scores every merged token by `len^p`.
pub fn build_scored_vocab(
    report: &MergeReport,
    exponent: LengthExponent,
) -> Result<ScoredVocabulary, TokenizerError> {
    ScoredVocabulary::new(report.final_tokens.iter().cloned(), exponent)
}

/// Optimal segmentation of `sequence` as owned spans.
pub fn encode_dp(vocab: &ScoredVocabulary, sequence: &str) -> Vec<TokenSpan> {
    let bytes = sequence.as_bytes();
    vocab
        .segment(bytes)
        .into_iter()
        .map(|p| TokenSpan {
            token: match p.token {
                Some(id) => vocab.token(id).to_string(),
                None => sequence[p.start..p.end()].to_string(),
            },
            start: p.start,
            end: p.end(),
        })
        .collect()
}

/// Segments many sequences in parallel; output order follows input order.
pub fn encode_batch<S: AsRef<str> + Sync>(vocab: &ScoredVocabulary, seqs: &[S]) -> Vec<Vec<Piece>> {
    seqs.par_iter()
        .map(|s| vocab.segment(s.as_ref().as_bytes()))
        .collect()
}
