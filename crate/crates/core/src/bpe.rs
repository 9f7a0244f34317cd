//! Byte-pair-encoding training over nucleotide pools.
//!
//! Sequences are split at every non-`ACGT` character and each run is an
//! independent word; no merge ever crosses a run or sequence boundary.
//! Pair counts are maintained incrementally: after each merge only the words
//! that contained the merged pair are rewritten, and a lazily-updated max-heap
//! yields the next pair. Ties on count go to the lexicographically smallest
//! merged string, then to the shorter left part.

use std::cmp::Ordering;
use std::collections::hash_map::Entry;
use std::collections::{BinaryHeap, HashMap, HashSet};
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stratify::SequencePool;

pub type TokenId = u32;
type Pair = (TokenId, TokenId);

pub const BASES: [&str; 4] = ["A", "C", "G", "T"];
pub const DEFAULT_MIN_FREQUENCY: u64 = 2;
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("sequence pool is empty")]
    EmptyPool,
    #[error("vocabulary size {0} is below the 4 base tokens")]
    TargetTooSmall(usize),
}

#[derive(Debug, Error)]
pub enum VocabFileError {
    #[error("unsupported vocabulary file version {0}")]
    Version(u32),
    #[error("vocabulary must start with the tokens A, C, G, T")]
    MissingBases,
    #[error("duplicate token `{0}`")]
    Duplicate(String),
    #[error("token `{0}` contains characters outside ACGT")]
    Alphabet(String),
    #[error("merge ({0}, {1}) refers to a token that is not in the vocabulary")]
    DanglingMerge(String, String),
    #[error("token and frequency lists differ in length")]
    FrequencyCount,
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn is_acgt(token: &str) -> bool {
    !token.is_empty()
        && token
            .bytes()
            .all(|b| matches!(b, b'A' | b'C' | b'G' | b'T'))
}

/// Output of BPE training for one sequence pool.
///
/// Tokens are in creation order: the four bases, then one token per merge
/// that produced a string not seen before. `frequencies[i]` is the corpus
/// count of token `i` when it was created (character count for bases, pair
/// count at merge time otherwise).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BpeVocabulary {
    pub category_label: String,
    tokens: Vec<String>,
    frequencies: Vec<u64>,
    merges: Vec<(String, String)>,
}

impl BpeVocabulary {
    /// Checks the structural invariants and builds a vocabulary.
    pub fn from_parts(
        category_label: impl Into<String>,
        tokens: Vec<String>,
        frequencies: Vec<u64>,
        merges: Vec<(String, String)>,
    ) -> Result<Self, VocabFileError> {
        if tokens.len() < 4 || tokens[..4] != BASES {
            return Err(VocabFileError::MissingBases);
        }
        if frequencies.len() != tokens.len() {
            return Err(VocabFileError::FrequencyCount);
        }
        let mut seen = HashSet::new();
        for t in &tokens {
            if !is_acgt(t) {
                return Err(VocabFileError::Alphabet(t.clone()));
            }
            if !seen.insert(t.as_str()) {
                return Err(VocabFileError::Duplicate(t.clone()));
            }
        }
        for (l, r) in &merges {
            let joined = format!("{l}{r}");
            if !seen.contains(l.as_str())
                || !seen.contains(r.as_str())
                || !seen.contains(joined.as_str())
            {
                return Err(VocabFileError::DanglingMerge(l.clone(), r.clone()));
            }
        }
        Ok(Self {
            category_label: category_label.into(),
            tokens,
            frequencies,
            merges,
        })
    }

    /// Vocabulary from an explicit token set, with zero frequencies and no
    /// merges. Bases are added if missing.
    pub fn from_tokens<I, T>(label: &str, tokens: I) -> Self
    where
        I: IntoIterator<Item = T>,
        T: Into<String>,
    {
        let mut list: Vec<String> = BASES.iter().map(|s| s.to_string()).collect();
        let mut seen: HashSet<String> = list.iter().cloned().collect();
        for t in tokens {
            let t = t.into();
            if seen.insert(t.clone()) {
                list.push(t);
            }
        }
        let n = list.len();
        Self {
            category_label: label.to_string(),
            tokens: list,
            frequencies: vec![0; n],
            merges: Vec::new(),
        }
    }

    pub fn with_frequencies(mut self, freqs: &HashMap<String, u64>) -> Self {
        for (t, f) in self.tokens.iter().zip(self.frequencies.iter_mut()) {
            *f = freqs.get(t).copied().unwrap_or(0);
        }
        self
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn frequencies(&self) -> &[u64] {
        &self.frequencies
    }

    pub fn merges(&self) -> &[(String, String)] {
        &self.merges
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.tokens.iter().any(|t| t == token)
    }

    /// Replays the merge list on one `ACGT` run, left to right per merge.
    pub fn apply_merges(&self, run: &str) -> Vec<String> {
        let mut symbols: Vec<String> = run.chars().map(String::from).collect();
        for (l, r) in &self.merges {
            let mut out = Vec::with_capacity(symbols.len());
            let mut i = 0;
            while i < symbols.len() {
                if i + 1 < symbols.len() && symbols[i] == *l && symbols[i + 1] == *r {
                    out.push(format!("{l}{r}"));
                    i += 2;
                } else {
                    out.push(std::mem::take(&mut symbols[i]));
                    i += 1;
                }
            }
            symbols = out;
        }
        symbols
    }

    pub fn write_json<W: Write>(&self, out: W) -> Result<(), VocabFileError> {
        let file = VocabFile {
            version: FORMAT_VERSION,
            category_label: self.category_label.clone(),
            tokens: self
                .tokens
                .iter()
                .zip(&self.frequencies)
                .map(|(t, &f)| FileToken {
                    token: t.clone(),
                    frequency: f,
                })
                .collect(),
            merges: self.merges.clone(),
        };
        serde_json::to_writer_pretty(out, &file)?;
        Ok(())
    }

    pub fn read_json<R: Read>(input: R) -> Result<Self, VocabFileError> {
        let file: VocabFile = serde_json::from_reader(input)?;
        if file.version != FORMAT_VERSION {
            return Err(VocabFileError::Version(file.version));
        }
        let (tokens, freqs) = file
            .tokens
            .into_iter()
            .map(|t| (t.token, t.frequency))
            .unzip();
        Self::from_parts(file.category_label, tokens, freqs, file.merges)
    }
}

#[derive(Serialize, Deserialize)]
struct FileToken {
    token: String,
    frequency: u64,
}

#[derive(Serialize, Deserialize)]
struct VocabFile {
    version: u32,
    category_label: String,
    tokens: Vec<FileToken>,
    merges: Vec<(String, String)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BpeTrainer {
    pub vocab_size: usize,
    pub min_frequency: u64,
}

impl BpeTrainer {
    pub fn new(vocab_size: usize) -> Self {
        Self {
            vocab_size,
            min_frequency: DEFAULT_MIN_FREQUENCY,
        }
    }

    pub fn train(&self, pool: &SequencePool, label: &str) -> Result<BpeVocabulary, TrainError> {
        if pool.is_empty() {
            return Err(TrainError::EmptyPool);
        }
        self.train_sequences(pool.sequences.iter().map(|r| r.bases.as_str()), label)
            .map(|t| t.vocab)
    }

    /// Trains on raw sequences. Also returns the final segmentation of every
    /// distinct `ACGT` run.
    pub fn train_sequences<'a, I>(&self, sequences: I, label: &str) -> Result<TrainedBpe, TrainError>
    where
        I: IntoIterator<Item = &'a str>,
    {
        if self.vocab_size < 4 {
            return Err(TrainError::TargetTooSmall(self.vocab_size));
        }
        let seqs: Vec<&str> = sequences.into_iter().collect();
        if seqs.is_empty() {
            return Err(TrainError::EmptyPool);
        }
        let words = count_words(&seqs);
        Ok(Trainer::new(words, self.min_frequency).run(self.vocab_size, label))
    }
}

/// Trains a vocabulary of at most `target_size` tokens on one pool with the
/// default minimum pair frequency.
pub fn train_bpe(pool: &SequencePool, target_size: usize) -> Result<BpeVocabulary, TrainError> {
    BpeTrainer::new(target_size).train(pool, pool.category.short())
}

#[derive(Debug, Clone)]
pub struct TrainedBpe {
    pub vocab: BpeVocabulary,
    /// Distinct runs (sorted) with their multiplicity and final symbols.
    pub runs: Vec<(String, u64, Vec<String>)>,
}

fn base_id(b: u8) -> TokenId {
    match b {
        b'A' => 0,
        b'C' => 1,
        b'G' => 2,
        _ => 3,
    }
}

fn acgt_runs(seq: &str) -> impl Iterator<Item = &[u8]> {
    seq.as_bytes()
        .split(|b| !matches!(b, b'A' | b'C' | b'G' | b'T'))
        .filter(|r| !r.is_empty())
}

/// Distinct runs with multiplicities, sorted by content.
fn count_words(seqs: &[&str]) -> Vec<(Vec<u8>, u64)> {
    let counts = seqs
        .par_iter()
        .fold(HashMap::<&[u8], u64>::new, |mut acc, s| {
            for run in acgt_runs(s) {
                *acc.entry(run).or_default() += 1;
            }
            acc
        })
        .reduce(HashMap::new, |a, b| {
            if a.len() < b.len() {
                return merge_counts(b, a);
            }
            merge_counts(a, b)
        });
    let mut words: Vec<(Vec<u8>, u64)> = counts.into_iter().map(|(k, v)| (k.to_vec(), v)).collect();
    words.sort_unstable();
    words
}

fn merge_counts<'a>(
    mut into: HashMap<&'a [u8], u64>,
    from: HashMap<&'a [u8], u64>,
) -> HashMap<&'a [u8], u64> {
    for (k, v) in from {
        *into.entry(k).or_default() += v;
    }
    into
}

#[derive(Debug, PartialEq, Eq)]
struct Candidate {
    count: u64,
    merged: String,
    left_len: usize,
    pair: Pair,
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.count
            .cmp(&other.count)
            .then_with(|| other.merged.cmp(&self.merged))
            .then_with(|| other.left_len.cmp(&self.left_len))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Word {
    symbols: Vec<TokenId>,
    count: u64,
}

impl Word {
    /// Left-to-right replacement of `pair` by `new`. Returns the pair-count
    /// changes (unweighted), or `None` if the word does not contain the pair.
    fn merge(&mut self, pair: Pair, new: TokenId) -> Option<Vec<(Pair, i64)>> {
        let syms = &self.symbols;
        if !syms.windows(2).any(|w| (w[0], w[1]) == pair) {
            return None;
        }
        let mut out = Vec::with_capacity(syms.len());
        let mut i = 0;
        while i < syms.len() {
            if i + 1 < syms.len() && (syms[i], syms[i + 1]) == pair {
                out.push(new);
                i += 2;
            } else {
                out.push(syms[i]);
                i += 1;
            }
        }
        let mut delta: Vec<(Pair, i64)> = syms
            .windows(2)
            .map(|w| ((w[0], w[1]), -1))
            .chain(out.windows(2).map(|w| ((w[0], w[1]), 1)))
            .collect();
        delta.sort_unstable_by_key(|d| d.0);
        let mut combined: Vec<(Pair, i64)> = Vec::with_capacity(delta.len());
        for (p, d) in delta {
            match combined.last_mut() {
                Some(last) if last.0 == p => last.1 += d,
                _ => combined.push((p, d)),
            }
        }
        combined.retain(|d| d.1 != 0);
        self.symbols = out;
        Some(combined)
    }
}

struct Trainer {
    runs: Vec<Vec<u8>>,
    words: Vec<Word>,
    tokens: Vec<String>,
    frequencies: Vec<u64>,
    index: HashMap<String, TokenId>,
    merges: Vec<(String, String)>,
    pair_counts: HashMap<Pair, u64>,
    occurs_in: HashMap<Pair, Vec<u32>>,
    heap: BinaryHeap<Candidate>,
    min_frequency: u64,
}

impl Trainer {
    fn new(words: Vec<(Vec<u8>, u64)>, min_frequency: u64) -> Self {
        let tokens: Vec<String> = BASES.iter().map(|s| s.to_string()).collect();
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as TokenId))
            .collect();
        let mut frequencies = vec![0u64; 4];
        let mut runs = Vec::with_capacity(words.len());
        let mut ws = Vec::with_capacity(words.len());
        for (run, count) in words {
            let symbols: Vec<TokenId> = run.iter().map(|&b| base_id(b)).collect();
            for &s in &symbols {
                frequencies[s as usize] += count;
            }
            ws.push(Word { symbols, count });
            runs.push(run);
        }

        let (pair_counts, occurs_in) = ws
            .par_iter()
            .enumerate()
            .fold(
                || (HashMap::<Pair, u64>::new(), HashMap::<Pair, Vec<u32>>::new()),
                |(mut counts, mut occ), (wi, w)| {
                    for win in w.symbols.windows(2) {
                        let p = (win[0], win[1]);
                        *counts.entry(p).or_default() += w.count;
                        let list = occ.entry(p).or_default();
                        if list.last() != Some(&(wi as u32)) {
                            list.push(wi as u32);
                        }
                    }
                    (counts, occ)
                },
            )
            .reduce(
                || (HashMap::new(), HashMap::new()),
                |(mut ca, mut oa), (cb, ob)| {
                    for (p, c) in cb {
                        *ca.entry(p).or_default() += c;
                    }
                    for (p, mut l) in ob {
                        oa.entry(p).or_default().append(&mut l);
                    }
                    (ca, oa)
                },
            );

        let mut trainer = Self {
            runs,
            words: ws,
            tokens,
            frequencies,
            index,
            merges: Vec::new(),
            pair_counts,
            occurs_in,
            heap: BinaryHeap::new(),
            min_frequency,
        };
        let initial: Vec<Pair> = trainer.pair_counts.keys().copied().collect();
        for p in initial {
            trainer.push_candidate(p);
        }
        trainer
    }

    fn push_candidate(&mut self, pair: Pair) {
        let count = self.pair_counts.get(&pair).copied().unwrap_or(0);
        if count == 0 {
            return;
        }
        let (l, r) = (&self.tokens[pair.0 as usize], &self.tokens[pair.1 as usize]);
        self.heap.push(Candidate {
            count,
            merged: format!("{l}{r}"),
            left_len: l.len(),
            pair,
        });
    }

    fn run(mut self, target: usize, label: &str) -> TrainedBpe {
        while self.tokens.len() < target {
            let Some(top) = self.heap.pop() else { break };
            let current = self.pair_counts.get(&top.pair).copied().unwrap_or(0);
            if current != top.count {
                self.push_candidate(top.pair);
                continue;
            }
            if current < self.min_frequency.max(1) {
                break;
            }
            self.apply(top);
        }

        let runs = self
            .runs
            .into_iter()
            .zip(&self.words)
            .map(|(run, w)| {
                let syms = w
                    .symbols
                    .iter()
                    .map(|&s| self.tokens[s as usize].clone())
                    .collect();
                (String::from_utf8(run).expect("ACGT run"), w.count, syms)
            })
            .collect();
        TrainedBpe {
            vocab: BpeVocabulary {
                category_label: label.to_string(),
                tokens: self.tokens,
                frequencies: self.frequencies,
                merges: self.merges,
            },
            runs,
        }
    }

    fn apply(&mut self, cand: Candidate) {
        let pair = cand.pair;
        let new_id = match self.index.entry(cand.merged.clone()) {
            Entry::Occupied(e) => *e.get(),
            Entry::Vacant(e) => {
                let id = self.tokens.len() as TokenId;
                e.insert(id);
                self.tokens.push(cand.merged);
                self.frequencies.push(cand.count);
                id
            }
        };
        self.merges.push((
            self.tokens[pair.0 as usize].clone(),
            self.tokens[pair.1 as usize].clone(),
        ));

        let mut affected = self.occurs_in.remove(&pair).unwrap_or_default();
        affected.sort_unstable();
        affected.dedup();

        let updates: Vec<(u32, Vec<(Pair, i64)>)> = {
            let words = &mut self.words;
            let mut targets: Vec<(u32, &mut Word)> = Vec::with_capacity(affected.len());
            let mut it = affected.iter().peekable();
            for (wi, w) in words.iter_mut().enumerate() {
                match it.peek() {
                    Some(&&a) if a as usize == wi => {
                        targets.push((a, w));
                        it.next();
                    }
                    Some(_) => {}
                    None => break,
                }
            }
            targets
                .into_par_iter()
                .filter_map(|(wi, w)| w.merge(pair, new_id).map(|d| (wi, d)))
                .collect()
        };

        let mut grown: Vec<Pair> = Vec::new();
        for (wi, deltas) in updates {
            let count = self.words[wi as usize].count;
            for (p, d) in deltas {
                let c = self.pair_counts.entry(p).or_default();
                if d > 0 {
                    *c += d as u64 * count;
                    let list = self.occurs_in.entry(p).or_default();
                    if list.last() != Some(&wi) {
                        list.push(wi);
                    }
                    grown.push(p);
                } else {
                    *c -= (-d) as u64 * count;
                }
            }
        }
        self.pair_counts.remove(&pair);
        grown.sort_unstable();
        grown.dedup();
        for p in grown {
            self.push_candidate(p);
        }
    }
}
