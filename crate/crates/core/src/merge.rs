//! Combining the three category vocabularies into one.
//!
//! Priority merge fills capacity tier by tier:
//!
//! 1. tokens in all three vocabularies
//! 2. conserved-only tokens
//! 3. conserved and neutral, not accelerated
//! 4. neutral-only tokens
//!
//! Within a tier tokens are ordered longest first, then lexicographically.
//! The four bases always lead the output.

use std::collections::{HashMap, HashSet};

use log::warn;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bpe::{BpeVocabulary, BASES};

#[derive(Debug, Error, PartialEq)]
pub enum MergeError {
    #[error("target size {0} is below the 4 base tokens")]
    TargetTooSmall(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MergeStrategy {
    Priority,
    Frequency,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeReport {
    pub strategy: MergeStrategy,
    pub target_size: usize,
    /// Tokens contributed by each tier. The frequency strategy has no tiers
    /// and reports everything under the first.
    pub tier_counts: [usize; 4],
    pub final_tokens: Vec<String>,
    /// First tier (1-based) that did not fit completely.
    pub truncated_tier: Option<u8>,
}

impl MergeReport {
    pub fn len(&self) -> usize {
        self.final_tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.final_tokens.is_empty()
    }
}

fn by_length_then_lex(a: &&str, b: &&str) -> std::cmp::Ordering {
    b.len().cmp(&a.len()).then_with(|| a.cmp(b))
}

/// The four priority tiers in output order. Tier 1 starts with the bases.
pub fn priority_tiers(
    v_con: &BpeVocabulary,
    v_neu: &BpeVocabulary,
    v_acc: &BpeVocabulary,
) -> [Vec<String>; 4] {
    fn set(v: &BpeVocabulary) -> HashSet<&str> {
        v.tokens().iter().map(String::as_str).collect()
    }
    let (con, neu, acc) = (set(v_con), set(v_neu), set(v_acc));

    let mut tiers: [Vec<&str>; 4] = Default::default();
    let mut union: Vec<&str> = con.union(&neu).copied().collect();
    union.sort_unstable_by(by_length_then_lex);
    for t in union {
        if BASES.contains(&t) {
            continue;
        }
        let tier = match (con.contains(t), neu.contains(t), acc.contains(t)) {
            (true, true, true) => 0,
            (true, false, false) => 1,
            (true, true, false) => 2,
            (false, true, false) => 3,
            _ => continue,
        };
        tiers[tier].push(t);
    }
    let mut out: [Vec<String>; 4] = Default::default();
    out[0] = BASES.iter().map(|s| s.to_string()).collect();
    for (dst, src) in out.iter_mut().zip(tiers) {
        dst.extend(src.into_iter().map(String::from));
    }
    out
}

fn fill(strategy: MergeStrategy, tiers: [Vec<String>; 4], target_size: usize) -> MergeReport {
    let mut tier_counts = [0; 4];
    let mut final_tokens = Vec::with_capacity(target_size);
    let mut truncated_tier = None;
    for (i, tier) in tiers.into_iter().enumerate() {
        let room = target_size - final_tokens.len();
        let take = tier.len().min(room);
        if take < tier.len() && truncated_tier.is_none() {
            truncated_tier = Some(i as u8 + 1);
        }
        tier_counts[i] = take;
        final_tokens.extend(tier.into_iter().take(take));
    }
    if final_tokens.len() < target_size {
        warn!(
            "merged vocabulary has {} tokens, below the requested {target_size}",
            final_tokens.len()
        );
    }
    MergeReport {
        strategy,
        target_size,
        tier_counts,
        final_tokens,
        truncated_tier,
    }
}

/// Conservation-prioritized merge. Accelerated-specific tokens and tokens
/// shared only by neutral and accelerated never enter.
pub fn merge_vocabularies(
    v_con: &BpeVocabulary,
    v_neu: &BpeVocabulary,
    v_acc: &BpeVocabulary,
    target_size: usize,
) -> Result<MergeReport, MergeError> {
    if target_size < 4 {
        return Err(MergeError::TargetTooSmall(target_size));
    }
    let tiers = priority_tiers(v_con, v_neu, v_acc);
    Ok(fill(MergeStrategy::Priority, tiers, target_size))
}

/// Union of all three vocabularies ordered by summed training frequency
/// (descending), then length (descending), then lexicographically.
pub fn merge_no_priority(
    v_con: &BpeVocabulary,
    v_neu: &BpeVocabulary,
    v_acc: &BpeVocabulary,
    target_size: usize,
) -> Result<MergeReport, MergeError> {
    if target_size < 4 {
        return Err(MergeError::TargetTooSmall(target_size));
    }
    let mut freq: HashMap<&str, u64> = HashMap::new();
    for v in [v_con, v_neu, v_acc] {
        for (t, &f) in v.tokens().iter().zip(v.frequencies()) {
            *freq.entry(t.as_str()).or_default() += f;
        }
    }
    let mut rest: Vec<(&str, u64)> = freq
        .into_iter()
        .filter(|(t, _)| !BASES.contains(t))
        .collect();
    rest.sort_unstable_by(|a, b| {
        b.1.cmp(&a.1)
            .then_with(|| b.0.len().cmp(&a.0.len()))
            .then_with(|| a.0.cmp(b.0))
    });
    let ordered: Vec<String> = BASES
        .iter()
        .copied()
        .chain(rest.into_iter().map(|(t, _)| t))
        .map(String::from)
        .collect();
    Ok(fill(
        MergeStrategy::Frequency,
        [ordered, Vec::new(), Vec::new(), Vec::new()],
        target_size,
    ))
}
