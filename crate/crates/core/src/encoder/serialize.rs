use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{LengthExponent, ScoredVocabulary, TokenizerError};

pub const TOKENIZER_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ScoredToken {
    token: String,
    score: u64,
}

#[derive(Serialize, Deserialize)]
struct TokenizerFile {
    version: u32,
    length_exponent: u32,
    tokens: Vec<ScoredToken>,
    checksum: String,
}

fn checksum(exponent: u32, tokens: &[ScoredToken]) -> String {
    let mut h = Sha256::new();
    h.update(format!("{exponent}\n"));
    for t in tokens {
        h.update(format!("{}\t{}\n", t.token, t.score));
    }
    hex::encode(h.finalize())
}

/// Tokenizer JSON: `{version, length_exponent, tokens: [{token, score}],
/// checksum}`, tokens in vocabulary order. The checksum is SHA-256 over the
/// exponent line followed by one `token\tscore` line per token.
pub fn serialize_tokenizer(vocab: &ScoredVocabulary) -> Vec<u8> {
    let tokens: Vec<ScoredToken> = vocab
        .tokens
        .iter()
        .zip(&vocab.scores)
        .map(|(t, &s)| ScoredToken {
            token: t.clone(),
            score: s,
        })
        .collect();
    let exponent = u32::from(vocab.exponent);
    let file = TokenizerFile {
        version: TOKENIZER_VERSION,
        length_exponent: exponent,
        checksum: checksum(exponent, &tokens),
        tokens,
    };
    let mut out = serde_json::to_vec_pretty(&file).expect("tokenizer serializes");
    out.push(b'\n');
    out
}

pub fn load_tokenizer(bytes: &[u8]) -> Result<ScoredVocabulary, TokenizerError> {
    let file: TokenizerFile = serde_json::from_slice(bytes)?;
    if file.version != TOKENIZER_VERSION {
        return Err(TokenizerError::Version(file.version));
    }
    let actual = checksum(file.length_exponent, &file.tokens);
    if actual != file.checksum {
        return Err(TokenizerError::Checksum {
            expected: file.checksum,
            actual,
        });
    }
    let exponent = LengthExponent::try_from(file.length_exponent)?;
    let mut seen = HashSet::new();
    for t in &file.tokens {
        if !seen.insert(t.token.as_str()) {
            return Err(TokenizerError::Duplicate(t.token.clone()));
        }
        let expected = exponent.score(t.token.len());
        if t.score != expected {
            return Err(TokenizerError::Score {
                token: t.token.clone(),
                score: t.score,
                expected,
            });
        }
    }
    ScoredVocabulary::new(file.tokens.into_iter().map(|t| t.token), exponent)
}
