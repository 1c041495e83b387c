//! Character-level SMILES tokenization.
//!
//! Tokens are single characters except for three merges that keep one
//! chemical unit per token: the two-letter halogens `Cl` and `Br`, and
//! percent ring closures `%nn`. Inside `[...]` bracket expressions every
//! character is its own token. Concatenating the tokens always reproduces
//! the input string exactly.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TokenizeError {
    #[error("input is empty")]
    EmptyInput,
    #[error("non-ASCII byte at position {0}")]
    NonAsciiInput(usize),
}

/// A tokenized SMILES string. Detokenization (token concatenation) is exact.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSeq {
    tokens: Vec<String>,
    source: String,
}

impl TokenSeq {
    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Reassemble the original string.
    pub fn detokenize(&self) -> String {
        self.tokens.concat()
    }
}

/// Split a SMILES string into tokens.
pub fn tokenize(s: &str) -> Result<TokenSeq, TokenizeError> {
    if s.is_empty() {
        return Err(TokenizeError::EmptyInput);
    }
    if let Some(pos) = s.bytes().position(|b| !b.is_ascii()) {
        return Err(TokenizeError::NonAsciiInput(pos));
    }
    let bytes = s.as_bytes();
    let mut tokens = Vec::with_capacity(bytes.len());
    let mut i = 0;
    let mut in_bracket = false;
    while i < bytes.len() {
        let c = bytes[i];
        if in_bracket {
            tokens.push((c as char).to_string());
            if c == b']' {
                in_bracket = false;
            }
            i += 1;
            continue;
        }
        match c {
            b'[' => {
                in_bracket = true;
                tokens.push("[".to_string());
                i += 1;
            }
            b'C' if bytes.get(i + 1) == Some(&b'l') => {
                tokens.push("Cl".to_string());
                i += 2;
            }
            b'B' if bytes.get(i + 1) == Some(&b'r') => {
                tokens.push("Br".to_string());
                i += 2;
            }
            b'%' if i + 2 < bytes.len()
                && bytes[i + 1].is_ascii_digit()
                && bytes[i + 2].is_ascii_digit() =>
            {
                tokens.push(std::str::from_utf8(&bytes[i..i + 3]).unwrap().to_string());
                i += 3;
            }
            _ => {
                tokens.push((c as char).to_string());
                i += 1;
            }
        }
    }
    Ok(TokenSeq {
        tokens,
        source: s.to_string(),
    })
}
