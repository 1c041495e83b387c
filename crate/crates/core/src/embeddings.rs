//! Vocabulary construction and the three token-embedding strategies:
//! fully trainable, random-fixed hybrid, and SHA-256-fixed hybrid.
//!
//! A hybrid embedding concatenates a trainable block `E_t` (V x d_t) with a
//! frozen block `E_f` (V x d_f). The SHA-256 block hashes the literal string
//! `token(i)` for each index i, rescales the 32 digest bytes to [-1, 1],
//! and tiles or trims the result to width d_f; it is bitwise identical
//! across runs and platforms and never receives gradient updates.

use std::collections::HashMap;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::rng::SplitMix64;
use crate::smiles::TokenSeq;

pub const PAD: u32 = 0;
pub const BOS: u32 = 1;
pub const EOS: u32 = 2;
pub const RESERVED: [&str; 3] = ["<pad>", "<bos>", "<eos>"];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EmbeddingError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("bad dimensions: {0}")]
    BadDimensions(String),
    #[error("token id {id} out of vocabulary (size {size})")]
    IndexOutOfVocabulary { id: u32, size: usize },
    #[error("token '{0}' not in vocabulary")]
    UnknownToken(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
}

/// Token table: PAD=0, BOS=1, EOS=2, then the distinct corpus tokens in
/// sorted order, so the table is identical for any ordering of the corpus.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Vocabulary {
    tokens: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, u32>,
}

impl PartialEq for Vocabulary {
    fn eq(&self, other: &Self) -> bool {
        self.tokens == other.tokens
    }
}
impl Eq for Vocabulary {}

impl Vocabulary {
    pub fn build(corpus: &[TokenSeq]) -> Result<Self, EmbeddingError> {
        if corpus.is_empty() {
            return Err(EmbeddingError::EmptyCorpus);
        }
        let mut distinct: Vec<String> = corpus
            .iter()
            .flat_map(|seq| seq.tokens().iter().cloned())
            .collect();
        distinct.sort_unstable();
        distinct.dedup();
        let mut tokens: Vec<String> = RESERVED.iter().map(|s| s.to_string()).collect();
        tokens.extend(distinct);
        Ok(Self::from_tokens(tokens))
    }

    /// Rebuild from a stored token list (checkpoint loading).
    pub fn from_tokens(tokens: Vec<String>) -> Self {
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Self { tokens, index }
    }

    pub fn size(&self) -> usize {
        self.tokens.len()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn token(&self, id: u32) -> &str {
        &self.tokens[id as usize]
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    /// Map a token sequence to ids; fails on out-of-vocabulary tokens.
    pub fn encode(&self, seq: &TokenSeq) -> Result<Vec<u32>, EmbeddingError> {
        seq.tokens()
            .iter()
            .map(|t| {
                self.id(t)
                    .ok_or_else(|| EmbeddingError::UnknownToken(t.clone()))
            })
            .collect()
    }

    /// Concatenate tokens for a slice of ids, stopping at EOS and skipping
    /// the reserved markers.
    pub fn decode(&self, ids: &[u32]) -> String {
        let mut out = String::new();
        for &id in ids {
            if id == EOS {
                break;
            }
            if id == PAD || id == BOS {
                continue;
            }
            out.push_str(self.token(id));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EmbeddingMode {
    TrainableOnly,
    RandomFixed,
    ShaFixed,
}

/// Options for the SHA-256 fixed block. Defaults follow the index-keyed,
/// byte-scaled construction; the alternatives exist for experimentation.
#[derive(Debug, Clone, Default)]
pub struct ShaOptions {
    /// Hash the token's own text instead of the literal `token(i)` string.
    pub key_by_token_text: bool,
    /// Unit-normalize each row after tiling.
    pub unit_normalize: bool,
}

/// SHA-256 fixed embedding block, index-keyed: row i is the digest of
/// `token(i)` with bytes mapped through (b - 128) / 128, tiled to d_f.
pub fn sha_fixed_embedding(
    vocab_size: usize,
    d: usize,
    d_t: usize,
) -> Result<Array2<f64>, EmbeddingError> {
    sha_fixed_embedding_with(vocab_size, d, d_t, &ShaOptions::default(), None)
}

pub fn sha_fixed_embedding_with(
    vocab_size: usize,
    d: usize,
    d_t: usize,
    options: &ShaOptions,
    token_texts: Option<&[String]>,
) -> Result<Array2<f64>, EmbeddingError> {
    if d_t > d {
        return Err(EmbeddingError::BadDimensions(format!(
            "d_t {d_t} exceeds d {d}"
        )));
    }
    let d_f = d - d_t;
    if d_f < 1 {
        return Err(EmbeddingError::BadDimensions(
            "fixed width d - d_t must be at least 1".into(),
        ));
    }
    if options.key_by_token_text && token_texts.is_none() {
        return Err(EmbeddingError::BadDimensions(
            "token-text keying requires token texts".into(),
        ));
    }
    let mut e_f = Array2::zeros((vocab_size, d_f));
    for i in 0..vocab_size {
        let key = if options.key_by_token_text {
            token_texts.unwrap()[i].clone()
        } else {
            format!("token({i})")
        };
        let digest = Sha256::digest(key.as_bytes());
        let base: Vec<f64> = digest.iter().map(|&b| (b as f64 - 128.0) / 128.0).collect();
        let mut row: Vec<f64> = (0..d_f).map(|j| base[j % 32]).collect();
        if options.unit_normalize {
            let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 {
                for x in &mut row {
                    *x /= norm;
                }
            }
        }
        for (j, x) in row.into_iter().enumerate() {
            e_f[(i, j)] = x;
        }
    }
    Ok(e_f)
}

/// Frozen random block: i.i.d. uniform on +-sqrt(6 / fan_in)
/// (Kaiming-uniform support), reproducible from the seed.
pub fn random_fixed_embedding(
    vocab_size: usize,
    d_f: usize,
    fan_in: usize,
    seed: u64,
) -> Result<Array2<f64>, EmbeddingError> {
    if d_f < 1 || fan_in < 1 {
        return Err(EmbeddingError::BadDimensions(
            "d_f and fan_in must be at least 1".into(),
        ));
    }
    let bound = (6.0 / fan_in as f64).sqrt();
    let mut rng = SplitMix64::new(seed);
    Ok(Array2::from_shape_fn((vocab_size, d_f), |_| {
        rng.uniform(-bound, bound)
    }))
}

/// Trainable block init: uniform on +-1/sqrt(d).
fn trainable_init(vocab_size: usize, d_t: usize, d: usize, seed: u64) -> Array2<f64> {
    let bound = 1.0 / (d.max(1) as f64).sqrt();
    let mut rng = SplitMix64::new(seed);
    Array2::from_shape_fn((vocab_size, d_t), |_| rng.uniform(-bound, bound))
}

/// Token embedding split into a trainable and a frozen block;
/// `lookup` rows are `concat(E_t[i], E_f[i])`.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridEmbedding {
    e_t: Array2<f64>,
    e_f: Array2<f64>,
    mode: EmbeddingMode,
}

impl HybridEmbedding {
    /// Fully trainable embedding (d_f = 0).
    pub fn trainable_only(vocab_size: usize, d: usize, seed: u64) -> Self {
        Self {
            e_t: trainable_init(vocab_size, d, d, seed),
            e_f: Array2::zeros((vocab_size, 0)),
            mode: EmbeddingMode::TrainableOnly,
        }
    }

    /// Hybrid with a frozen Kaiming-uniform block (fan_in = d_f).
    pub fn random_fixed(
        vocab_size: usize,
        d: usize,
        d_t: usize,
        seed: u64,
    ) -> Result<Self, EmbeddingError> {
        let d_f = d
            .checked_sub(d_t)
            .ok_or_else(|| EmbeddingError::BadDimensions("d_t exceeds d".into()))?;
        Ok(Self {
            e_t: trainable_init(vocab_size, d_t, d, seed),
            e_f: random_fixed_embedding(vocab_size, d_f, d_f, seed ^ 0xF1DE)?,
            mode: EmbeddingMode::RandomFixed,
        })
    }

    /// Hybrid with the frozen SHA-256 block.
    pub fn sha_fixed(
        vocab_size: usize,
        d: usize,
        d_t: usize,
        seed: u64,
    ) -> Result<Self, EmbeddingError> {
        if d_t == d {
            // Degenerate fixed width: reduces to the trainable-only model.
            return Ok(Self {
                e_t: trainable_init(vocab_size, d, d, seed),
                e_f: Array2::zeros((vocab_size, 0)),
                mode: EmbeddingMode::ShaFixed,
            });
        }
        Ok(Self {
            e_t: trainable_init(vocab_size, d_t, d, seed),
            e_f: sha_fixed_embedding(vocab_size, d, d_t)?,
            mode: EmbeddingMode::ShaFixed,
        })
    }

    pub fn from_parts(e_t: Array2<f64>, e_f: Array2<f64>, mode: EmbeddingMode) -> Self {
        assert_eq!(e_t.nrows(), e_f.nrows());
        Self { e_t, e_f, mode }
    }

    pub fn mode(&self) -> EmbeddingMode {
        self.mode
    }

    pub fn vocab_size(&self) -> usize {
        self.e_t.nrows()
    }

    pub fn d_t(&self) -> usize {
        self.e_t.ncols()
    }

    pub fn d_f(&self) -> usize {
        self.e_f.ncols()
    }

    pub fn d(&self) -> usize {
        self.d_t() + self.d_f()
    }

    pub fn e_t(&self) -> ArrayView2<'_, f64> {
        self.e_t.view()
    }

    pub fn e_f(&self) -> ArrayView2<'_, f64> {
        self.e_f.view()
    }

    pub fn e_t_mut(&mut self) -> &mut Array2<f64> {
        &mut self.e_t
    }

    /// Embed a sequence of ids as a (len x d) matrix.
    pub fn lookup(&self, ids: &[u32]) -> Result<Array2<f64>, EmbeddingError> {
        let v = self.vocab_size();
        let (d_t, d) = (self.d_t(), self.d());
        let mut out = Array2::zeros((ids.len(), d));
        for (row, &id) in ids.iter().enumerate() {
            let i = id as usize;
            if i >= v {
                return Err(EmbeddingError::IndexOutOfVocabulary { id, size: v });
            }
            for j in 0..d_t {
                out[(row, j)] = self.e_t[(i, j)];
            }
            for j in 0..self.d_f() {
                out[(row, d_t + j)] = self.e_f[(i, j)];
            }
        }
        Ok(out)
    }

    /// Apply an update rule to the trainable block only. `grads` covers the
    /// full V x d layout; the E_f columns are ignored, so the fixed block is
    /// bitwise unchanged by construction.
    pub fn apply_gradient<F>(
        &mut self,
        grads: &Array2<f64>,
        update: F,
    ) -> Result<(), EmbeddingError>
    where
        F: FnOnce(&mut Array2<f64>, ArrayView2<'_, f64>),
    {
        if grads.nrows() != self.vocab_size() || grads.ncols() != self.d() {
            return Err(EmbeddingError::ShapeMismatch(format!(
                "expected {}x{}, got {}x{}",
                self.vocab_size(),
                self.d(),
                grads.nrows(),
                grads.ncols()
            )));
        }
        let d_t = self.d_t();
        let grads_t = grads.slice(ndarray::s![.., 0..d_t]);
        update(&mut self.e_t, grads_t);
        Ok(())
    }

    /// 64-bit checksum of the fixed block's exact bit patterns.
    pub fn e_f_checksum(&self) -> u64 {
        let mut bytes = Vec::with_capacity(self.e_f.len() * 8);
        for x in self.e_f.iter() {
            bytes.extend_from_slice(&x.to_le_bytes());
        }
        crate::rng::fnv1a64(&bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smiles::tokenize;

    fn seqs(xs: &[&str]) -> Vec<TokenSeq> {
        xs.iter().map(|s| tokenize(s).unwrap()).collect()
    }

    #[test]
    fn vocabulary_reserved_plus_sorted_tokens() {
        let v = Vocabulary::build(&seqs(&["CCO"])).unwrap();
        assert_eq!(v.size(), 5); // pad, bos, eos, C, O
        assert_eq!(v.token(PAD), "<pad>");
        assert_eq!(v.token(3), "C");
        assert_eq!(v.token(4), "O");
    }

    #[test]
    fn vocabulary_order_independent() {
        let a = Vocabulary::build(&seqs(&["CCO", "c1ccccc1"])).unwrap();
        let b = Vocabulary::build(&seqs(&["c1ccccc1", "CCO"])).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn vocabulary_rejects_empty_corpus() {
        assert_eq!(Vocabulary::build(&[]), Err(EmbeddingError::EmptyCorpus));
    }

    #[test]
    fn encode_round_trip() {
        let v = Vocabulary::build(&seqs(&["ClCC"])).unwrap();
        let ids = v.encode(&tokenize("ClCC").unwrap()).unwrap();
        assert_eq!(ids.len(), 3);
        assert_eq!(v.decode(&ids), "ClCC");
        assert!(matches!(
            v.encode(&tokenize("N").unwrap()),
            Err(EmbeddingError::UnknownToken(_))
        ));
    }

    #[test]
    fn sha_rows_bounded_and_tiled() {
        let e = sha_fixed_embedding(10, 74, 10).unwrap(); // d_f = 64
        assert_eq!(e.dim(), (10, 64));
        for x in e.iter() {
            assert!((-1.0..=1.0).contains(x));
        }
        // Cyclic repeat: columns 32..64 equal columns 0..32.
        for i in 0..10 {
            for j in 0..32 {
                assert_eq!(e[(i, j)], e[(i, 32 + j)]);
            }
        }
    }

    #[test]
    fn sha_is_bitwise_deterministic() {
        let a = sha_fixed_embedding(41, 128, 10).unwrap();
        let b = sha_fixed_embedding(41, 128, 10).unwrap();
        for (x, y) in a.iter().zip(b.iter()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn sha_bad_dimensions() {
        assert!(sha_fixed_embedding(5, 10, 11).is_err());
        assert!(sha_fixed_embedding(5, 10, 10).is_err());
    }

    #[test]
    fn random_fixed_support_and_reproducibility() {
        let e = random_fixed_embedding(100, 64, 64, 3).unwrap();
        let bound = (6.0f64 / 64.0).sqrt();
        for x in e.iter() {
            assert!(x.abs() <= bound);
        }
        assert_eq!(e, random_fixed_embedding(100, 64, 64, 3).unwrap());
        assert_ne!(e, random_fixed_embedding(100, 64, 64, 4).unwrap());
    }

    #[test]
    fn random_fixed_mean_near_zero() {
        // Uniform(-b, b): sd = b/sqrt(3); check the sample mean of 1e5
        // entries is within 3 standard errors of zero.
        let n = 100_000;
        let e = random_fixed_embedding(1000, 100, 100, 11).unwrap();
        let mean = e.iter().sum::<f64>() / n as f64;
        let bound = (6.0f64 / 100.0).sqrt();
        let se = bound / (3.0f64).sqrt() / (n as f64).sqrt();
        assert!(mean.abs() < 3.0 * se, "mean {mean} vs 3se {}", 3.0 * se);
    }

    #[test]
    fn lookup_concatenates_blocks() {
        let emb = HybridEmbedding::sha_fixed(6, 16, 4, 1).unwrap();
        let rows = emb.lookup(&[2, 2]).unwrap();
        assert_eq!(rows.dim(), (2, 16));
        assert_eq!(rows.row(0), rows.row(1));
        for j in 0..4 {
            assert_eq!(rows[(0, j)], emb.e_t()[(2, j)]);
        }
        for j in 0..12 {
            assert_eq!(rows[(0, 4 + j)], emb.e_f()[(2, j)]);
        }
    }

    #[test]
    fn trainable_only_lookup_equals_e_t() {
        let emb = HybridEmbedding::trainable_only(5, 8, 9);
        let rows = emb.lookup(&[3]).unwrap();
        for j in 0..8 {
            assert_eq!(rows[(0, j)], emb.e_t()[(3, j)]);
        }
    }

    #[test]
    fn degenerate_sha_mode_matches_trainable_only() {
        let a = HybridEmbedding::sha_fixed(5, 8, 8, 9).unwrap();
        let b = HybridEmbedding::trainable_only(5, 8, 9);
        assert_eq!(a.lookup(&[0, 4]).unwrap(), b.lookup(&[0, 4]).unwrap());
    }

    #[test]
    fn lookup_rejects_out_of_range() {
        let emb = HybridEmbedding::trainable_only(5, 8, 9);
        assert!(matches!(
            emb.lookup(&[5]),
            Err(EmbeddingError::IndexOutOfVocabulary { id: 5, size: 5 })
        ));
    }

    #[test]
    fn apply_gradient_touches_only_trainable_block() {
        let mut emb = HybridEmbedding::sha_fixed(6, 16, 4, 1).unwrap();
        let before_f = emb.e_f().to_owned();
        let checksum = emb.e_f_checksum();
        let grads = Array2::from_elem((6, 16), 1.0);
        emb.apply_gradient(&grads, |e_t, g| {
            *e_t -= &(0.1 * &g.to_owned());
        })
        .unwrap();
        assert_eq!(emb.e_f(), before_f.view());
        assert_eq!(emb.e_f_checksum(), checksum);
    }

    #[test]
    fn apply_gradient_zero_is_identity() {
        let mut emb = HybridEmbedding::sha_fixed(6, 16, 4, 1).unwrap();
        let before = emb.clone();
        let grads = Array2::zeros((6, 16));
        emb.apply_gradient(&grads, |e_t, g| {
            *e_t -= &(0.1 * &g.to_owned());
        })
        .unwrap();
        assert_eq!(emb, before);
    }

    #[test]
    fn apply_gradient_shape_checked() {
        let mut emb = HybridEmbedding::sha_fixed(6, 16, 4, 1).unwrap();
        let grads = Array2::zeros((6, 15));
        assert!(matches!(
            emb.apply_gradient(&grads, |_, _| {}),
            Err(EmbeddingError::ShapeMismatch(_))
        ));
    }

    #[test]
    fn unit_normalize_option() {
        let e = sha_fixed_embedding_with(
            8,
            40,
            8,
            &ShaOptions {
                key_by_token_text: false,
                unit_normalize: true,
            },
            None,
        )
        .unwrap();
        for i in 0..8 {
            let norm: f64 = e.row(i).iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn text_keyed_option_differs_from_index_keyed() {
        let texts: Vec<String> = ["<pad>", "<bos>", "<eos>", "C"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let opts = ShaOptions {
            key_by_token_text: true,
            unit_normalize: false,
        };
        let a = sha_fixed_embedding_with(4, 36, 4, &opts, Some(&texts)).unwrap();
        let b = sha_fixed_embedding(4, 36, 4).unwrap();
        assert_ne!(a, b);
    }
}
