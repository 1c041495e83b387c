//! Character-level LSTM SMILES generator.
//!
//! Two unidirectional LSTM layers over hybrid token embeddings, dropout
//! after the embedding and after the second LSTM layer, a linear decoder to
//! vocabulary logits, masked cross-entropy (nats per token), Adam with
//! global-norm gradient clipping, teacher-forced training with per-batch
//! dynamic padding, temperature sampling, and bit-exact checkpointing.

mod adam;
mod checkpoint;
mod model;
mod sample;
mod train;

pub use adam::{clip_global_norm, AdamState, BETA1, BETA2, EPSILON, GRAD_CLIP_NORM};
pub use checkpoint::GeneratorCheckpoint;
pub use model::{
    backward, forward, loss_and_dlogits, Batch, Forward, Generator, Gradients, LstmLayer,
    LstmParameters,
};
pub use sample::{sample, SampleOptions};
pub use train::{train, TrainingHistory};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use crate::embeddings::EmbeddingMode;

#[derive(Debug, Error)]
pub enum SeqModelError {
    #[error("bad config: {0}")]
    BadConfig(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite activation encountered ({0})")]
    NonFiniteActivation(String),
    #[error("all positions are masked; loss undefined")]
    AllPositionsMasked,
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("invalid SMILES at index {index}: {reason}")]
    InvalidSmiles { index: usize, reason: String },
    #[error("temperature must be positive, got {0}")]
    BadTemperature(f64),
    #[error("embedding error: {0}")]
    Embedding(#[from] crate::embeddings::EmbeddingError),
    #[error("checkpoint i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("checkpoint format: {0}")]
    BadCheckpoint(String),
}

/// Generator hyperparameters. Defaults: 256 hidden units, 2 layers,
/// d = 128 with d_t = 50 trainable columns, SHA-fixed embeddings,
/// dropout 0.3, learning rate 1e-3, batch size 32, 300 epochs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub hidden_size: usize,
    pub layers: usize,
    pub d: usize,
    pub d_t: usize,
    pub mode: EmbeddingMode,
    pub dropout: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub max_sample_len: usize,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            hidden_size: 256,
            layers: 2,
            d: 128,
            d_t: 50,
            mode: EmbeddingMode::ShaFixed,
            dropout: 0.3,
            learning_rate: 1e-3,
            batch_size: 32,
            epochs: 300,
            max_sample_len: 200,
            seed: 42,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<(), SeqModelError> {
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(SeqModelError::BadConfig(format!(
                "dropout {} outside [0, 1)",
                self.dropout
            )));
        }
        for (name, v) in [
            ("hidden_size", self.hidden_size),
            ("layers", self.layers),
            ("d", self.d),
            ("batch_size", self.batch_size),
            ("epochs", self.epochs),
            ("max_sample_len", self.max_sample_len),
        ] {
            if v < 1 {
                return Err(SeqModelError::BadConfig(format!("{name} must be >= 1")));
            }
        }
        if self.d_t > self.d {
            return Err(SeqModelError::BadConfig(format!(
                "d_t {} exceeds d {}",
                self.d_t, self.d
            )));
        }
        if self.learning_rate <= 0.0 {
            return Err(SeqModelError::BadConfig("learning rate must be > 0".into()));
        }
        Ok(())
    }
}
