//! Core library for low-data generative modeling of energetic molecules.
//!
//! The pipeline: SMILES strings are tokenized and parsed into molecular
//! graphs ([`smiles`]), a character-level LSTM with partially trainable
//! hash-seeded embeddings learns to generate new strings ([`embeddings`],
//! [`seqmodel`]), generated libraries are scored for validity, novelty,
//! uniqueness and similarity ([`genmetrics`]), an attentive message-passing
//! network predicts nine energetic properties per molecule ([`gnn`]), and
//! [`theory`] provides numeric verification of the embedding-conditioning
//! analysis (coherence, Gershgorin bounds, generalization bounds).

extern crate blas_src;

pub mod dataset;
pub mod embeddings;
pub mod genmetrics;
pub mod gnn;
pub mod rng;
pub mod seqmodel;
pub mod smiles;
pub mod theory;

pub use dataset::MoleculeRecord;
pub use embeddings::{HybridEmbedding, Vocabulary};
pub use smiles::{Fingerprint, MolGraph, TokenSeq};
