//! SMILES handling: tokenization, parsing, validity, canonicalization,
//! random enumeration, fingerprints, and structural descriptors.
//!
//! All operations are pure functions on immutable inputs.

pub mod canon;
pub mod descriptors;
pub mod enumerate;
pub mod fingerprint;
pub mod graph;
pub mod parse;
pub mod token;
pub mod valence;
mod write;

pub use canon::{canonical_form, canonicalize};
pub use descriptors::{descriptors, DescriptorSet, FunctionalGroup};
pub use enumerate::{augment_dataset, enumerate_random, AugmentError};
pub use fingerprint::{
    morgan_fingerprint, tanimoto, Fingerprint, FingerprintError, DEFAULT_NBITS, DEFAULT_RADIUS,
};
pub use graph::{Atom, Bond, BondOrder, Element, GraphError, MolGraph};
pub use parse::{parse, ParseError};
pub use token::{tokenize, TokenSeq, TokenizeError};
pub use valence::{allowed_valences, check_valences, is_valid};
