//! Random SMILES enumeration for data augmentation.
//!
//! A random enumeration is a depth-first rewrite of the molecule from a
//! uniformly chosen root atom with uniformly shuffled neighbor order, so
//! every output parses back to the same graph. Augmentation keeps each
//! original string and appends `factor - 1` enumerations per molecule.

use thiserror::Error;

use super::graph::MolGraph;
use super::parse::{parse, ParseError};
use super::write::{component_atoms, write_component};
use crate::rng::{derive_seed, SplitMix64};

/// One random SMILES writing of `g`, reproducible from `seed`.
pub fn enumerate_random(g: &MolGraph, seed: u64) -> String {
    let mut rng = SplitMix64::new(seed);
    let mut comps = component_atoms(g);
    rng.shuffle(&mut comps);
    let mut parts = Vec::with_capacity(comps.len());
    for comp in &comps {
        let root = comp[rng.gen_range(comp.len())];
        let s = write_component(g, root, |_, ns| rng.shuffle(ns));
        parts.push(s);
    }
    parts.join(".")
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AugmentError {
    #[error("augmentation factor must be at least 1")]
    BadFactor,
    #[error("molecule at index {index} failed to parse: {source}")]
    InvalidMolecule {
        index: usize,
        #[source]
        source: ParseError,
    },
}

/// Expand a SMILES list by random enumeration. Output is grouped per input
/// molecule: the original string followed by `factor - 1` enumerations.
/// Factor 1 returns the input unchanged.
pub fn augment_dataset(
    smiles: &[String],
    factor: usize,
    seed: u64,
) -> Result<Vec<String>, AugmentError> {
    if factor < 1 {
        return Err(AugmentError::BadFactor);
    }
    let mut out = Vec::with_capacity(smiles.len() * factor);
    for (index, s) in smiles.iter().enumerate() {
        let g = parse(s).map_err(|source| AugmentError::InvalidMolecule { index, source })?;
        out.push(s.clone());
        for k in 1..factor {
            let sub = derive_seed(seed, &format!("augment/{index}/{k}"));
            out.push(enumerate_random(&g, sub));
        }
    }
    Ok(out)
}
