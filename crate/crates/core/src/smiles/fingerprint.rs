//! Circular (Morgan-style) fingerprints and Tanimoto similarity.
//!
//! Each atom starts from an invariant of (atomic number, degree, charge,
//! hydrogen count, ring flag, aromatic flag); every iteration combines an
//! atom's identifier with the sorted (bond order, identifier) pairs of its
//! neighbors through a 64-bit FNV-1a mix. Identifiers from all radii are
//! folded into a fixed-width bit vector, so the fingerprint depends only on
//! the graph, never on the SMILES writing that produced it.

use thiserror::Error;

use super::graph::MolGraph;
use crate::rng::fnv1a64;

pub const DEFAULT_RADIUS: u32 = 2;
pub const DEFAULT_NBITS: usize = 2048;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fingerprint {
    words: Vec<u64>,
    nbits: usize,
    radius: u32,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FingerprintError {
    #[error("fingerprint widths differ: {0} vs {1}")]
    WidthMismatch(usize, usize),
}

impl Fingerprint {
    pub fn nbits(&self) -> usize {
        self.nbits
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    pub fn popcount(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    pub fn get(&self, bit: usize) -> bool {
        self.words[bit / 64] >> (bit % 64) & 1 == 1
    }

    fn set(&mut self, bit: usize) {
        self.words[bit / 64] |= 1 << (bit % 64);
    }

    /// Indices of set bits, ascending.
    pub fn on_bits(&self) -> Vec<usize> {
        (0..self.nbits).filter(|&b| self.get(b)).collect()
    }
}

/// Circular fingerprint of `g` with the given radius and width
/// (width must be a power of two).
pub fn morgan_fingerprint(g: &MolGraph, radius: u32, nbits: usize) -> Fingerprint {
    assert!(nbits.is_power_of_two() && nbits >= 64, "nbits must be a power of two >= 64");
    let mut fp = Fingerprint {
        words: vec![0; nbits / 64],
        nbits,
        radius,
    };
    let mask = (nbits - 1) as u64;

    let mut ids: Vec<u64> = (0..g.atom_count())
        .map(|v| {
            let a = g.atom(v);
            fnv1a64(&[
                a.element.atomic_number(),
                g.degree(v) as u8,
                (a.charge as i16 + 64) as u8,
                a.h_count,
                u8::from(g.is_ring_atom(v)),
                u8::from(a.aromatic),
            ])
        })
        .collect();
    for &id in &ids {
        fp.set((id & mask) as usize);
    }

    for r in 1..=radius {
        let mut next = ids.clone();
        for v in 0..g.atom_count() {
            let mut env: Vec<(u32, u64)> = g
                .neighbors(v)
                .iter()
                .map(|&(u, bi)| (g.bond(bi).order.half_order(), ids[u]))
                .collect();
            env.sort_unstable();
            let mut bytes = Vec::with_capacity(12 + env.len() * 12);
            bytes.extend_from_slice(&r.to_le_bytes());
            bytes.extend_from_slice(&ids[v].to_le_bytes());
            for (order, id) in env {
                bytes.extend_from_slice(&order.to_le_bytes());
                bytes.extend_from_slice(&id.to_le_bytes());
            }
            next[v] = fnv1a64(&bytes);
        }
        ids = next;
        for &id in &ids {
            fp.set((id & mask) as usize);
        }
    }
    fp
}

/// Tanimoto similarity |a AND b| / |a OR b|; 0 when both are empty.
pub fn tanimoto(a: &Fingerprint, b: &Fingerprint) -> Result<f64, FingerprintError> {
    if a.nbits != b.nbits {
        return Err(FingerprintError::WidthMismatch(a.nbits, b.nbits));
    }
    let mut inter = 0u32;
    let mut union = 0u32;
    for (x, y) in a.words.iter().zip(&b.words) {
        inter += (x & y).count_ones();
        union += (x | y).count_ones();
    }
    if union == 0 {
        Ok(0.0)
    } else {
        Ok(inter as f64 / union as f64)
    }
}
