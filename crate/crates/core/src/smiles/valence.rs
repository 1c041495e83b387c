//! Valence table and the validity check.
//!
//! A string is valid when it parses and every atom's bond-order sum
//! (including hydrogens, with aromatic bonds counted as 1.5) equals an
//! allowed valence for its element and charge, and every aromatic atom
//! lies in a ring. This is a syntactic check, not full sanitization:
//! there is no kekulization, so five-membered heteroaromatics and fused
//! aromatics must be written in Kekulé form to pass.

use super::graph::{Element, MolGraph};
use super::parse::parse;

/// Allowed valences (full units) for an element at a given formal charge.
/// Base table: B 3, C 4, N 3, N(+) 4, O 2, O(-) 1, P {3,5}, S {2,4,6},
/// halogens 1, plus the usual charge adjustments.
pub fn allowed_valences(element: Element, charge: i8) -> &'static [u32] {
    match (element, charge) {
        (Element::H, 0) => &[1],
        (Element::H, 1) | (Element::H, -1) => &[0],
        (Element::B, 0) => &[3],
        (Element::B, -1) => &[4],
        (Element::C, 0) => &[4],
        (Element::C, 1) | (Element::C, -1) => &[3],
        (Element::N, 0) => &[3],
        (Element::N, 1) => &[4],
        (Element::N, -1) => &[2],
        (Element::O, 0) => &[2],
        (Element::O, 1) => &[3],
        (Element::O, -1) => &[1],
        (Element::P, 0) => &[3, 5],
        (Element::P, 1) => &[4],
        (Element::S, 0) => &[2, 4, 6],
        (Element::S, 1) => &[3, 5],
        (Element::S, -1) => &[1],
        (Element::F | Element::Cl | Element::Br | Element::I, 0) => &[1],
        (Element::F | Element::Cl | Element::Br | Element::I, -1) => &[0],
        _ => &[],
    }
}

/// Implicit hydrogen count for a neutral non-bracket atom: fill up to the
/// smallest allowed valence that accommodates the bond half-order sum with
/// a whole number of hydrogens; zero if none does.
pub fn implicit_hydrogens(element: Element, bond_half_sum: u32) -> u8 {
    for &v in allowed_valences(element, 0) {
        let cap = 2 * v;
        if cap >= bond_half_sum && (cap - bond_half_sum) % 2 == 0 {
            return ((cap - bond_half_sum) / 2) as u8;
        }
    }
    0
}

/// Check all atoms of a parsed graph against the valence table.
pub fn check_valences(g: &MolGraph) -> bool {
    for v in 0..g.atom_count() {
        let atom = g.atom(v);
        if atom.aromatic && !g.is_ring_atom(v) {
            return false;
        }
        let total_half = g.bond_half_sum(v) + 2 * atom.h_count as u32;
        let ok = allowed_valences(atom.element, atom.charge)
            .iter()
            .any(|&val| 2 * val == total_half);
        if !ok {
            return false;
        }
    }
    true
}

/// True iff `s` parses and passes the valence check.
pub fn is_valid(s: &str) -> bool {
    match parse(s) {
        Ok(g) => check_valences(&g),
        Err(_) => false,
    }
}
