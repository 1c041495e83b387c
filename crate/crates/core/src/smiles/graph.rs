//! Molecular graph representation.
//!
//! [`MolGraph`] stores atoms, bonds, connected-component count, and
//! precomputed ring membership (an atom/bond is "in a ring" when it lies on
//! some cycle, found by bridge detection). The cyclomatic ring count is
//! `bonds - atoms + components`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Elements supported by the parser: the SMILES organic subset plus
/// bracket-only hydrogen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Element {
    H,
    B,
    C,
    N,
    O,
    F,
    P,
    S,
    Cl,
    Br,
    I,
}

impl Element {
    pub fn symbol(self) -> &'static str {
        match self {
            Element::H => "H",
            Element::B => "B",
            Element::C => "C",
            Element::N => "N",
            Element::O => "O",
            Element::F => "F",
            Element::P => "P",
            Element::S => "S",
            Element::Cl => "Cl",
            Element::Br => "Br",
            Element::I => "I",
        }
    }

    pub fn from_symbol(s: &str) -> Option<Element> {
        Some(match s {
            "H" => Element::H,
            "B" => Element::B,
            "C" => Element::C,
            "N" => Element::N,
            "O" => Element::O,
            "F" => Element::F,
            "P" => Element::P,
            "S" => Element::S,
            "Cl" => Element::Cl,
            "Br" => Element::Br,
            "I" => Element::I,
            _ => return None,
        })
    }

    /// Elements that may be written lowercase (aromatic) in SMILES.
    pub fn supports_aromatic(self) -> bool {
        matches!(
            self,
            Element::B | Element::C | Element::N | Element::O | Element::P | Element::S
        )
    }

    /// Standard atomic mass, g/mol.
    pub fn atomic_mass(self) -> f64 {
        match self {
            Element::H => 1.008,
            Element::B => 10.811,
            Element::C => 12.011,
            Element::N => 14.007,
            Element::O => 15.999,
            Element::F => 18.998,
            Element::P => 30.974,
            Element::S => 32.06,
            Element::Cl => 35.45,
            Element::Br => 79.904,
            Element::I => 126.904,
        }
    }

    /// Stable small integer used in fingerprint invariants and feature
    /// one-hots.
    pub fn atomic_number(self) -> u8 {
        match self {
            Element::H => 1,
            Element::B => 5,
            Element::C => 6,
            Element::N => 7,
            Element::O => 8,
            Element::F => 9,
            Element::P => 15,
            Element::S => 16,
            Element::Cl => 17,
            Element::Br => 35,
            Element::I => 53,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BondOrder {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondOrder {
    /// Bond order in half-units so aromatic (1.5) stays integral:
    /// single 2, aromatic 3, double 4, triple 6.
    pub fn half_order(self) -> u32 {
        match self {
            BondOrder::Single => 2,
            BondOrder::Double => 4,
            BondOrder::Triple => 6,
            BondOrder::Aromatic => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Atom {
    pub element: Element,
    pub aromatic: bool,
    /// Formal charge in elementary units.
    pub charge: i8,
    /// Total hydrogen count. Trusted as written for bracket atoms,
    /// assigned from the valence table otherwise.
    pub h_count: u8,
    pub isotope: Option<u16>,
    /// True when the atom came from a `[...]` bracket expression, which
    /// makes its hydrogen count explicit rather than inferred.
    pub bracket: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub order: BondOrder,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("bond endpoint {0} out of range for {1} atoms")]
    EndpointOutOfRange(usize, usize),
    #[error("self-bond on atom {0}")]
    SelfBond(usize),
    #[error("duplicate bond between atoms {0} and {1}")]
    DuplicateBond(usize, usize),
    #[error("graph has no atoms")]
    Empty,
}

/// Parsed molecule: atoms, bonds, component count, ring membership.
#[derive(Debug, Clone, PartialEq)]
pub struct MolGraph {
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
    /// adjacency[v] = (neighbor, bond index)
    adjacency: Vec<Vec<(usize, usize)>>,
    components: usize,
    ring_atom: Vec<bool>,
    ring_bond: Vec<bool>,
}

impl MolGraph {
    pub fn new(atoms: Vec<Atom>, bonds: Vec<Bond>) -> Result<Self, GraphError> {
        if atoms.is_empty() {
            return Err(GraphError::Empty);
        }
        let n = atoms.len();
        let mut adjacency = vec![Vec::new(); n];
        for (bi, bond) in bonds.iter().enumerate() {
            if bond.a >= n {
                return Err(GraphError::EndpointOutOfRange(bond.a, n));
            }
            if bond.b >= n {
                return Err(GraphError::EndpointOutOfRange(bond.b, n));
            }
            if bond.a == bond.b {
                return Err(GraphError::SelfBond(bond.a));
            }
            if adjacency[bond.a].iter().any(|&(u, _)| u == bond.b) {
                return Err(GraphError::DuplicateBond(bond.a, bond.b));
            }
            adjacency[bond.a].push((bond.b, bi));
            adjacency[bond.b].push((bond.a, bi));
        }
        let (components, ring_bond) = bridge_analysis(n, &bonds, &adjacency);
        let mut ring_atom = vec![false; n];
        for (bi, bond) in bonds.iter().enumerate() {
            if ring_bond[bi] {
                ring_atom[bond.a] = true;
                ring_atom[bond.b] = true;
            }
        }
        Ok(Self {
            atoms,
            bonds,
            adjacency,
            components,
            ring_atom,
            ring_bond,
        })
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn bond_count(&self) -> usize {
        self.bonds.len()
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn atom(&self, i: usize) -> &Atom {
        &self.atoms[i]
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn bond(&self, i: usize) -> &Bond {
        &self.bonds[i]
    }

    /// Neighbors of atom `v` as (neighbor index, bond index) pairs.
    pub fn neighbors(&self, v: usize) -> &[(usize, usize)] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn components(&self) -> usize {
        self.components
    }

    /// Cyclomatic ring count: bonds - atoms + components.
    pub fn ring_count(&self) -> usize {
        self.bonds.len() + self.components - self.atoms.len()
    }

    pub fn is_ring_atom(&self, v: usize) -> bool {
        self.ring_atom[v]
    }

    pub fn is_ring_bond(&self, bond_idx: usize) -> bool {
        self.ring_bond[bond_idx]
    }

    /// Sum of bond half-orders at `v`, excluding hydrogens.
    pub fn bond_half_sum(&self, v: usize) -> u32 {
        self.adjacency[v]
            .iter()
            .map(|&(_, bi)| self.bonds[bi].order.half_order())
            .sum()
    }

    /// Molecular formula as sorted (element, count) pairs, hydrogens included.
    pub fn formula(&self) -> Vec<(Element, u32)> {
        let mut counts = std::collections::BTreeMap::new();
        for atom in &self.atoms {
            *counts.entry(atom.element).or_insert(0u32) += 1;
            if atom.h_count > 0 {
                *counts.entry(Element::H).or_insert(0) += atom.h_count as u32;
            }
        }
        counts.into_iter().collect()
    }
}

/// Count connected components and flag non-bridge (ring) bonds using a
/// single iterative DFS with low-link values.
fn bridge_analysis(
    n: usize,
    bonds: &[Bond],
    adjacency: &[Vec<(usize, usize)>],
) -> (usize, Vec<bool>) {
    let mut ring_bond = vec![true; bonds.len()];
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![usize::MAX; n];
    let mut timer = 0usize;
    let mut components = 0usize;

    // Stack frames: (vertex, parent bond index, next adjacency slot).
    let mut stack: Vec<(usize, usize, usize)> = Vec::new();
    for start in 0..n {
        if disc[start] != usize::MAX {
            continue;
        }
        components += 1;
        disc[start] = timer;
        low[start] = timer;
        timer += 1;
        stack.push((start, usize::MAX, 0));
        loop {
            let Some(frame) = stack.last_mut() else { break };
            let (v, pbond) = (frame.0, frame.1);
            if frame.2 < adjacency[v].len() {
                let (u, bi) = adjacency[v][frame.2];
                frame.2 += 1;
                if bi == pbond {
                    continue;
                }
                if disc[u] == usize::MAX {
                    disc[u] = timer;
                    low[u] = timer;
                    timer += 1;
                    stack.push((u, bi, 0));
                } else {
                    low[v] = low[v].min(disc[u]);
                }
            } else {
                stack.pop();
                if let Some(&(parent, _, _)) = stack.last() {
                    low[parent] = low[parent].min(low[v]);
                    if low[v] > disc[parent] {
                        // Bridge: the only path between its endpoints.
                        ring_bond[pbond] = false;
                    }
                }
            }
        }
    }
    (components, ring_bond)
}
