//! SMILES parser for the organic subset.
//!
//! Supported: atoms B C N O P S F Cl Br I, aromatic b c n o p s, bracket
//! atoms with isotope / charge / explicit hydrogen (chirality marks and
//! atom classes are parsed and discarded), branches, ring closures
//! (digits and `%nn`), bond symbols `- = # :` plus directional `/ \`
//! (read as single bonds), and `.` for disconnected components.
//!
//! Implicit hydrogens on non-bracket atoms are assigned from the valence
//! table: the smallest allowed valence that accommodates the bond-order
//! sum. Ring-closure labels may not cross a `.` boundary, which keeps the
//! cyclomatic ring count equal to the number of closure pairs consumed.

use std::collections::HashMap;

use thiserror::Error;

use super::graph::{Atom, Bond, BondOrder, Element, MolGraph};
use super::valence::implicit_hydrogens;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("input is empty")]
    EmptyInput,
    #[error("non-ASCII byte at position {0}")]
    NonAsciiInput(usize),
    #[error("unbalanced parenthesis at position {0}")]
    UnbalancedParenthesis(usize),
    #[error("ring bond {0} opened but never closed")]
    UnclosedRingBond(u16),
    #[error("ring bond {label} closes onto its own opening atom at position {pos}")]
    SelfRingBond { label: u16, pos: usize },
    #[error("ring bond {label} duplicates an existing bond at position {pos}")]
    DuplicateRingBond { label: u16, pos: usize },
    #[error("ring bond {label} opened and closed with conflicting bond orders")]
    ConflictingRingBondOrder { label: u16 },
    #[error("ring bond {label} crosses a '.' component separator")]
    RingBondAcrossDot { label: u16 },
    #[error("unknown atom symbol '{text}' at position {pos}")]
    UnknownAtomSymbol { pos: usize, text: String },
    #[error("malformed bracket atom at position {0}")]
    MalformedBracketAtom(usize),
    #[error("bond symbol at position {0} has nothing to bond to")]
    DanglingBondSymbol(usize),
    #[error("unexpected character '{ch}' at position {pos}")]
    UnexpectedCharacter { pos: usize, ch: char },
}

struct RingEntry {
    atom: usize,
    order: Option<BondOrder>,
    component: usize,
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
    component: usize,
    prev: Option<usize>,
    branch_stack: Vec<usize>,
    pending: Option<(BondOrder, usize)>,
    rings: HashMap<u16, RingEntry>,
}

/// Parse a SMILES string into a molecular graph.
pub fn parse(s: &str) -> Result<MolGraph, ParseError> {
    if s.is_empty() {
        return Err(ParseError::EmptyInput);
    }
    if let Some(pos) = s.bytes().position(|b| !b.is_ascii()) {
        return Err(ParseError::NonAsciiInput(pos));
    }
    let mut p = Parser {
        bytes: s.as_bytes(),
        pos: 0,
        atoms: Vec::new(),
        bonds: Vec::new(),
        component: 0,
        prev: None,
        branch_stack: Vec::new(),
        pending: None,
        rings: HashMap::new(),
    };
    p.run()?;
    p.finish()
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn run(&mut self) -> Result<(), ParseError> {
        while let Some(c) = self.peek() {
            match c {
                b'(' => {
                    if let Some((_, pos)) = self.pending {
                        return Err(ParseError::DanglingBondSymbol(pos));
                    }
                    match self.prev {
                        Some(v) => self.branch_stack.push(v),
                        None => return Err(ParseError::UnbalancedParenthesis(self.pos)),
                    }
                    self.pos += 1;
                }
                b')' => {
                    if let Some((_, pos)) = self.pending {
                        return Err(ParseError::DanglingBondSymbol(pos));
                    }
                    match self.branch_stack.pop() {
                        Some(v) => self.prev = Some(v),
                        None => return Err(ParseError::UnbalancedParenthesis(self.pos)),
                    }
                    self.pos += 1;
                }
                b'-' | b'=' | b'#' | b':' | b'/' | b'\\' => {
                    if self.pending.is_some() || self.prev.is_none() {
                        return Err(ParseError::DanglingBondSymbol(self.pos));
                    }
                    let order = match c {
                        b'=' => BondOrder::Double,
                        b'#' => BondOrder::Triple,
                        b':' => BondOrder::Aromatic,
                        // '-', '/' and '\' all denote single bonds; bond
                        // direction is ignored for graph identity.
                        _ => BondOrder::Single,
                    };
                    self.pending = Some((order, self.pos));
                    self.pos += 1;
                }
                b'.' => {
                    if let Some((_, pos)) = self.pending {
                        return Err(ParseError::DanglingBondSymbol(pos));
                    }
                    if !self.branch_stack.is_empty() {
                        return Err(ParseError::UnbalancedParenthesis(self.pos));
                    }
                    if self.prev.is_none() {
                        return Err(ParseError::UnexpectedCharacter {
                            pos: self.pos,
                            ch: '.',
                        });
                    }
                    self.prev = None;
                    self.component += 1;
                    self.pos += 1;
                }
                b'0'..=b'9' => {
                    let label = (c - b'0') as u16;
                    self.pos += 1;
                    self.ring_bond(label)?;
                }
                b'%' => {
                    let start = self.pos;
                    let d1 = self.bytes.get(self.pos + 1).copied();
                    let d2 = self.bytes.get(self.pos + 2).copied();
                    match (d1, d2) {
                        (Some(a), Some(b)) if a.is_ascii_digit() && b.is_ascii_digit() => {
                            let label = ((a - b'0') as u16) * 10 + (b - b'0') as u16;
                            self.pos += 3;
                            self.ring_bond(label)?;
                        }
                        _ => {
                            return Err(ParseError::UnexpectedCharacter {
                                pos: start,
                                ch: '%',
                            })
                        }
                    }
                }
                b'[' => {
                    let atom = self.bracket_atom()?;
                    self.add_atom(atom)?;
                }
                _ => {
                    let atom = self.organic_atom()?;
                    self.add_atom(atom)?;
                }
            }
        }
        Ok(())
    }

    fn finish(mut self) -> Result<MolGraph, ParseError> {
        if let Some((_, pos)) = self.pending {
            return Err(ParseError::DanglingBondSymbol(pos));
        }
        if !self.branch_stack.is_empty() {
            return Err(ParseError::UnbalancedParenthesis(self.bytes.len()));
        }
        if let Some(label) = self.rings.keys().min() {
            return Err(ParseError::UnclosedRingBond(*label));
        }
        if self.atoms.is_empty() {
            return Err(ParseError::EmptyInput);
        }
        // Assign implicit hydrogens to non-bracket atoms now that all bonds
        // are known. Bracket atoms keep their explicit count.
        let half_sums: Vec<u32> = (0..self.atoms.len())
            .map(|v| {
                self.bonds
                    .iter()
                    .filter(|b| b.a == v || b.b == v)
                    .map(|b| b.order.half_order())
                    .sum()
            })
            .collect();
        for (v, atom) in self.atoms.iter_mut().enumerate() {
            if !atom.bracket {
                atom.h_count = implicit_hydrogens(atom.element, half_sums[v]);
            }
        }
        // Self-bonds and duplicates are rejected at ring closure, so graph
        // construction cannot fail here.
        Ok(MolGraph::new(self.atoms, self.bonds).expect("parser guarantees graph invariants"))
    }

    fn add_atom(&mut self, atom: Atom) -> Result<(), ParseError> {
        let idx = self.atoms.len();
        self.atoms.push(atom);
        if let Some(prev) = self.prev {
            let order = match self.pending.take() {
                Some((o, _)) => o,
                None => self.default_order(prev, idx),
            };
            self.bonds.push(Bond {
                a: prev,
                b: idx,
                order,
            });
        }
        self.prev = Some(idx);
        Ok(())
    }

    /// Unannotated bonds are aromatic when both endpoints are aromatic,
    /// single otherwise.
    fn default_order(&self, a: usize, b: usize) -> BondOrder {
        if self.atoms[a].aromatic && self.atoms[b].aromatic {
            BondOrder::Aromatic
        } else {
            BondOrder::Single
        }
    }

    fn ring_bond(&mut self, label: u16) -> Result<(), ParseError> {
        let pos = self.pos;
        let Some(current) = self.prev else {
            return Err(ParseError::UnexpectedCharacter {
                pos,
                ch: self.bytes[pos.saturating_sub(1)] as char,
            });
        };
        let pending = self.pending.take().map(|(o, _)| o);
        match self.rings.remove(&label) {
            None => {
                self.rings.insert(
                    label,
                    RingEntry {
                        atom: current,
                        order: pending,
                        component: self.component,
                    },
                );
            }
            Some(entry) => {
                if entry.atom == current {
                    return Err(ParseError::SelfRingBond { label, pos });
                }
                if entry.component != self.component {
                    return Err(ParseError::RingBondAcrossDot { label });
                }
                let order = match (entry.order, pending) {
                    (Some(a), Some(b)) if a != b => {
                        return Err(ParseError::ConflictingRingBondOrder { label })
                    }
                    (Some(a), _) => a,
                    (None, Some(b)) => b,
                    (None, None) => self.default_order(entry.atom, current),
                };
                if self
                    .bonds
                    .iter()
                    .any(|b| (b.a, b.b) == (entry.atom, current) || (b.b, b.a) == (entry.atom, current))
                {
                    return Err(ParseError::DuplicateRingBond { label, pos });
                }
                self.bonds.push(Bond {
                    a: entry.atom,
                    b: current,
                    order,
                });
            }
        }
        Ok(())
    }

    fn organic_atom(&mut self) -> Result<Atom, ParseError> {
        let pos = self.pos;
        let c = self.bytes[pos];
        // Two-letter halogens first.
        if (c == b'C' || c == b'B') && matches!(self.bytes.get(pos + 1), Some(b'l') | Some(b'r')) {
            let pair = &self.bytes[pos..pos + 2];
            if pair == b"Cl" || pair == b"Br" {
                self.pos += 2;
                let element = if pair == b"Cl" { Element::Cl } else { Element::Br };
                return Ok(plain_atom(element, false));
            }
        }
        let (element, aromatic) = match c {
            b'B' => (Element::B, false),
            b'C' => (Element::C, false),
            b'N' => (Element::N, false),
            b'O' => (Element::O, false),
            b'P' => (Element::P, false),
            b'S' => (Element::S, false),
            b'F' => (Element::F, false),
            b'I' => (Element::I, false),
            b'b' => (Element::B, true),
            b'c' => (Element::C, true),
            b'n' => (Element::N, true),
            b'o' => (Element::O, true),
            b'p' => (Element::P, true),
            b's' => (Element::S, true),
            _ if c.is_ascii_alphabetic() => {
                return Err(ParseError::UnknownAtomSymbol {
                    pos,
                    text: (c as char).to_string(),
                })
            }
            _ => {
                return Err(ParseError::UnexpectedCharacter {
                    pos,
                    ch: c as char,
                })
            }
        };
        self.pos += 1;
        Ok(plain_atom(element, aromatic))
    }

    fn bracket_atom(&mut self) -> Result<Atom, ParseError> {
        let open = self.pos;
        self.pos += 1; // consume '['

        // Isotope digits.
        let mut isotope: Option<u16> = None;
        while let Some(c) = self.peek() {
            if c.is_ascii_digit() {
                let v = isotope.unwrap_or(0) * 10 + (c - b'0') as u16;
                if v > 999 {
                    return Err(ParseError::MalformedBracketAtom(open));
                }
                isotope = Some(v);
                self.pos += 1;
            } else {
                break;
            }
        }

        // Element symbol.
        let (element, aromatic) = self.bracket_symbol(open)?;

        // Chirality marks, parsed and ignored.
        while self.peek() == Some(b'@') {
            self.pos += 1;
        }

        // Explicit hydrogen count.
        let mut h_count: u8 = 0;
        if self.peek() == Some(b'H') {
            self.pos += 1;
            h_count = 1;
            let mut digits = 0u32;
            let mut saw_digit = false;
            while let Some(c) = self.peek() {
                if c.is_ascii_digit() {
                    digits = digits * 10 + (c - b'0') as u32;
                    saw_digit = true;
                    self.pos += 1;
                } else {
                    break;
                }
            }
            if saw_digit {
                if digits > 9 {
                    return Err(ParseError::MalformedBracketAtom(open));
                }
                h_count = digits as u8;
            }
        }

        // Charge: '+' / '-' optionally repeated or followed by digits.
        let mut charge: i8 = 0;
        if let Some(sign_char @ (b'+' | b'-')) = self.peek() {
            let sign: i8 = if sign_char == b'+' { 1 } else { -1 };
            self.pos += 1;
            let mut magnitude: i8 = 1;
            if let Some(c) = self.peek() {
                if c.is_ascii_digit() {
                    magnitude = (c - b'0') as i8;
                    self.pos += 1;
                } else {
                    while self.peek() == Some(sign_char) {
                        magnitude += 1;
                        self.pos += 1;
                    }
                }
            }
            charge = sign * magnitude;
        }

        // Atom class ':n', parsed and ignored.
        if self.peek() == Some(b':') {
            self.pos += 1;
            let mut saw_digit = false;
            while let Some(c) = self.peek() {
                if c.is_ascii_digit() {
                    saw_digit = true;
                    self.pos += 1;
                } else {
                    break;
                }
            }
            if !saw_digit {
                return Err(ParseError::MalformedBracketAtom(open));
            }
        }

        if self.peek() != Some(b']') {
            return Err(ParseError::MalformedBracketAtom(open));
        }
        self.pos += 1;

        Ok(Atom {
            element,
            aromatic,
            charge,
            h_count,
            isotope,
            bracket: true,
        })
    }

    fn bracket_symbol(&mut self, open: usize) -> Result<(Element, bool), ParseError> {
        let pos = self.pos;
        let Some(c) = self.peek() else {
            return Err(ParseError::MalformedBracketAtom(open));
        };
        // Two-letter symbols.
        if c.is_ascii_uppercase() {
            if let Some(&next) = self.bytes.get(pos + 1) {
                if next.is_ascii_lowercase() {
                    let two = std::str::from_utf8(&self.bytes[pos..pos + 2]).unwrap();
                    if let Some(el) = Element::from_symbol(two) {
                        self.pos += 2;
                        return Ok((el, false));
                    }
                    // A lowercase letter after an uppercase one can only be
                    // a two-letter element; anything unrecognized is an
                    // unsupported element rather than a syntax problem.
                    return Err(ParseError::UnknownAtomSymbol {
                        pos,
                        text: two.to_string(),
                    });
                }
            }
            let one = std::str::from_utf8(&self.bytes[pos..pos + 1]).unwrap();
            if let Some(el) = Element::from_symbol(one) {
                self.pos += 1;
                return Ok((el, false));
            }
            return Err(ParseError::UnknownAtomSymbol {
                pos,
                text: one.to_string(),
            });
        }
        if c.is_ascii_lowercase() {
            let el = match c {
                b'b' => Element::B,
                b'c' => Element::C,
                b'n' => Element::N,
                b'o' => Element::O,
                b'p' => Element::P,
                b's' => Element::S,
                _ => {
                    return Err(ParseError::UnknownAtomSymbol {
                        pos,
                        text: (c as char).to_string(),
                    })
                }
            };
            self.pos += 1;
            return Ok((el, true));
        }
        Err(ParseError::MalformedBracketAtom(open))
    }
}

fn plain_atom(element: Element, aromatic: bool) -> Atom {
    Atom {
        element,
        aromatic,
        charge: 0,
        h_count: 0, // assigned in finish()
        isotope: None,
        bracket: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ethanol() {
        let g = parse("CCO").unwrap();
        assert_eq!(g.atom_count(), 3);
        assert_eq!(g.bond_count(), 2);
        assert_eq!(g.ring_count(), 0);
        assert_eq!(g.atom(0).h_count, 3);
        assert_eq!(g.atom(1).h_count, 2);
        assert_eq!(g.atom(2).h_count, 1);
    }

    #[test]
    fn benzene() {
        let g = parse("c1ccccc1").unwrap();
        assert_eq!(g.atom_count(), 6);
        assert_eq!(g.bond_count(), 6);
        assert_eq!(g.ring_count(), 1);
        assert!(g.atoms().iter().all(|a| a.aromatic && a.h_count == 1));
        assert!(g.bonds().iter().all(|b| b.order == BondOrder::Aromatic));
    }

    #[test]
    fn branches_and_double_bonds() {
        let g = parse("CC(=O)O").unwrap(); // acetic acid
        assert_eq!(g.atom_count(), 4);
        assert_eq!(g.bond_count(), 3);
        let double = g
            .bonds()
            .iter()
            .filter(|b| b.order == BondOrder::Double)
            .count();
        assert_eq!(double, 1);
    }

    #[test]
    fn nitro_group_bracket_atoms() {
        let g = parse("C[N+](=O)[O-]").unwrap();
        assert_eq!(g.atom_count(), 4);
        let n = g.atoms().iter().find(|a| a.element == Element::N).unwrap();
        assert_eq!(n.charge, 1);
        let o_minus = g.atoms().iter().filter(|a| a.charge == -1).count();
        assert_eq!(o_minus, 1);
    }

    #[test]
    fn percent_ring_closure() {
        let g = parse("C%12CC%12").unwrap();
        assert_eq!(g.ring_count(), 1);
        assert_eq!(g.atom_count(), 3);
    }

    #[test]
    fn dot_components() {
        let g = parse("CCO.CC").unwrap();
        assert_eq!(g.components(), 2);
        assert_eq!(g.atom_count(), 5);
        assert_eq!(g.ring_count(), 0);
    }

    #[test]
    fn isotope_and_hydrogens() {
        let g = parse("[13CH4]").unwrap();
        assert_eq!(g.atom(0).isotope, Some(13));
        assert_eq!(g.atom(0).h_count, 4);
        let g = parse("[nH]").unwrap();
        assert_eq!(g.atom(0).h_count, 1);
        assert!(g.atom(0).aromatic);
    }

    #[test]
    fn charges() {
        assert_eq!(parse("[O-]").unwrap().atom(0).charge, -1);
        assert_eq!(parse("[O--]").unwrap().atom(0).charge, -2);
        assert_eq!(parse("[N+2]").unwrap().atom(0).charge, 2);
    }

    #[test]
    fn error_unclosed_ring() {
        assert_eq!(parse("C1CC"), Err(ParseError::UnclosedRingBond(1)));
    }

    #[test]
    fn error_unbalanced_parens() {
        assert!(matches!(
            parse("C(C"),
            Err(ParseError::UnbalancedParenthesis(_))
        ));
        assert!(matches!(
            parse("C)C"),
            Err(ParseError::UnbalancedParenthesis(_))
        ));
        assert!(matches!(
            parse("(C)"),
            Err(ParseError::UnbalancedParenthesis(_))
        ));
    }

    #[test]
    fn error_dangling_bond() {
        assert!(matches!(parse("C="), Err(ParseError::DanglingBondSymbol(_))));
        assert!(matches!(parse("=C"), Err(ParseError::DanglingBondSymbol(_))));
        assert!(matches!(
            parse("C(=)O"),
            Err(ParseError::DanglingBondSymbol(_))
        ));
    }

    #[test]
    fn error_unknown_symbol() {
        assert!(matches!(
            parse("CX"),
            Err(ParseError::UnknownAtomSymbol { .. })
        ));
        assert!(matches!(
            parse("[Na]"),
            Err(ParseError::UnknownAtomSymbol { .. })
        ));
    }

    #[test]
    fn error_malformed_bracket() {
        assert!(matches!(
            parse("[C"),
            Err(ParseError::MalformedBracketAtom(_))
        ));
        assert!(matches!(
            parse("[]"),
            Err(ParseError::MalformedBracketAtom(_))
        ));
    }

    #[test]
    fn error_ring_self_and_duplicate() {
        assert!(matches!(parse("C11"), Err(ParseError::SelfRingBond { .. })));
        assert!(matches!(
            parse("C12CC12"),
            Err(ParseError::DuplicateRingBond { .. })
        ));
    }

    #[test]
    fn error_conflicting_ring_order() {
        assert!(matches!(
            parse("C=1CCCCC#1"),
            Err(ParseError::ConflictingRingBondOrder { .. })
        ));
    }

    #[test]
    fn error_ring_across_dot() {
        assert!(matches!(
            parse("C1CC.CC1"),
            Err(ParseError::RingBondAcrossDot { .. })
        ));
    }

    #[test]
    fn ring_closure_with_matching_order() {
        let g = parse("C=1CCCCC=1").unwrap();
        assert_eq!(
            g.bonds()
                .iter()
                .filter(|b| b.order == BondOrder::Double)
                .count(),
            1
        );
    }

    #[test]
    fn directional_bonds_become_single() {
        let g = parse("C/C=C/C").unwrap();
        assert_eq!(g.bond_count(), 3);
        assert_eq!(
            g.bonds()
                .iter()
                .filter(|b| b.order == BondOrder::Single)
                .count(),
            2
        );
    }

    #[test]
    fn aromatic_vs_single_default_bond() {
        // Explicit single bond between two aromatic rings stays single.
        let g = parse("c1ccccc1-c1ccccc1").unwrap();
        let single = g
            .bonds()
            .iter()
            .filter(|b| b.order == BondOrder::Single)
            .count();
        assert_eq!(single, 1);
        assert_eq!(g.ring_count(), 2);
    }
}
