//! Deterministic canonical SMILES.
//!
//! Atoms are partitioned by iterative refinement seeded with
//! (element, aromatic flag, charge, degree, hydrogen count); each round
//! re-keys an atom by its class plus the sorted (bond order, neighbor
//! class) multiset until the partition stabilizes. Remaining ties are
//! resolved by individualization: each tied atom of the lowest tied class
//! is promoted in turn, the partition is re-refined, and the emitted
//! string that compares lexicographically smallest wins. Components are
//! canonicalized independently and joined sorted with `.`.
//!
//! The canonical form is internal to this crate; it is stable across
//! writings of the same molecule but is not the canonical form of any
//! external toolkit.

use super::graph::MolGraph;
use super::write::{component_atoms, write_component};

/// Leaf cap for the individualization search. Molecular automorphism
/// groups explored here are tiny; the cap only guards against adversarial
/// regular graphs.
const SEARCH_LEAF_BUDGET: usize = 50_000;

/// Canonical SMILES of a parsed molecule.
pub fn canonicalize(g: &MolGraph) -> String {
    let base = refine(g, initial_ranks(g));
    let mut parts: Vec<String> = component_atoms(g)
        .iter()
        .map(|comp| {
            let mut best: Option<String> = None;
            let mut budget = SEARCH_LEAF_BUDGET;
            search(g, comp, base.clone(), &mut budget, &mut best);
            best.expect("component emits at least one candidate")
        })
        .collect();
    parts.sort();
    parts.join(".")
}

/// Convenience wrapper: parse then canonicalize.
pub fn canonical_form(s: &str) -> Result<String, super::parse::ParseError> {
    Ok(canonicalize(&super::parse::parse(s)?))
}

fn initial_ranks(g: &MolGraph) -> Vec<u32> {
    let keys: Vec<(u8, bool, i8, usize, u8)> = (0..g.atom_count())
        .map(|v| {
            let a = g.atom(v);
            (
                a.element.atomic_number(),
                a.aromatic,
                a.charge,
                g.degree(v),
                a.h_count,
            )
        })
        .collect();
    rank_by_keys(&keys)
}

fn rank_by_keys<K: Ord>(keys: &[K]) -> Vec<u32> {
    let mut order: Vec<usize> = (0..keys.len()).collect();
    order.sort_by(|&i, &j| keys[i].cmp(&keys[j]));
    let mut ranks = vec![0u32; keys.len()];
    let mut rank = 0u32;
    for w in 0..order.len() {
        if w > 0 && keys[order[w]] != keys[order[w - 1]] {
            rank += 1;
        }
        ranks[order[w]] = rank;
    }
    ranks
}

fn class_count(ranks: &[u32]) -> u32 {
    ranks.iter().copied().max().map_or(0, |m| m + 1)
}

/// Refine a partition to a fixpoint.
fn refine(g: &MolGraph, mut ranks: Vec<u32>) -> Vec<u32> {
    loop {
        let keys: Vec<(u32, Vec<(u32, u32)>)> = (0..g.atom_count())
            .map(|v| {
                let mut nb: Vec<(u32, u32)> = g
                    .neighbors(v)
                    .iter()
                    .map(|&(u, bi)| (g.bond(bi).order.half_order(), ranks[u]))
                    .collect();
                nb.sort_unstable();
                (ranks[v], nb)
            })
            .collect();
        let next = rank_by_keys(&keys);
        if class_count(&next) == class_count(&ranks) {
            return next;
        }
        ranks = next;
    }
}

/// Depth-first individualization over tied classes of one component,
/// keeping the lexicographically smallest emitted string.
fn search(
    g: &MolGraph,
    comp: &[usize],
    ranks: Vec<u32>,
    budget: &mut usize,
    best: &mut Option<String>,
) {
    if *budget == 0 {
        return;
    }
    // Lowest class with a tie inside this component.
    let mut tied_class: Option<u32> = None;
    let mut counts = std::collections::HashMap::new();
    for &v in comp {
        *counts.entry(ranks[v]).or_insert(0u32) += 1;
    }
    for (&r, &c) in &counts {
        if c >= 2 && tied_class.is_none_or(|t| r < t) {
            tied_class = Some(r);
        }
    }

    match tied_class {
        None => {
            *budget -= 1;
            let root = *comp
                .iter()
                .min_by_key(|&&v| ranks[v])
                .expect("component is nonempty");
            let s = write_component(g, root, |_, ns| {
                ns.sort_by_key(|&(u, _)| ranks[u]);
            });
            if best.as_ref().is_none_or(|b| s < *b) {
                *best = Some(s);
            }
        }
        Some(class) => {
            for &a in comp.iter().filter(|&&v| ranks[v] == class) {
                let keys: Vec<(u32, u8)> = ranks
                    .iter()
                    .enumerate()
                    .map(|(v, &r)| (r, u8::from(v != a)))
                    .collect();
                let refined = refine(g, rank_by_keys(&keys));
                search(g, comp, refined, budget, best);
                if *budget == 0 {
                    return;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smiles::parse::parse;

    fn canon(s: &str) -> String {
        canonicalize(&parse(s).unwrap())
    }

    #[test]
    fn same_molecule_same_string() {
        assert_eq!(canon("OCC"), canon("CCO"));
        assert_eq!(canon("C(O)C"), canon("CCO"));
        assert_eq!(canon("c1ccccc1"), canon("c1ccccc1"));
    }

    #[test]
    fn different_molecules_differ() {
        assert_ne!(canon("CCO"), canon("CCC"));
        assert_ne!(canon("CCO"), canon("COC"));
    }

    #[test]
    fn canonical_string_reparses_to_itself() {
        for s in [
            "CCO",
            "c1ccccc1",
            "CC(=O)OC",
            "C[N+](=O)[O-]",
            "C1CC2CCC1CC2",
            "O=C(N)c1ccccc1",
            "C1=CC=CN1",
        ] {
            let c = canon(s);
            assert_eq!(canon(&c), c, "round-trip failed for {s} -> {c}");
        }
    }

    #[test]
    fn ring_writings_agree() {
        assert_eq!(canon("C1CCCCC1"), canon("C1CCCCC1"));
        assert_eq!(canon("C1CCCCC1"), canon("C2CCCCC2"));
        assert_eq!(canon("C%12CCCCC%12"), canon("C1CCCCC1"));
    }

    #[test]
    fn kekule_forms_are_distinct_from_aromatic() {
        // No kekulization: these are different graphs by construction.
        assert_ne!(canon("C1=CC=CC=C1"), canon("c1ccccc1"));
    }

    #[test]
    fn components_sorted() {
        assert_eq!(canon("CCO.C"), canon("C.CCO"));
        assert!(canon("CCO.C").contains('.'));
    }

    #[test]
    fn charged_atoms_survive() {
        let c = canon("C[N+](=O)[O-]");
        assert!(c.contains("[N+]") || c.contains("[O-]"));
        assert_eq!(canon(&c), c);
    }
}
