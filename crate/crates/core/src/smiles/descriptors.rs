//! Structural descriptors: molecular weight, ring counts, and named
//! functional-group counts.
//!
//! Group patterns are matched directly on the adjacency structure:
//! - nitro: N bearing two terminal oxygens as N(=O)=O or [N+](=O)[O-]
//!   (counted for every NO2 unit, including those inside nitramines and
//!   nitrate esters)
//! - nitramine: nitro nitrogen attached to another nitrogen
//! - nitrate ester: nitro nitrogen attached to a bridging oxygen
//! - aromatic ring: cyclomatic count of the aromatic-bond subgraph
//! - ether: C-O-C oxygen not adjacent to a carbonyl carbon
//! - ketone: carbonyl carbon with two carbon neighbors
//! - amide: carbonyl carbon with a nitrogen neighbor
//! - ester: carbonyl carbon with a bridging-oxygen neighbor

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::graph::{BondOrder, Element, MolGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FunctionalGroup {
    Nitro,
    Nitramine,
    NitrateEster,
    AromaticRing,
    Ether,
    Ketone,
    Amide,
    Ester,
}

impl FunctionalGroup {
    pub const ALL: [FunctionalGroup; 8] = [
        FunctionalGroup::Nitro,
        FunctionalGroup::Nitramine,
        FunctionalGroup::NitrateEster,
        FunctionalGroup::AromaticRing,
        FunctionalGroup::Ether,
        FunctionalGroup::Ketone,
        FunctionalGroup::Amide,
        FunctionalGroup::Ester,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FunctionalGroup::Nitro => "nitro",
            FunctionalGroup::Nitramine => "nitramine",
            FunctionalGroup::NitrateEster => "nitrate_ester",
            FunctionalGroup::AromaticRing => "aromatic_ring",
            FunctionalGroup::Ether => "ether",
            FunctionalGroup::Ketone => "ketone",
            FunctionalGroup::Amide => "amide",
            FunctionalGroup::Ester => "ester",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptorSet {
    pub molecular_weight: f64,
    pub ring_count: usize,
    pub group_counts: BTreeMap<FunctionalGroup, usize>,
}

/// Compute descriptors for a parsed molecule.
pub fn descriptors(g: &MolGraph) -> DescriptorSet {
    let mut molecular_weight = 0.0;
    for atom in g.atoms() {
        molecular_weight += match atom.isotope {
            Some(m) => m as f64,
            None => atom.element.atomic_mass(),
        };
        molecular_weight += atom.h_count as f64 * Element::H.atomic_mass();
    }

    let mut counts: BTreeMap<FunctionalGroup, usize> =
        FunctionalGroup::ALL.iter().map(|&gr| (gr, 0)).collect();

    for v in 0..g.atom_count() {
        if let Some(kind) = nitro_kind(g, v) {
            *counts.get_mut(&FunctionalGroup::Nitro).unwrap() += 1;
            if let Some(k) = kind {
                *counts.get_mut(&k).unwrap() += 1;
            }
        }
        if is_carbonyl_carbon(g, v) {
            classify_carbonyl(g, v, &mut counts);
        }
        if is_ether_oxygen(g, v) {
            *counts.get_mut(&FunctionalGroup::Ether).unwrap() += 1;
        }
    }

    *counts.get_mut(&FunctionalGroup::AromaticRing).unwrap() = aromatic_ring_count(g);

    DescriptorSet {
        molecular_weight,
        ring_count: g.ring_count(),
        group_counts: counts,
    }
}

/// Is atom `v` the nitrogen of an NO2 unit? Returns Some(subtype) where the
/// subtype refines plain nitro into nitramine / nitrate ester by the third
/// neighbor, or Some(None) for carbon-bound or terminal nitro.
fn nitro_kind(g: &MolGraph, v: usize) -> Option<Option<FunctionalGroup>> {
    let a = g.atom(v);
    if a.element != Element::N || a.aromatic {
        return None;
    }
    let mut terminal_double_o = 0;
    let mut terminal_anion_o = 0;
    let mut others: Vec<usize> = Vec::new();
    for &(u, bi) in g.neighbors(v) {
        let nb = g.atom(u);
        let order = g.bond(bi).order;
        if nb.element == Element::O && g.degree(u) == 1 && nb.h_count == 0 {
            match (order, nb.charge) {
                (BondOrder::Double, 0) => terminal_double_o += 1,
                (BondOrder::Single, -1) => terminal_anion_o += 1,
                _ => others.push(u),
            }
        } else {
            others.push(u);
        }
    }
    let is_nitro = (terminal_double_o == 2 && a.charge == 0)
        || (terminal_double_o == 1 && terminal_anion_o == 1 && a.charge == 1);
    if !is_nitro || others.len() > 1 {
        return None;
    }
    let subtype = others.first().and_then(|&u| match g.atom(u).element {
        Element::N => Some(FunctionalGroup::Nitramine),
        Element::O => Some(FunctionalGroup::NitrateEster),
        _ => None,
    });
    Some(subtype)
}

fn is_carbonyl_carbon(g: &MolGraph, v: usize) -> bool {
    let a = g.atom(v);
    a.element == Element::C
        && !a.aromatic
        && g.neighbors(v).iter().any(|&(u, bi)| {
            g.atom(u).element == Element::O
                && g.bond(bi).order == BondOrder::Double
                && g.degree(u) == 1
        })
}

fn classify_carbonyl(
    g: &MolGraph,
    v: usize,
    counts: &mut BTreeMap<FunctionalGroup, usize>,
) {
    let mut carbon = 0;
    let mut nitrogen = 0;
    let mut bridge_o = 0;
    for &(u, bi) in g.neighbors(v) {
        if g.bond(bi).order != BondOrder::Single {
            continue;
        }
        match g.atom(u).element {
            Element::C => carbon += 1,
            Element::N => nitrogen += 1,
            Element::O if g.degree(u) == 2 => bridge_o += 1,
            _ => {}
        }
    }
    if nitrogen > 0 {
        *counts.get_mut(&FunctionalGroup::Amide).unwrap() += 1;
    } else if bridge_o > 0 && carbon > 0 {
        *counts.get_mut(&FunctionalGroup::Ester).unwrap() += 1;
    } else if carbon == 2 {
        *counts.get_mut(&FunctionalGroup::Ketone).unwrap() += 1;
    }
}

fn is_ether_oxygen(g: &MolGraph, v: usize) -> bool {
    let a = g.atom(v);
    if a.element != Element::O || a.aromatic || a.charge != 0 || g.degree(v) != 2 {
        return false;
    }
    g.neighbors(v).iter().all(|&(u, bi)| {
        g.bond(bi).order == BondOrder::Single
            && g.atom(u).element == Element::C
            && !is_carbonyl_carbon(g, u)
    })
}

/// Cyclomatic ring count of the subgraph induced by aromatic bonds.
fn aromatic_ring_count(g: &MolGraph) -> usize {
    let mut atoms: Vec<usize> = Vec::new();
    let mut index = vec![usize::MAX; g.atom_count()];
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for b in g.bonds() {
        if b.order == BondOrder::Aromatic {
            for v in [b.a, b.b] {
                if index[v] == usize::MAX {
                    index[v] = atoms.len();
                    atoms.push(v);
                }
            }
            edges.push((index[b.a], index[b.b]));
        }
    }
    if atoms.is_empty() {
        return 0;
    }
    // Count components by union-find.
    let mut parent: Vec<usize> = (0..atoms.len()).collect();
    fn find(parent: &mut Vec<usize>, x: usize) -> usize {
        if parent[x] != x {
            let r = find(parent, parent[x]);
            parent[x] = r;
        }
        parent[x]
    }
    let mut components = atoms.len();
    for &(a, b) in &edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra] = rb;
            components -= 1;
        }
    }
    edges.len() + components - atoms.len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smiles::parse::parse;

    fn desc(s: &str) -> DescriptorSet {
        descriptors(&parse(s).unwrap())
    }

    fn count(d: &DescriptorSet, gr: FunctionalGroup) -> usize {
        d.group_counts[&gr]
    }

    #[test]
    fn water_mass() {
        let d = desc("O");
        assert!((d.molecular_weight - 18.015).abs() < 0.01);
    }

    #[test]
    fn benzene_rings() {
        let d = desc("c1ccccc1");
        assert_eq!(d.ring_count, 1);
        assert_eq!(count(&d, FunctionalGroup::AromaticRing), 1);
        assert!((d.molecular_weight - 78.114).abs() < 0.01);
    }

    #[test]
    fn naphthalene_two_aromatic_rings() {
        let d = desc("c1ccc2ccccc2c1");
        assert_eq!(d.ring_count, 2);
        assert_eq!(count(&d, FunctionalGroup::AromaticRing), 2);
    }

    #[test]
    fn nitro_both_notations() {
        assert_eq!(count(&desc("C[N+](=O)[O-]"), FunctionalGroup::Nitro), 1);
        assert_eq!(count(&desc("CN(=O)=O"), FunctionalGroup::Nitro), 1);
        assert_eq!(count(&desc("CC"), FunctionalGroup::Nitro), 0);
    }

    #[test]
    fn nitroglycerin_counts() {
        let d = desc("C(C(CO[N+](=O)[O-])O[N+](=O)[O-])O[N+](=O)[O-]");
        assert_eq!(count(&d, FunctionalGroup::Nitro), 3);
        assert_eq!(count(&d, FunctionalGroup::NitrateEster), 3);
        assert_eq!(count(&d, FunctionalGroup::Nitramine), 0);
        // Bridging nitrate-ester oxygens are not ethers.
        assert_eq!(count(&d, FunctionalGroup::Ether), 0);
        assert!((d.molecular_weight - 227.085).abs() < 0.05);
    }

    #[test]
    fn rdx_nitramines() {
        let d = desc("O=[N+]([O-])N1CN([N+](=O)[O-])CN([N+](=O)[O-])C1");
        assert_eq!(count(&d, FunctionalGroup::Nitro), 3);
        assert_eq!(count(&d, FunctionalGroup::Nitramine), 3);
        assert_eq!(count(&d, FunctionalGroup::NitrateEster), 0);
        assert_eq!(d.ring_count, 1);
        assert!((d.molecular_weight - 222.117).abs() < 0.05);
    }

    #[test]
    fn carbonyl_family() {
        assert_eq!(count(&desc("CC(=O)C"), FunctionalGroup::Ketone), 1);
        assert_eq!(count(&desc("CC(N)=O"), FunctionalGroup::Amide), 1);
        assert_eq!(count(&desc("COC(C)=O"), FunctionalGroup::Ester), 1);
        // Ester oxygen is not an ether; the methyl oxygen bridges a carbonyl.
        assert_eq!(count(&desc("COC(C)=O"), FunctionalGroup::Ether), 0);
        assert_eq!(count(&desc("COC"), FunctionalGroup::Ether), 1);
    }
}
