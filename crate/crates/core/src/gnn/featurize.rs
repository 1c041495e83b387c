//! Molecular graph featurization for the property predictor.
//!
//! Node features (25): element one-hot (11), degree one-hot 0-5 (6,
//! clamped), formal charge (1), aromatic flag (1), hydrogen-count one-hot
//! 0-4 (5, clamped), ring flag (1). Edge features (5): bond-order one-hot
//! (4) and ring flag (1). Directed edges are stored in both directions;
//! `graph_of_node` carries batch membership.

use ndarray::Array2;
use thiserror::Error;

use crate::smiles::{BondOrder, Element, MolGraph};

pub const NODE_FEATURES: usize = 25;
pub const EDGE_FEATURES: usize = 5;

const ELEMENT_ORDER: [Element; 11] = [
    Element::H,
    Element::B,
    Element::C,
    Element::N,
    Element::O,
    Element::F,
    Element::P,
    Element::S,
    Element::Cl,
    Element::Br,
    Element::I,
];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FeaturizeError {
    #[error("graph has no atoms")]
    EmptyGraph,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphTensors {
    pub node_features: Array2<f64>,
    /// Directed (target, source) pairs: messages flow source -> target.
    pub edges: Vec<(usize, usize)>,
    pub edge_features: Array2<f64>,
    pub graph_of_node: Vec<usize>,
    pub n_graphs: usize,
}

impl GraphTensors {
    pub fn n_nodes(&self) -> usize {
        self.node_features.nrows()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// Concatenate graphs into one batch with offset node indices.
    pub fn batch(graphs: &[GraphTensors]) -> GraphTensors {
        let total_nodes: usize = graphs.iter().map(|g| g.n_nodes()).sum();
        let total_edges: usize = graphs.iter().map(|g| g.n_edges()).sum();
        let mut node_features = Array2::zeros((total_nodes, NODE_FEATURES));
        let mut edge_features = Array2::zeros((total_edges, EDGE_FEATURES));
        let mut edges = Vec::with_capacity(total_edges);
        let mut graph_of_node = Vec::with_capacity(total_nodes);
        let mut node_off = 0;
        let mut edge_off = 0;
        for (gi, g) in graphs.iter().enumerate() {
            for i in 0..g.n_nodes() {
                node_features
                    .row_mut(node_off + i)
                    .assign(&g.node_features.row(i));
                graph_of_node.push(gi);
            }
            for (e, &(t, s)) in g.edges.iter().enumerate() {
                edges.push((t + node_off, s + node_off));
                edge_features
                    .row_mut(edge_off + e)
                    .assign(&g.edge_features.row(e));
            }
            node_off += g.n_nodes();
            edge_off += g.n_edges();
        }
        GraphTensors {
            node_features,
            edges,
            edge_features,
            graph_of_node,
            n_graphs: graphs.len(),
        }
    }
}

/// Deterministic features for one molecule.
pub fn featurize(g: &MolGraph) -> Result<GraphTensors, FeaturizeError> {
    let n = g.atom_count();
    if n == 0 {
        return Err(FeaturizeError::EmptyGraph);
    }
    let mut node_features = Array2::zeros((n, NODE_FEATURES));
    for v in 0..n {
        let atom = g.atom(v);
        let mut col = 0;
        let e_idx = ELEMENT_ORDER
            .iter()
            .position(|&e| e == atom.element)
            .expect("all parser elements are featurized");
        node_features[(v, col + e_idx)] = 1.0;
        col += ELEMENT_ORDER.len();
        let degree = g.degree(v).min(5);
        node_features[(v, col + degree)] = 1.0;
        col += 6;
        node_features[(v, col)] = atom.charge as f64;
        col += 1;
        node_features[(v, col)] = f64::from(atom.aromatic);
        col += 1;
        let h = (atom.h_count as usize).min(4);
        node_features[(v, col + h)] = 1.0;
        col += 5;
        node_features[(v, col)] = f64::from(g.is_ring_atom(v));
    }

    let mut edges = Vec::with_capacity(2 * g.bond_count());
    let mut edge_features = Array2::zeros((2 * g.bond_count(), EDGE_FEATURES));
    for (bi, bond) in g.bonds().iter().enumerate() {
        let order_idx = match bond.order {
            BondOrder::Single => 0,
            BondOrder::Double => 1,
            BondOrder::Triple => 2,
            BondOrder::Aromatic => 3,
        };
        let ring = f64::from(g.is_ring_bond(bi));
        for (k, (t, s)) in [(bond.a, bond.b), (bond.b, bond.a)].iter().enumerate() {
            let row = 2 * bi + k;
            edges.push((*t, *s));
            edge_features[(row, order_idx)] = 1.0;
            edge_features[(row, 4)] = ring;
        }
    }

    Ok(GraphTensors {
        node_features,
        edges,
        edge_features,
        graph_of_node: vec![0; n],
        n_graphs: 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smiles::parse;

    #[test]
    fn single_atom() {
        let t = featurize(&parse("C").unwrap()).unwrap();
        assert_eq!(t.n_nodes(), 1);
        assert_eq!(t.n_edges(), 0);
        assert_eq!(t.n_graphs, 1);
    }

    #[test]
    fn ethanol_edges_both_directions() {
        let t = featurize(&parse("CCO").unwrap()).unwrap();
        assert_eq!(t.n_nodes(), 3);
        assert_eq!(t.n_edges(), 4);
        assert!(t.edges.contains(&(0, 1)) && t.edges.contains(&(1, 0)));
    }

    #[test]
    fn feature_values() {
        let t = featurize(&parse("c1ccccc1").unwrap()).unwrap();
        for v in 0..6 {
            // carbon one-hot at position 2, aromatic flag, ring flag set
            assert_eq!(t.node_features[(v, 2)], 1.0);
            assert_eq!(t.node_features[(v, 18)], 1.0); // aromatic
            assert_eq!(t.node_features[(v, 24)], 1.0); // ring
        }
        // aromatic bond one-hot + ring flag
        for e in 0..t.n_edges() {
            assert_eq!(t.edge_features[(e, 3)], 1.0);
            assert_eq!(t.edge_features[(e, 4)], 1.0);
        }
    }

    #[test]
    fn charge_feature() {
        let t = featurize(&parse("C[N+](=O)[O-]").unwrap()).unwrap();
        let charges: Vec<f64> = (0..4).map(|v| t.node_features[(v, 17)]).collect();
        assert!(charges.contains(&1.0) && charges.contains(&-1.0));
    }

    #[test]
    fn batching_offsets_indices() {
        let a = featurize(&parse("CC").unwrap()).unwrap();
        let b = featurize(&parse("O").unwrap()).unwrap();
        let batched = GraphTensors::batch(&[a, b]);
        assert_eq!(batched.n_nodes(), 3);
        assert_eq!(batched.n_graphs, 2);
        assert_eq!(batched.graph_of_node, vec![0, 0, 1]);
        assert!(batched.edges.iter().all(|&(t, s)| t < 2 && s < 2));
    }

    #[test]
    fn empty_graph_impossible_via_parser() {
        // MolGraph construction rejects empty graphs, so featurize's empty
        // branch is unreachable through parsing; exercise batch of none.
        let batched = GraphTensors::batch(&[]);
        assert_eq!(batched.n_nodes(), 0);
        assert_eq!(batched.n_graphs, 0);
    }
}
