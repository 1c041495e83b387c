//! SMILES emission from a molecular graph.
//!
//! Emission is two-phase: a DFS with a caller-supplied child ordering fixes
//! the spanning tree and classifies ring bonds, then a second pass writes
//! atoms, branch parentheses, and ring-closure digits. Ring labels take the
//! smallest index free at open time and are released when closed; labels
//! above 9 are written `%nn`. Bond symbols on ring closures are written at
//! the opening side only. Isotope annotations are not emitted (they are
//! ignored for graph identity).

use super::graph::{BondOrder, MolGraph};
use super::valence::implicit_hydrogens;

/// Write the connected component containing `root`. `order_children` may
/// reorder each atom's candidate (neighbor, bond) list in place; children
/// are then visited in that order.
pub(crate) fn write_component<F>(g: &MolGraph, root: usize, mut order_children: F) -> String
where
    F: FnMut(usize, &mut Vec<(usize, usize)>),
{
    // Phase 1: spanning tree + ring bond discovery under the given order.
    let n = g.atom_count();
    let mut visited = vec![false; n];
    let mut children: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    // Ring bonds incident to each atom, in discovery order.
    let mut ring_at: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut ring_seen = vec![false; g.bond_count()];
    let mut preorder = vec![usize::MAX; n];
    let mut counter = 0usize;

    // Iterative DFS that respects the child ordering exactly.
    let mut stack: Vec<(usize, usize, Vec<(usize, usize)>, usize)> = Vec::new();
    visited[root] = true;
    preorder[root] = counter;
    counter += 1;
    let mut root_neighbors: Vec<(usize, usize)> = g.neighbors(root).to_vec();
    order_children(root, &mut root_neighbors);
    stack.push((root, usize::MAX, root_neighbors, 0));
    while let Some(frame) = stack.last_mut() {
        let (v, parent_bond) = (frame.0, frame.1);
        if frame.3 >= frame.2.len() {
            stack.pop();
            continue;
        }
        let (u, bi) = frame.2[frame.3];
        frame.3 += 1;
        if bi == parent_bond {
            continue;
        }
        if visited[u] {
            if !ring_seen[bi] {
                ring_seen[bi] = true;
                // Opens at u (visited earlier), closes at v.
                ring_at[u].push(bi);
                ring_at[v].push(bi);
            }
            continue;
        }
        visited[u] = true;
        preorder[u] = counter;
        counter += 1;
        children[v].push((u, bi));
        let mut next: Vec<(usize, usize)> = g.neighbors(u).to_vec();
        order_children(u, &mut next);
        stack.push((u, bi, next, 0));
    }

    // Phase 2: emit. Recursion depth is bounded by the atom count.
    let mut labels: Vec<Option<u16>> = vec![None; g.bond_count()];
    let mut in_use: Vec<bool> = vec![false; 100];
    let mut out = String::new();
    emit(
        g,
        root,
        None,
        &children,
        &ring_at,
        &preorder,
        &mut labels,
        &mut in_use,
        &mut out,
    );
    out
}

#[allow(clippy::too_many_arguments)]
fn emit(
    g: &MolGraph,
    v: usize,
    parent_bond: Option<usize>,
    children: &[Vec<(usize, usize)>],
    ring_at: &[Vec<usize>],
    preorder: &[usize],
    labels: &mut Vec<Option<u16>>,
    in_use: &mut Vec<bool>,
    out: &mut String,
) {
    if let Some(pb) = parent_bond {
        out.push_str(bond_str(g, pb));
    }
    out.push_str(&atom_token(g, v));

    // Ring digits: closings first (label already assigned), then openings.
    let mut closes: Vec<usize> = Vec::new();
    let mut opens: Vec<usize> = Vec::new();
    for &bi in &ring_at[v] {
        if labels[bi].is_some() {
            closes.push(bi);
        } else {
            opens.push(bi);
        }
    }
    closes.sort_by_key(|&bi| labels[bi].unwrap());
    // Deterministic open order: by the closing partner's preorder.
    opens.sort_by_key(|&bi| {
        let b = g.bond(bi);
        let partner = if preorder[b.a] == preorder[v] { b.b } else { b.a };
        preorder[partner]
    });
    for bi in closes {
        let label = labels[bi].unwrap();
        push_ring_digit(out, label);
        in_use[label as usize] = false;
    }
    for bi in opens {
        let label = (1..100)
            .find(|&l| !in_use[l as usize])
            .expect("more than 99 concurrently open ring bonds");
        in_use[label as usize] = true;
        labels[bi] = Some(label);
        out.push_str(bond_str(g, bi));
        push_ring_digit(out, label);
    }

    let kids = &children[v];
    for (k, &(u, bi)) in kids.iter().enumerate() {
        if k + 1 < kids.len() {
            out.push('(');
            emit(g, u, Some(bi), children, ring_at, preorder, labels, in_use, out);
            out.push(')');
        } else {
            emit(g, u, Some(bi), children, ring_at, preorder, labels, in_use, out);
        }
    }
}

fn push_ring_digit(out: &mut String, label: u16) {
    if label < 10 {
        out.push((b'0' + label as u8) as char);
    } else {
        out.push('%');
        out.push((b'0' + (label / 10) as u8) as char);
        out.push((b'0' + (label % 10) as u8) as char);
    }
}

/// Bond prefix before an atom or ring digit. Single bonds are implicit
/// except between two aromatic atoms; aromatic bonds are implicit between
/// two aromatic atoms and `:` otherwise.
fn bond_str(g: &MolGraph, bond_idx: usize) -> &'static str {
    let b = g.bond(bond_idx);
    let both_aromatic = g.atom(b.a).aromatic && g.atom(b.b).aromatic;
    match b.order {
        BondOrder::Single => {
            if both_aromatic {
                "-"
            } else {
                ""
            }
        }
        BondOrder::Double => "=",
        BondOrder::Triple => "#",
        BondOrder::Aromatic => {
            if both_aromatic {
                ""
            } else {
                ":"
            }
        }
    }
}

/// Atom as written in SMILES: bare organic-subset symbol when the parser
/// would reconstruct the same hydrogen count, bracket expression otherwise.
fn atom_token(g: &MolGraph, v: usize) -> String {
    let atom = g.atom(v);
    let symbol = if atom.aromatic {
        atom.element.symbol().to_ascii_lowercase()
    } else {
        atom.element.symbol().to_string()
    };
    let bare_ok = atom.charge == 0
        && atom.element != super::graph::Element::H
        && implicit_hydrogens(atom.element, g.bond_half_sum(v)) == atom.h_count;
    if bare_ok {
        return symbol;
    }
    let mut s = String::from("[");
    s.push_str(&symbol);
    match atom.h_count {
        0 => {}
        1 => s.push('H'),
        n => {
            s.push('H');
            s.push_str(&n.to_string());
        }
    }
    match atom.charge {
        0 => {}
        1 => s.push('+'),
        -1 => s.push('-'),
        c if c > 1 => s.push_str(&format!("+{c}")),
        c => s.push_str(&format!("-{}", -c)),
    }
    s.push(']');
    s
}

/// Atom indices of each connected component, in first-visit order.
pub(crate) fn component_atoms(g: &MolGraph) -> Vec<Vec<usize>> {
    let n = g.atom_count();
    let mut seen = vec![false; n];
    let mut components = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let mut comp = Vec::new();
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(v) = stack.pop() {
            comp.push(v);
            for &(u, _) in g.neighbors(v) {
                if !seen[u] {
                    seen[u] = true;
                    stack.push(u);
                }
            }
        }
        comp.sort_unstable();
        components.push(comp);
    }
    components
}
