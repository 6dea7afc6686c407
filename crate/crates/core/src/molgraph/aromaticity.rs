//! Aromaticity perception for Kekulé input.
//!
//! Each SSSR ring, then each pair of fused rings, is tested against the
//! 4n+2 rule using per-atom pi-electron counts taken from the bond orders as
//! written. Rings already written in lowercase are kept as they are.

use super::{Atom, Bond, BondOrder, Element};

pub(crate) fn perceive(
    atoms: &mut [Atom],
    bonds: &mut [Bond],
    adj: &[Vec<(usize, usize)>],
    rings: &[Vec<usize>],
    ring_bond: &[bool],
) {
    if rings.is_empty() {
        return;
    }
    let snapshot: Vec<BondOrder> = bonds.iter().map(|b| b.order).collect();
    let electrons: Vec<Option<u8>> = (0..atoms.len())
        .map(|i| pi_electrons(i, atoms, bonds, &snapshot, adj, ring_bond))
        .collect();

    let ring_edges = |ring: &[usize]| -> Vec<usize> {
        (0..ring.len())
            .filter_map(|w| {
                let (a, b) = (ring[w], ring[(w + 1) % ring.len()]);
                adj[a].iter().find(|(n, _)| *n == b).map(|&(_, bi)| bi)
            })
            .collect()
    };

    let mut aromatic_ring = vec![false; rings.len()];
    for (ri, ring) in rings.iter().enumerate() {
        if huckel(ring.iter().copied(), &electrons) {
            aromatic_ring[ri] = true;
        }
    }
    // Fused pairs (azulene-like systems where neither ring qualifies alone).
    for i in 0..rings.len() {
        for j in i + 1..rings.len() {
            if aromatic_ring[i] && aromatic_ring[j] {
                continue;
            }
            let shared = rings[i].iter().filter(|a| rings[j].contains(a)).count();
            if shared != 2 {
                continue;
            }
            let mut union: Vec<usize> = rings[i].iter().chain(&rings[j]).copied().collect();
            union.sort_unstable();
            union.dedup();
            if huckel(union.into_iter(), &electrons) {
                aromatic_ring[i] = true;
                aromatic_ring[j] = true;
            }
        }
    }

    for (ri, ring) in rings.iter().enumerate() {
        if !aromatic_ring[ri] {
            continue;
        }
        for &a in ring {
            atoms[a].aromatic = true;
        }
        for bi in ring_edges(ring) {
            bonds[bi].order = BondOrder::Aromatic;
        }
    }
}

fn huckel(ring: impl Iterator<Item = usize>, electrons: &[Option<u8>]) -> bool {
    let mut sum = 0u32;
    for a in ring {
        match electrons[a] {
            Some(e) => sum += e as u32,
            None => return false,
        }
    }
    sum >= 2 && (sum - 2).is_multiple_of(4)
}

/// Pi electrons an atom contributes to a ring, or `None` when it cannot take
/// part in an aromatic system.
fn pi_electrons(
    i: usize,
    atoms: &[Atom],
    bonds: &[Bond],
    orders: &[BondOrder],
    adj: &[Vec<(usize, usize)>],
    ring_bond: &[bool],
) -> Option<u8> {
    let atom = &atoms[i];
    let e = atom.element;
    let h = atom.implicit_h
        + atom.explicit_h
        + adj[i]
            .iter()
            .filter(|(n, _)| atoms[*n].element == Element::H)
            .count() as u8;
    let connections = adj[i].len() + h as usize;

    if atom.aromatic {
        return Some(match e {
            Element::O | Element::S => 2,
            Element::N | Element::P if atom.formal_charge == 0 && connections == 3 => 2,
            Element::C if atom.formal_charge == -1 => 2,
            Element::B => 0,
            _ if e.atomic_number() == 34 || e.atomic_number() == 52 => 2,
            _ => 1,
        });
    }

    let mut ring_double = false;
    let mut exo_hetero_double = false;
    for &(_, bi) in &adj[i] {
        match orders[bi] {
            BondOrder::Triple => return None,
            BondOrder::Double if ring_bond[bi] => ring_double = true,
            BondOrder::Double => {
                let other = atoms[bonds[bi].other(i)].element;
                if e == Element::C && matches!(other, Element::O | Element::N | Element::S) {
                    exo_hetero_double = true;
                } else {
                    return None;
                }
            }
            BondOrder::Aromatic => ring_double = true,
            BondOrder::Single => {}
        }
    }
    if ring_double {
        return Some(1);
    }
    if exo_hetero_double {
        return Some(0);
    }
    match (e, atom.formal_charge) {
        (Element::N, 0) | (Element::P, 0) if connections == 3 => Some(2),
        (Element::O, 0) | (Element::S, 0) if connections == 2 => Some(2),
        (Element::C, -1) if connections == 3 => Some(2),
        (Element::C, 1) if connections == 3 => Some(0),
        (Element::B, 0) if connections == 3 => Some(0),
        _ => None,
    }
}
