//! Molecular graphs parsed from SMILES.
//!
//! A [`Molecule`] is built once by [`parse_smiles`] and never mutated
//! afterwards. Construction perceives rings (smallest set of smallest rings),
//! assigns aromaticity to Kekulé rings that satisfy the 4n+2 rule and derives
//! implicit hydrogen counts from standard valences.

mod aromaticity;
mod element;
mod rings;
mod scaffold;
mod smiles;

pub use element::Element;
pub use scaffold::{murcko_scaffold, scaffold_key, EMPTY_SCAFFOLD_KEY};
pub use smiles::parse_smiles;

use std::collections::HashSet;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SmilesError {
    #[error("empty SMILES string")]
    Empty,
    #[error("unmatched ring-closure {label} opened at byte {pos}")]
    UnbalancedRing { label: u32, pos: usize },
    #[error("unbalanced branch parenthesis at byte {pos}")]
    UnbalancedBranch { pos: usize },
    #[error("unknown element `{symbol}` at byte {pos}")]
    UnknownElement { symbol: String, pos: usize },
    #[error("valence error on atom {atom} ({element}): explicit valence {valence} exceeds the allowed maximum")]
    ValenceError {
        atom: usize,
        element: Element,
        valence: u8,
    },
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BondOrder {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondOrder {
    /// Contribution to an atom's explicit valence. Aromatic bonds count one;
    /// the shared pi electron is accounted for separately.
    pub fn valence(self) -> u8 {
        match self {
            BondOrder::Single | BondOrder::Aromatic => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
        }
    }

    pub(crate) fn code(self) -> char {
        match self {
            BondOrder::Single => '-',
            BondOrder::Double => '=',
            BondOrder::Triple => '#',
            BondOrder::Aromatic => ':',
        }
    }
}

/// Directional bond marker (`/` or `\`). Recorded, never interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BondStereo {
    Up,
    Down,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub element: Element,
    pub formal_charge: i8,
    pub aromatic: bool,
    /// Hydrogens written inside a bracket atom (`[NH2+]` has 2).
    pub explicit_h: u8,
    pub isotope: Option<u16>,
    pub index: usize,
    /// Raw chirality token (`@`, `@@`, `@TH1`...). Ignored by every descriptor.
    pub chirality: Option<String>,
    pub(crate) bracket: bool,
    pub(crate) implicit_h: u8,
}

impl Atom {
    pub(crate) fn new(element: Element, index: usize) -> Atom {
        Atom {
            element,
            formal_charge: 0,
            aromatic: false,
            explicit_h: 0,
            isotope: None,
            index,
            chirality: None,
            bracket: false,
            implicit_h: 0,
        }
    }

    /// Hydrogens derived from valence rules (always zero for bracket atoms).
    pub fn implicit_h(&self) -> u8 {
        self.implicit_h
    }

    pub fn is_bracket(&self) -> bool {
        self.bracket
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub order: BondOrder,
    pub stereo: Option<BondStereo>,
}

impl Bond {
    pub fn other(&self, atom: usize) -> usize {
        if self.a == atom {
            self.b
        } else {
            self.a
        }
    }
}

/// An immutable molecular graph with perceived rings and hydrogens.
#[derive(Debug, Clone)]
pub struct Molecule {
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
    rings: Vec<Vec<usize>>,
    source: String,
    adjacency: Vec<Vec<(usize, usize)>>,
    ring_bond: Vec<bool>,
    component: Vec<usize>,
    n_components: usize,
}

impl Molecule {
    /// Assembles a molecule from raw atoms and bonds: validates the bond list,
    /// derives implicit hydrogens, perceives rings and aromaticity.
    pub(crate) fn build(
        atoms: Vec<Atom>,
        bonds: Vec<Bond>,
        source: String,
    ) -> Result<Molecule, SmilesError> {
        Molecule::assemble(atoms, bonds, source, true)
    }

    fn assemble(
        mut atoms: Vec<Atom>,
        mut bonds: Vec<Bond>,
        source: String,
        derive_h: bool,
    ) -> Result<Molecule, SmilesError> {
        let n = atoms.len();
        let mut seen = HashSet::new();
        for bond in &bonds {
            if bond.a == bond.b || bond.a >= n || bond.b >= n {
                return Err(SmilesError::Syntax {
                    pos: 0,
                    msg: format!("invalid bond {}-{}", bond.a, bond.b),
                });
            }
            if !seen.insert((bond.a.min(bond.b), bond.a.max(bond.b))) {
                return Err(SmilesError::Syntax {
                    pos: 0,
                    msg: format!("duplicate bond {}-{}", bond.a, bond.b),
                });
            }
        }
        for (i, atom) in atoms.iter_mut().enumerate() {
            atom.index = i;
        }
        let adjacency = build_adjacency(n, &bonds);

        if derive_h {
            assign_implicit_h(&mut atoms, &bonds, &adjacency)?;
        }

        let (component, n_components) = components(n, &adjacency);
        let rings = rings::sssr(n, &bonds, &adjacency);
        let mut ring_bond = vec![false; bonds.len()];
        for ring in &rings {
            for w in 0..ring.len() {
                let (x, y) = (ring[w], ring[(w + 1) % ring.len()]);
                if let Some(bi) = find_bond(&adjacency, x, y) {
                    ring_bond[bi] = true;
                }
            }
        }

        // Aromatic flags only survive inside rings.
        for (bi, bond) in bonds.iter_mut().enumerate() {
            if bond.order == BondOrder::Aromatic && !ring_bond[bi] {
                bond.order = BondOrder::Single;
            }
        }
        let mut ring_atom = vec![false; n];
        for ring in &rings {
            for &a in ring {
                ring_atom[a] = true;
            }
        }
        for (i, atom) in atoms.iter_mut().enumerate() {
            if !ring_atom[i] {
                atom.aromatic = false;
            }
        }

        aromaticity::perceive(&mut atoms, &mut bonds, &adjacency, &rings, &ring_bond);

        Ok(Molecule {
            atoms,
            bonds,
            rings,
            source,
            adjacency,
            ring_bond,
            component,
            n_components,
        })
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    /// Smallest set of smallest rings, each as an ordered atom cycle.
    pub fn rings(&self) -> &[Vec<usize>] {
        &self.rings
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// `(neighbour, bond index)` pairs of an atom.
    pub fn neighbors(&self, atom: usize) -> &[(usize, usize)] {
        &self.adjacency[atom]
    }

    pub fn bond_between(&self, a: usize, b: usize) -> Option<&Bond> {
        find_bond(&self.adjacency, a, b).map(|i| &self.bonds[i])
    }

    /// Number of explicit graph neighbours, hydrogens written as atoms included.
    pub fn degree(&self, atom: usize) -> usize {
        self.adjacency[atom].len()
    }

    pub fn heavy_degree(&self, atom: usize) -> usize {
        self.adjacency[atom]
            .iter()
            .filter(|(n, _)| self.atoms[*n].element != Element::H)
            .count()
    }

    /// Implicit, bracket and explicit-atom hydrogens attached to `atom`.
    pub fn total_h(&self, atom: usize) -> u8 {
        let a = &self.atoms[atom];
        let attached = self.adjacency[atom]
            .iter()
            .filter(|(n, _)| self.atoms[*n].element == Element::H)
            .count() as u8;
        a.implicit_h + a.explicit_h + attached
    }

    pub fn is_ring_bond(&self, bond: usize) -> bool {
        self.ring_bond[bond]
    }

    pub fn is_ring_atom(&self, atom: usize) -> bool {
        self.adjacency[atom].iter().any(|&(_, b)| self.ring_bond[b])
    }

    pub fn in_ring_of_size(&self, atom: usize, size: usize) -> bool {
        self.rings
            .iter()
            .any(|r| r.len() == size && r.contains(&atom))
    }

    pub fn heavy_atom_count(&self) -> usize {
        self.atoms
            .iter()
            .filter(|a| a.element != Element::H)
            .count()
    }

    pub fn component_count(&self) -> usize {
        self.n_components
    }

    /// Atom indices grouped by connected component, in order of first atom.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_components];
        for (i, &c) in self.component.iter().enumerate() {
            out[c].push(i);
        }
        out
    }

    /// The component with the most heavy atoms (first one on ties), as its
    /// own molecule. Used to strip counter-ions from salts.
    pub fn largest_component(&self) -> Molecule {
        if self.n_components <= 1 {
            return self.clone();
        }
        let comps = self.components();
        let heavy = |c: &Vec<usize>| {
            c.iter()
                .filter(|&&i| self.atoms[i].element != Element::H)
                .count()
        };
        let mut best = 0;
        for (i, c) in comps.iter().enumerate() {
            if heavy(c) > heavy(&comps[best]) {
                best = i;
            }
        }
        self.subgraph(&comps[best])
    }

    /// Induced subgraph on `keep` (in the given order). Each bond cut from a
    /// kept atom is replaced by hydrogens.
    pub(crate) fn subgraph(&self, keep: &[usize]) -> Molecule {
        let mut map = vec![usize::MAX; self.atoms.len()];
        for (new, &old) in keep.iter().enumerate() {
            map[old] = new;
        }
        let atoms: Vec<Atom> = keep
            .iter()
            .map(|&i| {
                let mut atom = self.atoms[i].clone();
                let cut: u8 = self.adjacency[i]
                    .iter()
                    .filter(|(n, _)| map[*n] == usize::MAX)
                    .map(|&(_, b)| self.bonds[b].order.valence())
                    .sum();
                if atom.bracket {
                    atom.explicit_h += cut;
                } else {
                    atom.implicit_h += cut;
                }
                atom
            })
            .collect();
        let bonds: Vec<Bond> = self
            .bonds
            .iter()
            .filter(|b| map[b.a] != usize::MAX && map[b.b] != usize::MAX)
            .map(|b| Bond {
                a: map[b.a],
                b: map[b.b],
                order: b.order,
                stereo: b.stereo,
            })
            .collect();
        Molecule::assemble(atoms, bonds, self.source.clone(), false)
            .expect("subgraph of a valid molecule is valid")
    }
}

fn build_adjacency(n: usize, bonds: &[Bond]) -> Vec<Vec<(usize, usize)>> {
    let mut adj = vec![Vec::new(); n];
    for (i, b) in bonds.iter().enumerate() {
        adj[b.a].push((b.b, i));
        adj[b.b].push((b.a, i));
    }
    for list in &mut adj {
        list.sort_unstable();
    }
    adj
}

fn find_bond(adj: &[Vec<(usize, usize)>], a: usize, b: usize) -> Option<usize> {
    adj[a].iter().find(|(n, _)| *n == b).map(|&(_, bi)| bi)
}

fn components(n: usize, adj: &[Vec<(usize, usize)>]) -> (Vec<usize>, usize) {
    let mut comp = vec![usize::MAX; n];
    let mut count = 0;
    for start in 0..n {
        if comp[start] != usize::MAX {
            continue;
        }
        let mut stack = vec![start];
        comp[start] = count;
        while let Some(v) = stack.pop() {
            for &(w, _) in &adj[v] {
                if comp[w] == usize::MAX {
                    comp[w] = count;
                    stack.push(w);
                }
            }
        }
        count += 1;
    }
    (comp, count)
}

fn assign_implicit_h(
    atoms: &mut [Atom],
    bonds: &[Bond],
    adj: &[Vec<(usize, usize)>],
) -> Result<(), SmilesError> {
    for i in 0..atoms.len() {
        let mut valence: u8 = 0;
        let mut multiple = false;
        for &(_, bi) in &adj[i] {
            let order = bonds[bi].order;
            valence += order.valence();
            multiple |= matches!(order, BondOrder::Double | BondOrder::Triple);
        }
        let atom = &atoms[i];
        let err = |valence| SmilesError::ValenceError {
            atom: i,
            element: atom.element,
            valence,
        };
        if atom.bracket {
            if let Some(allowed) = atom.element.valences(atom.formal_charge) {
                let total = valence + atom.explicit_h;
                if total > *allowed.last().unwrap() {
                    return Err(err(total));
                }
            }
            continue;
        }
        let Some(allowed) = atom.element.valences(0) else {
            continue;
        };
        // Aromatic atoms donate one electron to the pi system unless a
        // localized multiple bond already accounts for it.
        let mut effective = valence;
        if atom.aromatic && !multiple {
            let e = atom.element;
            let pnictogen = e == Element::N || e == Element::P;
            if e == Element::C || e == Element::B || (pnictogen && valence < 3) {
                effective += 1;
            }
        }
        match allowed.iter().find(|&&v| v >= effective) {
            Some(&v) => atoms[i].implicit_h = v - effective,
            None => return Err(err(effective)),
        }
    }
    Ok(())
}
