//! Bemis–Murcko frameworks and a canonical key for grouping them.

use super::{Element, Molecule};

/// Key returned for molecules without rings.
pub const EMPTY_SCAFFOLD_KEY: &str = "<empty>";

// Canonical search gives up refining alternatives after this many leaves.
// Only reachable for very symmetric cages far larger than drug-like scaffolds.
const LEAF_BUDGET: usize = 50_000;

/// Ring systems plus the linkers between them. Terminal acyclic atoms are
/// stripped repeatedly, exocyclic double-bonded atoms included.
pub fn murcko_scaffold(mol: &Molecule) -> Molecule {
    let n = mol.atoms().len();
    let mut alive = vec![true; n];
    let in_ring: Vec<bool> = (0..n).map(|i| mol.is_ring_atom(i)).collect();
    let mut changed = true;
    while changed {
        changed = false;
        for i in 0..n {
            if !alive[i] || in_ring[i] {
                continue;
            }
            let live_neighbors = mol.neighbors(i).iter().filter(|(nb, _)| alive[*nb]).count();
            if live_neighbors <= 1 || mol.atoms()[i].element == Element::H {
                alive[i] = false;
                changed = true;
            }
        }
    }
    let keep: Vec<usize> = (0..n).filter(|&i| alive[i]).collect();
    mol.subgraph(&keep)
}

/// Canonical text key of the molecule's Murcko scaffold. Two molecules get
/// the same key exactly when their scaffolds are isomorphic as labelled
/// graphs (element, aromaticity, charge, bond order).
pub fn scaffold_key(mol: &Molecule) -> String {
    let scaffold = murcko_scaffold(mol);
    if scaffold.is_empty() {
        return EMPTY_SCAFFOLD_KEY.to_string();
    }
    canonical_key(&scaffold)
}

pub(crate) fn canonical_key(mol: &Molecule) -> String {
    let n = mol.atoms().len();
    let labels: Vec<String> = mol
        .atoms()
        .iter()
        .map(|a| {
            let mut s = if a.aromatic {
                a.element.symbol().to_lowercase()
            } else {
                a.element.symbol().to_string()
            };
            if a.formal_charge != 0 {
                s.push_str(&format!("{:+}", a.formal_charge));
            }
            s
        })
        .collect();
    let invariant: Vec<(u8, bool, i8, usize, bool)> = (0..n)
        .map(|i| {
            let a = &mol.atoms()[i];
            (
                a.element.atomic_number(),
                a.aromatic,
                a.formal_charge,
                mol.degree(i),
                mol.is_ring_atom(i),
            )
        })
        .collect();
    let colors = rank(&invariant);
    let colors = refine(mol, colors);

    let mut search = Search {
        mol,
        labels: &labels,
        best: None,
        leaves: 0,
    };
    search.descend(colors);
    search.best.expect("at least one leaf is visited")
}

struct Search<'a> {
    mol: &'a Molecule,
    labels: &'a [String],
    best: Option<String>,
    leaves: usize,
}

impl Search<'_> {
    fn descend(&mut self, colors: Vec<usize>) {
        if self.leaves >= LEAF_BUDGET {
            return;
        }
        let n = colors.len();
        let mut cell_size = vec![0usize; n];
        for &c in &colors {
            cell_size[c] += 1;
        }
        // first smallest non-singleton cell
        let target = (0..n)
            .filter(|&c| cell_size[c] > 1)
            .min_by_key(|&c| (cell_size[c], c));
        let Some(target) = target else {
            self.leaves += 1;
            let enc = self.encode(&colors);
            if self.best.as_ref().is_none_or(|b| enc < *b) {
                self.best = Some(enc);
            }
            return;
        };
        let members: Vec<usize> = (0..n).filter(|&v| colors[v] == target).collect();
        for v in members {
            let split: Vec<(usize, bool)> = (0..n).map(|u| (colors[u], u != v)).collect();
            let next = refine(self.mol, rank(&split));
            self.descend(next);
        }
    }

    fn encode(&self, order: &[usize]) -> String {
        let n = order.len();
        let mut by_pos = vec![0usize; n];
        for (v, &p) in order.iter().enumerate() {
            by_pos[p] = v;
        }
        let atoms: Vec<&str> = by_pos.iter().map(|&v| self.labels[v].as_str()).collect();
        let mut edges: Vec<(usize, usize, char)> = self
            .mol
            .bonds()
            .iter()
            .map(|b| {
                let (x, y) = (order[b.a], order[b.b]);
                (x.min(y), x.max(y), b.order.code())
            })
            .collect();
        edges.sort_unstable();
        let edges: Vec<String> = edges.iter().map(|(x, y, c)| format!("{x}{c}{y}")).collect();
        format!("{}|{}", atoms.join("."), edges.join(","))
    }
}

/// Dense ranks of arbitrary ordered keys.
fn rank<T: Ord + Clone>(keys: &[T]) -> Vec<usize> {
    let mut sorted: Vec<T> = keys.to_vec();
    sorted.sort();
    sorted.dedup();
    keys.iter()
        .map(|k| sorted.binary_search(k).unwrap())
        .collect()
}

/// Refines a colouring until neighbourhoods no longer split any cell.
fn refine(mol: &Molecule, mut colors: Vec<usize>) -> Vec<usize> {
    let n = colors.len();
    let mut count = colors.iter().max().map_or(0, |m| m + 1);
    loop {
        let sigs: Vec<(usize, Vec<(usize, char)>)> = (0..n)
            .map(|v| {
                let mut nb: Vec<(usize, char)> = mol
                    .neighbors(v)
                    .iter()
                    .map(|&(w, b)| (colors[w], mol.bonds()[b].order.code()))
                    .collect();
                nb.sort_unstable();
                (colors[v], nb)
            })
            .collect();
        let next = rank(&sigs);
        let next_count = next.iter().max().map_or(0, |m| m + 1);
        colors = next;
        if next_count == count {
            return colors;
        }
        count = next_count;
    }
}
