//! Topological polar surface area from N and O fragment contributions.

use std::sync::OnceLock;

use crate::molgraph::{BondOrder, Element, Molecule};

const TPSA_TSV: &str = include_str!("../../data/tpsa.tsv");

#[derive(Debug, PartialEq, Eq)]
struct Env {
    element: Element,
    aromatic: bool,
    charge: i8,
    h: u8,
    single: u8,
    double: u8,
    triple: u8,
    arom: u8,
}

struct Row {
    env: Env,
    ring3: Option<bool>,
    value: f64,
}

struct Fallback {
    element: Element,
    base: f64,
    per_heavy: f64,
    per_h: f64,
}

struct Table {
    rows: Vec<Row>,
    fallbacks: Vec<Fallback>,
}

fn table() -> &'static Table {
    static TABLE: OnceLock<Table> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut rows = Vec::new();
        let mut fallbacks = Vec::new();
        for line in TPSA_TSV.lines() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let c: Vec<&str> = line.split('\t').map(str::trim).collect();
            let el = |s: &str| Element::from_symbol(s).expect("element symbol in tpsa.tsv");
            let num = |s: &str| s.parse::<f64>().expect("number in tpsa.tsv");
            let small = |s: &str| s.parse::<u8>().expect("count in tpsa.tsv");
            if c[0] == "fallback" {
                fallbacks.push(Fallback {
                    element: el(c[1]),
                    base: num(c[2]),
                    per_heavy: num(c[3]),
                    per_h: num(c[4]),
                });
                continue;
            }
            rows.push(Row {
                env: Env {
                    element: el(c[0]),
                    aromatic: c[1] == "1",
                    charge: c[2].parse().expect("charge in tpsa.tsv"),
                    h: small(c[3]),
                    single: small(c[4]),
                    double: small(c[5]),
                    triple: small(c[6]),
                    arom: small(c[7]),
                },
                ring3: match c[8] {
                    "*" => None,
                    v => Some(v == "1"),
                },
                value: num(c[9]),
            });
        }
        Table { rows, fallbacks }
    })
}

/// Contribution of one atom (zero for anything but N and O).
pub(crate) fn atom_contribution(mol: &Molecule, i: usize) -> f64 {
    let atom = &mol.atoms()[i];
    if atom.element != Element::N && atom.element != Element::O {
        return 0.0;
    }
    let mut env = Env {
        element: atom.element,
        aromatic: atom.aromatic,
        charge: atom.formal_charge,
        h: mol.total_h(i),
        single: 0,
        double: 0,
        triple: 0,
        arom: 0,
    };
    let mut heavy = 0u8;
    for &(n, b) in mol.neighbors(i) {
        if mol.atoms()[n].element == Element::H {
            continue;
        }
        heavy += 1;
        match mol.bonds()[b].order {
            BondOrder::Single => env.single += 1,
            BondOrder::Double => env.double += 1,
            BondOrder::Triple => env.triple += 1,
            BondOrder::Aromatic => env.arom += 1,
        }
    }
    let in3 = mol.in_ring_of_size(i, 3);
    let t = table();
    if let Some(row) = t
        .rows
        .iter()
        .find(|r| r.env == env && r.ring3.is_none_or(|want| want == in3))
    {
        return row.value;
    }
    t.fallbacks
        .iter()
        .find(|f| f.element == atom.element)
        .map_or(0.0, |f| {
            (f.base + f.per_heavy * heavy as f64 + f.per_h * env.h as f64).max(0.0)
        })
}

pub(crate) fn tpsa(mol: &Molecule) -> f64 {
    (0..mol.atoms().len())
        .map(|i| atom_contribution(mol, i))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::molgraph::parse_smiles;
    use approx::assert_abs_diff_eq;

    fn t(s: &str) -> f64 {
        tpsa(&parse_smiles(s).unwrap())
    }

    #[test]
    fn fragment_values() {
        assert_abs_diff_eq!(t("CCO"), 20.23, epsilon = 1e-9);
        assert_abs_diff_eq!(t("c1ccncc1"), 12.89, epsilon = 1e-9);
        assert_abs_diff_eq!(t("C1CN1"), 21.94, epsilon = 1e-9);
        assert_abs_diff_eq!(t("C1CO1"), 12.53, epsilon = 1e-9);
        assert_abs_diff_eq!(t("CC(=O)[O-]"), 40.13, epsilon = 1e-9);
        assert_abs_diff_eq!(t("c1ccccc1[N+](=O)[O-]"), 43.14, epsilon = 1e-9);
        assert_abs_diff_eq!(t("[O-][n+]1ccccc1"), 26.94, epsilon = 1e-9);
    }

    #[test]
    fn fallback_environments() {
        assert_abs_diff_eq!(t("O"), 31.5, epsilon = 1e-9);
        assert_abs_diff_eq!(t("N"), 35.0, epsilon = 1e-9);
        assert_abs_diff_eq!(t("CN=[N+]=[N-]"), 48.76, epsilon = 1e-9);
        assert_abs_diff_eq!(t("C[O+](C)C"), 2.7, epsilon = 1e-9);
    }

    #[test]
    fn sulfur_and_phosphorus_ignored() {
        assert_eq!(t("CSC"), 0.0);
        assert_eq!(t("CP(C)C"), 0.0);
    }
}
