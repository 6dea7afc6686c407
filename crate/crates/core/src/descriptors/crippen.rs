//! Wildman–Crippen logP.
//!
//! Each heavy atom and each hydrogen is assigned one atom type by the first
//! matching rule below; the type's contribution comes from
//! `data/crippen.tsv`. Rules mirror the published SMARTS definitions
//! (aliphatic/aromatic distinctions, H counts, total connectivity X).

use std::collections::HashMap;
use std::sync::OnceLock;

use crate::molgraph::{BondOrder, Element, Molecule};

const CRIPPEN_TSV: &str = include_str!("../../data/crippen.tsv");

fn contributions() -> &'static HashMap<&'static str, f64> {
    static TABLE: OnceLock<HashMap<&'static str, f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        CRIPPEN_TSV
            .lines()
            .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
            .map(|l| {
                let mut cols = l.split('\t');
                let name = cols.next().expect("type column").trim();
                let value = cols
                    .next()
                    .and_then(|v| v.trim().parse().ok())
                    .expect("numeric contribution in crippen.tsv");
                (name, value)
            })
            .collect()
    })
}

pub(crate) fn contribution(atom_type: &str) -> f64 {
    *contributions()
        .get(atom_type)
        .unwrap_or_else(|| panic!("crippen.tsv lacks type {atom_type}"))
}

pub(crate) fn mol_logp(mol: &Molecule) -> f64 {
    let mut total = 0.0;
    for i in 0..mol.atoms().len() {
        if mol.atoms()[i].element == Element::H {
            // explicit hydrogen atoms are typed from their neighbour
            let host = mol.neighbors(i).first().map(|&(n, _)| n);
            total += contribution(hydrogen_type(mol, host));
            continue;
        }
        if let Some(t) = heavy_type(mol, i) {
            total += contribution(t);
        }
        let a = &mol.atoms()[i];
        let h = a.implicit_h() + a.explicit_h;
        if h > 0 {
            total += h as f64 * contribution(hydrogen_type(mol, Some(i)));
        }
    }
    total
}

#[derive(Clone, Copy)]
struct Nbr {
    el: Element,
    aromatic: bool,
    charge: i8,
    order: BondOrder,
    idx: usize,
}

impl Nbr {
    fn aliphatic(&self) -> bool {
        !self.aromatic
    }
    fn is(&self, el: Element, aromatic: bool) -> bool {
        self.el == el && self.aromatic == aromatic
    }
    // SMARTS default bond: single or aromatic
    fn plain(&self) -> bool {
        matches!(self.order, BondOrder::Single | BondOrder::Aromatic)
    }
    fn single(&self) -> bool {
        self.order == BondOrder::Single
    }
    fn double(&self) -> bool {
        self.order == BondOrder::Double
    }
}

fn heavy_neighbors(mol: &Molecule, i: usize) -> Vec<Nbr> {
    mol.neighbors(i)
        .iter()
        .filter(|(n, _)| mol.atoms()[*n].element != Element::H)
        .map(|&(n, b)| {
            let a = &mol.atoms()[n];
            Nbr {
                el: a.element,
                aromatic: a.aromatic,
                charge: a.formal_charge,
                order: mol.bonds()[b].order,
                idx: n,
            }
        })
        .collect()
}

fn is_organic_hetero(el: Element) -> bool {
    matches!(
        el,
        Element::N
            | Element::O
            | Element::P
            | Element::S
            | Element::F
            | Element::CL
            | Element::BR
            | Element::I
    )
}

fn heavy_type(mol: &Molecule, i: usize) -> Option<&'static str> {
    let a = &mol.atoms()[i];
    let nb = heavy_neighbors(mol, i);
    let h = mol.total_h(i);
    let x = nb.len()
        + (a.implicit_h() + a.explicit_h) as usize
        + mol
            .neighbors(i)
            .iter()
            .filter(|(n, _)| mol.atoms()[*n].element == Element::H)
            .count();
    let z = a.element.atomic_number();
    Some(match a.element {
        Element::C => carbon_type(a.aromatic, h, x, &nb),
        Element::N => nitrogen_type(a.aromatic, a.formal_charge, h, &nb),
        Element::O => oxygen_type(mol, i, a.aromatic, a.formal_charge, h, x, &nb),
        Element::F | Element::CL | Element::BR | Element::I => match a.formal_charge {
            0 => match a.element {
                Element::F => "F",
                Element::CL => "Cl",
                Element::BR => "Br",
                _ => "I",
            },
            c if c < 0 => "Hal",
            _ if a.element == Element::I => "Hal",
            _ => return None,
        },
        Element::P => "P",
        Element::S => {
            if a.aromatic {
                "S3"
            } else if a.formal_charge != 0 || nb.iter().any(|n| n.double() && n.el != Element::C) {
                "S2"
            } else {
                "S1"
            }
        }
        _ => match z {
            // alkali cations count as ionic
            3 | 11 | 19 | 37 | 55 if a.formal_charge > 0 => "Hal",
            3..=5 | 11..=14 | 19 | 20 | 31..=34 | 37 | 38 | 49..=52 | 55 | 56 | 81..=84 => "Me1",
            21..=30 | 39..=48 | 72..=80 => "Me2",
            _ => return None,
        },
    })
}

fn carbon_type(aromatic: bool, h: u8, x: usize, nb: &[Nbr]) -> &'static str {
    let aliph_c_single = nb
        .iter()
        .filter(|n| n.plain() && n.is(Element::C, false))
        .count();
    let a_single = nb.iter().filter(|n| n.plain() && n.aliphatic()).count();
    let hetero_single = nb
        .iter()
        .filter(|n| n.plain() && n.aliphatic() && is_organic_hetero(n.el))
        .count();
    let arom_single = nb.iter().filter(|n| n.plain() && n.aromatic).count();
    let double_c = nb
        .iter()
        .filter(|n| n.double() && n.is(Element::C, false))
        .count();

    if !aromatic {
        if h == 4 && nb.is_empty() {
            return "C1";
        }
        if (h == 3 && aliph_c_single >= 1) || (h == 2 && aliph_c_single >= 2) {
            return "C1";
        }
        if (h == 1 && aliph_c_single >= 3) || (h == 0 && aliph_c_single >= 4) {
            return "C2";
        }
        if h == 3 && hetero_single >= 1 {
            return "C3";
        }
        if h == 2 && x == 4 && hetero_single >= 1 && a_single >= 2 {
            return "C3";
        }
        if h == 1 && x == 4 && hetero_single >= 1 && a_single >= 3 {
            return "C4";
        }
        if h == 0 && x == 4 && hetero_single >= 1 && a_single >= 4 {
            return "C4";
        }
        if nb
            .iter()
            .any(|n| n.double() && n.aliphatic() && n.el != Element::C)
        {
            return "C5";
        }
        if double_c >= 1 {
            let others = a_single;
            if (h == 2) || (h == 1 && others >= 1) || (h == 0 && others >= 2) || double_c >= 2 {
                return "C6";
            }
        }
        if x == 2
            && nb
                .iter()
                .any(|n| n.order == BondOrder::Triple && n.aliphatic())
        {
            return "C7";
        }
        if h == 3 && nb.iter().any(|n| n.plain() && n.is(Element::C, true)) {
            return "C8";
        }
        if h == 3 && arom_single >= 1 {
            return "C9";
        }
        if x == 4 && arom_single >= 1 {
            match h {
                2 => return "C10",
                1 => return "C11",
                0 => return "C12",
                _ => {}
            }
        }
    } else {
        if h == 0
            && nb.iter().any(|n| {
                n.single()
                    && n.aliphatic()
                    && !matches!(
                        n.el,
                        Element::C
                            | Element::N
                            | Element::O
                            | Element::S
                            | Element::F
                            | Element::CL
                            | Element::BR
                            | Element::I
                    )
            })
        {
            return "C13";
        }
        for (el, t) in [
            (Element::F, "C14"),
            (Element::CL, "C15"),
            (Element::BR, "C16"),
            (Element::I, "C17"),
        ] {
            if nb.iter().any(|n| n.plain() && n.el == el) {
                return t;
            }
        }
        if h == 1 {
            return "C18";
        }
        let ring_arom = nb.iter().filter(|n| n.order == BondOrder::Aromatic).count();
        if ring_arom >= 2 {
            if ring_arom >= 3 {
                return "C19";
            }
            for n in nb.iter().filter(|n| n.single()) {
                if n.aromatic {
                    return "C20";
                }
            }
            for (el, t) in [
                (Element::C, "C21"),
                (Element::N, "C22"),
                (Element::O, "C23"),
                (Element::S, "C24"),
            ] {
                if nb.iter().any(|n| n.single() && n.is(el, false)) {
                    return t;
                }
            }
            if nb.iter().any(|n| {
                n.double() && n.aliphatic() && matches!(n.el, Element::C | Element::N | Element::O)
            }) {
                return "C25";
            }
        }
    }
    if !aromatic {
        let double_c_partner = nb.iter().any(|n| n.double() && n.is(Element::C, false));
        if double_c_partner {
            let arom = nb.iter().filter(|n| n.plain() && n.aromatic).count();
            let aliph = nb.iter().filter(|n| n.plain() && n.aliphatic()).count();
            let arom_c = nb
                .iter()
                .filter(|n| n.plain() && n.is(Element::C, true))
                .count();
            if (arom >= 1 && aliph >= 1) || (arom_c >= 1 && arom >= 2) || (h == 1 && arom >= 1) {
                return "C26";
            }
        }
        if nb.iter().any(|n| n.double() && n.is(Element::C, true)) {
            return "C26";
        }
        if x == 4
            && nb.iter().any(|n| {
                n.plain()
                    && n.aliphatic()
                    && !matches!(
                        n.el,
                        Element::C
                            | Element::N
                            | Element::O
                            | Element::P
                            | Element::S
                            | Element::F
                            | Element::CL
                            | Element::BR
                            | Element::I
                    )
            })
        {
            return "C27";
        }
    }
    "CS"
}

fn nitrogen_type(aromatic: bool, charge: i8, h: u8, nb: &[Nbr]) -> &'static str {
    let single: Vec<&Nbr> = nb.iter().filter(|n| n.plain()).collect();
    let single_a = single.iter().filter(|n| n.aliphatic()).count();
    let single_arom = single.iter().filter(|n| n.aromatic).count();
    let doubles: Vec<&Nbr> = nb.iter().filter(|n| n.double()).collect();
    let triples = nb.iter().filter(|n| n.order == BondOrder::Triple).count();

    if aromatic {
        return if charge == 0 {
            "N11"
        } else if charge > 0 {
            "N12"
        } else {
            "NS"
        };
    }
    if charge == 0 {
        if h == 2 && single_a >= 1 {
            return "N1";
        }
        if h == 1 && single_a >= 2 {
            return "N2";
        }
        if h == 2 && single_arom >= 1 {
            return "N3";
        }
        if h == 1 && single.len() >= 2 && single_arom >= 1 {
            return "N4";
        }
        if h == 1 && !doubles.is_empty() {
            return "N5";
        }
        if !doubles.is_empty() && !single.is_empty() {
            return "N6";
        }
        if single_a >= 3 {
            return "N7";
        }
        if single.len() >= 3 && single_arom >= 1 {
            return "N8";
        }
        if triples >= 1
            && nb
                .iter()
                .any(|n| n.order == BondOrder::Triple && n.aliphatic())
        {
            return "N9";
        }
    }
    if charge > 0 && (1..=3).contains(&h) {
        return "N10";
    }
    if charge > 0 && h == 0 {
        if single_a >= 4 {
            return "N13";
        }
        if doubles.iter().any(|n| n.aliphatic()) && single_a >= 1 && single.len() >= 2 {
            return "N13";
        }
        if doubles.iter().any(|n| n.el == Element::C) && doubles.iter().any(|n| n.el == Element::N)
        {
            return "N13";
        }
    }
    if charge > 0
        && nb
            .iter()
            .any(|n| n.order == BondOrder::Triple && n.aliphatic())
    {
        return "N14";
    }
    if charge < 0 {
        return "N14";
    }
    if charge > 0
        && doubles.iter().any(|n| n.el == Element::N && n.charge < 0)
        && doubles.iter().any(|n| n.el == Element::N && n.aliphatic())
        && doubles.len() >= 2
    {
        return "N14";
    }
    "NS"
}

fn oxygen_type(
    mol: &Molecule,
    o: usize,
    aromatic: bool,
    charge: i8,
    h: u8,
    x: usize,
    nb: &[Nbr],
) -> &'static str {
    if aromatic {
        return "O1";
    }
    if h == 1 || h == 2 {
        return "O2";
    }
    let single_a = nb.iter().filter(|n| n.plain() && n.aliphatic()).count();
    let single_arom = nb.iter().filter(|n| n.plain() && n.aromatic).count();
    if single_a >= 2 {
        return "O3";
    }
    if single_arom >= 1 && single_a + single_arom >= 2 {
        return "O4";
    }
    let double = nb.iter().find(|n| n.double());
    if let Some(d) = double {
        if d.el == Element::N || d.el == Element::O {
            return "O5";
        }
    }
    if x == 1 && charge < 0 && nb.len() == 1 {
        let host = nb[0];
        if host.el == Element::N {
            return "O5";
        }
        if host.el == Element::S {
            return "O6";
        }
        let acid = host.el == Element::C
            && heavy_neighbors(mol, host.idx)
                .iter()
                .any(|n| n.double() && n.el == Element::O);
        if !acid {
            return "O7";
        }
    }
    if let Some(d) = double {
        if d.el == Element::S {
            return "O6";
        }
        if d.el == Element::C && d.aromatic {
            return "O8";
        }
        if d.el == Element::C {
            return carbonyl_oxygen_type(mol, d.idx, o);
        }
    }
    if charge == -1
        && nb.len() == 1
        && nb[0].el == Element::C
        && !nb[0].aromatic
        && heavy_neighbors(mol, nb[0].idx)
            .iter()
            .any(|n| n.double() && n.el == Element::O)
    {
        return "O12";
    }
    "OS"
}

fn carbonyl_oxygen_type(mol: &Molecule, c: usize, o: usize) -> &'static str {
    let h = mol.total_h(c);
    // neighbours of the carbonyl carbon other than the oxygen itself
    let others: Vec<Nbr> = heavy_neighbors(mol, c)
        .into_iter()
        .filter(|n| n.idx != o)
        .collect();
    let x = mol.degree(c) + (mol.atoms()[c].implicit_h() + mol.atoms()[c].explicit_h) as usize;
    let plain: Vec<&Nbr> = others.iter().filter(|n| n.plain()).collect();
    let has = |p: &dyn Fn(&Nbr) -> bool| plain.iter().any(|n| p(n));
    let aliph_c = |n: &Nbr| n.is(Element::C, false);
    let arom_c = |n: &Nbr| n.is(Element::C, true);

    // O9
    if h == 1 && has(&aliph_c) {
        return "O9";
    }
    if has(&aliph_c) && plain.iter().filter(|n| n.aliphatic()).count() >= 2 {
        return "O9";
    }
    if h == 1
        && (has(&|n: &Nbr| n.is(Element::N, false)) || has(&|n: &Nbr| n.is(Element::O, false)))
    {
        return "O9";
    }
    if h == 2 {
        return "O9";
    }
    if x == 2 && others.iter().any(|n| n.double() && n.el == Element::O) {
        return "O9";
    }
    // O10
    if h == 1 && has(&arom_c) {
        return "O10";
    }
    let c_or_c = plain.iter().filter(|n| n.el == Element::C).count();
    let arom = plain.iter().filter(|n| n.aromatic).count();
    if c_or_c >= 1 && arom >= 1 && plain.len() >= 2 {
        // [C,c] and a distinct aromatic atom
        let distinct = plain
            .iter()
            .any(|p| p.el == Element::C && plain.iter().any(|q| q.idx != p.idx && q.aromatic));
        if distinct {
            return "O10";
        }
    }
    if has(&arom_c) && plain.iter().filter(|n| n.aliphatic()).count() >= 1 {
        return "O10";
    }
    // O11
    if plain.iter().filter(|n| n.el != Element::C).count() >= 2 {
        return "O11";
    }
    "OS"
}

fn hydrogen_type(mol: &Molecule, host: Option<usize>) -> &'static str {
    let Some(host) = host else {
        return "HS";
    };
    let el = mol.atoms()[host].element;
    match el {
        Element::C | Element::H => "H1",
        Element::N => "H3",
        Element::O => {
            let others = heavy_neighbors(mol, host);
            let Some(o) = others.first() else {
                // water and hydroxide
                return "H2";
            };
            if o.el == Element::C && !o.aromatic {
                let oc = &mol.atoms()[o.idx];
                let x = mol.degree(o.idx) + (oc.implicit_h() + oc.explicit_h) as usize;
                if x == 4 {
                    return "H2";
                }
            }
            if o.el == Element::C && o.aromatic {
                return "H2";
            }
            if !matches!(o.el, Element::C | Element::N | Element::O | Element::S) {
                return "H2";
            }
            if o.el == Element::N {
                return "H3";
            }
            if o.el == Element::C
                && heavy_neighbors(mol, o.idx).iter().any(|n| {
                    n.double() && matches!(n.el, Element::C | Element::N | Element::O | Element::S)
                })
            {
                return "H4";
            }
            if o.el == Element::O || o.el == Element::S {
                return "H4";
            }
            "HS"
        }
        _ => "H2",
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::molgraph::parse_smiles;
    use approx::assert_abs_diff_eq;

    fn logp(s: &str) -> f64 {
        mol_logp(&parse_smiles(s).unwrap())
    }

    #[test]
    fn hand_summed_values() {
        // CH3 (C1) + CH2-O (C3) + OH (O2) + 5 H1 + alcohol H
        let ethanol = 0.1441 - 0.2035 - 0.2893 + 5.0 * 0.1230 - 0.2677;
        assert_abs_diff_eq!(logp("CCO"), ethanol, epsilon = 1e-9);
        // carboxylic acid: C1 + 3 H1 + C5 + O9 + O2 + H4
        let acetic = 0.1441 + 3.0 * 0.1230 - 0.2783 - 0.1526 - 0.2893 + 0.2980;
        assert_abs_diff_eq!(logp("CC(=O)O"), acetic, epsilon = 1e-9);
        // six aromatic CH
        assert_abs_diff_eq!(logp("c1ccccc1"), 6.0 * (0.1581 + 0.1230), epsilon = 1e-9);
    }

    #[test]
    fn explicit_and_implicit_hydrogens_agree() {
        assert_abs_diff_eq!(logp("[H]OC([H])([H])C"), logp("OCC"), epsilon = 1e-9);
    }
}
