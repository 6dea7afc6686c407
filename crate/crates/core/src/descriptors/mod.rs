//! Molecular descriptors and free-text attribute resolution.
//!
//! The registry is read from `data/descriptors.tsv`; Crippen and TPSA
//! parameters come from their own tables in the same directory. All data is
//! embedded at compile time and parsed once.

mod crippen;
mod tpsa;

use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::molgraph::{BondOrder, Element, Molecule};

const REGISTRY_TSV: &str = include_str!("../../data/descriptors.tsv");

/// Minimum normalised edit-distance similarity for a fuzzy match.
pub const FUZZY_THRESHOLD: f64 = 0.80;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DescriptorError {
    #[error("descriptor `{0}` has no calculator")]
    Unimplemented(&'static str),
}

#[derive(Debug)]
struct Entry {
    name: &'static str,
    implemented: bool,
    aliases: Vec<&'static str>,
    // normalised name followed by normalised aliases
    keys: Vec<String>,
}

fn registry() -> &'static [Entry] {
    static REGISTRY: OnceLock<Vec<Entry>> = OnceLock::new();
    REGISTRY.get_or_init(|| {
        let entries: Vec<Entry> = REGISTRY_TSV
            .lines()
            .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
            .map(|line| {
                let mut cols = line.split('\t');
                let name = cols.next().expect("name column").trim();
                let implemented = cols.next().map(str::trim) == Some("1");
                let aliases: Vec<&'static str> = cols
                    .next()
                    .unwrap_or("")
                    .split(';')
                    .map(str::trim)
                    .filter(|a| !a.is_empty())
                    .collect();
                let mut keys = vec![normalize(name)];
                keys.extend(aliases.iter().map(|a| normalize(a)));
                Entry {
                    name,
                    implemented,
                    aliases,
                    keys,
                }
            })
            .collect();
        assert!(entries.len() <= u16::MAX as usize);
        entries
    })
}

/// Handle to a registry entry.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DescriptorId(u16);

impl DescriptorId {
    /// All registry entries in file order.
    pub fn all() -> impl Iterator<Item = DescriptorId> {
        (0..registry().len()).map(|i| DescriptorId(i as u16))
    }

    pub fn implemented_ids() -> impl Iterator<Item = DescriptorId> {
        DescriptorId::all().filter(|d| d.implemented())
    }

    /// Exact lookup by canonical name.
    pub fn from_name(name: &str) -> Option<DescriptorId> {
        registry()
            .iter()
            .position(|e| e.name == name)
            .map(|i| DescriptorId(i as u16))
    }

    fn entry(self) -> &'static Entry {
        &registry()[self.0 as usize]
    }

    pub fn name(self) -> &'static str {
        self.entry().name
    }

    pub fn aliases(self) -> &'static [&'static str] {
        &self.entry().aliases
    }

    pub fn implemented(self) -> bool {
        self.entry().implemented
    }
}

impl fmt::Debug for DescriptorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DescriptorId({})", self.name())
    }
}

impl fmt::Display for DescriptorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for DescriptorId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for DescriptorId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let name = String::deserialize(d)?;
        DescriptorId::from_name(&name)
            .ok_or_else(|| serde::de::Error::custom(format!("unknown descriptor `{name}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DescriptorValue {
    pub id: DescriptorId,
    pub value: f64,
}

/// Lowercase ASCII letters and digits only.
pub fn normalize(raw: &str) -> String {
    raw.chars()
        .filter(|c| c.is_ascii_alphanumeric())
        .map(|c| c.to_ascii_lowercase())
        .collect()
}

/// Maps a free-text attribute name to a registry entry.
///
/// Exact matches on the normalised canonical name or an alias win; otherwise
/// the entry with the highest normalised Levenshtein similarity is returned
/// when it reaches [`FUZZY_THRESHOLD`]. Ties go to the earlier entry.
pub fn resolve_attribute(raw_name: &str) -> Option<DescriptorId> {
    let key = normalize(raw_name);
    if key.is_empty() {
        return None;
    }
    let reg = registry();
    if let Some(i) = reg.iter().position(|e| e.keys.contains(&key)) {
        return Some(DescriptorId(i as u16));
    }
    let mut best: Option<(f64, usize)> = None;
    for (i, e) in reg.iter().enumerate() {
        let score = e
            .keys
            .iter()
            .map(|k| strsim::normalized_levenshtein(&key, k))
            .fold(0.0, f64::max);
        if best.is_none_or(|(b, _)| score > b) {
            best = Some((score, i));
        }
    }
    best.filter(|(s, _)| *s >= FUZZY_THRESHOLD)
        .map(|(_, i)| DescriptorId(i as u16))
}

/// Evaluates one descriptor on `mol` as given (no salt stripping).
pub fn compute(mol: &Molecule, id: DescriptorId) -> Result<DescriptorValue, DescriptorError> {
    let value = match id.name() {
        "MolWt" => mol_wt(mol),
        "HeavyAtomCount" => mol.heavy_atom_count() as f64,
        "MolLogP" => crippen::mol_logp(mol),
        "TPSA" => tpsa::tpsa(mol),
        "NumHDonors" => num_h_donors(mol) as f64,
        "NumHAcceptors" => num_h_acceptors(mol) as f64,
        "NumRotatableBonds" => num_rotatable_bonds(mol) as f64,
        "RingCount" => mol.rings().len() as f64,
        "NumAromaticRings" => num_aromatic_rings(mol) as f64,
        "FractionCSP3" => fraction_csp3(mol),
        "NumSulfurAtoms" => count_atoms(mol, |e| e == Element::S) as f64,
        "NumHalogenAtoms" => count_atoms(mol, |e| e.is_halogen()) as f64,
        "FormalCharge" => mol
            .atoms()
            .iter()
            .map(|a| a.formal_charge as i64)
            .sum::<i64>() as f64,
        "NumNitrogenPlusOxygen" => count_atoms(mol, |e| e == Element::N || e == Element::O) as f64,
        _ => return Err(DescriptorError::Unimplemented(id.name())),
    };
    Ok(DescriptorValue { id, value })
}

/// Values for `ids` in order. Fails on the first unimplemented entry.
pub fn compute_features(mol: &Molecule, ids: &[DescriptorId]) -> Result<Vec<f64>, DescriptorError> {
    ids.iter()
        .map(|&id| compute(mol, id).map(|v| v.value))
        .collect()
}

fn count_atoms(mol: &Molecule, pred: impl Fn(Element) -> bool) -> usize {
    mol.atoms().iter().filter(|a| pred(a.element)).count()
}

fn mol_wt(mol: &Molecule) -> f64 {
    let h = Element::H.mass();
    mol.atoms()
        .iter()
        .map(|a| a.element.mass() + h * (a.implicit_h() + a.explicit_h) as f64)
        .sum()
}

/// N and O atoms bearing at least one hydrogen (water counts one).
fn num_h_donors(mol: &Molecule) -> usize {
    (0..mol.atoms().len())
        .filter(|&i| {
            matches!(mol.atoms()[i].element, Element::N | Element::O) && mol.total_h(i) > 0
        })
        .count()
}

/// Aromatic nitrogen that donates its lone pair to the ring.
fn pyrrole_type(mol: &Molecule, i: usize) -> bool {
    let a = &mol.atoms()[i];
    a.element == Element::N
        && a.aromatic
        && a.formal_charge == 0
        && mol.degree(i) + (a.implicit_h() + a.explicit_h) as usize == 3
}

fn num_h_acceptors(mol: &Molecule) -> usize {
    (0..mol.atoms().len())
        .filter(|&i| {
            let e = mol.atoms()[i].element;
            (e == Element::O || e == Element::N) && !pyrrole_type(mol, i)
        })
        .count()
}

fn is_amide_cn(mol: &Molecule, c: usize, n: usize) -> bool {
    mol.atoms()[c].element == Element::C
        && mol.atoms()[n].element == Element::N
        && mol.neighbors(c).iter().any(|&(o, b)| {
            mol.atoms()[o].element == Element::O && mol.bonds()[b].order == BondOrder::Double
        })
}

fn num_rotatable_bonds(mol: &Molecule) -> usize {
    mol.bonds()
        .iter()
        .enumerate()
        .filter(|&(bi, b)| {
            b.order == BondOrder::Single
                && !mol.is_ring_bond(bi)
                && mol.atoms()[b.a].element != Element::H
                && mol.atoms()[b.b].element != Element::H
                && mol.heavy_degree(b.a) >= 2
                && mol.heavy_degree(b.b) >= 2
                && !is_amide_cn(mol, b.a, b.b)
                && !is_amide_cn(mol, b.b, b.a)
        })
        .count()
}

fn num_aromatic_rings(mol: &Molecule) -> usize {
    mol.rings()
        .iter()
        .filter(|r| {
            (0..r.len()).all(|w| {
                mol.bond_between(r[w], r[(w + 1) % r.len()])
                    .is_some_and(|b| b.order == BondOrder::Aromatic)
            })
        })
        .count()
}

fn fraction_csp3(mol: &Molecule) -> f64 {
    let carbons: Vec<usize> = (0..mol.atoms().len())
        .filter(|&i| mol.atoms()[i].element == Element::C)
        .collect();
    if carbons.is_empty() {
        return 0.0;
    }
    let sp3 = carbons
        .iter()
        .filter(|&&i| {
            !mol.atoms()[i].aromatic
                && mol
                    .neighbors(i)
                    .iter()
                    .all(|&(_, b)| mol.bonds()[b].order == BondOrder::Single)
        })
        .count();
    sp3 as f64 / carbons.len() as f64
}
