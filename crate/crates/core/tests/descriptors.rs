mod common;

use std::path::PathBuf;

use attrilens::descriptors::{compute, compute_features, DescriptorId};
use attrilens::molgraph::parse_smiles;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn path(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(rel)
}

fn value(smiles: &str, name: &str) -> f64 {
    let mol = parse_smiles(smiles).unwrap();
    compute(&mol, DescriptorId::from_name(name).unwrap())
        .unwrap()
        .value
}

fn reference_rows() -> Vec<(String, Vec<f64>)> {
    std::fs::read_to_string(path("tests/data/descriptor_reference.tsv"))
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| {
            let mut c = l.split('\t');
            let smiles = c.next().unwrap().to_string();
            (smiles, c.map(|v| v.parse().unwrap()).collect())
        })
        .collect()
}

fn corpus_smiles() -> Vec<String> {
    let mut out: Vec<String> = reference_rows().into_iter().map(|r| r.0).collect();
    let bbbp = std::fs::read_to_string(path("data/datasets/bbbp_curated.csv")).unwrap();
    out.extend(
        bbbp.lines()
            .skip(1)
            .map(|l| l.rsplit(',').next().unwrap().to_string()),
    );
    out
}

#[test]
fn hand_derived_values() {
    assert!((value("O", "MolWt") - 18.015).abs() <= 0.01);
    assert_eq!(value("c1ccccc1", "TPSA"), 0.0);
    assert_eq!(value("c1ccccc1", "NumAromaticRings"), 1.0);
    assert_eq!(value("CCO", "NumHDonors"), 1.0);
    assert_eq!(value("CCO", "NumHAcceptors"), 1.0);
    assert!((value("CC(=O)Oc1ccccc1C(=O)O", "TPSA") - 63.60).abs() <= 0.05);
    assert_eq!(
        value(
            "CN(C(=O)Cc1ccc(Cl)c(Cl)c1)C1CCCC[C@H]1N1CCCC1",
            "HeavyAtomCount"
        ),
        24.0
    );
    // Kekulé and aromatic spellings of one ring agree
    assert_eq!(value("C1=CC=CC=C1", "NumAromaticRings"), 1.0);
    assert_eq!(value("C1=CC=CC=C1", "TPSA"), 0.0);
}

#[test]
fn matches_reference_toolkit_values() {
    let names = [
        "MolLogP",
        "TPSA",
        "MolWt",
        "RingCount",
        "NumAromaticRings",
        "FractionCSP3",
        "HeavyAtomCount",
    ];
    let tol = [0.02, 0.01, 0.01, 0.0, 0.0, 1e-4, 0.0];
    let rows = reference_rows();
    assert!(rows.len() > 200);
    let mut misses = Vec::new();
    for (smiles, want) in &rows {
        for ((name, &w), &t) in names.iter().zip(want).zip(&tol) {
            let got = value(smiles, name);
            if (got - w).abs() > t + 1e-9 {
                misses.push(format!("{smiles} {name}: {got} vs {w}"));
            }
        }
    }
    assert!(
        misses.is_empty(),
        "{} mismatches:\n{}",
        misses.len(),
        misses.join("\n")
    );
}

#[test]
fn atom_order_does_not_change_any_descriptor() {
    let ids: Vec<DescriptorId> = DescriptorId::implemented_ids().collect();
    let pool = corpus_smiles();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for k in 0..500 {
        let smiles = &pool[k * 7919 % pool.len()];
        let mol = parse_smiles(smiles).unwrap();
        let base = compute_features(&mol, &ids).unwrap();
        let shuffled = common::random_smiles(&mol, &mut rng);
        let again = parse_smiles(&shuffled).unwrap_or_else(|e| panic!("{shuffled}: {e}"));
        let got = compute_features(&again, &ids).unwrap();
        for ((id, a), b) in ids.iter().zip(&base).zip(&got) {
            assert!(
                (a - b).abs() <= 1e-9 * a.abs().max(1.0),
                "{smiles} -> {shuffled}: {id:?} {a} vs {b}"
            );
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn counts_are_nonnegative_and_bounded(pick in 0usize..600, seed in any::<u64>()) {
        let pool = corpus_smiles();
        let mol = parse_smiles(&pool[pick % pool.len()]).unwrap();
        let mol = parse_smiles(&common::random_smiles(&mol, &mut ChaCha8Rng::seed_from_u64(seed))).unwrap();
        let heavy = value_of(&mol, "HeavyAtomCount");
        for name in ["NumHDonors", "NumHAcceptors", "NumRotatableBonds", "RingCount", "NumAromaticRings", "NumSulfurAtoms", "NumHalogenAtoms", "NumNitrogenPlusOxygen"] {
            let v = value_of(&mol, name);
            prop_assert!(v >= 0.0 && v <= heavy, "{} = {}", name, v);
        }
        prop_assert!(value_of(&mol, "NumAromaticRings") <= value_of(&mol, "RingCount"));
        let f = value_of(&mol, "FractionCSP3");
        prop_assert!((0.0..=1.0).contains(&f));
        prop_assert!(value_of(&mol, "TPSA") >= 0.0);
    }
}

fn value_of(mol: &attrilens::molgraph::Molecule, name: &str) -> f64 {
    compute(mol, DescriptorId::from_name(name).unwrap())
        .unwrap()
        .value
}
