mod common;

use std::collections::HashSet;
use std::path::PathBuf;

use attrilens::molgraph::{murcko_scaffold, parse_smiles, scaffold_key, EMPTY_SCAFFOLD_KEY};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn bbbp_smiles() -> Vec<String> {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/datasets/bbbp_curated.csv");
    std::fs::read_to_string(p)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().to_string())
        .collect()
}

#[test]
fn one_ring_system_has_one_key_in_any_atom_order() {
    let mol = parse_smiles("O=C1CN=C(c2ccccc2)c2cc(Cl)ccc2N1").unwrap();
    let key = scaffold_key(&mol);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut spellings = HashSet::new();
    for _ in 0..100 {
        let s = common::random_smiles(&mol, &mut rng);
        assert_eq!(scaffold_key(&parse_smiles(&s).unwrap()), key, "{s}");
        spellings.insert(s);
    }
    assert!(spellings.len() > 50);
}

#[test]
fn distinct_scaffolds_get_distinct_keys() {
    let rings = [
        "c1ccccc1",
        "c1ccncc1",
        "C1CCCCC1",
        "C1CCNCC1",
        "c1ccc2ccccc2c1",
        "c1ccc(cc1)Cc1ccccc1",
        "c1ccc(cc1)CCc1ccccc1",
        "c1ccc(cc1)-c1ccccc1",
        "C1CC1",
        "C1=CCCCC1",
    ];
    let keys: HashSet<String> = rings
        .iter()
        .map(|s| scaffold_key(&parse_smiles(s).unwrap()))
        .collect();
    assert_eq!(keys.len(), rings.len());
    assert_eq!(
        scaffold_key(&parse_smiles("CCCCO").unwrap()),
        EMPTY_SCAFFOLD_KEY
    );
    // side chains do not change the framework
    assert_eq!(
        scaffold_key(&parse_smiles("CCc1ccc(O)cc1").unwrap()),
        scaffold_key(&parse_smiles("c1ccccc1").unwrap())
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn scaffold_key_ignores_atom_order(pick in 0usize..400, seed in any::<u64>()) {
        let all = bbbp_smiles();
        let mol = parse_smiles(&all[pick % all.len()]).unwrap();
        let s = common::random_smiles(&mol, &mut ChaCha8Rng::seed_from_u64(seed));
        let again = parse_smiles(&s).unwrap();
        prop_assert_eq!(again.atoms().len(), mol.atoms().len());
        prop_assert_eq!(again.bonds().len(), mol.bonds().len());
        prop_assert_eq!(again.rings().len(), mol.rings().len());
        prop_assert_eq!(
            murcko_scaffold(&again).atoms().len(),
            murcko_scaffold(&mol).atoms().len()
        );
        prop_assert_eq!(scaffold_key(&again), scaffold_key(&mol));
    }

    #[test]
    fn parser_is_total(bytes in prop::collection::vec(any::<u8>(), 0..64)) {
        let text = String::from_utf8_lossy(&bytes);
        let _ = parse_smiles(&text);
    }

    #[test]
    fn parser_is_total_on_smiles_alphabet(s in "[CNOcnos0-9()=#\\[\\]@+\\-H%./\\\\]{0,40}") {
        let _ = parse_smiles(&s);
    }
}
