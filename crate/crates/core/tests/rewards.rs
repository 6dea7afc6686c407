use std::fs;
use std::path::PathBuf;

use attrilens::descriptors::DescriptorId;
use attrilens::molgraph::parse_smiles;
use attrilens::response::{
    parse_response, read_corpus, render_response, Answer, AttributeClaim, Polarity, Task,
};
use attrilens::rewards::{
    check_claims, reward_rational, total_reward, CountBounds, Interval, IntervalSet, RangeTable,
};
use proptest::prelude::*;

fn data(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("data")
        .join(rel)
}

struct Expected {
    id: String,
    format: f64,
    correct: f64,
    count: f64,
    rational: String,
}

fn expected() -> Vec<Expected> {
    fs::read_to_string(data("fixtures/case_studies_expected.tsv"))
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| {
            let c: Vec<&str> = l.split('\t').collect();
            Expected {
                id: c[0].into(),
                format: c[1].parse().unwrap(),
                correct: c[2].parse().unwrap(),
                count: c[3].parse().unwrap(),
                rational: c[4].into(),
            }
        })
        .collect()
}

// The printed reward values keep at most two decimals, cut rather than rounded.
fn printed(x: f64) -> String {
    let cut = (x * 100.0 + 1e-9).floor() / 100.0;
    format!("{cut}")
}

#[test]
fn case_studies_reproduce_with_both_bundled_tables() {
    let corpus = read_corpus(
        fs::File::open(data("fixtures/case_studies.jsonl"))
            .map(std::io::BufReader::new)
            .unwrap(),
    )
    .unwrap();
    let exp = expected();
    assert_eq!(corpus.len(), 12);
    assert_eq!(exp.len(), corpus.len());
    for name in RangeTable::bundled_names() {
        let table = RangeTable::bundled(name).unwrap();
        for (rec, e) in corpus.iter().zip(&exp) {
            assert_eq!(rec.id, e.id);
            let mol = parse_smiles(&rec.smiles).unwrap();
            let parsed = parse_response(&rec.response_text, rec.task);
            let Answer::Bool(label) = rec.label else {
                panic!("classification label expected")
            };
            let b = total_reward(
                &parsed,
                &mol,
                label,
                &rec.target,
                &table,
                CountBounds::DEFAULT,
            )
            .unwrap();
            let got = (b.format, b.correct, b.count, printed(b.rational));
            let want = (e.format, e.correct, e.count, e.rational.clone());
            assert_eq!(got, want, "{name} {}", rec.id);
            assert_eq!(b.total, b.format + b.correct + b.count + b.rational);
        }
    }
}

#[test]
fn case_study_exact_fractions() {
    let table = RangeTable::bundled("gpt4o-default").unwrap();
    let corpus = read_corpus(std::io::BufReader::new(
        fs::File::open(data("fixtures/case_studies.jsonl")).unwrap(),
    ))
    .unwrap();
    let by_id = |id: &str| corpus.iter().find(|r| r.id == id).unwrap();
    let score = |id: &str| {
        let r = by_id(id);
        let mol = parse_smiles(&r.smiles).unwrap();
        let p = parse_response(&r.response_text, r.task);
        total_reward(
            &p,
            &mol,
            r.label == Answer::Bool(true),
            &r.target,
            &table,
            CountBounds::DEFAULT,
        )
        .unwrap()
    };
    let deepseek_bace = score("bace-deepseek-r1");
    assert_eq!(deepseek_bace.rational, 2.0 / 3.0);
    assert_eq!((deepseek_bace.n_att, deepseek_bace.verified), (6, 3));
    let ours = score("bbbp-ours");
    assert_eq!(ours.total, 4.0);
    assert_eq!(score("clintox-ours").total, 4.0);
    assert_eq!(score("clintox-deepseek-r1").rational, 0.6);
}

#[test]
fn figure_claim_vectors() {
    let p = parse_response(
        "<think>x</think><name>LogP: promotes, MolecularWeight: promotes, HBD: inhibits, PSA: inhibits</name><answer>False</answer>",
        Task::Classification,
    );
    assert_eq!(
        attrilens::response::claims_vector(p.claims.as_ref().unwrap()),
        vec![1, 1, 0, 0]
    );
}

#[test]
fn tpsa_row_classifies_thirty_as_advantageous() {
    let t = RangeTable::parse("BBBP\tTPSA\t[0, 90)").unwrap();
    let id = DescriptorId::from_name("TPSA").unwrap();
    assert!(t.get("BBBP", id).unwrap().contains(30.0));
}

const NAMES: &[&str] = &[
    "MolWt",
    "LogP",
    "TPSA",
    "HBD",
    "HBA",
    "RingCount",
    "Rotatable Bonds",
    "Fsp3",
    "Func Groups",
    "qed",
    "Hydrophobicity",
    "Aromatic Rings",
];

const SMILES: &[&str] = &[
    "CCO",
    "c1ccccc1",
    "CC(=O)Oc1ccccc1C(=O)O",
    "CN(C(=O)Cc1ccc(Cl)c(Cl)c1)C1CCCC[C@H]1N1CCCC1",
    "Nc1nc2ccccc2cc1CCC(=O)NCC1CCCCC1",
];

fn claims_strategy() -> impl Strategy<Value = Vec<AttributeClaim>> {
    prop::collection::vec(
        (0..NAMES.len(), any::<bool>()).prop_map(|(i, p)| {
            AttributeClaim::new(
                NAMES[i],
                if p {
                    Polarity::Promotes
                } else {
                    Polarity::Inhibits
                },
            )
        }),
        0..14,
    )
}

fn parsed(claims: &[AttributeClaim]) -> attrilens::response::ParsedResponse {
    parse_response(
        &render_response("r", claims, Answer::Bool(true)),
        Task::Classification,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn rational_is_permutation_and_duplication_invariant(
        claims in claims_strategy(),
        mol_ix in 0..SMILES.len(),
        seed in any::<u64>(),
        table_ix in 0..2usize,
    ) {
        use rand::{seq::SliceRandom, SeedableRng};
        let table = RangeTable::bundled(RangeTable::bundled_names()[table_ix]).unwrap();
        let mol = parse_smiles(SMILES[mol_ix]).unwrap();
        let base = reward_rational(&parsed(&claims), &mol, "BBBP", &table).unwrap();
        prop_assert!((0.0..=1.0).contains(&base));

        let mut shuffled = claims.clone();
        shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let perm = reward_rational(&parsed(&shuffled), &mol, "BBBP", &table).unwrap();
        prop_assert!((perm - base).abs() < 1e-12);

        let doubled: Vec<AttributeClaim> = claims.iter().chain(claims.iter()).cloned().collect();
        let dup = reward_rational(&parsed(&doubled), &mol, "BBBP", &table).unwrap();
        prop_assert!((dup - base).abs() < 1e-12);
    }

    #[test]
    fn covering_table_scores_promotes_fraction(
        claims in claims_strategy(),
        mol_ix in 0..SMILES.len(),
    ) {
        let mut table = RangeTable::default();
        for id in DescriptorId::all() {
            table.insert("ALL", id, IntervalSet(vec![Interval::everything()]));
        }
        let mol = parse_smiles(SMILES[mol_ix]).unwrap();
        let p = parsed(&claims);
        let got = reward_rational(&p, &mol, "ALL", &table).unwrap();

        // brute force: a claim is checkable when its name resolves to an implemented descriptor
        let mut verifiable = 0usize;
        let mut promotes = 0usize;
        for c in &claims {
            let ok = attrilens::descriptors::resolve_attribute(&c.raw_name)
                .is_some_and(|id| id.implemented());
            if ok {
                verifiable += 1;
                if c.polarity == Some(Polarity::Promotes) {
                    promotes += 1;
                }
            }
        }
        let want = if verifiable == 0 { 0.0 } else { promotes as f64 / verifiable as f64 };
        prop_assert_eq!(got, want);
        let checks = check_claims(&p, &mol, "ALL", &table).unwrap();
        prop_assert_eq!(checks.iter().filter(|c| c.status.verified()).count(), verifiable);
    }

    #[test]
    fn component_ranges(
        claims in claims_strategy(),
        mol_ix in 0..SMILES.len(),
        label in any::<bool>(),
        garble in any::<bool>(),
    ) {
        let table = RangeTable::bundled("gpt4o-default").unwrap();
        let mol = parse_smiles(SMILES[mol_ix]).unwrap();
        let mut text = render_response("r", &claims, Answer::Bool(true));
        if garble {
            text = text.replace("</name>", "");
        }
        let p = parse_response(&text, Task::Classification);
        let b = total_reward(&p, &mol, label, "BACE", &table, CountBounds::DEFAULT).unwrap();
        prop_assert!(b.format == 1.0 || b.format == -2.0);
        prop_assert!(b.correct == 2.0 || b.correct == 0.0);
        prop_assert!(b.count == 0.0 || b.count == -1.0);
        prop_assert!((0.0..=1.0).contains(&b.rational));
        prop_assert!((-3.0..=4.0).contains(&b.total));
        prop_assert_eq!(b.total, b.format + b.correct + b.count + b.rational);
        prop_assert!(b.verified <= b.matched && b.matched <= b.n_att);
    }
}
