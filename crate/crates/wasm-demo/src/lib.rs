//! Browser bindings. Every export takes plain values and returns a JSON
//! string, so the page needs no generated type definitions.

use attrilens::descriptors::{compute, DescriptorId};
use attrilens::grpo::Algorithm;
use attrilens::molgraph::{parse_smiles, scaffold_key};
use attrilens::policysim::{toy_dataset, train, TrainConfig, CURVE_HEADER};
use attrilens::response::{parse_response, Task};
use attrilens::rewards::{check_claims, total_reward, CountBounds, RangeTable};
use serde_json::{json, Map, Value};
use wasm_bindgen::prelude::*;

fn table(name: &str) -> Result<RangeTable, String> {
    RangeTable::bundled(name).ok_or_else(|| format!("unknown range table `{name}`"))
}

/// Implemented descriptors and the scaffold key of one molecule.
pub fn describe_json(smiles: &str) -> Result<String, String> {
    let mol = parse_smiles(smiles).map_err(|e| e.to_string())?;
    let mut values = Map::new();
    for id in DescriptorId::implemented_ids() {
        let v = compute(&mol, id).map_err(|e| e.to_string())?;
        values.insert(id.name().to_string(), json!(v.value));
    }
    Ok(json!({
        "smiles": smiles,
        "heavy_atoms": mol.heavy_atom_count(),
        "scaffold": scaffold_key(&mol),
        "descriptors": values,
    })
    .to_string())
}

/// Reward breakdown and per-claim verification for one response.
pub fn score_json(
    response: &str,
    smiles: &str,
    target: &str,
    label: bool,
    table_name: &str,
) -> Result<String, String> {
    let mol = parse_smiles(smiles).map_err(|e| e.to_string())?;
    let table = table(table_name)?;
    let parsed = parse_response(response, Task::Classification);
    let b = total_reward(&parsed, &mol, label, target, &table, CountBounds::DEFAULT)
        .map_err(|e| e.to_string())?;
    let checks = check_claims(&parsed, &mol, target, &table).map_err(|e| e.to_string())?;
    let claims: Vec<Value> = checks
        .iter()
        .map(|c| {
            json!({
                "name": c.raw_name,
                "polarity": c.polarity.map(|p| format!("{p:?}")),
                "descriptor": c.descriptor.map(|d| d.name()),
                "value": c.value,
                "in_range": c.in_range,
                "status": format!("{:?}", c.status),
            })
        })
        .collect();
    Ok(json!({ "breakdown": b, "format_ok": parsed.format_ok, "claims": claims }).to_string())
}

/// Per-step curves of a simulator run on the bundled toy dataset.
pub fn simulate_json(
    algorithm: &str,
    steps: usize,
    seed: u64,
    learning_rate: f64,
) -> Result<String, String> {
    let algorithm: Algorithm = algorithm.parse()?;
    let cfg = TrainConfig {
        algorithm,
        steps,
        seed,
        learning_rate,
        ..TrainConfig::default()
    };
    cfg.validate().map_err(|e| e.to_string())?;
    let table = table(&cfg.range_table)?;
    let out = train(&cfg, &toy_dataset(), &table).map_err(|e| e.to_string())?;
    let mut columns = Map::new();
    for name in &CURVE_HEADER[1..] {
        columns.insert(
            name.to_string(),
            json!(out.curves.column(name).unwrap_or_default()),
        );
    }
    Ok(
        json!({ "algorithm": format!("{algorithm:?}"), "steps": steps, "columns": columns })
            .to_string(),
    )
}

#[wasm_bindgen]
pub fn describe(smiles: &str) -> Result<String, JsError> {
    describe_json(smiles).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn score(
    response: &str,
    smiles: &str,
    target: &str,
    label: bool,
    table_name: &str,
) -> Result<String, JsError> {
    score_json(response, smiles, target, label, table_name).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn simulate(
    algorithm: &str,
    steps: usize,
    seed: u64,
    learning_rate: f64,
) -> Result<String, JsError> {
    simulate_json(algorithm, steps, seed, learning_rate).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn describe_water() {
        let v: Value = serde_json::from_str(&describe_json("O").unwrap()).unwrap();
        assert!((v["descriptors"]["MolWt"].as_f64().unwrap() - 18.015).abs() < 0.01);
        assert_eq!(v["scaffold"], "<empty>");
        assert!(describe_json("C1CC").is_err());
    }

    #[test]
    fn score_breakdown_adds_up() {
        let resp = "<think>small and lipophilic</think><name>TPSA: promotes, MolLogP: promotes, MolWt: promotes</name><answer>True</answer>";
        let v: Value = serde_json::from_str(
            &score_json(resp, "CCN(CC)CC", "BBBP", true, "gpt4o-default").unwrap(),
        )
        .unwrap();
        let b = &v["breakdown"];
        let sum: f64 = ["format", "correct", "count", "rational"]
            .iter()
            .map(|k| b[k].as_f64().unwrap())
            .sum();
        assert_eq!(b["total"].as_f64().unwrap(), sum);
        assert_eq!(v["claims"].as_array().unwrap().len(), 3);
        assert!(score_json(resp, "O", "BBBP", true, "missing").is_err());
    }

    #[test]
    fn simulate_has_one_value_per_step() {
        let v: Value = serde_json::from_str(&simulate_json("dapo", 30, 1, 0.5).unwrap()).unwrap();
        assert_eq!(v["columns"]["total"].as_array().unwrap().len(), 30);
        assert!(simulate_json("ppo", 30, 1, 0.5).is_err());
    }
}
