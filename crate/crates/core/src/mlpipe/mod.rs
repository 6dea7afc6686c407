//! Dataset ingestion, scaffold splits, descriptor features, random forests
//! and evaluation metrics.

mod forest;

pub use forest::{train_forest, ForestConfig, ForestModel, Node, Tree, FOREST_FORMAT};

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::descriptors::{compute_features, resolve_attribute, DescriptorId};
use crate::molgraph::{parse_smiles, scaffold_key, Molecule};
use crate::response::{Answer, ParsedResponse, Task};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MlError {
    #[error("MissingColumn: `{0}`")]
    MissingColumn(String),
    #[error("EmptyDataset")]
    EmptyDataset,
    #[error("DegenerateLabels: both classes are required")]
    DegenerateLabels,
    #[error("LengthMismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("line {line}: bad label `{value}`")]
    BadLabel { line: usize, value: String },
    #[error("line {line}: {msg}")]
    Csv { line: usize, msg: String },
    #[error("{path}: {msg}")]
    Io { path: String, msg: String },
    #[error("split fractions must be non-negative and sum to 1")]
    BadFractions,
    #[error("feature `{0}` cannot be computed")]
    Feature(String),
    #[error("model file: {0}")]
    ModelFormat(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub smiles: String,
    pub label: Answer,
    pub task: Task,
    pub dataset_name: String,
}

impl DatasetRecord {
    /// Class label; `None` for regression records.
    pub fn class(&self) -> Option<bool> {
        match self.label {
            Answer::Bool(b) => Some(b),
            Answer::Number(_) => None,
        }
    }
}

/// Which columns to read and how to interpret the label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schema {
    pub smiles_column: String,
    pub label_column: String,
    pub task: Task,
    pub dataset_name: String,
}

impl Schema {
    pub fn classification(dataset: &str, smiles: &str, label: &str) -> Self {
        Schema {
            smiles_column: smiles.into(),
            label_column: label.into(),
            task: Task::Classification,
            dataset_name: dataset.into(),
        }
    }
}

/// Parsed rows plus the rows dropped for unparseable SMILES.
#[derive(Debug, Clone)]
pub struct LoadedDataset {
    pub records: Vec<DatasetRecord>,
    pub molecules: Vec<Molecule>,
    /// `(line, smiles)` of every skipped row; line 1 is the header.
    pub skipped: Vec<(usize, String)>,
}

fn parse_label(raw: &str, task: Task, line: usize) -> Result<Answer, MlError> {
    let bad = || MlError::BadLabel {
        line,
        value: raw.to_string(),
    };
    let v = raw.trim();
    match task {
        Task::Classification => match v.to_ascii_lowercase().as_str() {
            "1" | "true" | "1.0" => Ok(Answer::Bool(true)),
            "0" | "false" | "0.0" => Ok(Answer::Bool(false)),
            _ => Err(bad()),
        },
        Task::Regression => match v.parse::<f64>() {
            Ok(x) if x.is_finite() => Ok(Answer::Number(x)),
            _ => Err(bad()),
        },
    }
}

pub fn load_csv(path: &Path, schema: &Schema) -> Result<LoadedDataset, MlError> {
    let file = std::fs::File::open(path).map_err(|e| MlError::Io {
        path: path.display().to_string(),
        msg: e.to_string(),
    })?;
    load_csv_from(file, schema)
}

/// Reads a CSV with a header row. Rows whose SMILES do not parse are skipped
/// and reported; a bad label is an error.
pub fn load_csv_from<R: Read>(input: R, schema: &Schema) -> Result<LoadedDataset, MlError> {
    let mut rdr = csv::ReaderBuilder::new().flexible(false).from_reader(input);
    let header = rdr
        .headers()
        .map_err(|e| MlError::Csv {
            line: 1,
            msg: e.to_string(),
        })?
        .clone();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| MlError::MissingColumn(name.to_string()))
    };
    let si = col(&schema.smiles_column)?;
    let li = col(&schema.label_column)?;
    let mut out = LoadedDataset {
        records: Vec::new(),
        molecules: Vec::new(),
        skipped: Vec::new(),
    };
    for (k, row) in rdr.records().enumerate() {
        let line = k + 2;
        let row = row.map_err(|e| MlError::Csv {
            line,
            msg: e.to_string(),
        })?;
        let smiles = row.get(si).unwrap_or("").trim().to_string();
        let label = parse_label(row.get(li).unwrap_or(""), schema.task, line)?;
        match parse_smiles(&smiles) {
            Ok(mol) => {
                out.records.push(DatasetRecord {
                    smiles,
                    label,
                    task: schema.task,
                    dataset_name: schema.dataset_name.clone(),
                });
                out.molecules.push(mol);
            }
            Err(_) => out.skipped.push((line, smiles)),
        }
    }
    if out.records.is_empty() {
        return Err(MlError::EmptyDataset);
    }
    Ok(out)
}

/// Record indices of each split.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub valid: Vec<usize>,
    pub test: Vec<usize>,
}

impl SplitIndices {
    pub fn sizes(&self) -> (usize, usize, usize) {
        (self.train.len(), self.valid.len(), self.test.len())
    }
}

/// Scaffold groups as `(key, member indices)`, largest first, ties by key.
pub fn scaffold_groups(molecules: &[Molecule]) -> Vec<(String, Vec<usize>)> {
    let mut groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, m) in molecules.iter().enumerate() {
        groups.entry(scaffold_key(m)).or_default().push(i);
    }
    let mut groups: Vec<(String, Vec<usize>)> = groups.into_iter().collect();
    // stable sort keeps the key order from the map for equal sizes
    groups.sort_by_key(|g| std::cmp::Reverse(g.1.len()));
    groups
}

/// Greedy scaffold split: whole groups, largest first, fill train until it
/// holds at least `fractions.0 * n` records, then valid until it holds
/// `fractions.1 * n`, and the rest go to test.
pub fn scaffold_split(
    molecules: &[Molecule],
    fractions: (f64, f64, f64),
) -> Result<SplitIndices, MlError> {
    let (a, b, c) = fractions;
    if [a, b, c].iter().any(|f| !(0.0..=1.0).contains(f)) || (a + b + c - 1.0).abs() > 1e-9 {
        return Err(MlError::BadFractions);
    }
    if molecules.is_empty() {
        return Err(MlError::EmptyDataset);
    }
    let n = molecules.len() as f64;
    let mut split = SplitIndices {
        train: Vec::new(),
        valid: Vec::new(),
        test: Vec::new(),
    };
    for (_, members) in scaffold_groups(molecules) {
        let dest = if (split.train.len() as f64) < a * n {
            &mut split.train
        } else if (split.valid.len() as f64) < b * n {
            &mut split.valid
        } else {
            &mut split.test
        };
        dest.extend(members);
    }
    for part in [&mut split.train, &mut split.valid, &mut split.test] {
        part.sort_unstable();
    }
    Ok(split)
}

/// Feature matrix (rows in record order) and class labels.
pub fn featurize(
    molecules: &[Molecule],
    records: &[DatasetRecord],
    ids: &[DescriptorId],
) -> Result<(Vec<Vec<f64>>, Vec<bool>), MlError> {
    if molecules.len() != records.len() {
        return Err(MlError::LengthMismatch {
            left: molecules.len(),
            right: records.len(),
        });
    }
    let x = molecules
        .iter()
        .map(|m| compute_features(m, ids).map_err(|e| MlError::Feature(e.to_string())))
        .collect::<Result<Vec<_>, _>>()?;
    let y = records
        .iter()
        .map(|r| r.class().ok_or(MlError::DegenerateLabels))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((x, y))
}

/// Rows `ix` of a feature matrix and their labels.
pub fn select_rows(x: &[Vec<f64>], y: &[bool], ix: &[usize]) -> (Vec<Vec<f64>>, Vec<bool>) {
    (
        ix.iter().map(|&i| x[i].clone()).collect(),
        ix.iter().map(|&i| y[i]).collect(),
    )
}

/// Rank-based AUC (Mann–Whitney U) of `scores` for the positive class.
/// Tied scores share their average rank.
pub fn auc_roc(scores: &[f64], labels: &[bool]) -> Result<f64, MlError> {
    if scores.len() != labels.len() {
        return Err(MlError::LengthMismatch {
            left: scores.len(),
            right: labels.len(),
        });
    }
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(MlError::DegenerateLabels);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&i, &j| scores[i].total_cmp(&scores[j]));
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // ranks are 1-based; the tie block i..=j shares their mean
        let avg = (i + j) as f64 / 2.0 + 1.0;
        rank_sum_pos += avg * order[i..=j].iter().filter(|&&k| labels[k]).count() as f64;
        i = j + 1;
    }
    let u = rank_sum_pos - (pos * (pos + 1)) as f64 / 2.0;
    Ok(u / (pos * neg) as f64)
}

/// AUC of a trained forest on a feature matrix.
pub fn eval_auc(model: &ForestModel, x: &[Vec<f64>], y: &[bool]) -> Result<f64, MlError> {
    auc_roc(&model.predict_proba(x), y)
}

/// Mean held-out AUC over stratification-free `folds`-fold cross-validation.
/// Folds whose test part holds a single class are skipped.
pub fn cross_val_auc(
    x: &[Vec<f64>],
    y: &[bool],
    cfg: &ForestConfig,
    folds: usize,
    seed: u64,
) -> Result<f64, MlError> {
    if x.len() != y.len() {
        return Err(MlError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut aucs = Vec::new();
    for f in 0..folds.max(2) {
        let (test, train): (Vec<usize>, Vec<usize>) =
            idx.iter().partition(|&&i| i % folds.max(2) == f);
        let (xtr, ytr) = select_rows(x, y, &train);
        let (xte, yte) = select_rows(x, y, &test);
        let model = match train_forest(&xtr, &ytr, &[], cfg) {
            Ok(m) => m,
            Err(MlError::DegenerateLabels) => continue,
            Err(e) => return Err(e),
        };
        match auc_roc(&model.predict_proba(&xte), &yte) {
            Ok(a) => aucs.push(a),
            Err(MlError::DegenerateLabels) => continue,
            Err(e) => return Err(e),
        }
    }
    if aucs.is_empty() {
        return Err(MlError::DegenerateLabels);
    }
    Ok(aucs.iter().sum::<f64>() / aucs.len() as f64)
}

/// Permutation-null control: the forest is trained on shuffled training
/// labels and scored on the untouched held-out rows. Returns the AUC of each
/// of the `repeats` shuffles.
pub fn permutation_null_auc(
    train: (&[Vec<f64>], &[bool]),
    test: (&[Vec<f64>], &[bool]),
    cfg: &ForestConfig,
    repeats: usize,
    seed: u64,
) -> Result<Vec<f64>, MlError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(repeats);
    for r in 0..repeats {
        let mut shuffled = train.1.to_vec();
        shuffled.shuffle(&mut rng);
        let cfg = ForestConfig {
            seed: cfg.seed.wrapping_add(r as u64),
            ..*cfg
        };
        let model = train_forest(train.0, &shuffled, &[], &cfg)?;
        out.push(eval_auc(&model, test.0, test.1)?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub n: usize,
    /// Percentage; absent answers count as wrong. Classification only.
    pub accuracy: Option<f64>,
    /// Over records with a numeric answer. Regression only.
    pub rmse: Option<f64>,
    /// Fraction of records with a usable answer.
    pub coverage: f64,
}

pub fn eval_predictions(
    answers: &[Option<Answer>],
    labels: &[Answer],
    task: Task,
) -> Result<Metrics, MlError> {
    if answers.len() != labels.len() {
        return Err(MlError::LengthMismatch {
            left: answers.len(),
            right: labels.len(),
        });
    }
    let n = labels.len();
    if n == 0 {
        return Err(MlError::EmptyDataset);
    }
    match task {
        Task::Classification => {
            let mut correct = 0usize;
            let mut answered = 0usize;
            for (a, l) in answers.iter().zip(labels) {
                if let (Some(Answer::Bool(a)), Answer::Bool(l)) = (a, l) {
                    answered += 1;
                    if a == l {
                        correct += 1;
                    }
                }
            }
            Ok(Metrics {
                n,
                accuracy: Some(100.0 * correct as f64 / n as f64),
                rmse: None,
                coverage: answered as f64 / n as f64,
            })
        }
        Task::Regression => {
            let pairs: Vec<(f64, f64)> = answers
                .iter()
                .zip(labels)
                .filter_map(|(a, l)| match (a, l) {
                    (Some(Answer::Number(a)), Answer::Number(l)) => Some((*a, *l)),
                    _ => None,
                })
                .collect();
            let rmse = (!pairs.is_empty()).then(|| {
                (pairs.iter().map(|(a, l)| (a - l) * (a - l)).sum::<f64>() / pairs.len() as f64)
                    .sqrt()
            });
            Ok(Metrics {
                n,
                accuracy: None,
                rmse,
                coverage: pairs.len() as f64 / n as f64,
            })
        }
    }
}

/// Most frequently claimed implemented descriptors, by (count desc,
/// canonical name asc).
pub fn top_attributes(corpus: &[ParsedResponse], k: usize) -> Vec<DescriptorId> {
    let mut counts: BTreeMap<DescriptorId, usize> = BTreeMap::new();
    for parsed in corpus {
        for claim in parsed.claims.iter().flatten() {
            if let Some(id) = resolve_attribute(&claim.raw_name).filter(|id| id.implemented()) {
                *counts.entry(id).or_default() += 1;
            }
        }
    }
    let mut ranked: Vec<(DescriptorId, usize)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.name().cmp(b.0.name())));
    ranked.into_iter().take(k).map(|(id, _)| id).collect()
}

/// `top_attributes` padded to `k` with the remaining implemented
/// descriptors in registry order, for corpora that name fewer than `k`.
pub fn feature_set(corpus: &[ParsedResponse], k: usize) -> Vec<DescriptorId> {
    let mut ids = top_attributes(corpus, k);
    for id in DescriptorId::implemented_ids() {
        if ids.len() >= k {
            break;
        }
        if !ids.contains(&id) {
            ids.push(id);
        }
    }
    ids
}
