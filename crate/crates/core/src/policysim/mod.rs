//! Reward-curve simulator: a small categorical policy trained with GRPO or
//! DAPO against the real parser and reward stack.
//!
//! The policy is not a language model. It stands in for one so that the
//! learnability of each reward term, and the order in which the terms
//! converge, can be checked end to end on a desk-sized budget.

mod policy;

pub use policy::{
    add_log_prob_grad, enumerate_actions, log_prob, sample_action, Action, PolicyParams, Tag,
    BUCKETS, BUCKET_IN, BUCKET_OUT, BUCKET_UNKNOWN,
};

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::descriptors::{compute, DescriptorId};
use crate::grpo::{
    advantages_with, grpo_objective, objective_gradient, Algorithm, GrpoError, OptimConfig,
    ResponseRecord, TrajectoryGroup,
};
use crate::molgraph::{parse_smiles, Molecule};
use crate::response::{parse_response, ParsedResponse, PromptSpec, Task};
use crate::rewards::{total_reward, CountBounds, RangeTable, RewardBreakdown, RewardError};

const TOY_CSV: &str = include_str!("../../data/datasets/toy_sim.csv");

#[derive(Debug, Error)]
pub enum SimError {
    #[error("ConfigError: {0}")]
    Config(String),
    #[error(transparent)]
    Reward(#[from] RewardError),
    #[error(transparent)]
    Grpo(#[from] GrpoError),
    #[error("dataset: {0}")]
    Dataset(String),
    #[error("{path}: {msg}")]
    Io { path: String, msg: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub steps: usize,
    /// Responses per query; mirrored into `optim.group_size`.
    pub group_size: usize,
    pub queries_per_step: usize,
    pub temperature: f64,
    pub learning_rate: f64,
    pub seed: u64,
    pub algorithm: Algorithm,
    pub count_bounds: CountBounds,
    /// Largest attribute count the policy can emit.
    pub max_count: usize,
    /// DAPO only: fresh groups drawn for a query whose rewards do not vary.
    pub max_resample: usize,
    pub clip_eps: f64,
    pub clip_eps_low: f64,
    pub clip_eps_high: f64,
    pub kl_beta: f64,
    /// Bundled table name or a path.
    pub range_table: String,
    /// CSV path; `None` selects the bundled toy dataset.
    pub dataset: Option<String>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let o = OptimConfig::grpo();
        TrainConfig {
            steps: 1000,
            group_size: 8,
            queries_per_step: 8,
            temperature: 0.6,
            learning_rate: 0.5,
            seed: 7,
            algorithm: Algorithm::Grpo,
            count_bounds: CountBounds::DEFAULT,
            max_count: 12,
            max_resample: 2,
            clip_eps: o.clip_eps,
            clip_eps_low: o.clip_eps_low,
            clip_eps_high: o.clip_eps_high,
            kl_beta: o.kl_beta,
            range_table: "gpt4o-default".into(),
            dataset: None,
        }
    }
}

impl TrainConfig {
    pub fn optim(&self) -> OptimConfig {
        OptimConfig {
            algorithm: self.algorithm,
            group_size: self.group_size,
            clip_eps: self.clip_eps,
            clip_eps_low: self.clip_eps_low,
            clip_eps_high: self.clip_eps_high,
            kl_beta: self.kl_beta,
            ..OptimConfig::grpo()
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::Config(m.into()));
        if self.steps == 0 {
            return bad("steps must be at least 1");
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return bad("temperature must be positive");
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be finite and non-negative");
        }
        if self.queries_per_step == 0 {
            return bad("queries_per_step must be at least 1");
        }
        if self.max_count == 0 {
            return bad("max_count must be at least 1");
        }
        if self.count_bounds.lo > self.count_bounds.hi {
            return bad("count bounds need lo <= hi");
        }
        self.optim()
            .validate()
            .map_err(|e| SimError::Config(e.to_string()))
    }
}

/// One query of the simulator dataset.
#[derive(Debug, Clone)]
pub struct SimQuery {
    pub prompt: PromptSpec,
    pub label: bool,
    pub mol: Molecule,
}

#[derive(Debug, Deserialize)]
struct SimRow {
    smiles: String,
    target: String,
    label: String,
}

fn parse_label(s: &str) -> Option<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "1" | "true" => Some(true),
        "0" | "false" => Some(false),
        _ => None,
    }
}

/// Reads `smiles,target,label` rows.
pub fn load_sim_dataset(text: &str) -> Result<Vec<SimQuery>, SimError> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (k, row) in rdr.deserialize::<SimRow>().enumerate() {
        let row = row.map_err(|e| SimError::Dataset(format!("row {}: {e}", k + 1)))?;
        let mol = parse_smiles(&row.smiles)
            .map_err(|e| SimError::Dataset(format!("row {}: {e}", k + 1)))?;
        let label = parse_label(&row.label).ok_or_else(|| {
            SimError::Dataset(format!("row {}: bad label `{}`", k + 1, row.label))
        })?;
        out.push(SimQuery {
            prompt: PromptSpec {
                task: Task::Classification,
                smiles: row.smiles,
                target_property: row.target,
            },
            label,
            mol,
        });
    }
    if out.is_empty() {
        return Err(SimError::Dataset("EmptyDataset".into()));
    }
    Ok(out)
}

/// The bundled toy dataset.
pub fn toy_dataset() -> Vec<SimQuery> {
    load_sim_dataset(TOY_CSV).expect("bundled toy dataset parses")
}

/// Attribute vocabulary: the implemented descriptors in registry order.
pub fn vocabulary() -> Vec<DescriptorId> {
    DescriptorId::implemented_ids().collect()
}

/// Range bucket of every vocabulary entry for one query.
pub fn buckets_for(query: &SimQuery, vocab: &[DescriptorId], table: &RangeTable) -> Vec<u8> {
    vocab
        .iter()
        .map(|&id| {
            let value = compute(&query.mol, id)
                .expect("vocabulary is implemented")
                .value;
            match table.get(&query.prompt.target_property, id) {
                Some(set) if set.contains(value) => BUCKET_IN,
                Some(_) => BUCKET_OUT,
                None => BUCKET_UNKNOWN,
            }
        })
        .collect()
}

/// Per-step means of the reward terms and of the surrogate objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub step: usize,
    pub format: f64,
    pub correct: f64,
    pub count: f64,
    pub rational: f64,
    pub total: f64,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainingCurves {
    pub rows: Vec<CurveRow>,
}

impl TrainingCurves {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let f: fn(&CurveRow) -> f64 = match name {
            "format" => |r| r.format,
            "correct" => |r| r.correct,
            "count" => |r| r.count,
            "rational" => |r| r.rational,
            "total" => |r| r.total,
            "objective" => |r| r.objective,
            _ => return None,
        };
        Some(self.rows.iter().map(f).collect())
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub curves: TrainingCurves,
    pub params: PolicyParams,
}

fn mix(mut x: u64) -> u64 {
    // splitmix64 finaliser
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// RNG stream for one group; independent of thread scheduling.
pub fn group_rng(seed: u64, step: usize, query: usize, attempt: usize) -> ChaCha8Rng {
    let s = mix(mix(mix(seed) ^ step as u64) ^ query as u64) ^ mix(attempt as u64);
    ChaCha8Rng::seed_from_u64(s)
}

/// Samples, renders and parses one response; returns its log-probability.
pub fn sample_response(
    params: &PolicyParams,
    temperature: f64,
    q: usize,
    buckets: &[u8],
    vocab: &[DescriptorId],
    rng: &mut ChaCha8Rng,
) -> (Action, String, f64) {
    let action = sample_action(params, temperature, q, buckets, rng);
    let text = action.render(vocab);
    let lp = log_prob(params, temperature, q, buckets, &action);
    (action, text, lp)
}

struct GroupSample {
    actions: Vec<Action>,
    texts: Vec<String>,
    rewards: Vec<f64>,
}

/// Trains with the real reward stack.
pub fn train(
    cfg: &TrainConfig,
    dataset: &[SimQuery],
    table: &RangeTable,
) -> Result<TrainOutcome, SimError> {
    for q in dataset {
        if !table.has_target(&q.prompt.target_property) {
            return Err(RewardError::TableMissing(q.prompt.target_property.clone()).into());
        }
    }
    let bounds = cfg.count_bounds;
    train_with(cfg, dataset, table, |parsed, query| {
        total_reward(
            parsed,
            &query.mol,
            query.label,
            &query.prompt.target_property,
            table,
            bounds,
        )
        .expect("targets checked before training")
    })
}

/// Trains with an arbitrary reward function. `table` only supplies the
/// range buckets the policy conditions its polarities on.
pub fn train_with<F>(
    cfg: &TrainConfig,
    dataset: &[SimQuery],
    table: &RangeTable,
    reward: F,
) -> Result<TrainOutcome, SimError>
where
    F: Fn(&ParsedResponse, &SimQuery) -> RewardBreakdown + Sync,
{
    cfg.validate()?;
    if dataset.is_empty() {
        return Err(SimError::Dataset("EmptyDataset".into()));
    }
    let optim = cfg.optim();
    let vocab = vocabulary();
    let buckets: Vec<Vec<u8>> = dataset
        .iter()
        .map(|q| buckets_for(q, &vocab, table))
        .collect();
    let t = cfg.temperature;
    let g = cfg.group_size;

    let mut params = PolicyParams::uniform(vocab.len(), cfg.max_count, dataset.len());
    let reference = params.clone();
    let mut rows = Vec::with_capacity(cfg.steps);

    for step in 0..cfg.steps {
        let batch: Vec<usize> = (0..cfg.queries_per_step)
            .map(|k| (step * cfg.queries_per_step + k) % dataset.len())
            .collect();

        let sampled: Vec<(Vec<RewardBreakdown>, Option<GroupSample>)> = batch
            .par_iter()
            .enumerate()
            .map(|(pos, &q)| {
                let attempts = match cfg.algorithm {
                    Algorithm::Grpo => 1,
                    Algorithm::Dapo => 1 + cfg.max_resample,
                };
                let mut first = Vec::new();
                for attempt in 0..attempts {
                    let mut rng = group_rng(cfg.seed, step, pos, attempt);
                    let mut s = GroupSample {
                        actions: Vec::with_capacity(g),
                        texts: Vec::with_capacity(g),
                        rewards: Vec::with_capacity(g),
                    };
                    let mut breakdowns = Vec::with_capacity(g);
                    for _ in 0..g {
                        let (action, text, _) =
                            sample_response(&params, t, q, &buckets[q], &vocab, &mut rng);
                        let parsed = parse_response(&text, Task::Classification);
                        let b = reward(&parsed, &dataset[q]);
                        s.rewards.push(b.total);
                        s.actions.push(action);
                        s.texts.push(text);
                        breakdowns.push(b);
                    }
                    if attempt == 0 {
                        first = breakdowns;
                    }
                    let varied = advantages_with(&s.rewards, optim.degenerate_eps, optim.std_kind)
                        .map(|a| a.iter().any(|&x| x != 0.0))
                        .unwrap_or(false);
                    if cfg.algorithm == Algorithm::Grpo || varied {
                        return (first, Some(s));
                    }
                }
                (first, None)
            })
            .collect();

        let n = (batch.len() * g) as f64;
        let mean = |f: fn(&RewardBreakdown) -> f64| {
            sampled
                .iter()
                .flat_map(|(b, _)| b.iter())
                .map(f)
                .sum::<f64>()
                / n
        };
        let mut row = CurveRow {
            step,
            format: mean(|b| b.format),
            correct: mean(|b| b.correct),
            count: mean(|b| b.count),
            rational: mean(|b| b.rational),
            total: mean(|b| b.total),
            objective: 0.0,
        };

        let mut grad = params.zeros_like();
        let mut kept = 0usize;
        let mut objective = 0.0;
        for (&q, (_, group)) in batch.iter().zip(&sampled) {
            let Some(s) = group else { continue };
            let logp_old: Vec<f64> = s
                .actions
                .iter()
                .map(|a| log_prob(&params, t, q, &buckets[q], a))
                .collect();
            let responses = s
                .actions
                .iter()
                .zip(&s.texts)
                .zip(&s.rewards)
                .zip(&logp_old)
                .map(|(((a, text), &r), &lp)| ResponseRecord {
                    text: text.clone(),
                    reward_total: r,
                    logp_old: lp,
                    logp_ref: log_prob(&reference, t, q, &buckets[q], a),
                })
                .collect();
            let mut tg = TrajectoryGroup::new(format!("{q}"), responses);
            tg.fill_advantages(&optim)?;
            objective += grpo_objective(&tg, &logp_old, &optim)?;
            let coeffs = objective_gradient(&tg, &logp_old, &optim)?;
            for (a, c) in s.actions.iter().zip(coeffs) {
                if c != 0.0 {
                    add_log_prob_grad(&params, t, q, &buckets[q], a, c, &mut grad);
                }
            }
            kept += 1;
        }
        if kept > 0 {
            row.objective = objective / kept as f64;
            params.add_scaled(&grad, cfg.learning_rate / kept as f64);
        }
        if !params.is_finite() {
            return Err(SimError::Config(format!(
                "parameters diverged at step {step}; lower the learning rate"
            )));
        }
        rows.push(row);
    }
    Ok(TrainOutcome {
        curves: TrainingCurves { rows },
        params,
    })
}

pub const CURVE_HEADER: [&str; 7] = [
    "step",
    "format",
    "correct",
    "count",
    "rational",
    "total",
    "objective",
];

/// Writes the curves as CSV with a header row.
pub fn export_curves(curves: &TrainingCurves, path: &Path) -> Result<(), SimError> {
    let io = |e: &dyn std::fmt::Display| SimError::Io {
        path: path.display().to_string(),
        msg: e.to_string(),
    };
    let mut w = csv::Writer::from_path(path).map_err(|e| io(&e))?;
    write_curves(curves, &mut w).map_err(|e| io(&e))?;
    w.flush().map_err(|e| io(&e))
}

pub fn write_curves<W: std::io::Write>(
    curves: &TrainingCurves,
    w: &mut csv::Writer<W>,
) -> csv::Result<()> {
    w.write_record(CURVE_HEADER)?;
    for r in &curves.rows {
        w.write_record([
            r.step.to_string(),
            r.format.to_string(),
            r.correct.to_string(),
            r.count.to_string(),
            r.rational.to_string(),
            r.total.to_string(),
            r.objective.to_string(),
        ])?;
    }
    Ok(())
}

/// Reads curves written by [`export_curves`].
pub fn read_curves(path: &Path) -> Result<TrainingCurves, SimError> {
    let io = |e: &dyn std::fmt::Display| SimError::Io {
        path: path.display().to_string(),
        msg: e.to_string(),
    };
    let mut rdr = csv::Reader::from_path(path).map_err(|e| io(&e))?;
    let header = rdr.headers().map_err(|e| io(&e))?.clone();
    if header.iter().collect::<Vec<_>>() != CURVE_HEADER {
        return Err(io(&"unexpected header"));
    }
    let rows = rdr
        .deserialize::<CurveRow>()
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| io(&e))?;
    Ok(TrainingCurves { rows })
}

/// First step at which the trailing `window`-step mean of `xs` reaches
/// `initial + 0.95 * (final - initial)`, where `initial` and `final` are the
/// means of the first and last `window` values. Measuring progress from the
/// starting level keeps the rule meaningful for terms whose final value is 0.
pub fn settle_step(xs: &[f64], window: usize) -> Option<usize> {
    if xs.len() < 2 * window || window == 0 {
        return None;
    }
    let avg = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    let initial = avg(&xs[..window]);
    let last = avg(&xs[xs.len() - window..]);
    let threshold = initial + 0.95 * (last - initial);
    let up = last >= initial;
    // ma[k] covers xs[k..k + window] and is reported at step k + window - 1
    moving_average(xs, window)
        .iter()
        .position(|&m| if up { m >= threshold } else { m <= threshold })
        .map(|k| k + window - 1)
}

/// Trailing means over full windows.
pub fn moving_average(xs: &[f64], window: usize) -> Vec<f64> {
    if window == 0 || xs.len() < window {
        return Vec::new();
    }
    xs.windows(window)
        .map(|w| w.iter().sum::<f64>() / window as f64)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg() -> TrainConfig {
        TrainConfig {
            steps: 30,
            queries_per_step: 4,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn toy_dataset_loads() {
        let d = toy_dataset();
        assert!(d.len() >= 8);
        let table = RangeTable::bundled("gpt4o-default").unwrap();
        for q in &d {
            assert!(table.has_target(&q.prompt.target_property));
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let table = RangeTable::bundled("gpt4o-default").unwrap();
        let d = toy_dataset();
        let a = train(&small_cfg(), &d, &table).unwrap();
        let b = train(&small_cfg(), &d, &table).unwrap();
        assert_eq!(a.curves, b.curves);
        assert_eq!(a.params, b.params);
        let other = TrainConfig {
            seed: 99,
            ..small_cfg()
        };
        assert_ne!(train(&other, &d, &table).unwrap().curves, a.curves);
    }

    #[test]
    fn zero_learning_rate_keeps_parameters() {
        let table = RangeTable::bundled("gpt4o-default").unwrap();
        let d = toy_dataset();
        let cfg = TrainConfig {
            learning_rate: 0.0,
            ..small_cfg()
        };
        let out = train(&cfg, &d, &table).unwrap();
        let vocab = vocabulary().len();
        assert_eq!(
            out.params,
            PolicyParams::uniform(vocab, cfg.max_count, d.len())
        );
    }

    #[test]
    fn constant_reward_keeps_parameters() {
        let table = RangeTable::bundled("gpt4o-default").unwrap();
        let d = toy_dataset();
        for algorithm in [Algorithm::Grpo, Algorithm::Dapo] {
            let cfg = TrainConfig {
                algorithm,
                ..small_cfg()
            };
            let flat = RewardBreakdown {
                format: 1.0,
                correct: 2.0,
                count: 0.0,
                rational: 0.5,
                total: 3.5,
                n_att: 0,
                matched: 0,
                verified: 0,
            };
            let out = train_with(&cfg, &d, &table, |_, _| flat).unwrap();
            let vocab = vocabulary().len();
            assert_eq!(
                out.params,
                PolicyParams::uniform(vocab, cfg.max_count, d.len())
            );
        }
    }

    #[test]
    fn config_validation() {
        let bad = [
            TrainConfig {
                steps: 0,
                ..TrainConfig::default()
            },
            TrainConfig {
                temperature: 0.0,
                ..TrainConfig::default()
            },
            TrainConfig {
                learning_rate: -1.0,
                ..TrainConfig::default()
            },
            TrainConfig {
                group_size: 1,
                ..TrainConfig::default()
            },
            TrainConfig {
                clip_eps: 1.5,
                ..TrainConfig::default()
            },
        ];
        for c in bad {
            assert!(matches!(c.validate(), Err(SimError::Config(_))), "{c:?}");
        }
        assert!(TrainConfig::default().validate().is_ok());
    }

    #[test]
    fn missing_target_is_reported() {
        let d = toy_dataset();
        let table = RangeTable::parse("X\tTPSA\t[0,1]").unwrap();
        assert!(matches!(
            train(&small_cfg(), &d, &table),
            Err(SimError::Reward(RewardError::TableMissing(_)))
        ));
    }

    #[test]
    fn curve_helpers() {
        assert_eq!(
            moving_average(&[1.0, 2.0, 3.0, 4.0], 2),
            vec![1.5, 2.5, 3.5]
        );
        let xs: Vec<f64> = (0..50).map(|i| if i < 20 { 0.0 } else { 1.0 }).collect();
        assert_eq!(settle_step(&xs, 5), Some(24));
        assert_eq!(settle_step(&xs[..5], 5), None);
    }

    #[test]
    fn csv_round_trip() {
        let table = RangeTable::bundled("gpt4o-default").unwrap();
        let out = train(
            &TrainConfig {
                steps: 5,
                ..small_cfg()
            },
            &toy_dataset(),
            &table,
        )
        .unwrap();
        let dir = std::env::temp_dir().join(format!("attrilens-curves-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("curves.csv");
        export_curves(&out.curves, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 6);
        assert!(text.starts_with("step,format,correct,count,rational,total,objective\n"));
        assert_eq!(read_curves(&path).unwrap(), out.curves);
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
