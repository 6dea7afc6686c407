//! Random forest of CART classification trees with Gini splits.

use std::fmt::Write as _;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::MlError;
use crate::descriptors::DescriptorId;

/// First line of the text dump.
pub const FOREST_FORMAT: &str = "attrilens-forest v1";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 200,
            max_depth: 8,
            min_samples_split: 2,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Node {
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    /// Fraction of positive training rows that reached the leaf.
    Leaf { p_positive: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    /// Node 0 is the root.
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut k = 0;
        loop {
            match self.nodes[k] {
                Node::Leaf { p_positive } => return p_positive,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    k = if row[feature] <= threshold {
                        left
                    } else {
                        right
                    }
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(t: &Tree, k: usize) -> usize {
            match t.nodes[k] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(t, left).max(go(t, right)),
            }
        }
        go(self, 0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    pub trees: Vec<Tree>,
    /// Column meaning; empty for anonymous feature matrices.
    pub feature_ids: Vec<DescriptorId>,
    pub n_features: usize,
    pub config: ForestConfig,
}

fn tree_seed(seed: u64, tree: usize) -> u64 {
    // splitmix64 step so neighbouring trees get unrelated streams
    let mut z = seed.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(tree as u64 + 1));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn gini(pos: usize, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let p = pos as f64 / n as f64;
    2.0 * p * (1.0 - p)
}

struct Builder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [bool],
    cfg: &'a ForestConfig,
    mtry: usize,
    nodes: Vec<Node>,
}

impl Builder<'_> {
    fn leaf(&mut self, rows: &[usize]) -> usize {
        let pos = rows.iter().filter(|&&r| self.y[r]).count();
        self.nodes.push(Node::Leaf {
            p_positive: pos as f64 / rows.len() as f64,
        });
        self.nodes.len() - 1
    }

    // Best (feature, threshold) among `candidates` by weighted Gini, or None
    // when no candidate separates the rows.
    fn best_split(&self, rows: &[usize], candidates: &[usize]) -> Option<(usize, f64)> {
        let n = rows.len();
        let total_pos = rows.iter().filter(|&&r| self.y[r]).count();
        let mut best: Option<(f64, usize, f64)> = None;
        let mut sorted: Vec<(f64, bool)> = Vec::with_capacity(n);
        for &f in candidates {
            sorted.clear();
            sorted.extend(rows.iter().map(|&r| (self.x[r][f], self.y[r])));
            sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut left_pos = 0;
            for i in 0..n - 1 {
                if sorted[i].1 {
                    left_pos += 1;
                }
                if sorted[i].0 == sorted[i + 1].0 {
                    continue;
                }
                let nl = i + 1;
                let nr = n - nl;
                let score = (nl as f64 * gini(left_pos, nl)
                    + nr as f64 * gini(total_pos - left_pos, nr))
                    / n as f64;
                if best.is_none_or(|(s, _, _)| score < s) {
                    let (lo, hi) = (sorted[i].0, sorted[i + 1].0);
                    // the midpoint of adjacent floats can round up to `hi`
                    let mid = lo + (hi - lo) / 2.0;
                    let thr = if mid < hi { mid } else { lo };
                    best = Some((score, f, thr));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }

    fn grow(&mut self, rows: Vec<usize>, depth: usize, rng: &mut ChaCha8Rng) -> usize {
        let pos = rows.iter().filter(|&&r| self.y[r]).count();
        if depth >= self.cfg.max_depth
            || rows.len() < self.cfg.min_samples_split.max(2)
            || pos == 0
            || pos == rows.len()
        {
            return self.leaf(&rows);
        }
        let d = self.x[0].len();
        let candidates = sample(rng, d, self.mtry).into_vec();
        let Some((feature, threshold)) = self.best_split(&rows, &candidates) else {
            return self.leaf(&rows);
        };
        let (l, r): (Vec<usize>, Vec<usize>) =
            rows.iter().partition(|&&i| self.x[i][feature] <= threshold);
        let at = self.nodes.len();
        self.nodes.push(Node::Leaf { p_positive: 0.0 });
        let left = self.grow(l, depth + 1, rng);
        let right = self.grow(r, depth + 1, rng);
        self.nodes[at] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        at
    }
}

/// Trains `cfg.n_trees` trees on bootstrap samples, each node choosing among
/// `floor(sqrt(d))` random features. Trees train in parallel; tree `t` uses
/// its own RNG stream derived from `(cfg.seed, t)`.
pub fn train_forest(
    x: &[Vec<f64>],
    y: &[bool],
    feature_ids: &[DescriptorId],
    cfg: &ForestConfig,
) -> Result<ForestModel, MlError> {
    if x.len() != y.len() {
        return Err(MlError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.is_empty() {
        return Err(MlError::EmptyDataset);
    }
    let d = x[0].len();
    if d == 0 || x.iter().any(|r| r.len() != d) {
        return Err(MlError::Feature("ragged or empty feature rows".into()));
    }
    if !feature_ids.is_empty() && feature_ids.len() != d {
        return Err(MlError::LengthMismatch {
            left: feature_ids.len(),
            right: d,
        });
    }
    if x.iter().flatten().any(|v| !v.is_finite()) {
        return Err(MlError::Feature("non-finite feature value".into()));
    }
    let pos = y.iter().filter(|&&b| b).count();
    if pos == 0 || pos == y.len() {
        return Err(MlError::DegenerateLabels);
    }
    let mtry = ((d as f64).sqrt().floor() as usize).max(1);
    let trees = (0..cfg.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(tree_seed(cfg.seed, t));
            let rows: Vec<usize> = (0..x.len()).map(|_| rng.gen_range(0..x.len())).collect();
            let mut b = Builder {
                x,
                y,
                cfg,
                mtry,
                nodes: Vec::new(),
            };
            b.grow(rows, 0, &mut rng);
            Tree { nodes: b.nodes }
        })
        .collect();
    Ok(ForestModel {
        trees,
        feature_ids: feature_ids.to_vec(),
        n_features: d,
        config: *cfg,
    })
}

impl ForestModel {
    /// Mean of the trees' leaf probabilities for each row.
    pub fn predict_proba(&self, x: &[Vec<f64>]) -> Vec<f64> {
        x.iter()
            .map(|row| {
                self.trees.iter().map(|t| t.predict(row)).sum::<f64>() / self.trees.len() as f64
            })
            .collect()
    }

    /// Versioned plain-text dump, one node per line.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{FOREST_FORMAT}");
        let names: Vec<&str> = self.feature_ids.iter().map(|d| d.name()).collect();
        let _ = writeln!(s, "features\t{}\t{}", self.n_features, names.join(","));
        let c = &self.config;
        let _ = writeln!(
            s,
            "meta\tseed={}\ttrees={}\tmax_depth={}\tmin_samples_split={}",
            c.seed, c.n_trees, c.max_depth, c.min_samples_split
        );
        for (i, t) in self.trees.iter().enumerate() {
            let _ = writeln!(s, "tree\t{i}\t{}", t.nodes.len());
            for node in &t.nodes {
                match *node {
                    Node::Split {
                        feature,
                        threshold,
                        left,
                        right,
                    } => {
                        let _ = writeln!(s, "S\t{feature}\t{threshold:?}\t{left}\t{right}");
                    }
                    Node::Leaf { p_positive } => {
                        let _ = writeln!(s, "L\t{p_positive:?}");
                    }
                }
            }
        }
        s
    }

    pub fn from_text(text: &str) -> Result<ForestModel, MlError> {
        let bad = |line: usize, what: &str| MlError::ModelFormat(format!("line {line}: {what}"));
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        match lines.next() {
            Some((_, l)) if l == FOREST_FORMAT => {}
            _ => return Err(bad(1, "unknown format header")),
        }
        let (ln, feat) = lines
            .next()
            .ok_or_else(|| bad(2, "missing features line"))?;
        let cols: Vec<&str> = feat.split('\t').collect();
        if cols.len() != 3 || cols[0] != "features" {
            return Err(bad(ln, "bad features line"));
        }
        let n_features: usize = cols[1].parse().map_err(|_| bad(ln, "bad feature count"))?;
        let feature_ids = if cols[2].is_empty() {
            Vec::new()
        } else {
            cols[2]
                .split(',')
                .map(|n| DescriptorId::from_name(n).ok_or_else(|| bad(ln, "unknown descriptor")))
                .collect::<Result<Vec<_>, _>>()?
        };
        let (ln, meta) = lines.next().ok_or_else(|| bad(3, "missing meta line"))?;
        let mut config = ForestConfig::default();
        for kv in meta.split('\t').skip(1) {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| bad(ln, "bad meta field"))?;
            let num = |v: &str| v.parse::<u64>().map_err(|_| bad(ln, "bad meta value"));
            match k {
                "seed" => config.seed = num(v)?,
                "trees" => config.n_trees = num(v)? as usize,
                "max_depth" => config.max_depth = num(v)? as usize,
                "min_samples_split" => config.min_samples_split = num(v)? as usize,
                _ => return Err(bad(ln, "unknown meta field")),
            }
        }
        let mut trees = Vec::new();
        while let Some((ln, head)) = lines.next() {
            let cols: Vec<&str> = head.split('\t').collect();
            if cols.len() != 3 || cols[0] != "tree" {
                return Err(bad(ln, "expected tree header"));
            }
            let count: usize = cols[2].parse().map_err(|_| bad(ln, "bad node count"))?;
            let mut nodes = Vec::with_capacity(count);
            for _ in 0..count {
                let (ln, l) = lines.next().ok_or_else(|| bad(ln, "truncated tree"))?;
                let c: Vec<&str> = l.split('\t').collect();
                let node = match c.as_slice() {
                    ["S", f, t, a, b] => Node::Split {
                        feature: f.parse().map_err(|_| bad(ln, "bad feature"))?,
                        threshold: t.parse().map_err(|_| bad(ln, "bad threshold"))?,
                        left: a.parse().map_err(|_| bad(ln, "bad child"))?,
                        right: b.parse().map_err(|_| bad(ln, "bad child"))?,
                    },
                    ["L", p] => Node::Leaf {
                        p_positive: p.parse().map_err(|_| bad(ln, "bad leaf"))?,
                    },
                    _ => return Err(bad(ln, "bad node")),
                };
                nodes.push(node);
            }
            trees.push(Tree { nodes });
        }
        let model = ForestModel {
            trees,
            feature_ids,
            n_features,
            config,
        };
        model.validate()?;
        Ok(model)
    }

    /// Structural checks: split features in range, children in bounds and
    /// after their parent, leaf probabilities in [0, 1].
    pub fn validate(&self) -> Result<(), MlError> {
        let err = |m: String| Err(MlError::ModelFormat(m));
        if !self.feature_ids.is_empty() && self.feature_ids.len() != self.n_features {
            return err("feature list length differs from feature count".into());
        }
        if self.trees.is_empty() {
            return err("no trees".into());
        }
        for (ti, t) in self.trees.iter().enumerate() {
            if t.nodes.is_empty() {
                return err(format!("tree {ti} is empty"));
            }
            for (k, node) in t.nodes.iter().enumerate() {
                match *node {
                    Node::Split {
                        feature,
                        threshold,
                        left,
                        right,
                    } => {
                        if feature >= self.n_features
                            || !threshold.is_finite()
                            || left <= k
                            || right <= k
                            || left >= t.nodes.len()
                            || right >= t.nodes.len()
                        {
                            return err(format!("tree {ti} node {k} is malformed"));
                        }
                    }
                    Node::Leaf { p_positive } => {
                        if !(0.0..=1.0).contains(&p_positive) {
                            return err(format!("tree {ti} node {k} has a bad probability"));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mlpipe::auc_roc;

    fn toy(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<bool>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let y = x.iter().map(|r| r[0] + 0.5 * r[1] > 0.0).collect();
        (x, y)
    }

    #[test]
    fn separable_single_feature() {
        let x: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64]).collect();
        let y: Vec<bool> = (0..40).map(|i| i >= 17).collect();
        let cfg = ForestConfig {
            n_trees: 25,
            ..Default::default()
        };
        let m = train_forest(&x, &y, &[], &cfg).unwrap();
        assert_eq!(auc_roc(&m.predict_proba(&x), &y).unwrap(), 1.0);
    }

    #[test]
    fn deterministic_and_bounded() {
        let (x, y) = toy(200, 1);
        let cfg = ForestConfig {
            n_trees: 30,
            seed: 9,
            ..Default::default()
        };
        let a = train_forest(&x, &y, &[], &cfg).unwrap();
        let b = train_forest(&x, &y, &[], &cfg).unwrap();
        assert_eq!(a, b);
        let p = a.predict_proba(&x);
        assert!(p.iter().all(|v| (0.0..=1.0).contains(v)));
        for (row, pr) in x.iter().zip(&p) {
            let mean = a.trees.iter().map(|t| t.predict(row)).sum::<f64>() / a.trees.len() as f64;
            assert_eq!(*pr, mean);
        }
        assert!(a.trees.iter().all(|t| t.depth() <= cfg.max_depth));
        a.validate().unwrap();
    }

    #[test]
    fn text_round_trip() {
        let (x, y) = toy(120, 2);
        let ids: Vec<DescriptorId> = DescriptorId::implemented_ids().take(4).collect();
        let cfg = ForestConfig {
            n_trees: 10,
            seed: 4,
            ..Default::default()
        };
        let m = train_forest(&x, &y, &ids, &cfg).unwrap();
        let text = m.to_text();
        assert!(text.starts_with(FOREST_FORMAT));
        let back = ForestModel::from_text(&text).unwrap();
        assert_eq!(back, m);
        assert!(ForestModel::from_text("nope").is_err());
        let broken = text.replacen("S\t", "S\t99", 1);
        assert!(ForestModel::from_text(&broken).is_err());
    }

    #[test]
    fn adjacent_floats_split_cleanly() {
        let a = 0.1f64;
        let b = f64::from_bits(a.to_bits() + 1);
        let x = vec![vec![a], vec![b], vec![a], vec![b]];
        let y = vec![false, true, false, true];
        let cfg = ForestConfig {
            n_trees: 8,
            ..Default::default()
        };
        let m = train_forest(&x, &y, &[], &cfg).unwrap();
        m.validate().unwrap();
        assert_eq!(auc_roc(&m.predict_proba(&x), &y).unwrap(), 1.0);
    }

    #[test]
    fn single_class_is_rejected() {
        let x = vec![vec![0.0], vec![1.0]];
        assert_eq!(
            train_forest(&x, &[true, true], &[], &ForestConfig::default()),
            Err(MlError::DegenerateLabels)
        );
    }
}
