//! Group-relative advantages, the clipped surrogate objective with a KL
//! penalty, and the DAPO variant (asymmetric clip band, zero-variance groups
//! dropped, no KL term).
//!
//! Log-probabilities are per sequence: one scalar per sampled response.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest |logp_ref - logp_theta| accepted by [`kl_estimate`].
pub const MAX_LOGP_GAP: f64 = 50.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GrpoError {
    #[error("GroupTooSmall: need at least 2 responses, got {0}")]
    GroupTooSmall(usize),
    #[error("log-probability gap {0} outside the supported range")]
    LogpGap(f64),
    #[error("non-finite log-probability")]
    NonFinite,
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid optimiser config: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Grpo,
    Dapo,
}

impl std::str::FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "grpo" => Ok(Algorithm::Grpo),
            "dapo" => Ok(Algorithm::Dapo),
            other => Err(format!("unknown algorithm `{other}`")),
        }
    }
}

/// Normaliser used for group advantages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StdKind {
    /// Divide by G.
    Population,
    /// Divide by G - 1.
    Sample,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimConfig {
    pub algorithm: Algorithm,
    pub group_size: usize,
    /// Symmetric clip width for GRPO.
    pub clip_eps: f64,
    /// Lower clip width for DAPO.
    pub clip_eps_low: f64,
    /// Upper clip width for DAPO.
    pub clip_eps_high: f64,
    /// KL weight for GRPO; DAPO ignores it.
    pub kl_beta: f64,
    /// Groups with reward std below this get zero advantages (GRPO) or are
    /// dropped (DAPO).
    pub degenerate_eps: f64,
    pub std_kind: StdKind,
}

impl OptimConfig {
    /// GRPO defaults: G = 8, eps = 0.2, beta = 0.04. The eps and beta values
    /// are assumptions; the training framework defaults are not stated.
    pub fn grpo() -> Self {
        OptimConfig {
            algorithm: Algorithm::Grpo,
            group_size: 8,
            clip_eps: 0.2,
            clip_eps_low: 0.2,
            clip_eps_high: 0.28,
            kl_beta: 0.04,
            degenerate_eps: 1e-8,
            std_kind: StdKind::Population,
        }
    }

    /// DAPO defaults: clip band [1 - 0.2, 1 + 0.28], no KL term.
    pub fn dapo() -> Self {
        OptimConfig {
            algorithm: Algorithm::Dapo,
            kl_beta: 0.0,
            ..OptimConfig::grpo()
        }
    }

    pub fn for_algorithm(algorithm: Algorithm) -> Self {
        match algorithm {
            Algorithm::Grpo => OptimConfig::grpo(),
            Algorithm::Dapo => OptimConfig::dapo(),
        }
    }

    /// Ratio bounds `(1 - low, 1 + high)` for the active algorithm.
    pub fn clip_band(&self) -> (f64, f64) {
        match self.algorithm {
            Algorithm::Grpo => (1.0 - self.clip_eps, 1.0 + self.clip_eps),
            Algorithm::Dapo => (1.0 - self.clip_eps_low, 1.0 + self.clip_eps_high),
        }
    }

    /// Effective KL weight.
    pub fn beta(&self) -> f64 {
        match self.algorithm {
            Algorithm::Grpo => self.kl_beta,
            Algorithm::Dapo => 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), GrpoError> {
        let unit = |x: f64| x > 0.0 && x < 1.0;
        if self.group_size < 2 {
            return Err(GrpoError::Config(format!(
                "group_size must be at least 2, got {}",
                self.group_size
            )));
        }
        if !unit(self.clip_eps) || !unit(self.clip_eps_low) || !unit(self.clip_eps_high) {
            return Err(GrpoError::Config("clip widths must lie in (0, 1)".into()));
        }
        if !self.kl_beta.is_finite() || self.kl_beta < 0.0 {
            return Err(GrpoError::Config(
                "kl_beta must be finite and non-negative".into(),
            ));
        }
        if self.degenerate_eps.is_nan() || self.degenerate_eps < 0.0 {
            return Err(GrpoError::Config(
                "degenerate_eps must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

impl Default for OptimConfig {
    fn default() -> Self {
        OptimConfig::grpo()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseRecord {
    pub text: String,
    pub reward_total: f64,
    pub logp_old: f64,
    pub logp_ref: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryGroup {
    pub query_id: String,
    pub responses: Vec<ResponseRecord>,
    /// Filled by [`TrajectoryGroup::fill_advantages`].
    pub advantages: Vec<f64>,
}

impl TrajectoryGroup {
    pub fn new(query_id: impl Into<String>, responses: Vec<ResponseRecord>) -> Self {
        TrajectoryGroup {
            query_id: query_id.into(),
            responses,
            advantages: Vec::new(),
        }
    }

    pub fn rewards(&self) -> Vec<f64> {
        self.responses.iter().map(|r| r.reward_total).collect()
    }

    pub fn fill_advantages(&mut self, cfg: &OptimConfig) -> Result<(), GrpoError> {
        self.advantages = advantages_with(&self.rewards(), cfg.degenerate_eps, cfg.std_kind)?;
        Ok(())
    }
}

fn mean_std(xs: &[f64], kind: StdKind) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    let denom = match kind {
        StdKind::Population => n,
        StdKind::Sample => n - 1.0,
    };
    (mean, (ss / denom).sqrt())
}

/// `(r_i - mean) / std` with the population standard deviation. All zeros
/// when the std falls below `degenerate_eps`.
pub fn compute_advantages(rewards: &[f64], degenerate_eps: f64) -> Result<Vec<f64>, GrpoError> {
    advantages_with(rewards, degenerate_eps, StdKind::Population)
}

pub fn advantages_with(
    rewards: &[f64],
    degenerate_eps: f64,
    kind: StdKind,
) -> Result<Vec<f64>, GrpoError> {
    if rewards.len() < 2 {
        return Err(GrpoError::GroupTooSmall(rewards.len()));
    }
    let (mean, std) = mean_std(rewards, kind);
    if std.is_nan() || std < degenerate_eps {
        return Ok(vec![0.0; rewards.len()]);
    }
    Ok(rewards.iter().map(|r| (r - mean) / std).collect())
}

/// Unbiased KL estimator `u - ln u - 1` with `u = pi_ref / pi_theta`.
pub fn kl_estimate(logp_theta: f64, logp_ref: f64) -> Result<f64, GrpoError> {
    if !logp_theta.is_finite() || !logp_ref.is_finite() {
        return Err(GrpoError::NonFinite);
    }
    let d = logp_ref - logp_theta;
    if d.abs() > MAX_LOGP_GAP {
        return Err(GrpoError::LogpGap(d));
    }
    // exp_m1 keeps precision when the two log-probabilities are close
    Ok(d.exp_m1() - d)
}

fn check_len(group: &TrajectoryGroup, logp_new: &[f64]) -> Result<usize, GrpoError> {
    let g = group.responses.len();
    if logp_new.len() != g {
        return Err(GrpoError::LengthMismatch {
            expected: g,
            got: logp_new.len(),
        });
    }
    if group.advantages.len() != g {
        return Err(GrpoError::LengthMismatch {
            expected: g,
            got: group.advantages.len(),
        });
    }
    if g == 0 {
        return Err(GrpoError::GroupTooSmall(0));
    }
    Ok(g)
}

/// Mean over the group of the clipped surrogate minus the KL penalty.
pub fn grpo_objective(
    group: &TrajectoryGroup,
    logp_new: &[f64],
    cfg: &OptimConfig,
) -> Result<f64, GrpoError> {
    let g = check_len(group, logp_new)?;
    let (lo, hi) = cfg.clip_band();
    let beta = cfg.beta();
    let mut total = 0.0;
    for ((r, &a), &lp) in group.responses.iter().zip(&group.advantages).zip(logp_new) {
        let rho = (lp - r.logp_old).exp();
        let surrogate = (rho * a).min(rho.clamp(lo, hi) * a);
        let kl = if beta == 0.0 {
            0.0
        } else {
            kl_estimate(lp, r.logp_ref)?
        };
        total += surrogate - beta * kl;
    }
    Ok(total / g as f64)
}

/// Gradient of [`grpo_objective`] with respect to each `logp_new`.
///
/// The surrogate contributes `rho * A` while the unclipped branch is the
/// minimum and nothing once clipping takes over; the KL term contributes
/// `-beta * (1 - u)`.
pub fn objective_gradient(
    group: &TrajectoryGroup,
    logp_new: &[f64],
    cfg: &OptimConfig,
) -> Result<Vec<f64>, GrpoError> {
    let g = check_len(group, logp_new)?;
    let (lo, hi) = cfg.clip_band();
    let beta = cfg.beta();
    group
        .responses
        .iter()
        .zip(&group.advantages)
        .zip(logp_new)
        .map(|((r, &a), &lp)| {
            let rho = (lp - r.logp_old).exp();
            let unclipped = rho * a <= rho.clamp(lo, hi) * a;
            let mut d = if unclipped { rho * a } else { 0.0 };
            if beta != 0.0 {
                let gap = r.logp_ref - lp;
                if !gap.is_finite() {
                    return Err(GrpoError::NonFinite);
                }
                if gap.abs() > MAX_LOGP_GAP {
                    return Err(GrpoError::LogpGap(gap));
                }
                d -= beta * (1.0 - gap.exp());
            }
            Ok(d / g as f64)
        })
        .collect()
}

/// Dynamic sampling: keeps only groups whose rewards vary.
pub fn dapo_filter(groups: Vec<TrajectoryGroup>, degenerate_eps: f64) -> Vec<TrajectoryGroup> {
    groups
        .into_iter()
        .filter(|g| {
            let r = g.rewards();
            r.len() >= 2 && mean_std(&r, StdKind::Population).1 >= degenerate_eps
        })
        .collect()
}
