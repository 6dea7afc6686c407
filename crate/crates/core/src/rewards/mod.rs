//! Format, correctness, count and rationality rewards.
//!
//! The rationality reward compares each claimed polarity with whether the
//! attribute's computed value falls in the advantageous range for the target.
//! Claims that cannot be checked (unknown name, no calculator, no range
//! entry, no polarity) are left out of the denominator; when nothing can be
//! checked the reward is 0.

mod ranges;

pub use ranges::{Interval, IntervalSet, RangeTable};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::descriptors::{compute, resolve_attribute, DescriptorId};
use crate::molgraph::Molecule;
use crate::response::{ParsedResponse, Polarity};

pub const FORMAT_OK: f64 = 1.0;
pub const FORMAT_BAD: f64 = -2.0;
pub const CORRECT: f64 = 2.0;
pub const INCORRECT: f64 = 0.0;
pub const COUNT_OK: f64 = 0.0;
pub const COUNT_BAD: f64 = -1.0;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RewardError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: unknown descriptor `{name}`")]
    UnknownDescriptor { line: usize, name: String },
    #[error("range table has no entries for target `{0}`")]
    TableMissing(String),
    #[error("{path}: {msg}")]
    Io { path: String, msg: String },
}

/// Closed interval of accepted attribute counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountBounds {
    pub lo: usize,
    pub hi: usize,
}

impl CountBounds {
    pub const DEFAULT: CountBounds = CountBounds { lo: 3, hi: 10 };

    pub fn new(lo: usize, hi: usize) -> Option<CountBounds> {
        (lo <= hi).then_some(CountBounds { lo, hi })
    }
}

impl Default for CountBounds {
    fn default() -> Self {
        CountBounds::DEFAULT
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub format: f64,
    pub correct: f64,
    pub count: f64,
    pub rational: f64,
    pub total: f64,
    /// Attributes listed in the response.
    pub n_att: usize,
    /// Attributes that resolved to a registry entry.
    pub matched: usize,
    /// Attributes that entered the rationality denominator.
    pub verified: usize,
}

/// Why a claim was or was not counted by the rationality reward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClaimStatus {
    Agrees,
    Disagrees,
    NoPolarity,
    NoMatch,
    Unimplemented,
    NoRange,
}

impl ClaimStatus {
    pub fn verified(self) -> bool {
        matches!(self, ClaimStatus::Agrees | ClaimStatus::Disagrees)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimCheck {
    pub raw_name: String,
    pub polarity: Option<Polarity>,
    pub descriptor: Option<DescriptorId>,
    pub value: Option<f64>,
    pub in_range: Option<bool>,
    pub status: ClaimStatus,
}

pub fn reward_format(parsed: &ParsedResponse) -> f64 {
    if parsed.format_ok {
        FORMAT_OK
    } else {
        FORMAT_BAD
    }
}

/// Full credit only when the tagged answer equals the label.
pub fn reward_correct(parsed: &ParsedResponse, label: bool) -> f64 {
    match parsed.answer {
        Some(crate::response::Answer::Bool(b)) if b == label => CORRECT,
        _ => INCORRECT,
    }
}

pub fn reward_count(parsed: &ParsedResponse, bounds: CountBounds) -> f64 {
    let n = parsed.n_att();
    if (bounds.lo..=bounds.hi).contains(&n) {
        COUNT_OK
    } else {
        COUNT_BAD
    }
}

/// Per-claim verification against the range table.
pub fn check_claims(
    parsed: &ParsedResponse,
    mol: &Molecule,
    target: &str,
    table: &RangeTable,
) -> Result<Vec<ClaimCheck>, RewardError> {
    if !table.has_target(target) {
        return Err(RewardError::TableMissing(target.to_string()));
    }
    let Some(claims) = &parsed.claims else {
        return Ok(Vec::new());
    };
    Ok(claims
        .iter()
        .map(|c| {
            let mut check = ClaimCheck {
                raw_name: c.raw_name.clone(),
                polarity: c.polarity,
                descriptor: resolve_attribute(&c.raw_name),
                value: None,
                in_range: None,
                status: ClaimStatus::NoMatch,
            };
            let Some(id) = check.descriptor else {
                return check;
            };
            let Ok(v) = compute(mol, id) else {
                check.status = ClaimStatus::Unimplemented;
                return check;
            };
            check.value = Some(v.value);
            let Some(range) = table.get(target, id) else {
                check.status = ClaimStatus::NoRange;
                return check;
            };
            let inside = range.contains(v.value);
            check.in_range = Some(inside);
            check.status = match c.polarity {
                None => ClaimStatus::NoPolarity,
                Some(p) if (p == Polarity::Promotes) == inside => ClaimStatus::Agrees,
                Some(_) => ClaimStatus::Disagrees,
            };
            check
        })
        .collect())
}

fn rational_from_checks(checks: &[ClaimCheck]) -> f64 {
    let verified = checks.iter().filter(|c| c.status.verified()).count();
    if verified == 0 {
        return 0.0;
    }
    let agree = checks
        .iter()
        .filter(|c| c.status == ClaimStatus::Agrees)
        .count();
    agree as f64 / verified as f64
}

pub fn reward_rational(
    parsed: &ParsedResponse,
    mol: &Molecule,
    target: &str,
    table: &RangeTable,
) -> Result<f64, RewardError> {
    Ok(rational_from_checks(&check_claims(
        parsed, mol, target, table,
    )?))
}

pub fn total_reward(
    parsed: &ParsedResponse,
    mol: &Molecule,
    label: bool,
    target: &str,
    table: &RangeTable,
    bounds: CountBounds,
) -> Result<RewardBreakdown, RewardError> {
    let checks = check_claims(parsed, mol, target, table)?;
    let format = reward_format(parsed);
    let correct = reward_correct(parsed, label);
    let count = reward_count(parsed, bounds);
    let rational = rational_from_checks(&checks);
    Ok(RewardBreakdown {
        format,
        correct,
        count,
        rational,
        total: format + correct + count + rational,
        n_att: parsed.n_att(),
        matched: checks.iter().filter(|c| c.descriptor.is_some()).count(),
        verified: checks.iter().filter(|c| c.status.verified()).count(),
    })
}
