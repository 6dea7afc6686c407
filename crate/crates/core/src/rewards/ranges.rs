//! Advantageous value ranges per (target property, descriptor).
//!
//! File format, one entry per line, `#` starts a comment line:
//!
//! ```text
//! <target>\t<descriptor>\t<interval-set>
//! BBBP\tTPSA\t[0,90)
//! BBBP\tMolLogP\t[1,3.5]
//! ClinTox\tMolWt\t[500,inf)
//! ```
//!
//! An interval set is a comma-separated union of intervals. `[`/`]` close a
//! bound, `(`/`)` open it; infinite bounds must be open. `[a,a]` denotes a
//! single point; any other empty interval is rejected.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use super::RewardError;
use crate::descriptors::DescriptorId;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub lo_closed: bool,
    pub hi: f64,
    pub hi_closed: bool,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        let above = if self.lo_closed {
            x >= self.lo
        } else {
            x > self.lo
        };
        let below = if self.hi_closed {
            x <= self.hi
        } else {
            x < self.hi
        };
        above && below
    }

    /// The whole real line.
    pub fn everything() -> Interval {
        Interval {
            lo: f64::NEG_INFINITY,
            lo_closed: false,
            hi: f64::INFINITY,
            hi_closed: false,
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let bound = |x: f64| {
            if x == f64::INFINITY {
                "inf".to_string()
            } else if x == f64::NEG_INFINITY {
                "-inf".to_string()
            } else {
                format!("{x}")
            }
        };
        write!(
            f,
            "{}{},{}{}",
            if self.lo_closed { '[' } else { '(' },
            bound(self.lo),
            bound(self.hi),
            if self.hi_closed { ']' } else { ')' }
        )
    }
}

/// Union of intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalSet(pub Vec<Interval>);

impl IntervalSet {
    pub fn contains(&self, x: f64) -> bool {
        self.0.iter().any(|i| i.contains(x))
    }

    pub fn parse(text: &str) -> Result<IntervalSet, String> {
        let mut out = Vec::new();
        let mut rest = text.trim();
        while !rest.is_empty() {
            let lo_closed = match rest.as_bytes()[0] {
                b'[' => true,
                b'(' => false,
                _ => return Err(format!("expected `[` or `(` at `{rest}`")),
            };
            let end = rest
                .find([']', ')'])
                .ok_or_else(|| format!("unterminated interval `{rest}`"))?;
            let hi_closed = rest.as_bytes()[end] == b']';
            let body = &rest[1..end];
            let (a, b) = body
                .split_once(',')
                .ok_or_else(|| format!("interval `{body}` needs two bounds"))?;
            let lo = parse_bound(a)?;
            let hi = parse_bound(b)?;
            if (lo.is_infinite() && lo_closed) || (hi.is_infinite() && hi_closed) {
                return Err("infinite bounds must be open".into());
            }
            let point = lo == hi && lo_closed && hi_closed;
            if !(lo < hi || point) {
                return Err(format!("empty interval `{}`", &rest[..=end]));
            }
            out.push(Interval {
                lo,
                lo_closed,
                hi,
                hi_closed,
            });
            rest = rest[end + 1..].trim_start();
            if let Some(r) = rest.strip_prefix(',') {
                rest = r.trim_start();
                if rest.is_empty() {
                    return Err("trailing comma".into());
                }
            } else if !rest.is_empty() {
                return Err(format!("expected `,` before `{rest}`"));
            }
        }
        if out.is_empty() {
            return Err("empty interval set".into());
        }
        Ok(IntervalSet(out))
    }
}

impl fmt::Display for IntervalSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, i) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{i}")?;
        }
        Ok(())
    }
}

fn parse_bound(s: &str) -> Result<f64, String> {
    let s = s.trim();
    match s.to_ascii_lowercase().as_str() {
        "inf" | "+inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        _ => s
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| format!("bad bound `{s}`")),
    }
}

/// Immutable lookup from (target, descriptor) to its advantageous range.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RangeTable {
    entries: BTreeMap<(String, DescriptorId), IntervalSet>,
}

impl RangeTable {
    pub fn parse(text: &str) -> Result<RangeTable, RewardError> {
        let mut entries = BTreeMap::new();
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let t = raw.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = raw.split('\t').map(str::trim).collect();
            if cols.len() != 3 || cols[0].is_empty() {
                return Err(RewardError::Parse {
                    line,
                    msg: "expected `target<TAB>descriptor<TAB>interval-set`".into(),
                });
            }
            let id =
                DescriptorId::from_name(cols[1]).ok_or_else(|| RewardError::UnknownDescriptor {
                    line,
                    name: cols[1].to_string(),
                })?;
            let set =
                IntervalSet::parse(cols[2]).map_err(|msg| RewardError::Parse { line, msg })?;
            if entries.insert((cols[0].to_string(), id), set).is_some() {
                return Err(RewardError::Parse {
                    line,
                    msg: format!("duplicate entry for {} / {}", cols[0], id),
                });
            }
        }
        Ok(RangeTable { entries })
    }

    pub fn load(path: &Path) -> Result<RangeTable, RewardError> {
        let text = std::fs::read_to_string(path).map_err(|e| RewardError::Io {
            path: path.display().to_string(),
            msg: e.to_string(),
        })?;
        RangeTable::parse(&text)
    }

    /// One of the bundled tables: `gpt4o-default` or `r1-default`.
    pub fn bundled(name: &str) -> Option<RangeTable> {
        let text = match name {
            "gpt4o-default" => include_str!("../../data/ranges/gpt4o-default.tsv"),
            "r1-default" => include_str!("../../data/ranges/r1-default.tsv"),
            _ => return None,
        };
        Some(RangeTable::parse(text).expect("bundled range table parses"))
    }

    pub fn bundled_names() -> &'static [&'static str] {
        &["gpt4o-default", "r1-default"]
    }

    pub fn insert(&mut self, target: &str, id: DescriptorId, set: IntervalSet) {
        self.entries.insert((target.to_string(), id), set);
    }

    pub fn get(&self, target: &str, id: DescriptorId) -> Option<&IntervalSet> {
        self.entries.get(&(target.to_string(), id))
    }

    pub fn has_target(&self, target: &str) -> bool {
        self.entries.keys().any(|(t, _)| t == target)
    }

    pub fn targets(&self) -> Vec<&str> {
        let mut t: Vec<&str> = self.entries.keys().map(|(t, _)| t.as_str()).collect();
        t.dedup();
        t
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_bounds() {
        let s = IntervalSet::parse("[0, 90)").unwrap();
        assert!(s.contains(0.0));
        assert!(s.contains(30.0));
        assert!(!s.contains(90.0));
        let s = IntervalSet::parse("(-inf,3.5]").unwrap();
        assert!(s.contains(-1e300));
        assert!(s.contains(3.5));
        assert!(!s.contains(3.5000001));
        let s = IntervalSet::parse("[1,2], (5, inf)").unwrap();
        assert!(s.contains(1.5) && s.contains(6.0) && !s.contains(3.0) && !s.contains(5.0));
        let p = IntervalSet::parse("[0,0]").unwrap();
        assert!(p.contains(0.0) && !p.contains(1e-12));
    }

    #[test]
    fn interval_errors() {
        for bad in [
            "",
            "[1,1)",
            "(2,1)",
            "[0,inf]",
            "[-inf,0)",
            "[0,1",
            "0,1",
            "[0,1],",
            "[a,1]",
            "[0,1] [2,3]",
        ] {
            assert!(IntervalSet::parse(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn display_round_trip() {
        let s = IntervalSet::parse("(-inf,3.5],[10,inf)").unwrap();
        assert_eq!(IntervalSet::parse(&s.to_string()).unwrap(), s);
    }

    #[test]
    fn table_rows() {
        let t =
            RangeTable::parse("# comment\nBBBP\tTPSA\t[0, 90)\n\nBBBP\tMolWt\t[0,450]\n").unwrap();
        let tpsa = DescriptorId::from_name("TPSA").unwrap();
        assert!(t.get("BBBP", tpsa).unwrap().contains(30.0));
        assert!(t.get("BACE", tpsa).is_none());
        assert!(t.has_target("BBBP"));
        assert_eq!(t.targets(), vec!["BBBP"]);
        assert_eq!(t.len(), 2);
    }

    #[test]
    fn table_errors_carry_lines() {
        match RangeTable::parse("BBBP\tTPSA\t[0,90)\nBBBP\tFoo\t[0,1]") {
            Err(RewardError::UnknownDescriptor { line, name }) => {
                assert_eq!(line, 2);
                assert_eq!(name, "Foo");
            }
            other => panic!("{other:?}"),
        }
        match RangeTable::parse("\n\nBBBP\tTPSA") {
            Err(RewardError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        match RangeTable::parse("BBBP\tTPSA\t(5,1)") {
            Err(RewardError::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("{other:?}"),
        }
        assert!(RangeTable::parse("BBBP\tTPSA\t[0,1]\nBBBP\tTPSA\t[0,2]").is_err());
        assert!(RangeTable::parse("").unwrap().is_empty());
    }

    #[test]
    fn bundled_tables_load() {
        for name in RangeTable::bundled_names() {
            let t = RangeTable::bundled(name).unwrap();
            for target in ["BBBP", "BACE", "ClinTox"] {
                assert!(t.has_target(target), "{name} {target}");
            }
        }
        assert!(RangeTable::bundled("nope").is_none());
    }
}
