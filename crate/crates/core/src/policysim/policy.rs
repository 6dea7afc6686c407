//! Factorised categorical policy over a small response grammar.
//!
//! A response is drawn in stages: a format bit; if malformed, which tag pair
//! to omit; then, for each rendered block, the attribute count, the ordered
//! attribute list (Plackett–Luce, without replacement), one polarity per
//! attribute and the answer. Omitted blocks draw nothing, so the sampled
//! count always equals the number of rendered claims.
//!
//! All logits are divided by the temperature before normalisation.

use rand::Rng;

use crate::descriptors::DescriptorId;
use crate::response::{render_response, Answer, AttributeClaim, Polarity};

/// Polarity logits are indexed by what the range table says about the
/// descriptor value for the current query.
pub const BUCKETS: usize = 3;
pub const BUCKET_OUT: u8 = 0;
pub const BUCKET_IN: u8 = 1;
pub const BUCKET_UNKNOWN: u8 = 2;

const THINK: &str = "Reviewing the listed attributes against the target.";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tag {
    Think,
    Name,
    Answer,
}

const TAGS: [Tag; 3] = [Tag::Think, Tag::Name, Tag::Answer];

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams {
    pub logit_format: f64,
    /// One logit per attribute count `0..logits_count.len()`.
    pub logits_count: Vec<f64>,
    /// One logit per vocabulary entry.
    pub logits_attr: Vec<f64>,
    /// Promotes logit per vocabulary entry and bucket.
    pub logits_polarity: Vec<[f64; BUCKETS]>,
    /// True-answer logit per query.
    pub logits_answer: Vec<f64>,
}

impl PolicyParams {
    /// All-zero logits: uniform choices everywhere. `max_count` is clamped
    /// to the vocabulary size.
    pub fn uniform(vocab: usize, max_count: usize, queries: usize) -> Self {
        PolicyParams {
            logit_format: 0.0,
            logits_count: vec![0.0; max_count.min(vocab) + 1],
            logits_attr: vec![0.0; vocab],
            logits_polarity: vec![[0.0; BUCKETS]; vocab],
            logits_answer: vec![0.0; queries],
        }
    }

    pub fn vocab(&self) -> usize {
        self.logits_attr.len()
    }

    pub fn max_count(&self) -> usize {
        self.logits_count.len() - 1
    }

    pub fn len(&self) -> usize {
        1 + self.logits_count.len()
            + self.logits_attr.len()
            + self.logits_polarity.len() * BUCKETS
            + self.logits_answer.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Flat copy in a fixed order: format, count, attr, polarity, answer.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.len());
        v.push(self.logit_format);
        v.extend(&self.logits_count);
        v.extend(&self.logits_attr);
        for p in &self.logits_polarity {
            v.extend(p);
        }
        v.extend(&self.logits_answer);
        v
    }

    /// Inverse of [`PolicyParams::to_flat`] for the same shape.
    pub fn set_flat(&mut self, v: &[f64]) {
        assert_eq!(v.len(), self.len());
        let mut it = v.iter().copied();
        self.logit_format = it.next().unwrap();
        for x in self.logits_count.iter_mut() {
            *x = it.next().unwrap();
        }
        for x in self.logits_attr.iter_mut() {
            *x = it.next().unwrap();
        }
        for p in self.logits_polarity.iter_mut() {
            for x in p.iter_mut() {
                *x = it.next().unwrap();
            }
        }
        for x in self.logits_answer.iter_mut() {
            *x = it.next().unwrap();
        }
    }

    pub fn zeros_like(&self) -> Self {
        PolicyParams {
            logit_format: 0.0,
            logits_count: vec![0.0; self.logits_count.len()],
            logits_attr: vec![0.0; self.logits_attr.len()],
            logits_polarity: vec![[0.0; BUCKETS]; self.logits_polarity.len()],
            logits_answer: vec![0.0; self.logits_answer.len()],
        }
    }

    /// `self += k * other`.
    pub fn add_scaled(&mut self, other: &PolicyParams, k: f64) {
        self.logit_format += k * other.logit_format;
        let pairs = |a: &mut [f64], b: &[f64]| {
            for (x, y) in a.iter_mut().zip(b) {
                *x += k * y;
            }
        };
        pairs(&mut self.logits_count, &other.logits_count);
        pairs(&mut self.logits_attr, &other.logits_attr);
        for (a, b) in self.logits_polarity.iter_mut().zip(&other.logits_polarity) {
            pairs(a, b);
        }
        pairs(&mut self.logits_answer, &other.logits_answer);
    }

    pub fn is_finite(&self) -> bool {
        self.to_flat().iter().all(|x| x.is_finite())
    }
}

/// One sampled response in structured form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Action {
    pub well_formed: bool,
    /// Omitted tag pair when malformed.
    pub dropped: Option<Tag>,
    /// Vocabulary indices in claim order; empty when the name block is
    /// omitted.
    pub attrs: Vec<usize>,
    /// Promotes flags parallel to `attrs`.
    pub promotes: Vec<bool>,
    /// Absent when the answer block is omitted.
    pub answer: Option<bool>,
}

impl Action {
    fn renders(&self, tag: Tag) -> bool {
        self.dropped != Some(tag)
    }

    /// Response text, well-formed or with one tag pair left out.
    pub fn render(&self, vocab: &[DescriptorId]) -> String {
        let claims: Vec<AttributeClaim> = self
            .attrs
            .iter()
            .zip(&self.promotes)
            .map(|(&a, &p)| {
                AttributeClaim::new(
                    vocab[a].name(),
                    if p {
                        Polarity::Promotes
                    } else {
                        Polarity::Inhibits
                    },
                )
            })
            .collect();
        let full = render_response(THINK, &claims, Answer::Bool(self.answer.unwrap_or(false)));
        match self.dropped {
            None => full,
            Some(tag) => {
                let (open, close) = match tag {
                    Tag::Think => ("<think>", "</think>"),
                    Tag::Name => ("<name>", "</name>"),
                    Tag::Answer => ("<answer>", "</answer>"),
                };
                let start = full.find(open).expect("rendered tag");
                let end = full.find(close).expect("rendered tag") + close.len();
                let mut s = String::with_capacity(full.len());
                s.push_str(&full[..start]);
                s.push_str(full[end..].trim_start_matches('\n'));
                s
            }
        }
    }
}

fn log_sigmoid(x: f64) -> f64 {
    // log(1 / (1 + e^-x)) without overflow
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Softmax over `idx` of `logits / t`.
fn softmax_subset(logits: &[f64], idx: &[usize], t: f64) -> Vec<f64> {
    let m = idx
        .iter()
        .map(|&i| logits[i] / t)
        .fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = idx.iter().map(|&i| (logits[i] / t - m).exp()).collect();
    let z: f64 = e.iter().sum();
    e.into_iter().map(|x| x / z).collect()
}

fn log_softmax_at(logits: &[f64], idx: &[usize], pick: usize, t: f64) -> f64 {
    let m = idx
        .iter()
        .map(|&i| logits[i] / t)
        .fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = idx.iter().map(|&i| (logits[i] / t - m).exp()).sum();
    logits[pick] / t - m - z.ln()
}

fn draw(rng: &mut impl Rng, probs: &[f64]) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (k, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    // rounding left a sliver above the last cumulative sum
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// Samples an action for query `q`. `buckets[d]` is the range bucket of
/// vocabulary entry `d` for this query.
pub fn sample_action(
    params: &PolicyParams,
    t: f64,
    q: usize,
    buckets: &[u8],
    rng: &mut impl Rng,
) -> Action {
    let well_formed = rng.gen::<f64>() < sigmoid(params.logit_format / t);
    let dropped = if well_formed {
        None
    } else {
        Some(TAGS[rng.gen_range(0..3)])
    };
    let mut action = Action {
        well_formed,
        dropped,
        attrs: Vec::new(),
        promotes: Vec::new(),
        answer: None,
    };
    if action.renders(Tag::Name) {
        let all: Vec<usize> = (0..params.logits_count.len()).collect();
        let n = draw(rng, &softmax_subset(&params.logits_count, &all, t));
        let mut remaining: Vec<usize> = (0..params.vocab()).collect();
        for _ in 0..n {
            let k = draw(rng, &softmax_subset(&params.logits_attr, &remaining, t));
            let a = remaining.remove(k);
            let p = sigmoid(params.logits_polarity[a][buckets[a] as usize] / t);
            action.attrs.push(a);
            action.promotes.push(rng.gen::<f64>() < p);
        }
    }
    if action.renders(Tag::Answer) {
        action.answer = Some(rng.gen::<f64>() < sigmoid(params.logits_answer[q] / t));
    }
    action
}

fn bernoulli_logp(logit: f64, t: f64, outcome: bool) -> f64 {
    if outcome {
        log_sigmoid(logit / t)
    } else {
        log_sigmoid(-logit / t)
    }
}

/// Exact log-probability of `action` under `params`.
pub fn log_prob(params: &PolicyParams, t: f64, q: usize, buckets: &[u8], action: &Action) -> f64 {
    let mut lp = bernoulli_logp(params.logit_format, t, action.well_formed);
    if !action.well_formed {
        lp -= 3f64.ln();
    }
    if action.renders(Tag::Name) {
        let all: Vec<usize> = (0..params.logits_count.len()).collect();
        lp += log_softmax_at(&params.logits_count, &all, action.attrs.len(), t);
        let mut remaining: Vec<usize> = (0..params.vocab()).collect();
        for (&a, &p) in action.attrs.iter().zip(&action.promotes) {
            lp += log_softmax_at(&params.logits_attr, &remaining, a, t);
            remaining.retain(|&x| x != a);
            lp += bernoulli_logp(params.logits_polarity[a][buckets[a] as usize], t, p);
        }
    }
    if let Some(ans) = action.answer {
        lp += bernoulli_logp(params.logits_answer[q], t, ans);
    }
    lp
}

/// Adds `scale * d log_prob / d params` into `grad`.
pub fn add_log_prob_grad(
    params: &PolicyParams,
    t: f64,
    q: usize,
    buckets: &[u8],
    action: &Action,
    scale: f64,
    grad: &mut PolicyParams,
) {
    let bern = |logit: f64, outcome: bool| {
        let p = sigmoid(logit / t);
        (if outcome { 1.0 } else { 0.0 } - p) / t
    };
    grad.logit_format += scale * bern(params.logit_format, action.well_formed);
    if action.renders(Tag::Name) {
        let all: Vec<usize> = (0..params.logits_count.len()).collect();
        let probs = softmax_subset(&params.logits_count, &all, t);
        for (k, p) in probs.iter().enumerate() {
            let hit = if k == action.attrs.len() { 1.0 } else { 0.0 };
            grad.logits_count[k] += scale * (hit - p) / t;
        }
        let mut remaining: Vec<usize> = (0..params.vocab()).collect();
        for (&a, &pr) in action.attrs.iter().zip(&action.promotes) {
            let probs = softmax_subset(&params.logits_attr, &remaining, t);
            for (&j, p) in remaining.iter().zip(&probs) {
                let hit = if j == a { 1.0 } else { 0.0 };
                grad.logits_attr[j] += scale * (hit - p) / t;
            }
            remaining.retain(|&x| x != a);
            let b = buckets[a] as usize;
            grad.logits_polarity[a][b] += scale * bern(params.logits_polarity[a][b], pr);
        }
    }
    if let Some(ans) = action.answer {
        grad.logits_answer[q] += scale * bern(params.logits_answer[q], ans);
    }
}

/// Every action for a policy shape. Only feasible for tiny vocabularies.
pub fn enumerate_actions(vocab: usize, max_count: usize) -> Vec<Action> {
    fn sequences(vocab: usize, len: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == len {
            out.push(prefix.clone());
            return;
        }
        for a in 0..vocab {
            if !prefix.contains(&a) {
                prefix.push(a);
                sequences(vocab, len, prefix, out);
                prefix.pop();
            }
        }
    }
    let mut name_parts: Vec<(Vec<usize>, Vec<bool>)> = Vec::new();
    for n in 0..=max_count.min(vocab) {
        let mut seqs = Vec::new();
        sequences(vocab, n, &mut Vec::new(), &mut seqs);
        for s in seqs {
            for mask in 0..(1u32 << n) {
                let pol = (0..n).map(|i| mask & (1 << i) != 0).collect();
                name_parts.push((s.clone(), pol));
            }
        }
    }
    let mut out = Vec::new();
    for dropped in [None, Some(Tag::Think), Some(Tag::Name), Some(Tag::Answer)] {
        let names: Vec<(Vec<usize>, Vec<bool>)> = if dropped == Some(Tag::Name) {
            vec![(Vec::new(), Vec::new())]
        } else {
            name_parts.clone()
        };
        let answers: Vec<Option<bool>> = if dropped == Some(Tag::Answer) {
            vec![None]
        } else {
            vec![Some(false), Some(true)]
        };
        for (attrs, promotes) in &names {
            for &answer in &answers {
                out.push(Action {
                    well_formed: dropped.is_none(),
                    dropped,
                    attrs: attrs.clone(),
                    promotes: promotes.clone(),
                    answer,
                });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::response::{parse_response, Task};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_params(vocab: usize, max_count: usize, queries: usize, seed: u64) -> PolicyParams {
        let mut p = PolicyParams::uniform(vocab, max_count, queries);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let flat: Vec<f64> = (0..p.len()).map(|_| rng.gen_range(-1.5..1.5)).collect();
        p.set_flat(&flat);
        p
    }

    #[test]
    fn enumerated_probabilities_sum_to_one() {
        for seed in 0..5 {
            let p = random_params(2, 2, 1, seed);
            let buckets = [BUCKET_IN, BUCKET_OUT];
            let total: f64 = enumerate_actions(2, 2)
                .iter()
                .map(|a| log_prob(&p, 0.6, 0, &buckets, a).exp())
                .sum();
            assert!((total - 1.0).abs() < 1e-9, "{total}");
        }
        let p = random_params(3, 2, 1, 9);
        let total: f64 = enumerate_actions(3, 2)
            .iter()
            .map(|a| log_prob(&p, 1.3, 0, &[0, 1, 2], a).exp())
            .sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn sampled_actions_are_consistent() {
        let p = random_params(5, 4, 2, 1);
        let vocab: Vec<DescriptorId> = DescriptorId::implemented_ids().take(5).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let buckets = [0, 1, 2, 1, 0];
        for _ in 0..500 {
            let a = sample_action(&p, 0.6, 1, &buckets, &mut rng);
            let mut seen = a.attrs.clone();
            seen.sort_unstable();
            seen.dedup();
            assert_eq!(seen.len(), a.attrs.len());
            assert_eq!(a.attrs.len(), a.promotes.len());
            let lp = log_prob(&p, 0.6, 1, &buckets, &a);
            assert!(lp.is_finite() && lp <= 0.0);
            let parsed = parse_response(&a.render(&vocab), Task::Classification);
            assert_eq!(parsed.format_ok, a.well_formed);
            if a.dropped != Some(Tag::Name) {
                assert_eq!(parsed.n_att(), a.attrs.len());
            } else {
                assert!(parsed.claims.is_none());
                assert!(a.attrs.is_empty());
            }
            if a.dropped == Some(Tag::Answer) {
                assert_eq!(parsed.answer, None);
            } else {
                assert_eq!(parsed.answer, a.answer.map(Answer::Bool));
            }
        }
    }

    #[test]
    fn saturated_format_logit_always_well_formed() {
        let mut p = random_params(4, 3, 1, 2);
        p.logit_format = 1e6;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..200 {
            assert!(sample_action(&p, 0.6, 0, &[0, 1, 0, 1], &mut rng).well_formed);
        }
    }

    #[test]
    fn log_prob_gradient_matches_finite_differences() {
        let p = random_params(4, 3, 2, 4);
        let buckets = [0, 1, 2, 1];
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let a = sample_action(&p, 0.7, 1, &buckets, &mut rng);
            let mut g = p.zeros_like();
            add_log_prob_grad(&p, 0.7, 1, &buckets, &a, 1.0, &mut g);
            let g = g.to_flat();
            let base = p.to_flat();
            for i in 0..base.len() {
                let h = 1e-5;
                let mut up = p.clone();
                let mut v = base.clone();
                v[i] += h;
                up.set_flat(&v);
                let mut dn = p.clone();
                v[i] -= 2.0 * h;
                dn.set_flat(&v);
                let fd = (log_prob(&up, 0.7, 1, &buckets, &a)
                    - log_prob(&dn, 0.7, 1, &buckets, &a))
                    / (2.0 * h);
                assert!((fd - g[i]).abs() < 1e-7, "param {i}: {fd} vs {}", g[i]);
            }
        }
    }

    #[test]
    fn flat_round_trip() {
        let p = random_params(3, 2, 2, 5);
        let mut q = PolicyParams::uniform(3, 2, 2);
        q.set_flat(&p.to_flat());
        assert_eq!(p, q);
        assert_eq!(p.len(), 1 + 3 + 3 + 9 + 2);
    }
}
