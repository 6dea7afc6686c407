//! Prompt rendering and parsing of tagged model responses.
//!
//! A well-formed response carries exactly one `<think>`, one `<name>` and one
//! `<answer>` block, in that order. The `<name>` block lists attribute claims
//! as `name: polarity` items separated by commas.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Kind of prediction requested from the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Classification,
    Regression,
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Task::Classification => "classification",
            Task::Regression => "regression",
        })
    }
}

impl std::str::FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "classification" => Ok(Task::Classification),
            "regression" => Ok(Task::Regression),
            other => Err(format!("unknown task `{other}`")),
        }
    }
}

/// Inputs substituted into the prompt template.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptSpec {
    pub task: Task,
    pub smiles: String,
    pub target_property: String,
}

/// Direction in which a claimed attribute moves the target property.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polarity {
    Promotes,
    Inhibits,
}

impl Polarity {
    /// `1` for promotes, `0` for inhibits.
    pub fn bit(self) -> u8 {
        match self {
            Polarity::Promotes => 1,
            Polarity::Inhibits => 0,
        }
    }

    fn word(self) -> &'static str {
        match self {
            Polarity::Promotes => "promotes",
            Polarity::Inhibits => "inhibits",
        }
    }

    /// Accepts the synonyms used by the prompt (`improve`, `not improve`)
    /// alongside the canonical words. Case-insensitive.
    pub fn parse(word: &str) -> Option<Polarity> {
        let w: Vec<String> = word
            .split_whitespace()
            .map(|t| t.to_ascii_lowercase())
            .collect();
        let w: Vec<&str> = w.iter().map(String::as_str).collect();
        match w.as_slice() {
            ["promotes" | "promote" | "improve" | "improves"] => Some(Polarity::Promotes),
            ["inhibits" | "inhibit"] | ["not", "improve" | "improves"] => Some(Polarity::Inhibits),
            _ => None,
        }
    }
}

/// One item of the `<name>` block. A bare name without `: polarity` is kept
/// with `polarity: None`; it counts as an attribute but cannot be verified.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeClaim {
    pub raw_name: String,
    pub polarity: Option<Polarity>,
}

impl AttributeClaim {
    pub fn new(raw_name: impl Into<String>, polarity: Polarity) -> Self {
        AttributeClaim {
            raw_name: raw_name.into(),
            polarity: Some(polarity),
        }
    }
}

/// Final answer, or a dataset label of the same shape.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Answer {
    Bool(bool),
    Number(f64),
}

impl fmt::Display for Answer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Answer::Bool(b) => write!(f, "{b}"),
            Answer::Number(x) => write!(f, "{x}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParsedResponse {
    pub think: Option<String>,
    pub claims: Option<Vec<AttributeClaim>>,
    pub answer: Option<Answer>,
    pub format_ok: bool,
    pub token_count: usize,
}

impl ParsedResponse {
    /// Number of attributes listed, zero when the block is missing.
    pub fn n_att(&self) -> usize {
        self.claims.as_ref().map_or(0, Vec::len)
    }
}

/// One line of a response corpus (JSON lines).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub id: String,
    pub smiles: String,
    pub task: Task,
    pub target: String,
    pub response_text: String,
    pub label: Answer,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CorpusError {
    #[error("line {line}: {msg}")]
    Json { line: usize, msg: String },
    #[error("read error: {0}")]
    Io(String),
    #[error("EmptyDataset: corpus has no records")]
    Empty,
}

/// Reads a JSON-lines corpus. Blank lines are skipped; the first malformed
/// line aborts with its 1-based line number.
pub fn read_corpus(reader: impl std::io::BufRead) -> Result<Vec<CorpusRecord>, CorpusError> {
    let mut out = Vec::new();
    for (k, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| CorpusError::Io(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|e| CorpusError::Json {
            line: k + 1,
            msg: e.to_string(),
        })?;
        out.push(rec);
    }
    if out.is_empty() {
        return Err(CorpusError::Empty);
    }
    Ok(out)
}

const SYSTEM_TEMPLATE: &str = "System: Your task is to predict the property of the given molecule. \
You must write your response using the following strict XML format: <think>
Step-by-step reasoning with consideration on relevant attributes can be calculated using RDKit. \
For each attribute, provide its estimated value, and explain whether it promotes (improve) or \
inhibits (not improve) the target property.
</think>, <name>
List the attributes you used, each followed by \": promotes\" or \": inhibits\", separated by commas. \
For example:
attribute A: promotes, attribute B: promotes, attribute C: inhibits.
</name>, <answer>
The final answer (e.g., true/false or specific values) based on your overall reasoning.
</answer>. ";

/// Full system and user prompt for one query.
pub fn render_prompt(spec: &PromptSpec) -> String {
    format!(
        "{SYSTEM_TEMPLATE}User: The task is {}, the molecule is {}, and the property to be \
         considered is {}. Assistant:",
        spec.task, spec.smiles, spec.target_property
    )
}

/// Writes a well-formed response. Claims without a polarity are written as
/// bare names.
pub fn render_response(think: &str, claims: &[AttributeClaim], answer: Answer) -> String {
    let items: Vec<String> = claims
        .iter()
        .map(|c| match c.polarity {
            Some(p) => format!("{}: {}", c.raw_name, p.word()),
            None => c.raw_name.clone(),
        })
        .collect();
    format!(
        "<think>\n{think}\n</think>\n<name>\n{}\n</name>\n<answer>\n{}\n</answer>",
        items.join(", "),
        answer
    )
}

/// Whitespace-separated token count.
pub fn token_count(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Maps claims to their polarity bits in order. Claims without a polarity
/// are skipped.
pub fn claims_vector(claims: &[AttributeClaim]) -> Vec<u8> {
    claims
        .iter()
        .filter_map(|c| c.polarity.map(Polarity::bit))
        .collect()
}

struct Block<'a> {
    open: usize,
    close_end: usize,
    inner: &'a str,
    unique: bool,
}

fn find_block<'a>(text: &'a str, tag: &str) -> Option<Block<'a>> {
    let open_tag = format!("<{tag}>");
    let close_tag = format!("</{tag}>");
    let open = text.find(&open_tag)?;
    let body = open + open_tag.len();
    let close = body + text[body..].find(&close_tag)?;
    let unique = text.matches(&open_tag).count() == 1 && text.matches(&close_tag).count() == 1;
    Some(Block {
        open,
        close_end: close + close_tag.len(),
        inner: &text[body..close],
        unique,
    })
}

/// Parses the `<name>` block. `None` when any item is malformed.
pub fn parse_claims(inner: &str) -> Option<Vec<AttributeClaim>> {
    let body = inner.trim();
    let body = body.strip_suffix('.').unwrap_or(body);
    let items: Vec<&str> = body.split(',').map(str::trim).collect();
    let mut claims = Vec::with_capacity(items.len());
    for (k, item) in items.iter().enumerate() {
        if item.is_empty() {
            // a lone trailing separator or an empty block
            if k + 1 == items.len() {
                continue;
            }
            return None;
        }
        let claim = match item.rfind(':') {
            Some(colon) => {
                let name = item[..colon].trim();
                let polarity = Polarity::parse(item[colon + 1..].trim().trim_end_matches('.'))?;
                if name.is_empty() {
                    return None;
                }
                AttributeClaim {
                    raw_name: name.to_string(),
                    polarity: Some(polarity),
                }
            }
            None => AttributeClaim {
                raw_name: item.to_string(),
                polarity: None,
            },
        };
        claims.push(claim);
    }
    Some(claims)
}

/// Parses the `<answer>` block for the given task.
pub fn parse_answer(inner: &str, task: Task) -> Option<Answer> {
    let s = inner.trim();
    let s = s.strip_suffix('.').unwrap_or(s).trim();
    match task {
        Task::Classification => match s.to_ascii_lowercase().as_str() {
            "true" => Some(Answer::Bool(true)),
            "false" => Some(Answer::Bool(false)),
            _ => None,
        },
        Task::Regression => {
            let plain = !s.is_empty()
                && s.chars()
                    .all(|c| c.is_ascii_digit() || matches!(c, '+' | '-' | '.' | 'e' | 'E'));
            if !plain {
                return None;
            }
            s.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .map(Answer::Number)
        }
    }
}

/// Parses a response. Total: every input yields a value, failures show up
/// as absent fields and `format_ok = false`.
pub fn parse_response(text: &str, task: Task) -> ParsedResponse {
    let think = find_block(text, "think");
    let name = find_block(text, "name");
    let answer = find_block(text, "answer");

    let claims = name.as_ref().and_then(|b| parse_claims(b.inner));
    let parsed_answer = answer.as_ref().and_then(|b| parse_answer(b.inner, task));

    let format_ok = match (&think, &name, &answer) {
        (Some(t), Some(n), Some(a)) => {
            t.unique
                && n.unique
                && a.unique
                && t.close_end <= n.open
                && n.close_end <= a.open
                && claims.is_some()
                && parsed_answer.is_some()
        }
        _ => false,
    };

    ParsedResponse {
        think: think.map(|b| b.inner.trim().to_string()),
        claims,
        answer: parsed_answer,
        format_ok,
        token_count: token_count(text),
    }
}
