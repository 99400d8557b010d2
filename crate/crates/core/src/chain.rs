//! Reasoning-chain data model and the text parser that extracts structured
//! chains from raw model output.
//!
//! A chain is an ordered list of steps plus a final conclusion. The pairwise
//! metrics operate over the *statement sequence*: the steps followed by the
//! conclusion, so an n-hop chain yields n + 1 statements.

use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Provenance of a chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChainSource {
    Reference,
    Model,
    Synthetic,
}

/// One reasoning step; `index` is 1-based and contiguous within its chain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReasoningStep {
    pub index: usize,
    pub text: String,
}

/// An ordered reasoning chain: steps followed by a conclusion.
///
/// Invariants (enforced by [`ReasoningChain::new`]):
/// - at least one step, every step text non-empty after trimming;
/// - `steps.len() == hops`;
/// - conclusion non-empty after trimming.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReasoningChain {
    pub id: String,
    pub steps: Vec<ReasoningStep>,
    pub conclusion: String,
    pub source: ChainSource,
    pub hops: usize,
}

/// Construction errors for chains and chain pairs.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChainError {
    #[error("chain must have at least one step")]
    NoSteps,
    #[error("step {index} is empty after trimming")]
    EmptyStep { index: usize },
    #[error("conclusion is empty after trimming")]
    EmptyConclusion,
    #[error("statement counts differ: reference {reference}, candidate {candidate}")]
    LengthMismatch { reference: usize, candidate: usize },
}

impl ReasoningChain {
    /// Builds a chain from step texts, trimming each and validating the
    /// invariants. `hops` is set to the step count.
    pub fn new<S: Into<String>>(
        id: S,
        step_texts: Vec<String>,
        conclusion: String,
        source: ChainSource,
    ) -> Result<Self, ChainError> {
        if step_texts.is_empty() {
            return Err(ChainError::NoSteps);
        }
        let mut steps = Vec::with_capacity(step_texts.len());
        for (i, text) in step_texts.into_iter().enumerate() {
            let text = text.trim().to_string();
            if text.is_empty() {
                return Err(ChainError::EmptyStep { index: i + 1 });
            }
            steps.push(ReasoningStep { index: i + 1, text });
        }
        let conclusion = conclusion.trim().to_string();
        if conclusion.is_empty() {
            return Err(ChainError::EmptyConclusion);
        }
        let hops = steps.len();
        Ok(Self {
            id: id.into(),
            steps,
            conclusion,
            source,
            hops,
        })
    }

    pub fn with_id<S: Into<String>>(mut self, id: S) -> Self {
        self.id = id.into();
        self
    }

    pub fn with_source(mut self, source: ChainSource) -> Self {
        self.source = source;
        self
    }

    /// Steps followed by the conclusion; length is always `hops + 1`.
    pub fn statement_sequence(&self) -> Vec<&str> {
        self.statements(true)
    }

    /// Statement list used by the entropy pipeline. With
    /// `include_conclusion` off, only the step texts are returned.
    pub fn statements(&self, include_conclusion: bool) -> Vec<&str> {
        let mut out: Vec<&str> = self.steps.iter().map(|s| s.text.as_str()).collect();
        if include_conclusion {
            out.push(self.conclusion.as_str());
        }
        out
    }

    pub fn step_texts(&self) -> impl Iterator<Item = &str> + '_ {
        self.steps.iter().map(|s| s.text.as_str())
    }

    /// Text of the final reasoning step (the chain invariant guarantees one).
    pub fn last_step(&self) -> &str {
        self.steps
            .last()
            .map(|s| s.text.as_str())
            .expect("chain invariant: at least one step")
    }

    /// Renders the chain in the BECAUSE/THEREFORE template. Parsing this text
    /// back with [`parse_chain_text`] recovers the same statements.
    pub fn to_template_text(&self) -> String {
        let mut out = String::from("BECAUSE:");
        for step in &self.steps {
            out.push_str(&format!(" {}: {}", step.index, step.text));
        }
        out.push_str(&format!(" THEREFORE: {}", self.conclusion));
        out
    }
}

/// A reference/candidate pair with equal statement counts, as required for
/// matrix comparison. Unequal lengths are a hard error, never truncated.
#[derive(Debug, Clone)]
pub struct ChainPair {
    reference: ReasoningChain,
    candidate: ReasoningChain,
}

impl ChainPair {
    pub fn new(reference: ReasoningChain, candidate: ReasoningChain) -> Result<Self, ChainError> {
        let r = reference.statement_sequence().len();
        let c = candidate.statement_sequence().len();
        if r != c {
            return Err(ChainError::LengthMismatch {
                reference: r,
                candidate: c,
            });
        }
        Ok(Self {
            reference,
            candidate,
        })
    }

    pub fn reference(&self) -> &ReasoningChain {
        &self.reference
    }

    pub fn candidate(&self) -> &ReasoningChain {
        &self.candidate
    }
}

/// Parse failures for raw model output. Callers treat a failed parse as an
/// invalid chain and exclude it from averaging rather than aborting a run.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("no BECAUSE/THEREFORE markers found")]
    MissingMarker,
    #[error("expected {expected} reasoning steps, found {found}")]
    StepCountMismatch { expected: usize, found: usize },
    #[error("THEREFORE section has no conclusion text")]
    EmptyConclusion,
}

fn because_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)\bbecause\b\s*:?").unwrap())
}

fn therefore_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)\btherefore\b\s*:?").unwrap())
}

fn step_marker_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    // `Step 1:`, `1:` and `1.` prefixes; the digit match is filtered against
    // the expected sequence number, so ordinary numbers in prose do not split
    // steps unless they collide with the next expected marker.
    RE.get_or_init(|| Regex::new(r"(?i)\b(?:step\s+)?(\d{1,4})\s*[:.]\s*").unwrap())
}

fn block_end_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)\n\s*\n|\bbecause\b\s*:|\btherefore\b\s*:|\bquestion\s*:").unwrap())
}

/// Extracts a structured chain from raw model output.
///
/// Locates the BECAUSE section, pulls out numbered steps (`1:`, `Step 1:`
/// and `1.` prefixes, case-insensitive markers), and takes the THEREFORE
/// section as the conclusion. Anything after the first complete THEREFORE
/// block is ignored. The parse fails unless exactly `expected_hops` steps
/// are found.
pub fn parse_chain_text(raw: &str, expected_hops: usize) -> Result<ReasoningChain, ParseError> {
    assert!(expected_hops >= 1, "expected_hops must be positive");

    let because = because_re().find(raw).ok_or(ParseError::MissingMarker)?;
    let after_because = &raw[because.end()..];
    let therefore = therefore_re()
        .find(after_because)
        .ok_or(ParseError::MissingMarker)?;

    let steps_section = &after_because[..therefore.start()];
    let steps = extract_steps(steps_section);
    if steps.len() != expected_hops {
        return Err(ParseError::StepCountMismatch {
            expected: expected_hops,
            found: steps.len(),
        });
    }

    let tail = &after_because[therefore.end()..];
    let conclusion_end = block_end_re().find(tail).map_or(tail.len(), |m| m.start());
    let conclusion = tail[..conclusion_end].trim();
    if conclusion.is_empty() {
        return Err(ParseError::EmptyConclusion);
    }

    ReasoningChain::new("", steps, conclusion.to_string(), ChainSource::Model).map_err(|e| match e {
        ChainError::EmptyConclusion => ParseError::EmptyConclusion,
        _ => ParseError::StepCountMismatch {
            expected: expected_hops,
            found: 0,
        },
    })
}

/// Walks the BECAUSE section collecting step texts in marker order. A marker
/// only opens a new step when its number is the next one expected, so digits
/// inside step text do not fragment the step.
fn extract_steps(section: &str) -> Vec<String> {
    let mut texts: Vec<String> = Vec::new();
    let mut current_start: Option<usize> = None;
    let mut expected: usize = 1;

    for caps in step_marker_re().captures_iter(section) {
        let number: usize = match caps[1].parse() {
            Ok(n) => n,
            Err(_) => continue,
        };
        if number != expected {
            continue;
        }
        let whole = caps.get(0).unwrap();
        if let Some(start) = current_start {
            let text = section[start..whole.start()].trim().to_string();
            if !text.is_empty() {
                texts.push(text);
            }
        }
        current_start = Some(whole.end());
        expected += 1;
    }
    if let Some(start) = current_start {
        let text = section[start..].trim().to_string();
        if !text.is_empty() {
            texts.push(text);
        }
    }
    texts
}

/// Pulls a multiple-choice answer letter out of raw model text, looking for
/// `the answer is X`, `answer: X`, or a leading `(X)` option reference.
/// Used by the majority-vote comparison baseline.
pub fn extract_answer_letter(raw: &str) -> Option<char> {
    static RE: OnceLock<Regex> = OnceLock::new();
    let re = RE.get_or_init(|| {
        Regex::new(r"(?i)\bthe answer is\s*:?\s*\(?([A-Z])\)?|\banswer\s*:\s*\(?([A-Z])\)?|\(([A-Z])\)").unwrap()
    });
    let caps = re.captures(raw)?;
    caps.get(1)
        .or_else(|| caps.get(2))
        .or_else(|| caps.get(3))
        .map(|m| m.as_str().chars().next().unwrap().to_ascii_uppercase())
}
