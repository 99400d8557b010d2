//! JSONL corpus loading and writing.
//!
//! One record per line. Raw candidates are parsed into chains at load time;
//! parse failures stay attached to the record as invalid candidates so the
//! scoring layer can exclude and count them. Lines that do not satisfy the
//! schema go to a rejects report with their line number — never silently
//! dropped.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain::{parse_chain_text, ChainSource, ParseError, ReasoningChain};

/// A candidate chain for one record: either successfully structured or kept
/// as raw text with its parse failure.
#[derive(Debug, Clone)]
pub struct Candidate {
    raw: Option<String>,
    outcome: Result<ReasoningChain, ParseError>,
}

impl Candidate {
    pub fn from_chain(chain: ReasoningChain) -> Self {
        Self {
            raw: None,
            outcome: Ok(chain),
        }
    }

    /// Parses raw model text against the record's expected hop count.
    pub fn from_raw(raw: String, expected_hops: usize) -> Self {
        let outcome = parse_chain_text(&raw, expected_hops);
        Self {
            raw: Some(raw),
            outcome,
        }
    }

    pub fn with_raw(mut self, raw: String) -> Self {
        self.raw = Some(raw);
        self
    }

    pub fn chain(&self) -> Option<&ReasoningChain> {
        self.outcome.as_ref().ok()
    }

    pub fn parse_error(&self) -> Option<&ParseError> {
        self.outcome.as_ref().err()
    }

    pub fn raw(&self) -> Option<&str> {
        self.raw.as_deref()
    }

    pub fn is_valid(&self) -> bool {
        self.outcome.is_ok()
    }

    /// Best text for answer-letter extraction: the raw completion when we
    /// have it, otherwise the parsed conclusion.
    pub fn answer_text(&self) -> Option<&str> {
        self.raw
            .as_deref()
            .or_else(|| self.chain().map(|c| c.conclusion.as_str()))
    }
}

/// One evaluation record: a question, its reference chain, and candidates.
#[derive(Debug, Clone)]
pub struct CorpusRecord {
    pub id: String,
    pub question: String,
    pub context: String,
    pub options: Vec<String>,
    pub answer: String,
    pub reference: ReasoningChain,
    pub candidates: Vec<Candidate>,
}

#[derive(Debug, Clone, Default)]
pub struct Corpus {
    pub records: Vec<CorpusRecord>,
}

impl Corpus {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// A line that failed schema validation, with the 1-based line number.
#[derive(Debug, Clone, Serialize)]
pub struct RejectedLine {
    pub line: usize,
    pub reason: String,
}

/// Result of loading a corpus file: the usable records plus the rejects.
#[derive(Debug)]
pub struct CorpusLoad {
    pub corpus: Corpus,
    pub rejects: Vec<RejectedLine>,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read corpus: {0}")]
    Io(#[from] std::io::Error),
}

// Wire schema. `context` is optional; everything else is required.
#[derive(Debug, Serialize, Deserialize)]
struct RecordSchema {
    id: String,
    question: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    context: String,
    options: Vec<String>,
    answer: String,
    reference: ChainSchema,
    candidates: Vec<CandidateSchema>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ChainSchema {
    steps: Vec<String>,
    conclusion: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum CandidateSchema {
    Raw { raw: String },
    Structured { steps: Vec<String>, conclusion: String },
}

/// Loads a JSONL corpus. Unreadable files are an error; malformed lines are
/// collected into [`CorpusLoad::rejects`]. Structured candidates whose
/// statement count differs from the reference are schema rejects, so every
/// loaded record satisfies the pair-length invariant. Raw candidates that
/// fail chain parsing are kept as invalid candidates, not rejects.
pub fn load_corpus<P: AsRef<Path>>(path: P) -> Result<CorpusLoad, CorpusError> {
    let file = File::open(path)?;
    let reader = BufReader::new(file);

    let mut records = Vec::new();
    let mut rejects = Vec::new();

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match parse_record_line(&line) {
            Ok(record) => records.push(record),
            Err(reason) => rejects.push(RejectedLine {
                line: line_no,
                reason,
            }),
        }
    }

    Ok(CorpusLoad {
        corpus: Corpus { records },
        rejects,
    })
}

fn parse_record_line(line: &str) -> Result<CorpusRecord, String> {
    let schema: RecordSchema = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let reference = ReasoningChain::new(
        format!("{}/ref", schema.id),
        schema.reference.steps,
        schema.reference.conclusion,
        ChainSource::Reference,
    )
    .map_err(|e| format!("reference: {e}"))?;

    let expected_hops = reference.hops;
    let mut candidates = Vec::with_capacity(schema.candidates.len());
    for (k, cand) in schema.candidates.into_iter().enumerate() {
        match cand {
            CandidateSchema::Raw { raw } => {
                let candidate = Candidate::from_raw(raw, expected_hops);
                let candidate = match candidate.outcome {
                    Ok(chain) => Candidate {
                        outcome: Ok(chain.with_id(format!("{}/cand{k}", schema.id))),
                        ..candidate
                    },
                    Err(_) => candidate,
                };
                candidates.push(candidate);
            }
            CandidateSchema::Structured { steps, conclusion } => {
                let chain = ReasoningChain::new(
                    format!("{}/cand{k}", schema.id),
                    steps,
                    conclusion,
                    ChainSource::Model,
                )
                .map_err(|e| format!("candidate {k}: {e}"))?;
                if chain.statement_sequence().len() != reference.statement_sequence().len() {
                    return Err(format!(
                        "candidate {k}: statement count {} does not match reference {}",
                        chain.statement_sequence().len(),
                        reference.statement_sequence().len()
                    ));
                }
                candidates.push(Candidate::from_chain(chain));
            }
        }
    }

    Ok(CorpusRecord {
        id: schema.id,
        question: schema.question,
        context: schema.context,
        options: schema.options,
        answer: schema.answer,
        reference,
        candidates,
    })
}

/// Serializes a corpus back to JSONL. Parsed candidates are written
/// structurally unless `raw_candidates` is set and the raw text is known.
pub fn write_corpus<W: Write>(corpus: &Corpus, raw_candidates: bool, out: W) -> std::io::Result<()> {
    let mut out = BufWriter::new(out);
    for record in &corpus.records {
        let candidates = record
            .candidates
            .iter()
            .map(|c| match (raw_candidates, c.raw(), c.chain()) {
                (true, Some(raw), _) | (false, Some(raw), None) => CandidateSchema::Raw {
                    raw: raw.to_string(),
                },
                (_, _, Some(chain)) => CandidateSchema::Structured {
                    steps: chain.step_texts().map(str::to_string).collect(),
                    conclusion: chain.conclusion.clone(),
                },
                (_, None, None) => unreachable!("candidate without raw text or chain"),
            })
            .collect();
        let schema = RecordSchema {
            id: record.id.clone(),
            question: record.question.clone(),
            context: record.context.clone(),
            options: record.options.clone(),
            answer: record.answer.clone(),
            reference: ChainSchema {
                steps: record.reference.step_texts().map(str::to_string).collect(),
                conclusion: record.reference.conclusion.clone(),
            },
            candidates,
        };
        serde_json::to_writer(&mut out, &schema)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn write_corpus_file<P: AsRef<Path>>(
    corpus: &Corpus,
    raw_candidates: bool,
    path: P,
) -> std::io::Result<()> {
    write_corpus(corpus, raw_candidates, File::create(path)?)
}
