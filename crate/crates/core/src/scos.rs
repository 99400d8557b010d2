//! Semantic consistency optimization sampling.
//!
//! Given k candidate chains for a question, score each with a cheap
//! consistency metric — mean adjacent-step embedding distance (TS mode) or
//! redundancy count (RR mode) — select the minimizer, and report its
//! alignment against the reference. Unparseable candidates get τ = +∞ so a
//! bad sample never aborts the record; ties break toward the lowest index.

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::chain::{extract_answer_letter, ChainPair, ParseError, ReasoningChain};
use crate::corpus::{Candidate, CorpusRecord};
use crate::entropy::{score_pair, AlignmentReport, EntropyError, ScoringOptions};
use crate::llm::{sample, GenerationError, Generator};
use crate::llm::{build_prompt, PromptError, PromptSpec};
use crate::semantic::{BackendError, Embedder, RelationClassifier};

/// Tie-breaking policy for equal τ values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TieBreak {
    /// Earliest sample wins; deterministic and reproducible.
    #[default]
    LowestIndex,
}

/// Selection metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScosMode {
    ThematicShift,
    RedundantReasoning,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScosConfig {
    pub k: usize,
    pub mode: ScosMode,
    pub tie_break: TieBreak,
    pub temperature: f64,
    /// Reveal the gold answer in generation prompts (off by default).
    pub reveal_answer: bool,
}

impl ScosConfig {
    pub fn new(mode: ScosMode) -> Self {
        Self {
            k: 10,
            mode,
            tie_break: TieBreak::LowestIndex,
            temperature: 0.7,
            reveal_answer: false,
        }
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.k = k;
        self
    }

    pub fn with_temperature(mut self, temperature: f64) -> Self {
        self.temperature = temperature;
        self
    }

    pub fn with_reveal_answer(mut self, reveal: bool) -> Self {
        self.reveal_answer = reveal;
        self
    }

    /// Selection over fewer than two candidates is vacuous.
    pub fn validate(&self) -> Result<(), ScosError> {
        if self.k < 2 {
            return Err(ScosError::InvalidK { k: self.k });
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum ScosError {
    #[error("k must be at least 2, got {k}")]
    InvalidK { k: usize },
    #[error("chain has {steps} steps; thematic-shift scoring needs at least 2")]
    DegenerateChain { steps: usize },
    #[error("all {count} candidates failed to parse")]
    AllInvalid { count: usize },
    #[error("record `{id}` has {count} candidates; SCOS needs at least 2")]
    TooFewCandidates { id: String, count: usize },
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Generation(#[from] GenerationError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Entropy(#[from] EntropyError),
}

fn serialize_tau<S: Serializer>(tau: &f64, s: S) -> Result<S::Ok, S::Error> {
    if tau.is_finite() {
        s.serialize_f64(*tau)
    } else {
        s.serialize_none()
    }
}

/// One scored candidate. Unparseable candidates keep τ = +∞ (serialized as
/// null) and are never selected unless every candidate failed.
#[derive(Debug, Clone, Serialize)]
pub struct CandidateScore {
    pub index: usize,
    #[serde(serialize_with = "serialize_tau")]
    pub tau: f64,
    pub parse_ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parse_error: Option<String>,
    pub chain: Option<ReasoningChain>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub raw: Option<String>,
}

impl CandidateScore {
    /// Text searched for an answer letter: the raw completion when known,
    /// else the parsed conclusion.
    pub fn answer_text(&self) -> Option<&str> {
        self.raw
            .as_deref()
            .or_else(|| self.chain.as_ref().map(|c| c.conclusion.as_str()))
    }
}

/// Outcome for one record: the winning chain, its τ, its alignment, and the
/// full candidate audit trail.
#[derive(Debug, Clone, Serialize)]
pub struct ScosResult {
    pub record_id: String,
    pub selected_index: usize,
    pub tau_star: f64,
    pub alignment: AlignmentReport,
    pub selected: ReasoningChain,
    pub candidates: Vec<CandidateScore>,
}

/// τ for TS mode: 1 minus the mean cosine over adjacent step embeddings.
pub fn score_candidate_ts(
    chain: &ReasoningChain,
    embedder: &dyn Embedder,
) -> Result<f64, ScosError> {
    if chain.steps.len() < 2 {
        return Err(ScosError::DegenerateChain {
            steps: chain.steps.len(),
        });
    }
    let embeddings = chain
        .step_texts()
        .map(|t| embedder.embed(t))
        .collect::<Result<Vec<_>, _>>()?;
    let cosines: Vec<f64> = embeddings.windows(2).map(|w| w[0].cosine(&w[1])).collect();
    Ok(1.0 - cosines.iter().sum::<f64>() / cosines.len() as f64)
}

/// τ for RR mode: the redundancy count. No backend involved.
pub fn score_candidate_rr(chain: &ReasoningChain) -> f64 {
    crate::detect::detect_redundancy(chain) as f64
}

/// Scores a candidate list under the configured mode. Parse failures become
/// τ = +∞ entries rather than errors.
pub fn score_candidates(
    candidates: &[Candidate],
    mode: ScosMode,
    embedder: &dyn Embedder,
) -> Result<Vec<CandidateScore>, ScosError> {
    candidates
        .iter()
        .enumerate()
        .map(|(index, candidate)| match candidate.chain() {
            Some(chain) => {
                let tau = match mode {
                    ScosMode::ThematicShift => score_candidate_ts(chain, embedder)?,
                    ScosMode::RedundantReasoning => score_candidate_rr(chain),
                };
                Ok(CandidateScore {
                    index,
                    tau,
                    parse_ok: true,
                    parse_error: None,
                    chain: Some(chain.clone()),
                    raw: candidate.raw().map(str::to_string),
                })
            }
            None => Ok(CandidateScore {
                index,
                tau: f64::INFINITY,
                parse_ok: false,
                parse_error: candidate.parse_error().map(ParseError::to_string),
                chain: None,
                raw: candidate.raw().map(str::to_string),
            }),
        })
        .collect()
}

/// argmin over parse-ok candidates; ties break to the lowest index.
pub fn select_best(candidates: &[CandidateScore]) -> Result<&CandidateScore, ScosError> {
    candidates
        .iter()
        .filter(|c| c.parse_ok && c.tau.is_finite())
        .min_by(|a, b| a.tau.total_cmp(&b.tau).then(a.index.cmp(&b.index)))
        .ok_or(ScosError::AllInvalid {
            count: candidates.len(),
        })
}

/// Full SCOS pass over one record.
///
/// With a generator, k completions are sampled for the record's question and
/// parsed against the reference depth. Without one, the record's own
/// candidates are used (at least two required). The selected chain's
/// alignment uses the same scoring options as standalone scoring so results
/// stay comparable.
pub fn run_scos_record(
    record: &CorpusRecord,
    generator: Option<&dyn Generator>,
    classifier: &dyn RelationClassifier,
    embedder: &dyn Embedder,
    config: &ScosConfig,
    scoring: &ScoringOptions,
) -> Result<ScosResult, ScosError> {
    config.validate()?;
    if config.mode == ScosMode::ThematicShift && record.reference.hops < 2 {
        return Err(ScosError::DegenerateChain {
            steps: record.reference.hops,
        });
    }

    let candidates: Vec<Candidate> = match generator {
        Some(generator) => {
            let mut spec = PromptSpec::from_record(record);
            if config.reveal_answer {
                spec = spec.reveal_answer(record.answer.clone());
            }
            let prompt = build_prompt(&spec)?;
            sample(generator, &prompt, config.k, config.temperature)?
                .into_iter()
                .enumerate()
                .map(|(i, raw)| {
                    let candidate = Candidate::from_raw(raw, record.reference.hops);
                    match candidate.chain().cloned() {
                        Some(chain) => Candidate::from_chain(
                            chain.with_id(format!("{}/sample{i}", record.id)),
                        )
                        .with_raw(candidate.raw().unwrap_or_default().to_string()),
                        None => candidate,
                    }
                })
                .collect()
        }
        None => {
            if record.candidates.len() < 2 {
                return Err(ScosError::TooFewCandidates {
                    id: record.id.clone(),
                    count: record.candidates.len(),
                });
            }
            record.candidates.clone()
        }
    };

    let scored = score_candidates(&candidates, config.mode, embedder)?;
    let best = select_best(&scored)?;
    let selected = best.chain.clone().expect("selected candidate is parse-ok");
    let pair = ChainPair::new(record.reference.clone(), selected.clone())
        .map_err(|_| EntropyError::DimensionMismatch {
            left: record.reference.statement_sequence().len(),
            right: selected.statement_sequence().len(),
        })?;
    let alignment = score_pair(&pair, classifier, scoring)?;

    Ok(ScosResult {
        record_id: record.id.clone(),
        selected_index: best.index,
        tau_star: best.tau,
        alignment,
        selected,
        candidates: scored,
    })
}

/// Index chosen by the majority-vote comparison baseline: extract an answer
/// letter per candidate, take the most frequent letter (ties toward the
/// alphabetically lowest), and return the first valid candidate carrying it.
/// Falls back to the first valid candidate when no letters are found.
pub fn majority_baseline_index(candidates: &[CandidateScore]) -> Option<usize> {
    let letters: Vec<Option<char>> = candidates
        .iter()
        .map(|c| c.answer_text().and_then(extract_answer_letter))
        .collect();
    let mut counts: std::collections::BTreeMap<char, usize> = std::collections::BTreeMap::new();
    for letter in letters.iter().flatten() {
        *counts.entry(*letter).or_insert(0) += 1;
    }
    let majority = counts
        .into_iter()
        .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
        .map(|(letter, _)| letter);
    let first_valid = candidates.iter().position(|c| c.parse_ok);
    match majority {
        Some(letter) => letters
            .iter()
            .enumerate()
            .find(|(i, l)| **l == Some(letter) && candidates[*i].parse_ok)
            .map(|(i, _)| i)
            .or(first_valid),
        None => first_valid,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::ChainSource;
    use crate::semantic::{EmbeddingVector, LexicalStubClassifier, StubEmbedder};

    fn chain(steps: &[&str], conclusion: &str) -> ReasoningChain {
        ReasoningChain::new(
            "t",
            steps.iter().map(|s| s.to_string()).collect(),
            conclusion.to_string(),
            ChainSource::Synthetic,
        )
        .unwrap()
    }

    struct AngleEmbedder;

    impl Embedder for AngleEmbedder {
        fn backend_id(&self) -> &str {
            "angles"
        }

        fn embed(&self, text: &str) -> Result<EmbeddingVector, BackendError> {
            // Texts name an angle in degrees; cosines follow directly.
            let degrees: f64 = text.trim().parse().unwrap();
            let r = degrees.to_radians();
            EmbeddingVector::unit(vec![r.cos(), r.sin()])
        }
    }

    #[test]
    fn ts_score_is_one_minus_mean_cosine() {
        // cos(0°,36.8699°) ≈ 0.8, cos(36.8699°,90°) ≈ 0.6 → τ ≈ 0.3.
        let a = 36.86989764584402_f64;
        let c = chain(&["0", &a.to_string(), "90"], "end");
        let tau = score_candidate_ts(&c, &AngleEmbedder).unwrap();
        assert!((tau - 0.3).abs() < 1e-9, "tau = {tau}");

        let identical = chain(&["10", "10", "10"], "end");
        assert!(score_candidate_ts(&identical, &AngleEmbedder).unwrap().abs() < 1e-12);

        let orthogonal = chain(&["0", "90"], "end");
        assert!((score_candidate_ts(&orthogonal, &AngleEmbedder).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ts_requires_two_steps() {
        let c = chain(&["0"], "end");
        assert!(matches!(
            score_candidate_ts(&c, &AngleEmbedder),
            Err(ScosError::DegenerateChain { steps: 1 })
        ));
    }

    #[test]
    fn rr_score_counts_duplicates() {
        assert_eq!(score_candidate_rr(&chain(&["A", "A", "B"], "end")), 1.0);
        assert_eq!(score_candidate_rr(&chain(&["A", "B", "C"], "end")), 0.0);
        assert_eq!(score_candidate_rr(&chain(&["A", "A", "A"], "end")), 2.0);
    }

    fn scored(taus: &[f64]) -> Vec<CandidateScore> {
        taus.iter()
            .enumerate()
            .map(|(index, &tau)| CandidateScore {
                index,
                tau,
                parse_ok: tau.is_finite(),
                parse_error: None,
                chain: tau.is_finite().then(|| chain(&["a"], "b")),
                raw: None,
            })
            .collect()
    }

    #[test]
    fn selection_is_argmin_with_lowest_index_ties() {
        assert_eq!(select_best(&scored(&[0.3, 0.1, 0.5])).unwrap().index, 1);
        assert_eq!(select_best(&scored(&[0.2, 0.2])).unwrap().index, 0);
        assert_eq!(
            select_best(&scored(&[f64::INFINITY, 0.4])).unwrap().index,
            1
        );
        assert!(matches!(
            select_best(&scored(&[f64::INFINITY, f64::INFINITY])),
            Err(ScosError::AllInvalid { count: 2 })
        ));
    }

    /// Embedder that panics, proving RR mode never touches embeddings.
    struct PanickingEmbedder;

    impl Embedder for PanickingEmbedder {
        fn backend_id(&self) -> &str {
            "panicking"
        }

        fn embed(&self, _text: &str) -> Result<EmbeddingVector, BackendError> {
            panic!("RR mode must not consult the embedding backend");
        }
    }

    #[test]
    fn rr_mode_never_embeds() {
        let candidates = vec![
            Candidate::from_chain(chain(&["a", "a", "b"], "done")),
            Candidate::from_chain(chain(&["a", "b", "c"], "done")),
        ];
        let scores =
            score_candidates(&candidates, ScosMode::RedundantReasoning, &PanickingEmbedder)
                .unwrap();
        assert_eq!(scores[0].tau, 1.0);
        assert_eq!(scores[1].tau, 0.0);
    }

    #[test]
    fn clean_chain_wins_under_rr() {
        let record = CorpusRecord {
            id: "q0".into(),
            question: "q?".into(),
            context: String::new(),
            options: vec![],
            answer: "A".into(),
            reference: chain(&["r1 a b", "r2 a b", "r3 a b"], "done x y"),
            candidates: vec![
                Candidate::from_chain(chain(&["s1 a b", "s1 a b", "s3 a b"], "done x y")),
                Candidate::from_chain(chain(&["s1 a b", "s2 a b", "s3 a b"], "done x y")),
                Candidate::from_chain(chain(&["s2 a b", "s2 a b", "s3 a b"], "done x y")),
            ],
        };
        let result = run_scos_record(
            &record,
            None,
            &LexicalStubClassifier,
            &StubEmbedder,
            &ScosConfig::new(ScosMode::RedundantReasoning),
            &ScoringOptions::default(),
        )
        .unwrap();
        assert_eq!(result.selected_index, 1);
        assert_eq!(result.tau_star, 0.0);
        assert!(result.alignment.valid);
    }

    #[test]
    fn selection_content_is_order_independent_for_unique_taus() {
        let chains = [
            chain(&["a x", "a x", "b x"], "done"),
            chain(&["a x", "b x", "c x"], "done"),
            chain(&["a x", "a x", "a x"], "done"),
        ];
        let forward: Vec<Candidate> = chains.iter().cloned().map(Candidate::from_chain).collect();
        let reversed: Vec<Candidate> = chains.iter().rev().cloned().map(Candidate::from_chain).collect();
        let best_of = |candidates: &[Candidate]| {
            let scored =
                score_candidates(candidates, ScosMode::RedundantReasoning, &StubEmbedder).unwrap();
            select_best(&scored).unwrap().chain.clone().unwrap()
        };
        let a = best_of(&forward);
        let b = best_of(&reversed);
        assert_eq!(a.statement_sequence(), b.statement_sequence());
    }

    #[test]
    fn k_must_be_at_least_two() {
        let config = ScosConfig::new(ScosMode::RedundantReasoning).with_k(1);
        assert!(matches!(config.validate(), Err(ScosError::InvalidK { k: 1 })));
    }

    #[test]
    fn majority_baseline_votes_on_letters() {
        let mk = |index: usize, letter: char| CandidateScore {
            index,
            tau: 0.0,
            parse_ok: true,
            parse_error: None,
            chain: Some(chain(&["a"], "done")),
            raw: Some(format!("Answer: The answer is {letter}. BECAUSE...")),
        };
        let candidates = vec![mk(0, 'B'), mk(1, 'A'), mk(2, 'B')];
        assert_eq!(majority_baseline_index(&candidates), Some(0));

        let no_letters = scored(&[0.1, 0.2]);
        assert_eq!(majority_baseline_index(&no_letters), Some(0));
        assert_eq!(majority_baseline_index(&[]), None);
    }
}
