//! Synthetic chains, error injections, corpora, and regression datasets.
//!
//! Fixtures are built from frozen word pools chosen so the stub backends
//! behave predictably: steps within a topic share five base tokens (adjacent
//! cosines stay well above the shift threshold), the conclusion overlaps the
//! steps just enough to stay neutral under the relation stub, and the
//! off-topic lexicon shares no token with any topic. These are fixtures for
//! exercising the formulas, not attempts at realistic prose.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain::{ChainSource, ReasoningChain};
use crate::corpus::{Candidate, Corpus, CorpusRecord};
use crate::decomp::DecompositionSample;
use crate::llm::{build_prompt, prompt_hash, GenerationTranscript, PromptSpec};

struct Topic {
    base: [&'static str; 5],
    unique: [&'static str; 8],
    conclusion: [&'static str; 4],
}

const TOPICS: [Topic; 8] = [
    Topic {
        base: ["mineral", "lattice", "absorbs", "thermal", "energy"],
        unique: ["quartz", "feldspar", "mica", "basalt", "granite", "shale", "gypsum", "olivine"],
        conclusion: ["crystal", "structure", "expands", "steadily"],
    },
    Topic {
        base: ["circuit", "current", "flows", "through", "conductor"],
        unique: ["resistor", "capacitor", "inductor", "diode", "transistor", "relay", "fuse", "solenoid"],
        conclusion: ["voltage", "drop", "rises", "measurably"],
    },
    Topic {
        base: ["leaf", "captures", "sunlight", "during", "photosynthesis"],
        unique: ["chlorophyll", "stomata", "xylem", "phloem", "cuticle", "mesophyll", "chloroplast", "epidermis"],
        conclusion: ["glucose", "production", "increases", "daily"],
    },
    Topic {
        base: ["warm", "air", "masses", "ascend", "quickly"],
        unique: ["cumulus", "stratus", "cirrus", "nimbus", "monsoon", "squall", "drizzle", "sleet"],
        conclusion: ["rainfall", "totals", "climb", "sharply"],
    },
    Topic {
        base: ["tidal", "water", "moves", "along", "coastline"],
        unique: ["estuary", "lagoon", "reef", "atoll", "seamount", "trench", "gyre", "upwelling"],
        conclusion: ["salinity", "level", "shifts", "gradually"],
    },
    Topic {
        base: ["orbiting", "bodies", "follow", "elliptical", "paths"],
        unique: ["perihelion", "aphelion", "equinox", "solstice", "parallax", "occultation", "conjunction", "libration"],
        conclusion: ["luminosity", "reading", "brightens", "visibly"],
    },
    Topic {
        base: ["reactive", "compounds", "exchange", "electron", "pairs"],
        unique: ["catalyst", "reagent", "solvent", "precipitate", "titration", "isomer", "polymer", "monomer"],
        conclusion: ["acidity", "value", "falls", "predictably"],
    },
    Topic {
        base: ["tectonic", "plates", "grind", "past", "boundaries"],
        unique: ["magma", "fault", "ridge", "subduction", "epicenter", "caldera", "fissure", "strata"],
        conclusion: ["seismic", "activity", "intensifies", "locally"],
    },
];

/// Sentences with zero token overlap against every topic pool.
pub const OFF_TOPIC_LEXICON: [&str; 5] = [
    "Violin sonata crescendo echoes softly tonight.",
    "Saffron dumplings simmer beside copper kettles.",
    "Tapestry weavers braid crimson silk ribbons.",
    "Marble statues gaze across quiet courtyards.",
    "Jazz trumpeter improvises beneath neon awnings.",
];

/// Deterministic clean chain: distinct coherent steps, conclusion neutral
/// towards the last step under the stub backends.
pub fn clean_chain(topic_index: usize, variant: u64, hops: usize) -> ReasoningChain {
    assert!(hops >= 1, "hops must be positive");
    let topic = &TOPICS[topic_index % TOPICS.len()];
    let steps: Vec<String> = (0..hops)
        .map(|i| {
            let unique = topic.unique[(variant as usize + i) % topic.unique.len()];
            format!("The {unique} {}.", topic.base.join(" "))
        })
        .collect();
    let conclusion = format!("The {} {}.", topic.base[0], topic.conclusion.join(" "));
    ReasoningChain::new(
        format!("synth-t{topic_index}-v{variant}-h{hops}"),
        steps,
        conclusion,
        ChainSource::Synthetic,
    )
    .expect("frozen pools always build valid chains")
}

/// The four error-injection kinds, mirroring the error taxonomy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InjectionKind {
    /// Copy the step at `position` directly after itself.
    Duplicate,
    /// Replace the step at `position` with a zero-overlap lexicon sentence.
    OffTopicStep,
    /// Negate the conclusion so the last step contradicts it.
    ContradictConclusion,
    /// Set the conclusion equal to the last step.
    SwapConclusionEntailment,
}

/// Injection request. Generation is a pure function of (base chain, spec):
/// `seed` only selects the lexicon sentence for off-topic injections.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InjectionSpec {
    pub kind: InjectionKind,
    /// 1-based step position; must be within the chain even for the
    /// conclusion-level kinds.
    pub position: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InjectError {
    #[error("position {position} out of range for a {len}-step chain")]
    PositionOutOfRange { position: usize, len: usize },
}

/// Applies one injection to a clean base, producing a chain that flips
/// exactly the targeted detector.
pub fn inject(base: &ReasoningChain, spec: &InjectionSpec) -> Result<ReasoningChain, InjectError> {
    let len = base.steps.len();
    if spec.position == 0 || spec.position > len {
        return Err(InjectError::PositionOutOfRange {
            position: spec.position,
            len,
        });
    }
    let mut steps: Vec<String> = base.step_texts().map(str::to_string).collect();
    let mut conclusion = base.conclusion.clone();
    match spec.kind {
        InjectionKind::Duplicate => {
            let copy = steps[spec.position - 1].clone();
            steps.insert(spec.position, copy);
        }
        InjectionKind::OffTopicStep => {
            steps[spec.position - 1] =
                OFF_TOPIC_LEXICON[spec.seed as usize % OFF_TOPIC_LEXICON.len()].to_string();
        }
        InjectionKind::ContradictConclusion => {
            let mut chars = conclusion.chars();
            let lowered = match chars.next() {
                Some(first) => format!("{}{}", first.to_lowercase(), chars.as_str()),
                None => conclusion.clone(),
            };
            conclusion = format!("It is not the case that {lowered}");
        }
        InjectionKind::SwapConclusionEntailment => {
            conclusion = base.last_step().to_string();
        }
    }
    Ok(ReasoningChain::new(
        format!("{}+{:?}@{}", base.id, spec.kind, spec.position),
        steps,
        conclusion,
        ChainSource::Synthetic,
    )
    .expect("injection preserves chain validity"))
}

/// Regression dataset drawn from the documented feature distributions:
/// LD, CR ~ Bernoulli(0.3); TS, RR rates ~ Uniform(0, 0.5); Gaussian noise
/// on the penalty. Fully seeded.
pub fn generate_regression_dataset(
    coefficients: [f64; 4],
    count: usize,
    noise_sigma: f64,
    seed: u64,
) -> Vec<DecompositionSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = if noise_sigma > 0.0 {
        Some(Normal::new(0.0, noise_sigma).expect("sigma is positive and finite"))
    } else {
        None
    };
    (0..count)
        .map(|_| {
            let ld = if rng.gen::<f64>() < 0.3 { 1.0 } else { 0.0 };
            let ts = rng.gen::<f64>() * 0.5;
            let rr = rng.gen::<f64>() * 0.5;
            let cr = if rng.gen::<f64>() < 0.3 { 1.0 } else { 0.0 };
            let mut penalty = coefficients[0] * ld
                + coefficients[1] * ts
                + coefficients[2] * rr
                + coefficients[3] * cr;
            if let Some(noise) = &noise {
                penalty += noise.sample(&mut rng);
            }
            DecompositionSample::new((1.0 - penalty) * 100.0, [ld, ts, rr, cr])
        })
        .collect()
}

/// Renders a candidate the way a template-following model would answer:
/// an answer line followed by the BECAUSE/THEREFORE block.
pub fn render_raw_candidate(chain: &ReasoningChain, answer_letter: char) -> String {
    format!(
        "Answer: The answer is {answer_letter}. {}",
        chain.to_template_text()
    )
}

fn record_question(index: usize, topic_index: usize) -> String {
    let topic = &TOPICS[topic_index % TOPICS.len()];
    format!(
        "Case {index}: what follows when the {} {}?",
        topic.base[0], topic.base[2]
    )
}

/// Corpus of clean records. With `identical_candidates`, every candidate is
/// a copy of its reference (self-alignment fixtures); otherwise candidates
/// are clean variant chains of the same topic.
pub fn clean_corpus(
    records: usize,
    hops: usize,
    candidates_per_record: usize,
    identical_candidates: bool,
    seed: u64,
) -> Corpus {
    let mut out = Vec::with_capacity(records);
    for r in 0..records {
        let topic = (seed as usize + r) % TOPICS.len();
        let variant = seed + r as u64;
        let reference = clean_chain(topic, variant, hops)
            .with_id(format!("q{r:04}/ref"))
            .with_source(ChainSource::Reference);
        let candidates: Vec<Candidate> = (0..candidates_per_record)
            .map(|k| {
                let chain = if identical_candidates {
                    reference.clone().with_source(ChainSource::Model)
                } else {
                    clean_chain(topic, variant + 1 + k as u64, hops)
                };
                Candidate::from_chain(chain.with_id(format!("q{r:04}/cand{k}")))
            })
            .collect();
        out.push(CorpusRecord {
            id: format!("q{r:04}"),
            question: record_question(r, topic),
            context: String::new(),
            options: vec![reference.conclusion.clone(), OFF_TOPIC_LEXICON[r % 5].to_string()],
            answer: "A".to_string(),
            reference,
            candidates,
        });
    }
    Corpus { records: out }
}

/// SCOS fixture: per record one clean candidate and k−1 candidates that are
/// broken for both selection metrics (a duplicated step and an off-topic
/// step, built from a one-hop-shorter base so lengths still match the
/// reference). Returns the corpus plus a generation transcript whose
/// completions replay into exactly these candidates.
///
/// Requires `hops ≥ 3` so an off-topic replacement can avoid the duplicated
/// pair.
pub fn scos_fixture(records: usize, k: usize, hops: usize, seed: u64) -> (Corpus, GenerationTranscript) {
    assert!(hops >= 3, "combined injections need at least 3 hops");
    assert!(k >= 2, "SCOS needs at least two candidates");

    let mut transcript = GenerationTranscript::new();
    let mut out = Vec::with_capacity(records);
    for r in 0..records {
        let topic = (seed as usize + r) % TOPICS.len();
        let variant = seed + 16 * r as u64;
        let reference = clean_chain(topic, variant, hops)
            .with_id(format!("q{r:04}/ref"))
            .with_source(ChainSource::Reference);

        let clean_position = r % k;
        let mut raws: Vec<String> = Vec::with_capacity(k);
        for slot in 0..k {
            let raw = if slot == clean_position {
                let chain = clean_chain(topic, variant + 1, hops);
                render_raw_candidate(&chain, 'A')
            } else {
                let j = if slot < clean_position { slot } else { slot - 1 };
                let short = clean_chain(topic, variant + 2 + j as u64, hops - 1);
                let dup_at = 1 + (j % (hops - 1));
                let duplicated = inject(
                    &short,
                    &InjectionSpec {
                        kind: InjectionKind::Duplicate,
                        position: dup_at,
                        seed: variant,
                    },
                )
                .expect("position checked");
                // Replace a step outside the duplicated pair.
                let off_at = if dup_at + 2 <= hops { dup_at + 2 } else { dup_at - 1 };
                let broken = inject(
                    &duplicated,
                    &InjectionSpec {
                        kind: InjectionKind::OffTopicStep,
                        position: off_at,
                        seed: variant + j as u64,
                    },
                )
                .expect("position checked");
                let letter = if j % 2 == 0 { 'B' } else { 'C' };
                render_raw_candidate(&broken, letter)
            };
            raws.push(raw);
        }

        let record = CorpusRecord {
            id: format!("q{r:04}"),
            question: record_question(r, topic),
            context: format!("The {} {} observations.", TOPICS[topic].base[0], TOPICS[topic].base[1]),
            options: vec![reference.conclusion.clone(), OFF_TOPIC_LEXICON[r % 5].to_string()],
            answer: "A".to_string(),
            reference: reference.clone(),
            candidates: raws
                .iter()
                .enumerate()
                .map(|(slot, raw)| {
                    let candidate = Candidate::from_raw(raw.clone(), hops);
                    match candidate.chain().cloned() {
                        Some(chain) => {
                            Candidate::from_chain(chain.with_id(format!("q{r:04}/cand{slot}")))
                                .with_raw(raw.clone())
                        }
                        None => candidate,
                    }
                })
                .collect(),
        };

        let prompt = build_prompt(&PromptSpec::from_record(&record))
            .expect("fixture depths are supported");
        let hash = prompt_hash(&prompt);
        for (slot, raw) in raws.iter().enumerate() {
            transcript.insert(hash.clone(), slot, raw.clone());
        }
        out.push(record);
    }
    (Corpus { records: out }, transcript)
}

/// Corpus exercising every error type separately: per record a clean
/// candidate plus single-injection variants (duplicate, off-topic,
/// contradicted conclusion, swapped conclusion) and one doubly-corrupted
/// chain. Duplicates build from a one-hop-shorter base so every candidate
/// still matches the reference length. Profiles across the six candidates
/// span all four features, which keeps decomposition designs full-rank.
pub fn error_corpus(records: usize, hops: usize, seed: u64) -> Corpus {
    assert!(hops >= 3, "mixed injections need at least 3 hops");
    let mut out = Vec::with_capacity(records);
    for r in 0..records {
        let topic = (seed as usize + r) % TOPICS.len();
        let variant = seed + 16 * r as u64;
        let reference = clean_chain(topic, variant, hops)
            .with_id(format!("q{r:04}/ref"))
            .with_source(ChainSource::Reference);

        let position = 1 + r % hops;
        let short_position = 1 + r % (hops - 1);
        let short = clean_chain(topic, variant + 1, hops - 1);
        let duplicated = inject(
            &short,
            &InjectionSpec { kind: InjectionKind::Duplicate, position: short_position, seed: variant },
        )
        .expect("position checked");
        let off_at = if short_position + 2 <= hops { short_position + 2 } else { short_position - 1 };
        let doubly = inject(
            &duplicated,
            &InjectionSpec { kind: InjectionKind::OffTopicStep, position: off_at, seed: variant },
        )
        .expect("position checked");
        let base = clean_chain(topic, variant + 2, hops);
        let candidates = vec![
            clean_chain(topic, variant + 3, hops),
            duplicated,
            inject(
                &base,
                &InjectionSpec { kind: InjectionKind::OffTopicStep, position, seed: variant + 1 },
            )
            .expect("position checked"),
            inject(
                &base,
                &InjectionSpec { kind: InjectionKind::ContradictConclusion, position: 1, seed: variant },
            )
            .expect("position checked"),
            inject(
                &base,
                &InjectionSpec { kind: InjectionKind::SwapConclusionEntailment, position: 1, seed: variant },
            )
            .expect("position checked"),
            doubly,
        ];

        out.push(CorpusRecord {
            id: format!("q{r:04}"),
            question: record_question(r, topic),
            context: String::new(),
            options: vec![reference.conclusion.clone(), OFF_TOPIC_LEXICON[r % 5].to_string()],
            answer: "A".to_string(),
            reference,
            candidates: candidates
                .into_iter()
                .enumerate()
                .map(|(k, chain)| Candidate::from_chain(chain.with_id(format!("q{r:04}/cand{k}"))))
                .collect(),
        });
    }
    Corpus { records: out }
}
