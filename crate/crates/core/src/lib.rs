//! Alignment scoring for chain-of-thought reasoning.
//!
//! Compares model-generated reasoning chains against reference chains by
//! building pairwise semantic-entropy matrices from an NLI backend, measuring
//! their structural divergence with KL divergence, and mapping the result to
//! an alignment score. On top of the score it provides:
//!
//! - four reasoning-error detectors (logical disconnection, thematic shift,
//!   redundant reasoning, causal reversal) and corpus-level error rates;
//! - a no-intercept least-squares decomposition of the alignment penalty
//!   into per-error impact coefficients;
//! - consistency-optimized sampling (SCOS) that selects, among k sampled
//!   chains, the one minimizing thematic shift or redundancy;
//! - prompt construction, a completion client with record/replay transcripts,
//!   and synthetic fixture generators so everything runs offline.

pub mod chain;
pub mod corpus;
pub mod decomp;
pub mod detect;
pub mod entropy;
pub mod llm;
pub mod scos;
pub mod semantic;
pub mod synth;

pub use chain::{parse_chain_text, ChainPair, ChainSource, ParseError, ReasoningChain, ReasoningStep};
pub use corpus::{load_corpus, Candidate, Corpus, CorpusRecord};
pub use entropy::{alignment_score, AlignmentReport, EntropyMatrix, ScoringOptions};
pub use semantic::{Embedder, RelationClassifier, RelationDistribution, RelationLabel};
