//! Semantic-relation and embedding backends.
//!
//! Two pluggable capabilities sit behind traits: classifying a (premise,
//! hypothesis) pair into an entailment/contradiction/neutral distribution,
//! and embedding a sentence into a unit vector. Deterministic lexical stubs
//! make the whole pipeline runnable offline; a remote HTTP classifier covers
//! real NLI models; a JSONL-backed cache keeps the O(n²) pair queries cheap.

mod cache;
mod http;
mod stub;

pub use cache::{CachedClassifier, CachedEmbedder, SemanticCache};
pub use http::HttpRelationClassifier;
pub use stub::{LexicalStubClassifier, StubEmbedder, STUB_EMBEDDING_DIM};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Components must sum to 1 within this tolerance.
pub const SIMPLEX_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("malformed relation distribution: {0}")]
    MalformedDistribution(String),
    #[error("embedding is zero or non-finite")]
    MalformedEmbedding,
    #[error("remote inference failed after {attempts} attempts: {message}")]
    Remote { attempts: u32, message: String },
    #[error("cache file error: {0}")]
    Cache(#[from] std::io::Error),
    #[error("backend `{0}` is not available in this build")]
    Unavailable(String),
}

/// Probability triple over {entailment, contradiction, neutral}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelationDistribution {
    pub p_entail: f64,
    pub p_contra: f64,
    pub p_neutral: f64,
}

impl RelationDistribution {
    /// Validates the simplex invariant: each component in [0, 1] and the sum
    /// equal to 1 within [`SIMPLEX_TOLERANCE`].
    pub fn new(p_entail: f64, p_contra: f64, p_neutral: f64) -> Result<Self, BackendError> {
        let d = Self {
            p_entail,
            p_contra,
            p_neutral,
        };
        for (name, p) in [("entailment", p_entail), ("contradiction", p_contra), ("neutral", p_neutral)] {
            if !(0.0..=1.0).contains(&p) || !p.is_finite() {
                return Err(BackendError::MalformedDistribution(format!(
                    "{name} probability {p} outside [0, 1]"
                )));
            }
        }
        let sum = p_entail + p_contra + p_neutral;
        if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(BackendError::MalformedDistribution(format!(
                "components sum to {sum}, expected 1"
            )));
        }
        Ok(d)
    }

    /// Builds a distribution from untrusted scores: clamps negatives to zero
    /// and renormalizes. Errors when nothing positive remains.
    pub fn renormalized(entail: f64, contra: f64, neutral: f64) -> Result<Self, BackendError> {
        let e = if entail.is_finite() { entail.max(0.0) } else { return Err(BackendError::MalformedDistribution("non-finite component".into())) };
        let c = if contra.is_finite() { contra.max(0.0) } else { return Err(BackendError::MalformedDistribution("non-finite component".into())) };
        let n = if neutral.is_finite() { neutral.max(0.0) } else { return Err(BackendError::MalformedDistribution("non-finite component".into())) };
        let sum = e + c + n;
        if sum <= 0.0 {
            return Err(BackendError::MalformedDistribution(
                "all components non-positive".into(),
            ));
        }
        Self::new(e / sum, c / sum, n / sum)
    }

    /// Argmax label; ties resolve in the fixed order
    /// entailment < contradiction < neutral.
    pub fn label(&self) -> RelationLabel {
        if self.p_entail >= self.p_contra && self.p_entail >= self.p_neutral {
            RelationLabel::Entailment
        } else if self.p_contra >= self.p_neutral {
            RelationLabel::Contradiction
        } else {
            RelationLabel::Neutral
        }
    }

    pub fn components(&self) -> [f64; 3] {
        [self.p_entail, self.p_contra, self.p_neutral]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RelationLabel {
    Entailment,
    Contradiction,
    Neutral,
}

/// Unit-normalized sentence embedding. Dimension is constant per backend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector(Vec<f64>);

impl EmbeddingVector {
    /// Normalizes `values` to unit L2 norm. Zero or non-finite input errors.
    pub fn unit(values: Vec<f64>) -> Result<Self, BackendError> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(BackendError::MalformedEmbedding);
        }
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm <= 0.0 {
            return Err(BackendError::MalformedEmbedding);
        }
        Ok(Self(values.into_iter().map(|v| v / norm).collect()))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Cosine similarity; for unit vectors this is the dot product.
    pub fn cosine(&self, other: &Self) -> f64 {
        assert_eq!(
            self.dim(),
            other.dim(),
            "embedding dimensions differ; backends must be dimension-constant"
        );
        self.0.iter().zip(other.0.iter()).map(|(a, b)| a * b).sum()
    }
}

/// Classifies the semantic relation of an ordered (premise, hypothesis) pair.
/// Direction matters: swapping arguments may change the result.
pub trait RelationClassifier: Send + Sync {
    /// Stable identifier used for cache keys.
    fn backend_id(&self) -> &str;

    fn classify_relation(
        &self,
        premise: &str,
        hypothesis: &str,
    ) -> Result<RelationDistribution, BackendError>;

    fn classify_label(&self, premise: &str, hypothesis: &str) -> Result<RelationLabel, BackendError> {
        Ok(self.classify_relation(premise, hypothesis)?.label())
    }
}

/// Embeds a sentence into a unit vector, deterministically per backend.
pub trait Embedder: Send + Sync {
    fn backend_id(&self) -> &str;

    fn embed(&self, text: &str) -> Result<EmbeddingVector, BackendError>;
}

impl<T: RelationClassifier + ?Sized> RelationClassifier for std::sync::Arc<T> {
    fn backend_id(&self) -> &str {
        (**self).backend_id()
    }

    fn classify_relation(
        &self,
        premise: &str,
        hypothesis: &str,
    ) -> Result<RelationDistribution, BackendError> {
        (**self).classify_relation(premise, hypothesis)
    }
}

impl<T: Embedder + ?Sized> Embedder for std::sync::Arc<T> {
    fn backend_id(&self) -> &str {
        (**self).backend_id()
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector, BackendError> {
        (**self).embed(text)
    }
}
