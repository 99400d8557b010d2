//! Deterministic lexical stubs.
//!
//! These are pure functions of their input strings — no model, no clock, no
//! randomness — so offline tests get graded, content-sensitive outputs with
//! frozen behavior. The rules:
//!
//! Relation stub, for lowercased word sets A (premise) and B (hypothesis)
//! with Jaccard overlap j = |A∩B| / |A∪B|:
//! - negation-marker asymmetry (exactly one side contains one of
//!   `not`, `no`, `never`) → (0.05, 0.90, 0.05);
//! - zero overlap → (0.05, 0.05, 0.90);
//! - otherwise p_entail = 0.1 + 0.8·j and the remainder splits 1:3
//!   between contradiction and neutral.
//!
//! Embedding stub: signed hashed bag-of-words into 64 dimensions,
//! L2-normalized, so cosine tracks lexical overlap.

use std::collections::BTreeSet;

use super::{BackendError, EmbeddingVector, Embedder, RelationClassifier, RelationDistribution};

pub const STUB_EMBEDDING_DIM: usize = 64;

const NEGATION_MARKERS: [&str; 3] = ["not", "no", "never"];

fn tokens(text: &str) -> BTreeSet<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

fn has_negation(tokens: &BTreeSet<String>) -> bool {
    NEGATION_MARKERS.iter().any(|m| tokens.contains(*m))
}

fn fnv1a(data: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in data {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Frozen lexical-overlap relation classifier.
#[derive(Debug, Default, Clone, Copy)]
pub struct LexicalStubClassifier;

impl RelationClassifier for LexicalStubClassifier {
    fn backend_id(&self) -> &str {
        "stub-relation-v1"
    }

    fn classify_relation(
        &self,
        premise: &str,
        hypothesis: &str,
    ) -> Result<RelationDistribution, BackendError> {
        let a = tokens(premise);
        let b = tokens(hypothesis);

        if has_negation(&a) != has_negation(&b) {
            return RelationDistribution::new(0.05, 0.90, 0.05);
        }

        let union = a.union(&b).count();
        let inter = a.intersection(&b).count();
        // Two token-less strings count as identical.
        let jaccard = if union == 0 {
            1.0
        } else {
            inter as f64 / union as f64
        };

        if jaccard == 0.0 {
            return RelationDistribution::new(0.05, 0.05, 0.90);
        }

        let p_entail = 0.1 + 0.8 * jaccard;
        let rest = 1.0 - p_entail;
        RelationDistribution::renormalized(p_entail, rest / 4.0, 3.0 * rest / 4.0)
    }
}

/// Frozen hashed bag-of-words embedder. Each token occurrence adds ±1 to the
/// bucket `fnv1a(token) % 64`, with the sign taken from the hash, and the
/// result is L2-normalized.
#[derive(Debug, Default, Clone, Copy)]
pub struct StubEmbedder;

impl Embedder for StubEmbedder {
    fn backend_id(&self) -> &str {
        "stub-embed-v1"
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector, BackendError> {
        let mut values = vec![0.0f64; STUB_EMBEDDING_DIM];
        let mut any = false;
        for token in text
            .split(|c: char| !c.is_alphanumeric())
            .filter(|t| !t.is_empty())
        {
            let h = fnv1a(token.to_lowercase().as_bytes());
            let bucket = (h % STUB_EMBEDDING_DIM as u64) as usize;
            let sign = if (h >> 6) & 1 == 1 { 1.0 } else { -1.0 };
            values[bucket] += sign;
            any = true;
        }
        if !any || values.iter().all(|v| *v == 0.0) {
            // Token-less or fully cancelled input: fall back to a unit basis
            // vector derived from the whole string, keeping determinism.
            let h = fnv1a(text.trim().to_lowercase().as_bytes());
            let mut basis = vec![0.0f64; STUB_EMBEDDING_DIM];
            basis[(h % STUB_EMBEDDING_DIM as u64) as usize] = 1.0;
            return EmbeddingVector::unit(basis);
        }
        EmbeddingVector::unit(values)
    }
}
