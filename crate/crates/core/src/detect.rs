//! The four alignment-error detectors and their aggregation.
//!
//! - Logical disconnection: the last step contradicts the conclusion.
//! - Thematic shift: adjacent step embeddings with cosine strictly below τ.
//! - Redundant reasoning: consecutive duplicate steps.
//! - Causal reversal: the conclusion entails the last step (note the
//!   reversed argument order relative to logical disconnection).
//!
//! Thematic shift and redundancy range over steps only; the conclusion
//! participates only in the two NLI-based detectors.

use serde::{Deserialize, Serialize};

use crate::chain::ReasoningChain;
use crate::semantic::{BackendError, Embedder, RelationClassifier, RelationLabel};

/// Cosine threshold below which an adjacent step pair counts as a shift.
pub const DEFAULT_TAU: f64 = 0.5;

/// How step texts are compared for redundancy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RedundancyMode {
    /// Trimmed, case-folded, internal whitespace collapsed.
    #[default]
    Canonical,
    /// Byte-exact comparison.
    Exact,
}

/// Per-chain error counts/flags. `step_count` is kept so count-valued
/// detectors can be normalized by (n − 1) for cross-depth comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorProfile {
    pub ld: bool,
    pub ts: usize,
    pub rr: usize,
    pub cr: bool,
    pub step_count: usize,
}

impl ErrorProfile {
    /// Features (LD, TS, RR, CR) with counts normalized to rates in [0, 1].
    /// Single-step chains have no adjacent pairs, so their rates are zero.
    pub fn feature_vector(&self) -> [f64; 4] {
        let pairs = self.step_count.saturating_sub(1);
        let rate = |count: usize| {
            if pairs == 0 {
                0.0
            } else {
                count as f64 / pairs as f64
            }
        };
        [
            if self.ld { 1.0 } else { 0.0 },
            rate(self.ts),
            rate(self.rr),
            if self.cr { 1.0 } else { 0.0 },
        ]
    }
}

/// Corpus-level mean rates per error type, each in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorRates {
    pub ld_rate: f64,
    pub ts_rate: f64,
    pub rr_rate: f64,
    pub cr_rate: f64,
}

/// 1 iff the last step contradicts the conclusion.
pub fn detect_logical_disconnection(
    chain: &ReasoningChain,
    classifier: &dyn RelationClassifier,
) -> Result<bool, BackendError> {
    let label = classifier.classify_label(chain.last_step(), &chain.conclusion)?;
    Ok(label == RelationLabel::Contradiction)
}

/// Number of adjacent step pairs whose embedding cosine is strictly below
/// `tau`. Steps only; chains with fewer than two steps score zero.
pub fn detect_thematic_shift(
    chain: &ReasoningChain,
    embedder: &dyn Embedder,
    tau: f64,
) -> Result<usize, BackendError> {
    if chain.steps.len() < 2 {
        return Ok(0);
    }
    let embeddings = chain
        .step_texts()
        .map(|t| embedder.embed(t))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(embeddings
        .windows(2)
        .filter(|w| w[0].cosine(&w[1]) < tau)
        .count())
}

/// Number of consecutive duplicate steps under canonical comparison.
pub fn detect_redundancy(chain: &ReasoningChain) -> usize {
    detect_redundancy_with(chain, RedundancyMode::Canonical)
}

pub fn detect_redundancy_with(chain: &ReasoningChain, mode: RedundancyMode) -> usize {
    let canonical: Vec<String> = chain
        .step_texts()
        .map(|t| match mode {
            RedundancyMode::Canonical => t.trim().to_lowercase().split_whitespace().collect::<Vec<_>>().join(" "),
            RedundancyMode::Exact => t.to_string(),
        })
        .collect();
    canonical.windows(2).filter(|w| w[0] == w[1]).count()
}

/// 1 iff the conclusion entails the last step — inverted cause and effect.
pub fn detect_causal_reversal(
    chain: &ReasoningChain,
    classifier: &dyn RelationClassifier,
) -> Result<bool, BackendError> {
    let label = classifier.classify_label(&chain.conclusion, chain.last_step())?;
    Ok(label == RelationLabel::Entailment)
}

/// Runs all four detectors on one chain.
pub fn profile(
    chain: &ReasoningChain,
    classifier: &dyn RelationClassifier,
    embedder: &dyn Embedder,
    tau: f64,
) -> Result<ErrorProfile, BackendError> {
    profile_with(chain, classifier, embedder, tau, RedundancyMode::Canonical)
}

pub fn profile_with(
    chain: &ReasoningChain,
    classifier: &dyn RelationClassifier,
    embedder: &dyn Embedder,
    tau: f64,
    mode: RedundancyMode,
) -> Result<ErrorProfile, BackendError> {
    Ok(ErrorProfile {
        ld: detect_logical_disconnection(chain, classifier)?,
        ts: detect_thematic_shift(chain, embedder, tau)?,
        rr: detect_redundancy_with(chain, mode),
        cr: detect_causal_reversal(chain, classifier)?,
        step_count: chain.steps.len(),
    })
}

/// Mean of per-chain normalized values across a corpus. Count detectors are
/// normalized by (n − 1) per chain first, so depths stay comparable.
pub fn aggregate_rates(profiles: &[ErrorProfile]) -> Option<ErrorRates> {
    if profiles.is_empty() {
        return None;
    }
    let n = profiles.len() as f64;
    let mut sums = [0.0f64; 4];
    for p in profiles {
        let f = p.feature_vector();
        for (s, v) in sums.iter_mut().zip(f) {
            *s += v;
        }
    }
    Some(ErrorRates {
        ld_rate: sums[0] / n,
        ts_rate: sums[1] / n,
        rr_rate: sums[2] / n,
        cr_rate: sums[3] / n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::ChainSource;
    use crate::semantic::{
        EmbeddingVector, LexicalStubClassifier, RelationDistribution, StubEmbedder,
    };

    fn chain(steps: &[&str], conclusion: &str) -> ReasoningChain {
        ReasoningChain::new(
            "t",
            steps.iter().map(|s| s.to_string()).collect(),
            conclusion.to_string(),
            ChainSource::Synthetic,
        )
        .unwrap()
    }

    #[test]
    fn logical_disconnection_fires_on_stub_contradiction() {
        let c = chain(&["It is hot"], "It is not hot");
        assert!(detect_logical_disconnection(&c, &LexicalStubClassifier).unwrap());

        let same = chain(&["steam rises"], "steam rises");
        assert!(!detect_logical_disconnection(&same, &LexicalStubClassifier).unwrap());

        let disjoint = chain(&["alpha beta"], "gamma delta");
        assert!(!detect_logical_disconnection(&disjoint, &LexicalStubClassifier).unwrap());
    }

    /// Embedder with scripted unit vectors per text.
    struct FixedEmbedder(std::collections::HashMap<String, EmbeddingVector>);

    impl FixedEmbedder {
        fn new(entries: &[(&str, [f64; 2])]) -> Self {
            Self(
                entries
                    .iter()
                    .map(|(t, v)| (t.to_string(), EmbeddingVector::unit(v.to_vec()).unwrap()))
                    .collect(),
            )
        }
    }

    impl Embedder for FixedEmbedder {
        fn backend_id(&self) -> &str {
            "fixed"
        }

        fn embed(&self, text: &str) -> Result<EmbeddingVector, BackendError> {
            Ok(self.0[text].clone())
        }
    }

    #[test]
    fn thematic_shift_counts_low_cosine_pairs() {
        // e1 ⟂ e2, e2 == e3: cosines 0 then 1 → exactly one shift.
        let embedder = FixedEmbedder::new(&[("s1", [1.0, 0.0]), ("s2", [0.0, 1.0]), ("s3", [0.0, 1.0])]);
        let c = chain(&["s1", "s2", "s3"], "end");
        assert_eq!(detect_thematic_shift(&c, &embedder, 0.5).unwrap(), 1);

        let identical = chain(&["s2", "s2", "s2"], "end");
        assert_eq!(detect_thematic_shift(&identical, &embedder, 0.5).unwrap(), 0);
    }

    #[test]
    fn thematic_shift_boundary_is_strict() {
        // cos = 0.5 exactly: 60° apart.
        let embedder = FixedEmbedder::new(&[
            ("s1", [1.0, 0.0]),
            ("s2", [0.5, 0.8660254037844386]),
        ]);
        let c = chain(&["s1", "s2"], "end");
        let cos = embedder.embed("s1").unwrap().cosine(&embedder.embed("s2").unwrap());
        assert!((cos - 0.5).abs() < 1e-12);
        assert_eq!(detect_thematic_shift(&c, &embedder, 0.5).unwrap(), 0);
    }

    #[test]
    fn single_step_chain_has_no_shift() {
        let c = chain(&["s1"], "end");
        assert_eq!(detect_thematic_shift(&c, &StubEmbedder, 0.5).unwrap(), 0);
    }

    #[test]
    fn redundancy_counts_consecutive_duplicates() {
        assert_eq!(detect_redundancy(&chain(&["A", "A", "A"], "end")), 2);
        assert_eq!(detect_redundancy(&chain(&["A", "B", "A"], "end")), 0);
        assert_eq!(detect_redundancy(&chain(&["A"], "end")), 0);
    }

    #[test]
    fn redundancy_canonicalization_modes() {
        let c = chain(&["a ", "A"], "end");
        assert_eq!(detect_redundancy_with(&c, RedundancyMode::Canonical), 1);
        assert_eq!(detect_redundancy_with(&c, RedundancyMode::Exact), 0);

        let ws = chain(&["two  words", "two words"], "end");
        assert_eq!(detect_redundancy_with(&ws, RedundancyMode::Canonical), 1);
    }

    #[test]
    fn causal_reversal_fires_on_entailed_last_step() {
        let c = chain(&["water boils"], "water boils");
        assert!(detect_causal_reversal(&c, &LexicalStubClassifier).unwrap());

        let disjoint = chain(&["alpha beta"], "gamma delta");
        assert!(!detect_causal_reversal(&disjoint, &LexicalStubClassifier).unwrap());

        let contra = chain(&["It is hot"], "It is not hot");
        assert!(!detect_causal_reversal(&contra, &LexicalStubClassifier).unwrap());
    }

    /// Classifier whose output depends on argument order: entailment when
    /// premise < hypothesis lexicographically, contradiction when greater.
    struct DirectionalClassifier;

    impl RelationClassifier for DirectionalClassifier {
        fn backend_id(&self) -> &str {
            "directional"
        }

        fn classify_relation(
            &self,
            premise: &str,
            hypothesis: &str,
        ) -> Result<RelationDistribution, BackendError> {
            match premise.cmp(hypothesis) {
                std::cmp::Ordering::Less => RelationDistribution::new(0.9, 0.05, 0.05),
                std::cmp::Ordering::Greater => RelationDistribution::new(0.05, 0.9, 0.05),
                std::cmp::Ordering::Equal => RelationDistribution::new(0.1, 0.1, 0.8),
            }
        }
    }

    #[test]
    fn detectors_pass_arguments_in_prescribed_order() {
        // last step "b" > conclusion "a": NLI(b, a) = contradiction → LD
        // fires, while NLI(a, b) = entailment → CR fires too. Swap the texts
        // and both go quiet, proving neither detector reuses the other's
        // argument order.
        let c = chain(&["b"], "a");
        assert!(detect_logical_disconnection(&c, &DirectionalClassifier).unwrap());
        assert!(detect_causal_reversal(&c, &DirectionalClassifier).unwrap());

        let flipped = chain(&["a"], "b");
        assert!(!detect_logical_disconnection(&flipped, &DirectionalClassifier).unwrap());
        assert!(!detect_causal_reversal(&flipped, &DirectionalClassifier).unwrap());
    }

    #[test]
    fn profile_bounds_hold() {
        let c = chain(&["a b c d e", "a b c d f", "a b c d g"], "x y z w a");
        let p = profile(&c, &LexicalStubClassifier, &StubEmbedder, DEFAULT_TAU).unwrap();
        assert!(p.ts < c.steps.len());
        assert!(p.rr < c.steps.len());
        assert_eq!(p.step_count, 3);
        for f in p.feature_vector() {
            assert!((0.0..=1.0).contains(&f));
        }
    }

    #[test]
    fn aggregation_normalizes_counts_by_pairs() {
        let profiles = vec![
            ErrorProfile { ld: true, ts: 2, rr: 0, cr: false, step_count: 3 },
            ErrorProfile { ld: false, ts: 0, rr: 1, cr: true, step_count: 2 },
        ];
        let rates = aggregate_rates(&profiles).unwrap();
        assert!((rates.ld_rate - 0.5).abs() < 1e-12);
        assert!((rates.ts_rate - 0.5).abs() < 1e-12); // (2/2 + 0/1) / 2
        assert!((rates.rr_rate - 0.5).abs() < 1e-12); // (0/2 + 1/1) / 2
        assert!((rates.cr_rate - 0.5).abs() < 1e-12);
        assert!(aggregate_rates(&[]).is_none());
    }
}
