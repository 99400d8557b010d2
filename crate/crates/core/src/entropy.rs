//! Pairwise semantic entropy, entropy matrices, KL divergence, structural
//! divergence (SSD), and the alignment score.
//!
//! Entropy is measured in bits (log base 2). KL divergence defaults to the
//! natural log; base 2 is available for sensitivity studies. The structural
//! divergence compares the epsilon-smoothed, normalized upper triangles of
//! the two entropy matrices, with the reference distribution in the
//! numerator by default (`RefToModel`); the opposite order is available
//! because it is equally defensible from the source material.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain::{ChainPair, ReasoningChain};
use crate::semantic::{BackendError, RelationClassifier, RelationDistribution};

/// Smoothing added to every upper-triangular entry before normalization so
/// zero-entropy (fully confident) pairs do not produce divisions by zero.
pub const DEFAULT_EPSILON: f64 = 1e-9;

/// Maximum pairwise entropy for a 3-class distribution, in bits.
pub fn max_entropy_bits() -> f64 {
    3f64.log2()
}

#[derive(Debug, Error)]
pub enum EntropyError {
    #[error("chain yields {n} statements; at least 2 are required")]
    InvalidChain { n: usize },
    #[error("normalized vectors differ in length: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("entropy matrices differ in size: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("no valid chains to average")]
    NoValidChains,
    #[error(transparent)]
    Backend(#[from] BackendError),
}

/// Shannon entropy of a relation distribution, in bits. Zero-probability
/// components contribute zero.
pub fn pairwise_entropy(d: &RelationDistribution) -> f64 {
    d.components()
        .iter()
        .filter(|p| **p > 0.0)
        .map(|p| -p * p.log2())
        .sum()
}

/// n×n matrix of pairwise entropies over a chain's statements. The diagonal
/// is zero; the matrix is not symmetric in general because relation
/// classification is directional. Only the upper triangle feeds the metric,
/// but the full matrix is kept for reporting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyMatrix {
    n: usize,
    values: Vec<f64>,
}

impl EntropyMatrix {
    pub fn from_values(n: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), n * n, "matrix must be n*n");
        Self { n, values }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    /// Row-major upper-triangular entries (i < j); length n(n−1)/2.
    pub fn upper_triangle(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n * (self.n - 1) / 2);
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                out.push(self.get(i, j));
            }
        }
        out
    }

    pub fn pair_count(&self) -> usize {
        self.n * (self.n - 1) / 2
    }
}

/// Builds the entropy matrix for a chain by querying the classifier for
/// every ordered statement pair (premise = row statement). Accumulation is
/// by index, so fan-out order can never change the result.
pub fn entropy_matrix(
    chain: &ReasoningChain,
    classifier: &dyn RelationClassifier,
    include_conclusion: bool,
) -> Result<EntropyMatrix, EntropyError> {
    let statements = chain.statements(include_conclusion);
    entropy_matrix_of_statements(&statements, classifier)
}

/// Same as [`entropy_matrix`] but over an explicit statement list.
pub fn entropy_matrix_of_statements(
    statements: &[&str],
    classifier: &dyn RelationClassifier,
) -> Result<EntropyMatrix, EntropyError> {
    let n = statements.len();
    if n < 2 {
        return Err(EntropyError::InvalidChain { n });
    }
    let mut values = vec![0.0f64; n * n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let d = classifier.classify_relation(statements[i], statements[j])?;
            values[i * n + j] = pairwise_entropy(&d);
        }
    }
    Ok(EntropyMatrix { n, values })
}

/// Probability vector over the upper-triangular entries of one matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedEntropyVector(Vec<f64>);

impl NormalizedEntropyVector {
    /// Wraps an already-normalized vector: strictly positive entries summing
    /// to 1.
    pub fn from_raw(values: Vec<f64>) -> Self {
        debug_assert!(
            (values.iter().sum::<f64>() - 1.0).abs() < 1e-6 && values.iter().all(|v| *v > 0.0),
            "not a smoothed probability vector"
        );
        Self(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Extracts the upper triangle, adds `epsilon` to every entry and divides by
/// the sum. Defined even for all-zero entropies (yields the uniform vector).
pub fn normalize_upper(m: &EntropyMatrix, epsilon: f64) -> NormalizedEntropyVector {
    let mut v = m.upper_triangle();
    for x in v.iter_mut() {
        *x += epsilon;
    }
    let sum: f64 = v.iter().sum();
    for x in v.iter_mut() {
        *x /= sum;
    }
    NormalizedEntropyVector(v)
}

/// Logarithm base for the KL divergence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KlBase {
    #[default]
    Natural,
    Base2,
}

impl KlBase {
    fn log(self, x: f64) -> f64 {
        match self {
            KlBase::Natural => x.ln(),
            KlBase::Base2 => x.log2(),
        }
    }
}

/// KL divergence Σ p·log(p/q) in the natural log. Inputs are smoothed and
/// normalized, hence strictly positive; the result is ≥ 0 and 0 iff p == q.
pub fn kl_divergence(
    p: &NormalizedEntropyVector,
    q: &NormalizedEntropyVector,
) -> Result<f64, EntropyError> {
    kl_divergence_in_base(p, q, KlBase::Natural)
}

pub fn kl_divergence_in_base(
    p: &NormalizedEntropyVector,
    q: &NormalizedEntropyVector,
    base: KlBase,
) -> Result<f64, EntropyError> {
    if p.len() != q.len() {
        return Err(EntropyError::LengthMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    Ok(p.values()
        .iter()
        .zip(q.values())
        .map(|(pi, qi)| pi * base.log(pi / qi))
        .sum())
}

/// Which normalized matrix plays P in D_KL(P ∥ Q).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KlDirection {
    /// Reference in the numerator (the default).
    #[default]
    RefToModel,
    /// Model in the numerator.
    ModelToRef,
}

/// Semantic structural divergence between two entropy matrices.
pub fn ssd(
    reference: &EntropyMatrix,
    candidate: &EntropyMatrix,
    direction: KlDirection,
) -> Result<f64, EntropyError> {
    ssd_with(reference, candidate, direction, DEFAULT_EPSILON, KlBase::Natural)
}

pub fn ssd_with(
    reference: &EntropyMatrix,
    candidate: &EntropyMatrix,
    direction: KlDirection,
    epsilon: f64,
    base: KlBase,
) -> Result<f64, EntropyError> {
    if reference.n() != candidate.n() {
        return Err(EntropyError::DimensionMismatch {
            left: reference.n(),
            right: candidate.n(),
        });
    }
    let r = normalize_upper(reference, epsilon);
    let c = normalize_upper(candidate, epsilon);
    match direction {
        KlDirection::RefToModel => kl_divergence_in_base(&r, &c, base),
        KlDirection::ModelToRef => kl_divergence_in_base(&c, &r, base),
    }
}

/// Maps a divergence to the percent-scale score (1 − ssd) × 100. Not
/// clamped: large divergences yield negative scores, and the reporting
/// layer may clamp behind an explicit flag.
pub fn alignment_score(ssd_value: f64) -> f64 {
    (1.0 - ssd_value) * 100.0
}

/// Per-chain scoring outcome. For invalid (unparseable) chains, `valid` is
/// false and the numeric fields are meaningless; averaging skips them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlignmentReport {
    pub ssd: f64,
    pub score: f64,
    pub pair_count: usize,
    pub valid: bool,
    /// True when only one statement pair exists (n = 2): normalization maps
    /// any entropy to [1.0] and the score is trivially 100.
    pub degenerate: bool,
}

impl AlignmentReport {
    pub fn from_ssd(ssd: f64, pair_count: usize) -> Self {
        Self {
            ssd,
            score: alignment_score(ssd),
            pair_count,
            valid: true,
            degenerate: pair_count == 1,
        }
    }

    pub fn invalid() -> Self {
        Self {
            ssd: 0.0,
            score: 0.0,
            pair_count: 0,
            valid: false,
            degenerate: false,
        }
    }
}

/// Knobs of the scoring pipeline, shared by standalone scoring and SCOS so
/// their outputs stay comparable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoringOptions {
    pub include_conclusion: bool,
    pub epsilon: f64,
    pub direction: KlDirection,
    pub kl_base: KlBase,
}

impl Default for ScoringOptions {
    fn default() -> Self {
        Self {
            include_conclusion: true,
            epsilon: DEFAULT_EPSILON,
            direction: KlDirection::default(),
            kl_base: KlBase::default(),
        }
    }
}

/// Full pipeline for one reference/candidate pair: two entropy matrices,
/// SSD, and the alignment score.
pub fn score_pair(
    pair: &ChainPair,
    classifier: &dyn RelationClassifier,
    options: &ScoringOptions,
) -> Result<AlignmentReport, EntropyError> {
    let reference = entropy_matrix(pair.reference(), classifier, options.include_conclusion)?;
    let candidate = entropy_matrix(pair.candidate(), classifier, options.include_conclusion)?;
    let ssd_value = ssd_with(
        &reference,
        &candidate,
        options.direction,
        options.epsilon,
        options.kl_base,
    )?;
    Ok(AlignmentReport::from_ssd(ssd_value, reference.pair_count()))
}

/// The warning text reporting layers emit for degenerate (single-pair)
/// comparisons, where the score carries no information.
pub fn degeneracy_warning(report: &AlignmentReport) -> Option<String> {
    report.degenerate.then(|| {
        "degenerate comparison: a 2-statement chain has a single pair, normalization maps any \
         entropy to [1.0], and the alignment score is trivially 100"
            .to_string()
    })
}

/// Mean score over valid reports only; invalid chains are excluded from the
/// average and surface through the returned count instead.
pub fn average_score(reports: &[AlignmentReport]) -> Result<f64, EntropyError> {
    let valid: Vec<f64> = reports.iter().filter(|r| r.valid).map(|r| r.score).collect();
    if valid.is_empty() {
        return Err(EntropyError::NoValidChains);
    }
    Ok(valid.iter().sum::<f64>() / valid.len() as f64)
}
