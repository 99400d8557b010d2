//! Row and artifact shapes shared between the commands that write them and
//! the ones (`fit`, `report`) that read them back.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoreRow {
    pub record_id: String,
    pub candidate_index: usize,
    pub ssd: Option<f64>,
    pub score: Option<f64>,
    pub pair_count: usize,
    pub valid: bool,
    pub degenerate: bool,
    // Always serialized so CSV rows stay rectangular.
    #[serde(default)]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoreSummary {
    pub records: usize,
    pub chains: usize,
    pub valid: usize,
    pub invalid: usize,
    pub degenerate: usize,
    pub rejected_lines: usize,
    pub mean_score: Option<f64>,
    pub clamped: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoreArtifact {
    pub chains: Vec<ScoreRow>,
    pub summary: ScoreSummary,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorRow {
    pub record_id: String,
    pub candidate_index: usize,
    pub ld: u8,
    pub ts: usize,
    pub rr: usize,
    pub cr: u8,
    pub steps: usize,
    pub ts_rate: f64,
    pub rr_rate: f64,
}

/// Per-type mean rates as percentages, one row shape per reasoning corpus.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorSummary {
    pub chains_profiled: usize,
    pub invalid: usize,
    pub rejected_lines: usize,
    pub ld_pct: f64,
    pub ts_pct: f64,
    pub rr_pct: f64,
    pub cr_pct: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorArtifact {
    pub chains: Vec<ErrorRow>,
    pub summary: ErrorSummary,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitArtifact {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub r_squared: f64,
    pub samples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intercept: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScosSummary {
    pub mode: String,
    pub k: usize,
    pub records: usize,
    pub evaluated: usize,
    pub excluded: usize,
    pub scos_mean: Option<f64>,
    pub first_sample_mean: Option<f64>,
    pub majority_mean: Option<f64>,
}
