//! Least-squares decomposition of the alignment penalty into error-type
//! impact coefficients.
//!
//! The model has no intercept: penalty 1 − S/100 is a weighted sum of the
//! four error rates (LD, TS, RR, CR). Count-valued detectors enter as
//! per-chain rates so coefficients stay comparable across reasoning depths.
//! R² uses the zero-intercept convention (total sum of squares about 0); an
//! intercept variant exists for diagnostics only.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detect::ErrorProfile;

pub const FEATURES: usize = 4;

/// One regression observation: a percent-scale score and normalized error
/// rates. The fitting target is the penalty 1 − score/100.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecompositionSample {
    pub score: f64,
    pub ld: f64,
    pub ts: f64,
    pub rr: f64,
    pub cr: f64,
}

impl DecompositionSample {
    pub fn new(score: f64, features: [f64; FEATURES]) -> Self {
        Self {
            score,
            ld: features[0],
            ts: features[1],
            rr: features[2],
            cr: features[3],
        }
    }

    pub fn from_profile(score: f64, profile: &ErrorProfile) -> Self {
        Self::new(score, profile.feature_vector())
    }

    pub fn penalty(&self) -> f64 {
        1.0 - self.score / 100.0
    }

    pub fn features(&self) -> [f64; FEATURES] {
        [self.ld, self.ts, self.rr, self.cr]
    }
}

/// Fitted impact coefficients and explained variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionFit {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub r_squared: f64,
}

impl RegressionFit {
    pub fn coefficients(&self) -> [f64; FEATURES] {
        [self.alpha, self.beta, self.gamma, self.delta]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FitError {
    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("design matrix is rank deficient")]
    RankDeficient,
}

/// Ordinary least squares without intercept over (LD, TS, RR, CR).
///
/// Feature columns that are identically zero carry no information: they are
/// excluded from the solve and their coefficient is reported as 0. The
/// remaining design must have full column rank, otherwise `RankDeficient`.
pub fn fit_error_coefficients(samples: &[DecompositionSample]) -> Result<RegressionFit, FitError> {
    if samples.len() < FEATURES {
        return Err(FitError::InsufficientSamples {
            needed: FEATURES,
            got: samples.len(),
        });
    }
    let m = samples.len();

    let active: Vec<usize> = (0..FEATURES)
        .filter(|&j| samples.iter().any(|s| s.features()[j] != 0.0))
        .collect();
    if active.is_empty() {
        return Err(FitError::RankDeficient);
    }

    let p = active.len();
    let mut design = Vec::with_capacity(m * p);
    let mut target = Vec::with_capacity(m);
    for s in samples {
        let f = s.features();
        for &j in &active {
            design.push(f[j]);
        }
        target.push(s.penalty());
    }
    let solved = householder_lstsq(&design, &target, m, p)?;

    let mut coef = [0.0f64; FEATURES];
    for (slot, &j) in active.iter().enumerate() {
        coef[j] = solved[slot];
    }
    let mut full_design = Vec::with_capacity(m * FEATURES);
    for s in samples {
        full_design.extend_from_slice(&s.features());
    }
    let r_squared = r_squared_about_zero(&full_design, &target, &coef, m, FEATURES);
    Ok(RegressionFit {
        alpha: coef[0],
        beta: coef[1],
        gamma: coef[2],
        delta: coef[3],
        r_squared,
    })
}

/// Diagnostic variant with an intercept column. Returns the fit plus the
/// intercept; R² here is the conventional centered version.
pub fn fit_with_intercept(
    samples: &[DecompositionSample],
) -> Result<(RegressionFit, f64), FitError> {
    let p = FEATURES + 1;
    if samples.len() < p {
        return Err(FitError::InsufficientSamples {
            needed: p,
            got: samples.len(),
        });
    }
    let m = samples.len();
    let mut design = Vec::with_capacity(m * p);
    let mut target = Vec::with_capacity(m);
    for s in samples {
        design.push(1.0);
        design.extend_from_slice(&s.features());
        target.push(s.penalty());
    }
    let coef = householder_lstsq(&design, &target, m, p)?;

    let mean = target.iter().sum::<f64>() / m as f64;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for (i, y) in target.iter().enumerate() {
        let fitted: f64 = (0..p).map(|j| design[i * p + j] * coef[j]).sum();
        ss_res += (y - fitted).powi(2);
        ss_tot += (y - mean).powi(2);
    }
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok((
        RegressionFit {
            alpha: coef[1],
            beta: coef[2],
            gamma: coef[3],
            delta: coef[4],
            r_squared,
        },
        coef[0],
    ))
}

/// Forward evaluation of the decomposition on normalized rates.
pub fn predict_penalty(fit: &RegressionFit, profile: &ErrorProfile) -> f64 {
    predict_penalty_from_features(fit, profile.feature_vector())
}

pub fn predict_penalty_from_features(fit: &RegressionFit, features: [f64; FEATURES]) -> f64 {
    fit.coefficients()
        .iter()
        .zip(features)
        .map(|(c, f)| c * f)
        .sum()
}

fn r_squared_about_zero(design: &[f64], target: &[f64], coef: &[f64], m: usize, p: usize) -> f64 {
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for i in 0..m {
        let fitted: f64 = (0..p).map(|j| design[i * p + j] * coef[j]).sum();
        ss_res += (target[i] - fitted).powi(2);
        ss_tot += target[i].powi(2);
    }
    if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else {
        1.0
    }
}

/// Least squares via Householder QR on the m×p design matrix (row-major).
/// Rank deficiency is flagged when a diagonal of R collapses relative to the
/// largest column norm.
fn householder_lstsq(design: &[f64], target: &[f64], m: usize, p: usize) -> Result<Vec<f64>, FitError> {
    debug_assert!(m >= p);
    let mut a = design.to_vec();
    let mut y = target.to_vec();

    let max_col_norm = (0..p)
        .map(|j| (0..m).map(|i| a[i * p + j].powi(2)).sum::<f64>().sqrt())
        .fold(0.0f64, f64::max);
    if max_col_norm == 0.0 {
        return Err(FitError::RankDeficient);
    }
    let tol = 1e-10 * max_col_norm;

    for k in 0..p {
        // Householder vector for column k below the diagonal.
        let norm_x = (k..m).map(|i| a[i * p + k].powi(2)).sum::<f64>().sqrt();
        if norm_x <= tol {
            return Err(FitError::RankDeficient);
        }
        let alpha = if a[k * p + k] >= 0.0 { -norm_x } else { norm_x };
        let mut v: Vec<f64> = (k..m).map(|i| a[i * p + k]).collect();
        v[0] -= alpha;
        let v_norm_sq: f64 = v.iter().map(|x| x * x).sum();
        if v_norm_sq > 0.0 {
            // Reflect the remaining columns and the target.
            for j in k..p {
                let dot: f64 = (k..m).map(|i| v[i - k] * a[i * p + j]).sum();
                let scale = 2.0 * dot / v_norm_sq;
                for i in k..m {
                    a[i * p + j] -= scale * v[i - k];
                }
            }
            let dot: f64 = (k..m).map(|i| v[i - k] * y[i]).sum();
            let scale = 2.0 * dot / v_norm_sq;
            for i in k..m {
                y[i] -= scale * v[i - k];
            }
        }
        a[k * p + k] = alpha;
        if alpha.abs() <= tol {
            return Err(FitError::RankDeficient);
        }
    }

    // Back-substitution on R x = Q^T y.
    let mut coef = vec![0.0f64; p];
    for k in (0..p).rev() {
        let mut sum = y[k];
        for j in (k + 1)..p {
            sum -= a[k * p + j] * coef[j];
        }
        coef[k] = sum / a[k * p + k];
    }
    Ok(coef)
}
