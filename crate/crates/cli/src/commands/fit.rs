//! `fit`: least-squares decomposition over scored + profiled chains, or
//! over a prepared samples CSV.

use std::collections::HashMap;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::Deserialize;

use cotalign_core::decomp::{fit_error_coefficients, fit_with_intercept, DecompositionSample};

use crate::config::{OutputFormat, RunConfig};
use crate::output::{open_sink, render_table, write_banner};
use crate::rows::{ErrorArtifact, FitArtifact, ScoreArtifact};

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Samples CSV with header score,ld,ts,rr,cr (as written by `synth regression`)
    #[arg(long, value_name = "PATH", conflicts_with_all = ["scores", "errors"])]
    pub samples: Option<PathBuf>,

    /// JSON artifact from `score --format json`
    #[arg(long, value_name = "PATH", requires = "errors")]
    pub scores: Option<PathBuf>,

    /// JSON artifact from `errors --format json`
    #[arg(long, value_name = "PATH", requires = "scores")]
    pub errors: Option<PathBuf>,

    /// Also fit a diagnostic intercept term
    #[arg(long)]
    pub with_intercept: bool,

    /// Destination (stdout when omitted)
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
struct SampleRow {
    score: f64,
    ld: f64,
    ts: f64,
    rr: f64,
    cr: f64,
}

/// Reads rows from a `score`/`errors` artifact in either format: the JSON
/// object written by `--format json`, or the CSV written by `--format csv`
/// (whose optional `#` banner line is skipped).
fn read_rows<T: serde::de::DeserializeOwned>(
    path: &std::path::Path,
    json_rows: impl Fn(String) -> Result<Vec<T>>,
) -> Result<Vec<T>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    if text.trim_start().starts_with('{') {
        return json_rows(text);
    }
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for row in reader.deserialize() {
        out.push(row.with_context(|| format!("invalid CSV row in {}", path.display()))?);
    }
    Ok(out)
}

fn load_samples(args: &FitArgs) -> Result<Vec<DecompositionSample>> {
    if let Some(path) = &args.samples {
        let mut reader = csv::Reader::from_path(path)
            .with_context(|| format!("cannot read samples {}", path.display()))?;
        let mut out = Vec::new();
        for row in reader.deserialize() {
            let row: SampleRow = row?;
            out.push(DecompositionSample::new(
                row.score,
                [row.ld, row.ts, row.rr, row.cr],
            ));
        }
        return Ok(out);
    }

    let (Some(scores_path), Some(errors_path)) = (&args.scores, &args.errors) else {
        bail!("provide either --samples or both --scores and --errors");
    };
    let score_rows = read_rows(scores_path, |text| {
        Ok(serde_json::from_str::<ScoreArtifact>(&text)?.chains)
    })?;
    let error_rows = read_rows(errors_path, |text| {
        Ok(serde_json::from_str::<ErrorArtifact>(&text)?.chains)
    })?;

    let mut by_key: HashMap<(String, usize), f64> = HashMap::new();
    for row in score_rows {
        if let (true, Some(score)) = (row.valid, row.score) {
            by_key.insert((row.record_id, row.candidate_index), score);
        }
    }
    let mut out = Vec::new();
    for row in error_rows {
        let key = (row.record_id.clone(), row.candidate_index);
        if let Some(score) = by_key.get(&key) {
            out.push(DecompositionSample::new(
                *score,
                [row.ld as f64, row.ts_rate, row.rr_rate, row.cr as f64],
            ));
        }
    }
    Ok(out)
}

pub fn run(args: &FitArgs, config: &RunConfig) -> Result<()> {
    let samples = load_samples(args)?;
    let artifact = if args.with_intercept {
        let (fit, intercept) = fit_with_intercept(&samples)?;
        FitArtifact {
            alpha: fit.alpha,
            beta: fit.beta,
            gamma: fit.gamma,
            delta: fit.delta,
            r_squared: fit.r_squared,
            samples: samples.len(),
            intercept: Some(intercept),
        }
    } else {
        let fit = fit_error_coefficients(&samples)?;
        FitArtifact {
            alpha: fit.alpha,
            beta: fit.beta,
            gamma: fit.gamma,
            delta: fit.delta,
            r_squared: fit.r_squared,
            samples: samples.len(),
            intercept: None,
        }
    };

    let mut sink = open_sink(args.output.as_ref())?;
    match config.format {
        OutputFormat::Json => {
            serde_json::to_writer(&mut sink, &artifact)?;
            sink.write_all(b"\n")?;
        }
        OutputFormat::Csv => {
            write_banner(&mut sink, config.banner)?;
            let mut writer = csv::Writer::from_writer(&mut sink);
            writer.serialize(&artifact)?;
            writer.flush()?;
        }
        OutputFormat::Text => {
            write_banner(&mut sink, config.banner)?;
            sink.write_all(fit_table(&artifact).as_bytes())?;
        }
    }
    sink.flush()?;
    Ok(())
}

pub fn fit_table(artifact: &FitArtifact) -> String {
    let mut rows = vec![
        vec!["logical disconnection (alpha)".to_string(), format!("{:.4}", artifact.alpha)],
        vec!["thematic shift (beta)".to_string(), format!("{:.4}", artifact.beta)],
        vec!["redundant reasoning (gamma)".to_string(), format!("{:.4}", artifact.gamma)],
        vec!["causal reversal (delta)".to_string(), format!("{:.4}", artifact.delta)],
        vec!["explained variance (R²)".to_string(), format!("{:.4}", artifact.r_squared)],
        vec!["samples".to_string(), artifact.samples.to_string()],
    ];
    if let Some(intercept) = artifact.intercept {
        rows.push(vec!["intercept".to_string(), format!("{intercept:.4}")]);
    }
    render_table(&["error type", "coefficient"], &rows)
}
