//! `score`: per-chain alignment reports plus the corpus mean.

use std::io::Write;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use rayon::prelude::*;

use cotalign_core::chain::ChainPair;
use cotalign_core::corpus::{load_corpus, CorpusRecord, RejectedLine};
use cotalign_core::entropy::{average_score, degeneracy_warning, score_pair, AlignmentReport};

use crate::config::{build_backends, Backends, OutputFormat, RunConfig};
use crate::output::{fmt_opt, open_sink, render_table, write_banner};
use crate::rows::{ScoreArtifact, ScoreRow, ScoreSummary};

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Corpus JSONL file
    #[arg(long, value_name = "PATH")]
    pub corpus: PathBuf,

    /// Destination for the per-chain rows (stdout when omitted)
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,
}

pub fn report_rejects(rejects: &[RejectedLine]) {
    for reject in rejects {
        eprintln!("warning: corpus line {} rejected: {}", reject.line, reject.reason);
    }
}

fn score_record(
    record: &CorpusRecord,
    backends: &Backends,
    config: &RunConfig,
) -> Result<Vec<(ScoreRow, AlignmentReport)>> {
    let mut out = Vec::with_capacity(record.candidates.len());
    for (index, candidate) in record.candidates.iter().enumerate() {
        let (row, report) = match candidate.chain() {
            Some(chain) => {
                let pair = ChainPair::new(record.reference.clone(), chain.clone())
                    .context("corpus loader guarantees equal lengths")?;
                let report = score_pair(&pair, backends.classifier.as_ref(), &config.scoring)?;
                let score = if config.clamp {
                    report.score.clamp(0.0, 100.0)
                } else {
                    report.score
                };
                (
                    ScoreRow {
                        record_id: record.id.clone(),
                        candidate_index: index,
                        ssd: Some(report.ssd),
                        score: Some(score),
                        pair_count: report.pair_count,
                        valid: true,
                        degenerate: report.degenerate,
                        error: None,
                    },
                    AlignmentReport { score, ..report },
                )
            }
            None => (
                ScoreRow {
                    record_id: record.id.clone(),
                    candidate_index: index,
                    ssd: None,
                    score: None,
                    pair_count: 0,
                    valid: false,
                    degenerate: false,
                    error: candidate.parse_error().map(|e| e.to_string()),
                },
                AlignmentReport::invalid(),
            ),
        };
        out.push((row, report));
    }
    Ok(out)
}

pub fn run(args: &ScoreArgs, config: &RunConfig) -> Result<()> {
    let load = load_corpus(&args.corpus)?;
    report_rejects(&load.rejects);
    let backends = build_backends(config)?;

    let per_record: Vec<Vec<(ScoreRow, AlignmentReport)>> = load
        .corpus
        .records
        .par_iter()
        .map(|record| score_record(record, &backends, config))
        .collect::<Result<_>>()?;

    let mut rows: Vec<ScoreRow> = Vec::new();
    let mut reports: Vec<AlignmentReport> = Vec::new();
    for record_rows in per_record {
        for (row, report) in record_rows {
            rows.push(row);
            reports.push(report);
        }
    }
    rows.sort_by(|a, b| {
        a.record_id
            .cmp(&b.record_id)
            .then(a.candidate_index.cmp(&b.candidate_index))
    });

    let degenerate = reports.iter().filter(|r| r.valid && r.degenerate).count();
    if degenerate > 0 {
        let text = reports
            .iter()
            .find(|r| r.degenerate)
            .and_then(degeneracy_warning)
            .unwrap_or_default();
        eprintln!("warning: {degenerate} comparison(s) degenerate — {text}");
    }

    let mean = average_score(&reports).ok();
    let summary = ScoreSummary {
        records: load.corpus.len(),
        chains: reports.len(),
        valid: reports.iter().filter(|r| r.valid).count(),
        invalid: reports.iter().filter(|r| !r.valid).count(),
        degenerate,
        rejected_lines: load.rejects.len(),
        mean_score: mean,
        clamped: config.clamp,
    };

    let mut sink = open_sink(args.output.as_ref())?;
    match config.format {
        OutputFormat::Json => {
            serde_json::to_writer(&mut sink, &ScoreArtifact { chains: rows, summary: summary.clone() })?;
            sink.write_all(b"\n")?;
        }
        OutputFormat::Csv => {
            write_banner(&mut sink, config.banner)?;
            let mut writer = csv::Writer::from_writer(&mut sink);
            for row in &rows {
                writer.serialize(row)?;
            }
            writer.flush()?;
            drop(writer);
            eprintln!("{}", summary_text(&summary));
        }
        OutputFormat::Text => {
            write_banner(&mut sink, config.banner)?;
            let table_rows: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        r.record_id.clone(),
                        r.candidate_index.to_string(),
                        fmt_opt(r.ssd),
                        fmt_opt(r.score),
                        r.pair_count.to_string(),
                        r.valid.to_string(),
                        r.degenerate.to_string(),
                    ]
                })
                .collect();
            sink.write_all(
                render_table(
                    &["record", "cand", "ssd", "score", "pairs", "valid", "degenerate"],
                    &table_rows,
                )
                .as_bytes(),
            )?;
            writeln!(sink, "\n{}", summary_text(&summary))?;
        }
    }
    sink.flush()?;

    // Surfacing the mean failure after artifacts are written: an all-invalid
    // or empty corpus exits 2.
    average_score(&reports)?;
    Ok(())
}

fn summary_text(summary: &ScoreSummary) -> String {
    format!(
        "records {}  chains {}  valid {}  invalid {}  degenerate {}  rejected-lines {}  mean-score {}{}",
        summary.records,
        summary.chains,
        summary.valid,
        summary.invalid,
        summary.degenerate,
        summary.rejected_lines,
        fmt_opt(summary.mean_score),
        if summary.clamped { " (clamped)" } else { "" },
    )
}
