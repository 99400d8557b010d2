//! `errors`: per-chain error profiles and corpus-level rate percentages.

use std::io::Write;
use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use rayon::prelude::*;

use cotalign_core::corpus::{load_corpus, CorpusRecord};
use cotalign_core::detect::{aggregate_rates, profile_with, ErrorProfile};

use crate::commands::score::report_rejects;
use crate::config::{build_backends, Backends, OutputFormat, RunConfig};
use crate::output::{open_sink, render_table, write_banner};
use crate::rows::{ErrorArtifact, ErrorRow, ErrorSummary};

#[derive(Debug, Args)]
pub struct ErrorsArgs {
    /// Corpus JSONL file
    #[arg(long, value_name = "PATH")]
    pub corpus: PathBuf,

    /// Destination for the per-chain rows (stdout when omitted)
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,
}

fn profile_record(
    record: &CorpusRecord,
    backends: &Backends,
    config: &RunConfig,
) -> Result<(Vec<(ErrorRow, ErrorProfile)>, usize)> {
    let mut rows = Vec::new();
    let mut invalid = 0usize;
    for (index, candidate) in record.candidates.iter().enumerate() {
        match candidate.chain() {
            Some(chain) => {
                let profile = profile_with(
                    chain,
                    backends.classifier.as_ref(),
                    backends.embedder.as_ref(),
                    config.tau,
                    config.redundancy,
                )?;
                let features = profile.feature_vector();
                rows.push((
                    ErrorRow {
                        record_id: record.id.clone(),
                        candidate_index: index,
                        ld: profile.ld as u8,
                        ts: profile.ts,
                        rr: profile.rr,
                        cr: profile.cr as u8,
                        steps: profile.step_count,
                        ts_rate: features[1],
                        rr_rate: features[2],
                    },
                    profile,
                ));
            }
            None => invalid += 1,
        }
    }
    Ok((rows, invalid))
}

pub fn run(args: &ErrorsArgs, config: &RunConfig) -> Result<()> {
    let load = load_corpus(&args.corpus)?;
    report_rejects(&load.rejects);
    let backends = build_backends(config)?;

    let per_record: Vec<(Vec<(ErrorRow, ErrorProfile)>, usize)> = load
        .corpus
        .records
        .par_iter()
        .map(|record| profile_record(record, &backends, config))
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    let mut profiles = Vec::new();
    let mut invalid = 0usize;
    for (record_rows, record_invalid) in per_record {
        invalid += record_invalid;
        for (row, profile) in record_rows {
            rows.push(row);
            profiles.push(profile);
        }
    }
    rows.sort_by(|a, b| {
        a.record_id
            .cmp(&b.record_id)
            .then(a.candidate_index.cmp(&b.candidate_index))
    });

    let rates = aggregate_rates(&profiles);
    let summary = ErrorSummary {
        chains_profiled: profiles.len(),
        invalid,
        rejected_lines: load.rejects.len(),
        ld_pct: rates.map_or(0.0, |r| r.ld_rate * 100.0),
        ts_pct: rates.map_or(0.0, |r| r.ts_rate * 100.0),
        rr_pct: rates.map_or(0.0, |r| r.rr_rate * 100.0),
        cr_pct: rates.map_or(0.0, |r| r.cr_rate * 100.0),
    };

    let mut sink = open_sink(args.output.as_ref())?;
    match config.format {
        OutputFormat::Json => {
            serde_json::to_writer(&mut sink, &ErrorArtifact { chains: rows, summary })?;
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
                        r.ld.to_string(),
                        r.ts.to_string(),
                        r.rr.to_string(),
                        r.cr.to_string(),
                        r.steps.to_string(),
                    ]
                })
                .collect();
            sink.write_all(
                render_table(
                    &["record", "cand", "ld", "ts", "rr", "cr", "steps"],
                    &table_rows,
                )
                .as_bytes(),
            )?;
            writeln!(sink, "\n{}", summary_text(&summary))?;
        }
    }
    sink.flush()?;
    Ok(())
}

fn summary_text(summary: &ErrorSummary) -> String {
    format!(
        "chains {}  invalid {}  disconnection {:.2}%  shift {:.2}%  redundancy {:.2}%  reversal {:.2}%",
        summary.chains_profiled,
        summary.invalid,
        summary.ld_pct,
        summary.ts_pct,
        summary.rr_pct,
        summary.cr_pct,
    )
}
