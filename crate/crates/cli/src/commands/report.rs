//! `report`: human-readable rollup of previously written JSON artifacts.

use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::Args;

use crate::commands::fit::fit_table;
use crate::config::RunConfig;
use crate::output::{fmt_opt, open_sink, read_json, render_table, write_banner};
use crate::rows::{ErrorArtifact, FitArtifact, ScoreArtifact};

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// JSON artifact from `score --format json`
    #[arg(long, value_name = "PATH")]
    pub scores: Option<PathBuf>,

    /// JSON artifact from `errors --format json`
    #[arg(long, value_name = "PATH")]
    pub errors: Option<PathBuf>,

    /// JSON artifact from `fit`
    #[arg(long, value_name = "PATH")]
    pub fit: Option<PathBuf>,

    /// Destination (stdout when omitted)
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,
}

pub fn run(args: &ReportArgs, config: &RunConfig) -> Result<()> {
    if args.scores.is_none() && args.errors.is_none() && args.fit.is_none() {
        bail!("nothing to report: pass --scores, --errors, or --fit");
    }
    let mut sink = open_sink(args.output.as_ref())?;
    write_banner(&mut sink, config.banner)?;

    if let Some(path) = &args.scores {
        let artifact: ScoreArtifact = read_json(path)?;
        let s = &artifact.summary;
        writeln!(sink, "alignment scores ({} records, {} chains)", s.records, s.chains)?;
        let rows = vec![
            vec!["mean score".to_string(), fmt_opt(s.mean_score)],
            vec!["valid chains".to_string(), s.valid.to_string()],
            vec!["invalid chains".to_string(), s.invalid.to_string()],
            vec!["degenerate".to_string(), s.degenerate.to_string()],
            vec!["rejected lines".to_string(), s.rejected_lines.to_string()],
        ];
        sink.write_all(render_table(&["metric", "value"], &rows).as_bytes())?;
        writeln!(sink)?;
    }

    if let Some(path) = &args.errors {
        let artifact: ErrorArtifact = read_json(path)?;
        let s = &artifact.summary;
        writeln!(sink, "alignment errors ({} chains profiled)", s.chains_profiled)?;
        let rows = vec![
            vec!["logical disconnection".to_string(), format!("{:.2}%", s.ld_pct)],
            vec!["thematic shift".to_string(), format!("{:.2}%", s.ts_pct)],
            vec!["redundant reasoning".to_string(), format!("{:.2}%", s.rr_pct)],
            vec!["causal reversal".to_string(), format!("{:.2}%", s.cr_pct)],
        ];
        sink.write_all(render_table(&["error type", "rate"], &rows).as_bytes())?;
        writeln!(sink)?;
    }

    if let Some(path) = &args.fit {
        let artifact: FitArtifact = read_json(path)?;
        writeln!(sink, "penalty decomposition")?;
        sink.write_all(fit_table(&artifact).as_bytes())?;
    }

    sink.flush()?;
    Ok(())
}
