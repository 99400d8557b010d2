//! `scos`: consistency-optimized selection over sampled chains, with JSONL
//! results and a baseline comparison summary.

use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use rayon::prelude::*;

use cotalign_core::chain::ChainPair;
use cotalign_core::corpus::{load_corpus, CorpusRecord};
use cotalign_core::entropy::score_pair;
use cotalign_core::llm::{Generator, HttpGenerator, RecordingGenerator, ReplayGenerator};
use cotalign_core::scos::{
    majority_baseline_index, run_scos_record, CandidateScore, ScosConfig, ScosError, ScosMode,
    ScosResult,
};

use crate::commands::score::report_rejects;
use crate::config::{build_backends, Backends, RunConfig, API_KEY_ENV, LLM_URL_ENV};
use crate::output::{fmt_opt, open_sink, render_table};
use crate::rows::ScosSummary;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    /// Minimize redundant reasoning
    Rr,
    /// Minimize thematic shift
    Ts,
}

impl From<ModeArg> for ScosMode {
    fn from(value: ModeArg) -> Self {
        match value {
            ModeArg::Rr => ScosMode::RedundantReasoning,
            ModeArg::Ts => ScosMode::ThematicShift,
        }
    }
}

#[derive(Debug, Args)]
pub struct ScosArgs {
    /// Corpus JSONL file (questions + references; candidates used when no
    /// generator is configured)
    #[arg(long, value_name = "PATH")]
    pub corpus: PathBuf,

    /// Samples per question
    #[arg(long, default_value_t = 10)]
    pub k: usize,

    /// Selection metric
    #[arg(long, value_enum, default_value = "rr")]
    pub mode: ModeArg,

    /// Decoding temperature forwarded to the generator
    #[arg(long, default_value_t = 0.7)]
    pub temperature: f64,

    /// Replay completions from a recorded transcript instead of generating
    #[arg(long, value_name = "PATH")]
    pub replay: Option<PathBuf>,

    /// Record drawn completions to a transcript (sorted, reproducible)
    #[arg(long, value_name = "PATH")]
    pub record: Option<PathBuf>,

    /// Reveal the gold answer in the prompt
    #[arg(long)]
    pub reveal_answer: bool,

    /// Destination for the JSONL results (stdout when omitted)
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,

    /// Also write the summary as JSON
    #[arg(long, value_name = "PATH")]
    pub summary: Option<PathBuf>,
}

fn baseline_score(
    record: &CorpusRecord,
    candidates: &[CandidateScore],
    index: Option<usize>,
    backends: &Backends,
    config: &RunConfig,
) -> Result<Option<f64>> {
    let Some(index) = index else { return Ok(None) };
    let Some(chain) = candidates.get(index).and_then(|c| c.chain.clone()) else {
        return Ok(None);
    };
    let Ok(pair) = ChainPair::new(record.reference.clone(), chain) else {
        return Ok(None);
    };
    let report = score_pair(&pair, backends.classifier.as_ref(), &config.scoring)?;
    Ok(Some(report.score))
}

struct RecordOutcome {
    result: Option<ScosResult>,
    first_sample: Option<f64>,
    majority: Option<f64>,
}

pub fn run(args: &ScosArgs, config: &RunConfig) -> Result<()> {
    let load = load_corpus(&args.corpus)?;
    report_rejects(&load.rejects);
    let backends = build_backends(config)?;

    // Generator resolution: --replay wins, then the completion endpoint env
    // var, else the records' own candidates. Recording buffers in memory and
    // saves a key-sorted transcript at the end so the file is reproducible.
    let inner: Option<Box<dyn Generator>> = if let Some(path) = &args.replay {
        Some(Box::new(ReplayGenerator::from_file(path).with_context(
            || format!("cannot load transcript {}", path.display()),
        )?))
    } else if let Ok(url) = std::env::var(LLM_URL_ENV) {
        let mut generator = HttpGenerator::new(url);
        if let Ok(token) = std::env::var(API_KEY_ENV) {
            generator = generator.with_bearer_token(token);
        }
        Some(Box::new(generator))
    } else {
        None
    };
    if args.record.is_some() && inner.is_none() {
        bail!("--record needs a generator: pass --replay or set {LLM_URL_ENV}");
    }
    let recorder: Option<RecordingGenerator<Box<dyn Generator>>> = match (&args.record, inner) {
        (Some(_), Some(generator)) => Some(RecordingGenerator::new(generator)),
        (None, Some(generator)) => {
            // No recording requested; keep the generator as-is.
            return run_with(args, config, &load.corpus.records, Some(&generator), &backends);
        }
        _ => None,
    };
    match &recorder {
        Some(recorder) => {
            run_with(args, config, &load.corpus.records, Some(recorder), &backends)?;
            let path = args.record.as_ref().expect("checked above");
            recorder
                .transcript()
                .save(path)
                .with_context(|| format!("cannot write transcript {}", path.display()))?;
            Ok(())
        }
        None => run_with(args, config, &load.corpus.records, None, &backends),
    }
}

fn run_with(
    args: &ScosArgs,
    config: &RunConfig,
    records: &[CorpusRecord],
    generator: Option<&dyn Generator>,
    backends: &Backends,
) -> Result<()> {
    let scos_config = ScosConfig::new(args.mode.into())
        .with_k(args.k)
        .with_temperature(args.temperature)
        .with_reveal_answer(args.reveal_answer);
    scos_config.validate()?;

    let outcomes: Vec<RecordOutcome> = records
        .par_iter()
        .map(|record| -> Result<RecordOutcome> {
            let result = run_scos_record(
                record,
                generator,
                backends.classifier.as_ref(),
                backends.embedder.as_ref(),
                &scos_config,
                &config.scoring,
            );
            match result {
                Ok(result) => {
                    let first_sample =
                        baseline_score(record, &result.candidates, Some(0), backends, config)?;
                    let majority_index = majority_baseline_index(&result.candidates);
                    let majority =
                        baseline_score(record, &result.candidates, majority_index, backends, config)?;
                    Ok(RecordOutcome {
                        result: Some(result),
                        first_sample,
                        majority,
                    })
                }
                // A record whose samples all fail to parse is excluded and
                // counted, not fatal.
                Err(ScosError::AllInvalid { .. }) => Ok(RecordOutcome {
                    result: None,
                    first_sample: None,
                    majority: None,
                }),
                Err(e) => Err(e.into()),
            }
        })
        .collect::<Result<_>>()?;

    let mut sink = open_sink(args.output.as_ref())?;
    for outcome in &outcomes {
        if let Some(result) = &outcome.result {
            serde_json::to_writer(&mut sink, result)?;
            sink.write_all(b"\n")?;
        }
    }
    sink.flush()?;

    let mean = |values: Vec<f64>| -> Option<f64> {
        if values.is_empty() {
            None
        } else {
            Some(values.iter().sum::<f64>() / values.len() as f64)
        }
    };
    let evaluated = outcomes.iter().filter(|o| o.result.is_some()).count();
    let summary = ScosSummary {
        mode: match args.mode {
            ModeArg::Rr => "scos-rr".to_string(),
            ModeArg::Ts => "scos-ts".to_string(),
        },
        k: args.k,
        records: records.len(),
        evaluated,
        excluded: records.len() - evaluated,
        scos_mean: mean(
            outcomes
                .iter()
                .filter_map(|o| o.result.as_ref().map(|r| r.alignment.score))
                .collect(),
        ),
        first_sample_mean: mean(outcomes.iter().filter_map(|o| o.first_sample).collect()),
        majority_mean: mean(outcomes.iter().filter_map(|o| o.majority).collect()),
    };

    if let Some(path) = &args.summary {
        let mut out = std::fs::File::create(path)
            .with_context(|| format!("cannot create summary {}", path.display()))?;
        serde_json::to_writer(&mut out, &summary)?;
        out.write_all(b"\n")?;
    }
    eprintln!("{}", summary_table(&summary));
    Ok(())
}

fn summary_table(summary: &ScosSummary) -> String {
    let rows = vec![
        vec![summary.mode.clone(), fmt_opt(summary.scos_mean)],
        vec!["first-sample".to_string(), fmt_opt(summary.first_sample_mean)],
        vec!["majority-vote".to_string(), fmt_opt(summary.majority_mean)],
    ];
    format!(
        "records {}  evaluated {}  excluded {}  k {}\n{}",
        summary.records,
        summary.evaluated,
        summary.excluded,
        summary.k,
        render_table(&["method", "mean score"], &rows)
    )
}
