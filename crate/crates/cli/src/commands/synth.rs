//! `synth`: offline fixture generation — corpora, SCOS fixtures with replay
//! transcripts, and regression sample CSVs.

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Subcommand;

use cotalign_core::corpus::write_corpus_file;
use cotalign_core::synth::{clean_corpus, error_corpus, generate_regression_dataset, scos_fixture};

#[derive(Debug, Subcommand)]
pub enum SynthCommand {
    /// Corpus of clean records; `--identical` copies each reference into its
    /// candidates for self-alignment checks
    Corpus {
        #[arg(long, default_value_t = 20)]
        records: usize,
        #[arg(long, default_value_t = 3)]
        hops: usize,
        #[arg(long, default_value_t = 1)]
        candidates: usize,
        #[arg(long)]
        identical: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
    },
    /// SCOS fixture: per record one clean candidate and k−1 corrupted ones,
    /// plus an optional replay transcript reproducing them
    Scos {
        #[arg(long, default_value_t = 50)]
        records: usize,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[arg(long, default_value_t = 3)]
        hops: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
        #[arg(long, value_name = "PATH")]
        transcript: Option<PathBuf>,
    },
    /// Corpus with one clean and five differently-corrupted candidates per
    /// record, spanning all four error types
    Errors {
        #[arg(long, default_value_t = 20)]
        records: usize,
        #[arg(long, default_value_t = 3)]
        hops: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
    },
    /// Regression samples CSV drawn from the documented feature
    /// distributions with a planted coefficient vector
    Regression {
        #[arg(long, default_value_t = 200)]
        count: usize,
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Planted coefficients alpha,beta,gamma,delta
        #[arg(long, value_delimiter = ',', num_args = 4, default_values_t = [0.23, 0.76, 1.50, 0.11])]
        coefficients: Vec<f64>,
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
    },
}

pub fn run(command: &SynthCommand) -> Result<()> {
    match command {
        SynthCommand::Corpus {
            records,
            hops,
            candidates,
            identical,
            seed,
            out,
        } => {
            let corpus = clean_corpus(*records, *hops, *candidates, *identical, *seed);
            write_corpus_file(&corpus, false, out)
                .with_context(|| format!("cannot write corpus {}", out.display()))?;
            eprintln!("wrote {} records to {}", corpus.len(), out.display());
        }
        SynthCommand::Scos {
            records,
            k,
            hops,
            seed,
            out,
            transcript,
        } => {
            let (corpus, generated) = scos_fixture(*records, *k, *hops, *seed);
            write_corpus_file(&corpus, true, out)
                .with_context(|| format!("cannot write corpus {}", out.display()))?;
            eprintln!("wrote {} records to {}", corpus.len(), out.display());
            if let Some(path) = transcript {
                generated
                    .save(path)
                    .with_context(|| format!("cannot write transcript {}", path.display()))?;
                eprintln!("wrote {} transcript entries to {}", generated.len(), path.display());
            }
        }
        SynthCommand::Errors {
            records,
            hops,
            seed,
            out,
        } => {
            let corpus = error_corpus(*records, *hops, *seed);
            write_corpus_file(&corpus, false, out)
                .with_context(|| format!("cannot write corpus {}", out.display()))?;
            eprintln!("wrote {} records to {}", corpus.len(), out.display());
        }
        SynthCommand::Regression {
            count,
            noise,
            seed,
            coefficients,
            out,
        } => {
            let coefficients = [
                coefficients[0],
                coefficients[1],
                coefficients[2],
                coefficients[3],
            ];
            let samples = generate_regression_dataset(coefficients, *count, *noise, *seed);
            let mut writer = csv::Writer::from_path(out)
                .with_context(|| format!("cannot write samples {}", out.display()))?;
            for sample in &samples {
                writer.serialize(sample)?;
            }
            writer.flush()?;
            eprintln!("wrote {} samples to {}", samples.len(), out.display());
        }
    }
    Ok(())
}
