//! Completion-model client: prompt construction, sampling with per-sample
//! retry, an HTTP adapter, and record/replay transcripts for deterministic
//! offline runs.

mod http;
mod prompt;
mod transcript;

pub use http::HttpGenerator;
pub use prompt::{build_prompt, PromptError, PromptSpec};
pub use transcript::{prompt_hash, GenerationTranscript, RecordingGenerator, ReplayGenerator};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GenerationError {
    #[error("generation failed after {attempts} attempts: {message}")]
    Exhausted { attempts: u32, message: String },
    #[error("replay transcript has no entry for prompt {prompt_hash} sample {index}")]
    ReplayMiss { prompt_hash: String, index: usize },
    #[error("transport: {0}")]
    Transport(String),
    #[error("transcript file: {0}")]
    TranscriptIo(#[from] std::io::Error),
}

impl GenerationError {
    /// Replay misses are permanent; everything else is worth retrying.
    pub fn is_transient(&self) -> bool {
        matches!(self, GenerationError::Transport(_))
    }
}

/// Produces one completion per (prompt, sample index). Implementations must
/// be shareable across concurrent sampling workers.
pub trait Generator: Send + Sync {
    fn complete(
        &self,
        prompt: &str,
        sample_index: usize,
        temperature: f64,
    ) -> Result<String, GenerationError>;
}

impl<T: Generator + ?Sized> Generator for std::sync::Arc<T> {
    fn complete(
        &self,
        prompt: &str,
        sample_index: usize,
        temperature: f64,
    ) -> Result<String, GenerationError> {
        (**self).complete(prompt, sample_index, temperature)
    }
}

impl<T: Generator + ?Sized> Generator for Box<T> {
    fn complete(
        &self,
        prompt: &str,
        sample_index: usize,
        temperature: f64,
    ) -> Result<String, GenerationError> {
        (**self).complete(prompt, sample_index, temperature)
    }
}

const SAMPLE_RETRIES: u32 = 3;

/// Draws exactly `k` completions, retrying transient per-sample failures up
/// to three times before giving up on the run.
pub fn sample(
    generator: &dyn Generator,
    prompt: &str,
    k: usize,
    temperature: f64,
) -> Result<Vec<String>, GenerationError> {
    let mut out = Vec::with_capacity(k);
    for index in 0..k {
        let mut last: Option<GenerationError> = None;
        let mut done = None;
        for _attempt in 0..=SAMPLE_RETRIES {
            match generator.complete(prompt, index, temperature) {
                Ok(text) => {
                    done = Some(text);
                    break;
                }
                Err(e) if e.is_transient() => last = Some(e),
                Err(e) => return Err(e),
            }
        }
        match done {
            Some(text) => out.push(text),
            None => {
                return Err(GenerationError::Exhausted {
                    attempts: SAMPLE_RETRIES + 1,
                    message: last.map(|e| e.to_string()).unwrap_or_default(),
                })
            }
        }
    }
    Ok(out)
}
