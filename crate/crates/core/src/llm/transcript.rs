//! Record/replay transcripts keyed by (prompt hash, sample index).
//!
//! A transcript is a JSONL file, one completion per line. Replaying a
//! recorded run yields bit-identical downstream results; a missing entry is
//! a hard `ReplayMiss`, never a silent regeneration.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{GenerationError, Generator};

/// Stable content hash of a prompt (hex SHA-256).
pub fn prompt_hash(prompt: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(prompt.as_bytes());
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Serialize, Deserialize)]
struct TranscriptLine {
    prompt_hash: String,
    index: usize,
    text: String,
}

/// In-memory map of recorded completions.
#[derive(Debug, Clone, Default)]
pub struct GenerationTranscript {
    entries: HashMap<(String, usize), String>,
}

impl GenerationTranscript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, prompt_hash: impl Into<String>, index: usize, text: impl Into<String>) {
        self.entries.insert((prompt_hash.into(), index), text.into());
    }

    pub fn get(&self, prompt_hash: &str, index: usize) -> Option<&str> {
        self.entries
            .get(&(prompt_hash.to_string(), index))
            .map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Loads a JSONL transcript; later duplicates of a key win.
    pub fn load<P: AsRef<Path>>(path: P) -> std::io::Result<Self> {
        let reader = BufReader::new(File::open(path)?);
        let mut transcript = Self::new();
        for line in reader.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let entry: TranscriptLine = serde_json::from_str(&line)
                .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
            transcript.insert(entry.prompt_hash, entry.index, entry.text);
        }
        Ok(transcript)
    }

    /// Writes the transcript as JSONL, sorted by key for stable output.
    pub fn save<P: AsRef<Path>>(&self, path: P) -> std::io::Result<()> {
        let mut keys: Vec<_> = self.entries.keys().collect();
        keys.sort();
        let mut out = BufWriter::new(File::create(path)?);
        for key in keys {
            let line = TranscriptLine {
                prompt_hash: key.0.clone(),
                index: key.1,
                text: self.entries[key].clone(),
            };
            serde_json::to_writer(&mut out, &line)?;
            out.write_all(b"\n")?;
        }
        out.flush()
    }
}

/// Generator that replays a transcript. Lookups are lock-free reads.
pub struct ReplayGenerator {
    transcript: GenerationTranscript,
}

impl ReplayGenerator {
    pub fn new(transcript: GenerationTranscript) -> Self {
        Self { transcript }
    }

    pub fn from_file<P: AsRef<Path>>(path: P) -> std::io::Result<Self> {
        Ok(Self::new(GenerationTranscript::load(path)?))
    }
}

impl Generator for ReplayGenerator {
    fn complete(
        &self,
        prompt: &str,
        sample_index: usize,
        _temperature: f64,
    ) -> Result<String, GenerationError> {
        let hash = prompt_hash(prompt);
        self.transcript
            .get(&hash, sample_index)
            .map(str::to_string)
            .ok_or(GenerationError::ReplayMiss {
                prompt_hash: hash,
                index: sample_index,
            })
    }
}

/// Wraps a live generator and appends every completion to a transcript
/// file. Writes are serialized behind a mutex.
pub struct RecordingGenerator<G> {
    inner: G,
    sink: Mutex<RecordingSink>,
}

struct RecordingSink {
    transcript: GenerationTranscript,
    writer: Option<BufWriter<File>>,
}

impl<G: Generator> RecordingGenerator<G> {
    pub fn new(inner: G) -> Self {
        Self {
            inner,
            sink: Mutex::new(RecordingSink {
                transcript: GenerationTranscript::new(),
                writer: None,
            }),
        }
    }

    pub fn with_file<P: AsRef<Path>>(inner: G, path: P) -> std::io::Result<Self> {
        let writer = BufWriter::new(File::create(path)?);
        Ok(Self {
            inner,
            sink: Mutex::new(RecordingSink {
                transcript: GenerationTranscript::new(),
                writer: Some(writer),
            }),
        })
    }

    /// Snapshot of everything recorded so far.
    pub fn transcript(&self) -> GenerationTranscript {
        self.sink.lock().unwrap().transcript.clone()
    }
}

impl<G: Generator> Generator for RecordingGenerator<G> {
    fn complete(
        &self,
        prompt: &str,
        sample_index: usize,
        temperature: f64,
    ) -> Result<String, GenerationError> {
        let text = self.inner.complete(prompt, sample_index, temperature)?;
        let hash = prompt_hash(prompt);
        let mut sink = self.sink.lock().unwrap();
        sink.transcript.insert(hash.clone(), sample_index, text.clone());
        if let Some(writer) = sink.writer.as_mut() {
            let line = TranscriptLine {
                prompt_hash: hash,
                index: sample_index,
                text: text.clone(),
            };
            serde_json::to_writer(&mut *writer, &line)
                .map_err(|e| GenerationError::Transport(e.to_string()))?;
            writer.write_all(b"\n")?;
            writer.flush()?;
        }
        Ok(text)
    }
}
