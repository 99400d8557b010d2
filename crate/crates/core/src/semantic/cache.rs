//! Append-only JSONL cache for relation and embedding queries.
//!
//! Keys are (backend id, inputs); duplicate keys resolve last-write-wins,
//! both when replaying the file at open and between concurrent writers.
//! Caching is transparent: wrapped backends return bit-identical results.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::{Arc, Mutex, RwLock};

use serde::{Deserialize, Serialize};

use super::{BackendError, EmbeddingVector, Embedder, RelationClassifier, RelationDistribution};

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum CacheLine {
    Relation {
        backend: String,
        premise: String,
        hypothesis: String,
        entail: f64,
        contra: f64,
        neutral: f64,
    },
    Embedding {
        backend: String,
        text: String,
        values: Vec<f64>,
    },
}

type RelationKey = (String, String, String);
type EmbeddingKey = (String, String);

/// Shared cache for both query kinds, optionally persisted to one JSONL file.
pub struct SemanticCache {
    relations: RwLock<HashMap<RelationKey, RelationDistribution>>,
    embeddings: RwLock<HashMap<EmbeddingKey, EmbeddingVector>>,
    appender: Option<Mutex<BufWriter<File>>>,
}

impl SemanticCache {
    /// Cache without persistence.
    pub fn in_memory() -> Self {
        Self {
            relations: RwLock::new(HashMap::new()),
            embeddings: RwLock::new(HashMap::new()),
            appender: None,
        }
    }

    /// Opens (or creates) a persistent cache file. Existing lines are
    /// replayed in order, so later duplicates win; unreadable lines are
    /// skipped.
    pub fn open<P: AsRef<Path>>(path: P) -> std::io::Result<Self> {
        let path = path.as_ref();
        let mut relations = HashMap::new();
        let mut embeddings = HashMap::new();
        if path.exists() {
            let reader = BufReader::new(File::open(path)?);
            for line in reader.lines() {
                let line = line?;
                let Ok(entry) = serde_json::from_str::<CacheLine>(&line) else {
                    continue;
                };
                match entry {
                    CacheLine::Relation {
                        backend,
                        premise,
                        hypothesis,
                        entail,
                        contra,
                        neutral,
                    } => {
                        if let Ok(d) = RelationDistribution::new(entail, contra, neutral) {
                            relations.insert((backend, premise, hypothesis), d);
                        }
                    }
                    CacheLine::Embedding {
                        backend,
                        text,
                        values,
                    } => {
                        if let Ok(v) = EmbeddingVector::unit(values) {
                            embeddings.insert((backend, text), v);
                        }
                    }
                }
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self {
            relations: RwLock::new(relations),
            embeddings: RwLock::new(embeddings),
            appender: Some(Mutex::new(BufWriter::new(file))),
        })
    }

    pub fn relation_count(&self) -> usize {
        self.relations.read().unwrap().len()
    }

    pub fn embedding_count(&self) -> usize {
        self.embeddings.read().unwrap().len()
    }

    fn get_relation(&self, key: &RelationKey) -> Option<RelationDistribution> {
        self.relations.read().unwrap().get(key).copied()
    }

    fn put_relation(&self, key: RelationKey, d: RelationDistribution) {
        if let Some(appender) = &self.appender {
            let line = CacheLine::Relation {
                backend: key.0.clone(),
                premise: key.1.clone(),
                hypothesis: key.2.clone(),
                entail: d.p_entail,
                contra: d.p_contra,
                neutral: d.p_neutral,
            };
            let mut w = appender.lock().unwrap();
            if serde_json::to_writer(&mut *w, &line).is_ok() {
                let _ = w.write_all(b"\n");
                let _ = w.flush();
            }
        }
        self.relations.write().unwrap().insert(key, d);
    }

    fn get_embedding(&self, key: &EmbeddingKey) -> Option<EmbeddingVector> {
        self.embeddings.read().unwrap().get(key).cloned()
    }

    fn put_embedding(&self, key: EmbeddingKey, v: &EmbeddingVector) {
        if let Some(appender) = &self.appender {
            let line = CacheLine::Embedding {
                backend: key.0.clone(),
                text: key.1.clone(),
                values: v.values().to_vec(),
            };
            let mut w = appender.lock().unwrap();
            if serde_json::to_writer(&mut *w, &line).is_ok() {
                let _ = w.write_all(b"\n");
                let _ = w.flush();
            }
        }
        self.embeddings.write().unwrap().insert(key, v.clone());
    }
}

/// Caching wrapper around any relation classifier.
pub struct CachedClassifier<C> {
    inner: C,
    cache: Arc<SemanticCache>,
}

impl<C: RelationClassifier> CachedClassifier<C> {
    pub fn new(inner: C, cache: Arc<SemanticCache>) -> Self {
        Self { inner, cache }
    }
}

impl<C: RelationClassifier> RelationClassifier for CachedClassifier<C> {
    fn backend_id(&self) -> &str {
        self.inner.backend_id()
    }

    fn classify_relation(
        &self,
        premise: &str,
        hypothesis: &str,
    ) -> Result<RelationDistribution, BackendError> {
        let key = (
            self.inner.backend_id().to_string(),
            premise.to_string(),
            hypothesis.to_string(),
        );
        if let Some(hit) = self.cache.get_relation(&key) {
            return Ok(hit);
        }
        let d = self.inner.classify_relation(premise, hypothesis)?;
        self.cache.put_relation(key, d);
        Ok(d)
    }
}

/// Caching wrapper around any embedder.
pub struct CachedEmbedder<E> {
    inner: E,
    cache: Arc<SemanticCache>,
}

impl<E: Embedder> CachedEmbedder<E> {
    pub fn new(inner: E, cache: Arc<SemanticCache>) -> Self {
        Self { inner, cache }
    }
}

impl<E: Embedder> Embedder for CachedEmbedder<E> {
    fn backend_id(&self) -> &str {
        self.inner.backend_id()
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector, BackendError> {
        let key = (self.inner.backend_id().to_string(), text.to_string());
        if let Some(hit) = self.cache.get_embedding(&key) {
            return Ok(hit);
        }
        let v = self.inner.embed(text)?;
        self.cache.put_embedding(key, &v);
        Ok(v)
    }
}
