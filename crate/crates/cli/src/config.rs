//! Run configuration: defaults, TOML config file, command-line overrides,
//! and backend construction.
//!
//! Precedence is flags > config file > defaults. Endpoint URLs and the API
//! credential come from environment variables only.

use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use serde::Deserialize;

use cotalign_core::detect::{RedundancyMode, DEFAULT_TAU};
use cotalign_core::entropy::{KlBase, KlDirection, ScoringOptions};
use cotalign_core::semantic::{
    CachedClassifier, CachedEmbedder, Embedder, HttpRelationClassifier, LexicalStubClassifier,
    RelationClassifier, SemanticCache, StubEmbedder,
};

pub const NLI_URL_ENV: &str = "COTALIGN_NLI_URL";
pub const LLM_URL_ENV: &str = "COTALIGN_LLM_URL";
pub const API_KEY_ENV: &str = "COTALIGN_API_KEY";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendKind {
    /// Deterministic lexical stubs; fully offline.
    Stub,
    /// Remote NLI endpoint from COTALIGN_NLI_URL (embeddings stay on the stub).
    Http,
    /// Reserved for local ONNX inference; not available in this build.
    OnnxLocal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KlDirectionArg {
    RefToModel,
    ModelToRef,
}

impl From<KlDirectionArg> for KlDirection {
    fn from(value: KlDirectionArg) -> Self {
        match value {
            KlDirectionArg::RefToModel => KlDirection::RefToModel,
            KlDirectionArg::ModelToRef => KlDirection::ModelToRef,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
pub enum KlBaseArg {
    #[value(name = "e")]
    #[serde(rename = "e")]
    Natural,
    #[value(name = "2")]
    #[serde(rename = "2")]
    Base2,
}

impl From<KlBaseArg> for KlBase {
    fn from(value: KlBaseArg) -> Self {
        match value {
            KlBaseArg::Natural => KlBase::Natural,
            KlBaseArg::Base2 => KlBase::Base2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RedundancyArg {
    Canonical,
    Exact,
}

impl From<RedundancyArg> for RedundancyMode {
    fn from(value: RedundancyArg) -> Self {
        match value {
            RedundancyArg::Canonical => RedundancyMode::Canonical,
            RedundancyArg::Exact => RedundancyMode::Exact,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    Json,
    Csv,
    Text,
}

/// Flags shared by every subcommand.
#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// TOML config file; command-line flags override its values
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Semantic-relation backend
    #[arg(long, global = true, value_enum)]
    pub backend: Option<BackendKind>,

    /// JSONL cache file for relation/embedding queries
    #[arg(long, global = true, value_name = "PATH")]
    pub cache: Option<PathBuf>,

    /// Which normalized matrix is P in D_KL(P ∥ Q)
    #[arg(long, global = true, value_enum)]
    pub kl_direction: Option<KlDirectionArg>,

    /// Logarithm base for the KL divergence
    #[arg(long, global = true, value_enum)]
    pub kl_base: Option<KlBaseArg>,

    /// Cosine threshold for the thematic-shift detector
    #[arg(long, global = true, value_name = "FLOAT")]
    pub tau: Option<f64>,

    /// Include the conclusion in the pairwise statement set
    #[arg(long, global = true, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
    pub include_conclusion: Option<bool>,

    /// Clamp reported scores into [0, 100]
    #[arg(long, global = true, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
    pub clamp: Option<bool>,

    /// Step comparison mode for the redundancy detector
    #[arg(long, global = true, value_enum)]
    pub redundancy: Option<RedundancyArg>,

    /// Worker threads for corpus processing (0 = automatic)
    #[arg(long, global = true, value_name = "N")]
    pub jobs: Option<usize>,

    /// Output format for primary artifacts
    #[arg(long, global = true, value_enum)]
    pub format: Option<OutputFormat>,

    /// Suppress the timestamp header line on text/CSV outputs
    #[arg(long, global = true)]
    pub no_banner: bool,
}

/// Config file shape; every key optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    backend: Option<BackendKind>,
    cache: Option<PathBuf>,
    kl_direction: Option<KlDirectionArg>,
    kl_base: Option<KlBaseArg>,
    tau: Option<f64>,
    include_conclusion: Option<bool>,
    clamp: Option<bool>,
    redundancy: Option<RedundancyArg>,
    jobs: Option<usize>,
    format: Option<OutputFormat>,
}

/// Fully resolved run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub backend: BackendKind,
    pub cache: Option<PathBuf>,
    pub scoring: ScoringOptions,
    pub tau: f64,
    pub clamp: bool,
    pub redundancy: RedundancyMode,
    pub jobs: usize,
    pub format: OutputFormat,
    pub banner: bool,
}

impl RunConfig {
    pub fn resolve(global: &GlobalArgs) -> Result<Self> {
        let file: FileConfig = match &global.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("cannot read config {}", path.display()))?;
                toml::from_str(&text)
                    .with_context(|| format!("invalid config {}", path.display()))?
            }
            None => FileConfig::default(),
        };

        let scoring = ScoringOptions {
            include_conclusion: global
                .include_conclusion
                .or(file.include_conclusion)
                .unwrap_or(true),
            direction: global
                .kl_direction
                .or(file.kl_direction)
                .map(KlDirection::from)
                .unwrap_or_default(),
            kl_base: global
                .kl_base
                .or(file.kl_base)
                .map(KlBase::from)
                .unwrap_or_default(),
            ..ScoringOptions::default()
        };

        Ok(Self {
            backend: global.backend.or(file.backend).unwrap_or(BackendKind::Stub),
            cache: global.cache.clone().or(file.cache),
            scoring,
            tau: global.tau.or(file.tau).unwrap_or(DEFAULT_TAU),
            clamp: global.clamp.or(file.clamp).unwrap_or(false),
            redundancy: global
                .redundancy
                .or(file.redundancy)
                .map(RedundancyMode::from)
                .unwrap_or_default(),
            jobs: global.jobs.or(file.jobs).unwrap_or(0),
            format: global.format.or(file.format).unwrap_or(OutputFormat::Text),
            banner: !global.no_banner,
        })
    }
}

/// Ready-to-use semantic backends, cache-wrapped when a cache is configured.
pub struct Backends {
    pub classifier: Arc<dyn RelationClassifier>,
    pub embedder: Arc<dyn Embedder>,
}

pub fn build_backends(config: &RunConfig) -> Result<Backends> {
    let cache = match &config.cache {
        Some(path) => Some(Arc::new(SemanticCache::open(path).with_context(|| {
            format!("cannot open cache {}", path.display())
        })?)),
        None => None,
    };

    let classifier: Arc<dyn RelationClassifier> = match config.backend {
        BackendKind::Stub => Arc::new(LexicalStubClassifier),
        BackendKind::Http => {
            let url = std::env::var(NLI_URL_ENV)
                .with_context(|| format!("backend `http` needs {NLI_URL_ENV}"))?;
            let mut backend = HttpRelationClassifier::new(url);
            if let Ok(token) = std::env::var(API_KEY_ENV) {
                backend = backend.with_bearer_token(token);
            }
            Arc::new(backend)
        }
        BackendKind::OnnxLocal => {
            bail!("backend `onnx-local` is not available in this build; use `stub` or `http`")
        }
    };
    let classifier: Arc<dyn RelationClassifier> = match &cache {
        Some(cache) => Arc::new(CachedClassifier::new(classifier, cache.clone())),
        None => classifier,
    };

    let embedder: Arc<dyn Embedder> = Arc::new(StubEmbedder);
    let embedder: Arc<dyn Embedder> = match &cache {
        Some(cache) => Arc::new(CachedEmbedder::new(embedder, cache.clone())),
        None => embedder,
    };

    Ok(Backends {
        classifier,
        embedder,
    })
}
