//! Remote NLI classifier speaking a minimal JSON protocol.
//!
//! Request: `{"premise": str, "hypothesis": str}`.
//! Response: `{"entailment": float, "contradiction": float, "neutral": float}`.
//! Response scores are clamped and renormalized before use; transient
//! failures retry with exponential backoff before surfacing a
//! `BackendError::Remote`.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{BackendError, RelationClassifier, RelationDistribution};

#[derive(Serialize)]
struct RelationRequest<'a> {
    premise: &'a str,
    hypothesis: &'a str,
}

#[derive(Deserialize)]
struct RelationResponse {
    entailment: f64,
    contradiction: f64,
    neutral: f64,
}

pub struct HttpRelationClassifier {
    client: reqwest::blocking::Client,
    url: String,
    id: String,
    bearer_token: Option<String>,
    retries: u32,
    initial_backoff: Duration,
}

impl HttpRelationClassifier {
    pub fn new(url: impl Into<String>) -> Self {
        let url = url.into();
        Self {
            client: reqwest::blocking::Client::new(),
            id: format!("http:{url}"),
            url,
            bearer_token: None,
            retries: 3,
            initial_backoff: Duration::from_millis(200),
        }
    }

    pub fn with_bearer_token(mut self, token: impl Into<String>) -> Self {
        self.bearer_token = Some(token.into());
        self
    }

    /// Retry count after the first attempt (default 3) and the first backoff
    /// delay, which doubles per retry.
    pub fn with_retry(mut self, retries: u32, initial_backoff: Duration) -> Self {
        self.retries = retries;
        self.initial_backoff = initial_backoff;
        self
    }

    fn attempt(&self, premise: &str, hypothesis: &str) -> Result<RelationDistribution, String> {
        let mut req = self.client.post(&self.url).json(&RelationRequest {
            premise,
            hypothesis,
        });
        if let Some(token) = &self.bearer_token {
            req = req.bearer_auth(token);
        }
        let resp = req.send().map_err(|e| e.to_string())?;
        if !resp.status().is_success() {
            return Err(format!("status {}", resp.status()));
        }
        let body: RelationResponse = resp.json().map_err(|e| e.to_string())?;
        RelationDistribution::renormalized(body.entailment, body.contradiction, body.neutral)
            .map_err(|e| e.to_string())
    }
}

impl RelationClassifier for HttpRelationClassifier {
    fn backend_id(&self) -> &str {
        &self.id
    }

    fn classify_relation(
        &self,
        premise: &str,
        hypothesis: &str,
    ) -> Result<RelationDistribution, BackendError> {
        let attempts = self.retries + 1;
        let mut backoff = self.initial_backoff;
        let mut last_error = String::new();
        for attempt in 0..attempts {
            match self.attempt(premise, hypothesis) {
                Ok(d) => return Ok(d),
                Err(e) => last_error = e,
            }
            if attempt + 1 < attempts {
                std::thread::sleep(backoff);
                backoff *= 2;
            }
        }
        Err(BackendError::Remote {
            attempts,
            message: last_error,
        })
    }
}
