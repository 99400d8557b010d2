//! Completion endpoint adapter.
//!
//! Request: `{"prompt": str, "n": int, "temperature": float, "max_tokens": int}`.
//! Response: `{"choices": [str, ...]}`. One completion is requested per call
//! so the sampling layer can retry individual samples.

use serde::{Deserialize, Serialize};

use super::{GenerationError, Generator};

#[derive(Serialize)]
struct CompletionRequest<'a> {
    prompt: &'a str,
    n: u32,
    temperature: f64,
    max_tokens: u32,
}

#[derive(Deserialize)]
struct CompletionResponse {
    choices: Vec<String>,
}

pub struct HttpGenerator {
    client: reqwest::blocking::Client,
    url: String,
    bearer_token: Option<String>,
    max_tokens: u32,
}

impl HttpGenerator {
    pub fn new(url: impl Into<String>) -> Self {
        Self {
            client: reqwest::blocking::Client::new(),
            url: url.into(),
            bearer_token: None,
            max_tokens: 512,
        }
    }

    pub fn with_bearer_token(mut self, token: impl Into<String>) -> Self {
        self.bearer_token = Some(token.into());
        self
    }

    pub fn with_max_tokens(mut self, max_tokens: u32) -> Self {
        self.max_tokens = max_tokens;
        self
    }
}

impl Generator for HttpGenerator {
    fn complete(
        &self,
        prompt: &str,
        _sample_index: usize,
        temperature: f64,
    ) -> Result<String, GenerationError> {
        let mut req = self.client.post(&self.url).json(&CompletionRequest {
            prompt,
            n: 1,
            temperature,
            max_tokens: self.max_tokens,
        });
        if let Some(token) = &self.bearer_token {
            req = req.bearer_auth(token);
        }
        let resp = req
            .send()
            .map_err(|e| GenerationError::Transport(e.to_string()))?;
        if !resp.status().is_success() {
            return Err(GenerationError::Transport(format!(
                "status {}",
                resp.status()
            )));
        }
        let body: CompletionResponse = resp
            .json()
            .map_err(|e| GenerationError::Transport(e.to_string()))?;
        body.choices
            .into_iter()
            .next()
            .ok_or_else(|| GenerationError::Transport("empty choices".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::sample;
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;

    fn serve(responses: Vec<String>) -> String {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        std::thread::spawn(move || {
            for response in responses {
                let (mut stream, _) = match listener.accept() {
                    Ok(s) => s,
                    Err(_) => return,
                };
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut content_length = 0usize;
                loop {
                    let mut line = String::new();
                    if reader.read_line(&mut line).is_err() || line == "\r\n" || line.is_empty() {
                        break;
                    }
                    if let Some(v) = line.to_lowercase().strip_prefix("content-length:") {
                        content_length = v.trim().parse().unwrap_or(0);
                    }
                }
                let mut body = vec![0u8; content_length];
                let _ = reader.read_exact(&mut body);
                let _ = stream.write_all(response.as_bytes());
            }
        });
        format!("http://{addr}")
    }

    fn ok(body: &str) -> String {
        format!(
            "HTTP/1.1 200 OK\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{}",
            body.len(),
            body
        )
    }

    #[test]
    fn draws_k_completions() {
        let url = serve(vec![
            ok(r#"{"choices": ["one"]}"#),
            ok(r#"{"choices": ["two"]}"#),
            ok(r#"{"choices": ["three"]}"#),
        ]);
        let generator = HttpGenerator::new(url);
        let texts = sample(&generator, "p", 3, 0.7).unwrap();
        assert_eq!(texts.len(), 3);
        assert_eq!(texts[0], "one");
    }

    #[test]
    fn failed_status_retried_then_succeeds() {
        let url = serve(vec![
            "HTTP/1.1 500 Oops\r\ncontent-length: 0\r\nconnection: close\r\n\r\n".to_string(),
            ok(r#"{"choices": ["recovered"]}"#),
        ]);
        let generator = HttpGenerator::new(url);
        let texts = sample(&generator, "p", 1, 0.7).unwrap();
        assert_eq!(texts, vec!["recovered"]);
    }
}
