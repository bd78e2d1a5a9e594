//! Sentiment scoring on the 0-4 scale (0 very negative, 4 very positive).
//!
//! Two providers: a built-in lexicon scorer, and a client for an external
//! scoring service speaking JSON over HTTP. The external client can fall
//! back to the lexicon when the service misbehaves.

use super::tokenize::{DefaultTokenizer, Tokenizer};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::io::{Read, Write};
use std::net::TcpStream;
use std::path::Path;
use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

/// A sentiment value, guaranteed to lie in [0, 4].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SentimentScore(f64);

impl SentimentScore {
    pub const NEUTRAL: SentimentScore = SentimentScore(2.0);

    /// Clamps into [0, 4]; non-finite input becomes neutral.
    pub fn new(value: f64) -> SentimentScore {
        if value.is_finite() {
            SentimentScore(value.clamp(0.0, 4.0))
        } else {
            SentimentScore::NEUTRAL
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Every text receives a score; implementations define what failure means.
pub trait SentimentProvider: Send + Sync {
    fn score(&self, text: &str) -> Result<SentimentScore>;
}

/// Counts positive and negative lexicon hits and maps the balance onto the
/// 0-4 scale: `2 + 2 * clamp((pos - neg) / max(1, pos + neg), -1, 1)`.
#[derive(Debug, Clone)]
pub struct LexiconScorer {
    positive: HashSet<String>,
    negative: HashSet<String>,
}

impl LexiconScorer {
    pub fn new<S: AsRef<str>>(positive: &[S], negative: &[S]) -> LexiconScorer {
        LexiconScorer {
            positive: positive.iter().map(|s| s.as_ref().to_lowercase()).collect(),
            negative: negative.iter().map(|s| s.as_ref().to_lowercase()).collect(),
        }
    }

    /// Loads one term per line from the two lexicon files.
    pub fn from_files(positive: &Path, negative: &Path) -> Result<LexiconScorer> {
        let read = |path: &Path| -> Result<Vec<String>> {
            let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            Ok(content
                .lines()
                .map(|l| l.trim().to_string())
                .filter(|l| !l.is_empty())
                .collect())
        };
        Ok(LexiconScorer::new(&read(positive)?, &read(negative)?))
    }
}

impl SentimentProvider for LexiconScorer {
    fn score(&self, text: &str) -> Result<SentimentScore> {
        let tokens = DefaultTokenizer.tokenize(text);
        let mut pos = 0usize;
        let mut neg = 0usize;
        for token in &tokens {
            if self.positive.contains(token) {
                pos += 1;
            }
            if self.negative.contains(token) {
                neg += 1;
            }
        }
        let balance = (pos as f64 - neg as f64) / (pos + neg).max(1) as f64;
        Ok(SentimentScore::new(2.0 + 2.0 * balance.clamp(-1.0, 1.0)))
    }
}

/// What the external client does when the service stays unreachable.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub enum SentimentFallback {
    Error,
    Lexicon,
}

#[derive(Debug, Clone)]
pub struct ExternalScorerConfig {
    /// `host:port` of the scoring service.
    pub endpoint: String,
    /// Request path, e.g. "/score".
    pub path: String,
    pub timeout: Duration,
    /// Additional attempts after the first failure.
    pub retries: u32,
    pub fallback: SentimentFallback,
    /// Concurrent in-flight request cap.
    pub max_concurrency: usize,
}

impl Default for ExternalScorerConfig {
    fn default() -> Self {
        ExternalScorerConfig {
            endpoint: "127.0.0.1:9095".into(),
            path: "/score".into(),
            timeout: Duration::from_secs(2),
            retries: 1,
            fallback: SentimentFallback::Error,
            max_concurrency: 8,
        }
    }
}

#[derive(Serialize)]
struct ScoreRequest<'a> {
    text: &'a str,
}

#[derive(Deserialize)]
struct ScoreResponse {
    score: f64,
}

/// Client for an external sentiment service: request `{"text": ...}`,
/// response `{"score": ...}`. Safe for concurrent use; in-flight requests
/// are capped by the configured concurrency limit.
pub struct ExternalScorer {
    config: ExternalScorerConfig,
    lexicon: Option<LexiconScorer>,
    gate: Semaphore,
}

impl ExternalScorer {
    pub fn new(config: ExternalScorerConfig, lexicon: Option<LexiconScorer>) -> ExternalScorer {
        let permits = config.max_concurrency.max(1);
        ExternalScorer {
            config,
            lexicon,
            gate: Semaphore::new(permits),
        }
    }

    fn request_once(&self, text: &str) -> Result<SentimentScore> {
        let body = serde_json::to_string(&ScoreRequest { text })?;
        let addr: std::net::SocketAddr = self
            .config
            .endpoint
            .parse()
            .map_err(|e| Error::Http(format!("bad endpoint {}: {e}", self.config.endpoint)))?;
        let stream = TcpStream::connect_timeout(&addr, self.config.timeout)
            .map_err(|e| Error::Http(format!("connect {addr}: {e}")))?;
        stream
            .set_read_timeout(Some(self.config.timeout))
            .and_then(|_| stream.set_write_timeout(Some(self.config.timeout)))
            .map_err(|e| Error::Http(e.to_string()))?;
        let mut stream = stream;
        let request = format!(
            "POST {} HTTP/1.1\r\nHost: {}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}",
            self.config.path,
            self.config.endpoint,
            body.len(),
            body
        );
        stream
            .write_all(request.as_bytes())
            .map_err(|e| Error::Http(format!("write: {e}")))?;

        let mut raw = Vec::new();
        stream
            .read_to_end(&mut raw)
            .map_err(|e| Error::Http(format!("read: {e}")))?;
        let text = String::from_utf8_lossy(&raw);
        let mut parts = text.splitn(2, "\r\n\r\n");
        let head = parts.next().unwrap_or("");
        let body = parts.next().unwrap_or("");
        let status: u32 = head
            .split_whitespace()
            .nth(1)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Http("malformed response".into()))?;
        if status != 200 {
            return Err(Error::Http(format!("service returned status {status}")));
        }
        let parsed: ScoreResponse = serde_json::from_str(body.trim())?;
        Ok(SentimentScore::new(parsed.score))
    }
}

impl SentimentProvider for ExternalScorer {
    fn score(&self, text: &str) -> Result<SentimentScore> {
        let _permit = self.gate.acquire();
        let mut last = None;
        for _ in 0..=self.config.retries {
            match self.request_once(text) {
                Ok(score) => return Ok(score),
                Err(e) => last = Some(e),
            }
        }
        let err = last.expect("at least one attempt");
        match (&self.config.fallback, &self.lexicon) {
            (SentimentFallback::Lexicon, Some(lex)) => lex.score(text),
            (SentimentFallback::Lexicon, None) => Err(Error::Http(format!(
                "{err}; lexicon fallback requested but no lexicon configured"
            ))),
            (SentimentFallback::Error, _) => Err(err),
        }
    }
}

/// Counting semaphore over Mutex + Condvar; permits release on drop.
struct Semaphore {
    state: Mutex<usize>,
    available: Condvar,
    inner: Arc<()>,
}

struct Permit<'a>(&'a Semaphore);

impl Semaphore {
    fn new(permits: usize) -> Semaphore {
        Semaphore {
            state: Mutex::new(permits),
            available: Condvar::new(),
            inner: Arc::new(()),
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut count = self.state.lock().unwrap();
        while *count == 0 {
            count = self.available.wait(count).unwrap();
        }
        *count -= 1;
        let _ = &self.inner;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut count = self.0.state.lock().unwrap();
        *count += 1;
        self.0.available.notify_one();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn scorer() -> LexiconScorer {
        LexiconScorer::new(&["good", "great", "joy"], &["bad", "awful"])
    }

    #[test]
    fn empty_text_is_neutral() {
        assert_eq!(scorer().score("").unwrap(), SentimentScore::NEUTRAL);
        assert_eq!(scorer().score("nothing known").unwrap().value(), 2.0);
    }

    #[test]
    fn pure_positive_saturates() {
        assert_eq!(scorer().score("good great joy").unwrap().value(), 4.0);
        assert_eq!(scorer().score("good").unwrap().value(), 4.0);
    }

    #[test]
    fn pure_negative_floors() {
        assert_eq!(scorer().score("bad awful").unwrap().value(), 0.0);
    }

    #[test]
    fn balanced_hits_cancel() {
        assert_eq!(scorer().score("good bad").unwrap().value(), 2.0);
        assert_eq!(scorer().score("good good bad bad").unwrap().value(), 2.0);
    }

    #[test]
    fn partial_balance_interpolates() {
        // 2 pos, 1 neg: 2 + 2 * (1/3)
        let s = scorer().score("good great bad").unwrap().value();
        assert!((s - (2.0 + 2.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn lexicon_files_load() {
        let dir = tempfile::tempdir().unwrap();
        let pos = dir.path().join("pos.txt");
        let neg = dir.path().join("neg.txt");
        std::fs::write(&pos, "up\nshine\n\n").unwrap();
        std::fs::write(&neg, "down\n").unwrap();
        let lex = LexiconScorer::from_files(&pos, &neg).unwrap();
        assert_eq!(lex.score("up shine").unwrap().value(), 4.0);
        assert_eq!(lex.score("down").unwrap().value(), 0.0);
    }

    #[test]
    fn score_type_clamps() {
        assert_eq!(SentimentScore::new(9.0).value(), 4.0);
        assert_eq!(SentimentScore::new(-3.0).value(), 0.0);
        assert_eq!(SentimentScore::new(f64::NAN).value(), 2.0);
    }

    proptest! {
        #[test]
        fn any_input_lands_in_range(text in "\\PC*") {
            let v = scorer().score(&text).unwrap().value();
            prop_assert!((0.0..=4.0).contains(&v));
        }
    }

    fn spawn_mock(status: u32, body: &'static str) -> (std::net::SocketAddr, std::thread::JoinHandle<()>) {
        let server = tiny_http::Server::http("127.0.0.1:0").unwrap();
        let addr = match server.server_addr() {
            tiny_http::ListenAddr::IP(a) => a,
            _ => unreachable!(),
        };
        let handle = std::thread::spawn(move || {
            if let Ok(request) = server.recv() {
                let response = tiny_http::Response::from_string(body)
                    .with_status_code(tiny_http::StatusCode(status as u16));
                let _ = request.respond(response);
            }
        });
        (addr, handle)
    }

    #[test]
    fn external_scorer_round_trip() {
        let (addr, handle) = spawn_mock(200, r#"{"score": 3.25}"#);
        let scorer = ExternalScorer::new(
            ExternalScorerConfig {
                endpoint: addr.to_string(),
                retries: 0,
                ..Default::default()
            },
            None,
        );
        assert_eq!(scorer.score("whatever").unwrap().value(), 3.25);
        handle.join().unwrap();
    }

    #[test]
    fn external_scorer_falls_back_to_lexicon() {
        // Nothing listens on this port.
        let scorer = ExternalScorer::new(
            ExternalScorerConfig {
                endpoint: "127.0.0.1:1".into(),
                timeout: Duration::from_millis(100),
                retries: 0,
                fallback: SentimentFallback::Lexicon,
                ..Default::default()
            },
            Some(LexiconScorer::new(&["good"], &["bad"])),
        );
        assert_eq!(scorer.score("good").unwrap().value(), 4.0);
    }

    #[test]
    fn external_scorer_errors_without_fallback() {
        let scorer = ExternalScorer::new(
            ExternalScorerConfig {
                endpoint: "127.0.0.1:1".into(),
                timeout: Duration::from_millis(100),
                retries: 1,
                fallback: SentimentFallback::Error,
                ..Default::default()
            },
            None,
        );
        assert!(scorer.score("good").is_err());
    }

    #[test]
    fn non_200_is_an_error() {
        let (addr, handle) = spawn_mock(500, "busted");
        let scorer = ExternalScorer::new(
            ExternalScorerConfig {
                endpoint: addr.to_string(),
                retries: 0,
                ..Default::default()
            },
            None,
        );
        assert!(scorer.score("x").is_err());
        handle.join().unwrap();
    }
}
