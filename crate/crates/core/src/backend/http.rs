use std::sync::{Condvar, Mutex};
use std::thread;
use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::wire::{self, *};
use super::{BackendConfig, BackendError, ModelBackend, QaOutput, SentimentProbs};

/// Counting semaphore bounding in-flight requests.
#[derive(Debug)]
struct Limiter {
    in_flight: Mutex<usize>,
    freed: Condvar,
    max: usize,
}

struct Permit<'a>(&'a Limiter);

impl Limiter {
    fn new(max: usize) -> Self {
        Self {
            in_flight: Mutex::new(0),
            freed: Condvar::new(),
            max,
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut n = self.in_flight.lock().unwrap_or_else(|e| e.into_inner());
        while *n >= self.max {
            n = self.freed.wait(n).unwrap_or_else(|e| e.into_inner());
        }
        *n += 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut n = self.0.in_flight.lock().unwrap_or_else(|e| e.into_inner());
        *n -= 1;
        self.0.freed.notify_one();
    }
}

/// Client for an inference sidecar.
///
/// Transport failures, non-2xx statuses and bodies that are not JSON are
/// retried with exponential backoff. A JSON body that does not fit the
/// endpoint schema is a [`BackendError::Protocol`] and is returned at once.
#[derive(Debug)]
pub struct HttpBackend {
    base_url: String,
    agent: ureq::Agent,
    max_retries: u32,
    backoff: Duration,
    limiter: Limiter,
}

enum Attempt<T> {
    Done(T),
    Retry(String),
    Fatal(String),
}

impl HttpBackend {
    pub fn new(config: &BackendConfig) -> Result<Self, BackendError> {
        config.validate()?;
        let base_url = config
            .base_url
            .as_deref()
            .unwrap_or_default()
            .trim_end_matches('/')
            .to_string();
        let agent = ureq::AgentBuilder::new()
            .timeout(Duration::from_millis(config.timeout_ms))
            .build();
        Ok(Self {
            base_url,
            agent,
            max_retries: config.max_retries,
            backoff: Duration::from_millis(config.backoff_ms),
            limiter: Limiter::new(config.max_concurrency),
        })
    }

    pub fn base_url(&self) -> &str {
        &self.base_url
    }

    fn attempt<Resp: DeserializeOwned>(&self, endpoint: &str, body: Option<&str>) -> Attempt<Resp> {
        let url = format!("{}{endpoint}", self.base_url);
        let result = {
            let _permit = self.limiter.acquire();
            match body {
                Some(body) => self
                    .agent
                    .post(&url)
                    .set("Content-Type", "application/json")
                    .send_string(body),
                None => self.agent.get(&url).call(),
            }
        };
        let response = match result {
            Ok(r) => r,
            Err(ureq::Error::Status(code, r)) => {
                let detail = r.into_string().unwrap_or_default();
                return Attempt::Retry(format!("HTTP {code}: {}", detail.trim()));
            }
            Err(e) => return Attempt::Retry(e.to_string()),
        };
        let text = match response.into_string() {
            Ok(t) => t,
            Err(e) => return Attempt::Retry(format!("reading body: {e}")),
        };
        let value: serde_json::Value = match serde_json::from_str(&text) {
            Ok(v) => v,
            Err(e) => return Attempt::Retry(format!("malformed body: {e}")),
        };
        match serde_json::from_value(value) {
            Ok(parsed) => Attempt::Done(parsed),
            Err(e) => Attempt::Fatal(e.to_string()),
        }
    }

    /// Sends a request, retrying transient failures. `body: None` issues a GET.
    pub fn call<Req: Serialize, Resp: DeserializeOwned>(
        &self,
        endpoint: &str,
        request: Option<&Req>,
    ) -> Result<Resp, BackendError> {
        let body = request
            .map(serde_json::to_string)
            .transpose()
            .map_err(|e| BackendError::InvalidRequest(e.to_string()))?;
        let mut last_error = String::new();
        for attempt in 0..=self.max_retries {
            if attempt > 0 {
                thread::sleep(self.backoff * 2u32.saturating_pow(attempt - 1));
            }
            match self.attempt(endpoint, body.as_deref()) {
                Attempt::Done(r) => return Ok(r),
                Attempt::Fatal(message) => return Err(protocol(endpoint, message)),
                Attempt::Retry(message) => last_error = message,
            }
        }
        Err(BackendError::Unavailable {
            endpoint: endpoint.to_string(),
            attempts: self.max_retries + 1,
            last_error,
        })
    }
}

fn protocol(endpoint: &str, message: impl Into<String>) -> BackendError {
    BackendError::Protocol {
        endpoint: endpoint.to_string(),
        message: message.into(),
    }
}

impl ModelBackend for HttpBackend {
    fn qa(&self, question: &str, context: &str) -> Result<QaOutput, BackendError> {
        let request = QaRequest {
            question: question.into(),
            context: context.into(),
        };
        let response: QaResponse = self.call(wire::QA, Some(&request))?;
        response.into_output().map_err(|m| protocol(wire::QA, m))
    }

    fn summarize(&self, text: &str, max_tokens: usize) -> Result<String, BackendError> {
        let request = SummarizeRequest {
            text: text.into(),
            max_tokens,
        };
        let response: SummarizeResponse = self.call(wire::SUMMARIZE, Some(&request))?;
        Ok(response.summary)
    }

    fn embed(&self, sentences: &[String]) -> Result<Vec<Vec<f64>>, BackendError> {
        let request = EmbedRequest {
            sentences: sentences.to_vec(),
        };
        let response: EmbedResponse = self.call(wire::EMBED, Some(&request))?;
        response
            .into_vectors(sentences.len())
            .map_err(|m| protocol(wire::EMBED, m))
    }

    fn sentiment(&self, text: &str) -> Result<SentimentProbs, BackendError> {
        let request = SentimentRequest { text: text.into() };
        let response: SentimentResponse = self.call(wire::SENTIMENT, Some(&request))?;
        response.into_probs().map_err(|m| protocol(wire::SENTIMENT, m))
    }

    fn health(&self) -> Result<(), BackendError> {
        let response: HealthResponse = self.call::<(), _>(wire::HEALTH, None)?;
        if response.status != "ok" || response.protocol != PROTOCOL_VERSION {
            return Err(protocol(
                wire::HEALTH,
                format!("status {:?}, protocol {:?}", response.status, response.protocol),
            ));
        }
        Ok(())
    }
}
