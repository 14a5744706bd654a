//! Blocking JSON-over-HTTP client with bounded retries.

use std::thread;
use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

/// Retry schedule for transport failures, 429s, and 5xx responses.
#[derive(Debug, Clone, PartialEq)]
pub struct RetryPolicy {
    /// Retries after the first attempt.
    pub max_retries: u32,
    pub initial_backoff: Duration,
    pub timeout: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_retries: 3,
            initial_backoff: Duration::from_millis(500),
            timeout: Duration::from_secs(60),
        }
    }
}

impl RetryPolicy {
    /// Delay before retry `attempt` (1-based): 0.5s, 1s, 2s, ...
    pub fn backoff(&self, attempt: u32) -> Duration {
        self.initial_backoff * 2u32.saturating_pow(attempt.saturating_sub(1))
    }
}

#[derive(Debug, Clone)]
pub struct JsonClient {
    agent: ureq::Agent,
    url: String,
    bearer: Option<String>,
    retry: RetryPolicy,
}

enum Attempt {
    Retry(String),
    Fatal(String),
}

impl JsonClient {
    pub fn new(url: impl Into<String>, bearer: Option<String>, retry: RetryPolicy) -> Self {
        let config = ureq::Agent::config_builder()
            .timeout_global(Some(retry.timeout))
            .http_status_as_error(false)
            .build();
        Self {
            agent: ureq::Agent::new_with_config(config),
            url: url.into(),
            bearer,
            retry,
        }
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    pub fn retry_policy(&self) -> &RetryPolicy {
        &self.retry
    }

    fn attempt<R: DeserializeOwned>(&self, body: &serde_json::Value) -> Result<R, Attempt> {
        let mut request = self.agent.post(&self.url);
        if let Some(token) = &self.bearer {
            request = request.header("Authorization", &format!("Bearer {token}"));
        }
        let mut response = request
            .send_json(body)
            .map_err(|e| Attempt::Retry(e.to_string()))?;
        let status = response.status().as_u16();
        if status == 429 || status >= 500 {
            return Err(Attempt::Retry(format!("HTTP {status}")));
        }
        if status >= 400 {
            return Err(Attempt::Fatal(format!("HTTP {status}")));
        }
        response
            .body_mut()
            .read_json::<R>()
            .map_err(|e| Attempt::Fatal(format!("bad response body: {e}")))
    }

    /// POST `body` and decode the JSON reply, retrying per the policy.
    pub fn post<B: Serialize, R: DeserializeOwned>(&self, body: &B) -> Result<R> {
        let body = serde_json::to_value(body)
            .map_err(|e| Error::validation(format!("request body: {e}")))?;
        let mut attempt = 0;
        loop {
            match self.attempt(&body) {
                Ok(reply) => return Ok(reply),
                Err(Attempt::Fatal(msg)) => {
                    return Err(Error::env(format!("{}: {msg}", self.url)));
                }
                Err(Attempt::Retry(msg)) => {
                    if attempt >= self.retry.max_retries {
                        return Err(Error::env(format!(
                            "{}: {msg} (gave up after {} attempts)",
                            self.url,
                            attempt + 1
                        )));
                    }
                    attempt += 1;
                    thread::sleep(self.retry.backoff(attempt));
                }
            }
        }
    }
}
