//! Blocking JSON-over-HTTP helper shared by the remote providers.

use std::time::Duration;

use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{message}")]
pub struct HttpFailure {
    /// HTTP status when the server answered; `None` for transport failures.
    pub status: Option<u16>,
    pub message: String,
}

impl HttpFailure {
    /// Whether retrying the same request could plausibly succeed.
    pub fn retryable(&self) -> bool {
        match self.status {
            None => true,
            Some(s) => s == 408 || s == 429 || s >= 500,
        }
    }
}

pub fn post_json(
    url: &str,
    bearer: Option<&str>,
    body: &impl Serialize,
    timeout: Duration,
) -> Result<Value, HttpFailure> {
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(timeout))
        .http_status_as_error(false)
        .build()
        .into();
    let mut req = agent.post(url).header("Content-Type", "application/json");
    if let Some(token) = bearer {
        req = req.header("Authorization", format!("Bearer {token}"));
    }
    let mut resp = req.send_json(body).map_err(|e| HttpFailure {
        status: None,
        message: e.to_string(),
    })?;
    let status = resp.status().as_u16();
    let text = resp.body_mut().read_to_string().map_err(|e| HttpFailure {
        status: Some(status),
        message: e.to_string(),
    })?;
    if !(200..300).contains(&status) {
        let snippet: String = text.chars().take(200).collect();
        return Err(HttpFailure {
            status: Some(status),
            message: format!("HTTP {status}: {snippet}"),
        });
    }
    serde_json::from_str(&text).map_err(|e| HttpFailure {
        status: Some(status),
        message: format!("invalid JSON body: {e}"),
    })
}
