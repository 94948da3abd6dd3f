//! Chat-completion client.
//!
//! Sends `{model, temperature, messages: [{role, content}]}` and accepts the
//! reply text from any of the common response shapes.

use std::time::Duration;

use serde_json::{json, Value as Json};

use super::{build_prompt, parse_proposal, LawProposal, Oracle, OracleContext, OracleError};

pub const LLM_URL_ENV: &str = "REFINERY_LLM_URL";
pub const LLM_KEY_ENV: &str = "REFINERY_LLM_KEY";

const SYSTEM: &str = "You select refinement laws. Answer with one refinement-script line.";

#[derive(Clone, Debug, PartialEq, serde::Deserialize, serde::Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct RemoteConfig {
    /// Endpoint; falls back to `REFINERY_LLM_URL`.
    pub url: Option<String>,
    /// Bearer token; falls back to `REFINERY_LLM_KEY`.
    pub key: Option<String>,
    pub model: String,
    pub temperature: f64,
    pub timeout_secs: u64,
}

impl Default for RemoteConfig {
    fn default() -> Self {
        RemoteConfig { url: None, key: None, model: "default".into(), temperature: 0.0, timeout_secs: 60 }
    }
}

impl RemoteConfig {
    /// Fills the endpoint and key from the environment; an endpoint is required.
    pub fn resolved(&self) -> Result<RemoteConfig, OracleError> {
        let env = |k: &str| std::env::var(k).ok().filter(|s| !s.trim().is_empty());
        let url = self
            .url
            .clone()
            .or_else(|| env(LLM_URL_ENV))
            .ok_or_else(|| OracleError::Config(format!("no endpoint configured (set {LLM_URL_ENV})")))?;
        Ok(RemoteConfig { url: Some(url), key: self.key.clone().or_else(|| env(LLM_KEY_ENV)), ..self.clone() })
    }
}

pub struct RemoteOracle {
    cfg: RemoteConfig,
    agent: ureq::Agent,
}

impl RemoteOracle {
    pub fn new(cfg: RemoteConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(cfg.timeout_secs.max(1))))
            .http_status_as_error(false)
            .build()
            .into();
        RemoteOracle { cfg, agent }
    }

    fn complete(&self, prompt: &str) -> Result<String, OracleError> {
        let url = self.cfg.url.as_deref().ok_or_else(|| OracleError::Config("no endpoint configured".into()))?;
        let body = json!({
            "model": self.cfg.model,
            "temperature": self.cfg.temperature,
            "messages": [
                {"role": "system", "content": SYSTEM},
                {"role": "user", "content": prompt},
            ],
        });
        let mut req = self.agent.post(url).header("Content-Type", "application/json");
        if let Some(key) = &self.cfg.key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req
            .send_json(&body)
            .map_err(|e| OracleError::Transport { message: e.to_string(), retryable: true })?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| OracleError::Transport { message: e.to_string(), retryable: true })?;
        if !(200..300).contains(&status) {
            let retryable = !matches!(status, 400 | 401 | 403 | 404);
            return Err(OracleError::Transport { message: format!("HTTP {status}: {}", text.trim()), retryable });
        }
        let json: Json = serde_json::from_str(&text)
            .map_err(|e| OracleError::Transport { message: format!("reply is not JSON: {e}"), retryable: true })?;
        reply_text(&json)
            .ok_or_else(|| OracleError::Transport { message: "reply carries no message text".into(), retryable: true })
    }
}

/// The assistant text in a chat-completion response.
fn reply_text(j: &Json) -> Option<String> {
    let candidates = [
        j.pointer("/choices/0/message/content"),
        j.pointer("/choices/0/text"),
        j.pointer("/message/content"),
        j.pointer("/content/0/text"),
        j.pointer("/content"),
    ];
    candidates.into_iter().flatten().find_map(|v| v.as_str().map(str::to_string))
}

impl Oracle for RemoteOracle {
    fn name(&self) -> &str {
        "remote"
    }

    fn propose(&mut self, ctx: &OracleContext) -> Result<LawProposal, OracleError> {
        let reply = self.complete(&build_prompt(ctx))?;
        let mut p = parse_proposal(&reply, ctx)?;
        p.rationale = format!("model {}", self.cfg.model);
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reply_shapes() {
        let openai = json!({"choices": [{"message": {"role": "assistant", "content": "skip"}}]});
        assert_eq!(reply_text(&openai).as_deref(), Some("skip"));
        let blocks = json!({"content": [{"type": "text", "text": "seq mid: x = 1"}]});
        assert_eq!(reply_text(&blocks).as_deref(), Some("seq mid: x = 1"));
        let plain = json!({"message": {"content": "skip"}});
        assert_eq!(reply_text(&plain).as_deref(), Some("skip"));
        assert_eq!(reply_text(&json!({"id": 3})), None);
    }

    #[test]
    fn explicit_endpoint_wins() {
        let cfg = RemoteConfig { url: Some("http://127.0.0.1:9".into()), ..Default::default() };
        assert_eq!(cfg.resolved().unwrap().url.as_deref(), Some("http://127.0.0.1:9"));
    }
}
