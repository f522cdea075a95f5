//! Language-model providers: a deterministic stub and an OpenAI-compatible
//! chat-completion client.

use std::collections::HashSet;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{invalid, Error, Result};
use crate::text::tokens;

pub trait LanguageProvider: Send + Sync {
    fn complete(&self, prompt: &str) -> Result<String>;
}

pub const STUB_FIRST_QUESTION: &str = "What kind of item are you looking for?";
pub const STUB_FOLLOW_UP_QUESTION: &str = "What else would you like in an item?";

/// Deterministic language model for tests and offline runs.
///
/// Recognizes the default templates by their `### task:` header and answers
/// each as a pure function of the prompt text:
///
/// * aspect: the first normalized token of the item description not among the
///   previously asked aspects (empty if there is none);
/// * query: `Do you like {aspect}?`;
/// * mono-query: a fixed opener, then a fixed follow-up;
/// * mono-recommend: the first `k` listed item names;
/// * user-response: `yes` when the query is a stub query whose aspect tokens
///   all occur in the description, otherwise `no`.
#[derive(Debug, Clone, Copy, Default)]
pub struct StubLm;

fn task(prompt: &str) -> Option<&str> {
    prompt.lines().find_map(|l| {
        l.trim()
            .strip_prefix("### task:")
            .map(|t| t.split_whitespace().next().unwrap_or(""))
    })
}

fn between<'a>(text: &'a str, open: &str, close: &str) -> Option<&'a str> {
    let start = text.find(open)? + open.len();
    let end = text[start..].find(close)? + start;
    Some(&text[start..end])
}

fn list_entries(block: &str) -> impl Iterator<Item = &str> {
    block
        .lines()
        .filter_map(|l| l.trim_start().strip_prefix("- "))
        .map(str::trim)
}

/// Parses a stub-style query `Do you like X?` into `X`.
pub fn stub_query_aspect(query: &str) -> Option<&str> {
    query
        .trim()
        .strip_prefix("Do you like ")
        .and_then(|q| q.strip_suffix('?'))
}

impl StubLm {
    fn aspect(prompt: &str) -> String {
        let description = between(prompt, "<item>", "</item>").unwrap_or("");
        let asked: HashSet<String> = between(prompt, "<asked>", "</asked>")
            .map(|b| list_entries(b).map(str::to_lowercase).collect())
            .unwrap_or_default();
        tokens(description)
            .find(|t| !asked.contains(t))
            .unwrap_or_default()
    }

    fn query(prompt: &str) -> Option<String> {
        let line = prompt.lines().find(|l| l.contains("whether the user likes: "))?;
        let aspect = line.split("whether the user likes: ").nth(1)?.trim();
        Some(format!("Do you like {aspect}?"))
    }

    fn mono_query(prompt: &str) -> String {
        let asked = between(prompt, "<dialogue>", "</dialogue>")
            .map(|d| d.lines().filter(|l| l.trim_start().starts_with("Q: ")).count())
            .unwrap_or(0);
        if asked == 0 {
            STUB_FIRST_QUESTION.to_string()
        } else {
            STUB_FOLLOW_UP_QUESTION.to_string()
        }
    }

    fn mono_recommend(prompt: &str) -> String {
        let k = prompt
            .split("Recommend a list of ")
            .nth(1)
            .and_then(|s| s.split_whitespace().next())
            .and_then(|s| s.parse::<usize>().ok())
            .unwrap_or(10);
        between(prompt, "<items>", "</items>")
            .map(|b| {
                list_entries(b)
                    .filter_map(|e| e.split(": ").next())
                    .take(k)
                    .collect::<Vec<_>>()
                    .join("\n")
            })
            .unwrap_or_default()
    }

    fn user_response(prompt: &str) -> String {
        let description = between(prompt, "<item>", "</item>").unwrap_or("");
        let query = prompt
            .lines()
            .find_map(|l| l.strip_prefix("Question: "))
            .unwrap_or("");
        let have: HashSet<String> = tokens(description).collect();
        let yes = stub_query_aspect(query).is_some_and(|aspect| {
            let want: Vec<String> = tokens(aspect).collect();
            !want.is_empty() && want.iter().all(|t| have.contains(t))
        });
        if yes { "yes" } else { "no" }.to_string()
    }
}

impl LanguageProvider for StubLm {
    fn complete(&self, prompt: &str) -> Result<String> {
        match task(prompt) {
            Some("aspect") => Ok(Self::aspect(prompt)),
            Some("query") => Self::query(prompt)
                .ok_or_else(|| Error::Elicitation("stub could not find the aspect".into())),
            Some("mono-query") => Ok(Self::mono_query(prompt)),
            Some("mono-recommend") => Ok(Self::mono_recommend(prompt)),
            Some("user-response") => Ok(Self::user_response(prompt)),
            _ => Err(Error::Elicitation("stub has no canned reply for this prompt".into())),
        }
    }
}

/// Connection settings for [`RemoteChat`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemoteChatConfig {
    /// Base URL or full `/chat/completions` URL.
    pub endpoint: String,
    #[serde(default)]
    pub api_key: Option<String>,
    #[serde(default = "default_model")]
    pub model: String,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: f64,
    #[serde(default = "default_backoff_ms")]
    pub backoff_ms: u64,
}

fn default_model() -> String {
    "gpt-3.5-turbo".into()
}

fn default_timeout_secs() -> f64 {
    60.0
}

fn default_backoff_ms() -> u64 {
    500
}

impl RemoteChatConfig {
    pub fn new(endpoint: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            api_key: None,
            model: default_model(),
            timeout_secs: default_timeout_secs(),
            backoff_ms: default_backoff_ms(),
        }
    }

    /// Reads `LLM_ENDPOINT`, `LLM_API_KEY` and `LLM_MODEL`.
    pub fn from_env() -> Result<Self> {
        let endpoint =
            std::env::var("LLM_ENDPOINT").map_err(|_| invalid("LLM_ENDPOINT is not set"))?;
        let mut cfg = Self::new(endpoint);
        cfg.api_key = std::env::var("LLM_API_KEY").ok().filter(|k| !k.is_empty());
        if let Ok(model) = std::env::var("LLM_MODEL") {
            cfg.model = model;
        }
        Ok(cfg)
    }

    fn url(&self) -> String {
        let base = self.endpoint.trim_end_matches('/');
        if base.ends_with("/chat/completions") {
            base.to_string()
        } else {
            format!("{base}/chat/completions")
        }
    }
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatMessage,
}

#[derive(Deserialize)]
struct ChatMessage {
    #[serde(default)]
    content: Option<String>,
}

/// Client for any OpenAI-compatible chat-completion endpoint, at temperature 0.
pub struct RemoteChat {
    cfg: RemoteChatConfig,
    agent: ureq::Agent,
}

impl RemoteChat {
    pub fn new(cfg: RemoteChatConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs_f64(cfg.timeout_secs)))
            .build()
            .into();
        Self { cfg, agent }
    }

    pub fn from_env() -> Result<Self> {
        Ok(Self::new(RemoteChatConfig::from_env()?))
    }

    fn call(&self, prompt: &str) -> Result<String> {
        let transport = |e: ureq::Error| Error::Transport {
            item: None,
            message: e.to_string(),
        };
        let body = json!({
            "model": self.cfg.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": 0,
        });
        let mut req = self.agent.post(&self.cfg.url());
        if let Some(key) = &self.cfg.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let resp: ChatResponse = req
            .send_json(body)
            .map_err(transport)?
            .body_mut()
            .read_json()
            .map_err(transport)?;
        resp.choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| Error::Transport {
                item: None,
                message: "chat response had no message content".into(),
            })
    }
}

impl LanguageProvider for RemoteChat {
    fn complete(&self, prompt: &str) -> Result<String> {
        crate::retry::with_one_retry(self.cfg.backoff_ms, || self.call(prompt))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stub_rejects_unknown_prompts() {
        assert!(StubLm.complete("hello").is_err());
    }

    #[test]
    fn endpoint_url_normalization() {
        assert_eq!(
            RemoteChatConfig::new("http://x/v1").url(),
            "http://x/v1/chat/completions"
        );
        assert_eq!(
            RemoteChatConfig::new("http://x/v1/chat/completions/").url(),
            "http://x/v1/chat/completions"
        );
    }
}
