//! Chat-completion backed matcher.
//!
//! The prompt hands the model the intention and the full dictionary and asks
//! for a JSON array of concept ids. Transport failures are retried a bounded
//! number of times; exhaustion surfaces as [`MatchError::BackendUnavailable`]
//! so the iteration is rejected instead of being scored against an empty match.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::time::{Duration, Instant};

use parking_lot::Mutex;
use serde::Serialize;
use serde_json::{json, Value};

use crate::matcher::{Intention, IntentionMatcher, MatchError, MatchResult, MatcherBackend};
use crate::token::{ConceptDictionary, ConceptId};

pub const ENV_ENDPOINT: &str = "MMM_LLM_ENDPOINT";
pub const ENV_MODEL: &str = "MMM_LLM_MODEL";
pub const ENV_API_KEY: &str = "MMM_LLM_API_KEY";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PromptDocument {
    pub system: String,
    pub user: String,
}

pub fn build_llm_prompt(intention: &Intention, dict: &ConceptDictionary) -> PromptDocument {
    let system = "You map a teacher's stated intention onto the concepts a robot can learn. \
                  Answer with a JSON array of concept ids and nothing else."
        .to_string();
    let mut user = String::new();
    user.push_str("Concept dictionary:\n");
    for e in dict.entries() {
        let _ = writeln!(user, "- {}: {}", e.id, e.description);
    }
    user.push_str("\nTeacher intention:\n");
    let _ = writeln!(user, "\"{}\"", intention.as_str());
    user.push_str(
        "\nStep 1: identify the key terms that express what the teacher wants to teach.\n\
         Step 2: map each key term to every concept id above that it refers to.\n\
         Return only a JSON array of the matched concept ids, for example \
         [\"unique-colors\"]. Return [] if nothing matches.\n",
    );
    PromptDocument { system, user }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedConcepts {
    pub key_terms: Vec<String>,
    pub concepts: BTreeSet<ConceptId>,
    /// Entries that were not dictionary ids.
    pub dropped: Vec<String>,
}

/// Pulls the first JSON array out of a model reply.
pub fn parse_llm_response(
    raw: &str,
    dict: &ConceptDictionary,
) -> Result<ParsedConcepts, MatchError> {
    let items = raw
        .match_indices('[')
        .find_map(|(i, _)| {
            serde_json::Deserializer::from_str(&raw[i..])
                .into_iter::<Vec<Value>>()
                .next()
                .and_then(Result::ok)
        })
        .ok_or_else(|| MatchError::MalformedBackendResponse(truncate(raw)))?;

    let mut parsed = ParsedConcepts {
        key_terms: Vec::new(),
        concepts: BTreeSet::new(),
        dropped: Vec::new(),
    };
    for item in items {
        let text = match item {
            Value::String(s) => s,
            other => other.to_string(),
        };
        match dict.lookup(text.trim()) {
            Some(id) => {
                if parsed.concepts.insert(id) {
                    parsed.key_terms.push(id.as_str().to_string());
                }
            }
            None => {
                tracing::warn!(entry = %text, "dropping unknown concept id from model reply");
                parsed.dropped.push(text);
            }
        }
    }
    Ok(parsed)
}

fn truncate(s: &str) -> String {
    s.chars().take(200).collect()
}

#[derive(Debug, Clone)]
pub struct LlmConfig {
    pub endpoint: String,
    pub model: String,
    pub api_key: Option<String>,
    /// Extra attempts after the first.
    pub retries: u32,
    pub timeout: Duration,
    pub backoff: Duration,
    /// Token-bucket refill rate; `None` disables rate limiting.
    pub requests_per_second: Option<f64>,
}

impl LlmConfig {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        LlmConfig {
            endpoint: endpoint.into(),
            model: model.into(),
            api_key: None,
            retries: 2,
            timeout: Duration::from_secs(10),
            backoff: Duration::from_millis(250),
            requests_per_second: None,
        }
    }

    /// Reads endpoint, model and key from the environment. `None` when no
    /// endpoint is set.
    pub fn from_env() -> Option<Self> {
        let endpoint = std::env::var(ENV_ENDPOINT).ok()?;
        let model = std::env::var(ENV_MODEL).unwrap_or_else(|_| "gpt-4-turbo".to_string());
        let mut cfg = LlmConfig::new(endpoint, model);
        cfg.api_key = std::env::var(ENV_API_KEY).ok();
        Some(cfg)
    }
}

#[derive(Debug)]
struct TokenBucket {
    rate: f64,
    capacity: f64,
    tokens: f64,
    last: Instant,
}

impl TokenBucket {
    fn new(rate: f64) -> Self {
        let capacity = rate.max(1.0);
        TokenBucket {
            rate,
            capacity,
            tokens: capacity,
            last: Instant::now(),
        }
    }

    /// Takes one token, returning how long the caller must wait first.
    fn take(&mut self) -> Duration {
        let now = Instant::now();
        let elapsed = now.duration_since(self.last).as_secs_f64();
        self.last = now;
        self.tokens = (self.tokens + elapsed * self.rate).min(self.capacity);
        self.tokens -= 1.0;
        if self.tokens >= 0.0 {
            Duration::ZERO
        } else {
            Duration::from_secs_f64(-self.tokens / self.rate)
        }
    }
}

#[derive(Debug)]
pub struct LlmMatcher {
    config: LlmConfig,
    agent: ureq::Agent,
    bucket: Option<Mutex<TokenBucket>>,
}

impl LlmMatcher {
    pub fn new(config: LlmConfig) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .build()
            .into();
        let bucket = config
            .requests_per_second
            .filter(|r| *r > 0.0)
            .map(|r| Mutex::new(TokenBucket::new(r)));
        LlmMatcher {
            config,
            agent,
            bucket,
        }
    }

    pub fn config(&self) -> &LlmConfig {
        &self.config
    }

    fn request_body(&self, prompt: &PromptDocument) -> Value {
        json!({
            "model": self.config.model,
            "temperature": 0,
            "messages": [
                {"role": "system", "content": prompt.system},
                {"role": "user", "content": prompt.user},
            ],
        })
    }

    fn send_once(&self, body: &Value) -> Result<Value, String> {
        if let Some(bucket) = &self.bucket {
            let wait = bucket.lock().take();
            if !wait.is_zero() {
                std::thread::sleep(wait);
            }
        }
        let mut req = self.agent.post(&self.config.endpoint);
        if let Some(key) = &self.config.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req.send_json(body).map_err(|e| e.to_string())?;
        resp.body_mut()
            .read_json::<Value>()
            .map_err(|e| e.to_string())
    }

    /// Returns the assistant message text.
    fn complete(&self, prompt: &PromptDocument) -> Result<String, MatchError> {
        let body = self.request_body(prompt);
        let mut last_err = String::new();
        for attempt in 0..=self.config.retries {
            if attempt > 0 {
                std::thread::sleep(self.config.backoff * attempt);
            }
            match self.send_once(&body) {
                Ok(reply) => {
                    return reply
                        .pointer("/choices/0/message/content")
                        .and_then(Value::as_str)
                        .map(str::to_string)
                        .ok_or_else(|| {
                            MatchError::MalformedBackendResponse(truncate(&reply.to_string()))
                        })
                }
                Err(e) => {
                    tracing::warn!(attempt, error = %e, "LLM request failed");
                    last_err = e;
                }
            }
        }
        Err(MatchError::BackendUnavailable(format!(
            "{} attempts failed, last error: {last_err}",
            self.config.retries + 1
        )))
    }
}

impl IntentionMatcher for LlmMatcher {
    fn backend(&self) -> MatcherBackend {
        MatcherBackend::Llm
    }

    fn match_intention(
        &self,
        intention: &Intention,
        dict: &ConceptDictionary,
    ) -> Result<MatchResult, MatchError> {
        let prompt = build_llm_prompt(intention, dict);
        let content = self.complete(&prompt)?;
        let parsed = parse_llm_response(&content, dict)?;
        Ok(MatchResult {
            key_terms: parsed.key_terms,
            concepts: parsed.concepts,
            backend: MatcherBackend::Llm,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ConceptId::*;

    #[test]
    fn prompt_contains_dictionary_and_intention() {
        let dict = ConceptDictionary::standard();
        let i = Intention::new("I want to show the robot unique colors.").unwrap();
        let p = build_llm_prompt(&i, &dict);
        for c in ConceptId::ALL {
            assert!(p.user.contains(c.as_str()), "missing {c}");
        }
        assert!(p.user.contains("I want to show the robot unique colors."));
        assert_eq!(p, build_llm_prompt(&i, &dict));
        assert_eq!(
            serde_json::to_vec(&p).unwrap(),
            serde_json::to_vec(&build_llm_prompt(&i, &dict)).unwrap()
        );
    }

    #[test]
    fn parse_examples() {
        let d = ConceptDictionary::standard();
        let p = parse_llm_response(r#"["unique-colors"]"#, &d).unwrap();
        assert_eq!(p.concepts, BTreeSet::from([UniqueColors]));
        assert!(p.dropped.is_empty());

        let p = parse_llm_response(r#"["unique-colors","not-a-concept"]"#, &d).unwrap();
        assert_eq!(p.concepts, BTreeSet::from([UniqueColors]));
        assert_eq!(p.dropped, vec!["not-a-concept"]);

        assert!(matches!(
            parse_llm_response("no array here", &d),
            Err(MatchError::MalformedBackendResponse(_))
        ));
    }

    #[test]
    fn parse_skips_prose_and_collapses_duplicates() {
        let d = ConceptDictionary::standard();
        let raw = "Sure [see below]:\n```json\n[\"size-large\", \"size-large\", 3]\n```";
        let p = parse_llm_response(raw, &d).unwrap();
        assert_eq!(p.concepts, BTreeSet::from([SizeLarge]));
        assert_eq!(p.key_terms, vec!["size-large"]);
        assert_eq!(p.dropped, vec!["3"]);
        assert!(parse_llm_response("[]", &d).unwrap().concepts.is_empty());
    }

    #[test]
    fn bucket_throttles_after_capacity() {
        let mut b = TokenBucket::new(1.0);
        assert_eq!(b.take(), Duration::ZERO);
        assert!(b.take() > Duration::from_millis(500));
    }

    #[test]
    fn unreachable_endpoint_exhausts_retries() {
        let mut cfg = LlmConfig::new("http://127.0.0.1:9/v1/chat/completions", "m");
        cfg.timeout = Duration::from_millis(200);
        cfg.backoff = Duration::from_millis(1);
        let m = LlmMatcher::new(cfg);
        let err = m
            .match_intention(
                &Intention::new("blue").unwrap(),
                &ConceptDictionary::standard(),
            )
            .unwrap_err();
        match err {
            MatchError::BackendUnavailable(msg) => assert!(msg.starts_with("3 attempts")),
            other => panic!("unexpected {other:?}"),
        }
    }
}
