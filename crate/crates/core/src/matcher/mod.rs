//! Mapping a natural-language teaching intention onto dictionary concepts.
//!
//! Two backends exist: a deterministic [`lexicon`] matcher used by default
//! and in every test, and an [`llm`] client that asks a chat-completion
//! endpoint to pick concept ids.

pub mod lexicon;
pub mod llm;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::DomainError;
use crate::token::{ConceptDictionary, ConceptId};

pub use lexicon::LexiconMatcher;
pub use llm::{LlmConfig, LlmMatcher};

pub const MAX_INTENTION_WORDS: usize = 10;

/// A validated teaching intention: non-empty, at most ten words.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Intention(String);

impl Intention {
    pub fn new(text: impl Into<String>) -> Result<Self, DomainError> {
        let text = text.into();
        let words = text.split_whitespace().count();
        if words == 0 {
            return Err(DomainError::IntentionEmpty);
        }
        if words > MAX_INTENTION_WORDS {
            return Err(DomainError::IntentionTooLong {
                words,
                limit: MAX_INTENTION_WORDS,
            });
        }
        Ok(Intention(text))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for Intention {
    type Error = DomainError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        Intention::new(s)
    }
}

impl std::str::FromStr for Intention {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Intention::new(s)
    }
}

impl From<Intention> for String {
    fn from(i: Intention) -> Self {
        i.0
    }
}

impl fmt::Display for Intention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatcherBackend {
    #[default]
    Lexicon,
    Llm,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchResult {
    pub key_terms: Vec<String>,
    pub concepts: BTreeSet<ConceptId>,
    pub backend: MatcherBackend,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MatchError {
    #[error("matcher backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("malformed matcher response: {0}")]
    MalformedBackendResponse(String),
}

pub trait IntentionMatcher: Send + Sync {
    fn backend(&self) -> MatcherBackend;

    fn match_intention(
        &self,
        intention: &Intention,
        dict: &ConceptDictionary,
    ) -> Result<MatchResult, MatchError>;
}

/// Both backends behind one value; the LLM side is optional.
#[derive(Debug, Default)]
pub struct Matchers {
    pub lexicon: LexiconMatcher,
    pub llm: Option<LlmMatcher>,
}

impl Matchers {
    pub fn lexicon_only() -> Self {
        Matchers::default()
    }

    pub fn with_llm(llm: LlmMatcher) -> Self {
        Matchers {
            lexicon: LexiconMatcher,
            llm: Some(llm),
        }
    }

    pub fn match_intention(
        &self,
        intention: &Intention,
        dict: &ConceptDictionary,
        backend: MatcherBackend,
    ) -> Result<MatchResult, MatchError> {
        match backend {
            MatcherBackend::Lexicon => self.lexicon.match_intention(intention, dict),
            MatcherBackend::Llm => match &self.llm {
                Some(llm) => llm.match_intention(intention, dict),
                None => Err(MatchError::BackendUnavailable(
                    "no LLM backend configured".into(),
                )),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn word_limit() {
        assert!(Intention::new("one two three four five six seven eight nine ten").is_ok());
        assert_eq!(
            Intention::new("one two three four five six seven eight nine ten eleven"),
            Err(DomainError::IntentionTooLong {
                words: 11,
                limit: 10
            })
        );
        assert_eq!(Intention::new("   \t "), Err(DomainError::IntentionEmpty));
        // hyphenated compounds are one word
        assert!(Intention::new("all-unique one two three four five six seven eight nine").is_ok());
    }

    #[test]
    fn missing_llm_is_unavailable() {
        let m = Matchers::lexicon_only();
        let i = Intention::new("blue").unwrap();
        let err = m
            .match_intention(&i, &ConceptDictionary::standard(), MatcherBackend::Llm)
            .unwrap_err();
        assert!(matches!(err, MatchError::BackendUnavailable(_)));
    }
}
