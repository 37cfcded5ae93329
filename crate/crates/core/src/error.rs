use thiserror::Error;

/// Validation failures on domain values.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DomainError {
    #[error("a combination must not contain the same token twice")]
    DuplicateToken,
    #[error("a combination needs exactly 3 tokens, got {0}")]
    CombinationLength(usize),
    #[error("a grid needs exactly 9 cells, got {0}")]
    GridLength(usize),
    #[error("unknown concept `{0}`")]
    UnknownConcept(String),
    #[error("concept dictionary is empty")]
    EmptyDictionary,
    #[error("concept dictionary lists a concept twice")]
    DuplicateConcept,
    #[error("intention is empty")]
    IntentionEmpty,
    #[error("intention has {words} words, the limit is {limit}")]
    IntentionTooLong { words: usize, limit: usize },
}
