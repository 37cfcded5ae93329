//! Deterministic keyword matcher over the study vocabulary.

use std::collections::BTreeSet;

use crate::matcher::{Intention, IntentionMatcher, MatchError, MatchResult, MatcherBackend};
use crate::token::{Attribute, ConceptDictionary, ConceptId, ConceptKind};

const DISTINCT_CUES: &[&str] = &["unique", "different", "distinct", "vary", "varying"];
const TOTAL_CUES: &[&str] = &["everything", "completely"];

fn value_word(attr: Attribute, value: usize) -> &'static str {
    const WORDS: [[&str; 3]; 3] = [
        ["blue", "red", "yellow"],
        ["circle", "square", "triangle"],
        ["small", "medium", "large"],
    ];
    WORDS[attr as usize][value]
}

fn attribute_noun(attr: Attribute) -> &'static str {
    match attr {
        Attribute::Color => "color",
        Attribute::Shape => "shape",
        Attribute::Size => "size",
    }
}

/// Lowercase, strip punctuation, drop one trailing `s` from each word.
pub fn normalize(text: &str) -> String {
    text.to_lowercase()
        .split_whitespace()
        .map(|w| {
            let w: String = w.chars().filter(|c| c.is_alphanumeric()).collect();
            match w.strip_suffix('s') {
                Some(stem) if !stem.is_empty() => stem.to_string(),
                _ => w,
            }
        })
        .filter(|w| !w.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Key term and concept pairs found in already-normalized text.
fn scan(text: &str, dict: &ConceptDictionary) -> Vec<(String, ConceptId)> {
    let words: Vec<&str> = text.split(' ').filter(|w| !w.is_empty()).collect();
    let has = |w: &str| words.contains(&w);
    let cue = DISTINCT_CUES.iter().copied().find(|c| has(c));
    let total = TOTAL_CUES.iter().copied().find(|c| has(c)).or_else(|| {
        words
            .windows(2)
            .any(|p| p == ["all", "attribute"])
            .then_some("all attribute")
    });

    let mut hits = Vec::new();
    for entry in dict.entries() {
        let term = match entry.id.kind() {
            ConceptKind::Value(attr, v) => {
                let w = value_word(attr, v);
                has(w).then(|| w.to_string())
            }
            ConceptKind::Unique(attr) => {
                let noun = attribute_noun(attr);
                cue.filter(|_| has(noun)).map(|c| format!("{c} {noun}"))
            }
            ConceptKind::AllUnique => cue.zip(total).map(|(c, t)| format!("{c} {t}")),
        };
        if let Some(term) = term {
            hits.push((term, entry.id));
        }
    }
    hits
}

/// Concepts triggered by raw intention text.
pub fn lexicon_match(text: &str, dict: &ConceptDictionary) -> BTreeSet<ConceptId> {
    scan(&normalize(text), dict)
        .into_iter()
        .map(|(_, c)| c)
        .collect()
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LexiconMatcher;

impl IntentionMatcher for LexiconMatcher {
    fn backend(&self) -> MatcherBackend {
        MatcherBackend::Lexicon
    }

    fn match_intention(
        &self,
        intention: &Intention,
        dict: &ConceptDictionary,
    ) -> Result<MatchResult, MatchError> {
        let hits = scan(&normalize(intention.as_str()), dict);
        let mut key_terms: Vec<String> = Vec::new();
        for (term, _) in &hits {
            if !key_terms.contains(term) {
                key_terms.push(term.clone());
            }
        }
        Ok(MatchResult {
            key_terms,
            concepts: hits.into_iter().map(|(_, c)| c).collect(),
            backend: MatcherBackend::Lexicon,
        })
    }
}
