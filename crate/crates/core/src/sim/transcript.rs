//! Re-scoring recorded teaching transcripts.
//!
//! A transcript is newline-delimited `{d, tokens, intention}` records. Scoring
//! replays it through a fresh MMM session with the lexicon matcher.

use std::collections::BTreeSet;
use std::io::Write;

use serde::Serialize;
use thiserror::Error;

use crate::matcher::Matchers;
use crate::score::{ScoreStrategy, Valence};
use crate::session::{Condition, Session, SessionConfig, SessionError, TranscriptEntry};
use crate::sim::cohort::simulation_epoch;
use crate::token::ConceptId;

#[derive(Debug, Error)]
pub enum TranscriptError {
    #[error("corrupt transcript at line {line}: {reason}")]
    CorruptTranscript { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Parses a transcript; `d` must count up from 1.
pub fn read_transcript(text: &str) -> Result<Vec<(usize, TranscriptEntry)>, TranscriptError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let entry: TranscriptEntry =
            serde_json::from_str(raw).map_err(|e| TranscriptError::CorruptTranscript {
                line,
                reason: e.to_string(),
            })?;
        let expected = out.len() as u32 + 1;
        if entry.d != expected {
            return Err(TranscriptError::CorruptTranscript {
                line,
                reason: format!("expected d={expected}, found d={}", entry.d),
            });
        }
        out.push((line, entry));
    }
    Ok(out)
}

pub fn write_transcript<W: Write>(entries: &[TranscriptEntry], mut out: W) -> std::io::Result<()> {
    for e in entries {
        serde_json::to_writer(&mut out, e)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoredIteration {
    pub d: u32,
    #[serde(serialize_with = "join_ids")]
    pub matched: BTreeSet<ConceptId>,
    #[serde(serialize_with = "join_ids")]
    pub newly_learned: BTreeSet<ConceptId>,
    pub s_d_num: u32,
    pub s_d_den: u32,
    pub s_d: String,
    pub s_cum: f64,
    pub valence: Valence,
}

fn join_ids<S: serde::Serializer>(ids: &BTreeSet<ConceptId>, s: S) -> Result<S::Ok, S::Error> {
    let joined: Vec<&str> = ids.iter().map(ConceptId::as_str).collect();
    s.serialize_str(&joined.join(";"))
}

pub fn score_transcript(
    entries: &[(usize, TranscriptEntry)],
    strategy: ScoreStrategy,
) -> Result<Vec<ScoredIteration>, TranscriptError> {
    let mut config = SessionConfig::new(Condition::Mmm).with_strategy(strategy);
    config.max_iterations = entries.len().max(1) as u32;
    let mut session = Session::create("transcript", config, simulation_epoch())
        .expect("transcript config is valid");
    let matchers = Matchers::lexicon_only();
    let mut out = Vec::with_capacity(entries.len());
    for (line, e) in entries {
        let r = session
            .submit(
                e.tokens.clone(),
                e.intention.clone(),
                &matchers,
                simulation_epoch(),
            )
            .map_err(|err| TranscriptError::CorruptTranscript {
                line: *line,
                reason: match err {
                    SessionError::NotActive => "session already complete".to_string(),
                    other => other.to_string(),
                },
            })?;
        out.push(ScoredIteration {
            d: r.d,
            matched: r.matched.clone(),
            newly_learned: r.newly_learned.clone(),
            s_d_num: r.score.s_d.numerator(),
            s_d_den: r.score.s_d.denominator(),
            s_d: r.score.s_d.decimal(),
            s_cum: r.s_cum,
            valence: r.feedback.valence,
        });
    }
    Ok(out)
}

/// CSV with a header row; nothing at all for an empty transcript.
pub fn write_scores<W: Write>(rows: &[ScoredIteration], out: W) -> Result<(), TranscriptError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
