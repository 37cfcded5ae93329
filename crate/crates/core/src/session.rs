//! One teaching session: the supervisor pipeline, study protocol, and the
//! append-only event log it is reconstructed from.
//!
//! Every submission runs match → learn → score → feedback. Scores are
//! computed and logged under all three conditions; the condition only decides
//! what the feedback exposes.

use std::collections::BTreeSet;
use std::sync::OnceLock;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::error::DomainError;
use crate::matcher::{Intention, MatchError, MatchResult, MatcherBackend, Matchers};
use crate::robot::RobotState;
use crate::score::{
    cumulative_score, feedback_valence, iteration_score, performance_feedback, CumulativeScore,
    IterationScore, ScoreStrategy, Valence,
};
use crate::token::{ConceptDictionary, ConceptId, Grid, TokenCombination};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Condition {
    Mmm,
    Performance,
    Baseline,
}

impl Condition {
    pub const ALL: [Condition; 3] = [Condition::Mmm, Condition::Performance, Condition::Baseline];

    pub fn as_str(&self) -> &'static str {
        match self {
            Condition::Mmm => "mmm",
            Condition::Performance => "performance",
            Condition::Baseline => "baseline",
        }
    }
}

impl std::str::FromStr for Condition {
    type Err = SessionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Condition::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| SessionError::InvalidConfig(format!("unknown condition `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub condition: Condition,
    #[serde(default)]
    pub matcher_backend: MatcherBackend,
    #[serde(default)]
    pub score_strategy: ScoreStrategy,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: u32,
    #[serde(default = "default_demo_interval")]
    pub demo_interval: u32,
    /// Free-form provenance tag, e.g. the simulated policy that drove the session.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

fn default_max_iterations() -> u32 {
    25
}

fn default_demo_interval() -> u32 {
    5
}

impl SessionConfig {
    pub fn new(condition: Condition) -> Self {
        SessionConfig {
            condition,
            matcher_backend: MatcherBackend::Lexicon,
            score_strategy: ScoreStrategy::ExampleConsistent,
            seed: 0,
            max_iterations: default_max_iterations(),
            demo_interval: default_demo_interval(),
            label: None,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_strategy(mut self, strategy: ScoreStrategy) -> Self {
        self.score_strategy = strategy;
        self
    }

    pub fn validate(&self) -> Result<(), SessionError> {
        if self.max_iterations < 1 {
            return Err(SessionError::InvalidConfig(
                "max_iterations must be at least 1".into(),
            ));
        }
        if self.demo_interval < 1 {
            return Err(SessionError::InvalidConfig(
                "demo_interval must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// Iterations at which a demonstration is scheduled regardless of outcome.
    pub fn scheduled_demonstrations(&self) -> Vec<u32> {
        (1..=self.max_iterations)
            .filter(|d| d % self.demo_interval == 0)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Feedback {
    pub condition: Condition,
    pub valence: Valence,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_d: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_cum: Option<f64>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub d: u32,
    pub combo: TokenCombination,
    pub intention: Intention,
    pub key_terms: Vec<String>,
    pub matched: BTreeSet<ConceptId>,
    pub newly_learned: BTreeSet<ConceptId>,
    pub score: IterationScore,
    pub s_cum: f64,
    pub feedback: Feedback,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub demonstration: Option<Grid>,
    pub timestamp: DateTime<Utc>,
}

impl IterationRecord {
    pub fn s_d(&self) -> f64 {
        self.score.s_d.value()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionStatus {
    Active,
    CompletedSuccess,
    CompletedExhausted,
}

impl SessionStatus {
    pub fn is_active(&self) -> bool {
        matches!(self, SessionStatus::Active)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub id: String,
    pub config: SessionConfig,
    pub robot: RobotState,
    pub records: Vec<IterationRecord>,
    pub status: SessionStatus,
    /// Concepts taught so far.
    pub score: u32,
    pub cumulative: Option<CumulativeScore>,
    pub created_at: DateTime<Utc>,
}

impl SessionState {
    pub fn iterations(&self) -> u32 {
        self.records.len() as u32
    }

    pub fn remaining(&self) -> u32 {
        self.config.max_iterations - self.iterations()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SessionError {
    #[error("invalid session config: {0}")]
    InvalidConfig(String),
    #[error("session is not active")]
    NotActive,
    #[error(transparent)]
    Invalid(#[from] DomainError),
    #[error(transparent)]
    Matcher(#[from] MatchError),
    #[error("session `{0}` not found")]
    NotFound(String),
    #[error("session `{0}` already exists")]
    AlreadyExists(String),
    #[error("corrupt event log at line {line}: {reason}")]
    CorruptLog { line: usize, reason: String },
    #[error("i/o error: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventType {
    Created,
    Iteration,
    Demonstration,
    Completed,
}

/// One line of the event log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    #[serde(rename = "type")]
    pub kind: EventType,
    pub session_id: String,
    pub payload: Value,
    pub timestamp: DateTime<Utc>,
}

impl Event {
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("events always serialize")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemonstrationPayload {
    pub d: u32,
    pub seed: u64,
    pub grid: Grid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletedPayload {
    pub status: SessionStatus,
    pub score: u32,
    pub d: u32,
}

/// splitmix64 over `base ^ stream`; used to derive independent seeds.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const DEMO_STREAM: u64 = 0xD3;
const MESSAGE_STREAM: u64 = 0x3E;

#[derive(Debug, Deserialize)]
struct Templates {
    mmm: MmmTemplates,
    performance: PerformanceTemplates,
}

#[derive(Debug, Deserialize)]
struct MmmTemplates {
    positive: Vec<String>,
    mixed: Vec<String>,
    negative: Vec<String>,
}

#[derive(Debug, Deserialize)]
struct PerformanceTemplates {
    positive: Vec<String>,
    negative: Vec<String>,
}

fn templates() -> &'static Templates {
    static TEMPLATES: OnceLock<Templates> = OnceLock::new();
    TEMPLATES.get_or_init(|| {
        serde_json::from_str(include_str!("../resources/feedback_templates.json"))
            .expect("bundled feedback templates parse")
    })
}

fn pick(options: &[String], seed: u64, d: u32) -> &str {
    let i = derive_seed(seed ^ MESSAGE_STREAM, d as u64) as usize % options.len();
    &options[i]
}

fn build_feedback(
    config: &SessionConfig,
    d: u32,
    score: &IterationScore,
    s_cum: f64,
    newly: &BTreeSet<ConceptId>,
) -> Feedback {
    let t = templates();
    match config.condition {
        Condition::Mmm => {
            let valence = feedback_valence(score.s_d);
            let options = match valence {
                Valence::Positive => &t.mmm.positive,
                Valence::Mixed => &t.mmm.mixed,
                _ => &t.mmm.negative,
            };
            let message = pick(options, config.seed, d)
                .replace("{s_d}", &score.s_d.decimal())
                .replace("{s_cum}", &format!("{s_cum:.4}"));
            Feedback {
                condition: Condition::Mmm,
                valence,
                s_d: Some(score.s_d.value()),
                s_cum: Some(s_cum),
                message,
            }
        }
        Condition::Performance => {
            let valence = performance_feedback(newly);
            let options = if valence == Valence::Positive {
                &t.performance.positive
            } else {
                &t.performance.negative
            };
            Feedback {
                condition: Condition::Performance,
                valence,
                s_d: None,
                s_cum: None,
                message: pick(options, config.seed, d).to_string(),
            }
        }
        Condition::Baseline => Feedback {
            condition: Condition::Baseline,
            valence: Valence::None,
            s_d: None,
            s_cum: None,
            message: String::new(),
        },
    }
}

/// A session together with the events that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    state: SessionState,
    events: Vec<Event>,
    dict: ConceptDictionary,
}

impl Session {
    pub fn create(
        id: impl Into<String>,
        config: SessionConfig,
        now: DateTime<Utc>,
    ) -> Result<Session, SessionError> {
        config.validate()?;
        let id = id.into();
        let created = Event {
            kind: EventType::Created,
            session_id: id.clone(),
            payload: serde_json::to_value(&config).expect("config serializes"),
            timestamp: now,
        };
        Ok(Session {
            state: SessionState {
                id,
                robot: RobotState::new(config.seed),
                config,
                records: Vec::new(),
                status: SessionStatus::Active,
                score: 0,
                cumulative: None,
                created_at: now,
            },
            events: vec![created],
            dict: ConceptDictionary::standard(),
        })
    }

    pub fn state(&self) -> &SessionState {
        &self.state
    }

    pub fn id(&self) -> &str {
        &self.state.id
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    /// Newline-delimited event log.
    pub fn log(&self) -> String {
        self.events.iter().map(|e| e.to_line() + "\n").collect()
    }

    /// Full pipeline: match the intention, then apply it.
    pub fn submit(
        &mut self,
        combo: TokenCombination,
        intention: Intention,
        matchers: &Matchers,
        now: DateTime<Utc>,
    ) -> Result<&IterationRecord, SessionError> {
        if !self.state.status.is_active() {
            return Err(SessionError::NotActive);
        }
        let matched =
            matchers.match_intention(&intention, &self.dict, self.state.config.matcher_backend)?;
        self.apply(combo, intention, matched, now)
    }

    /// The deterministic part of a submission, given the matcher's output.
    pub fn apply(
        &mut self,
        combo: TokenCombination,
        intention: Intention,
        matched: MatchResult,
        now: DateTime<Utc>,
    ) -> Result<&IterationRecord, SessionError> {
        if !self.state.status.is_active() {
            return Err(SessionError::NotActive);
        }
        let config = &self.state.config;
        let d = self.state.iterations() + 1;
        let (robot, newly) = self.state.robot.learn(&combo);
        let score = iteration_score(&matched.concepts, &newly, config.score_strategy, &self.dict)?;
        let cumulative = cumulative_score(self.state.cumulative, score.s_d.value());
        let feedback = build_feedback(config, d, &score, cumulative.s_cum, &newly);

        let status = if robot.is_fully_taught() {
            SessionStatus::CompletedSuccess
        } else if d >= config.max_iterations {
            SessionStatus::CompletedExhausted
        } else {
            SessionStatus::Active
        };
        let demo_seed = derive_seed(config.seed ^ DEMO_STREAM, d as u64);
        let demonstration = (d.is_multiple_of(config.demo_interval) || !status.is_active())
            .then(|| robot.demonstrate_with_seed(demo_seed));

        let record = IterationRecord {
            d,
            combo,
            intention,
            key_terms: matched.key_terms,
            matched: matched.concepts,
            newly_learned: newly,
            score,
            s_cum: cumulative.s_cum,
            feedback,
            demonstration: None,
            timestamp: now,
        };
        let id = self.state.id.clone();
        self.events.push(Event {
            kind: EventType::Iteration,
            session_id: id.clone(),
            payload: serde_json::to_value(&record).expect("record serializes"),
            timestamp: now,
        });
        let mut record = record;
        if let Some(grid) = demonstration {
            self.events.push(Event {
                kind: EventType::Demonstration,
                session_id: id.clone(),
                payload: serde_json::to_value(DemonstrationPayload {
                    d,
                    seed: demo_seed,
                    grid,
                })
                .expect("demonstration serializes"),
                timestamp: now,
            });
            record.demonstration = Some(grid);
        }
        self.state.score = robot.learned.len() as u32;
        self.state.robot = robot;
        self.state.cumulative = Some(cumulative);
        self.state.status = status;
        self.state.records.push(record);
        if !status.is_active() {
            self.events.push(Event {
                kind: EventType::Completed,
                session_id: id,
                payload: serde_json::to_value(CompletedPayload {
                    status,
                    score: self.state.score,
                    d,
                })
                .expect("completion serializes"),
                timestamp: now,
            });
        }
        Ok(self.state.records.last().expect("just pushed"))
    }

    /// Rebuilds a session from its event log.
    ///
    /// Iterations are re-executed from their logged combination, intention
    /// and match result; every derived field must agree with the log.
    pub fn replay(log: &str) -> Result<Session, SessionError> {
        let mut session: Option<Session> = None;
        // events of the latest iteration that the log has not shown yet
        let mut pending: Vec<Event> = Vec::new();

        for (i, raw) in log.lines().enumerate() {
            let line = i + 1;
            let corrupt = |reason: String| SessionError::CorruptLog { line, reason };
            if raw.trim().is_empty() {
                continue;
            }
            let event: Event = serde_json::from_str(raw)
                .map_err(|e| corrupt(format!("unparseable event: {e}")))?;

            let Some(s) = session.as_mut() else {
                if event.kind != EventType::Created {
                    return Err(corrupt("log must start with a created event".into()));
                }
                let config: SessionConfig = serde_json::from_value(event.payload.clone())
                    .map_err(|e| corrupt(format!("bad config: {e}")))?;
                let created = Session::create(event.session_id.clone(), config, event.timestamp)
                    .map_err(|e| corrupt(e.to_string()))?;
                if created.events[0] != event {
                    return Err(corrupt("created event does not round-trip".into()));
                }
                session = Some(created);
                continue;
            };

            if event.session_id != s.state.id {
                return Err(corrupt(format!(
                    "event for session `{}` in log of `{}`",
                    event.session_id, s.state.id
                )));
            }
            match event.kind {
                EventType::Created => return Err(corrupt("duplicate created event".into())),
                EventType::Iteration => {
                    if let Some(missing) = pending.first() {
                        return Err(corrupt(format!("expected {:?} event", missing.kind)));
                    }
                    let logged: IterationRecord = serde_json::from_value(event.payload.clone())
                        .map_err(|e| corrupt(format!("bad iteration payload: {e}")))?;
                    if logged.d != s.state.iterations() + 1 {
                        return Err(corrupt(format!(
                            "iteration {} out of sequence, expected {}",
                            logged.d,
                            s.state.iterations() + 1
                        )));
                    }
                    let before = s.events.len();
                    let matched = MatchResult {
                        key_terms: logged.key_terms.clone(),
                        concepts: logged.matched.clone(),
                        backend: s.state.config.matcher_backend,
                    };
                    s.apply(logged.combo, logged.intention, matched, logged.timestamp)
                        .map_err(|e| corrupt(e.to_string()))?;
                    let mut produced = s.events[before..].to_vec();
                    let first = produced.remove(0);
                    if first != event {
                        return Err(corrupt("iteration does not match re-execution".into()));
                    }
                    pending = produced;
                }
                EventType::Demonstration | EventType::Completed => {
                    if pending.is_empty() {
                        return Err(corrupt(format!("unexpected {:?} event", event.kind)));
                    }
                    let expected = pending.remove(0);
                    if expected != event {
                        return Err(corrupt(format!(
                            "{:?} event does not match re-execution",
                            event.kind
                        )));
                    }
                }
            }
        }
        // A log cut between an iteration and its follow-up events is still a
        // valid prefix; the re-executed session keeps the derived events.
        session.ok_or_else(|| SessionError::CorruptLog {
            line: 0,
            reason: "missing created event".into(),
        })
    }

    /// Transcript lines (`{d, tokens, intention}`) for this session.
    pub fn transcript(&self) -> Vec<TranscriptEntry> {
        self.state
            .records
            .iter()
            .map(|r| TranscriptEntry {
                d: r.d,
                tokens: r.combo.clone(),
                intention: r.intention.clone(),
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub d: u32,
    pub tokens: TokenCombination,
    pub intention: Intention,
}

/// Per-iteration series for plots and the metrics endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSeries {
    pub learned_count: Vec<u32>,
    pub s_d: Vec<f64>,
    pub s_cum: Vec<f64>,
}

impl SessionState {
    pub fn series(&self) -> SessionSeries {
        let mut learned = 0u32;
        let mut series = SessionSeries {
            learned_count: Vec::with_capacity(self.records.len()),
            s_d: Vec::with_capacity(self.records.len()),
            s_cum: Vec::with_capacity(self.records.len()),
        };
        for r in &self.records {
            learned += r.newly_learned.len() as u32;
            series.learned_count.push(learned);
            series.s_d.push(r.s_d());
            series.s_cum.push(r.s_cum);
        }
        series
    }
}
