//! Teaching a Superdoku concept learner with mental-model-mismatch feedback.
//!
//! A teacher shows the robot three tokens and says, in at most ten words,
//! what they mean to teach. The robot learns from the tokens alone; a
//! supervisor compares what was learned with what the intention maps to and
//! turns the mismatch into feedback under one of three study conditions.
//!
//! Modules, bottom-up:
//!
//! - [`token`]: tokens, combinations, the 13-concept dictionary, grids.
//! - [`matcher`]: intention → concepts (lexicon or LLM backend).
//! - [`score`]: per-iteration mismatch, running mean, valence.
//! - [`robot`]: learning and the demonstration grid solver.
//! - [`session`]: the study protocol and its event log.
//! - [`engine`]: concurrent session registry with persistence.
//! - [`api`]: HTTP facade under `/v1`.
//! - [`sim`]: simulated teachers, cohorts, statistics, transcripts.

pub mod api;
pub mod engine;
pub mod error;
pub mod matcher;
pub mod robot;
pub mod score;
pub mod session;
pub mod sim;
pub mod token;

pub use engine::{Engine, LogStore};
pub use error::DomainError;
pub use matcher::{Intention, MatchResult, MatcherBackend, Matchers};
pub use robot::{validate_grid, RobotState};
pub use score::{Fraction, ScoreStrategy, Valence};
pub use session::{
    Condition, Feedback, IterationRecord, Session, SessionConfig, SessionError, SessionState,
    SessionStatus,
};
pub use token::{
    all_tokens, detect_concepts, ConceptDictionary, ConceptId, Grid, Token, TokenCombination,
};
