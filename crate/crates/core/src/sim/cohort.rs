//! Running simulated cohorts through the engine and aggregating study-shaped
//! metrics.

use std::collections::BTreeMap;
use std::io::Write;
use std::sync::Arc;

use chrono::{DateTime, Utc};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::engine::{Engine, FixedClock};
use crate::matcher::Matchers;
use crate::score::{ScoreStrategy, Valence};
use crate::session::{derive_seed, Condition, Session, SessionConfig, SessionError, SessionState};
use crate::sim::stats::{mean, sample_sd, t_test_one_sided, StatsError, TTest};
use crate::sim::teacher::{Observation, PolicyKind, TeacherPolicy};
use crate::token::ConceptId;

/// Offsets (in iterations) after positive feedback tracked by the teach-rate table.
pub const POST_POSITIVE_OFFSETS: usize = 5;

const TEACHER_STREAM: u64 = 0x7E;

#[derive(Debug, Clone)]
pub struct CohortConfig {
    pub policy: PolicyKind,
    pub exploration: f64,
    pub condition: Condition,
    pub n_sessions: usize,
    pub seed: u64,
    pub strategy: ScoreStrategy,
    pub max_iterations: u32,
    pub demo_interval: u32,
    /// Worker threads; `None` uses rayon's default.
    pub workers: Option<usize>,
}

impl CohortConfig {
    pub fn new(policy: PolicyKind, condition: Condition, n_sessions: usize, seed: u64) -> Self {
        CohortConfig {
            policy,
            exploration: 0.2,
            condition,
            n_sessions,
            seed,
            strategy: ScoreStrategy::ExampleConsistent,
            max_iterations: 25,
            demo_interval: 5,
            workers: None,
        }
    }

    pub fn label(&self) -> String {
        format!("{}/seed={}", self.policy, self.seed)
    }

    pub fn session_id(&self, index: usize) -> String {
        format!(
            "{}-{}-{}-{index:04}",
            self.condition.as_str(),
            self.policy,
            self.seed
        )
    }

    pub fn session_config(&self, index: usize) -> SessionConfig {
        SessionConfig {
            condition: self.condition,
            matcher_backend: crate::matcher::MatcherBackend::Lexicon,
            score_strategy: self.strategy,
            seed: derive_seed(self.seed, index as u64),
            max_iterations: self.max_iterations,
            demo_interval: self.demo_interval,
            label: Some(self.label()),
        }
    }

    pub fn teacher_policy(&self, index: usize) -> TeacherPolicy {
        TeacherPolicy {
            kind: self.policy,
            seed: derive_seed(self.seed ^ TEACHER_STREAM, index as u64),
            exploration: self.exploration,
        }
    }
}

/// Timestamp stamped on every simulated event.
pub fn simulation_epoch() -> DateTime<Utc> {
    DateTime::<Utc>::UNIX_EPOCH
}

#[derive(Debug, Error)]
#[error("cohort aborted after {} completed sessions: {source}", partial.len())]
pub struct CohortError {
    pub partial: Vec<Session>,
    #[source]
    pub source: SessionError,
}

#[derive(Debug, Clone)]
pub struct Cohort {
    pub config: CohortConfig,
    pub sessions: Vec<Session>,
    pub metrics: CohortMetrics,
}

/// Drives one session to completion through `engine`.
pub fn run_session(
    engine: &Engine,
    config: &CohortConfig,
    index: usize,
) -> Result<Session, SessionError> {
    let id = config.session_id(index);
    engine.create_session_with_id(&id, config.session_config(index))?;
    let mut teacher = config.teacher_policy(index).build();
    loop {
        let state = engine.session(&id)?;
        if !state.status.is_active() {
            break;
        }
        let history: Vec<_> = state.records.iter().map(|r| r.feedback.clone()).collect();
        let obs = Observation {
            condition: state.config.condition,
            history: &history,
            learned: state.robot.learned.concepts(),
        };
        let (combo, intention) = teacher.step(&obs);
        engine.submit_iteration(&id, combo, intention)?;
    }
    engine.with_session(&id, Session::clone)
}

pub fn run_cohort(config: &CohortConfig) -> Result<Cohort, CohortError> {
    if config.n_sessions == 0 {
        return Err(CohortError {
            partial: Vec::new(),
            source: SessionError::InvalidConfig("a cohort needs at least one session".into()),
        });
    }
    let engine = Arc::new(
        Engine::new(Matchers::lexicon_only()).with_clock(Arc::new(FixedClock(simulation_epoch()))),
    );
    let run = || -> Vec<Result<Session, SessionError>> {
        (0..config.n_sessions)
            .into_par_iter()
            .map(|i| run_session(&engine, config, i))
            .collect()
    };
    let results = match config.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .expect("thread pool")
            .install(run),
        None => run(),
    };

    let mut sessions = Vec::with_capacity(results.len());
    let mut failure = None;
    for r in results {
        match r {
            Ok(s) => sessions.push(s),
            Err(e) if failure.is_none() => failure = Some(e),
            Err(_) => {}
        }
    }
    if let Some(source) = failure {
        return Err(CohortError {
            partial: sessions,
            source,
        });
    }
    let states: Vec<&SessionState> = sessions.iter().map(Session::state).collect();
    let metrics = CohortMetrics::from_sessions(config.condition.as_str(), &states);
    Ok(Cohort {
        config: config.clone(),
        sessions,
        metrics,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TeachRate {
    pub offset: usize,
    /// Positive-feedback events with an iteration at this offset.
    pub events: usize,
    /// Of those, how many taught at least one concept at the offset.
    pub taught: usize,
}

impl TeachRate {
    pub fn rate(&self) -> Option<f64> {
        (self.events > 0).then(|| self.taught as f64 / self.events as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CohortMetrics {
    pub group: String,
    pub n_sessions: usize,
    pub final_scores: Vec<f64>,
    pub mean_final_score: f64,
    pub sd_final_score: f64,
    pub percent_of_maximum: f64,
    pub successes: usize,
    /// Mean learned-concept count after each iteration; finished sessions
    /// carry their final count forward.
    pub learned_series: Vec<f64>,
    pub post_positive: Vec<TeachRate>,
}

impl CohortMetrics {
    pub fn from_sessions(group: &str, sessions: &[&SessionState]) -> Self {
        let n = sessions.len();
        let final_scores: Vec<f64> = sessions.iter().map(|s| s.score as f64).collect();
        let horizon = sessions
            .iter()
            .map(|s| s.config.max_iterations as usize)
            .max()
            .unwrap_or(0);

        let mut learned_series = vec![0.0; horizon];
        for s in sessions {
            let counts = s.series().learned_count;
            let last = counts.last().copied().unwrap_or(0);
            for (i, slot) in learned_series.iter_mut().enumerate() {
                *slot += counts.get(i).copied().unwrap_or(last) as f64;
            }
        }
        if n > 0 {
            learned_series.iter_mut().for_each(|v| *v /= n as f64);
        }

        let mut post_positive: Vec<TeachRate> = (1..=POST_POSITIVE_OFFSETS)
            .map(|offset| TeachRate {
                offset,
                events: 0,
                taught: 0,
            })
            .collect();
        for s in sessions {
            for (i, r) in s.records.iter().enumerate() {
                if r.feedback.valence != Valence::Positive {
                    continue;
                }
                for rate in post_positive.iter_mut() {
                    if let Some(later) = s.records.get(i + rate.offset) {
                        rate.events += 1;
                        if !later.newly_learned.is_empty() {
                            rate.taught += 1;
                        }
                    }
                }
            }
        }

        let mean_final_score = if n > 0 { mean(&final_scores) } else { 0.0 };
        CohortMetrics {
            group: group.to_string(),
            n_sessions: n,
            mean_final_score,
            sd_final_score: sample_sd(&final_scores),
            percent_of_maximum: mean_final_score / ConceptId::COUNT as f64,
            successes: sessions
                .iter()
                .filter(|s| s.score as usize == ConceptId::COUNT)
                .count(),
            final_scores,
            learned_series,
            post_positive,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    /// Hypothesis: mean(greater) > mean(lesser).
    pub greater: String,
    pub lesser: String,
    pub result: Result<TTest, StatsError>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub provenance: Vec<String>,
    pub groups: Vec<CohortMetrics>,
    pub comparisons: Vec<Comparison>,
}

impl MetricsReport {
    /// Groups sessions by condition (in study order) and compares every
    /// earlier group against every later one.
    pub fn from_sessions(sessions: &[&SessionState]) -> Self {
        let mut by_condition: BTreeMap<Condition, Vec<&SessionState>> = BTreeMap::new();
        let mut labels: Vec<String> = Vec::new();
        for s in sessions {
            by_condition.entry(s.config.condition).or_default().push(s);
            let label = s
                .config
                .label
                .clone()
                .unwrap_or_else(|| "human".to_string());
            if !labels.contains(&label) {
                labels.push(label);
            }
        }
        labels.sort();
        let groups: Vec<CohortMetrics> = by_condition
            .iter()
            .map(|(c, ss)| CohortMetrics::from_sessions(c.as_str(), ss))
            .collect();
        let mut comparisons = Vec::new();
        for (i, a) in groups.iter().enumerate() {
            for b in &groups[i + 1..] {
                comparisons.push(Comparison {
                    greater: a.group.clone(),
                    lesser: b.group.clone(),
                    result: t_test_one_sided(&a.final_scores, &b.final_scores),
                });
            }
        }
        let mut provenance = vec![
            "simulated-agent metrics; not human study data".to_string(),
            format!("sessions={}", sessions.len()),
        ];
        provenance.extend(labels.into_iter().map(|l| format!("source={l}")));
        MetricsReport {
            provenance,
            groups,
            comparisons,
        }
    }

    /// Long-format CSV: `section,group,key,index,value,n`, preceded by
    /// `#`-prefixed provenance lines.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for line in &self.provenance {
            writeln!(out, "# {line}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(METRICS_COLUMNS)?;
        let fmt = |v: f64| format!("{v}");
        for g in &self.groups {
            let n = g.n_sessions.to_string();
            for (key, value) in [
                ("mean_final_score", g.mean_final_score),
                ("sd_final_score", g.sd_final_score),
                ("percent_of_maximum", g.percent_of_maximum),
                (
                    "success_rate",
                    g.successes as f64 / g.n_sessions.max(1) as f64,
                ),
            ] {
                w.write_record(["summary", &g.group, key, "", &fmt(value), &n])?;
            }
            for (i, v) in g.learned_series.iter().enumerate() {
                w.write_record([
                    "learned_series",
                    &g.group,
                    "mean_learned",
                    &(i + 1).to_string(),
                    &fmt(*v),
                    &n,
                ])?;
            }
            for r in &g.post_positive {
                let value = r.rate().map(fmt).unwrap_or_default();
                w.write_record([
                    "post_positive",
                    &g.group,
                    "teach_rate",
                    &r.offset.to_string(),
                    &value,
                    &r.events.to_string(),
                ])?;
            }
        }
        for c in &self.comparisons {
            let group = format!("{}>{}", c.greater, c.lesser);
            let (t, p, df) = match &c.result {
                Ok(r) => (fmt(r.t), fmt(r.p), r.df.to_string()),
                Err(_) => (String::new(), String::new(), String::new()),
            };
            w.write_record(["ttest", &group, "t", "", &t, &df])?;
            w.write_record(["ttest", &group, "p", "", &p, &df])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub const METRICS_COLUMNS: [&str; 6] = ["section", "group", "key", "index", "value", "n"];
