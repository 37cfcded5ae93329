// Sessions persist as append-only event logs and replay to the same state.

use chrono::Utc;
use mmm::sim::teacher::{Observation, PolicyKind, TeacherPolicy};
use mmm::sim::transcript::{read_transcript, score_transcript, write_transcript};
use mmm::{Condition, Matchers, ScoreStrategy, Session, SessionConfig};

pub fn run_example() -> anyhow::Result<()> {
    let mut session = Session::create(
        "replay-demo",
        SessionConfig::new(Condition::Mmm).with_seed(11),
        Utc::now(),
    )?;
    let mut teacher = TeacherPolicy::new(PolicyKind::Random, 11).build();
    let matchers = Matchers::lexicon_only();
    while session.state().status.is_active() {
        let history: Vec<_> = session
            .state()
            .records
            .iter()
            .map(|r| r.feedback.clone())
            .collect();
        let learned = session.state().robot.learned.concepts().clone();
        let (combo, intention) = teacher.step(&Observation {
            condition: Condition::Mmm,
            history: &history,
            learned: &learned,
        });
        session.submit(combo, intention, &matchers, Utc::now())?;
    }

    let log = session.log();
    println!(
        "{} events, first line:\n{}",
        session.events().len(),
        log.lines().next().unwrap_or("")
    );
    let replayed = Session::replay(&log)?;
    println!(
        "replay identical: {}",
        replayed == session && replayed.log() == log
    );

    let mut transcript = Vec::new();
    write_transcript(&session.transcript(), &mut transcript)?;
    let rows = score_transcript(
        &read_transcript(std::str::from_utf8(&transcript)?)?,
        ScoreStrategy::ExampleConsistent,
    )?;
    let last = rows.last().expect("non-empty session");
    println!(
        "re-scored transcript: {} iterations, final s_cum {:.4} (logged {:.4})",
        rows.len(),
        last.s_cum,
        session
            .state()
            .cumulative
            .map(|c| c.s_cum)
            .unwrap_or_default()
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}
