// An oracle teacher drives one session per condition through the engine.

use mmm::sim::teacher::{Observation, PolicyKind, TeacherPolicy};
use mmm::{Condition, Engine, Matchers, SessionConfig};

pub fn run_example() -> anyhow::Result<()> {
    let engine = Engine::new(Matchers::lexicon_only());
    for condition in Condition::ALL {
        let state = engine.create_session(SessionConfig::new(condition).with_seed(3))?;
        let mut teacher = TeacherPolicy::new(PolicyKind::Oracle, 3).build();
        println!("== {} ({})", condition.as_str(), state.id);
        loop {
            let state = engine.session(&state.id)?;
            if !state.status.is_active() {
                println!("   finished: {:?}, score {}/13", state.status, state.score);
                break;
            }
            let history: Vec<_> = state.records.iter().map(|r| r.feedback.clone()).collect();
            let (combo, intention) = teacher.step(&Observation {
                condition,
                history: &history,
                learned: state.robot.learned.concepts(),
            });
            let record = engine.submit_iteration(&state.id, combo, intention)?;
            println!(
                "   d={:>2} {:<36} {:?} {}",
                record.d,
                record.intention.as_str(),
                record.newly_learned,
                record.feedback.message
            );
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}
