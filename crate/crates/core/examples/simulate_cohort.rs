// Simulated cohorts for every condition and the metrics table they produce.

use mmm::sim::cohort::{run_cohort, CohortConfig, MetricsReport};
use mmm::sim::teacher::PolicyKind;
use mmm::{Condition, Session};

pub fn run_example() -> anyhow::Result<()> {
    let mut sessions = Vec::new();
    for condition in Condition::ALL {
        let cohort = run_cohort(&CohortConfig::new(PolicyKind::Adaptive, condition, 20, 5))?;
        let m = &cohort.metrics;
        println!(
            "{:<12} mean {:.2} ± {:.2} ({:.0}% of max), {} of {} fully taught",
            m.group,
            m.mean_final_score,
            m.sd_final_score,
            100.0 * m.percent_of_maximum,
            m.successes,
            m.n_sessions
        );
        sessions.extend(cohort.sessions);
    }
    let states: Vec<_> = sessions.iter().map(Session::state).collect();
    let report = MetricsReport::from_sessions(&states);
    for c in &report.comparisons {
        match &c.result {
            Ok(t) => println!(
                "{} > {}: t({}) = {:.3}, p = {:.4}",
                c.greater, c.lesser, t.df, t.t, t.p
            ),
            Err(e) => println!("{} > {}: {e}", c.greater, c.lesser),
        }
    }
    let mut csv = Vec::new();
    report.write_csv(&mut csv)?;
    println!(
        "metrics.csv: {} lines",
        String::from_utf8(csv)?.lines().count()
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}
