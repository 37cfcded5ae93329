use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use mmm::api::{serve, ServeConfig};
use mmm::engine::LogStore;
use mmm::sim::cohort::{run_cohort, CohortConfig, MetricsReport};
use mmm::sim::teacher::PolicyKind;
use mmm::sim::transcript::{read_transcript, score_transcript, write_scores};
use mmm::{Condition, ScoreStrategy, Session};
use tracing_subscriber::EnvFilter;

#[derive(Parser)]
#[command(
    name = "mmm",
    version,
    about = "Teaching sessions with mental-model-mismatch feedback"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Policy {
    Oracle,
    Random,
    Adaptive,
}

#[derive(Clone, Copy, ValueEnum)]
enum CliCondition {
    Mmm,
    Performance,
    Baseline,
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum Strategy {
    Literal,
    Example,
}

#[derive(Subcommand)]
enum Command {
    /// Run the HTTP service (configured through MMM_* environment variables).
    Serve,
    /// Run simulated teachers and write event logs plus metrics.csv.
    Simulate {
        #[arg(long, value_enum)]
        policy: Policy,
        #[arg(long, value_enum, default_value = "all")]
        condition: CliCondition,
        /// Sessions per condition.
        #[arg(long, default_value_t = 50)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.2)]
        exploration: f64,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a `{d, tokens, intention}` transcript and write per-iteration CSV.
    ScoreTranscript {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "example")]
        strategy: Strategy,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rebuild metrics.csv from a directory of session event logs.
    ExportMetrics {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(
            EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")),
        )
        .with_writer(std::io::stderr)
        .init();

    match Cli::parse().command {
        Command::Serve => {
            let config = ServeConfig::from_env()?;
            tokio::runtime::Runtime::new()?.block_on(serve(config))
        }
        Command::Simulate {
            policy,
            condition,
            n,
            seed,
            exploration,
            workers,
            out,
        } => simulate(policy, condition, n, seed, exploration, workers, &out),
        Command::ScoreTranscript {
            input,
            strategy,
            out,
        } => {
            let text = fs::read_to_string(&input)
                .with_context(|| format!("reading {}", input.display()))?;
            let strategy = match strategy {
                Strategy::Literal => ScoreStrategy::Literal,
                Strategy::Example => ScoreStrategy::ExampleConsistent,
            };
            let rows = score_transcript(&read_transcript(&text)?, strategy)?;
            write_scores(&rows, BufWriter::new(File::create(&out)?))?;
            Ok(())
        }
        Command::ExportMetrics { input, out } => {
            let sessions = load_logs(&input)?;
            let states: Vec<_> = sessions.iter().map(Session::state).collect();
            MetricsReport::from_sessions(&states).write_csv(BufWriter::new(File::create(&out)?))?;
            eprintln!("{} sessions -> {}", sessions.len(), out.display());
            Ok(())
        }
    }
}

fn simulate(
    policy: Policy,
    condition: CliCondition,
    n: usize,
    seed: u64,
    exploration: f64,
    workers: Option<usize>,
    out: &Path,
) -> Result<()> {
    let policy = match policy {
        Policy::Oracle => PolicyKind::Oracle,
        Policy::Random => PolicyKind::Random,
        Policy::Adaptive => PolicyKind::Adaptive,
    };
    let conditions: Vec<Condition> = match condition {
        CliCondition::Mmm => vec![Condition::Mmm],
        CliCondition::Performance => vec![Condition::Performance],
        CliCondition::Baseline => vec![Condition::Baseline],
        CliCondition::All => Condition::ALL.to_vec(),
    };
    let store = LogStore::open(out.join("logs"), false)?;
    let mut sessions = Vec::new();
    let mut failure = None;
    for c in conditions {
        let mut config = CohortConfig::new(policy, c, n, seed);
        config.exploration = exploration;
        config.workers = workers;
        match run_cohort(&config) {
            Ok(cohort) => sessions.extend(cohort.sessions),
            Err(e) => {
                sessions.extend(e.partial);
                failure = Some(e.source);
                break;
            }
        }
    }
    for s in &sessions {
        store.write_session(s)?;
    }
    let states: Vec<_> = sessions.iter().map(Session::state).collect();
    let metrics = out.join("metrics.csv");
    MetricsReport::from_sessions(&states).write_csv(BufWriter::new(File::create(&metrics)?))?;
    eprintln!("{} sessions -> {}", sessions.len(), out.display());
    match failure {
        Some(e) => Err(e).context("simulation stopped early; partial results were written"),
        None => Ok(()),
    }
}

fn load_logs(dir: &Path) -> Result<Vec<Session>> {
    let mut paths: Vec<PathBuf> = walkdir::WalkDir::new(dir)
        .into_iter()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_type().is_file() && e.path().extension().is_some_and(|x| x == "ndjson"))
        .map(|e| e.into_path())
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let text = fs::read_to_string(p)?;
            Session::replay(&text).with_context(|| format!("replaying {}", p.display()))
        })
        .collect()
}
