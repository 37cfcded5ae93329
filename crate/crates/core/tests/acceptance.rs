//! Acceptance gate. Every criterion runs inside one test so the report prints
//! in order: one PASS/FAIL line per criterion, with its time budget.
//!
//! Run with `cargo test -p mmm --test acceptance -- --nocapture`.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use chrono::{DateTime, Utc};
use mmm::matcher::lexicon::lexicon_match;
use mmm::score::{cumulative_score, feedback_valence, iteration_score, performance_feedback};
use mmm::sim::cohort::{run_cohort, CohortConfig, MetricsReport};
use mmm::sim::stats::t_test_one_sided;
use mmm::sim::teacher::{Observation, PolicyKind, TeacherPolicy};
use mmm::token::{Color, Shape, Size};
use mmm::{
    all_tokens, detect_concepts, validate_grid, ConceptDictionary, ConceptId, Condition, Engine,
    Grid, Matchers, RobotState, ScoreStrategy, Session, SessionConfig, Token, TokenCombination,
    Valence,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

struct Criterion {
    name: &'static str,
    budget: Option<Duration>,
    check: fn(),
}

#[test]
fn acceptance() {
    let criteria = [
        Criterion {
            name: "worked examples",
            budget: Some(Duration::from_secs(1)),
            check: worked_examples,
        },
        Criterion {
            name: "zero-learning rule",
            budget: Some(Duration::from_secs(1)),
            check: zero_learning,
        },
        Criterion {
            name: "cumulative mean",
            budget: Some(Duration::from_secs(5)),
            check: cumulative_mean,
        },
        Criterion {
            name: "detection oracle",
            budget: Some(Duration::from_secs(5)),
            check: detection_oracle,
        },
        Criterion {
            name: "solver soundness",
            budget: Some(Duration::from_secs(60)),
            check: solver_soundness,
        },
        Criterion {
            name: "oracle cohort",
            budget: Some(Duration::from_secs(10)),
            check: oracle_cohort,
        },
        Criterion {
            name: "feedback divergence",
            budget: None,
            check: divergence,
        },
        Criterion {
            name: "metrics shape",
            budget: Some(Duration::from_secs(60)),
            check: metrics_shape,
        },
        Criterion {
            name: "log round-trip",
            budget: Some(Duration::from_secs(10)),
            check: log_round_trip,
        },
    ];

    let mut failed = Vec::new();
    for c in &criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(c.check));
        let elapsed = start.elapsed();
        let verdict = match (&outcome, c.budget) {
            (Err(e), _) => Err(panic_text(e)),
            (Ok(()), Some(b)) if elapsed > b => Err(format!("took {elapsed:.2?}, budget {b:?}")),
            (Ok(()), _) => Ok(()),
        };
        let budget = c.budget.map(|b| format!(" / {b:?}")).unwrap_or_default();
        match verdict {
            Ok(()) => println!("PASS  {:<22} {elapsed:>10.2?}{budget}", c.name),
            Err(why) => {
                println!("FAIL  {:<22} {elapsed:>10.2?}{budget}  {why}", c.name);
                failed.push(c.name);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

fn panic_text(e: &Box<dyn std::any::Any + Send>) -> String {
    e.downcast_ref::<String>()
        .cloned()
        .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
        .unwrap_or_else(|| "panicked".to_string())
}

fn epoch() -> DateTime<Utc> {
    DateTime::<Utc>::UNIX_EPOCH
}

fn t(color: Color, shape: Shape, size: Size) -> Token {
    Token::new(color, shape, size)
}

fn example(n: usize) -> (TokenCombination, &'static str) {
    use Color::*;
    use Shape::*;
    use Size::*;
    let (tokens, intention) = match n {
        1 => (
            [
                t(Blue, Circle, Small),
                t(Red, Circle, Medium),
                t(Yellow, Triangle, Small),
            ],
            "I want to show the robot unique colors.",
        ),
        2 => (
            [
                t(Blue, Circle, Large),
                t(Red, Circle, Medium),
                t(Yellow, Square, Medium),
            ],
            "different shapes and colors",
        ),
        3 => (
            [
                t(Red, Square, Small),
                t(Blue, Triangle, Small),
                t(Yellow, Circle, Small),
            ],
            "Teach the robot to recognize large tokens.",
        ),
        _ => unreachable!(),
    };
    (TokenCombination::new(tokens).unwrap(), intention)
}

fn worked_examples() {
    let dict = ConceptDictionary::standard();
    let expected = [
        (
            1,
            ScoreStrategy::ExampleConsistent,
            (0, 1),
            Valence::Positive,
        ),
        (2, ScoreStrategy::ExampleConsistent, (1, 2), Valence::Mixed),
        (
            3,
            ScoreStrategy::ExampleConsistent,
            (1, 1),
            Valence::Negative,
        ),
        (1, ScoreStrategy::Literal, (0, 1), Valence::Positive),
        // Literal counts only learned concepts, so Example 2's extra intention is free.
        (2, ScoreStrategy::Literal, (0, 1), Valence::Positive),
        (3, ScoreStrategy::Literal, (1, 1), Valence::Negative),
    ];
    for (n, strategy, (num, den), valence) in expected {
        let (combo, intention) = example(n);
        let (_, learned) = RobotState::new(0).learn(&combo);
        let matched = lexicon_match(intention, &dict);
        let s = iteration_score(&matched, &learned, strategy, &dict)
            .unwrap()
            .s_d;
        assert_eq!(
            s.numerator() as u64 * den,
            num * s.denominator() as u64,
            "example {n} {strategy:?}: s_d = {s}"
        );
        assert_eq!(feedback_valence(s), valence, "example {n} {strategy:?}");
    }

    // The same three through a live MMM session.
    for n in 1..=3 {
        let mut session =
            Session::create("w", SessionConfig::new(Condition::Mmm), epoch()).unwrap();
        let (combo, intention) = example(n);
        let r = session
            .submit(
                combo,
                intention.parse().unwrap(),
                &Matchers::lexicon_only(),
                epoch(),
            )
            .unwrap();
        let want = [0.0, 0.5, 1.0][n - 1];
        assert_eq!(r.feedback.s_d, Some(want), "session example {n}");
    }
}

fn random_subset(rng: &mut ChaCha8Rng) -> BTreeSet<ConceptId> {
    ConceptId::ALL
        .into_iter()
        .filter(|_| rng.gen_bool(0.4))
        .collect()
}

fn zero_learning() {
    let dict = ConceptDictionary::standard();
    let mut rng = ChaCha8Rng::seed_from_u64(0x2E);
    let empty = BTreeSet::new();
    for _ in 0..1000 {
        let matched = random_subset(&mut rng);
        for strategy in [ScoreStrategy::Literal, ScoreStrategy::ExampleConsistent] {
            let s = iteration_score(&matched, &empty, strategy, &dict)
                .unwrap()
                .s_d;
            assert!(
                s.is_one() && s.value() == 1.0,
                "{matched:?} {strategy:?} -> {s}"
            );
        }
    }
}

fn cumulative_mean() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC0);
    for _ in 0..10_000 {
        let len = rng.gen_range(1..=25);
        let seq: Vec<f64> = (0..len)
            .map(|_| {
                let den = rng.gen_range(1..=13u32);
                rng.gen_range(0..=den) as f64 / den as f64
            })
            .collect();
        let mut acc = None;
        for &s in &seq {
            acc = Some(cumulative_score(acc, s));
        }
        let acc = acc.unwrap();
        let mean = seq.iter().sum::<f64>() / len as f64;
        assert_eq!(acc.d as usize, len);
        assert!(
            (acc.s_cum - mean).abs() <= 1e-12,
            "{seq:?}: {} vs {mean}",
            acc.s_cum
        );
    }
}

/// Concept truth computed from wire names alone: `attr-value` needs every
/// token to share that value; `unique-attrs` needs pairwise distinct values.
fn brute_force(concept: &str, tokens: &[Value]) -> bool {
    let attrs = ["color", "shape", "size"];
    let distinct = |attr: &str| {
        let vals: BTreeSet<&str> = tokens.iter().map(|t| t[attr].as_str().unwrap()).collect();
        vals.len() == tokens.len()
    };
    if concept == "all-unique" {
        return attrs.iter().all(|a| distinct(a));
    }
    let (head, tail) = concept.split_once('-').unwrap();
    if head == "unique" {
        return distinct(tail.trim_end_matches('s'));
    }
    tokens.iter().all(|t| t[head].as_str() == Some(tail))
}

fn detection_oracle() {
    let tokens = all_tokens();
    let mut combos = 0;
    for i in 0..27 {
        for j in i + 1..27 {
            for k in j + 1..27 {
                let combo = TokenCombination::new([tokens[i], tokens[j], tokens[k]]).unwrap();
                let wire: Vec<Value> =
                    serde_json::from_value(serde_json::to_value(&combo).unwrap()).unwrap();
                let detected = detect_concepts(&combo);
                for c in ConceptId::ALL {
                    let expected = brute_force(c.as_str(), &wire);
                    assert_eq!(detected.contains(&c), expected, "{c} on {wire:?}");
                }
                combos += 1;
            }
        }
    }
    assert_eq!(combos, 2925);
}

/// Latin check on one attribute, from wire values.
fn latin(grid: &Grid, attr: &str) -> bool {
    let cells: Vec<Value> = serde_json::from_value(serde_json::to_value(grid).unwrap()).unwrap();
    let v = |r: usize, c: usize| cells[r * 3 + c][attr].as_str().unwrap().to_string();
    (0..3).all(|i| {
        let row: BTreeSet<_> = (0..3).map(|j| v(i, j)).collect();
        let col: BTreeSet<_> = (0..3).map(|j| v(j, i)).collect();
        row.len() == 3 && col.len() == 3
    })
}

fn solver_soundness() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x50);
    for _ in 0..1000 {
        let learned = random_subset(&mut rng);
        let seed = rng.gen();
        let grid = RobotState::with_learned(learned.iter().copied(), seed).demonstrate();
        let verdict = validate_grid(&grid, &learned);
        assert!(
            verdict.values().all(|ok| *ok),
            "{learned:?} seed {seed}: {verdict:?}"
        );
        for (concept, attr) in [
            (ConceptId::UniqueColors, "color"),
            (ConceptId::UniqueShapes, "shape"),
            (ConceptId::UniqueSizes, "size"),
        ] {
            if learned.contains(&concept) || learned.contains(&ConceptId::AllUnique) {
                assert!(latin(&grid, attr), "{concept} not honoured");
            }
        }
    }
    for seed in 0..50 {
        let grid = RobotState::with_learned(ConceptId::ALL, seed).demonstrate();
        assert!(["color", "shape", "size"].iter().all(|a| latin(&grid, a)));
    }

    // Every grid satisfying all three Latin constraints, by backtracking.
    let all: BTreeSet<ConceptId> = ConceptId::ALL.into_iter().collect();
    let tokens = all_tokens();
    let mut cells: Vec<Token> = Vec::with_capacity(9);
    let mut count = 0;
    fn fits(cells: &[Token], t: Token) -> bool {
        let i = cells.len();
        let (r, c) = (i / 3, i % 3);
        cells.iter().enumerate().all(|(j, o)| {
            let same_line = j / 3 == r || j % 3 == c;
            !same_line || (o.color != t.color && o.shape != t.shape && o.size != t.size)
        })
    }
    fn walk(
        cells: &mut Vec<Token>,
        tokens: &[Token],
        all: &BTreeSet<ConceptId>,
        count: &mut usize,
    ) {
        if cells.len() == 9 {
            let grid = Grid::new(cells.clone().try_into().unwrap());
            assert!(validate_grid(&grid, all).values().all(|ok| *ok));
            *count += 1;
            return;
        }
        for &t in tokens {
            if fits(cells, t) {
                cells.push(t);
                walk(cells, tokens, all, count);
                cells.pop();
            }
        }
    }
    walk(&mut cells, &tokens, &all, &mut count);
    assert_eq!(count, 1728);
}

fn oracle_cohort() {
    for condition in Condition::ALL {
        let cohort =
            run_cohort(&CohortConfig::new(PolicyKind::Oracle, condition, 10, 2024)).unwrap();
        assert_eq!(cohort.sessions.len(), 10);
        for s in &cohort.sessions {
            let st = s.state();
            assert_eq!(st.iterations(), 13, "{}", st.id);
            assert_eq!(st.score, 13);
            if condition == Condition::Mmm {
                assert!(st
                    .records
                    .iter()
                    .all(|r| r.feedback.valence == Valence::Positive));
                assert_eq!(st.cumulative.unwrap().s_cum, 0.0);
            }
        }
        assert_eq!(cohort.metrics.percent_of_maximum, 1.0);
    }
}

fn divergence() {
    let (combo, intention) = example(3);
    let dict = ConceptDictionary::standard();
    let robot = RobotState::new(7);
    let (_, newly) = robot.learn(&combo);
    let matched = lexicon_match(intention, &dict);
    let s = iteration_score(&matched, &newly, ScoreStrategy::ExampleConsistent, &dict)
        .unwrap()
        .s_d;
    assert_eq!(performance_feedback(&newly), Valence::Positive);
    assert_eq!(feedback_valence(s), Valence::Negative);

    let engine = Engine::new(Matchers::lexicon_only());
    let valence = |condition| {
        let st = engine
            .create_session(SessionConfig::new(condition).with_seed(7))
            .unwrap();
        engine
            .submit_iteration(&st.id, combo.clone(), intention.parse().unwrap())
            .unwrap()
            .feedback
            .valence
    };
    assert_eq!(valence(Condition::Performance), Valence::Positive);
    assert_eq!(valence(Condition::Mmm), Valence::Negative);
}

/// Upper tail of Student's t by Simpson integration of the density.
fn t_upper_tail(t: f64, df: f64) -> f64 {
    let ln_gamma = |x: f64| statrs::function::gamma::ln_gamma(x);
    let norm = (ln_gamma((df + 1.0) / 2.0) - ln_gamma(df / 2.0)).exp()
        / (df * std::f64::consts::PI).sqrt();
    let density = |x: f64| norm * (1.0 + x * x / df).powf(-(df + 1.0) / 2.0);
    let (a, b) = if t >= 0.0 { (0.0, t) } else { (t, 0.0) };
    let n = 20_000;
    let h = (b - a) / n as f64;
    let mut sum = density(a) + density(b);
    for i in 1..n {
        sum += density(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    let area = sum * h / 3.0;
    if t >= 0.0 {
        0.5 - area
    } else {
        0.5 + area
    }
}

fn metrics_shape() {
    // Reference vectors from an established statistics package.
    let refs: [(&[f64], &[f64], f64, f64); 3] = [
        (
            &[5.1, 4.9, 6.2, 5.8, 6.0, 5.5, 5.3, 6.1],
            &[4.8, 5.0, 4.6, 5.2, 4.9, 5.1, 4.7],
            3.5741021378842124,
            0.0016980147431076183,
        ),
        (
            &[12., 13., 9., 11., 13., 10., 12., 13., 8., 13., 11., 12.],
            &[9., 7., 10., 8., 11., 6., 9., 10., 7., 9., 8.],
            4.303656912973271,
            0.00015716611128875765,
        ),
        (
            &[9., 7., 10., 8., 11., 6., 9., 10., 7., 9., 8.],
            &[12., 13., 9., 11., 13., 10., 12., 13., 8., 13., 11., 12.],
            -4.303656912973271,
            0.9998428338887112,
        ),
    ];
    for (a, b, t, p) in refs {
        let r = t_test_one_sided(a, b).unwrap();
        assert!(
            (r.t - t).abs() < 1e-6 && (r.p - p).abs() < 1e-6,
            "{r:?} vs t={t} p={p}"
        );
    }
    let a: Vec<f64> = (0..50).map(|i| ((i * 7) % 13) as f64).collect();
    let b: Vec<f64> = (0..50).map(|i| ((i * 5) % 11) as f64).collect();
    let r = t_test_one_sided(&a, &b).unwrap();
    assert!((r.t - 1.2276718404449962).abs() < 1e-6 && (r.p - 0.1112554327714993).abs() < 1e-6);

    let mut sessions = Vec::new();
    for (i, condition) in Condition::ALL.into_iter().enumerate() {
        let cohort = run_cohort(&CohortConfig::new(
            PolicyKind::Random,
            condition,
            50,
            100 + i as u64,
        ))
        .unwrap();
        sessions.extend(cohort.sessions);
    }
    let states: Vec<_> = sessions.iter().map(Session::state).collect();
    let report = MetricsReport::from_sessions(&states);
    let mut buf = Vec::new();
    report.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();

    let body: String = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| format!("{l}\n"))
        .collect();
    let mut reader = csv::Reader::from_reader(body.as_bytes());
    assert_eq!(
        reader.headers().unwrap(),
        vec!["section", "group", "key", "index", "value", "n"]
    );
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    let select = |section: &str, group: &str| -> Vec<&csv::StringRecord> {
        rows.iter()
            .filter(|r| &r[0] == section && &r[1] == group)
            .collect()
    };
    for g in ["mmm", "performance", "baseline"] {
        let series = select("learned_series", g);
        assert_eq!(series.len(), 25, "{g}");
        let idx: Vec<usize> = series.iter().map(|r| r[3].parse().unwrap()).collect();
        assert_eq!(idx, (1..=25).collect::<Vec<_>>());
        assert!(series.iter().all(|r| &r[5] == "50"));
        let rates = select("post_positive", g);
        assert_eq!(
            rates
                .iter()
                .map(|r| r[3].parse::<usize>().unwrap())
                .collect::<Vec<_>>(),
            vec![1, 2, 3, 4, 5]
        );
        for r in rates {
            if !r[4].is_empty() {
                let v: f64 = r[4].parse().unwrap();
                assert!((0.0..=1.0).contains(&v));
            }
        }
    }
    // Feedback exists in two conditions, so their teach rates are populated.
    assert!(select("post_positive", "mmm")
        .iter()
        .all(|r| !r[4].is_empty()));
    assert!(select("post_positive", "performance")
        .iter()
        .all(|r| !r[4].is_empty()));

    let scores = |c: Condition| -> Vec<f64> {
        states
            .iter()
            .filter(|s| s.config.condition == c)
            .map(|s| s.score as f64)
            .collect()
    };
    for (pair, ga, gb) in [
        ("mmm>performance", Condition::Mmm, Condition::Performance),
        ("mmm>baseline", Condition::Mmm, Condition::Baseline),
        (
            "performance>baseline",
            Condition::Performance,
            Condition::Baseline,
        ),
    ] {
        let get = |key: &str| -> f64 {
            let r = select("ttest", pair)
                .into_iter()
                .find(|r| &r[2] == key)
                .unwrap();
            assert_eq!(&r[5], "98");
            r[4].parse().unwrap()
        };
        let (a, b) = (scores(ga), scores(gb));
        let mean = |x: &[f64]| x.iter().sum::<f64>() / x.len() as f64;
        let ss = |x: &[f64]| {
            let m = mean(x);
            x.iter().map(|v| (v - m).powi(2)).sum::<f64>()
        };
        let se = ((ss(&a) + ss(&b)) / 98.0 * (2.0 / 50.0)).sqrt();
        let t = (mean(&a) - mean(&b)) / se;
        assert!((get("t") - t).abs() < 1e-9, "{pair}: t {} vs {t}", get("t"));
        assert!((get("p") - t_upper_tail(t, 98.0)).abs() < 1e-6, "{pair}: p");
    }
}

fn log_round_trip() {
    let matchers = Matchers::lexicon_only();
    let mut rng = ChaCha8Rng::seed_from_u64(0x106);
    for i in 0..200 {
        let mut config =
            SessionConfig::new(Condition::ALL[rng.gen_range(0..3)]).with_seed(rng.gen());
        config.score_strategy = if rng.gen() {
            ScoreStrategy::Literal
        } else {
            ScoreStrategy::ExampleConsistent
        };
        config.max_iterations = rng.gen_range(1..=25);
        config.demo_interval = rng.gen_range(1..=6);
        let condition = config.condition;
        let mut session = Session::create(format!("rt-{i}"), config, epoch()).unwrap();
        let kind =
            [PolicyKind::Oracle, PolicyKind::Random, PolicyKind::Adaptive][rng.gen_range(0..3)];
        let mut teacher = TeacherPolicy::new(kind, rng.gen()).build();
        let stop = rng.gen_range(0..=25);
        let mut now = epoch();
        while session.state().status.is_active() && session.state().iterations() < stop {
            let history: Vec<_> = session
                .state()
                .records
                .iter()
                .map(|r| r.feedback.clone())
                .collect();
            let learned = session.state().robot.learned.concepts().clone();
            let (combo, intention) = teacher.step(&Observation {
                condition,
                history: &history,
                learned: &learned,
            });
            now += chrono::Duration::milliseconds(rng.gen_range(1..5000));
            session.submit(combo, intention, &matchers, now).unwrap();
        }
        let log = session.log();
        let replayed = Session::replay(&log).unwrap();
        assert_eq!(replayed.log(), log, "session {i}");
        assert_eq!(replayed, session);
    }
}
