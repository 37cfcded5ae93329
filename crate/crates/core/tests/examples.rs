macro_rules! example {
    ($module:ident, $file:literal, $test:ident) => {
        mod $module {
            include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/", $file));
        }

        #[test]
        fn $test() {
            $module::run_example().expect(concat!($file, " should run"));
        }
    };
}

example!(worked_scoring, "worked_scoring.rs", worked_scoring_runs);
example!(
    concept_detection,
    "concept_detection.rs",
    concept_detection_runs
);
example!(
    demonstration_grid,
    "demonstration_grid.rs",
    demonstration_grid_runs
);
example!(
    teaching_session,
    "teaching_session.rs",
    teaching_session_runs
);
example!(replay_log, "replay_log.rs", replay_log_runs);
example!(simulate_cohort, "simulate_cohort.rs", simulate_cohort_runs);
example!(llm_matching, "llm_matching.rs", llm_matching_runs);
example!(http_service, "http_service.rs", http_service_runs);
