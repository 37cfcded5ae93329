//! Simulated teachers, cohort runs, metrics export and transcript re-scoring.

pub mod cohort;
pub mod stats;
pub mod teacher;
pub mod transcript;

pub use cohort::{run_cohort, Cohort, CohortConfig, CohortError, CohortMetrics, MetricsReport};
pub use stats::{t_test_one_sided, TTest};
pub use teacher::{PolicyKind, Teacher, TeacherPolicy};
