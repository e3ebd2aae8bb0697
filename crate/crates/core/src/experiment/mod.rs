//! Experiment harness: synthetic additive objectives, the sequential BO
//! driver with its decomposition-learning variants, regret accounting,
//! structure-recovery experiments, and run files.

mod compare;
mod objective;
mod persist;
mod recovery;
mod regret;
mod run;
pub(crate) mod sequential;
mod synthetic;

pub use compare::{compare_runs, write_comparison_csv, ComparisonRow};
pub use objective::Objective;
pub use persist::{load_run, persist_run, write_trace_csv, SCHEMA_VERSION};
pub use recovery::{recovery_experiment, write_recovery_tables, MetricSummary, RecoverySummary};
pub use regret::RegretTrace;
pub use run::{DecompositionEvent, RunConfig, RunKind, RunRecord, Variant};
pub(crate) use run::Recorder;
pub use sequential::run_sequential_bo;
pub use synthetic::{generate_synthetic, SyntheticFunction, DEFAULT_FEATURES};
