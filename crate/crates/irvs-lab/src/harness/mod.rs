//! Experiment orchestration: configs, train/eval pipelines, sweeps,
//! metrics CSV, and reporting.

pub mod config;
pub mod experiment;
pub mod report;
pub mod sweep;

pub use config::{Algorithm, EnvKind, ExperimentConfig, OUTPUT_ROOT_ENV};
pub use experiment::{
    append_metrics, derive_seed, effective_eta, eval_env, evaluate_trained, load_trained,
    make_dataset, metrics_path, read_metrics, rollout_eval, run_experiment, save_trained,
    train_algorithm, EnvSpec, EpisodeRecord, EvalPolicy, MetricsRow, Trained, METRICS_HEADER,
};
pub use report::{report, summarize, summary_table, svg_line_plot, SummaryRow};
pub use sweep::{sweep, SweepAxis, SweepCell};
