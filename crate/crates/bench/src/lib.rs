//! Experiment orchestration around `wsn-core`: config files, grids of
//! seeded runs, CSV and plot-data output, and lifetime summaries.

pub mod config;
pub mod experiment;
pub mod output;
pub mod summary;

pub use config::{load_config, parse_config_str, ConfigError, ConfigFile};
pub use experiment::{run_configs, run_experiment, ExperimentError, ExperimentGrid, RunRecord};
pub use output::{emit_csv, emit_plot_data};
pub use summary::{parse_runs_csv, summarize, summarize_rows, ComparisonSummary, RunRow};
