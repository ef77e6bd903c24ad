//! Configuration, stage orchestration and report files for the `eulerspec`
//! command.

pub mod config;
pub mod error;
pub mod output;
pub mod pipeline;
pub mod report;

pub use config::{FlowSpec, Resolution, RunConfig, Validation};
pub use error::{CliError, CliResult};
pub use output::{emit_plot_data, read_report, write_outputs};
pub use pipeline::{run_analyze, run_validate};
pub use report::{Check, RunReport, RunStatus};
