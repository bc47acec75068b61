//! Convergence studies for the two-grid Stokes solver: configuration,
//! execution over `(H, h, K)` rows, and CSV/JSON reports.

pub mod config;
pub mod report;
pub mod study;

pub use config::{preset, Format, IterationSpec, Method, RowSpec, StudyConfig, PRESETS};
pub use report::{ReportRow, ScalingBlock, ScalingEntry, StudyReport, CSV_HEADER};
pub use study::{decay_profile, run_study, speedup_study, RunOptions};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Solver(#[from] eplp_core::Error),
    #[error("run failed: {0}")]
    Run(String),
    #[error("serialization: {0}")]
    Serialize(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl StudyReport {
    /// Serializes in the configured format.
    pub fn render(&self, format: Format) -> Result<String, CliError> {
        match format {
            Format::Csv => Ok(self.to_csv()),
            Format::Json => self.to_json(),
        }
    }
}
