//! Experiment runner for measure-based upper bounds: a registry of benchmark
//! functions and domains, bound series as CSV or JSON, error ratios between
//! cells, and fitted convergence rates.

pub mod config;
pub mod error;
pub mod experiment;
pub mod output;
pub mod registry;

pub use config::{DomainRef, Engine, EstimatorChoice, ExperimentConfig, Format, FunctionRef, MeasureConfig};
pub use error::{CliError, Result};
pub use experiment::{rate_report, ratio_report, run, RateReport, RateStatus, RatioReport, RunOutput, SeriesRow};
pub use registry::RegistryEntry;
