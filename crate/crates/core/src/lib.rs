//! Field-level research strength from researcher rosters, publications and
//! citation counts.
//!
//! The pipeline flags highly cited articles within (year, subject category)
//! cells, credits them fractionally to their roster authors, finds each
//! field's top scientists with a box-plot fence, and expresses both the top
//! scientist count and the rescaled fractional HCA total per euro of
//! research spending. Rankings, rank correlations, median quadrants and
//! report tables are derived from the resulting per-field scoreboard.

pub mod analytics;
pub mod config;
pub mod error;
pub mod hca;
pub mod indicators;
pub mod ingest;
pub mod model;
pub mod oracle;
pub mod pipeline;
pub mod reporting;
pub mod scoring;
pub mod synth;

pub use config::{Config, InputPaths};
pub use error::ConfigError;
pub use model::{AnalysisConfig, CostModel, Percentile, Rank, RescaleFallback};
