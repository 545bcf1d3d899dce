//! File formats, exports and the command-line pipeline around `chainlog-core`.

pub mod analyze;
pub mod cli;
pub mod error;
pub mod export;
pub mod heatmap;
pub mod hierarchy_io;
pub mod ingest;
pub mod model_io;
pub mod paths_io;
pub mod report;

pub use analyze::{run_analyze, AnalysisBundle, AnalysisConfig, EntropySource};
pub use error::{Error, Result};
pub use ingest::{parse_changelog, LogFormat};
