//! Ingestion, orchestration and output: everything that touches files.

pub mod csv_io;
pub mod fixtures;
pub mod manifest;
pub mod pipeline;
pub mod report;
pub mod validate;

pub use csv_io::{load_series, load_series_with, parse_series, render_series, write_series, LoadOptions};
pub use manifest::{Dataset, DatasetManifest, SeriesEntry};
pub use pipeline::{run_manifest, run_pipeline, BackcastConfig, ForecastConfig, PipelineConfig};
pub use report::{emit, micro_table, tables, trajectory_table, Report, Table, REPORT_FILE, SCHEMA_VERSION};
pub use validate::{validate, Check, Severity, ValidationReport};
