//! Configuration, checkpoints, CSV export and run reports.

pub mod checkpoint;
pub mod config;
pub mod export;
pub mod report;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
pub use config::RunConfig;
pub use export::{export_domain_csv, export_field_csv, export_histogram_csv, export_scan_csv};
pub use report::Report;
