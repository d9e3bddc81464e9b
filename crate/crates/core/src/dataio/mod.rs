//! Dataset ingestion, run configuration and file emission.

mod catches;
mod config;
mod tables;

pub use catches::{load_catches, normalize, parse_catches, CatchDataset, YearCatches, SHIPPED_CATCHES_CSV};
pub use config::{FitSettings, InitialCondition, RunConfig};
pub use tables::{
    convergence_csv, format_float, measure_csv, pdf_table_csv, trajectory_csv, write_pdf_table, write_text,
};
