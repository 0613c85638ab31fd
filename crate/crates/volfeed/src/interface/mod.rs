//! Data ingestion, run configuration, and plot-data emission.

pub mod config;
pub mod data;
pub mod output;

pub use config::RunConfig;
pub use data::{load_price_csv, log_returns, CsvSchema, LoadedPrices, PriceSeries};
