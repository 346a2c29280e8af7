//! Configuration-driven outage sweeps for fluid-antenna NOMA downlinks.
//!
//! The numerical work lives in `fasnoma-core`; this crate adds config
//! files, CSV tables, sidecar metadata, recipes and the self-validation
//! harness behind the `fasnoma` binary.

pub mod config;
pub mod meta;
pub mod point;
pub mod recipes;
pub mod sweep;
pub mod validate;

pub use config::{ConfigError, RunConfig, SweepSpec};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] fasnoma_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("row {row} out of range; the sweep has {rows} rows")]
    RowOutOfRange { row: usize, rows: usize },
}

impl Error {
    /// Process exit status: configuration and input problems are 1.
    pub fn exit_code(&self) -> u8 {
        1
    }
}
