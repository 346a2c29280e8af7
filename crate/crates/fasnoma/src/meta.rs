//! Sidecar metadata written next to each output table.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::RunConfig;

#[derive(Debug, Clone, Serialize)]
pub struct Metadata<'a> {
    pub software: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub seed: u64,
    pub rows: usize,
    pub config: &'a RunConfig,
}

impl<'a> Metadata<'a> {
    pub fn new(command: &'a str, config: &'a RunConfig, rows: usize) -> Self {
        Self {
            software: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            seed: config.seed,
            rows,
            config,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("metadata serializes")
    }
}

/// `<output>.meta.json`.
pub fn sidecar_path(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}
