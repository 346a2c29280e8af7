//! Shipped figure recipes.

use clap::ValueEnum;

use crate::config::{ConfigError, RunConfig, SweepSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Recipe {
    /// OP versus SNR, W = 1, N in {1, 4, 9, 16, 25}.
    Fig2a,
    /// OP versus SNR, N = 25, W in {1, 4, 9}.
    Fig2b,
    /// OP versus N at 55 dB, W = 1.
    Fig3a,
    /// OP versus W at 55 dB, N = 25.
    Fig3b,
}

impl Recipe {
    pub fn name(self) -> &'static str {
        match self {
            Recipe::Fig2a => "fig2a",
            Recipe::Fig2b => "fig2b",
            Recipe::Fig3a => "fig3a",
            Recipe::Fig3b => "fig3b",
        }
    }

    pub fn source(self) -> &'static str {
        match self {
            Recipe::Fig2a => include_str!("../recipes/fig2a.toml"),
            Recipe::Fig2b => include_str!("../recipes/fig2b.toml"),
            Recipe::Fig3a => include_str!("../recipes/fig3a.toml"),
            Recipe::Fig3b => include_str!("../recipes/fig3b.toml"),
        }
    }

    /// The recipe, optionally with a different Monte Carlo budget.
    pub fn spec(self, mc_trials: Option<u64>) -> Result<SweepSpec, ConfigError> {
        let src = self.source();
        let mut config: RunConfig = toml::from_str(src).map_err(|e| ConfigError {
            line: None,
            field: self.name().into(),
            message: e.message().to_string(),
        })?;
        if let Some(t) = mc_trials {
            config.mc_trials = t;
        }
        config.resolve(src)
    }
}
