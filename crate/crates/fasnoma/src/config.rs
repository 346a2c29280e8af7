//! Run configuration files.
//!
//! A run is one TOML document: system parameters in presentation units
//! (dB for SNR and thresholds, metres, wavelengths), the two users' port
//! grids, an optional one-dimensional sweep and an optional list of curves.
//! [`RunConfig::resolve`] checks it and expands it into the rows of the
//! output table.

use std::fmt;
use std::ops::Range;
use std::path::Path;

use fasnoma_core::channel::{db_to_linear, SystemParams};
use fasnoma_core::portgrid::PortGrid;
use serde::{Deserialize, Serialize};
use toml::Spanned;

/// Configuration problem, located by line and field where possible.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub field: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}: {}", self.field, self.message),
            None => write!(f, "{}: {}", self.field, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

fn line_of(src: &str, span: Range<usize>) -> Option<usize> {
    (span.start <= src.len()).then(|| src[..span.start].matches('\n').count() + 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepVariable {
    #[serde(rename = "snrDb")]
    SnrDb,
    #[serde(rename = "nPorts")]
    NPorts,
    #[serde(rename = "apertureW")]
    ApertureW,
}

impl SweepVariable {
    pub fn column(self) -> &'static str {
        match self {
            SweepVariable::SnrDb => "snrDb",
            SweepVariable::NPorts => "nPorts",
            SweepVariable::ApertureW => "apertureW",
        }
    }
}

fn default_seed() -> u64 {
    1
}

fn default_accuracy() -> f64 {
    1e-6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_accuracy")]
    pub mvn_accuracy: f64,
    #[serde(default)]
    pub mc_trials: u64,
    #[serde(default)]
    pub system: SystemConfig,
    #[serde(default)]
    pub grid_u1: GridConfig,
    #[serde(default)]
    pub grid_u2: GridConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub curves: Vec<Spanned<CurveConfig>>,
}

/// System parameters; every field defaults to the reference deployment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemConfig {
    pub snr_db: f64,
    pub p_u1: f64,
    pub p_u2: f64,
    pub alpha: f64,
    pub lp: f64,
    pub d_t: f64,
    pub d_u1: f64,
    pub d_u2: f64,
    pub thr_sic_db: f64,
    pub thr_u1_db: f64,
    pub thr_u2_db: f64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        let r = SystemParams::reference(1.0);
        Self {
            snr_db: 60.0,
            p_u1: r.p_u1,
            p_u2: r.p_u2,
            alpha: r.alpha,
            lp: r.lp,
            d_t: r.d_t,
            d_u1: r.d_u1,
            d_u2: r.d_u2,
            thr_sic_db: 0.0,
            thr_u1_db: 0.0,
            thr_u2_db: 0.0,
        }
    }
}

impl SystemConfig {
    /// Linear-unit parameters at `snr_db`; the only dB conversion point.
    pub fn params(&self, snr_db: f64) -> SystemParams {
        SystemParams {
            snr_avg: db_to_linear(snr_db),
            p_u1: self.p_u1,
            p_u2: self.p_u2,
            alpha: self.alpha,
            lp: self.lp,
            d_t: self.d_t,
            d_u1: self.d_u1,
            d_u2: self.d_u2,
            thr_sic: db_to_linear(self.thr_sic_db),
            thr_u1: db_to_linear(self.thr_u1_db),
            thr_u2: db_to_linear(self.thr_u2_db),
        }
    }
}

/// `ports = [n1, n2]` over `aperture = [w1, w2]` wavelengths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub ports: [usize; 2],
    pub aperture: [f64; 2],
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { ports: [2, 2], aperture: [1.0, 1.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub variable: SweepVariable,
    /// Explicit values; alternative to `start`/`stop`/`step`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Spanned<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
}

/// One curve: both users use a square grid of `ports` ports over a square
/// aperture of area `aperture` (in squared wavelengths).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveConfig {
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ports: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aperture: Option<f64>,
}

/// A fully resolved table row.
#[derive(Debug, Clone, PartialEq)]
pub struct RowSpec {
    pub curve: String,
    pub sweep_value: Option<f64>,
    pub snr_db: f64,
    pub params: SystemParams,
    pub grid_u1: PortGrid,
    pub grid_u2: PortGrid,
}

/// A validated run.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub config: RunConfig,
    pub variable: Option<SweepVariable>,
    pub values: Vec<f64>,
    pub rows: Vec<RowSpec>,
}

impl SweepSpec {
    pub fn mc_trials(&self) -> u64 {
        self.config.mc_trials
    }

    pub fn seed(&self) -> u64 {
        self.config.seed
    }

    pub fn mvn_accuracy(&self) -> f64 {
        self.config.mvn_accuracy
    }

    /// The row for the unswept base configuration.
    pub fn base_row(&self) -> Result<RowSpec, ConfigError> {
        let c = &self.config;
        let params = c.system.params(c.system.snr_db);
        validate_params(&params, None)?;
        Ok(RowSpec {
            curve: "base".into(),
            sweep_value: None,
            snr_db: c.system.snr_db,
            params,
            grid_u1: grid(&c.grid_u1, "grid_u1")?,
            grid_u2: grid(&c.grid_u2, "grid_u2")?,
        })
    }
}

fn err(line: Option<usize>, field: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError { line, field: field.into(), message: message.into() }
}

fn grid(g: &GridConfig, field: &str) -> Result<PortGrid, ConfigError> {
    PortGrid::new(g.ports[0], g.ports[1], g.aperture[0], g.aperture[1])
        .map_err(|e| err(None, field, e.to_string()))
}

fn validate_params(p: &SystemParams, line: Option<usize>) -> Result<(), ConfigError> {
    p.validate().map_err(|e| err(line, "system", e.to_string()))
}

/// Side length of a square port count.
fn square_side(n: f64, line: Option<usize>, field: &str) -> Result<usize, ConfigError> {
    if !(n >= 1.0 && n.fract() == 0.0 && n < 1e12) {
        return Err(err(line, field, format!("{n} is not a positive integer port count")));
    }
    let side = (n.sqrt().round()) as usize;
    if side * side != n as usize {
        return Err(err(line, field, format!("{n} is not a perfect square; grids stay square")));
    }
    Ok(side)
}

fn aperture_side(w: f64, line: Option<usize>, field: &str) -> Result<f64, ConfigError> {
    if !(w.is_finite() && w >= 0.0) {
        return Err(err(line, field, format!("{w} is not a non-negative aperture")));
    }
    Ok(w.sqrt())
}

impl RunConfig {
    pub fn from_toml_str(src: &str) -> Result<SweepSpec, ConfigError> {
        let config: RunConfig = toml::from_str(src).map_err(|e| {
            let line = e.span().and_then(|s| line_of(src, s));
            err(line, "config", e.message().to_string())
        })?;
        config.resolve(src)
    }

    pub fn load(path: &Path) -> Result<SweepSpec, ConfigError> {
        let src = std::fs::read_to_string(path)
            .map_err(|e| err(None, path.display().to_string(), e.to_string()))?;
        Self::from_toml_str(&src)
    }

    /// Validates and expands into rows; `src` is used for line numbers.
    pub fn resolve(self, src: &str) -> Result<SweepSpec, ConfigError> {
        if !(self.mvn_accuracy > 0.0 && self.mvn_accuracy < 1.0) {
            return Err(err(None, "mvn_accuracy", "must lie in (0, 1)"));
        }
        if self.mc_trials != 0 && self.mc_trials < fasnoma_core::montecarlo::MIN_TRIALS {
            return Err(err(
                None,
                "mc_trials",
                format!("must be 0 or at least {}", fasnoma_core::montecarlo::MIN_TRIALS),
            ));
        }
        grid(&self.grid_u1, "grid_u1")?;
        grid(&self.grid_u2, "grid_u2")?;
        validate_params(&self.system.params(self.system.snr_db), None)?;

        let (variable, values, values_line) = match &self.sweep {
            None => (None, Vec::new(), None),
            Some(s) => {
                let (values, line) = sweep_values(s, src)?;
                (Some(s.variable), values, line)
            }
        };
        let mut labels = std::collections::HashSet::new();
        for c in &self.curves {
            let line = line_of(src, c.span());
            if !labels.insert(c.get_ref().label.clone()) {
                return Err(err(line, "curves.label", format!("duplicate label {:?}", c.get_ref().label)));
            }
            let curve = c.get_ref();
            if let Some(n) = curve.ports {
                square_side(n, line, "curves.ports")?;
                if variable == Some(SweepVariable::NPorts) {
                    return Err(err(line, "curves.ports", "conflicts with the nPorts sweep"));
                }
            }
            if let Some(w) = curve.aperture {
                aperture_side(w, line, "curves.aperture")?;
                if variable == Some(SweepVariable::ApertureW) {
                    return Err(err(line, "curves.aperture", "conflicts with the apertureW sweep"));
                }
            }
        }

        let mut rows = Vec::new();
        if let Some(var) = variable {
            let curves: Vec<(String, Option<f64>, Option<f64>, Option<usize>)> = if self.curves.is_empty() {
                vec![("base".into(), None, None, None)]
            } else {
                self.curves
                    .iter()
                    .map(|c| {
                        let v = c.get_ref();
                        (v.label.clone(), v.ports, v.aperture, line_of(src, c.span()))
                    })
                    .collect()
            };
            for (label, ports, aperture, line) in &curves {
                for (k, &v) in values.iter().enumerate() {
                    let field = format!("sweep.values[{k}]");
                    let mut snr_db = self.system.snr_db;
                    let mut ports = ports.map(|n| square_side(n, *line, "curves.ports")).transpose()?;
                    let mut side_w = aperture.map(|w| aperture_side(w, *line, "curves.aperture")).transpose()?;
                    match var {
                        SweepVariable::SnrDb => snr_db = v,
                        SweepVariable::NPorts => ports = Some(square_side(v, values_line, &field)?),
                        SweepVariable::ApertureW => side_w = Some(aperture_side(v, values_line, &field)?),
                    }
                    let params = self.system.params(snr_db);
                    validate_params(&params, values_line)?;
                    let user_grid = |base: &GridConfig, name: &str| -> Result<PortGrid, ConfigError> {
                        let (n1, n2) = ports.map_or((base.ports[0], base.ports[1]), |s| (s, s));
                        let (w1, w2) = side_w.map_or((base.aperture[0], base.aperture[1]), |w| (w, w));
                        PortGrid::new(n1, n2, w1, w2).map_err(|e| err(*line, name, e.to_string()))
                    };
                    rows.push(RowSpec {
                        curve: label.clone(),
                        sweep_value: Some(v),
                        snr_db,
                        params,
                        grid_u1: user_grid(&self.grid_u1, "grid_u1")?,
                        grid_u2: user_grid(&self.grid_u2, "grid_u2")?,
                    });
                }
            }
        } else if !self.curves.is_empty() {
            let line = line_of(src, self.curves[0].span());
            return Err(err(line, "curves", "curves need a [sweep] section"));
        }

        let mut spec = SweepSpec { config: self, variable, values, rows: Vec::new() };
        if spec.variable.is_none() {
            rows.push(spec.base_row()?);
        }
        spec.rows = rows;
        Ok(spec)
    }
}

fn sweep_values(s: &SweepConfig, src: &str) -> Result<(Vec<f64>, Option<usize>), ConfigError> {
    let (values, line) = match (&s.values, s.start, s.stop, s.step) {
        (Some(v), None, None, None) => (v.get_ref().clone(), line_of(src, v.span())),
        (None, Some(start), Some(stop), Some(step)) => {
            if !(step > 0.0 && step.is_finite() && start.is_finite() && stop.is_finite()) {
                return Err(err(None, "sweep.step", "range needs finite bounds and a positive step"));
            }
            let count = ((stop - start) / step + 1e-9).floor();
            if !(0.0..1e6).contains(&count) {
                return Err(err(None, "sweep.stop", "range is empty or too long"));
            }
            ((0..=count as usize).map(|i| start + step * i as f64).collect(), None)
        }
        _ => {
            return Err(err(None, "sweep", "give either `values` or all of `start`, `stop`, `step`"));
        }
    };
    if values.is_empty() {
        return Err(err(line, "sweep.values", "must not be empty"));
    }
    for (k, w) in values.windows(2).enumerate() {
        if !(w[1] > w[0]) {
            return Err(err(line, format!("sweep.values[{}]", k + 1), "values must be strictly increasing"));
        }
    }
    if let Some(k) = values.iter().position(|v| !v.is_finite()) {
        return Err(err(line, format!("sweep.values[{k}]"), "must be finite"));
    }
    Ok((values, line))
}
