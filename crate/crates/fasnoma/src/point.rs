//! Single-configuration evaluation with every intermediate quantity.

use std::fmt::{self, Write as _};

use fasnoma_core::outage::OutagePoint;
use fasnoma_core::portgrid::PortGrid;

use crate::config::{RowSpec, SweepSpec};
use crate::sweep::{evaluate_row, format_f64, McCell, RowResult};
use crate::Error;

/// Evaluates row `row` of the sweep, or the base configuration when `None`.
pub fn evaluate_point(spec: &SweepSpec, row: Option<usize>) -> Result<RowResult, Error> {
    let r: RowSpec = match row {
        None => spec.base_row()?,
        Some(k) => spec.rows.get(k).cloned().ok_or(Error::RowOutOfRange { row: k, rows: spec.rows.len() })?,
    };
    evaluate_row(&r, spec.mvn_accuracy(), spec.mc_trials(), spec.seed())
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "none".to_string(), format_f64)
}

fn grid(g: &PortGrid) -> String {
    format!("{}x{} ports over {}x{} wavelengths", g.n1(), g.n2(), format_f64(g.w1()), format_f64(g.w2()))
}

fn user_lines(out: &mut String, key: &str, p: &OutagePoint, asym: &OutagePoint) {
    let _ = writeln!(out, "{key}.threshold = {}", opt(p.threshold));
    let _ = writeln!(out, "{key}.marginalCdf = {}", opt(p.marginal_cdf));
    let _ = writeln!(out, "{key}.equicoordinate = {}", opt(p.equicoordinate));
    let _ = writeln!(out, "{key}.method = {}", p.method.map_or_else(|| "none".into(), |m| format!("{m:?}")));
    let _ = writeln!(out, "{key}.asymMarginalCdf = {}", opt(asym.marginal_cdf));
    let _ = writeln!(out, "{key}.asymEquicoordinate = {}", opt(asym.equicoordinate));
}

impl fmt::Display for RowResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = &self.row;
        let t = &self.report.thresholds;
        let o = self.report.result();
        let mut s = String::new();
        let _ = writeln!(s, "curve = {}", r.curve);
        if let Some(v) = r.sweep_value {
            let _ = writeln!(s, "sweepValue = {}", format_f64(v));
        }
        let _ = writeln!(s, "snrDb = {}", format_f64(r.snr_db));
        let _ = writeln!(s, "snrLinear = {}", format_f64(r.params.snr_avg));
        let _ = writeln!(s, "gridU1 = {}", grid(&r.grid_u1));
        let _ = writeln!(s, "gridU2 = {}", grid(&r.grid_u2));
        let _ = writeln!(s, "gammaSic = {}", opt(t.g_sic));
        let _ = writeln!(s, "gammaU1 = {}", format_f64(t.g_u1));
        let _ = writeln!(s, "gammaU2 = {}", opt(t.g_u2));
        let _ = writeln!(s, "gammaMax = {}", opt(t.g_max));
        let _ = writeln!(s, "feasibleU1 = {}", t.feasible_u1);
        let _ = writeln!(s, "feasibleU2 = {}", t.feasible_u2);
        user_lines(&mut s, "u1", &self.report.u1, &self.report.u1_asymptotic);
        user_lines(&mut s, "u2", &self.report.u2, &self.report.u2_asymptotic);
        let _ = writeln!(s, "opU1 = {}", format_f64(o.op_u1));
        let _ = writeln!(s, "opU2 = {}", format_f64(o.op_u2));
        let _ = writeln!(s, "opU1Asym = {}", format_f64(o.op_u1_asymptotic));
        let _ = writeln!(s, "opU2Asym = {}", format_f64(o.op_u2_asymptotic));
        let _ = writeln!(s, "mvnErrU1 = {}", format_f64(o.mvn_error_u1));
        let _ = writeln!(s, "mvnErrU2 = {}", format_f64(o.mvn_error_u2));
        if let Some(mc) = &self.mc {
            for (key, cell) in ["mcU1", "mcU2"].iter().zip(mc) {
                match cell {
                    McCell::Estimate(e) => {
                        let _ = writeln!(
                            s,
                            "{key} = {} [{}, {}] se {} from {} events in {} trials",
                            format_f64(e.estimate),
                            format_f64(e.ci_low),
                            format_f64(e.ci_high),
                            format_f64(e.standard_error),
                            e.events,
                            e.trials
                        );
                    }
                    McCell::BelowResolution => {
                        let _ = writeln!(s, "{key} = {}", crate::sweep::BELOW_RESOLUTION);
                    }
                }
            }
        }
        f.write_str(&s)
    }
}
