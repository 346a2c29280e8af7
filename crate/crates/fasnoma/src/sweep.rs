//! Sweep execution and the CSV table.

use std::io::Write;

use fasnoma_core::montecarlo::{GainModel, McEstimate, OutageSimulation};
use fasnoma_core::mvncdf::MvnOptions;
use fasnoma_core::outage::{evaluate, OutageReport, User};
use fasnoma_core::portgrid::CorrelationMatrix;
use fasnoma_core::rng::derive_seed;
use rayon::prelude::*;

use crate::config::{RowSpec, SweepSpec};
use crate::Error;

const TAG_MVN: u64 = 1;
const TAG_MC_U1: u64 = 2;
const TAG_MC_U2: u64 = 3;

pub const BELOW_RESOLUTION: &str = "below MC resolution";

/// Monte Carlo outcome for one user at one row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum McCell {
    Estimate(McEstimate),
    /// Analytic OP is under `10 / trials`; no simulation was run.
    BelowResolution,
}

impl McCell {
    pub fn estimate(&self) -> Option<&McEstimate> {
        match self {
            McCell::Estimate(e) => Some(e),
            McCell::BelowResolution => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RowResult {
    pub row: RowSpec,
    pub report: OutageReport,
    pub mc: Option<[McCell; 2]>,
}

impl RowResult {
    pub fn mc_status(&self) -> Option<&'static str> {
        let mc = self.mc.as_ref()?;
        Some(match (mc[0], mc[1]) {
            (McCell::Estimate(_), McCell::Estimate(_)) => "ok",
            (McCell::BelowResolution, McCell::BelowResolution) => BELOW_RESOLUTION,
            (McCell::BelowResolution, _) => "u1 below MC resolution",
            (_, McCell::BelowResolution) => "u2 below MC resolution",
        })
    }
}

/// Seeds depend on the base seed only, so a row evaluated alone matches
/// the same row inside a sweep.
pub fn mvn_seed(seed: u64) -> u64 {
    derive_seed(seed, TAG_MVN)
}

fn mc_seed(seed: u64, user: User) -> u64 {
    derive_seed(seed, if user == User::U1 { TAG_MC_U1 } else { TAG_MC_U2 })
}

/// Runs one user's Monte Carlo with partitions spread over the pool.
pub fn simulate(
    corr: &CorrelationMatrix,
    row: &RowSpec,
    user: User,
    trials: u64,
    seed: u64,
) -> Result<McEstimate, Error> {
    let sim = OutageSimulation::new(corr, &row.params, user, GainModel::Copula, trials, mc_seed(seed, user))?;
    let counts: Vec<u64> = (0..sim.partitions()).into_par_iter().map(|i| sim.run_partition(i)).collect();
    Ok(sim.finish(counts))
}

pub fn evaluate_row(row: &RowSpec, accuracy: f64, mc_trials: u64, seed: u64) -> Result<RowResult, Error> {
    let opts = MvnOptions::with_accuracy(accuracy);
    let c1 = row.grid_u1.correlation_matrix()?;
    let c2 = row.grid_u2.correlation_matrix()?;
    let report = evaluate(&c1, &c2, &row.params, &opts, mvn_seed(seed))?;
    let mc = if mc_trials == 0 {
        None
    } else {
        let gate = 10.0 / mc_trials as f64;
        let cell = |corr: &CorrelationMatrix, user: User, op: f64| -> Result<McCell, Error> {
            if op < gate {
                Ok(McCell::BelowResolution)
            } else {
                simulate(corr, row, user, mc_trials, seed).map(McCell::Estimate)
            }
        };
        Some([cell(&c1, User::U1, report.u1.value)?, cell(&c2, User::U2, report.u2.value)?])
    };
    Ok(RowResult { row: row.clone(), report, mc })
}

/// Evaluates every row on the current rayon pool; results keep row order.
pub fn run_sweep(spec: &SweepSpec) -> Result<Table, Error> {
    let rows = spec
        .rows
        .par_iter()
        .map(|r| evaluate_row(r, spec.mvn_accuracy(), spec.mc_trials(), spec.seed()))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Table {
        variable: spec.variable.map(|v| v.column()),
        with_mc: spec.mc_trials() > 0,
        rows,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub variable: Option<&'static str>,
    pub with_mc: bool,
    pub rows: Vec<RowResult>,
}

/// Shortest decimal string that parses back to the same double.
pub fn format_f64(v: f64) -> String {
    ryu::Buffer::new().format(v).to_string()
}

impl Table {
    pub fn header(&self) -> Vec<&'static str> {
        let mut h = vec!["curve"];
        if let Some(v) = self.variable {
            h.push(v);
        }
        h.extend(["opU1", "opU2", "opU1Asym", "opU2Asym", "mvnErrU1", "mvnErrU2"]);
        if self.with_mc {
            h.extend([
                "mcU1", "mcU1CiLow", "mcU1CiHigh", "mcU2", "mcU2CiLow", "mcU2CiHigh", "mcStatus",
            ]);
        }
        h
    }

    pub fn records(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| {
                let mut rec = vec![r.row.curve.clone()];
                if self.variable.is_some() {
                    rec.push(r.row.sweep_value.map(format_f64).unwrap_or_default());
                }
                let o = r.report.result();
                for v in [o.op_u1, o.op_u2, o.op_u1_asymptotic, o.op_u2_asymptotic, o.mvn_error_u1, o.mvn_error_u2] {
                    rec.push(format_f64(v));
                }
                if let Some(mc) = &r.mc {
                    for cell in mc {
                        match cell.estimate() {
                            Some(e) => rec.extend([e.estimate, e.ci_low, e.ci_high].map(format_f64)),
                            None => rec.extend(["", "", ""].map(String::from)),
                        }
                    }
                    rec.push(r.mc_status().unwrap_or_default().to_string());
                }
                rec
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), Error> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(self.header())?;
        for rec in self.records() {
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String, Error> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }
}
