//! One run per value of a single swept parameter, aggregated into
//! `sweep.csv`.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use super::config::{ExperimentConfig, RawConfig};
use super::experiment::{fmt_float, prepare};
use crate::error::Result;
use crate::exec::Exec;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepKey {
    ConditionTarget,
    /// Values are topology names.
    ChiViaTopology,
    Epsilon,
    Rounds,
}

impl SweepKey {
    /// The config key each value overrides.
    pub fn config_key(self) -> &'static str {
        match self {
            SweepKey::ConditionTarget => "problem.condition",
            SweepKey::ChiViaTopology => "network.topology",
            SweepKey::Epsilon => "algorithm.epsilon",
            SweepKey::Rounds => "algorithm.T",
        }
    }
}

impl FromStr for SweepKey {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "condition_target" => Ok(SweepKey::ConditionTarget),
            "chi_via_topology" => Ok(SweepKey::ChiViaTopology),
            "epsilon" => Ok(SweepKey::Epsilon),
            "T" => Ok(SweepKey::Rounds),
            other => Err(format!(
                "unknown sweep key `{other}` (condition_target|chi_via_topology|epsilon|T)"
            )),
        }
    }
}

impl fmt::Display for SweepKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepKey::ConditionTarget => "condition_target",
            SweepKey::ChiViaTopology => "chi_via_topology",
            SweepKey::Epsilon => "epsilon",
            SweepKey::Rounds => "T",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub value: String,
    /// First iteration with `‖x̄^k − x*‖² ≤ ε`.
    pub n_to_eps: Option<usize>,
    /// Communication rounds spent up to that iteration.
    pub comm_rounds: Option<u64>,
    pub final_gap: Option<f64>,
    pub error: Option<String>,
}

/// Runs every value (in parallel under `exec`) and returns rows in the
/// order of `values`. A failing sub-run yields a row with `error` set.
/// The unmodified base config must be valid.
pub fn sweep(raw: &RawConfig, key: SweepKey, values: &[String], exec: Exec) -> Result<Vec<SweepRow>> {
    ExperimentConfig::from_raw(raw)?;
    Ok(exec.map(values.len(), |i| sub_run(raw, key, &values[i])))
}

fn sub_run(raw: &RawConfig, key: SweepKey, value: &str) -> SweepRow {
    let mut raw = raw.clone();
    raw.set(key.config_key(), value);
    let attempt = || -> Result<SweepRow> {
        let cfg = ExperimentConfig::from_raw(&raw)?;
        let outcome = prepare(&cfg)?.execute()?;
        let r = &outcome.report;
        let n_to_eps = r.iterations_to(cfg.algorithm.epsilon);
        Ok(SweepRow {
            value: value.to_string(),
            n_to_eps,
            comm_rounds: n_to_eps.map(|n| r.records[n].comm_rounds),
            final_gap: r.last().gap,
            error: None,
        })
    };
    attempt().unwrap_or_else(|e| SweepRow {
        value: value.to_string(),
        n_to_eps: None,
        comm_rounds: None,
        final_gap: None,
        error: Some(e.to_string()),
    })
}

pub const SWEEP_HEADER: &str = "value,N_to_eps,comm_rounds,final_gap";

pub fn write_sweep<W: Write>(rows: &[SweepRow], mut out: W) -> io::Result<()> {
    writeln!(out, "{SWEEP_HEADER}")?;
    let na = || "NA".to_string();
    for r in rows {
        writeln!(
            out,
            "{},{},{},{}",
            r.value,
            r.n_to_eps.map_or_else(na, |n| n.to_string()),
            r.comm_rounds.map_or_else(na, |n| n.to_string()),
            r.final_gap.map_or_else(na, fmt_float),
        )?;
    }
    out.flush()
}
