//! Building a run from a config, executing it, and writing its outputs.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

use super::config::{ExperimentConfig, IterationsRule, ObjectiveKind, ReferenceRule, RoundsRule, StopRule};
use crate::error::{Error, Result};
use crate::network::MixingSchedule;
use crate::objectives::{generate_quadratic_ensemble, read_libsvm, EnsembleConstants, QuadraticSpec};
use crate::prox::{Domain, Regularizer};
use crate::solver::{
    centralized_reference, run, select_rounds, stacked_grad_norm_sq, theorem_iterations, Problem, RoundSelection,
    RunOptions, RunReport, Stop,
};
use crate::stacked::dist_sq;
use crate::theory::{check_envelope, delta_total, eta, EnvelopeCheck};

/// Quantities derived from the config before the first iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct Derived {
    pub constants: EnsembleConstants,
    pub eta: f64,
    pub chi: f64,
    pub rounds: usize,
    pub iterations: usize,
    /// Stacked `‖u^0 − x*‖²`, exact or from the configured bound.
    pub r0_sq: f64,
    /// Stacked `‖∇F(x*)‖²`, exact or from the configured bound.
    pub grad_opt_sq: f64,
}

/// Everything a run needs, validated and certified.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub config: ExperimentConfig,
    pub problem: Problem,
    pub schedule: MixingSchedule,
    pub x0: Vec<f64>,
    pub reference: Option<Vec<f64>>,
    pub derived: Derived,
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub prepared: Prepared,
    pub report: RunReport,
    pub delta_total: f64,
    pub envelope: Option<EnvelopeCheck>,
}

pub fn build_problem(cfg: &ExperimentConfig) -> Result<Problem> {
    let m = cfg.network.topology.m;
    let ensemble = match &cfg.problem.kind {
        ObjectiveKind::Quadratic {
            d,
            condition,
            heterogeneity,
            aligned,
        } => {
            let spec = QuadraticSpec::new(cfg.problem.seed, m, *d, *condition)
                .heterogeneity(*heterogeneity)
                .aligned(*aligned);
            generate_quadratic_ensemble(&spec)?
        }
        ObjectiveKind::Logistic { data, dim, ridge } => read_libsvm(data, *dim)?.partition(m, *ridge)?,
    };
    Problem::new(ensemble, cfg.problem.term.clone())
        .map_err(|e| Error::config("problem.domain", e.to_string()))
}

fn reference_solution(cfg: &ExperimentConfig, problem: &Problem) -> Result<Option<Vec<f64>>> {
    if cfg.algorithm.reference == ReferenceRule::None {
        return Ok(None);
    }
    let smooth_only = matches!(problem.term.regularizer(), Regularizer::Zero)
        && matches!(problem.term.domain(), Domain::AllSpace);
    if smooth_only {
        if let Some(x) = problem.ensemble.minimizer() {
            return Ok(Some(x.to_vec()));
        }
        if let Some(x) = problem.ensemble.quadratic_minimizer() {
            return Ok(Some(x));
        }
    }
    let r = centralized_reference(problem, cfg.algorithm.reference_tol, cfg.algorithm.reference_max_iter)?;
    Ok(Some(r.x))
}

/// Builds the problem, certifies the schedule and resolves `N`, `T` and
/// the reference solution.
pub fn prepare(cfg: &ExperimentConfig) -> Result<Prepared> {
    let problem = build_problem(cfg)?;
    let (m, d) = (problem.m(), problem.d());
    let x0 = match &cfg.algorithm.x0 {
        Some(v) if v.len() == 1 => vec![v[0]; d],
        Some(v) if v.len() != d => {
            return Err(Error::config("algorithm.x0", format!("expected 1 or {d} values, got {}", v.len())));
        }
        Some(v) => v.clone(),
        None => vec![0.0; d],
    };

    let mut schedule = MixingSchedule::generate(&cfg.network.topology)?;
    let samples = cfg.network.certify_samples.unwrap_or(schedule.period());
    let chi = schedule.certify_chi(samples)?;

    let constants = problem.ensemble.constants();
    let eta = eta(&constants, m);
    let reference = reference_solution(cfg, &problem)?;
    let (r0_sq, grad_opt_sq) = match &reference {
        Some(xs) => (m as f64 * dist_sq(&x0, xs), stacked_grad_norm_sq(&problem.ensemble, xs)?),
        None => {
            let b0 = cfg.algorithm.initial_distance_bound.unwrap_or(f64::NAN);
            let bg = cfg.algorithm.grad_norm_at_opt_bound.unwrap_or(f64::NAN);
            (m as f64 * b0 * b0, bg * bg)
        }
    };
    let iterations = match cfg.algorithm.iterations {
        IterationsRule::Fixed(n) => n,
        IterationsRule::Auto => theorem_iterations(constants.l_global, constants.mu_global, cfg.algorithm.epsilon),
    };
    let rounds = match cfg.algorithm.rounds {
        RoundsRule::Fixed(t) => t,
        RoundsRule::Theorem => select_rounds(&RoundSelection {
            chi,
            iterations,
            eps: cfg.algorithm.epsilon,
            l_global: constants.l_global,
            mu_global: constants.mu_global,
            eta,
            r0_sq,
            grad_opt_sq,
        })
        .map_err(|e| Error::config("algorithm.T", e.to_string()))?,
    };

    Ok(Prepared {
        config: cfg.clone(),
        problem,
        schedule,
        x0,
        reference,
        derived: Derived {
            constants,
            eta,
            chi,
            rounds,
            iterations,
            r0_sq,
            grad_opt_sq,
        },
    })
}

impl Prepared {
    pub fn run_options(&self) -> RunOptions {
        let a = &self.config.algorithm;
        let n = self.derived.iterations;
        RunOptions {
            rounds: self.derived.rounds,
            stop: match a.stop {
                StopRule::Iterations => Stop::Iterations(n),
                StopRule::Target => Stop::Target {
                    eps: a.epsilon,
                    max_iter: n,
                },
            },
            x0: self.x0.clone(),
            reference: self.reference.clone(),
            exec: a.exec,
        }
    }

    /// Runs the solver on a fresh copy of the schedule.
    pub fn execute(&self) -> Result<Outcome> {
        let mut schedule = self.schedule.clone();
        let report = run(&self.problem, &mut schedule, &self.run_options())?;
        let delta = delta_total(&report, self.derived.eta);
        let envelope = check_envelope(&report, self.derived.constants.mu_global, self.derived.r0_sq, self.derived.eta);
        Ok(Outcome {
            prepared: self.clone(),
            report,
            delta_total: delta,
            envelope,
        })
    }
}

pub const TRACE_HEADER: &str = "k,gap,dist_sq,cons_err,beta,alpha,A,gamma,comm_rounds";

/// 17 significant digits.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), fmt_float)
}

pub fn write_trace<W: Write>(report: &RunReport, mut out: W) -> io::Result<()> {
    writeln!(out, "{TRACE_HEADER}")?;
    for r in &report.records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.k,
            fmt_opt(r.gap),
            fmt_opt(r.dist_sq),
            fmt_float(r.cons_err),
            fmt_float(r.beta),
            fmt_float(r.alpha),
            fmt_float(r.big_a),
            fmt_float(r.gamma),
            r.comm_rounds
        )?;
    }
    out.flush()
}

/// SHA-256 over the effective configuration echo.
pub fn spec_hash(cfg: &ExperimentConfig) -> String {
    let mut h = Sha256::new();
    for (k, v) in cfg.echo() {
        h.update(k.as_bytes());
        h.update(b"=");
        h.update(v.as_bytes());
        h.update(b"\n");
    }
    hex::encode(h.finalize())
}

impl Outcome {
    pub fn summary(&self) -> String {
        let p = &self.prepared;
        let d = &p.derived;
        let c = &d.constants;
        let r = &self.report;
        let last = r.last();
        let mut lines: Vec<(String, String)> = vec![
            ("spec_hash".into(), spec_hash(&p.config)),
            ("m".into(), p.problem.m().to_string()),
            ("d".into(), p.problem.d().to_string()),
            ("chi".into(), fmt_float(d.chi)),
            ("lambda".into(), fmt_opt(r.lambda)),
            ("T".into(), d.rounds.to_string()),
            ("N".into(), r.n_comp.to_string()),
            ("N_max".into(), d.iterations.to_string()),
            ("N_comm".into(), r.n_comm.to_string()),
            ("final_gap".into(), fmt_opt(last.gap)),
            ("final_dist_sq".into(), fmt_opt(last.dist_sq)),
            ("final_cons_err".into(), fmt_float(last.cons_err)),
            (
                "target_reached".into(),
                r.target_reached.map_or("NA".into(), |b| b.to_string()),
            ),
            ("eta".into(), fmt_float(d.eta)),
            ("L_g".into(), fmt_float(c.l_global)),
            ("mu_g".into(), fmt_float(c.mu_global)),
            ("L_l".into(), fmt_float(c.l_local)),
            ("mu_l".into(), fmt_float(c.mu_local)),
            ("R0_sq".into(), fmt_float(d.r0_sq)),
            ("grad_opt_sq".into(), fmt_float(d.grad_opt_sq)),
            ("delta_total".into(), fmt_float(self.delta_total)),
        ];
        if let Some(e) = self.envelope {
            lines.push(("envelope_measured".into(), fmt_float(e.measured)));
            lines.push(("envelope_bound".into(), fmt_float(e.bound)));
        }
        lines.extend(p.config.echo());
        let mut s = String::from("[summary]\n");
        for (k, v) in lines {
            s.push_str(&format!("{k} = {v}\n"));
        }
        s
    }

    /// Writes `trace.csv` (if enabled), `summary.txt` and, if requested,
    /// `schedule.txt` into the output directory.
    pub fn write_outputs(&self) -> Result<()> {
        let out = &self.prepared.config.output;
        fs::create_dir_all(&out.dir).map_err(|e| Error::io(&out.dir, e))?;
        if out.csv {
            let path = out.dir.join("trace.csv");
            let f = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
            write_trace(&self.report, BufWriter::new(f)).map_err(|e| Error::io(&path, e))?;
        }
        write_file(&out.dir.join("summary.txt"), self.summary().as_bytes())?;
        if out.schedule_dump {
            let path = out.dir.join("schedule.txt");
            let mut buf = Vec::new();
            self.prepared
                .schedule
                .write_dump(0..self.report.n_comm, &mut buf)
                .map_err(|e| Error::io(&path, e))?;
            write_file(&path, &buf)?;
        }
        Ok(())
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Loads, prepares, runs and writes outputs for one config file.
pub fn run_config_file(path: &Path) -> Result<Outcome> {
    let cfg = ExperimentConfig::load(path)?;
    let outcome = prepare(&cfg)?.execute()?;
    outcome.write_outputs()?;
    Ok(outcome)
}
