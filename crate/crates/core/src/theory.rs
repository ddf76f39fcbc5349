//! Numerical certificates for the convergence analysis: the inexact
//! first-order model and its sandwich inequality, growth bounds on the
//! coefficient sequence, the β recurrence, and the final-distance envelope.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::objectives::{EnsembleConstants, ObjectiveEnsemble};
use crate::prox::CompositeTerm;
use crate::solver::{CoefficientSchedule, RunReport};
use crate::stacked::{dist_sq, dot, StackedVector};

/// `η = (1/2m)(L_l²/L_g + 2 L_l²/μ_g + L_l − μ_l)`
pub fn eta(c: &EnsembleConstants, m: usize) -> f64 {
    let ll2 = c.l_local * c.l_local;
    (ll2 / c.l_global + 2.0 * ll2 / c.mu_global + c.l_local - c.mu_local) / (2.0 * m as f64)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelValues {
    pub f_delta: f64,
    pub psi_delta: f64,
    pub delta: f64,
}

/// The inexact model of `h` built from per-node points `x_i`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InexactModel {
    pub eta: f64,
    pub constants: EnsembleConstants,
}

impl InexactModel {
    pub fn new(ens: &ObjectiveEnsemble) -> Self {
        let constants = ens.constants();
        InexactModel {
            eta: eta(&constants, ens.m()),
            constants,
        }
    }

    /// `f_δ(y, x)`, `ψ_δ(z, y, x)` and `δ = η Σ ‖x_i − y‖²`.
    pub fn values(
        &self,
        ens: &ObjectiveEnsemble,
        term: &CompositeTerm,
        y: &[f64],
        z: &[f64],
        x: &StackedVector,
    ) -> Result<ModelValues> {
        let (m, d) = (ens.m(), ens.d());
        if y.len() != d || z.len() != d {
            return Err(Error::shape(d, if y.len() != d { y.len() } else { z.len() }));
        }
        if x.m() != m || x.d() != d {
            return Err(Error::shape(format!("({m}, {d})"), format!("({}, {})", x.m(), x.d())));
        }
        let c = &self.constants;
        let curvature = 0.5 * (c.mu_local - 2.0 * c.l_local * c.l_local / c.mu_global);
        let gz = term.value(z);
        let (mut f_sum, mut psi_sum, mut spread) = (0.0, 0.0, 0.0);
        let mut grad = vec![0.0; d];
        let mut diff = vec![0.0; d];
        for (node, xi) in ens.nodes().iter().zip(x.blocks()) {
            node.grad_into(xi, &mut grad);
            diff.iter_mut().zip(y.iter().zip(xi)).for_each(|(o, (a, b))| *o = a - b);
            let r2 = dot(&diff, &diff);
            f_sum += node.value(xi) + dot(&grad, &diff) + curvature * r2;
            diff.iter_mut().zip(z.iter().zip(y)).for_each(|(o, (a, b))| *o = a - b);
            psi_sum += dot(&grad, &diff) + gz - term.value(xi);
            spread += r2;
        }
        let inv_m = 1.0 / m as f64;
        Ok(ModelValues {
            f_delta: f_sum * inv_m,
            psi_delta: psi_sum * inv_m,
            delta: self.eta * spread,
        })
    }

    /// Slacks of `μ_g/4 ‖z − y‖² ≤ h(z) − M ≤ L_g ‖z − y‖² + δ`, where `M` is
    /// the composite model value `f_δ + ψ_δ + (1/m) Σ g(x_i)`: the
    /// `−g(x_i)` terms of `ψ_δ` pair with a zeroth-order `g(x_i)` so that
    /// the model is exact at `x = 1 ⊗ y`, `z = y`.
    pub fn sandwich(
        &self,
        ens: &ObjectiveEnsemble,
        term: &CompositeTerm,
        y: &[f64],
        z: &[f64],
        x: &StackedVector,
    ) -> Result<SandwichSlack> {
        let mv = self.values(ens, term, y, z, x)?;
        let g_at_nodes = x.blocks().map(|b| term.value(b)).sum::<f64>() / ens.m() as f64;
        let h_z = ens.value_avg(z)? + term.value(z);
        let gap = h_z - mv.f_delta - mv.psi_delta - g_at_nodes;
        let r2 = dist_sq(z, y);
        Ok(SandwichSlack {
            lower: gap - 0.25 * self.constants.mu_global * r2,
            upper: self.constants.l_global * r2 + mv.delta - gap,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SandwichSlack {
    pub lower: f64,
    pub upper: f64,
}

pub fn model_values(
    ens: &ObjectiveEnsemble,
    term: &CompositeTerm,
    y: &[f64],
    z: &[f64],
    x: &StackedVector,
) -> Result<ModelValues> {
    InexactModel::new(ens).values(ens, term, y, z, x)
}

pub fn check_sandwich(
    ens: &ObjectiveEnsemble,
    term: &CompositeTerm,
    y: &[f64],
    z: &[f64],
    x: &StackedVector,
) -> Result<SandwichSlack> {
    InexactModel::new(ens).sandwich(ens, term, y, z, x)
}

/// Perturbation scales for `x_i − y`, cycled by draw index.
pub const DRAW_SCALES: [f64; 3] = [0.01, 1.0, 10.0];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SandwichSummary {
    pub draws: usize,
    pub min_lower: f64,
    pub min_upper: f64,
    pub worst_lower_draw: usize,
    pub worst_upper_draw: usize,
}

impl SandwichSummary {
    pub fn passes(&self, tol: f64) -> bool {
        self.min_lower >= -tol && self.min_upper >= -tol
    }
}

/// Random `(y, z, x)` draws: `y, z` standard Gaussian projected onto `Q`,
/// `x_i = y + s ξ_i` with `s` from [`DRAW_SCALES`]. Draw `j` uses its own
/// RNG stream, so the result does not depend on `exec`.
pub fn sandwich_draws(
    ens: &ObjectiveEnsemble,
    term: &CompositeTerm,
    seed: u64,
    draws: usize,
    exec: Exec,
) -> Result<SandwichSummary> {
    let model = InexactModel::new(ens);
    let (m, d) = (ens.m(), ens.d());
    let slacks = exec.map(draws, |j| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(j as u64);
        let mut gauss = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.sample(StandardNormal)).collect() };
        let mut y = gauss(d);
        let mut z = gauss(d);
        term.domain().project(&mut y);
        term.domain().project(&mut z);
        let s = DRAW_SCALES[j % DRAW_SCALES.len()];
        let noise = gauss(m * d);
        let data = (0..m * d).map(|k| y[k % d] + s * noise[k]).collect();
        let x = StackedVector::from_flat(m, d, data).expect("shape is m x d");
        model.sandwich(ens, term, &y, &z, &x)
    });
    let mut summary = SandwichSummary {
        draws,
        min_lower: f64::INFINITY,
        min_upper: f64::INFINITY,
        worst_lower_draw: 0,
        worst_upper_draw: 0,
    };
    for (j, s) in slacks.into_iter().enumerate() {
        let s = s?;
        if s.lower < summary.min_lower {
            summary.min_lower = s.lower;
            summary.worst_lower_draw = j;
        }
        if s.upper < summary.min_upper {
            summary.min_upper = s.upper;
            summary.worst_upper_draw = j;
        }
    }
    Ok(summary)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoefficientBoundReport {
    pub n: usize,
    /// Smallest `A^n / lower_n − 1` over prefixes.
    pub growth_margin: f64,
    pub growth_at: usize,
    /// Smallest `1 + 2√(L_g/μ_g) − Σ_{k<n} A^{k+1} / A^n` over prefixes.
    pub ratio_margin: f64,
    pub ratio_at: usize,
}

/// Checks, for every prefix `n = 1..=N`,
/// `A^n ≥ (1/2L_g)(1 + ¼√(μ_g/L_g))^{2(n−1)}` and
/// `Σ_{k<n} A^{k+1} / A^n ≤ 1 + 2√(L_g/μ_g)`.
pub fn check_coefficient_bounds(schedule: &CoefficientSchedule, n_max: usize) -> Result<CoefficientBoundReport> {
    if schedule.len() < n_max {
        return Err(Error::config("N", format!("schedule has {} entries, need {n_max}", schedule.len())));
    }
    let (l, mu) = (schedule.l_global(), schedule.mu_global());
    let q = (mu / l).sqrt();
    let ratio_cap = 1.0 + 2.0 / q;
    let log_base = 2.0 * (0.25 * q).ln_1p();
    let mut report = CoefficientBoundReport {
        n: n_max,
        growth_margin: f64::INFINITY,
        growth_at: 0,
        ratio_margin: f64::INFINITY,
        ratio_at: 0,
    };
    // running Σ_{k<n} A^{k+1} / A^n, updated with ratios of consecutive A
    let mut ratio_sum = 0.0;
    for n in 1..=n_max {
        let ln_a = schedule.ln_big_a(n);
        ratio_sum = ratio_sum * (schedule.ln_big_a(n - 1) - ln_a).exp() + 1.0;
        let growth = (ln_a - ((n - 1) as f64 * log_base - (2.0 * l).ln())).exp_m1();
        if growth < -1e-12 {
            return Err(Error::BoundViolation {
                bound: "A^N growth bound",
                n,
                margin: growth,
            });
        }
        let ratio = ratio_cap - ratio_sum;
        if ratio < -1e-12 {
            return Err(Error::BoundViolation {
                bound: "sum A^(k+1) / A^N bound",
                n,
                margin: ratio,
            });
        }
        if growth < report.growth_margin {
            report.growth_margin = growth;
            report.growth_at = n;
        }
        if ratio < report.ratio_margin {
            report.ratio_margin = ratio;
            report.ratio_at = n;
        }
    }
    Ok(report)
}

/// `a`, `b`, `c(N)` and `λ` from the complexity argument.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComplexityEnvelope {
    pub a: f64,
    pub b: f64,
    pub lambda: f64,
    pub r0_sq: f64,
}

impl ComplexityEnvelope {
    pub fn new(l_global: f64, mu_global: f64, lambda: f64, r0_sq: f64) -> Self {
        ComplexityEnvelope {
            a: 4.0 * l_global.powi(3) / mu_global,
            b: 8.0 * l_global * l_global / mu_global * (1.0 + 2.0 * (l_global / mu_global).sqrt()),
            lambda,
            r0_sq,
        }
    }

    /// `c(N) = N ((1 + λ)^{N−1} − 1)²`
    pub fn c(&self, n: usize) -> f64 {
        if n == 0 {
            return 0.0;
        }
        let t = ((n - 1) as f64 * self.lambda.ln_1p()).exp_m1();
        n as f64 * t * t
    }
}

/// `δ = η Σ_{k=0}^{N−1} β_k²`
pub fn delta_total(report: &RunReport, eta: f64) -> f64 {
    let n = report.records.len().saturating_sub(1);
    eta * report.records[..n].iter().map(|r| r.beta * r.beta).sum::<f64>()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RecurrenceCheck {
    /// Smallest `(1 + λ)β_k + λγ_k‖∇F(y^{k+1})‖ − β_{k+1}`.
    pub min_slack: f64,
    pub at: usize,
    pub steps: usize,
}

/// Checks `β_{k+1} ≤ (1 + λ)β_k + λγ_k‖∇F(y^{k+1})‖` along a run.
pub fn check_beta_recurrence(report: &RunReport, lambda: f64) -> RecurrenceCheck {
    let mut out = RecurrenceCheck {
        min_slack: f64::INFINITY,
        at: 0,
        steps: report.records.len().saturating_sub(1),
    };
    for w in report.records.windows(2) {
        let (prev, next) = (&w[0], &w[1]);
        let slack = (1.0 + lambda) * prev.beta + lambda * next.gamma * next.grad_norm - next.beta;
        if slack < out.min_slack {
            out.min_slack = slack;
            out.at = next.k;
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnvelopeCheck {
    /// `‖x^N − 1 ⊗ x*‖²` over the stack.
    pub measured: f64,
    pub bound: f64,
}

impl EnvelopeCheck {
    pub fn holds(&self) -> bool {
        self.measured <= self.bound
    }
}

/// `‖x^N − x*‖² ≤ 2R0²/(A^N μ_g) + 8 (Σ A^{k+1}) δ / (A^N μ_g)` with
/// stacked `R0² = ‖u^0 − x*‖²`.
pub fn check_envelope(report: &RunReport, mu_global: f64, r0_sq: f64, eta: f64) -> Option<EnvelopeCheck> {
    let last = report.last();
    if last.k == 0 {
        return None;
    }
    let measured = last.dist_sq_stacked?;
    let a_n = last.big_a;
    let sum_a: f64 = report.records[1..].iter().map(|r| r.big_a).sum();
    let delta = delta_total(report, eta);
    Some(EnvelopeCheck {
        measured,
        bound: 2.0 * r0_sq / (a_n * mu_global) + 8.0 * sum_a * delta / (a_n * mu_global),
    })
}

/// Per-iteration factor `exp(slope)` of a least-squares line through
/// `ln values[k]`; non-positive entries are skipped.
pub fn fit_geometric_rate(values: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = values
        .iter()
        .enumerate()
        .filter(|(_, v)| **v > 0.0 && v.is_finite())
        .map(|(k, v)| (k as f64, v.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Some((sxy / sxx).exp())
}
