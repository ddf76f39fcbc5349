//! The accelerated decentralized proximal method with a consensus
//! subroutine, its exact-averaging mirror trajectory, and run bookkeeping.
//!
//! One iteration with `A = A^k`, `α = α^{k+1}`, `A' = A + α`, `μ̂ = μ_g / 2`:
//!
//! ```text
//! y' = (α u + A x) / A'
//! v' = (α μ̂ y' + (1 + A μ̂) u − α ∇F(y')) / (1 + A' μ̂)
//! u' = prox_G^γ(Consensus(v', T)),   γ = α / (1 + A' μ̂)
//! x' = (α u' + A x) / A'
//! ```
//!
//! The mirror trajectory replays the same coefficients on single
//! `d`-vectors with exact averaging `P` in place of gossip, fed with the
//! block mean of the same stacked gradient `∇F(y')`.

mod coefficients;
mod reference;
mod rounds;

pub use coefficients::{alpha_residual, next_alpha, CoefficientSchedule, StepWeights};
pub use reference::{centralized_reference, ReferenceSolution};
pub use rounds::{select_rounds, theorem_iterations, RoundSelection};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::network::MixingSchedule;
use crate::objectives::ObjectiveEnsemble;
use crate::prox::CompositeTerm;
use crate::stacked::{consensus_error, dist_sq, norm_sq, StackedVector};

/// Iterates whose norm exceeds this abort the run.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

#[derive(Clone, Debug)]
pub struct Problem {
    pub ensemble: ObjectiveEnsemble,
    pub term: CompositeTerm,
}

impl Problem {
    pub fn new(ensemble: ObjectiveEnsemble, term: CompositeTerm) -> Result<Self> {
        term.check_dim(ensemble.d())?;
        Ok(Problem { ensemble, term })
    }

    pub fn m(&self) -> usize {
        self.ensemble.m()
    }

    pub fn d(&self) -> usize {
        self.ensemble.d()
    }

    /// `h(y) = (1/m) Σ f_i(y) + g(y)`
    pub fn composite_value(&self, y: &[f64]) -> Result<f64> {
        Ok(self.ensemble.value_avg(y)? + self.term.value(y))
    }
}

#[derive(Clone, Debug)]
pub struct SolverState {
    pub k: usize,
    /// `A^k`
    pub big_a: f64,
    pub x: StackedVector,
    pub u: StackedVector,
    pub y: StackedVector,
    pub v: StackedVector,
    pub mirror_x: Vec<f64>,
    pub mirror_u: Vec<f64>,
    pub mirror_y: Vec<f64>,
    pub beta: f64,
}

impl SolverState {
    /// `x^0 = u^0 = y^0 = 1 ⊗ x0`; the mirror starts at the same point.
    pub fn new(x0: &[f64], m: usize) -> Self {
        let x = StackedVector::broadcast(x0, m);
        SolverState {
            k: 0,
            big_a: 0.0,
            u: x.clone(),
            y: x.clone(),
            v: x.clone(),
            x,
            mirror_x: x0.to_vec(),
            mirror_u: x0.to_vec(),
            mirror_y: x0.to_vec(),
            beta: 0.0,
        }
    }

    /// `max(‖y − ŷ‖, ‖u − û‖, ‖x − x̂‖)`, recomputed from the iterates.
    pub fn deviation(&self) -> f64 {
        self.y
            .dist_to_broadcast(&self.mirror_y)
            .max(self.u.dist_to_broadcast(&self.mirror_u))
            .max(self.x.dist_to_broadcast(&self.mirror_x))
    }

    pub fn x_bar(&self) -> Vec<f64> {
        self.x.mean_block()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepInfo {
    pub alpha: f64,
    pub big_a: f64,
    pub gamma: f64,
    /// `‖∇F(y^{k+1})‖` over the stack.
    pub grad_norm: f64,
    pub beta: f64,
}

pub struct Solver<'a> {
    problem: &'a Problem,
    coefficients: CoefficientSchedule,
    exec: Exec,
    grad: StackedVector,
}

impl<'a> Solver<'a> {
    pub fn new(problem: &'a Problem, exec: Exec) -> Result<Self> {
        let c = problem.ensemble.constants();
        Ok(Solver {
            problem,
            coefficients: CoefficientSchedule::new(c.l_global, c.mu_global)?,
            exec,
            grad: StackedVector::zeros(problem.m(), problem.d()),
        })
    }

    /// One iteration: one stacked gradient, `rounds` communication rounds.
    pub fn step(&mut self, state: &mut SolverState, schedule: &mut MixingSchedule, rounds: usize) -> Result<StepInfo> {
        let k = state.k;
        self.coefficients.extend_to(k + 1);
        let StepWeights {
            w_u,
            w_x,
            c_y,
            c_u,
            gamma,
        } = self.coefficients.weights(k);
        let alpha = self.coefficients.alpha(k + 1);
        let a_next = self.coefficients.big_a(k + 1);

        state.y = StackedVector::lincomb(w_u, &state.u, w_x, &state.x);
        self.problem
            .ensemble
            .grad_stacked_into(&state.y, &mut self.grad, self.exec)?;
        let grad_norm = self.grad.norm();

        let mut v = StackedVector::lincomb(c_y, &state.y, c_u, &state.u);
        v.axpy(-gamma, &self.grad);
        let (mut u_next, _) = schedule.consensus(&v, rounds, self.exec)?;
        self.problem
            .term
            .prox_stacked_in_place(gamma, &mut u_next, self.exec);
        state.x = StackedVector::lincomb(w_u, &u_next, w_x, &state.x);
        state.u = u_next;
        state.v = v;

        // mirror: same coefficients, exact averaging
        let mean_grad = self.grad.mean_block();
        let y_hat: Vec<f64> = combine(w_u, &state.mirror_u, w_x, &state.mirror_x);
        let mut u_hat = combine(c_y, &y_hat, c_u, &state.mirror_u);
        u_hat.iter_mut().zip(&mean_grad).for_each(|(v, g)| *v -= gamma * g);
        self.problem.term.prox_in_place(gamma, &mut u_hat);
        state.mirror_x = combine(w_u, &u_hat, w_x, &state.mirror_x);
        state.mirror_u = u_hat;
        state.mirror_y = y_hat;

        state.k += 1;
        state.big_a = a_next;
        state.beta = state.deviation();
        Ok(StepInfo {
            alpha,
            big_a: a_next,
            gamma,
            grad_norm,
            beta: state.beta,
        })
    }
}

fn combine(a: f64, u: &[f64], b: f64, v: &[f64]) -> Vec<f64> {
    u.iter().zip(v).map(|(x, y)| a * x + b * y).collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Stop {
    Iterations(usize),
    /// Stop once `‖x̄^k − x*‖² ≤ eps`; needs a reference solution.
    Target { eps: f64, max_iter: usize },
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    /// Consensus rounds `T` per iteration.
    pub rounds: usize,
    pub stop: Stop,
    pub x0: Vec<f64>,
    /// Known solution `x*`, used for reporting only.
    pub reference: Option<Vec<f64>>,
    pub exec: Exec,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    /// `h(x̄^k) − h(x*)`
    pub gap: Option<f64>,
    /// `‖x̄^k − x*‖²`
    pub dist_sq: Option<f64>,
    /// `‖x^k − 1 ⊗ x*‖²` over the stack.
    pub dist_sq_stacked: Option<f64>,
    /// `‖x̂^k − x*‖²` for the mirror trajectory.
    pub mirror_dist_sq: Option<f64>,
    pub cons_err: f64,
    pub beta: f64,
    /// `α^k`, `A^k`, `γ_{k−1}` and `‖∇F(y^k)‖`; zero for `k = 0`.
    pub alpha: f64,
    pub big_a: f64,
    pub gamma: f64,
    pub grad_norm: f64,
    pub comm_rounds: u64,
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub records: Vec<IterationRecord>,
    pub rounds: usize,
    pub chi: Option<f64>,
    pub lambda: Option<f64>,
    /// Gradient evaluations per node.
    pub n_comp: usize,
    pub n_comm: u64,
    pub target_reached: Option<bool>,
    pub final_state: SolverState,
}

impl RunReport {
    pub fn last(&self) -> &IterationRecord {
        self.records.last().expect("report always has the initial record")
    }

    /// First iteration with `‖x̄^k − x*‖² ≤ eps`.
    pub fn iterations_to(&self, eps: f64) -> Option<usize> {
        self.records
            .iter()
            .find(|r| r.dist_sq.is_some_and(|d| d <= eps))
            .map(|r| r.k)
    }
}

fn record(
    problem: &Problem,
    state: &SolverState,
    info: Option<&StepInfo>,
    reference: Option<(&[f64], f64)>,
    comm_rounds: u64,
) -> Result<IterationRecord> {
    let x_bar = state.x_bar();
    let (gap, dist_sq, dist_sq_stacked, mirror_dist_sq) = match reference {
        Some((xs, h_star)) => (
            Some(problem.composite_value(&x_bar)? - h_star),
            Some(crate::stacked::dist_sq(&x_bar, xs)),
            Some(state.x.dist_to_broadcast(xs).powi(2)),
            Some(dist_sq(&state.mirror_x, xs)),
        ),
        None => (None, None, None, None),
    };
    Ok(IterationRecord {
        k: state.k,
        gap,
        dist_sq,
        dist_sq_stacked,
        mirror_dist_sq,
        cons_err: consensus_error(&state.x),
        beta: state.beta,
        alpha: info.map_or(0.0, |i| i.alpha),
        big_a: info.map_or(0.0, |i| i.big_a),
        gamma: info.map_or(0.0, |i| i.gamma),
        grad_norm: info.map_or(0.0, |i| i.grad_norm),
        comm_rounds,
    })
}

/// Runs the method from `1 ⊗ x0` and records every iterate.
pub fn run(problem: &Problem, schedule: &mut MixingSchedule, opts: &RunOptions) -> Result<RunReport> {
    if opts.x0.len() != problem.d() {
        return Err(Error::shape(format!("x0 of dimension {}", problem.d()), opts.x0.len()));
    }
    if schedule.m() != problem.m() {
        return Err(Error::shape(format!("schedule on {} nodes", problem.m()), schedule.m()));
    }
    let (max_iter, eps) = match opts.stop {
        Stop::Iterations(n) => (n, None),
        Stop::Target { eps, max_iter } => {
            if opts.reference.is_none() {
                return Err(Error::config("algorithm.epsilon", "target stopping needs a reference solution"));
            }
            (max_iter, Some(eps))
        }
    };
    let reference = match &opts.reference {
        Some(xs) => {
            if xs.len() != problem.d() {
                return Err(Error::shape(problem.d(), xs.len()));
            }
            Some((xs.as_slice(), problem.composite_value(xs)?))
        }
        None => None,
    };

    let start_cursor = schedule.cursor();
    let mut state = SolverState::new(&opts.x0, problem.m());
    let mut solver = Solver::new(problem, opts.exec)?;
    let mut records = vec![record(problem, &state, None, reference, 0)?];
    let reached = |r: &IterationRecord| matches!((eps, r.dist_sq), (Some(e), Some(d)) if d <= e);
    let mut hit = reached(&records[0]);

    while state.k < max_iter && !hit {
        let info = solver.step(&mut state, schedule, opts.rounds)?;
        let norm = state.x.norm();
        if !norm.is_finite() || norm > DIVERGENCE_LIMIT {
            return Err(Error::Diverged {
                k: state.k,
                rounds: opts.rounds,
                chi: schedule.chi().unwrap_or(f64::NAN),
            });
        }
        let rec = record(problem, &state, Some(&info), reference, schedule.cursor() - start_cursor)?;
        hit = reached(&rec);
        records.push(rec);
    }

    Ok(RunReport {
        n_comp: state.k,
        n_comm: schedule.cursor() - start_cursor,
        rounds: opts.rounds,
        chi: schedule.chi(),
        lambda: schedule.lambda(opts.rounds),
        target_reached: eps.map(|_| hit),
        records,
        final_state: state,
    })
}

/// `‖∇F(1 ⊗ x*)‖²` over the stack.
pub fn stacked_grad_norm_sq(ensemble: &ObjectiveEnsemble, x: &[f64]) -> Result<f64> {
    if x.len() != ensemble.d() {
        return Err(Error::shape(ensemble.d(), x.len()));
    }
    Ok(ensemble.nodes().iter().map(|n| norm_sq(&n.grad(x))).sum())
}
