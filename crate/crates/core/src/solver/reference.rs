use crate::error::{Error, Result};
use crate::stacked::dist_sq;

use super::Problem;

#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceSolution {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Last step length `‖x_{k+1} − x_k‖`.
    pub last_step: f64,
}

/// Centralized proximal gradient on `h = (1/m) Σ f_i + g` over `Q` with
/// step `1 / L_g`, iterated until a step shorter than `tol`.
pub fn centralized_reference(problem: &Problem, tol: f64, max_iter: usize) -> Result<ReferenceSolution> {
    let step = 1.0 / problem.ensemble.constants().l_global;
    let mut x = vec![0.0; problem.d()];
    problem.term.domain().project(&mut x);
    let mut last_step = f64::INFINITY;
    for it in 1..=max_iter {
        let g = problem.ensemble.grad_avg(&x)?;
        let mut next: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - step * b).collect();
        problem.term.prox_in_place(step, &mut next);
        last_step = dist_sq(&next, &x).sqrt();
        x = next;
        if !last_step.is_finite() {
            return Err(Error::NonFinite("centralized_reference"));
        }
        if last_step <= tol {
            return Ok(ReferenceSolution {
                x,
                iterations: it,
                last_step,
            });
        }
    }
    Err(Error::config(
        "reference",
        format!("proximal gradient did not reach step {tol:e} in {max_iter} iterations (last {last_step:e})"),
    ))
}
