use crate::error::{Error, Result};

/// Inputs to the consensus-round rule. `r0_sq = ‖u^0 − x*‖²` and
/// `grad_opt_sq = ‖∇F(x*)‖²` are stacked norms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RoundSelection {
    pub chi: f64,
    pub iterations: usize,
    pub eps: f64,
    pub l_global: f64,
    pub mu_global: f64,
    pub eta: f64,
    pub r0_sq: f64,
    pub grad_opt_sq: f64,
}

/// `T = max(1, ⌈(χ/2) log[(32 N³ / (η μ_g L_g ε)) (a R0² + ‖∇F(x*)‖²)]⌉)`
/// with `a = 4 L_g³ / μ_g`.
pub fn select_rounds(sel: &RoundSelection) -> Result<usize> {
    let RoundSelection {
        chi,
        iterations,
        eps,
        l_global: l,
        mu_global: mu,
        eta,
        r0_sq,
        grad_opt_sq,
    } = *sel;
    for (name, v) in [("chi", chi), ("epsilon", eps), ("L_g", l), ("mu_g", mu), ("eta", eta)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::config(name, format!("must be positive and finite, got {v}")));
        }
    }
    if !(r0_sq >= 0.0 && grad_opt_sq >= 0.0) {
        return Err(Error::NonFinite("select_rounds"));
    }
    let a = 4.0 * l.powi(3) / mu;
    let n = iterations.max(1) as f64;
    let arg = 32.0 * n.powi(3) / (eta * mu * l * eps) * (a * r0_sq + grad_opt_sq);
    if !arg.is_finite() {
        return Err(Error::NonFinite("select_rounds"));
    }
    if arg <= 0.0 {
        return Ok(1);
    }
    let t = (chi / 2.0 * arg.ln()).ceil();
    if !t.is_finite() {
        return Err(Error::NonFinite("select_rounds"));
    }
    Ok(t.max(1.0) as usize)
}

/// Iteration count `⌈4 √(L_g/μ_g) ln(1/ε)⌉`, at least 1.
pub fn theorem_iterations(l_global: f64, mu_global: f64, eps: f64) -> usize {
    let n = 4.0 * (l_global / mu_global).sqrt() * (1.0 / eps).ln();
    n.ceil().max(1.0) as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> RoundSelection {
        RoundSelection {
            chi: 1.0,
            iterations: 100,
            eps: 1e-6,
            l_global: 2.0,
            mu_global: 0.5,
            eta: 3.0,
            r0_sq: 4.0,
            grad_opt_sq: 10.0,
        }
    }

    #[test]
    fn unit_chi_is_small_and_clamped() {
        let t = select_rounds(&base()).unwrap();
        let raw = (0.5f64 * (32.0f64 * 1e6 / (3.0 * 0.5 * 2.0 * 1e-6) * (4.0 * 8.0 / 0.5 * 4.0 + 10.0)).ln()).ceil();
        assert_eq!(t, raw as usize);
        let tiny = RoundSelection {
            iterations: 1,
            eps: 1e6,
            r0_sq: 0.0,
            grad_opt_sq: 1e-30,
            ..base()
        };
        assert_eq!(select_rounds(&tiny).unwrap(), 1);
    }

    #[test]
    fn linear_in_chi() {
        let t1 = select_rounds(&RoundSelection { chi: 7.0, ..base() }).unwrap();
        let t2 = select_rounds(&RoundSelection { chi: 14.0, ..base() }).unwrap();
        assert!((t2 as i64 - 2 * t1 as i64).abs() <= 1);
    }

    #[test]
    fn rejects_non_finite() {
        assert!(select_rounds(&RoundSelection { eps: 0.0, ..base() }).is_err());
        assert!(select_rounds(&RoundSelection { chi: f64::NAN, ..base() }).is_err());
        assert!(select_rounds(&RoundSelection { r0_sq: f64::INFINITY, ..base() }).is_err());
    }

    #[test]
    fn iteration_rule() {
        assert_eq!(theorem_iterations(4.0, 1.0, (-1.0f64).exp()), 8);
        assert_eq!(theorem_iterations(1.0, 1.0, 2.0), 1);
    }
}
