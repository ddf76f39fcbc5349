use crate::error::{Error, Result};

/// Greater root `α` of `(A + α)(1 + A μ_g / 2) = 2 L_g α²`.
pub fn next_alpha(a_k: f64, l_global: f64, mu_global: f64) -> Result<f64> {
    if !(a_k.is_finite() && l_global.is_finite() && mu_global.is_finite()) {
        return Err(Error::NonFinite("next_alpha"));
    }
    if a_k < 0.0 || !(mu_global > 0.0) || mu_global > l_global {
        return Err(Error::config(
            "constants",
            format!("need A >= 0 and 0 < μ_g <= L_g (A = {a_k}, L_g = {l_global}, μ_g = {mu_global})"),
        ));
    }
    let b = 1.0 + a_k * mu_global / 2.0;
    Ok((b + (b * b + 8.0 * l_global * a_k * b).sqrt()) / (4.0 * l_global))
}

/// Relative residual of the defining quadratic at `α`.
pub fn alpha_residual(a_k: f64, alpha: f64, l_global: f64, mu_global: f64) -> f64 {
    let lhs = (a_k + alpha) * (1.0 + a_k * mu_global / 2.0);
    let rhs = 2.0 * l_global * alpha * alpha;
    (lhs - rhs).abs() / lhs.abs().max(rhs.abs())
}

/// Rescale threshold for the internal representation `A = Ã e^{s}`.
const RESCALE_AT: f64 = 1e100;

/// The sequences `α^k`, `A^k` (with `α^0 = A^0 = 0`) and step sizes
/// `γ_k = α^{k+1} / (1 + A^{k+1} μ_g / 2)`.
///
/// `A^k` grows geometrically and leaves the range of `f64` after a few
/// thousand steps at small condition numbers, so the recurrence is carried
/// as `Ã e^{s}` and logarithms are kept alongside. Until the first rescale
/// the plain values are bit-identical to repeated [`next_alpha`] calls.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientSchedule {
    l_global: f64,
    mu_global: f64,
    alpha: Vec<f64>,
    big_a: Vec<f64>,
    ln_alpha: Vec<f64>,
    ln_big_a: Vec<f64>,
    gamma: Vec<f64>,
    weights: Vec<StepWeights>,
    scaled_a: f64,
    ln_scale: f64,
}

impl CoefficientSchedule {
    pub fn new(l_global: f64, mu_global: f64) -> Result<Self> {
        next_alpha(0.0, l_global, mu_global)?;
        Ok(CoefficientSchedule {
            l_global,
            mu_global,
            alpha: vec![0.0],
            big_a: vec![0.0],
            ln_alpha: vec![f64::NEG_INFINITY],
            ln_big_a: vec![f64::NEG_INFINITY],
            gamma: Vec::new(),
            weights: Vec::new(),
            scaled_a: 0.0,
            ln_scale: 0.0,
        })
    }

    /// Schedule with entries up to index `n`.
    pub fn with_len(l_global: f64, mu_global: f64, n: usize) -> Result<Self> {
        let mut s = Self::new(l_global, mu_global)?;
        s.extend_to(n);
        Ok(s)
    }

    pub fn extend_to(&mut self, n: usize) {
        let (l, mu) = (self.l_global, self.mu_global);
        let mu_hat = mu / 2.0;
        while self.big_a.len() <= n {
            let a = self.scaled_a;
            // b and the discriminant are homogeneous in A apart from the 1
            let one = (-self.ln_scale).exp();
            let b = one + a * mu / 2.0;
            let alpha = (b + (b * b + 8.0 * l * a * b).sqrt()) / (4.0 * l);
            let a_next = a + alpha;
            let denom = one + a_next * mu_hat;
            let w_u = alpha / a_next;
            self.gamma.push(alpha / denom);
            self.weights.push(StepWeights {
                w_u,
                w_x: 1.0 - w_u,
                c_y: alpha * mu_hat / denom,
                c_u: (one + a * mu_hat) / denom,
                gamma: alpha / denom,
            });
            if self.ln_scale == 0.0 {
                self.alpha.push(alpha);
                self.big_a.push(a_next);
            } else {
                self.alpha.push(alpha * self.ln_scale.exp());
                self.big_a.push(a_next * self.ln_scale.exp());
            }
            self.ln_alpha.push(alpha.ln() + self.ln_scale);
            self.ln_big_a.push(a_next.ln() + self.ln_scale);
            self.scaled_a = a_next;
            if a_next > RESCALE_AT {
                self.scaled_a = 1.0;
                self.ln_scale += a_next.ln();
            }
        }
    }

    pub fn l_global(&self) -> f64 {
        self.l_global
    }

    pub fn mu_global(&self) -> f64 {
        self.mu_global
    }

    /// Largest index available.
    pub fn len(&self) -> usize {
        self.big_a.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `α^k`; infinite once it exceeds the `f64` range.
    pub fn alpha(&self, k: usize) -> f64 {
        self.alpha[k]
    }

    /// `A^k`; infinite once it exceeds the `f64` range.
    pub fn big_a(&self, k: usize) -> f64 {
        self.big_a[k]
    }

    pub fn ln_alpha(&self, k: usize) -> f64 {
        self.ln_alpha[k]
    }

    pub fn ln_big_a(&self, k: usize) -> f64 {
        self.ln_big_a[k]
    }

    pub fn gamma(&self, k: usize) -> f64 {
        self.gamma[k]
    }

    /// Scale-free weights of iteration `k → k + 1`.
    pub fn weights(&self, k: usize) -> StepWeights {
        self.weights[k]
    }
}

/// Coefficients of one iteration, with `μ̂ = μ_g / 2`:
/// `y = w_u u + w_x x`, `v = c_y y + c_u u − γ ∇F(y)`, `x' = w_u u' + w_x x`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepWeights {
    /// `α^{k+1} / A^{k+1}`
    pub w_u: f64,
    /// `1 − w_u = A^k / A^{k+1}`
    pub w_x: f64,
    /// `α^{k+1} μ̂ / (1 + A^{k+1} μ̂)`
    pub c_y: f64,
    /// `(1 + A^k μ̂) / (1 + A^{k+1} μ̂)`
    pub c_u: f64,
    /// `γ_k = α^{k+1} / (1 + A^{k+1} μ̂)`
    pub gamma: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step() {
        assert_eq!(next_alpha(0.0, 3.0, 0.2).unwrap(), 1.0 / 6.0);
        let s = CoefficientSchedule::with_len(1.0, 1.0, 1).unwrap();
        assert_eq!((s.alpha(1), s.big_a(1)), (0.5, 0.5));
    }

    #[test]
    fn matches_bisection_root() {
        // (10 + α) 1.05 = 2 α², greater root by bisection on [0, 100]
        let phi = |a: f64| 2.0 * a * a - (10.0 + a) * 1.05;
        let (mut lo, mut hi) = (0.0f64, 100.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if phi(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let alpha = next_alpha(10.0, 1.0, 0.01).unwrap();
        assert!((alpha - lo).abs() < 1e-12);
        assert!((alpha - (1.05 + (1.05f64 * 1.05 + 8.0 * 10.0 * 1.05).sqrt()) / 4.0).abs() < 1e-15);
    }

    #[test]
    fn residual_and_monotonicity() {
        for (l, mu) in [(1.0, 1.0), (1.0, 0.01), (10.0, 0.1), (250.0, 0.3)] {
            let s = CoefficientSchedule::with_len(l, mu, 500).unwrap();
            for k in 0..500 {
                assert!(alpha_residual(s.big_a(k), s.alpha(k + 1), l, mu) <= 1e-10);
                assert!(s.big_a(k + 1) > s.big_a(k));
                assert!(s.gamma(k) > 0.0);
            }
        }
    }

    #[test]
    fn long_schedules_stay_finite_in_logs() {
        let s = CoefficientSchedule::with_len(1.0, 1.0, 3000).unwrap();
        assert!(s.big_a(3000).is_infinite());
        let ln = s.ln_big_a(3000);
        assert!(ln.is_finite() && ln > 700.0, "{ln}");
        // asymptotic growth per step for L = μ = 1
        let r = (0.25 + (1.0f64 / 16.0 + 1.0).sqrt()) / 2.0;
        assert!(((s.ln_big_a(3000) - s.ln_big_a(2999)) - r.ln_1p()).abs() < 1e-9);
        assert!((s.gamma(2999) - 2.0 * r / (1.0 + r)).abs() < 1e-9);
    }

    #[test]
    fn plain_values_match_direct_recurrence() {
        let s = CoefficientSchedule::with_len(3.0, 0.05, 400).unwrap();
        let mut a = 0.0;
        for k in 1..=400 {
            let alpha = next_alpha(a, 3.0, 0.05).unwrap();
            assert_eq!(s.alpha(k), alpha);
            a += alpha;
            assert_eq!(s.big_a(k), a);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(next_alpha(f64::NAN, 1.0, 1.0).is_err());
        assert!(next_alpha(1.0, f64::INFINITY, 1.0).is_err());
        assert!(next_alpha(-1.0, 1.0, 1.0).is_err());
        assert!(next_alpha(1.0, 1.0, 2.0).is_err());
        assert!(CoefficientSchedule::new(1.0, 0.0).is_err());
    }
}
