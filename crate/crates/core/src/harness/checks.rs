//! Fixed-seed property suites behind the `check` subcommand.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::exec::Exec;
use crate::network::{MixingSchedule, Topology, TopologyConfig};
use crate::objectives::{generate_quadratic_ensemble, QuadraticSpec};
use crate::prox::{CompositeTerm, Domain, Regularizer};
use crate::solver::CoefficientSchedule;
use crate::stacked::{consensus_error, StackedVector};
use crate::theory::{check_coefficient_bounds, sandwich_draws};

pub const SANDWICH_TOL: f64 = 1e-8;
pub const CONSENSUS_TOL: f64 = 1e-9;
pub const PROX_TOL: f64 = 1e-6;
/// Rounding allowance on the coefficient bounds, which are tight at `n = 1`.
pub const LEMMA3_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Lemma1,
    Lemma3,
    Consensus,
    Prox,
    All,
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "lemma1" => Ok(Suite::Lemma1),
            "lemma3" => Ok(Suite::Lemma3),
            "consensus" => Ok(Suite::Consensus),
            "prox" => Ok(Suite::Prox),
            "all" => Ok(Suite::All),
            other => Err(format!("unknown suite `{other}` (lemma1|lemma3|consensus|prox|all)")),
        }
    }
}

/// One `check_name,n_or_draw,margin,pass` line. A check passes when its
/// margin is nonnegative.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckLine {
    pub name: String,
    pub index: usize,
    pub margin: f64,
}

impl CheckLine {
    fn new(name: impl Into<String>, index: usize, margin: f64) -> Self {
        CheckLine {
            name: name.into(),
            index,
            margin,
        }
    }

    pub fn pass(&self) -> bool {
        self.margin >= 0.0
    }
}

impl fmt::Display for CheckLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{:e},{}", self.name, self.index, self.margin, self.pass())
    }
}

pub fn run_suite(suite: Suite, exec: Exec) -> Result<Vec<CheckLine>> {
    match suite {
        Suite::Lemma1 => lemma1(exec),
        Suite::Lemma3 => lemma3(),
        Suite::Consensus => consensus(exec),
        Suite::Prox => Ok(prox()),
        Suite::All => {
            let mut out = lemma1(exec)?;
            out.extend(lemma3()?);
            out.extend(consensus(exec)?);
            out.extend(prox());
            Ok(out)
        }
    }
}

/// The supported `(g, Q)` pairs on dimension `d`.
pub fn supported_terms(d: usize) -> Vec<(&'static str, CompositeTerm)> {
    let boxed = || Domain::uniform_box(-0.5, 0.8, d);
    let ball = Domain::Ball {
        center: vec![0.1; d],
        radius: 0.7,
    };
    let l1 = Regularizer::L1 { weight: 0.3 };
    let en = Regularizer::ElasticNet { l1: 0.2, l2: 0.5 };
    [
        ("zero_all", Regularizer::Zero, Domain::AllSpace),
        ("zero_box", Regularizer::Zero, boxed()),
        ("zero_ball", Regularizer::Zero, ball),
        ("l1_all", l1.clone(), Domain::AllSpace),
        ("l1_box", l1, boxed()),
        ("elastic_all", en, Domain::AllSpace),
    ]
    .into_iter()
    .map(|(n, r, q)| (n, CompositeTerm::new(r, q).expect("supported pair")))
    .collect()
}

/// Ten seeded quadratic ensembles, 1000 draws each, cycling through the
/// supported composite terms.
fn lemma1(exec: Exec) -> Result<Vec<CheckLine>> {
    let mut out = Vec::new();
    for e in 0..10u64 {
        let (m, d) = (3 + e as usize % 5, 2 + e as usize % 4);
        let kappa = [2.0, 10.0, 50.0, 200.0][e as usize % 4];
        let h = [1.0, 5.0, 30.0][e as usize % 3];
        let ens = generate_quadratic_ensemble(&QuadraticSpec::new(100 + e, m, d, kappa).heterogeneity(h))?;
        let terms = supported_terms(d);
        let (name, term) = &terms[e as usize % terms.len()];
        let s = sandwich_draws(&ens, term, 1000 + e, 1000, exec)?;
        out.push(CheckLine::new(
            format!("lemma1_lower:ensemble{e}:{name}"),
            s.worst_lower_draw,
            s.min_lower + SANDWICH_TOL,
        ));
        out.push(CheckLine::new(
            format!("lemma1_upper:ensemble{e}:{name}"),
            s.worst_upper_draw,
            s.min_upper + SANDWICH_TOL,
        ));
    }
    Ok(out)
}

pub const LEMMA3_PAIRS: [(f64, f64); 4] = [(1.0, 1.0), (1.0, 0.1), (1.0, 0.01), (10.0, 0.1)];

fn lemma3() -> Result<Vec<CheckLine>> {
    let mut out = Vec::new();
    for (l, mu) in LEMMA3_PAIRS {
        let s = CoefficientSchedule::with_len(l, mu, 2000)?;
        match check_coefficient_bounds(&s, 2000) {
            Ok(r) => {
                out.push(CheckLine::new(format!("lemma3_growth:L={l}:mu={mu}"), r.growth_at, r.growth_margin + LEMMA3_TOL));
                out.push(CheckLine::new(format!("lemma3_ratio:L={l}:mu={mu}"), r.ratio_at, r.ratio_margin + LEMMA3_TOL));
            }
            Err(crate::Error::BoundViolation { bound, n, margin }) => {
                out.push(CheckLine::new(format!("lemma3:{bound}:L={l}:mu={mu}"), n, margin));
            }
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Ring with random drops on 20 nodes; 100 random vectors, each mixed for
/// every `T` in `1..=50` on consecutive rounds of the schedule.
fn consensus(exec: Exec) -> Result<Vec<CheckLine>> {
    let mut cfg = TopologyConfig::new(20, Topology::Ring);
    cfg.p_drop = 0.3;
    cfg.seed = 7;
    let mut schedule = MixingSchedule::generate(&cfg)?;
    let chi = schedule.certify_all()?;
    let rho = 1.0 - 1.0 / chi;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = vec![f64::INFINITY; 51];
    for _ in 0..100 {
        let data = (0..20 * 3).map(|_| rng.sample(StandardNormal)).collect();
        let v = StackedVector::from_flat(20, 3, data)?;
        let init = consensus_error(&v);
        for t in 1..=50 {
            let (w, _) = schedule.consensus(&v, t, exec)?;
            let margin = rho.powi(t as i32) * init + CONSENSUS_TOL - consensus_error(&w);
            worst[t] = worst[t].min(margin);
        }
    }
    let mut out = vec![CheckLine::new(format!("consensus_chi:chi={chi:.6}"), schedule.period(), 1.0 - rho)];
    out.extend((1..=50).map(|t| CheckLine::new("consensus_contraction", t, worst[t])));
    Ok(out)
}

/// Coordinatewise minimizer of `w1|t| + w2 t²/2 + (t − x)²/(2γ)` over
/// `[lo, hi]`, by bisection on the monotone right derivative.
pub fn scalar_prox_oracle(x: f64, gamma: f64, w1: f64, w2: f64, lo: f64, hi: f64) -> f64 {
    let right_deriv = |t: f64| w1 * if t >= 0.0 { 1.0 } else { -1.0 } + w2 * t + (t - x) / gamma;
    let span = x.abs() + gamma * w1 + 1.0;
    let (mut a, mut b) = (lo.max(-span), hi.min(span));
    if right_deriv(a) >= 0.0 {
        return a;
    }
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if right_deriv(mid) >= 0.0 {
            b = mid;
        } else {
            a = mid;
        }
    }
    b
}

/// Projection onto a ball by bisection on the multiplier `ν` in
/// `y = c + (x − c)/(1 + ν)`.
pub fn ball_projection_oracle(x: &[f64], center: &[f64], radius: f64) -> Vec<f64> {
    let dist = x.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum::<f64>().sqrt();
    let nu = if dist <= radius {
        0.0
    } else {
        let (mut a, mut b) = (0.0, dist / radius.max(f64::MIN_POSITIVE));
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if dist / (1.0 + mid) > radius {
                a = mid;
            } else {
                b = mid;
            }
        }
        b
    };
    x.iter().zip(center).map(|(a, c)| c + (a - c) / (1.0 + nu)).collect()
}

/// The oracle prox for any supported term.
pub fn prox_oracle(term: &CompositeTerm, gamma: f64, x: &[f64]) -> Vec<f64> {
    let (w1, w2) = match *term.regularizer() {
        Regularizer::Zero => (0.0, 0.0),
        Regularizer::L1 { weight } => (weight, 0.0),
        Regularizer::ElasticNet { l1, l2 } => (l1, l2),
    };
    match term.domain() {
        Domain::Ball { center, radius } => ball_projection_oracle(x, center, *radius),
        Domain::AllSpace => x
            .iter()
            .map(|&v| scalar_prox_oracle(v, gamma, w1, w2, f64::NEG_INFINITY, f64::INFINITY))
            .collect(),
        Domain::Box { lo, hi } => x
            .iter()
            .enumerate()
            .map(|(j, &v)| scalar_prox_oracle(v, gamma, w1, w2, lo[j], hi[j]))
            .collect(),
    }
}

fn prox() -> Vec<CheckLine> {
    let d = 3;
    let mut out = Vec::new();
    for (idx, (name, term)) in supported_terms(d).into_iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(200 + idx as u64);
        let mut worst = 0.0f64;
        let mut worst_at = 0;
        for i in 0..1000 {
            let x: Vec<f64> = (0..d).map(|_| 2.0 * rng.sample::<f64, _>(StandardNormal)).collect();
            let gamma = 10f64.powf(rng.random_range(-2.0..1.0));
            let got = term.prox_point(gamma, &x);
            let want = prox_oracle(&term, gamma, &x);
            let err = got.iter().zip(&want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            if err > worst {
                worst = err;
                worst_at = i;
            }
        }
        out.push(CheckLine::new(format!("prox_{name}"), worst_at, PROX_TOL - worst));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_oracle_cases() {
        assert!((scalar_prox_oracle(3.0, 1.0, 1.0, 0.0, f64::NEG_INFINITY, f64::INFINITY) - 2.0).abs() < 1e-12);
        assert!(scalar_prox_oracle(0.5, 1.0, 1.0, 0.0, f64::NEG_INFINITY, f64::INFINITY).abs() < 1e-12);
        assert!((scalar_prox_oracle(3.0, 1.0, 1.0, 0.0, -1.0, 1.5) - 1.5).abs() < 1e-12);
        assert!((scalar_prox_oracle(-3.0, 1.0, 0.0, 0.0, 0.5, 1.0) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn ball_oracle_cases() {
        let y = ball_projection_oracle(&[3.0, 4.0], &[0.0, 0.0], 1.0);
        assert!((y[0] - 0.6).abs() < 1e-12 && (y[1] - 0.8).abs() < 1e-12);
        assert_eq!(ball_projection_oracle(&[0.1, 0.1], &[0.0, 0.0], 1.0), vec![0.1, 0.1]);
    }

    #[test]
    fn suites_pass() {
        for suite in [Suite::Lemma3, Suite::Prox] {
            let lines = run_suite(suite, Exec::default()).unwrap();
            assert!(lines.iter().all(CheckLine::pass), "{lines:?}");
        }
    }
}
