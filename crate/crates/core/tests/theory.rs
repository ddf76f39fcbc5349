use decentprox::network::{MixingSchedule, Topology, TopologyConfig};
use decentprox::objectives::{generate_quadratic_ensemble, NodeObjective, ObjectiveEnsemble, QuadraticSpec};
use decentprox::prox::{CompositeTerm, Domain, Regularizer};
use decentprox::solver::{run, Problem, RunOptions, Stop};
use decentprox::theory::{
    check_beta_recurrence, check_sandwich, delta_total, eta, model_values, sandwich_draws, ComplexityEnvelope,
};
use decentprox::{Exec, StackedVector};
use proptest::prelude::*;

fn ensemble(seed: u64, m: usize, d: usize) -> ObjectiveEnsemble {
    generate_quadratic_ensemble(&QuadraticSpec::new(seed, m, d, 15.0).heterogeneity(7.0)).unwrap()
}

/// Term-by-term evaluation straight from the quadratic coefficients.
fn naive_model(ens: &ObjectiveEnsemble, term: &CompositeTerm, y: &[f64], z: &[f64], x: &StackedVector) -> (f64, f64, f64) {
    let c = ens.constants();
    let m = ens.m() as f64;
    let d = ens.d();
    let (mut f, mut psi, mut spread) = (0.0, 0.0, 0.0);
    for (i, node) in ens.nodes().iter().enumerate() {
        let NodeObjective::Quadratic(q) = node else { unreachable!() };
        let (a, b) = (q.matrix(), q.linear());
        let xi = x.block(i);
        let mut value = 0.0;
        let mut grad = vec![0.0; d];
        for r in 0..d {
            for s in 0..d {
                value += 0.5 * xi[r] * a[r * d + s] * xi[s];
                grad[r] += a[r * d + s] * xi[s];
            }
            value -= b[r] * xi[r];
            grad[r] -= b[r];
        }
        let mut lin_y = 0.0;
        let mut lin_z = 0.0;
        let mut r2 = 0.0;
        for j in 0..d {
            lin_y += grad[j] * (y[j] - xi[j]);
            lin_z += grad[j] * (z[j] - y[j]);
            r2 += (y[j] - xi[j]) * (y[j] - xi[j]);
        }
        f += value + lin_y + 0.5 * (c.mu_local - 2.0 * c.l_local * c.l_local / c.mu_global) * r2;
        psi += lin_z + term.value(z) - term.value(xi);
        spread += r2;
    }
    let eta = (c.l_local * c.l_local / c.l_global + 2.0 * c.l_local * c.l_local / c.mu_global + c.l_local - c.mu_local)
        / (2.0 * m);
    (f / m, psi / m, eta * spread)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn model_values_match_naive_sum(
        seed in 0u64..1000,
        y in prop::collection::vec(-3.0f64..3.0, 3),
        z in prop::collection::vec(-3.0f64..3.0, 3),
        x in prop::collection::vec(-5.0f64..5.0, 12),
    ) {
        let ens = ensemble(seed, 4, 3);
        let term = CompositeTerm::new(Regularizer::L1 { weight: 0.5 }, Domain::AllSpace).unwrap();
        let xs = StackedVector::from_flat(4, 3, x).unwrap();
        let got = model_values(&ens, &term, &y, &z, &xs).unwrap();
        let (f, psi, delta) = naive_model(&ens, &term, &y, &z, &xs);
        let scale = 1.0 + f.abs() + psi.abs() + delta.abs();
        prop_assert!((got.f_delta - f).abs() <= 1e-12 * scale);
        prop_assert!((got.psi_delta - psi).abs() <= 1e-12 * scale);
        prop_assert!((got.delta - delta).abs() <= 1e-12 * scale);
    }

    #[test]
    fn sandwich_holds_on_arbitrary_points(
        seed in 0u64..1000,
        y in prop::collection::vec(-2.0f64..2.0, 4),
        z in prop::collection::vec(-2.0f64..2.0, 4),
        x in prop::collection::vec(-20.0f64..20.0, 20),
    ) {
        let ens = ensemble(seed, 5, 4);
        let term = CompositeTerm::new(Regularizer::ElasticNet { l1: 0.3, l2: 0.2 }, Domain::AllSpace).unwrap();
        let xs = StackedVector::from_flat(5, 4, x).unwrap();
        let s = check_sandwich(&ens, &term, &y, &z, &xs).unwrap();
        prop_assert!(s.lower >= -1e-8 && s.upper >= -1e-8, "{:?}", s);
    }
}

#[test]
fn model_dimension_mismatch() {
    let ens = ensemble(1, 3, 2);
    let x = StackedVector::zeros(3, 2);
    assert!(model_values(&ens, &CompositeTerm::zero(), &[0.0; 3], &[0.0; 2], &x).is_err());
    assert!(model_values(&ens, &CompositeTerm::zero(), &[0.0; 2], &[0.0; 2], &StackedVector::zeros(2, 2)).is_err());
}

#[test]
fn adversarial_far_nodes() {
    let ens = ensemble(5, 6, 3);
    let term = CompositeTerm::new(Regularizer::L1 { weight: 1.0 }, Domain::uniform_box(-1.0, 1.0, 3)).unwrap();
    let s = sandwich_draws(&ens, &term, 77, 3000, Exec::Sequential).unwrap();
    assert!(s.passes(1e-8), "{s:?}");
}

fn run_on(topology: Topology, p_drop: f64, rounds: usize, n: usize) -> (Problem, decentprox::solver::RunReport) {
    let problem = Problem::new(
        ensemble(9, 8, 4),
        CompositeTerm::new(Regularizer::L1 { weight: 0.2 }, Domain::AllSpace).unwrap(),
    )
    .unwrap();
    let mut cfg = TopologyConfig::new(8, topology);
    cfg.p_drop = p_drop;
    let mut s = MixingSchedule::generate(&cfg).unwrap();
    s.certify_all().unwrap();
    let report = run(
        &problem,
        &mut s,
        &RunOptions {
            rounds,
            stop: Stop::Iterations(n),
            x0: vec![1.0; 4],
            reference: None,
            exec: Exec::Sequential,
        },
    )
    .unwrap();
    (problem, report)
}

#[test]
fn delta_total_trivial_cases() {
    let (problem, report) = run_on(Topology::Complete, 0.0, 1, 60);
    let e = eta(&problem.ensemble.constants(), problem.m());
    assert!(delta_total(&report, e) <= 1e-16);
    let (_, one) = run_on(Topology::Ring, 0.2, 2, 1);
    assert_eq!(delta_total(&one, e), 0.0);
}

#[test]
fn recurrence_with_few_rounds() {
    for rounds in [1, 2, 5, 20] {
        let (_, report) = run_on(Topology::Ring, 0.3, rounds, 150);
        let check = check_beta_recurrence(&report, report.lambda.unwrap());
        assert!(check.min_slack >= -1e-8, "T = {rounds}: {check:?}");
    }
}

#[test]
fn envelope_lambda_range() {
    let (_, report) = run_on(Topology::Path, 0.0, 3, 1);
    let lambda = report.lambda.unwrap();
    assert!((0.0..1.0).contains(&lambda));
    let env = ComplexityEnvelope::new(2.0, 0.5, lambda, 1.0);
    assert!(env.a > 0.0 && env.b > 0.0 && env.c(10) > 0.0);
}
