use std::f64::consts::PI;

use avgcons_core::rules::{lift, CubicPerturbed, Identity, LoadBalancing, MaxDegree, Metropolis};
use avgcons_core::sim::default_horizon;
use avgcons_core::spectral::{is_irreducible, DEFAULT_PROBE_STEP};
use avgcons_core::{
    composed_jacobian_residual, consensus_fixed_point_check, convergence_time, eigen_decompose,
    eigenvalue_interval_check, make_sequence, matrix_of, numerical_jacobian,
    spectral_predicted_time, stochasticity_check, EpsilonPolicy, GeneratorParams, Graph,
    LinearizationMatrix, Matrix, SequenceKind, StepRule, WeightPolicy,
};
use approx::assert_relative_eq;

fn metropolis() -> Metropolis<f64> {
    Metropolis { policy: WeightPolicy::Boundary }
}

fn max_degree() -> MaxDegree<f64> {
    MaxDegree { policy: EpsilonPolicy::Boundary }
}

fn connected_fixtures(max_n: usize) -> Vec<Graph> {
    let mut out = vec![];
    for n in [2, 3, 4, 7, 16, 33, 64, 128].into_iter().filter(|&n| n <= max_n) {
        out.push(Graph::line(n).unwrap());
        out.push(Graph::ring(n).unwrap());
        out.push(Graph::star(n).unwrap());
        out.push(Graph::complete(n).unwrap());
        let random = make_sequence(SequenceKind::SeededRandomSpanning, n, &GeneratorParams { extra_edge_prob: 0.05, ..Default::default() }, n as u64).unwrap();
        out.push(random.graph_at(0).into_owned());
    }
    out
}

/// Subdominant eigenvalue of `I - L/3` on the path: `1 - (2/3)(1 - cos(pi/n))`.
fn path_lambda2(n: usize) -> f64 {
    1.0 - (2.0 / 3.0) * (1.0 - (PI / n as f64).cos())
}

#[test]
fn line_eigenvalue_matches_path_spectrum() {
    for n in [3, 5, 16, 40, 128] {
        let a = matrix_of(&metropolis(), &Graph::line(n).unwrap()).unwrap();
        let report = eigen_decompose(&a).unwrap();
        assert_relative_eq!(report.lambda2.unwrap(), path_lambda2(n), epsilon = 1e-12);
        // the whole spectrum, not just the second value
        let mut expected: Vec<f64> = (0..n)
            .map(|k| 1.0 - (2.0 / 3.0) * (1.0 - (PI * k as f64 / n as f64).cos()))
            .collect();
        expected.sort_by(|p, q| q.abs().total_cmp(&p.abs()).then(q.total_cmp(p)));
        for (z, e) in report.eigenvalues.iter().zip(expected) {
            assert_relative_eq!(z.re, e, epsilon = 1e-11);
            assert_eq!(z.im, 0.0);
        }
        assert!(report.eigen_residual.unwrap() <= 1e-8);
    }
    let sixteen = eigen_decompose(&matrix_of(&metropolis(), &Graph::line(16).unwrap()).unwrap()).unwrap();
    assert!(eigenvalue_interval_check(&sixteen, 16));
}

#[test]
fn interval_holds_for_every_line_length() {
    for n in 3..=128 {
        for a in [
            matrix_of(&metropolis(), &Graph::line(n).unwrap()).unwrap(),
            matrix_of(&max_degree(), &Graph::line(n).unwrap()).unwrap(),
        ] {
            let report = eigen_decompose(&a).unwrap();
            assert!(eigenvalue_interval_check(&report, n), "n = {n}");
            let v = report.v.as_ref().unwrap();
            let av = a.matrix.mul_vec(v);
            let l = report.lambda2.unwrap();
            let res: f64 = av.iter().zip(v).map(|(p, q)| (p - l * q).powi(2)).sum::<f64>().sqrt();
            assert!(res <= 1e-8);
        }
    }
}

#[test]
fn stochastic_irreducible_with_unit_radius() {
    for g in connected_fixtures(128) {
        for rule in [&metropolis() as &dyn StepRule<f64>, &max_degree()] {
            let a = matrix_of(rule, &g).unwrap();
            let (r, c) = stochasticity_check(&a);
            assert!(r <= 1e-12 && c <= 1e-12, "{} n={} residuals {r} {c}", rule.name(), g.n());
            assert!(is_irreducible(&a));
            let report = eigen_decompose(&a).unwrap();
            assert!((report.spectral_radius() - 1.0).abs() <= 1e-8);
        }
    }
}

#[test]
fn numerical_jacobian_matches_exact_matrices() {
    for g in connected_fixtures(64) {
        for rule in [&metropolis() as &dyn StepRule<f64>, &max_degree()] {
            let exact = matrix_of(rule, &g).unwrap();
            let map = |x: &[f64]| rule.step(&g, x);
            let num = numerical_jacobian(map, &vec![0.0; g.n()], DEFAULT_PROBE_STEP).unwrap();
            assert!(num.matrix.sub(&exact.matrix).frobenius_norm() <= 1e-6);
        }
        let cubic = lift(CubicPerturbed::new(0.1));
        let num = numerical_jacobian(|x: &[f64]| cubic.step(&g, x), &vec![0.0; g.n()], DEFAULT_PROBE_STEP).unwrap();
        let exact = matrix_of(&metropolis(), &g).unwrap();
        assert!(num.matrix.sub(&exact.matrix).frobenius_norm() <= 1e-6);
    }
}

#[test]
fn linear_maps_compose_exactly() {
    let a = matrix_of(&metropolis(), &Graph::ring(9).unwrap()).unwrap();
    let map = |x: &[f64]| Ok(a.matrix.mul_vec(x));
    for k in [1, 2, 5, 10] {
        assert!(composed_jacobian_residual(map, &a, k, 1e-5).unwrap() <= 1e-8);
    }
    let id = LinearizationMatrix::exact(Matrix::<f64>::identity(5));
    let r = composed_jacobian_residual(|x: &[f64]| Ok(x.to_vec()), &id, 10, 1e-5).unwrap();
    assert!(r <= 1e-10);
}

#[test]
fn cubic_plugin_composes_like_its_linear_part() {
    for g in [Graph::line(6).unwrap(), Graph::star(5).unwrap(), Graph::complete(4).unwrap()] {
        let rule = lift(CubicPerturbed::new(0.1));
        let a = matrix_of(&metropolis(), &g).unwrap();
        for k in [1, 2, 5, 10] {
            let r = composed_jacobian_residual(|x: &[f64]| rule.step(&g, x), &a, k, 1e-5).unwrap();
            assert!(r <= 1e-5, "k = {k}: {r}");
        }
    }
}

#[test]
fn fixed_point_checks() {
    let g = Graph::ring(5).unwrap();
    let met = metropolis();
    assert!(consensus_fixed_point_check(|x: &[f64]| met.step(&g, x), 5, &[-10.0, 0.0, 3.5]).unwrap());
    let lb = LoadBalancing::default();
    assert!(consensus_fixed_point_check(|x: &[f64]| StepRule::<f64>::step(&lb, &g, x), 5, &[0.0, 1e6]).unwrap());
    assert!(!consensus_fixed_point_check(|x: &[f64]| Ok(x.iter().map(|v| v + 1.0).collect()), 5, &[0.0]).unwrap());
}

#[test]
fn identity_rule_reports_no_subdominant_eigenvalue() {
    let a = matrix_of::<f64, _>(&lift(Identity), &Graph::line(6).unwrap()).unwrap();
    let report = eigen_decompose(&a).unwrap();
    assert_eq!(report.lambda2, None);
    assert!(!eigenvalue_interval_check(&report, 6));
}

#[test]
fn prediction_agrees_with_simulation() {
    for n in 3..=32 {
        let s = make_sequence(SequenceKind::ConstantLine, n, &GeneratorParams::default(), 0).unwrap();
        for rule in [&metropolis() as &dyn StepRule<f64>, &max_degree()] {
            let report = eigen_decompose(&matrix_of(rule, s.constant_graph().unwrap()).unwrap()).unwrap();
            for eps in [0.25, 0.01] {
                let predicted = spectral_predicted_time(report.lambda2.unwrap(), eps).unwrap();
                let measured = convergence_time(rule, &s, report.v.as_ref().unwrap(), eps, default_horizon(n, 1, eps))
                    .unwrap()
                    .t
                    .unwrap();
                assert_eq!(predicted, measured, "n={n} eps={eps}");
            }
        }
    }
}
