use avgcons_core::rules::{lift, Identity, LoadBalancing, MaxDegree, Metropolis};
use avgcons_core::sim::{default_horizon, random_init};
use avgcons_core::{
    convergence_time, make_sequence, p_norm_distance, run, sample_variance, validate_b_connectivity,
    worst_case_convergence_time, EpsilonPolicy, GeneratorParams, Graph, GraphSequence,
    InitStrategy, NormOrder, SequenceKind, StepRule, WeightPolicy,
};
use approx::assert_relative_eq;
use proptest::prelude::*;

fn seq(kind: SequenceKind, n: usize) -> GraphSequence {
    make_sequence(kind, n, &GeneratorParams::default(), 9).unwrap()
}

fn named() -> Vec<Box<dyn StepRule<f64>>> {
    vec![
        Box::new(MaxDegree { policy: EpsilonPolicy::Boundary }),
        Box::new(Metropolis { policy: WeightPolicy::Boundary }),
        Box::new(LoadBalancing::default()),
    ]
}

fn sandwich_holds(x: &[f64], m: f64) -> bool {
    let inf = p_norm_distance(x, m, NormOrder::Infinity).unwrap();
    let two = p_norm_distance(x, m, NormOrder::P(2.0)).unwrap();
    let root_n = (x.len() as f64).sqrt();
    inf <= two && two <= root_n * inf
}

proptest! {
    #[test]
    fn norm_sandwich_is_exact(x in proptest::collection::vec(-1e6f64..1e6, 1..40), m in -10f64..10.0) {
        prop_assert!(sandwich_holds(&x, m));
    }

    #[test]
    fn two_norm_squared_is_the_variance(x in proptest::collection::vec(-1e3f64..1e3, 1..40)) {
        let m = x.iter().sum::<f64>() / x.len() as f64;
        let two = p_norm_distance(&x, m, NormOrder::P(2.0)).unwrap();
        let v = sample_variance(&x, Some(m));
        prop_assert!((two * two - v).abs() <= 1e-9 * (1.0 + v));
    }
}

#[test]
fn trajectories_keep_mean_and_sandwich() {
    let sequences = [
        seq(SequenceKind::ConstantLine, 12),
        seq(SequenceKind::ConstantStar, 9),
        seq(SequenceKind::RoundRobinSingleEdge, 7),
        seq(SequenceKind::SeededRandomSpanning, 10),
    ];
    for s in &sequences {
        for rule in named() {
            for seed in 0..3 {
                let x0: Vec<f64> = random_init::<f64>(s.n(), seed, 0).iter().map(|v| 50.0 + 10.0 * v).collect();
                let traj = run(rule.as_ref(), s, &x0, 300).unwrap();
                let m0 = traj.reference_mean();
                for (_, state) in traj.stored_states() {
                    let m = state.iter().sum::<f64>() / state.len() as f64;
                    assert!((m - m0).abs() <= 1e-9 * (1.0 + m0.abs()));
                    assert!(sandwich_holds(state, m0));
                }
                if rule.variance_monotone() {
                    // rounding floor: values sit near 50, so residuals below ~1e-14 are noise
                    assert!(traj.variance().windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12) + 1e-24));
                }
            }
        }
    }
}

#[test]
fn runs_are_reproducible_bit_for_bit() {
    let s = seq(SequenceKind::SeededRandomSpanning, 15);
    let x0 = random_init::<f64>(15, 77, 3);
    for rule in named() {
        let a = run(rule.as_ref(), &s, &x0, 200).unwrap().with_seed(77);
        let b = run(rule.as_ref(), &s.clone(), &x0, 200).unwrap().with_seed(77);
        assert_eq!(a, b);
    }
}

#[test]
fn consensus_start_stays_put() {
    for rule in named() {
        let traj = run(rule.as_ref(), &seq(SequenceKind::ConstantRing, 6), &[7.0; 6], 100).unwrap();
        assert!(traj.stored_states().all(|(_, s)| s == [7.0; 6]));
    }
}

#[test]
fn dimension_mismatch_is_rejected() {
    let rule = Metropolis::<f64> { policy: WeightPolicy::Boundary };
    assert!(run(&rule, &seq(SequenceKind::ConstantLine, 4), &[0.0; 3], 1).is_err());
}

#[test]
fn eigenvector_decay_matches_closed_form() {
    // A v = (2/3) v for v = (1, 0, -1), so V(t) = (4/9)^t V(0)
    let rule = Metropolis::<f64> { policy: WeightPolicy::Boundary };
    let traj = run(&rule, &seq(SequenceKind::ConstantLine, 3), &[1.0, 0.0, -1.0], 8).unwrap();
    for (t, v) in traj.variance().iter().enumerate() {
        assert_relative_eq!(*v, 2.0 * (4.0f64 / 9.0).powi(t as i32), max_relative = 1e-13);
    }
    let closed_form = (0..).find(|&k| (4.0f64 / 9.0).powi(k) <= 0.01).unwrap();
    assert_eq!(closed_form, 6);
    let report = convergence_time(&rule, &seq(SequenceKind::ConstantLine, 3), &[1.0, 0.0, -1.0], 0.01, 1000).unwrap();
    assert_eq!(report.t, Some(closed_form as u64));
    assert_relative_eq!(report.v_at_t.unwrap(), 2.0 * (4.0f64 / 9.0).powi(6), max_relative = 1e-12);
}

#[test]
fn report_invariant_holds_on_observed_horizon() {
    // load balancing carries no monotone flag, so the full horizon is observed
    let s = seq(SequenceKind::ConstantLine, 10);
    let rule = LoadBalancing::default();
    for seed in 0..5 {
        let x0 = random_init::<f64>(10, seed, 0);
        let report = convergence_time(&rule, &s, &x0, 0.05, 3000).unwrap();
        let traj = run(&rule, &s, &x0, 3000).unwrap();
        let t = report.t.unwrap();
        let thr = 0.05 * report.v0;
        assert!(traj.variance()[t as usize..].iter().all(|&v| v <= thr));
        if t > 0 {
            assert!(traj.variance()[t as usize - 1] > thr);
        }
        assert_eq!(report.rounds_simulated, 3000);
    }
}

#[test]
fn spectral_start_is_the_slowest() {
    let s = seq(SequenceKind::ConstantLine, 16);
    let rule = Metropolis::<f64> { policy: WeightPolicy::Boundary };
    let horizon = default_horizon(16, 1, 0.01);
    let spectral = worst_case_convergence_time(&rule, &s, 0.01, &InitStrategy::Spectral, horizon)
        .unwrap()
        .report
        .t
        .unwrap();
    for trial in 0..100 {
        let x0 = random_init::<f64>(16, 2024, trial);
        let t = convergence_time(&rule, &s, &x0, 0.01, horizon).unwrap().t.unwrap();
        assert!(t <= spectral, "trial {trial}: {t} > {spectral}");
    }
}

#[test]
fn named_rules_converge_on_b_connected_fixtures() {
    let alternating = |n: usize| {
        let evens: Vec<(usize, usize)> = (1..n).step_by(2).map(|i| (i, i + 1)).collect();
        let odds: Vec<(usize, usize)> = (2..n).step_by(2).map(|i| (i, i + 1)).collect();
        GraphSequence::periodic(vec![Graph::new(n, evens).unwrap(), Graph::new(n, odds).unwrap()])
            .unwrap()
    };
    let fixtures: Vec<(GraphSequence, u64)> = vec![
        (seq(SequenceKind::ConstantLine, 4), 1),
        (seq(SequenceKind::ConstantLine, 24), 1),
        (seq(SequenceKind::ConstantRing, 64), 1),
        (seq(SequenceKind::ConstantStar, 64), 1),
        (seq(SequenceKind::ConstantComplete, 16), 1),
        (seq(SequenceKind::SeededRandomSpanning, 32), 1),
        (alternating(12), 2),
        (seq(SequenceKind::RoundRobinSingleEdge, 5), 4),
        (seq(SequenceKind::RoundRobinSingleEdge, 9), 8),
    ];
    for (s, b) in &fixtures {
        assert!(validate_b_connectivity(s, *b, 20 * b).unwrap(), "{}", s.descriptor());
        let n = s.n() as u64;
        let horizon = 200 * n * n * b;
        for rule in named() {
            let x0 = random_init::<f64>(s.n(), 1, 0);
            let report = convergence_time(rule.as_ref(), s, &x0, 1e-9, horizon).unwrap();
            assert!(report.reached(), "{} on {} did not converge", rule.name(), s.descriptor());
        }
    }
}

#[test]
fn identity_plugin_keeps_variance_constant() {
    let traj = run(&lift(Identity), &seq(SequenceKind::ConstantLine, 5), &[0.0, 1.0, 0.0, 3.0, 1.0], 20).unwrap();
    let v0 = traj.variance()[0];
    assert!(traj.variance().iter().all(|&v| v == v0));
}
