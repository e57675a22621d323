use proptest::prelude::*;

use linexp3::environment::{AdversaryKind, AdversarySpec, ContextDistribution, Environment};
use linexp3::evaluation::{
    expected_regret_exact, regret_grid, run_episode, slope_fit, Algorithm, ComparatorPolicy, LearnerConfig,
    RegretAccumulator, RegretTrace,
};
use linexp3::learner::{draw_action_with, mix_exponential_weights, MgrMode};
use linexp3::mgr::{mgr_fast, mgr_naive, ScriptedDraws};
use linexp3::numkit::{matrix_power_apply, spd_factorize, spd_inverse, Matrix, SymMatrix};
use linexp3::{MgrConfig, Vector};

fn vec_in_ball(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, dim).prop_map(|v| {
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1.0 {
            v.iter().map(|x| x / n).collect()
        } else {
            v
        }
    })
}

fn square(dim: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-1.0f64..1.0, dim), dim)
}

fn spd(rows: &[Vec<f64>], ridge: f64) -> SymMatrix {
    let n = rows.len();
    let mut m = SymMatrix::diagonal(&vec![ridge; n]);
    for r in rows {
        m.add_outer(1.0, r);
    }
    m
}

fn small_environment(points: Vec<Vec<f64>>, weights: Vec<f64>, theta: Vec<Vec<f64>>, horizon: usize) -> Environment {
    let total: f64 = weights.iter().sum();
    let mut support = vec![Vector::basis(2, 0), Vector::basis(2, 1)];
    support.extend(points.into_iter().map(|p| Vector::new(p).unwrap()));
    let probs = weights.iter().map(|w| w / total).collect();
    let dist = ContextDistribution::finite_support(support, probs).unwrap();
    let theta = theta.into_iter().map(|t| Vector::new(t).unwrap()).collect();
    let adv = AdversarySpec::new(AdversaryKind::Constant { theta }, None, horizon).unwrap();
    Environment::new(dist, adv).unwrap()
}

proptest! {
    #[test]
    fn spd_inverse_is_inverse(rows in (1usize..7).prop_flat_map(square)) {
        let m = spd(&rows, 0.1);
        let inv = spd_inverse(&spd_factorize(&m).unwrap());
        let product = m.as_matrix().mul_mat(inv.as_matrix());
        prop_assert!(product.max_abs_diff(&Matrix::identity(rows.len())) < 1e-9);
        prop_assert!(inv.is_symmetric());
    }

    #[test]
    fn lambda_min_matches_2x2_closed_form(a in 0.5f64..3.0, c in 0.5f64..3.0, b in -0.4f64..0.4) {
        let m = SymMatrix::from_rows(&[vec![a, b], vec![b, c]]).unwrap();
        let expected = (a + c) / 2.0 - (((a - c) / 2.0).powi(2) + b * b).sqrt();
        let cert = spd_factorize(&m).unwrap();
        prop_assert!((cert.lambda_min() - expected).abs() < 1e-12);
    }

    #[test]
    fn matrix_power_is_additive(
        rows in square(3),
        v in vec_in_ball(3),
        p in 0usize..6,
        q in 0usize..6,
    ) {
        let m = Matrix::from_rows(&rows).unwrap().scaled(0.5);
        let joint = matrix_power_apply(&m, p + q, &v);
        let split = matrix_power_apply(&m, p, &matrix_power_apply(&m, q, &v));
        prop_assert!(joint.max_abs_diff(&split) < 1e-12);
    }

    #[test]
    fn policy_is_a_distribution_with_floor(
        scores in prop::collection::vec(-1e3f64..1e3, 1..9),
        eta in 0.0f64..5.0,
        gamma in 0.0f64..=1.0,
    ) {
        let k = scores.len() as f64;
        let mut p = scores.clone();
        mix_exponential_weights(&mut p, eta, gamma);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(p.iter().all(|v| v.is_finite() && *v >= gamma / k - 1e-12));
    }

    #[test]
    fn drawn_action_has_positive_mass(
        weights in prop::collection::vec(0.0f64..1.0, 1..6),
        u in 0.0f64..1.0,
    ) {
        let total: f64 = weights.iter().sum();
        prop_assume!(total > 1e-6);
        let probs: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let a = draw_action_with(&probs, u);
        prop_assert!(probs[a] > 0.0);
    }

    #[test]
    fn fast_mgr_matches_naive(
        dim in 1usize..6,
        m in 0usize..40,
        beta in 0.05f64..1.0,
        seed in any::<u64>(),
    ) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let unit = |rng: &mut rand_chacha::ChaCha8Rng| {
            let v: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1.0);
            Vector::new(v.iter().map(|x| x / n).collect()).unwrap()
        };
        let draws: Vec<(Vector, usize)> = (0..m).map(|_| (unit(&mut rng), rng.random_range(0..2))).collect();
        let x = unit(&mut rng);
        let cfg = MgrConfig::new(beta, m).unwrap();
        for a in 0..2 {
            let naive = mgr_naive(&cfg, &mut ScriptedDraws::with_dim(dim, draws.clone()), a).mul_vec(&x);
            let fast = mgr_fast(&cfg, &mut ScriptedDraws::with_dim(dim, draws.clone()), a, &x);
            prop_assert!(naive.max_abs_diff(&fast) < 1e-10);
        }
    }

    #[test]
    fn comparator_is_argmin(
        theta in prop::collection::vec(vec_in_ball(2), 1..5),
        x in vec_in_ball(2),
        horizon in 1usize..20,
    ) {
        let thetas: Vec<Vector> = theta.iter().map(|t| Vector::new(t.clone()).unwrap()).collect();
        let adv = AdversarySpec::new(AdversaryKind::Constant { theta: thetas }, None, horizon).unwrap();
        let comparator = ComparatorPolicy::new(&adv, horizon);
        let chosen = comparator.decide(&x);
        let value = |a: usize| x.iter().zip(&theta[a]).map(|(p, q)| p * q).sum::<f64>() * horizon as f64;
        for a in 0..theta.len() {
            prop_assert!(value(chosen) <= value(a) + 1e-9);
        }
    }

    #[test]
    fn uniform_exact_regret_matches_brute_force(
        extra in prop::collection::vec(vec_in_ball(2), 0..3),
        weights in prop::collection::vec(0.1f64..1.0, 5),
        theta in prop::collection::vec(vec_in_ball(2), 1..4),
        horizon in 1usize..40,
    ) {
        let n = extra.len() + 2;
        let env = small_environment(extra, weights[..n].to_vec(), theta.clone(), horizon);
        let (config, _) = LearnerConfig::tuned(Algorithm::Uniform, &env, horizon, MgrMode::Fast).unwrap();
        let curve = expected_regret_exact(&env, &config, horizon, 3, 2).unwrap();

        let (points, probs) = env.dist.support().unwrap();
        let k = theta.len() as f64;
        let per_round: f64 = points
            .iter()
            .zip(probs)
            .map(|(x, p)| {
                let losses: Vec<f64> = theta.iter().map(|t| x.dot(t)).collect();
                let mean = losses.iter().sum::<f64>() / k;
                let best = ComparatorPolicy::new(&env.adversary, horizon).decide(x);
                p * (mean - losses[best])
            })
            .sum();
        for (i, t) in curve.grid.iter().enumerate() {
            prop_assert!((curve.mean_regret[i] - per_round * *t as f64).abs() < 1e-10);
        }
        prop_assert!(curve.stderr.iter().all(|s| s.abs() < 1e-10));
    }

    #[test]
    fn accumulator_merge_matches_sequential(
        regrets in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 4), 2..10),
        split in 0usize..10,
    ) {
        let grid = vec![1, 2, 3, 4];
        let traces: Vec<RegretTrace> = regrets
            .iter()
            .map(|r| RegretTrace::from_rounds(&grid, r.iter().map(|v| (*v, 0.0))))
            .collect();
        let split = split.min(traces.len());
        let mut all = RegretAccumulator::new(grid.clone());
        let (mut left, mut right) = (RegretAccumulator::new(grid.clone()), RegretAccumulator::new(grid.clone()));
        for (i, t) in traces.iter().enumerate() {
            all.push(t).unwrap();
            if i < split { left.push(t).unwrap() } else { right.push(t).unwrap() }
        }
        left.merge(&right).unwrap();
        let (a, b) = (all.finish(), left.finish());
        prop_assert_eq!(a.replications, b.replications);
        for i in 0..grid.len() {
            prop_assert!((a.mean_regret[i] - b.mean_regret[i]).abs() < 1e-10);
            prop_assert!((a.stderr[i] - b.stderr[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn slope_fit_recovers_power_law(c in 0.1f64..100.0, alpha in 0.1f64..1.5) {
        let points: Vec<(f64, f64)> = (10..15).map(|e| {
            let t = (1u64 << e) as f64;
            (t, c * t.powf(alpha))
        }).collect();
        prop_assert!((slope_fit(&points).unwrap() - alpha).abs() < 1e-9);
    }
}

#[test]
fn stderr_of_two_replications() {
    let grid = vec![1];
    let mut acc = RegretAccumulator::new(grid.clone());
    acc.push(&RegretTrace::from_rounds(&grid, [(8.0, 0.0)])).unwrap();
    acc.push(&RegretTrace::from_rounds(&grid, [(12.0, 0.0)])).unwrap();
    let curve = acc.finish();
    assert_eq!(curve.mean_regret, vec![10.0]);
    assert!((curve.stderr[0] - 2.0).abs() < 1e-12);
}

#[test]
fn episodes_are_deterministic() {
    let env = small_environment(vec![vec![0.6, 0.6]], vec![1.0, 1.0, 1.0], vec![vec![0.5, -0.2], vec![-0.3, 0.4]], 64);
    for algorithm in [Algorithm::RobustLinExp3, Algorithm::RealLinExp3, Algorithm::FullInfo] {
        let (config, _) = LearnerConfig::tuned(algorithm, &env, 64, MgrMode::Fast).unwrap();
        let a = run_episode(&env, &config, 64, 11, 2).unwrap();
        let b = run_episode(&env, &config, 64, 11, 2).unwrap();
        assert_eq!(a, b);
        let other = run_episode(&env, &config, 64, 11, 3).unwrap();
        assert_ne!(a.rows, other.rows);
    }
}

#[test]
fn fast_and_naive_episodes_agree() {
    let env = small_environment(vec![vec![0.6, 0.6]], vec![1.0, 1.0, 1.0], vec![vec![0.5, -0.2], vec![-0.3, 0.4]], 32);
    let (fast, _) = LearnerConfig::tuned(Algorithm::RealLinExp3, &env, 32, MgrMode::Fast).unwrap();
    let naive = LearnerConfig { mgr_mode: MgrMode::Naive, ..fast.clone() };
    let a = run_episode(&env, &fast, 32, 5, 0).unwrap();
    let b = run_episode(&env, &naive, 32, 5, 0).unwrap();
    assert_eq!(
        a.rows.iter().map(|r| r.action).collect::<Vec<_>>(),
        b.rows.iter().map(|r| r.action).collect::<Vec<_>>()
    );
}

#[test]
fn grid_is_powers_of_two_and_horizon() {
    assert_eq!(regret_grid(1), vec![1]);
    assert_eq!(regret_grid(8), vec![1, 2, 4, 8]);
    assert_eq!(regret_grid(10), vec![1, 2, 4, 8, 10]);
}
