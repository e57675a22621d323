//! Numerical checks behind `verify` and the acceptance suite.
//!
//! Each check returns one or more [`Check`] lines with the measured value,
//! the bound and the margin.

use std::time::{Duration, Instant};

use rand::Rng;
use rayon::prelude::*;

use linexp3::benchmarks;
use linexp3::environment::{AdversaryKind, AdversarySpec, ContextDistribution, Environment};
use linexp3::evaluation::{
    exact_regret_trace, regret_grid, robust_expectation_exact, slope_fit, trace_episode,
    verify_bias_and_quadratic, verify_potential_inequality, Algorithm, GhostSampler, LearnerConfig,
    RegretAccumulator, RegretCurve,
};
use linexp3::learner::{EstimatorKind, LearnerState, MgrMode};
use linexp3::mgr::{
    action_covariance_exact, expected_sigma_plus, mgr_all_arms_fast, mgr_fast, mgr_naive, ResamplingOracle,
    ScriptedDraws,
};
use linexp3::numkit::Matrix;
use linexp3::rng::{stream, Purpose, StreamRng};
use linexp3::{MgrConfig, Vector};

/// Outcome of one check; `passed == None` means it was skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: Option<bool>,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed: Some(passed),
            detail: detail.into(),
        }
    }

    pub fn skipped(name: impl Into<String>, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed: None,
            detail: detail.into(),
        }
    }

    pub fn failed(&self) -> bool {
        self.passed == Some(false)
    }

    pub fn status(&self) -> &'static str {
        match self.passed {
            Some(true) => "PASS",
            Some(false) => "FAIL",
            None => "SKIP",
        }
    }
}

impl std::fmt::Display for Check {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{}] {}: {}", self.status(), self.name, self.detail)
    }
}

fn runtime_check(name: &str, elapsed: Duration, budget: Duration) -> Check {
    Check::new(
        format!("{name} runtime"),
        elapsed <= budget,
        format!("{:.2}s (budget {:.0}s)", elapsed.as_secs_f64(), budget.as_secs_f64()),
    )
}

const SEED: u64 = 20_240_601;

fn verification_rng(case: u64) -> StreamRng {
    stream(SEED, Purpose::Verification, case, 0)
}

fn random_vector(rng: &mut StreamRng, dim: usize, scale: f64) -> Vector {
    Vector::new((0..dim).map(|_| scale * (2.0 * rng.random::<f64>() - 1.0)).collect()).expect("finite")
}

fn random_unit_ball(rng: &mut StreamRng, dim: usize) -> Vector {
    let v = random_vector(rng, dim, 1.0);
    let n = v.norm();
    if n > 1.0 {
        v.scaled(1.0 / n)
    } else {
        v
    }
}

/// Moves a fresh state away from the uniform policy with a few random updates.
fn perturbed_state(
    arms: usize,
    dim: usize,
    eta: f64,
    gamma: f64,
    estimator: EstimatorKind,
    rng: &mut StreamRng,
) -> LearnerState {
    let mut state = LearnerState::new(arms, dim, eta, gamma, estimator).expect("valid learner");
    for _ in 0..3 {
        let estimates: Vec<Vector> = (0..arms).map(|_| random_vector(rng, dim, 1.0)).collect();
        state = state.update(&estimates).expect("finite estimates");
    }
    state
}

fn finite_environment(points: Vec<Vector>, theta: Vec<Vector>) -> Environment {
    let n = points.len();
    let dist = ContextDistribution::finite_support(points, vec![1.0 / n as f64; n]).expect("valid support");
    let adv = AdversarySpec::new_bounded(AdversaryKind::Constant { theta }, None, 1, dist.sigma())
        .expect("valid adversary");
    Environment::new(dist, adv).expect("valid environment")
}

/// Exact enumeration recovers `θ_{t,a}` from the importance-weighted estimator.
pub fn unbiasedness() -> Vec<Check> {
    let start = Instant::now();
    let mut rng = verification_rng(1);
    let (k, d) = (3, 3);
    let points: Vec<Vector> = (0..6).map(|_| random_unit_ball(&mut rng, d)).collect();
    let theta: Vec<Vector> = (0..k).map(|_| random_unit_ball(&mut rng, d)).collect();
    let env = finite_environment(points, theta);
    let state = perturbed_state(
        k,
        d,
        0.7,
        0.2,
        EstimatorKind::Robust {
            sigma_inv: env.bounds.covariance_inv.clone(),
        },
        &mut rng,
    );
    let mut worst: f64 = 0.0;
    for a in 0..k {
        let mean = robust_expectation_exact(&env, &state, 1, a).expect("finite support");
        worst = worst.max(mean.max_abs_diff(&env.adversary.theta(1, a)));
    }
    vec![
        Check::new(
            "robust estimator unbiased (d=3, K=3, eps=0)",
            worst <= 1e-10,
            format!("max |E[theta_hat] - theta| = {worst:.3e} (tolerance 1e-10)"),
        ),
        runtime_check("unbiasedness", start.elapsed(), Duration::from_secs(1)),
    ]
}

/// Every draw sequence of length `m` with its probability.
fn enumerate_sequences(
    env: &Environment,
    state: &LearnerState,
    m: usize,
    mut visit: impl FnMut(&[(Vector, usize)], f64),
) {
    let (points, weights) = env.dist.support().expect("finite support");
    let outcomes: Vec<(Vector, usize, f64)> = points
        .iter()
        .zip(weights)
        .flat_map(|(x, p)| {
            let probs = linexp3::Policy::probs(state, x);
            (0..probs.len()).map(move |a| (x.clone(), a, p * probs[a])).collect::<Vec<_>>()
        })
        .collect();
    let mut index = vec![0usize; m];
    loop {
        let seq: Vec<(Vector, usize)> = index.iter().map(|&i| (outcomes[i].0.clone(), outcomes[i].1)).collect();
        let prob: f64 = index.iter().map(|&i| outcomes[i].2).product();
        visit(&seq, prob);
        let mut pos = 0;
        loop {
            if pos == m {
                return;
            }
            index[pos] += 1;
            if index[pos] < outcomes.len() {
                break;
            }
            index[pos] = 0;
            pos += 1;
        }
    }
}

fn mgr_test_environment() -> (Environment, LearnerState) {
    let mut rng = verification_rng(2);
    let points = vec![
        Vector::new(vec![1.0, 0.0]).unwrap(),
        Vector::new(vec![0.6, 0.8]).unwrap(),
        Vector::new(vec![-0.3, 0.5]).unwrap(),
    ];
    let theta = vec![Vector::new(vec![0.4, -0.2]).unwrap(), Vector::new(vec![-0.1, 0.5]).unwrap()];
    let env = finite_environment(points, theta);
    let cfg = MgrConfig::new(0.5, 4).unwrap();
    let state = perturbed_state(2, 2, 0.8, 0.1, EstimatorKind::RealMgr { cfg, mode: MgrMode::Fast }, &mut rng);
    (env, state)
}

/// Enumerated and Monte Carlo means of the resampled inverse against its closed form.
pub fn mgr_expectation(mc_samples: usize) -> Vec<Check> {
    let start = Instant::now();
    let (env, state) = mgr_test_environment();
    let beta = 1.0 / (2.0 * env.bounds.sigma * env.bounds.sigma);
    let mut checks = Vec::new();
    let mut worst: f64 = 0.0;
    for m in 0..=4 {
        let cfg = MgrConfig::new(beta, m).unwrap();
        for a in 0..2 {
            let closed = expected_sigma_plus(&action_covariance_exact(&env.dist, &state, a).unwrap(), &cfg).unwrap();
            let mut total = Matrix::zeros(2);
            let mut mass = 0.0;
            enumerate_sequences(&env, &state, m, |seq, prob| {
                let mut script = ScriptedDraws::with_dim(2, seq.to_vec());
                total.add_scaled(prob, &mgr_naive(&cfg, &mut script, a));
                mass += prob;
            });
            worst = worst.max(total.max_abs_diff(&closed)).max((mass - 1.0).abs());
        }
    }
    checks.push(Check::new(
        "MGR expectation by enumeration (3 points, K=2, M<=4)",
        worst <= 1e-10,
        format!("max entry error {worst:.3e} (tolerance 1e-10)"),
    ));

    let cfg = MgrConfig::new(beta, 4).unwrap();
    let mut max_z: f64 = 0.0;
    for a in 0..2 {
        let closed = expected_sigma_plus(&action_covariance_exact(&env.dist, &state, a).unwrap(), &cfg).unwrap();
        let (sum, sum_sq) = (0..mc_samples)
            .into_par_iter()
            .map(|i| {
                let rng = stream(SEED, Purpose::Resampling, a as u64, i as u64);
                let mut oracle = ResamplingOracle::new(&env.dist, &state, rng);
                let s = mgr_naive(&cfg, &mut oracle, a);
                let v = s.as_slice().to_vec();
                let sq = v.iter().map(|x| x * x).collect::<Vec<_>>();
                (v, sq)
            })
            .reduce(
                || (vec![0.0; 4], vec![0.0; 4]),
                |(mut s1, mut q1), (s2, q2)| {
                    s1.iter_mut().zip(&s2).for_each(|(a, b)| *a += b);
                    q1.iter_mut().zip(&q2).for_each(|(a, b)| *a += b);
                    (s1, q1)
                },
            );
        let n = mc_samples as f64;
        for i in 0..4 {
            let mean = sum[i] / n;
            let var = ((sum_sq[i] - sum[i] * sum[i] / n) / (n - 1.0)).max(0.0);
            let se = (var / n).sqrt();
            let err = (mean - closed.as_slice()[i]).abs();
            let z = if se > 0.0 { err / se } else if err < 1e-12 { 0.0 } else { f64::INFINITY };
            max_z = max_z.max(z);
        }
    }
    checks.push(Check::new(
        format!("MGR Monte Carlo mean ({mc_samples} samples, M=4)"),
        max_z <= 4.0,
        format!("max |mean - expected| = {max_z:.2} standard errors (limit 4)"),
    ));
    checks.push(runtime_check("MGR expectation", start.elapsed(), Duration::from_secs(30)));
    checks
}

/// The vector-only recursion against the materialized matrix on random scripts.
pub fn fast_equivalence(sequences: usize) -> Vec<Check> {
    let start = Instant::now();
    let mut rng = verification_rng(3);
    let mut worst: f64 = 0.0;
    let mut worst_all: f64 = 0.0;
    for _ in 0..sequences {
        let d = rng.random_range(1..=8);
        let m = rng.random_range(0..=64);
        let k = rng.random_range(1..=4);
        let draws: Vec<(Vector, usize)> =
            (0..m).map(|_| (random_unit_ball(&mut rng, d), rng.random_range(0..k))).collect();
        let beta = 0.5 * rng.random::<f64>().max(1e-3);
        let cfg = MgrConfig::new(beta, m).unwrap();
        let x = random_unit_ball(&mut rng, d);
        let mut script = ScriptedDraws::with_dim(d, draws);
        let all = mgr_all_arms_fast(&cfg, &mut script, k, &x);
        for a in 0..k {
            script.rewind();
            let naive = mgr_naive(&cfg, &mut script, a).mul_vec(&x);
            script.rewind();
            let fast = mgr_fast(&cfg, &mut script, a, &x);
            worst = worst.max(naive.max_abs_diff(&fast));
            worst_all = worst_all.max(all[a].max_abs_diff(&fast));
        }
    }
    vec![
        Check::new(
            format!("fast MGR equals naive MGR times x ({sequences} scripts, d<=8, M<=64)"),
            worst <= 1e-10,
            format!("max error {worst:.3e} (tolerance 1e-10)"),
        ),
        Check::new(
            "all-arms fast MGR equals per-arm fast MGR",
            worst_all <= 1e-10,
            format!("max error {worst_all:.3e} (tolerance 1e-10)"),
        ),
        runtime_check("fast MGR equivalence", start.elapsed(), Duration::from_secs(10)),
    ]
}

/// Misspecification bias of the importance-weighted estimator and truncation
/// bias of the resampled one.
pub fn bias_bounds() -> Vec<Check> {
    let start = Instant::now();
    let mut checks = Vec::new();
    for &eps in &[0.05, 0.1] {
        for &d in &[2usize, 4, 9] {
            let k = 3;
            let env = benchmarks::biased_benchmark(k, d, 1, eps, d as u64).expect("benchmark");
            let mut rng = verification_rng(40 + d as u64);
            let state = perturbed_state(
                k,
                d,
                0.5,
                0.2,
                EstimatorKind::Robust {
                    sigma_inv: env.bounds.covariance_inv.clone(),
                },
                &mut rng,
            );
            let mut ghost = GhostSampler::new(&env.dist, SEED);
            let report = verify_bias_and_quadratic(&env, &state, 1, &mut ghost, 0).expect("robust report");
            let (worst, bound) = report
                .check("bias")
                .map(|c| (c.value, c.bound))
                .fold((0.0f64, 0.0f64), |(w, _), (v, b)| (w.max(v), b));
            checks.push(Check::new(
                format!("robust bias eps={eps} d={d}"),
                report.check("bias").all(|c| c.holds(0.0)),
                format!("max bias {worst:.4e} <= eps*sqrt(d) = {bound:.4e}, margin {:.4e}", bound - worst),
            ));
        }
    }

    let env = benchmarks::linear_benchmark(3, 3, 1, 0.0, 7).expect("benchmark");
    let beta = 1.0 / (2.0 * env.bounds.sigma * env.bounds.sigma);
    let mut previous = f64::INFINITY;
    for &m in &[1usize, 10, 100] {
        let cfg = MgrConfig::new(beta, m).unwrap();
        let mut rng = verification_rng(50);
        let state = perturbed_state(3, 3, 0.5, 0.3, EstimatorKind::RealMgr { cfg, mode: MgrMode::Fast }, &mut rng);
        let mut ghost = GhostSampler::new(&env.dist, SEED);
        let report = verify_bias_and_quadratic(&env, &state, 1, &mut ghost, 0).expect("resampling report");
        let worst = report.check("truncation").map(|c| c.value).fold(0.0, f64::max);
        let bound = report.check("truncation").map(|c| c.bound).fold(0.0, f64::max);
        let decays = worst <= previous;
        previous = worst;
        checks.push(Check::new(
            format!("MGR truncation bias M={m}"),
            report.check("truncation").all(|c| c.holds(0.0)) && decays,
            format!(
                "max |<x, theta - E theta_tilde>| = {worst:.4e} <= sigma R exp(-gamma beta lambda (M+1)/K) = {bound:.4e}, margin {:.4e}",
                bound - worst
            ),
        ));
    }
    checks.push(runtime_check("bias bounds", start.elapsed(), Duration::from_secs(60)));
    checks
}

/// Second-moment terms of both estimators.
pub fn quadratic_bounds(mc_samples: usize) -> Vec<Check> {
    let start = Instant::now();
    let mut checks = Vec::new();
    for &(k, d, gamma) in &[(3usize, 2usize, 0.1), (3, 4, 0.5), (4, 4, 0.05)] {
        let env = benchmarks::linear_benchmark(k, d, 1, 0.05, 11).expect("benchmark");
        let mut rng = verification_rng(60 + d as u64);
        let state = perturbed_state(
            k,
            d,
            0.5,
            gamma,
            EstimatorKind::Robust {
                sigma_inv: env.bounds.covariance_inv.clone(),
            },
            &mut rng,
        );
        let mut ghost = GhostSampler::new(&env.dist, SEED);
        let report = verify_bias_and_quadratic(&env, &state, 1, &mut ghost, 0).expect("robust report");
        let q = report.check("quadratic").next().expect("quadratic check");
        checks.push(Check::new(
            format!("robust quadratic term K={k} d={d} gamma={gamma}"),
            q.holds(0.0),
            format!("{:.4e} <= Kd/gamma = {:.4e}, margin {:.4e}", q.value, q.bound, q.margin()),
        ));
    }

    let (k, d) = (3, 3);
    let env = benchmarks::linear_benchmark(k, d, 1, 0.0, 13).expect("benchmark");
    let beta = 1.0 / (2.0 * env.bounds.sigma * env.bounds.sigma);
    let gamma = 0.3;
    let m = (k as f64 * env.bounds.sigma.powi(2) * 2.0 / (gamma * env.bounds.lambda_min)).ceil() as usize;
    let cfg = MgrConfig::new(beta, m).unwrap();
    let mut rng = verification_rng(70);
    let state = perturbed_state(k, d, 2.0 / (m as f64 + 1.0), gamma, EstimatorKind::RealMgr { cfg, mode: MgrMode::Fast }, &mut rng);
    let mut ghost = GhostSampler::new(&env.dist, SEED);
    let report = verify_bias_and_quadratic(&env, &state, 1, &mut ghost, mc_samples).expect("resampling report");
    let q = report.check("quadratic").next().expect("quadratic check");
    checks.push(Check::new(
        format!("MGR quadratic term K={k} d={d} M={m} ({mc_samples} samples)"),
        q.holds(3.0),
        format!(
            "{:.4e} (stderr {:.2e}) <= 3Kd + 3 stderr = {:.4e}, margin {:.4e}",
            q.value,
            q.stderr,
            q.bound + 3.0 * q.stderr,
            q.margin()
        ),
    ));
    checks.push(runtime_check("quadratic bounds", start.elapsed(), Duration::from_secs(120)));
    checks
}

/// The per-context exponential-weights inequality on random short episodes.
pub fn potential(episodes: usize) -> Vec<Check> {
    let start = Instant::now();
    let mut rng = verification_rng(80);
    let (mut evaluated, mut skipped, mut violations) = (0usize, 0usize, 0usize);
    let mut min_margin = f64::INFINITY;
    let mut sharp_violations = 0usize;
    let mut worst_skip: f64 = 0.0;
    let algorithms = [Algorithm::RobustLinExp3, Algorithm::RealLinExp3, Algorithm::FullInfo];
    for e in 0..episodes {
        let algorithm = algorithms[e % algorithms.len()];
        let k = rng.random_range(2..=4);
        let d = rng.random_range(2..=4);
        let horizon = rng.random_range(16..=256);
        let eps = if rng.random::<bool>() { 0.1 } else { 0.0 };
        let env = if rng.random::<bool>() {
            benchmarks::linear_benchmark(k, d, horizon, eps, e as u64)
        } else {
            benchmarks::drifting_benchmark(k, d, horizon, eps, e as u64)
        }
        .expect("benchmark");
        let (config, _) = LearnerConfig::tuned(algorithm, &env, horizon, MgrMode::Fast).expect("tuning");
        let trace = trace_episode(&env, &config, horizon, SEED, e as u64).expect("episode");
        let (points, _) = env.dist.support().expect("finite support");
        for x in points.iter().take(5) {
            let report = verify_potential_inequality(&trace, x);
            match report.outcome() {
                Some(ok) => {
                    evaluated += 1;
                    if !ok {
                        violations += 1;
                    }
                    if !report.checks.iter().all(|c| c.sharp_holds()) {
                        sharp_violations += 1;
                    }
                    min_margin = min_margin.min(report.min_margin());
                }
                None => {
                    skipped += 1;
                    worst_skip = worst_skip.max(report.max_scaled_loss);
                }
            }
        }
    }
    let mut checks = vec![Check::new(
        format!("potential inequality ({episodes} episodes, T<=256, 5 contexts each)"),
        violations == 0 && evaluated > 0,
        format!(
            "{evaluated} evaluated, {violations} violated, min margin {min_margin:.4e}; sharp form violated {sharp_violations} times"
        ),
    )];
    if skipped > 0 {
        checks.push(Check::skipped(
            "potential precondition |eta <x, theta_hat>| < 1",
            format!("violated at {skipped} contexts (max {worst_skip:.3}); those contexts were not evaluated"),
        ));
    } else {
        checks.push(Check::new(
            "potential precondition |eta <x, theta_hat>| < 1",
            true,
            "held at every evaluated context",
        ));
    }
    checks.push(runtime_check("potential inequality", start.elapsed(), Duration::from_secs(120)));
    checks
}

/// Exact-over-contexts expected regret curves, one replication per task.
pub fn regret_curve(
    env: &Environment,
    config: &LearnerConfig,
    horizon: usize,
    seed: u64,
    replications: usize,
) -> RegretCurve {
    let traces: Vec<_> = (0..replications as u64)
        .into_par_iter()
        .map(|r| exact_regret_trace(env, config, horizon, seed, r).expect("episode"))
        .collect();
    let mut acc = RegretAccumulator::new(regret_grid(horizon));
    for t in &traces {
        acc.push(t).expect("common grid");
    }
    acc.finish()
}

/// The scaling benchmark: Hadamard losses over signed-axis contexts.
pub fn scaling_environment(horizon: usize) -> Environment {
    benchmarks::hadamard_benchmark(4, 4, horizon, 0.0, 0).expect("benchmark")
}

/// Regret exponents of both bandit learners over a horizon sweep.
pub fn regret_scaling(exponents: &[u32], replications: usize) -> Vec<Check> {
    let start = Instant::now();
    let mut finals = Vec::new();
    let mut checks = Vec::new();
    for (algorithm, limit) in [(Algorithm::RealLinExp3, 0.6), (Algorithm::RobustLinExp3, 0.78)] {
        let mut points = Vec::new();
        let mut per_t = Vec::new();
        for (i, e) in exponents.iter().enumerate() {
            let horizon = 1usize << e;
            let env = scaling_environment(horizon);
            let (config, _) = LearnerConfig::tuned(algorithm, &env, horizon, MgrMode::Fast).expect("tuning");
            let curve = regret_curve(&env, &config, horizon, SEED + i as u64 * 1_000_000, replications);
            per_t.push(format!("T=2^{e}: {:.1} +- {:.1}", curve.final_regret(), curve.final_stderr()));
            points.push((horizon as f64, curve.final_regret()));
        }
        finals.push(points.last().expect("non-empty grid").1);
        let slope = slope_fit(&points);
        checks.push(Check::new(
            format!("{} regret exponent", algorithm.name()),
            slope.as_ref().is_ok_and(|s| *s <= limit),
            match slope {
                Ok(s) => format!("fitted {s:.3} (limit {limit}); {}", per_t.join(", ")),
                Err(err) => format!("fit failed: {err}"),
            },
        ));
    }
    checks.push(Check::new(
        "real_linexp3 final regret below robust_linexp3",
        finals[0] < finals[1],
        format!("{:.1} vs {:.1} at T=2^{}", finals[0], finals[1], exponents.last().unwrap()),
    ));
    checks.push(runtime_check("regret scaling", start.elapsed(), Duration::from_secs(20 * 60)));
    checks
}

/// Average regret of the importance-weighted learner under misspecification.
pub fn misspecification_floor(replications: usize) -> Vec<Check> {
    let start = Instant::now();
    let (k, d, eps) = (4, 4, 0.1);
    let horizon = 1 << 14;
    let env = benchmarks::linear_benchmark(k, d, horizon, eps, 3).expect("benchmark");
    let (config, _) = LearnerConfig::tuned(Algorithm::RobustLinExp3, &env, horizon, MgrMode::Fast).expect("tuning");
    let curve = regret_curve(&env, &config, horizon, SEED, replications);
    let bound = 2.0 * eps * (d as f64).sqrt() + 0.05;
    let n = curve.grid.len();
    let per_round: Vec<String> = (n.saturating_sub(3)..n)
        .map(|i| format!("T={}: {:.4}", curve.grid[i], curve.mean_regret[i] / curve.grid[i] as f64))
        .collect();
    let avg = curve.final_regret() / horizon as f64;
    let band = 2.0 * curve.final_stderr() / horizon as f64;
    vec![
        Check::new(
            "robust_linexp3 misspecification floor (eps=0.1, T=2^14)",
            avg <= bound + band,
            format!(
                "regret/T = {avg:.4} (stderr band {band:.4}) <= 2 eps sqrt(d) + 0.05 = {bound:.4}; {}",
                per_round.join(", ")
            ),
        ),
        runtime_check("misspecification floor", start.elapsed(), Duration::from_secs(5 * 60)),
    ]
}

/// Per-run regret of the full-information and counterfactual learners against their bounds.
pub fn full_information(runs_per_setting: usize) -> Vec<Check> {
    let start = Instant::now();
    let mut checks = Vec::new();
    let mut worst = f64::NEG_INFINITY;
    let mut count = 0;
    let mut ok = true;
    for &k in &[2usize, 4] {
        for &eps in &[0.0, 0.05] {
            for &horizon in &[1024usize, 4096] {
                let env = benchmarks::nonnegative_benchmark(k, 4, horizon, eps, k as u64).expect("benchmark");
                let (config, _) = LearnerConfig::tuned(Algorithm::Counterfactual, &env, horizon, MgrMode::Fast).expect("tuning");
                let bound = (k as f64).ln() / config.eta + config.eta * horizon as f64 / 8.0;
                for r in 0..runs_per_setting as u64 {
                    let regret = exact_regret_trace(&env, &config, horizon, SEED, r).expect("episode").final_regret();
                    ok &= regret <= bound;
                    worst = worst.max(regret / bound);
                    count += 1;
                }
            }
        }
    }
    checks.push(Check::new(
        "counterfactual regret <= log K / eta + eta T / 8",
        ok,
        format!("{count} runs, worst regret/bound = {worst:.3}"),
    ));

    let mut worst = f64::NEG_INFINITY;
    let mut count = 0;
    let mut ok = true;
    for &eps in &[0.0, 0.1] {
        for &horizon in &[1024usize, 4096] {
            for drifting in [false, true] {
                let (k, d) = (4, 4);
                let env = if drifting {
                    benchmarks::drifting_benchmark(k, d, horizon, eps, 5)
                } else {
                    benchmarks::linear_benchmark(k, d, horizon, eps, 5)
                }
                .expect("benchmark");
                let (config, _) = LearnerConfig::tuned(Algorithm::FullInfo, &env, horizon, MgrMode::Fast).expect("tuning");
                let t = horizon as f64;
                let bound = (k as f64).ln() / config.eta + config.eta * d as f64 * t + eps * (d as f64).sqrt() * t;
                for r in 0..runs_per_setting as u64 {
                    let regret = exact_regret_trace(&env, &config, horizon, SEED, r).expect("episode").final_regret();
                    ok &= regret <= bound;
                    worst = worst.max(regret / bound);
                    count += 1;
                }
            }
        }
    }
    checks.push(Check::new(
        "full-information regret <= log K / eta + eta d T + eps sqrt(d) T",
        ok,
        format!("{count} runs, worst regret/bound = {worst:.3}"),
    ));
    checks.push(runtime_check("full-information bounds", start.elapsed(), Duration::from_secs(5 * 60)));
    checks
}

/// Names accepted by `verify`.
pub const SUITES: &[&str] = &["estimators", "mgr", "potential", "bounds", "all"];

/// Runs a verification suite; `None` for an unknown name.
pub fn run_suite(name: &str) -> Option<Vec<Check>> {
    let checks = match name {
        "estimators" => unbiasedness(),
        "mgr" => [mgr_expectation(100_000), fast_equivalence(1000)].concat(),
        "potential" => potential(200),
        "bounds" => [bias_bounds(), quadratic_bounds(100_000), full_information(2)].concat(),
        "all" => ["estimators", "mgr", "potential", "bounds"]
            .iter()
            .flat_map(|s| run_suite(s).expect("known suite"))
            .collect(),
        _ => return None,
    };
    Some(checks)
}
