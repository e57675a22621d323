//! Episodes, regret estimation and numerical checks of the analysis quantities.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write as _;

use rand::Rng;

use crate::environment::{loss_value, ContextDistribution, Environment};
use crate::error::{invalid, Error, Result};
use crate::learner::{
    draw_action_with, mix_exponential_weights, real_estimate, robust_estimate, tune_counterfactual,
    tune_fullinfo, tune_real, tune_robust, EstimatorKind, LearnerState, MgrMode, Policy,
    SigmaPlus, TunedParams,
};
use crate::mgr::{
    action_covariance_exact, expected_sigma_plus, mgr_fast, mgr_naive, DrawSource, MgrConfig,
    ResamplingOracle, TabulatedOracle,
};
use crate::numkit::{dot, Vector};
use crate::rng::{stream, Purpose, StreamRng};

/// The best fixed linear-classifier policy in hindsight.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparatorPolicy {
    arms: usize,
    dim: usize,
    cum_theta: Vec<f64>,
}

impl ComparatorPolicy {
    /// `Σ_{t ≤ T} θ_{t,a}` for every arm.
    pub fn new(adv: &crate::environment::AdversarySpec, horizon: usize) -> Self {
        let (arms, dim) = (adv.arms(), adv.dim());
        let mut cum_theta = vec![0.0; arms * dim];
        for t in 1..=horizon {
            for a in 0..arms {
                crate::numkit::axpy(&mut cum_theta[a * dim..(a + 1) * dim], 1.0, &adv.theta(t, a));
            }
        }
        Self {
            arms,
            dim,
            cum_theta,
        }
    }

    pub fn cum_theta(&self, a: usize) -> &[f64] {
        &self.cum_theta[a * self.dim..(a + 1) * self.dim]
    }

    /// `argmin_a ⟨x, Σ_t θ_{t,a}⟩`, lowest index on ties.
    pub fn decide(&self, x: &[f64]) -> usize {
        let mut best = 0;
        let mut best_value = f64::INFINITY;
        for a in 0..self.arms {
            let v = dot(x, self.cum_theta(a));
            if v < best_value {
                best = a;
                best_value = v;
            }
        }
        best
    }
}

pub fn comparator_policy(adv: &crate::environment::AdversarySpec, horizon: usize) -> ComparatorPolicy {
    ComparatorPolicy::new(adv, horizon)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    RobustLinExp3,
    RealLinExp3,
    FullInfo,
    Counterfactual,
    Uniform,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::RobustLinExp3 => "robust_linexp3",
            Algorithm::RealLinExp3 => "real_linexp3",
            Algorithm::FullInfo => "fullinfo",
            Algorithm::Counterfactual => "counterfactual",
            Algorithm::Uniform => "uniform",
        }
    }
}

/// Fully resolved learner hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnerConfig {
    pub algorithm: Algorithm,
    pub eta: f64,
    pub gamma: f64,
    pub mgr: Option<MgrConfig>,
    pub mgr_mode: MgrMode,
}

impl LearnerConfig {
    /// Hyperparameters from the tuning rule matching `algorithm`.
    pub fn tuned(algorithm: Algorithm, env: &Environment, horizon: usize, mgr_mode: MgrMode) -> Result<(Self, TunedParams)> {
        let (k, d) = (env.arms(), env.dim());
        let b = &env.bounds;
        let params = match algorithm {
            Algorithm::RobustLinExp3 => tune_robust(horizon, k, d, b.sigma, b.lambda_min),
            Algorithm::RealLinExp3 => tune_real(horizon, k, d, b.sigma, b.param_norm, b.lambda_min),
            Algorithm::FullInfo => tune_fullinfo(horizon, k, d, b.sigma, b.lambda_min),
            Algorithm::Counterfactual => tune_counterfactual(horizon, k),
            Algorithm::Uniform => TunedParams {
                eta: 0.0,
                gamma: 1.0,
                beta: None,
                iterations: None,
                clamped: Default::default(),
                warnings: Vec::new(),
            },
        };
        let mgr = match (params.beta, params.iterations) {
            (Some(beta), Some(m)) => Some(MgrConfig::new(beta, m)?),
            _ => None,
        };
        Ok((
            Self {
                algorithm,
                eta: params.eta,
                gamma: params.gamma,
                mgr,
                mgr_mode,
            },
            params,
        ))
    }

    /// Initial learner state for this configuration.
    pub fn initial_state(&self, env: &Environment) -> Result<LearnerState> {
        let sigma_inv = || env.bounds.covariance_inv.clone();
        let (gamma, estimator) = match self.algorithm {
            Algorithm::RobustLinExp3 => (
                self.gamma,
                EstimatorKind::Robust {
                    sigma_inv: sigma_inv(),
                },
            ),
            Algorithm::RealLinExp3 => {
                let cfg = self
                    .mgr
                    .ok_or_else(|| invalid("mgr", "resampling parameters are required"))?;
                MgrConfig::for_contexts(cfg.beta(), cfg.iterations(), env.bounds.sigma)?;
                (
                    self.gamma,
                    EstimatorKind::RealMgr {
                        cfg,
                        mode: self.mgr_mode,
                    },
                )
            }
            Algorithm::FullInfo => (
                self.gamma,
                EstimatorKind::FullInfo {
                    sigma_inv: sigma_inv(),
                },
            ),
            Algorithm::Counterfactual => (0.0, EstimatorKind::Counterfactual),
            Algorithm::Uniform => (1.0, EstimatorKind::Uniform),
        };
        LearnerState::new(env.arms(), env.dim(), self.eta, gamma, estimator)
    }
}

/// Everything observed and computed in one round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundTrace {
    pub t: usize,
    pub context: Vector,
    pub probs: Vec<f64>,
    pub action: usize,
    pub loss: f64,
    pub comparator_loss: f64,
    pub estimates: Vec<Vector>,
}

/// A single run of a learner against an environment, one round at a time.
pub struct Episode<'e> {
    env: &'e Environment,
    comparator: &'e ComparatorPolicy,
    state: Option<LearnerState>,
    horizon: usize,
    seed: u64,
    replication: u64,
    context_rng: StreamRng,
    action_rng: StreamRng,
}

impl<'e> Episode<'e> {
    pub fn new(
        env: &'e Environment,
        comparator: &'e ComparatorPolicy,
        config: &LearnerConfig,
        horizon: usize,
        seed: u64,
        replication: u64,
    ) -> Result<Self> {
        if horizon == 0 || horizon > env.horizon() {
            return Err(invalid(
                "T",
                format!("{horizon} outside 1..={} (adversary horizon)", env.horizon()),
            ));
        }
        Ok(Self {
            env,
            comparator,
            state: Some(config.initial_state(env)?),
            horizon,
            seed,
            replication,
            context_rng: stream(seed, Purpose::Context, replication, 0),
            action_rng: stream(seed, Purpose::Action, replication, 0),
        })
    }

    pub fn state(&self) -> &LearnerState {
        self.state.as_ref().expect("learner state present between rounds")
    }

    pub fn is_done(&self) -> bool {
        self.state().round() > self.horizon
    }

    /// The current policy at `x`, including the counterfactual loss offsets.
    pub fn policy_into(&self, x: &[f64], out: &mut [f64]) {
        let state = self.state();
        match state.estimator() {
            EstimatorKind::Counterfactual => {
                let past = (state.round() - 1) as f64;
                let offsets: Vec<f64> = (0..out.len())
                    .map(|a| past * self.env.adversary.misspec_value(x, a))
                    .collect();
                state.probs_with_offsets(x, &offsets, out);
            }
            _ => state.probs_into(x, out),
        }
    }

    /// Plays one round.
    pub fn step(&mut self) -> Result<RoundTrace> {
        if self.is_done() {
            return Err(invalid("round", "episode already finished"));
        }
        let env = self.env;
        let (k, d) = (env.arms(), env.dim());
        let t = self.state().round();

        let mut x = vec![0.0; d];
        env.dist.sample_into(&mut self.context_rng, &mut x);
        let mut probs = vec![0.0; k];
        self.policy_into(&x, &mut probs);
        let action = draw_action_with(&probs, self.action_rng.random::<f64>());
        let loss = loss_value(&env.adversary, t, &x, action)?;
        let comparator_loss = loss_value(&env.adversary, t, &x, self.comparator.decide(&x))?;

        let state = self.state.take().expect("learner state present between rounds");
        let mut estimates = vec![Vector::zeros(d); k];
        match state.estimator() {
            EstimatorKind::Robust { sigma_inv } => {
                estimates[action] =
                    robust_estimate(sigma_inv, &x, action, probs[action], loss, action);
            }
            EstimatorKind::RealMgr { cfg, mode } => {
                let rng = stream(self.seed, Purpose::Resampling, self.replication, t as u64);
                estimates[action] = resampled_estimate(&env.dist, &state, cfg, *mode, rng, &x, action, loss);
            }
            EstimatorKind::FullInfo { sigma_inv } => {
                let whitened = sigma_inv.mul_vec(&x);
                for (a, e) in estimates.iter_mut().enumerate() {
                    *e = whitened.scaled(loss_value(&env.adversary, t, &x, a)?);
                }
            }
            EstimatorKind::Counterfactual => {
                for (a, e) in estimates.iter_mut().enumerate() {
                    *e = env.adversary.theta(t, a);
                }
            }
            EstimatorKind::Uniform => {}
        }
        self.state = Some(state.update(&estimates)?);

        Ok(RoundTrace {
            t,
            context: Vector::from_vec_unchecked(x),
            probs,
            action,
            loss,
            comparator_loss,
            estimates,
        })
    }
}

/// One resampled estimate `Σ̂⁺ x · loss` for the chosen arm.
#[allow(clippy::too_many_arguments)]
fn resampled_estimate(
    dist: &ContextDistribution,
    state: &LearnerState,
    cfg: &MgrConfig,
    mode: MgrMode,
    rng: StreamRng,
    x: &[f64],
    action: usize,
    loss: f64,
) -> Vector {
    let tabulate = dist
        .support()
        .is_some_and(|(points, _)| points.len() <= cfg.iterations());
    let mut source: alloc::boxed::Box<dyn DrawSource + '_> = if tabulate {
        alloc::boxed::Box::new(TabulatedOracle::new(dist, state, rng).expect("finite support"))
    } else {
        alloc::boxed::Box::new(ResamplingOracle::new(dist, state, rng))
    };
    match mode {
        MgrMode::Naive => {
            let sigma_plus = mgr_naive(cfg, source.as_mut(), action);
            real_estimate(SigmaPlus::Matrix(&sigma_plus), x, action, loss, action)
        }
        MgrMode::Fast => {
            let q = mgr_fast(cfg, source.as_mut(), action, x);
            real_estimate(SigmaPlus::Applied(&q), x, action, loss, action)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundRow {
    pub t: usize,
    pub context: Vector,
    pub action: usize,
    pub loss: f64,
    pub comparator_loss: f64,
}

/// Per-round trajectory of one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub rows: Vec<RoundRow>,
    pub seed: u64,
    pub replication: u64,
    pub config_hash: u64,
}

struct Fnv(u64);

impl core::fmt::Write for Fnv {
    fn write_str(&mut self, s: &str) -> core::fmt::Result {
        for b in s.bytes() {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(0x0000_0100_0000_01B3);
        }
        Ok(())
    }
}

/// Fingerprint of everything that determines an episode except the seed.
pub fn config_fingerprint(env: &Environment, config: &LearnerConfig, horizon: usize) -> u64 {
    let mut h = Fnv(0xCBF2_9CE4_8422_2325);
    let _ = write!(h, "{:?}|{:?}|{:?}|{}", env.dist, env.adversary, config, horizon);
    h.0
}

/// Runs `horizon` rounds with streams keyed by `(seed, replication)`.
pub fn run_episode(
    env: &Environment,
    config: &LearnerConfig,
    horizon: usize,
    seed: u64,
    replication: u64,
) -> Result<RunRecord> {
    let comparator = ComparatorPolicy::new(&env.adversary, horizon);
    run_episode_against(env, &comparator, config, horizon, seed, replication)
}

/// [`run_episode`] with a precomputed comparator.
pub fn run_episode_against(
    env: &Environment,
    comparator: &ComparatorPolicy,
    config: &LearnerConfig,
    horizon: usize,
    seed: u64,
    replication: u64,
) -> Result<RunRecord> {
    let mut episode = Episode::new(env, comparator, config, horizon, seed, replication)?;
    let mut rows = Vec::with_capacity(horizon);
    while !episode.is_done() {
        let r = episode.step()?;
        rows.push(RoundRow {
            t: r.t,
            context: r.context,
            action: r.action,
            loss: r.loss,
            comparator_loss: r.comparator_loss,
        });
    }
    Ok(RunRecord {
        rows,
        seed,
        replication,
        config_hash: config_fingerprint(env, config, horizon),
    })
}

/// Powers of two up to `horizon`, plus `horizon` itself.
pub fn regret_grid(horizon: usize) -> Vec<usize> {
    let mut grid: Vec<usize> = core::iter::successors(Some(1usize), |g| g.checked_mul(2))
        .take_while(|g| *g <= horizon)
        .collect();
    if grid.last() != Some(&horizon) {
        grid.push(horizon);
    }
    grid
}

/// Cumulative learner and comparator losses of one replication at grid points.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretTrace {
    pub grid: Vec<usize>,
    pub learner: Vec<f64>,
    pub comparator: Vec<f64>,
}

impl RegretTrace {
    /// Accumulates per-round `(learner, comparator)` losses; `rounds` must cover the grid.
    pub fn from_rounds(grid: &[usize], rounds: impl IntoIterator<Item = (f64, f64)>) -> Self {
        let mut learner = Vec::with_capacity(grid.len());
        let mut comparator = Vec::with_capacity(grid.len());
        let (mut l, mut c) = (0.0, 0.0);
        let mut next = 0;
        for (t, (lt, ct)) in rounds.into_iter().enumerate() {
            l += lt;
            c += ct;
            if next < grid.len() && grid[next] == t + 1 {
                learner.push(l);
                comparator.push(c);
                next += 1;
            }
        }
        Self {
            grid: grid.to_vec(),
            learner,
            comparator,
        }
    }

    pub fn regret(&self, i: usize) -> f64 {
        self.learner[i] - self.comparator[i]
    }

    pub fn final_regret(&self) -> f64 {
        self.regret(self.grid.len() - 1)
    }
}

impl RunRecord {
    pub fn trace(&self, grid: &[usize]) -> RegretTrace {
        RegretTrace::from_rounds(grid, self.rows.iter().map(|r| (r.loss, r.comparator_loss)))
    }

    pub fn horizon(&self) -> usize {
        self.rows.len()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Moments {
    n: f64,
    sum: f64,
    sum_sq: f64,
}

impl Moments {
    fn push(&mut self, v: f64) {
        self.n += 1.0;
        self.sum += v;
        self.sum_sq += v * v;
    }

    fn merge(&mut self, other: &Moments) {
        self.n += other.n;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    fn mean(&self) -> f64 {
        self.sum / self.n
    }

    fn stderr(&self) -> f64 {
        if self.n < 2.0 {
            return 0.0;
        }
        let var = ((self.sum_sq - self.sum * self.sum / self.n) / (self.n - 1.0)).max(0.0);
        libm::sqrt(var / self.n)
    }
}

/// Mergeable partial sums of regret traces on a common grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretAccumulator {
    grid: Vec<usize>,
    regret: Vec<Moments>,
    learner: Vec<Moments>,
    comparator: Vec<Moments>,
}

impl RegretAccumulator {
    pub fn new(grid: Vec<usize>) -> Self {
        let n = grid.len();
        Self {
            grid,
            regret: vec![Moments::default(); n],
            learner: vec![Moments::default(); n],
            comparator: vec![Moments::default(); n],
        }
    }

    pub fn push(&mut self, trace: &RegretTrace) -> Result<()> {
        if trace.grid != self.grid || trace.learner.len() != self.grid.len() {
            return Err(Error::MismatchedConfigs);
        }
        for i in 0..self.grid.len() {
            self.regret[i].push(trace.regret(i));
            self.learner[i].push(trace.learner[i]);
            self.comparator[i].push(trace.comparator[i]);
        }
        Ok(())
    }

    pub fn merge(&mut self, other: &RegretAccumulator) -> Result<()> {
        if other.grid != self.grid {
            return Err(Error::MismatchedConfigs);
        }
        for i in 0..self.grid.len() {
            self.regret[i].merge(&other.regret[i]);
            self.learner[i].merge(&other.learner[i]);
            self.comparator[i].merge(&other.comparator[i]);
        }
        Ok(())
    }

    pub fn finish(&self) -> RegretCurve {
        RegretCurve {
            grid: self.grid.clone(),
            mean_regret: self.regret.iter().map(Moments::mean).collect(),
            stderr: self.regret.iter().map(Moments::stderr).collect(),
            mean_learner_loss: self.learner.iter().map(Moments::mean).collect(),
            mean_comparator_loss: self.comparator.iter().map(Moments::mean).collect(),
            replications: self.regret.first().map_or(0, |m| m.n as usize),
        }
    }
}

/// Mean cumulative regret across replications, with standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretCurve {
    pub grid: Vec<usize>,
    pub mean_regret: Vec<f64>,
    pub stderr: Vec<f64>,
    pub mean_learner_loss: Vec<f64>,
    pub mean_comparator_loss: Vec<f64>,
    pub replications: usize,
}

impl RegretCurve {
    pub fn final_regret(&self) -> f64 {
        *self.mean_regret.last().expect("non-empty grid")
    }

    pub fn final_stderr(&self) -> f64 {
        *self.stderr.last().expect("non-empty grid")
    }
}

/// Aggregates at least two replications of the same configuration.
pub fn expected_regret(records: &[RunRecord]) -> Result<RegretCurve> {
    if records.len() < 2 {
        return Err(invalid("records", "at least two replications are required"));
    }
    let first = &records[0];
    if records
        .iter()
        .any(|r| r.config_hash != first.config_hash || r.horizon() != first.horizon())
    {
        return Err(Error::MismatchedConfigs);
    }
    let grid = regret_grid(first.horizon());
    let mut acc = RegretAccumulator::new(grid.clone());
    for r in records {
        acc.push(&r.trace(&grid))?;
    }
    Ok(acc.finish())
}

/// Per-round regret averaged exactly over a finite context law, given the
/// learner state at that round: `Σ_x p(x) [Σ_a π_t(a|x) ℓ_t(x,a) − ℓ_t(x, π*(x))]`.
///
/// Only the learner's own randomness is sampled.
pub fn exact_regret_trace(
    env: &Environment,
    config: &LearnerConfig,
    horizon: usize,
    seed: u64,
    replication: u64,
) -> Result<RegretTrace> {
    let (points, weights) = env
        .dist
        .support()
        .ok_or_else(|| invalid("distribution", "exact regret needs finite support"))?;
    let comparator = ComparatorPolicy::new(&env.adversary, horizon);
    let best: Vec<usize> = points.iter().map(|x| comparator.decide(x)).collect();
    let mut episode = Episode::new(env, &comparator, config, horizon, seed, replication)?;
    let mut probs = vec![0.0; env.arms()];
    let mut rounds = Vec::with_capacity(horizon);
    while !episode.is_done() {
        let t = episode.state().round();
        let (mut learner, mut comp) = (0.0, 0.0);
        for ((x, p), b) in points.iter().zip(weights).zip(&best) {
            episode.policy_into(x, &mut probs);
            let expected: f64 = probs
                .iter()
                .enumerate()
                .map(|(a, pa)| pa * env.adversary.loss_unchecked(t, x, a))
                .sum();
            learner += p * expected;
            comp += p * env.adversary.loss_unchecked(t, x, *b);
        }
        rounds.push((learner, comp));
        episode.step()?;
    }
    Ok(RegretTrace::from_rounds(&regret_grid(horizon), rounds))
}

/// [`exact_regret_trace`] averaged over `replications` learner seeds.
pub fn expected_regret_exact(
    env: &Environment,
    config: &LearnerConfig,
    horizon: usize,
    seed: u64,
    replications: u64,
) -> Result<RegretCurve> {
    let mut acc = RegretAccumulator::new(regret_grid(horizon));
    for r in 0..replications {
        acc.push(&exact_regret_trace(env, config, horizon, seed, r)?)?;
    }
    Ok(acc.finish())
}

/// Least-squares slope of `log(regret)` against `log(T)`.
pub fn slope_fit(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 2 {
        return Err(invalid("points", "at least two points are required"));
    }
    for (i, (t, r)) in points.iter().enumerate() {
        if !(*t > 0.0) {
            return Err(Error::NonPositiveValue { index: i, value: *t });
        }
        if !(*r > 0.0) {
            return Err(Error::NonPositiveValue { index: i, value: *r });
        }
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|(t, _)| libm::log(*t)).collect();
    let ys: Vec<f64> = points.iter().map(|(_, r)| libm::log(*r)).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(invalid("points", "all horizons are equal"));
    }
    Ok(sxy / sxx)
}

/// Draws contexts independent of every episode stream.
pub struct GhostSampler<'a> {
    dist: &'a ContextDistribution,
    rng: StreamRng,
}

impl<'a> GhostSampler<'a> {
    pub fn new(dist: &'a ContextDistribution, seed: u64) -> Self {
        Self {
            dist,
            rng: stream(seed, Purpose::Ghost, 0, 0),
        }
    }

    pub fn sample(&mut self) -> Vector {
        self.dist.sample(&mut self.rng)
    }

    pub fn rng(&mut self) -> &mut StreamRng {
        &mut self.rng
    }
}

/// Per-round estimates of one episode, enough to replay the policy at any context.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeTrace {
    pub eta: f64,
    pub gamma: f64,
    pub arms: usize,
    /// `estimates[t][a]` is `θ̂_{t+1,a}`.
    pub estimates: Vec<Vec<Vector>>,
}

pub fn trace_episode(
    env: &Environment,
    config: &LearnerConfig,
    horizon: usize,
    seed: u64,
    replication: u64,
) -> Result<EpisodeTrace> {
    let comparator = ComparatorPolicy::new(&env.adversary, horizon);
    let mut episode = Episode::new(env, &comparator, config, horizon, seed, replication)?;
    let (eta, gamma) = (episode.state().eta(), episode.state().gamma());
    let mut estimates = Vec::with_capacity(horizon);
    while !episode.is_done() {
        estimates.push(episode.step()?.estimates);
    }
    Ok(EpisodeTrace {
        eta,
        gamma,
        arms: env.arms(),
        estimates,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PotentialCheck {
    pub comparator_arm: usize,
    /// Regret of the policy at `x` against always playing `comparator_arm`.
    pub lhs: f64,
    /// `log K / η + 2γ U_T(x) + η Σ_t Σ_a π_t(a|x) ⟨x, θ̂_{t,a}⟩²`.
    pub rhs: f64,
    /// `(1-γ) log K / η + γ U_T(x) + η Σ_t Σ_a π_t(a|x) ⟨x, θ̂_{t,a}⟩²`, the
    /// bound before it is relaxed.
    pub sharp_rhs: f64,
    pub uniform_regret: f64,
}

impl PotentialCheck {
    pub fn margin(&self) -> f64 {
        self.rhs - self.lhs
    }

    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs + 1e-9 * (1.0 + self.rhs.abs())
    }

    pub fn sharp_holds(&self) -> bool {
        self.lhs <= self.sharp_rhs + 1e-9 * (1.0 + self.sharp_rhs.abs())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PotentialReport {
    /// `max_{t,a} |η ⟨x, θ̂_{t,a}⟩|`.
    pub max_scaled_loss: f64,
    pub checks: Vec<PotentialCheck>,
}

impl PotentialReport {
    /// Whether `|η ⟨x, θ̂_{t,a}⟩| < 1` held for every round and arm.
    pub fn precondition_held(&self) -> bool {
        self.max_scaled_loss < 1.0
    }

    /// `Some(pass)` when the precondition held, `None` when the check was skipped.
    pub fn outcome(&self) -> Option<bool> {
        self.precondition_held()
            .then(|| self.checks.iter().all(PotentialCheck::holds))
    }

    pub fn min_margin(&self) -> f64 {
        self.checks
            .iter()
            .map(PotentialCheck::margin)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Both sides of the per-context exponential-weights regret bound, for every
/// fixed comparator arm.
pub fn verify_potential_inequality(trace: &EpisodeTrace, x: &[f64]) -> PotentialReport {
    let k = trace.arms;
    let (eta, gamma) = (trace.eta, trace.gamma);
    let mut cum = vec![0.0; k];
    let mut probs = vec![0.0; k];
    let mut losses = vec![0.0; k];
    let mut lhs = vec![0.0; k];
    let mut uniform = vec![0.0; k];
    let mut quadratic = 0.0;
    let mut max_scaled_loss: f64 = 0.0;

    for round in &trace.estimates {
        for (l, e) in losses.iter_mut().zip(round) {
            *l = e.dot(x);
            max_scaled_loss = max_scaled_loss.max((eta * *l).abs());
        }
        probs.copy_from_slice(&cum);
        mix_exponential_weights(&mut probs, eta, gamma);
        let played: f64 = probs.iter().zip(&losses).map(|(p, l)| p * l).sum();
        quadratic += probs.iter().zip(&losses).map(|(p, l)| p * l * l).sum::<f64>();
        let mean = losses.iter().sum::<f64>() / k as f64;
        for b in 0..k {
            lhs[b] += played - losses[b];
            uniform[b] += mean - losses[b];
        }
        for (c, l) in cum.iter_mut().zip(&losses) {
            *c += l;
        }
    }

    let log_k = libm::log(k as f64);
    let potential = if eta > 0.0 { log_k / eta } else { f64::INFINITY };
    let checks = (0..k)
        .map(|b| PotentialCheck {
            comparator_arm: b,
            lhs: lhs[b],
            rhs: potential + 2.0 * gamma * uniform[b] + eta * quadratic,
            sharp_rhs: (1.0 - gamma) * potential + gamma * uniform[b] + eta * quadratic,
            uniform_regret: uniform[b],
        })
        .collect();
    PotentialReport {
        max_scaled_loss,
        checks,
    }
}

/// A measured quantity against its theoretical bound.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundCheck {
    pub label: String,
    pub value: f64,
    /// Zero for exact enumeration.
    pub stderr: f64,
    pub bound: f64,
}

impl BoundCheck {
    pub fn margin(&self) -> f64 {
        self.bound - self.value
    }

    /// `value ≤ bound + z·stderr`, with round-off slack.
    pub fn holds(&self, z: f64) -> bool {
        self.value <= self.bound + z * self.stderr + 1e-10 * (1.0 + self.bound.abs())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorReport {
    pub exact: bool,
    pub checks: Vec<BoundCheck>,
}

impl EstimatorReport {
    pub fn all_hold(&self, z: f64) -> bool {
        self.checks.iter().all(|c| c.holds(z))
    }

    pub fn check(&self, prefix: &str) -> impl Iterator<Item = &BoundCheck> {
        let prefix = String::from(prefix);
        self.checks.iter().filter(move |c| c.label.starts_with(prefix.as_str()))
    }
}

/// Exact `E_t[θ̂_{t,a}]` of the importance-weighted estimator on a finite
/// support, enumerating every `(X_t, A_t)` outcome.
pub fn robust_expectation_exact(env: &Environment, state: &LearnerState, t: usize, a: usize) -> Result<Vector> {
    let EstimatorKind::Robust { sigma_inv } = state.estimator() else {
        return Err(invalid("estimator", "expected the importance-weighted estimator"));
    };
    let (points, weights) = env
        .dist
        .support()
        .ok_or_else(|| invalid("distribution", "exact enumeration needs finite support"))?;
    let mut mean = Vector::zeros(env.dim());
    let mut probs = vec![0.0; env.arms()];
    for (x, p) in points.iter().zip(weights) {
        state.probs_into(x, &mut probs);
        for (b, pb) in probs.iter().enumerate() {
            let loss = env.adversary.loss_unchecked(t, x, b);
            let e = robust_estimate(sigma_inv, x, b, *pb, loss, a);
            mean.axpy(p * pb, &e);
        }
    }
    Ok(mean)
}

/// Bias and second-moment checks of the learner's estimator at round `t`.
///
/// On finite supports the importance-weighted and full-information estimators
/// are enumerated exactly; the resampling estimator's bias is computed exactly
/// from the expected inverse and its second moment by Monte Carlo over
/// `samples` draws. Continuous supports fall back to Monte Carlo with ghost
/// samples.
pub fn verify_bias_and_quadratic(
    env: &Environment,
    state: &LearnerState,
    t: usize,
    ghost: &mut GhostSampler<'_>,
    samples: usize,
) -> Result<EstimatorReport> {
    let eps_sqrt_d = env.adversary.epsilon() * libm::sqrt(env.dim() as f64);
    let (k, d) = (env.arms(), env.dim());
    match (state.estimator(), env.dist.support()) {
        (EstimatorKind::Robust { sigma_inv } | EstimatorKind::FullInfo { sigma_inv }, Some((points, weights))) => {
            let full = matches!(state.estimator(), EstimatorKind::FullInfo { .. });
            let mean_x = mean_context(points, weights, d);
            let policies: Vec<Vec<f64>> = points.iter().map(|x| state.probs(x)).collect();
            let mut checks = Vec::new();
            for a in 0..k {
                // E[θ̂_a] by enumeration over (X_t, A_t)
                let mut mean = Vector::zeros(d);
                if full {
                    for (x, p) in points.iter().zip(weights) {
                        let loss = env.adversary.loss_unchecked(t, x, a);
                        mean.axpy(p * loss, &sigma_inv.mul_vec(x));
                    }
                } else {
                    mean = robust_expectation_exact(env, state, t, a)?;
                }
                let theta = env.adversary.theta(t, a);
                let bias = (mean.dot(&mean_x) - theta.dot(&mean_x)).abs();
                checks.push(BoundCheck {
                    label: format!("bias[{a}]"),
                    value: bias,
                    stderr: 0.0,
                    bound: eps_sqrt_d,
                });
            }
            let mut quadratic = 0.0;
            for ((xt, pt), pi_t) in points.iter().zip(weights).zip(&policies) {
                let whitened = sigma_inv.mul_vec(xt);
                for b in 0..k {
                    let loss_b = env.adversary.loss_unchecked(t, xt, b);
                    // outcome weight of (X_t, A_t) and the estimate it produces for arm a
                    for a in 0..k {
                        let (weight, scale) = if full {
                            if b != 0 {
                                continue;
                            }
                            (1.0, env.adversary.loss_unchecked(t, xt, a))
                        } else {
                            if a != b {
                                continue;
                            }
                            (pi_t[b], loss_b / pi_t[b])
                        };
                        for ((x0, p0), pi0) in points.iter().zip(weights).zip(&policies) {
                            let v = scale * dot(x0, &whitened);
                            quadratic += pt * weight * p0 * pi0[a] * v * v;
                        }
                    }
                }
            }
            let bound = if full {
                d as f64
            } else {
                (k * d) as f64 / state.gamma()
            };
            checks.push(BoundCheck {
                label: String::from("quadratic"),
                value: quadratic,
                stderr: 0.0,
                bound,
            });
            Ok(EstimatorReport { exact: true, checks })
        }
        (EstimatorKind::Robust { sigma_inv } | EstimatorKind::FullInfo { sigma_inv }, None) => {
            let full = matches!(state.estimator(), EstimatorKind::FullInfo { .. });
            let mut bias = vec![Welford::default(); k];
            let mut quad = Welford::default();
            let mut probs = vec![0.0; k];
            let mut probs0 = vec![0.0; k];
            for _ in 0..samples {
                let xt = ghost.sample();
                let x0 = ghost.sample();
                state.probs_into(&xt, &mut probs);
                state.probs_into(&x0, &mut probs0);
                let chosen = draw_action_with(&probs, ghost.rng().random::<f64>());
                let proj = sigma_inv.bilinear(&x0, &xt);
                let mut q = 0.0;
                for a in 0..k {
                    let est = if full {
                        proj * env.adversary.loss_unchecked(t, &xt, a)
                    } else if a == chosen {
                        proj * env.adversary.loss_unchecked(t, &xt, a) / probs[a]
                    } else {
                        0.0
                    };
                    bias[a].push(est - env.adversary.linear_loss(t, &x0, a));
                    q += probs0[a] * est * est;
                }
                quad.push(q);
            }
            let mut checks: Vec<BoundCheck> = bias
                .iter()
                .enumerate()
                .map(|(a, w)| BoundCheck {
                    label: format!("bias[{a}]"),
                    value: w.mean().abs(),
                    stderr: w.stderr(),
                    bound: eps_sqrt_d,
                })
                .collect();
            checks.push(BoundCheck {
                label: String::from("quadratic"),
                value: quad.mean(),
                stderr: quad.stderr(),
                bound: if full { d as f64 } else { (k * d) as f64 / state.gamma() },
            });
            Ok(EstimatorReport {
                exact: false,
                checks,
            })
        }
        (EstimatorKind::RealMgr { cfg, .. }, support) => {
            let mut checks = Vec::new();
            if let Some((points, weights)) = support {
                let mean_x = mean_context(points, weights, d);
                let decay = libm::exp(
                    -state.gamma() * cfg.beta() * env.bounds.lambda_min * (cfg.iterations() + 1) as f64
                        / k as f64,
                );
                let truncation_bound = env.bounds.sigma * env.bounds.param_norm * decay;
                let mut probs = vec![0.0; k];
                for a in 0..k {
                    let sigma_ta = action_covariance_exact(&env.dist, state, a)?;
                    let mean_inverse = expected_sigma_plus(&sigma_ta, cfg)?;
                    // E[θ̃_a] = E[Σ̂⁺] E[1{A=a} X ℓ(X, a)]
                    let mut moment = Vector::zeros(d);
                    for (x, p) in points.iter().zip(weights) {
                        state.probs_into(x, &mut probs);
                        moment.axpy(p * probs[a] * env.adversary.loss_unchecked(t, x, a), x);
                    }
                    let mean = mean_inverse.mul_vec(&moment);
                    let theta = env.adversary.theta(t, a);
                    let mut gap = theta.clone();
                    gap.axpy(-1.0, &mean);
                    checks.push(BoundCheck {
                        label: format!("bias[{a}]"),
                        value: gap.dot(&mean_x).abs(),
                        stderr: 0.0,
                        bound: truncation_bound,
                    });
                    let worst = points.iter().map(|x| gap.dot(x).abs()).fold(0.0, f64::max);
                    checks.push(BoundCheck {
                        label: format!("truncation[{a}]"),
                        value: worst,
                        stderr: 0.0,
                        bound: truncation_bound,
                    });
                }
            }
            let mut quad = Welford::default();
            let mut probs = vec![0.0; k];
            let mut probs0 = vec![0.0; k];
            for i in 0..samples {
                let xt = ghost.sample();
                state.probs_into(&xt, &mut probs);
                let chosen = draw_action_with(&probs, ghost.rng().random::<f64>());
                let loss = env.adversary.loss_unchecked(t, &xt, chosen);
                let rng = stream(ghost.rng().random::<u64>(), Purpose::Resampling, i as u64, t as u64);
                let q = resampled_estimate(&env.dist, state, cfg, MgrMode::Fast, rng, &xt, chosen, loss);
                let value = match support {
                    Some((points, weights)) => points
                        .iter()
                        .zip(weights)
                        .map(|(x0, p0)| {
                            state.probs_into(x0, &mut probs0);
                            let v = q.dot(x0);
                            p0 * probs0[chosen] * v * v
                        })
                        .sum(),
                    None => {
                        let x0 = ghost.sample();
                        state.probs_into(&x0, &mut probs0);
                        let v = q.dot(&x0);
                        probs0[chosen] * v * v
                    }
                };
                quad.push(value);
            }
            checks.push(BoundCheck {
                label: String::from("quadratic"),
                value: quad.mean(),
                stderr: quad.stderr(),
                bound: 3.0 * (k * d) as f64,
            });
            Ok(EstimatorReport {
                exact: false,
                checks,
            })
        }
        _ => Err(invalid(
            "estimator",
            "bias and second-moment checks apply to the robust, resampling and full-information estimators",
        )),
    }
}

fn mean_context(points: &[Vector], weights: &[f64], d: usize) -> Vector {
    let mut mean = Vector::zeros(d);
    for (x, p) in points.iter().zip(weights) {
        mean.axpy(*p, x);
    }
    mean
}

/// Running mean and variance.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Welford {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Welford {
    pub fn push(&mut self, v: f64) {
        self.n += 1.0;
        let delta = v - self.mean;
        self.mean += delta / self.n;
        self.m2 += delta * (v - self.mean);
    }

    pub fn count(&self) -> usize {
        self.n as usize
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn stderr(&self) -> f64 {
        if self.n < 2.0 {
            return 0.0;
        }
        libm::sqrt(self.m2 / (self.n - 1.0) / self.n)
    }
}
