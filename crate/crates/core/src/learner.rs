//! The exponential-weights policy template and its loss estimators.
//!
//! A learner keeps one cumulative loss-parameter estimate per arm. Given a
//! context `x`, arm `a` is weighted by `exp(-η ⟨x, Θ̂_a⟩)` and the resulting
//! distribution is mixed with uniform exploration `γ/K`. The estimators differ
//! in how a single bandit observation is turned into per-arm estimates:
//!
//! * robust: inverse-propensity weighting with the known context covariance,
//! * real: a resampled estimate of the inverse action covariance (see [`crate::mgr`]),
//! * full-information: every arm's loss at the observed context,
//! * counterfactual: exact past loss functions, without exploration.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::mgr::MgrConfig;
use crate::numkit::{dot, Matrix, SymMatrix, Vector};

/// Anything that maps a context to a distribution over arms.
pub trait Policy {
    fn arms(&self) -> usize;

    /// Writes `π(·|x)` into `out`, which has length [`Policy::arms`].
    fn probs_into(&self, x: &[f64], out: &mut [f64]);

    fn probs(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.arms()];
        self.probs_into(x, &mut out);
        out
    }
}

/// How a resampled inverse covariance is materialized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MgrMode {
    /// Build the full `d×d` matrix.
    Naive,
    /// Only propagate the vector `Σ̂⁺ x`.
    Fast,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EstimatorKind {
    Robust { sigma_inv: SymMatrix },
    RealMgr { cfg: MgrConfig, mode: MgrMode },
    FullInfo { sigma_inv: SymMatrix },
    Counterfactual,
    /// Never learns; combine with `γ = 1` for the uniform baseline.
    Uniform,
}

/// Per-round state of the exponential-weights learner.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnerState {
    arms: usize,
    dim: usize,
    cum_estimates: Vec<f64>,
    eta: f64,
    gamma: f64,
    round: usize,
    estimator: EstimatorKind,
}

impl LearnerState {
    /// Fresh learner at round 1 with all cumulative estimates zero.
    pub fn new(
        arms: usize,
        dim: usize,
        eta: f64,
        gamma: f64,
        estimator: EstimatorKind,
    ) -> Result<Self> {
        if arms == 0 || dim == 0 {
            return Err(invalid("learner", "K and d must be at least 1"));
        }
        if !(eta >= 0.0 && eta.is_finite()) {
            return Err(invalid("eta", format!("{eta} is not a finite non-negative rate")));
        }
        if !(0.0..=1.0).contains(&gamma) {
            return Err(invalid("gamma", format!("{gamma} outside [0, 1]")));
        }
        match &estimator {
            EstimatorKind::Robust { sigma_inv } | EstimatorKind::FullInfo { sigma_inv }
                if sigma_inv.dim() != dim =>
            {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: sigma_inv.dim(),
                });
            }
            EstimatorKind::Robust { .. } if gamma == 0.0 => {
                return Err(invalid("gamma", "importance weighting needs gamma > 0"));
            }
            _ => {}
        }
        Ok(Self {
            arms,
            dim,
            cum_estimates: vec![0.0; arms * dim],
            eta,
            gamma,
            round: 1,
            estimator,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// The round whose decision this state is about to make.
    pub fn round(&self) -> usize {
        self.round
    }

    pub fn estimator(&self) -> &EstimatorKind {
        &self.estimator
    }

    /// `Θ̂_{t-1,a}`.
    pub fn cum_estimate(&self, a: usize) -> &[f64] {
        &self.cum_estimates[a * self.dim..(a + 1) * self.dim]
    }

    /// `⟨x, Θ̂_{t-1,a}⟩` for every arm.
    pub fn scores(&self, x: &[f64], out: &mut [f64]) {
        for (a, s) in out.iter_mut().enumerate() {
            *s = dot(x, self.cum_estimate(a));
        }
    }

    /// Policy with extra per-arm offsets added to the cumulative scores.
    pub fn probs_with_offsets(&self, x: &[f64], offsets: &[f64], out: &mut [f64]) {
        self.scores(x, out);
        for (s, o) in out.iter_mut().zip(offsets) {
            *s += o;
        }
        mix_exponential_weights(out, self.eta, self.gamma);
    }

    /// Adds per-arm estimates and advances the round.
    pub fn update(mut self, estimates: &[Vector]) -> Result<Self> {
        if estimates.len() != self.arms {
            return Err(Error::DimensionMismatch {
                expected: self.arms,
                found: estimates.len(),
            });
        }
        for (a, e) in estimates.iter().enumerate() {
            if e.dim() != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    found: e.dim(),
                });
            }
            if e.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteEstimate { arm: a });
            }
        }
        for (a, e) in estimates.iter().enumerate() {
            let dim = self.dim;
            crate::numkit::axpy(&mut self.cum_estimates[a * dim..(a + 1) * dim], 1.0, e);
        }
        self.round += 1;
        Ok(self)
    }

    /// Adds an estimate for a single arm and advances the round; the other
    /// arms receive zero.
    pub fn update_single(mut self, arm: usize, estimate: &[f64]) -> Result<Self> {
        if estimate.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: estimate.len(),
            });
        }
        if estimate.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteEstimate { arm });
        }
        let dim = self.dim;
        crate::numkit::axpy(&mut self.cum_estimates[arm * dim..(arm + 1) * dim], 1.0, estimate);
        self.round += 1;
        Ok(self)
    }
}

impl Policy for LearnerState {
    fn arms(&self) -> usize {
        self.arms
    }

    fn probs_into(&self, x: &[f64], out: &mut [f64]) {
        self.scores(x, out);
        mix_exponential_weights(out, self.eta, self.gamma);
    }
}

/// Turns cumulative scores `s_a` in place into
/// `(1-γ) softmax(-η s)_a + γ/K`, subtracting the largest exponent first.
pub fn mix_exponential_weights(scores: &mut [f64], eta: f64, gamma: f64) {
    let k = scores.len() as f64;
    let mut top = f64::NEG_INFINITY;
    for s in scores.iter_mut() {
        *s *= -eta;
        top = top.max(*s);
    }
    let mut total = 0.0;
    for s in scores.iter_mut() {
        *s = libm::exp(*s - top);
        total += *s;
    }
    let mut mixed_total = 0.0;
    for s in scores.iter_mut() {
        *s = (1.0 - gamma) * *s / total + gamma / k;
        mixed_total += *s;
    }
    for s in scores.iter_mut() {
        *s /= mixed_total;
    }
}

/// `π_t(·|x)` for the given state.
pub fn policy_probs(state: &LearnerState, x: &[f64]) -> Vec<f64> {
    state.probs(x)
}

/// Inverse-CDF arm selection for a uniform draw `u ∈ [0, 1)`, arms in index order.
pub fn draw_action_with(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (a, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return a;
        }
    }
    // round-off: fall back to the last arm with positive mass
    probs.iter().rposition(|p| *p > 0.0).unwrap_or(probs.len() - 1)
}

pub fn draw_action<R: rand::Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    draw_action_with(probs, rng.random::<f64>())
}

/// `1{chosen = a} / π(chosen|x) · Σ⁻¹ x · loss`.
pub fn robust_estimate(
    sigma_inv: &SymMatrix,
    x: &[f64],
    chosen: usize,
    prob_chosen: f64,
    loss: f64,
    a: usize,
) -> Vector {
    if a != chosen {
        return Vector::zeros(x.len());
    }
    sigma_inv.mul_vec(x).scaled(loss / prob_chosen)
}

/// Output of a resampling run: the full matrix or its product with the context.
#[derive(Debug, Clone, Copy)]
pub enum SigmaPlus<'a> {
    Matrix(&'a Matrix),
    Applied(&'a [f64]),
}

/// `Σ̂⁺_{t,a} x · loss · 1{chosen = a}`.
pub fn real_estimate(
    sigma_plus: SigmaPlus<'_>,
    x: &[f64],
    chosen: usize,
    loss: f64,
    a: usize,
) -> Vector {
    if a != chosen {
        return Vector::zeros(x.len());
    }
    match sigma_plus {
        SigmaPlus::Matrix(m) => m.mul_vec(x).scaled(loss),
        SigmaPlus::Applied(q) => Vector::from_vec_unchecked(q.iter().map(|v| v * loss).collect()),
    }
}

/// `Σ⁻¹ x ℓ_t(x, a)` for every arm.
pub fn fullinfo_estimate(sigma_inv: &SymMatrix, x: &[f64], losses: &[f64]) -> Vec<Vector> {
    let whitened = sigma_inv.mul_vec(x);
    losses.iter().map(|l| whitened.scaled(*l)).collect()
}

/// Exponential weights on the exact cumulative past losses at `x`, no exploration.
pub fn counterfactual_weights(
    loss_oracle: impl Fn(usize, &[f64], usize) -> f64,
    arms: usize,
    t: usize,
    x: &[f64],
    eta: f64,
) -> Vec<f64> {
    let mut scores: Vec<f64> = (0..arms)
        .map(|a| (1..t).map(|s| loss_oracle(s, x, a)).sum())
        .collect();
    mix_exponential_weights(&mut scores, eta, 0.0);
    scores
}

/// Which tuned values were clamped to keep the regret guarantees valid.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ClampFlags {
    pub eta: bool,
    pub gamma: bool,
    pub log_argument: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TunedParams {
    pub eta: f64,
    pub gamma: f64,
    pub beta: Option<f64>,
    pub iterations: Option<usize>,
    pub clamped: ClampFlags,
    pub warnings: Vec<String>,
}

/// Exploration is capped here; beyond it the `2γT` term alone exceeds the
/// trivial bound of `T`.
pub const GAMMA_CAP: f64 = 0.5;

fn clamp_gamma(gamma: f64, flags: &mut ClampFlags, warnings: &mut Vec<String>) -> f64 {
    if gamma >= GAMMA_CAP {
        flags.gamma = true;
        warnings.push(format!(
            "gamma = {gamma:.6} is infeasible at this horizon; clamped to {GAMMA_CAP}"
        ));
        GAMMA_CAP
    } else {
        gamma
    }
}

/// Rates for the importance-weighted learner.
pub fn tune_robust(horizon: usize, arms: usize, dim: usize, sigma: f64, lambda_min: f64) -> TunedParams {
    let t = horizon as f64;
    let kd = (arms * dim) as f64;
    let log_k = libm::log(arms as f64);
    let mut clamped = ClampFlags::default();
    let mut warnings = Vec::new();

    let eta = libm::pow(t, -2.0 / 3.0) * libm::pow(kd, -1.0 / 3.0) * libm::pow(log_k, 2.0 / 3.0);
    let gamma = libm::pow(t, -1.0 / 3.0) * libm::pow(kd * log_k, 1.0 / 3.0);
    let gamma = clamp_gamma(gamma, &mut clamped, &mut warnings);

    let cap = gamma * lambda_min / (arms as f64 * sigma * sigma);
    let eta = if eta > cap {
        clamped.eta = true;
        warnings.push(format!(
            "eta = {eta:.6e} exceeds gamma*lambda_min/(K sigma^2) = {cap:.6e}; clamped"
        ));
        cap
    } else {
        eta
    };
    TunedParams {
        eta,
        gamma,
        beta: None,
        iterations: None,
        clamped,
        warnings,
    }
}

/// Rates, step size and iteration count for the resampling learner.
pub fn tune_real(
    horizon: usize,
    arms: usize,
    dim: usize,
    sigma: f64,
    param_norm: f64,
    lambda_min: f64,
) -> TunedParams {
    let t = horizon as f64;
    let k = arms as f64;
    let s2 = sigma * sigma;
    let mut clamped = ClampFlags::default();
    let mut warnings = Vec::new();

    let arg = t * s2 * param_norm * param_norm;
    let log_term = if arg <= core::f64::consts::E {
        clamped.log_argument = true;
        warnings.push(format!(
            "T sigma^2 R^2 = {arg:.4} <= e; log term clamped to 1"
        ));
        1.0
    } else {
        libm::log(arg)
    };

    let gamma = libm::sqrt(log_term / t);
    let gamma = clamp_gamma(gamma, &mut clamped, &mut warnings);
    let beta = 1.0 / (2.0 * s2);
    let iterations = libm::ceil(k * s2 * log_term / (gamma * lambda_min)) as usize;
    let eta = libm::sqrt(libm::log(k) / (dim as f64 * k * t * log_term));
    let cap = 2.0 / (iterations as f64 + 1.0);
    let eta = if eta > cap {
        clamped.eta = true;
        warnings.push(format!("eta = {eta:.6e} exceeds 2/(M+1) = {cap:.6e}; clamped"));
        cap
    } else {
        eta
    };
    TunedParams {
        eta,
        gamma,
        beta: Some(beta),
        iterations: Some(iterations),
        clamped,
        warnings,
    }
}

/// `η = √(d log K / T)` capped at `λ_min/σ²`, no exploration.
pub fn tune_fullinfo(horizon: usize, arms: usize, dim: usize, sigma: f64, lambda_min: f64) -> TunedParams {
    let mut clamped = ClampFlags::default();
    let mut warnings = Vec::new();
    let eta = libm::sqrt(dim as f64 * libm::log(arms as f64) / horizon as f64);
    let cap = lambda_min / (sigma * sigma);
    let eta = if eta > cap {
        clamped.eta = true;
        warnings.push(format!("eta = {eta:.6e} exceeds lambda_min/sigma^2 = {cap:.6e}; clamped"));
        cap
    } else {
        eta
    };
    TunedParams {
        eta,
        gamma: 0.0,
        beta: None,
        iterations: None,
        clamped,
        warnings,
    }
}

/// `η = √(8 log K / T)`, no exploration.
pub fn tune_counterfactual(horizon: usize, arms: usize) -> TunedParams {
    TunedParams {
        eta: libm::sqrt(8.0 * libm::log(arms as f64) / horizon as f64),
        gamma: 0.0,
        beta: None,
        iterations: None,
        clamped: ClampFlags::default(),
        warnings: Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::Vector;
    use alloc::vec;

    fn state(arms: usize, dim: usize, eta: f64, gamma: f64) -> LearnerState {
        LearnerState::new(
            arms,
            dim,
            eta,
            gamma,
            EstimatorKind::Robust {
                sigma_inv: SymMatrix::identity(dim),
            },
        )
        .unwrap()
    }

    #[test]
    fn uniform_at_first_round() {
        let s = state(4, 2, 0.7, 0.1);
        for p in policy_probs(&s, &[0.3, -0.2]) {
            assert!((p - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_rate_is_uniform() {
        let s = state(2, 1, 0.0, 0.2)
            .update(&[Vector::new(vec![3.0]).unwrap(), Vector::new(vec![-1.0]).unwrap()])
            .unwrap();
        for p in policy_probs(&s, &[1.0]) {
            assert!((p - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn hand_computed_mixture() {
        let ln3 = libm::log(3.0);
        let s = state(2, 1, 1.0, 0.2)
            .update(&[Vector::zeros(1), Vector::new(vec![ln3]).unwrap()])
            .unwrap();
        let p = policy_probs(&s, &[1.0]);
        assert!((p[0] - 0.7).abs() < 1e-12);
        assert!((p[1] - 0.3).abs() < 1e-12);
    }

    #[test]
    fn huge_scores_do_not_overflow() {
        let s = state(3, 1, 10.0, 0.3)
            .update(&[
                Vector::new(vec![-1e6]).unwrap(),
                Vector::new(vec![1e6]).unwrap(),
                Vector::zeros(1),
            ])
            .unwrap();
        let p = policy_probs(&s, &[1.0]);
        assert!(p.iter().all(|v| v.is_finite()));
        assert!((p[0] - (0.7 + 0.1)).abs() < 1e-12);
        assert!((p[1] - 0.1).abs() < 1e-12);
    }

    #[test]
    fn action_draws() {
        assert_eq!(draw_action_with(&[1.0, 0.0], 0.999_999), 0);
        assert_eq!(draw_action_with(&[0.7, 0.3], 0.69), 0);
        assert_eq!(draw_action_with(&[0.7, 0.3], 0.71), 1);
        assert_eq!(draw_action_with(&[0.5, 0.5, 0.0], 1.0), 1);

        let mut rng = crate::rng::stream(11, crate::rng::Purpose::Action, 0, 0);
        let n = 100_000;
        let ones = (0..n).filter(|_| draw_action(&[0.5, 0.5], &mut rng) == 0).count();
        assert!((ones as f64 / n as f64 - 0.5).abs() < 0.01);
    }

    #[test]
    fn robust_estimate_examples() {
        let id = SymMatrix::identity(2);
        let e = robust_estimate(&id, &[1.0, 0.0], 0, 0.5, 0.8, 0);
        assert!(e.max_abs_diff(&[1.6, 0.0]) < 1e-15);
        assert_eq!(robust_estimate(&id, &[1.0, 0.0], 0, 0.5, 0.8, 1).as_slice(), &[0.0, 0.0]);
        assert_eq!(robust_estimate(&id, &[1.0, 2.0], 1, 0.5, 0.0, 1).as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn real_estimate_examples() {
        let sp = Matrix::identity(2).scaled(0.5);
        assert_eq!(
            real_estimate(SigmaPlus::Matrix(&sp), &[1.0, 0.0], 0, 1.0, 1).as_slice(),
            &[0.0, 0.0]
        );
        assert_eq!(
            real_estimate(SigmaPlus::Matrix(&sp), &[1.0, 0.0], 0, 1.0, 0).as_slice(),
            &[0.5, 0.0]
        );
        assert_eq!(
            real_estimate(SigmaPlus::Applied(&[0.5, 0.0]), &[1.0, 0.0], 0, 1.0, 0).as_slice(),
            &[0.5, 0.0]
        );
    }

    #[test]
    fn fullinfo_examples() {
        let e = fullinfo_estimate(&SymMatrix::identity(2), &[1.0, 0.0], &[0.5, -0.5]);
        assert_eq!(e[0].as_slice(), &[0.5, 0.0]);
        assert_eq!(e[1].as_slice(), &[-0.5, 0.0]);
        let z = fullinfo_estimate(&SymMatrix::identity(2), &[1.0, 0.3], &[0.0, 0.0]);
        assert!(z.iter().all(|v| v.iter().all(|c| *c == 0.0)));
        let half_inv = SymMatrix::diagonal(&[2.0, 2.0]);
        assert_eq!(fullinfo_estimate(&half_inv, &[1.0, 0.0], &[1.0])[0].as_slice(), &[2.0, 0.0]);
    }

    #[test]
    fn counterfactual_examples() {
        let w = counterfactual_weights(|_, _, a| a as f64, 3, 1, &[1.0], 2.0);
        assert!(w.iter().all(|p| (p - 1.0 / 3.0).abs() < 1e-15));
        let w = counterfactual_weights(|_, _, a| a as f64, 2, 5, &[1.0], 0.0);
        assert!(w.iter().all(|p| (p - 0.5).abs() < 1e-15));
        let ln2 = libm::log(2.0);
        let w = counterfactual_weights(|_, _, a| if a == 1 { ln2 } else { 0.0 }, 2, 2, &[1.0], 1.0);
        assert!((w[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((w[1] - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn update_examples() {
        let s = state(2, 2, 0.1, 0.1);
        let u = s.clone().update(&[Vector::zeros(2), Vector::zeros(2)]).unwrap();
        assert_eq!(u.round(), 2);
        assert_eq!(u.cum_estimate(0), s.cum_estimate(0));

        let a = [Vector::new(vec![0.5, 1.0]).unwrap(), Vector::new(vec![0.25, -1.0]).unwrap()];
        let b = [Vector::new(vec![0.25, 2.0]).unwrap(), Vector::new(vec![1.0, 0.5]).unwrap()];
        let two = s.clone().update(&a).unwrap().update(&b).unwrap();
        let summed: Vec<Vector> = a
            .iter()
            .zip(&b)
            .map(|(x, y)| {
                let mut z = x.clone();
                z.axpy(1.0, y);
                z
            })
            .collect();
        let one = s.update(&summed).unwrap();
        assert_eq!(two.cum_estimate(0), one.cum_estimate(0));
        assert_eq!(two.cum_estimate(1), one.cum_estimate(1));

        let scalar = state(1, 1, 0.1, 0.1)
            .update(&[Vector::new(vec![0.5]).unwrap()])
            .unwrap()
            .update(&[Vector::new(vec![0.25]).unwrap()])
            .unwrap();
        assert_eq!(scalar.cum_estimate(0), &[0.75]);
    }

    #[test]
    fn non_finite_update_is_rejected() {
        let s = state(1, 1, 0.1, 0.1);
        let bad = Vector::from_vec_unchecked(vec![f64::NAN]);
        assert_eq!(s.update(&[bad]), Err(Error::NonFiniteEstimate { arm: 0 }));
    }

    #[test]
    fn tune_robust_reference_values() {
        let p = tune_robust(1000, 2, 2, 1.0, 0.25);
        let eta = libm::pow(1000.0, -2.0 / 3.0) * libm::pow(4.0, -1.0 / 3.0)
            * libm::pow(libm::log(2.0), 2.0 / 3.0);
        assert!((p.eta - eta).abs() < 1e-15);
        assert!((p.eta - 0.004934).abs() < 1e-6);
        assert!((p.gamma - 0.14048).abs() < 1e-5);
        assert!(!p.clamped.eta && !p.clamped.gamma);

        let tiny = tune_robust(1, 2, 2, 1.0, 0.25);
        assert!(tiny.clamped.gamma);
        assert!(tiny.gamma < 1.0 && tiny.gamma > 0.0);
        assert!(tiny.eta <= tiny.gamma * 0.25 / 2.0);
        assert!(!tiny.warnings.is_empty());
    }

    #[test]
    fn tune_real_reference_values() {
        let p = tune_real(10_000, 2, 2, 1.0, 1.0, 0.25);
        assert!((p.gamma - 0.03035).abs() < 1e-5);
        assert_eq!(p.iterations, Some(2428));
        assert_eq!(p.beta, Some(0.5));
        assert!(p.clamped.eta);
        assert!((p.eta - 2.0 / 2429.0).abs() < 1e-15);
        assert!((p.eta - 8.234e-4).abs() < 1e-7);

        let small = tune_real(2, 2, 2, 1.0, 1.0, 0.25);
        assert!(small.clamped.log_argument);
        assert_eq!(small.gamma, GAMMA_CAP);
        assert!(small.clamped.gamma);

        let wide = tune_real(10_000, 2, 2, 2.0, 0.25, 0.25);
        assert_eq!(wide.beta, Some(0.125));
    }
}
