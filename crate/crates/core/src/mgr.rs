//! Matrix Geometric Resampling: a stochastic estimate of the inverse action
//! covariance `Σ_{t,a}⁻¹ = E[1{A=a} X Xᵀ]⁻¹`.
//!
//! With fresh draws `(X(k), A(k))` from the context law and the current policy,
//! the estimate is `β I + β Σ_{k=1}^{M} A_k` where
//! `A_k = (I - β B_k) A_{k-1}`, `A_0 = I` and `B_k = 1{A(k)=a} X(k) X(k)ᵀ`.
//! Its expectation is the truncated Neumann series `β Σ_{k=0}^{M} (I - β Σ_{t,a})^k`.
//!
//! The fast form never builds a matrix: it propagates `Y_k = A_k x` and returns
//! `β Σ_{k=0}^{M} Y_k`, the estimate applied to `x`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::environment::ContextDistribution;
use crate::error::{invalid, Error, Result};
use crate::learner::{draw_action_with, Policy};
use crate::numkit::{axpy, dot, spd_factorize, Matrix, SymMatrix, Vector};

/// Step size `β` and iteration count `M`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MgrConfig {
    beta: f64,
    iterations: usize,
}

impl MgrConfig {
    pub fn new(beta: f64, iterations: usize) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(invalid("beta", format!("{beta} is not positive")));
        }
        Ok(Self { beta, iterations })
    }

    /// Also enforces `β ≤ 1/(2σ²)`, which keeps every factor `I - β B_k` a contraction.
    pub fn for_contexts(beta: f64, iterations: usize, sigma: f64) -> Result<Self> {
        let cfg = Self::new(beta, iterations)?;
        let cap = 1.0 / (2.0 * sigma * sigma);
        if beta > cap * (1.0 + 1e-12) {
            return Err(invalid("beta", format!("{beta} exceeds 1/(2 sigma^2) = {cap}")));
        }
        Ok(cfg)
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }
}

/// A stream of `(context, arm)` pairs used by the resampling procedure.
pub trait DrawSource {
    fn dim(&self) -> usize;

    /// Next draw; the slice is valid until the following call.
    fn next_draw(&mut self) -> (&[f64], usize);
}

/// Draws `X ~ D` and `A ~ π(·|X)` from a dedicated random stream.
pub struct ResamplingOracle<'a, P, R> {
    dist: &'a ContextDistribution,
    policy: &'a P,
    rng: R,
    context: Vec<f64>,
    probs: Vec<f64>,
}

impl<'a, P: Policy, R: Rng> ResamplingOracle<'a, P, R> {
    pub fn new(dist: &'a ContextDistribution, policy: &'a P, rng: R) -> Self {
        Self {
            dist,
            policy,
            rng,
            context: vec![0.0; dist.dim()],
            probs: vec![0.0; policy.arms()],
        }
    }
}

impl<P: Policy, R: Rng> DrawSource for ResamplingOracle<'_, P, R> {
    fn dim(&self) -> usize {
        self.dist.dim()
    }

    fn next_draw(&mut self) -> (&[f64], usize) {
        self.dist.sample_into(&mut self.rng, &mut self.context);
        self.policy.probs_into(&self.context, &mut self.probs);
        let arm = draw_action_with(&self.probs, self.rng.random::<f64>());
        (&self.context, arm)
    }
}

/// Same draws as [`ResamplingOracle`] on a finite support, with the policy
/// evaluated once per support point instead of once per draw.
pub struct TabulatedOracle<'a, R> {
    dist: &'a ContextDistribution,
    points: &'a [Vector],
    probs: Vec<Vec<f64>>,
    rng: R,
}

impl<'a, R: Rng> TabulatedOracle<'a, R> {
    /// Returns `None` unless `dist` has finite support.
    pub fn new<P: Policy>(dist: &'a ContextDistribution, policy: &P, rng: R) -> Option<Self> {
        let (points, _) = dist.support()?;
        let probs = points.iter().map(|x| policy.probs(x)).collect();
        Some(Self {
            dist,
            points,
            probs,
            rng,
        })
    }
}

impl<R: Rng> DrawSource for TabulatedOracle<'_, R> {
    fn dim(&self) -> usize {
        self.dist.dim()
    }

    fn next_draw(&mut self) -> (&[f64], usize) {
        let i = self.dist.support_index(self.rng.random::<f64>());
        let arm = draw_action_with(&self.probs[i], self.rng.random::<f64>());
        (&self.points[i], arm)
    }
}

/// Replays a fixed list of draws.
#[derive(Debug, Clone)]
pub struct ScriptedDraws {
    dim: usize,
    draws: Vec<(Vector, usize)>,
    next: usize,
}

impl ScriptedDraws {
    /// Panics on an empty script; use [`ScriptedDraws::with_dim`] for those.
    pub fn new(draws: Vec<(Vector, usize)>) -> Self {
        let dim = draws.first().expect("dimension of an empty script is unknown").0.dim();
        Self::with_dim(dim, draws)
    }

    pub fn with_dim(dim: usize, draws: Vec<(Vector, usize)>) -> Self {
        assert!(draws.iter().all(|(x, _)| x.dim() == dim), "scripted draws differ in dimension");
        Self { dim, draws, next: 0 }
    }

    pub fn consumed(&self) -> usize {
        self.next
    }

    pub fn rewind(&mut self) {
        self.next = 0;
    }
}

impl DrawSource for ScriptedDraws {
    fn dim(&self) -> usize {
        self.dim
    }

    fn next_draw(&mut self) -> (&[f64], usize) {
        let (x, a) = self
            .draws
            .get(self.next)
            .expect("scripted draw sequence exhausted");
        self.next += 1;
        (x, *a)
    }
}

/// Materializes `Σ̂⁺_{t,a}`; consumes exactly `M` draws.
///
/// The products `A_k` do not commute, so the result is generally not symmetric.
pub fn mgr_naive<S: DrawSource + ?Sized>(cfg: &MgrConfig, source: &mut S, a: usize) -> Matrix {
    let d = source.dim();
    let beta = cfg.beta;
    let mut product = Matrix::identity(d);
    let mut sum = Matrix::identity(d);
    let mut row = vec![0.0; d];
    for _ in 0..cfg.iterations {
        let (x, arm) = source.next_draw();
        if arm == a {
            // A ← A − β x (xᵀ A)
            row.iter_mut().for_each(|v| *v = 0.0);
            for (i, xi) in x.iter().enumerate() {
                axpy(&mut row, *xi, product.row(i));
            }
            let mut next = product.clone();
            for (i, xi) in x.iter().enumerate() {
                for (j, rj) in row.iter().enumerate() {
                    next.set(i, j, next.get(i, j) - beta * xi * rj);
                }
            }
            product = next;
        }
        sum.add_scaled(1.0, &product);
    }
    sum.scaled(beta)
}

/// `Σ̂⁺_{t,a} x` using only vector operations; consumes exactly `M` draws.
pub fn mgr_fast<S: DrawSource + ?Sized>(
    cfg: &MgrConfig,
    source: &mut S,
    a: usize,
    x: &[f64],
) -> Vector {
    let beta = cfg.beta;
    let mut y = x.to_vec();
    let mut total = x.to_vec();
    for _ in 0..cfg.iterations {
        let (draw, arm) = source.next_draw();
        if arm == a {
            let step = beta * dot(&y, draw);
            axpy(&mut y, -step, draw);
        }
        axpy(&mut total, 1.0, &y);
    }
    total.iter_mut().for_each(|v| *v *= beta);
    Vector::from_vec_unchecked(total)
}

/// [`mgr_fast`] for every arm from one shared sequence of `M` draws.
pub fn mgr_all_arms_fast<S: DrawSource + ?Sized>(
    cfg: &MgrConfig,
    source: &mut S,
    arms: usize,
    x: &[f64],
) -> Vec<Vector> {
    let beta = cfg.beta;
    let mut ys: Vec<Vec<f64>> = vec![x.to_vec(); arms];
    let mut totals: Vec<Vec<f64>> = vec![x.to_vec(); arms];
    for _ in 0..cfg.iterations {
        let (draw, arm) = source.next_draw();
        if arm < arms {
            let y = &mut ys[arm];
            let step = beta * dot(y, draw);
            axpy(y, -step, draw);
        }
        for (total, y) in totals.iter_mut().zip(&ys) {
            axpy(total, 1.0, y);
        }
    }
    totals
        .into_iter()
        .map(|mut t| {
            t.iter_mut().for_each(|v| *v *= beta);
            Vector::from_vec_unchecked(t)
        })
        .collect()
}

/// `Σ_{t,a} = Σ_i p_i π(a|x_i) x_i x_iᵀ` on a finite support.
pub fn action_covariance_exact<P: Policy + ?Sized>(
    dist: &ContextDistribution,
    policy: &P,
    a: usize,
) -> Result<SymMatrix> {
    let (points, probs) = dist
        .support()
        .ok_or_else(|| invalid("distribution", "exact action covariance needs finite support"))?;
    let mut out = SymMatrix::zeros(dist.dim());
    let mut pi = vec![0.0; policy.arms()];
    for (x, p) in points.iter().zip(probs) {
        policy.probs_into(x, &mut pi);
        out.add_outer(p * pi[a], x);
    }
    match spd_factorize(&out) {
        Ok(_) => Ok(out),
        Err(Error::NotPositiveDefinite { pivot, .. }) => {
            Err(Error::SingularCovariance { lambda_min: pivot })
        }
        Err(e) => Err(e),
    }
}

/// Exact expectation of [`mgr_naive`]: `β Σ_{k=0}^{M} (I - β Σ_{t,a})^k`.
pub fn expected_sigma_plus(sigma_ta: &SymMatrix, cfg: &MgrConfig) -> Result<SymMatrix> {
    spd_factorize(sigma_ta)?;
    let d = sigma_ta.dim();
    let mut step = Matrix::identity(d);
    step.add_scaled(-cfg.beta, sigma_ta);
    let mut power = Matrix::identity(d);
    let mut sum = Matrix::identity(d);
    for _ in 0..cfg.iterations {
        power = power.mul_mat(&step);
        sum.add_scaled(1.0, &power);
    }
    Ok(SymMatrix::symmetrized(sum.scaled(cfg.beta)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn e1() -> Vector {
        Vector::basis(2, 0)
    }

    fn script(draws: &[(&[f64], usize)]) -> ScriptedDraws {
        ScriptedDraws::with_dim(
            2,
            draws
                .iter()
                .map(|(x, a)| (Vector::new(x.to_vec()).unwrap(), *a))
                .collect(),
        )
    }

    #[test]
    fn naive_examples() {
        let cfg = MgrConfig::new(0.5, 0).unwrap();
        let mut s = script(&[(&[1.0, 0.0], 0)]);
        assert_eq!(mgr_naive(&cfg, &mut s, 0), Matrix::identity(2).scaled(0.5));
        assert_eq!(s.consumed(), 0);

        let cfg = MgrConfig::new(0.5, 1).unwrap();
        let mut s = script(&[(&[1.0, 0.0], 0)]);
        assert_eq!(mgr_naive(&cfg, &mut s, 0), Matrix::diagonal(&[0.75, 1.0]));
        assert_eq!(s.consumed(), 1);

        let mut s = script(&[(&[1.0, 0.0], 1)]);
        assert_eq!(mgr_naive(&cfg, &mut s, 0), Matrix::identity(2));
    }

    #[test]
    fn fast_examples() {
        let cfg = MgrConfig::new(0.5, 0).unwrap();
        let mut s = script(&[]);
        assert_eq!(mgr_fast(&cfg, &mut s, 0, &[2.0, -1.0]).as_slice(), &[1.0, -0.5]);

        let cfg = MgrConfig::new(0.5, 1).unwrap();
        let mut s = script(&[(&[1.0, 0.0], 0)]);
        assert_eq!(mgr_fast(&cfg, &mut s, 0, &e1()).as_slice(), &[0.75, 0.0]);

        let cfg = MgrConfig::new(0.25, 5).unwrap();
        let mut s = script(&[(&[1.0, 0.0][..], 1); 5]);
        let q = mgr_fast(&cfg, &mut s, 0, &[0.4, 0.2]);
        assert!(q.max_abs_diff(&[0.25 * 6.0 * 0.4, 0.25 * 6.0 * 0.2]) < 1e-15);
    }

    #[test]
    fn all_arms_matches_single_arm_runs() {
        // K = 2, M = 2, both draws are e1, first matches arm 0 and second arm 1.
        // Arm 0: Y = (e1, e1/2, e1/2) so q = 0.5 * 2 e1 = e1.
        // Arm 1: Y = (e1, e1, e1/2) so q = 0.5 * 2.5 e1 = 1.25 e1.
        let cfg = MgrConfig::new(0.5, 2).unwrap();
        let draws: &[(&[f64], usize)] = &[(&[1.0, 0.0], 0), (&[1.0, 0.0], 1)];
        let all = mgr_all_arms_fast(&cfg, &mut script(draws), 2, &e1());
        assert!(all[0].max_abs_diff(&[1.0, 0.0]) < 1e-15);
        assert!(all[1].max_abs_diff(&[1.25, 0.0]) < 1e-15);
        for (a, q) in all.iter().enumerate() {
            let single = mgr_fast(&cfg, &mut script(draws), a, &e1());
            assert_eq!(q, &single);
        }

        let one = mgr_all_arms_fast(&cfg, &mut script(&[(&[0.3, 0.1][..], 0); 2]), 1, &[1.0, 1.0]);
        let single = mgr_fast(&cfg, &mut script(&[(&[0.3, 0.1][..], 0); 2]), 0, &[1.0, 1.0]);
        assert_eq!(one, vec![single]);

        let zero = MgrConfig::new(0.5, 0).unwrap();
        let all = mgr_all_arms_fast(&zero, &mut script(&[]), 3, &[2.0, 4.0]);
        assert!(all.iter().all(|q| q.as_slice() == [1.0, 2.0]));
    }

    struct Fixed(Vec<f64>);

    impl Policy for Fixed {
        fn arms(&self) -> usize {
            self.0.len()
        }
        fn probs_into(&self, _x: &[f64], out: &mut [f64]) {
            out.copy_from_slice(&self.0);
        }
    }

    #[test]
    fn action_covariance_examples() {
        let point = ContextDistribution::finite_support(vec![e1()], vec![1.0]).unwrap();
        // rank one, so singular
        assert!(matches!(
            action_covariance_exact(&point, &Fixed(vec![0.5, 0.5]), 0),
            Err(Error::SingularCovariance { .. })
        ));

        let two = ContextDistribution::finite_support(
            vec![e1(), Vector::basis(2, 1)],
            vec![0.5, 0.5],
        )
        .unwrap();
        let s = action_covariance_exact(&two, &Fixed(vec![0.5, 0.5]), 1).unwrap();
        assert_eq!(s, SymMatrix::diagonal(&[0.25, 0.25]));

        let k = 4.0;
        let s = action_covariance_exact(&two, &Fixed(vec![0.25; 4]), 2).unwrap();
        let full = two.exact_covariance().unwrap();
        assert!(s.max_abs_diff(&full.scaled(1.0 / k)) < 1e-15);
    }

    #[test]
    fn expected_sigma_plus_examples() {
        let s = SymMatrix::diagonal(&[0.5, 0.25]);
        let zero = expected_sigma_plus(&s, &MgrConfig::new(0.5, 0).unwrap()).unwrap();
        assert_eq!(zero, SymMatrix::identity(2).scaled(0.5));

        let one = expected_sigma_plus(&s, &MgrConfig::new(0.5, 1).unwrap()).unwrap();
        assert!(one.max_abs_diff(&Matrix::diagonal(&[0.875, 0.9375])) < 1e-15);

        let many = expected_sigma_plus(&s, &MgrConfig::new(0.5, 200).unwrap()).unwrap();
        assert!(many.max_abs_diff(&Matrix::diagonal(&[2.0, 4.0])) < 1e-10);

        let bad = SymMatrix::diagonal(&[0.5, 0.0]);
        assert!(expected_sigma_plus(&bad, &MgrConfig::new(0.5, 3).unwrap()).is_err());
    }

    #[test]
    fn beta_cap_is_enforced() {
        assert!(MgrConfig::for_contexts(0.5, 3, 1.0).is_ok());
        assert!(MgrConfig::for_contexts(0.6, 3, 1.0).is_err());
        assert!(MgrConfig::new(0.0, 3).is_err());
    }
}
