//! Standard environments used by the experiment suites and the acceptance checks.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::environment::{AdversaryKind, AdversarySpec, ContextDistribution, Environment, MisspecSpec};
use crate::error::{invalid, Result};
use crate::numkit::Vector;
use crate::rng::{stream, Purpose, StreamRng};

/// The `2d` signed basis vectors `±e_i`, uniformly weighted.
///
/// Covariance `I/d`, so `σ = 1` and `λ_min = 1/d`.
pub fn signed_axes(dim: usize) -> Result<ContextDistribution> {
    if dim == 0 {
        return Err(invalid("dim", "must be at least 1"));
    }
    let mut points = Vec::with_capacity(2 * dim);
    for i in 0..dim {
        points.push(Vector::basis(dim, i));
        points.push(Vector::basis(dim, i).scaled(-1.0));
    }
    let probs = alloc::vec![1.0 / (2 * dim) as f64; 2 * dim];
    ContextDistribution::finite_support(points, probs)
}

/// The basis vectors `e_i` plus the normalized all-ones direction, uniformly weighted.
///
/// Every coordinate is non-negative and the mean is far from zero.
pub fn positive_cone(dim: usize) -> Result<ContextDistribution> {
    if dim == 0 {
        return Err(invalid("dim", "must be at least 1"));
    }
    let mut points: Vec<Vector> = (0..dim).map(|i| Vector::basis(dim, i)).collect();
    if dim > 1 {
        points.push(Vector::from_vec_unchecked(alloc::vec![1.0 / libm::sqrt(dim as f64); dim]));
    }
    let n = points.len();
    ContextDistribution::finite_support(points, alloc::vec![1.0 / n as f64; n])
}

fn instance_rng(seed: u64) -> StreamRng {
    stream(seed, Purpose::Instance, 0, 0)
}

fn gaussian_unit(rng: &mut StreamRng, dim: usize) -> Vector {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let n = libm::sqrt(v.iter().map(|c| c * c).sum());
        if n > 1e-6 {
            return Vector::from_vec_unchecked(v.into_iter().map(|c| c / n).collect());
        }
    }
}

/// Random unit directions, one per arm.
pub fn random_parameters(arms: usize, dim: usize, norm: f64, seed: u64) -> Vec<Vector> {
    let mut rng = instance_rng(seed);
    (0..arms).map(|_| gaussian_unit(&mut rng, dim).scaled(norm)).collect()
}

/// Random parameters with entries in `[low, high]`.
pub fn random_nonnegative_parameters(arms: usize, dim: usize, low: f64, high: f64, seed: u64) -> Vec<Vector> {
    let mut rng = instance_rng(seed);
    (0..arms)
        .map(|_| Vector::from_vec_unchecked((0..dim).map(|_| rng.random_range(low..=high)).collect()))
        .collect()
}

/// Sign-bump misspecification along random unit directions.
pub fn random_sign_bump(arms: usize, dim: usize, epsilon: f64, seed: u64) -> MisspecSpec {
    let mut rng = stream(seed, Purpose::Instance, 1, 0);
    MisspecSpec::sign_bump((0..arms).map(|_| gaussian_unit(&mut rng, dim)).collect(), epsilon)
}

/// Fixed random linear losses over [`signed_axes`] contexts, with optional
/// sign-bump misspecification of size `epsilon`.
pub fn linear_benchmark(arms: usize, dim: usize, horizon: usize, epsilon: f64, seed: u64) -> Result<Environment> {
    let dist = signed_axes(dim)?;
    let theta = random_parameters(arms, dim, 1.0, seed);
    let misspec = (epsilon > 0.0).then(|| random_sign_bump(arms, dim, epsilon, seed));
    let adv = AdversarySpec::new_bounded(AdversaryKind::Constant { theta }, misspec, horizon, dist.sigma())?;
    Environment::new(dist, adv)
}

/// Rows of the Sylvester Hadamard matrix as parameters over [`signed_axes`]
/// contexts: every context separates the arms into two groups with loss gap
/// `2/√d`. Needs `dim` a power of two and `arms ≤ dim`.
pub fn hadamard_benchmark(arms: usize, dim: usize, horizon: usize, epsilon: f64, seed: u64) -> Result<Environment> {
    if !dim.is_power_of_two() || arms == 0 || arms > dim {
        return Err(invalid("dim", "needs a power of two no smaller than the number of arms"));
    }
    let dist = signed_axes(dim)?;
    let scale = 1.0 / libm::sqrt(dim as f64);
    let theta = (0..arms)
        .map(|a| {
            Vector::from_vec_unchecked(
                (0..dim)
                    .map(|i| if (a & i).count_ones() % 2 == 0 { scale } else { -scale })
                    .collect(),
            )
        })
        .collect();
    let misspec = (epsilon > 0.0).then(|| random_sign_bump(arms, dim, epsilon, seed));
    let adv = AdversarySpec::new_bounded(AdversaryKind::Constant { theta }, misspec, horizon, dist.sigma())?;
    Environment::new(dist, adv)
}

/// Drifting linear losses over [`signed_axes`] contexts.
pub fn drifting_benchmark(arms: usize, dim: usize, horizon: usize, epsilon: f64, seed: u64) -> Result<Environment> {
    let dist = signed_axes(dim)?;
    let base = random_parameters(arms, dim, 1.0, seed);
    let misspec = (epsilon > 0.0).then(|| random_sign_bump(arms, dim, epsilon, seed));
    let kind = AdversaryKind::SinusoidalDrift {
        base,
        amplitude: 0.5,
        period: (horizon as f64 / 4.0).max(2.0),
    };
    let adv = AdversarySpec::new_bounded(kind, misspec, horizon, dist.sigma())?;
    Environment::new(dist, adv)
}

/// Losses in `[0, 1]`: non-negative parameters over [`positive_cone`] contexts.
pub fn nonnegative_benchmark(arms: usize, dim: usize, horizon: usize, epsilon: f64, seed: u64) -> Result<Environment> {
    let dist = positive_cone(dim)?;
    // entries in [ε, (1-ε)/√d] keep ⟨x, θ⟩ ± ε inside [0, 1] for unit x ≥ 0
    let high = (1.0 - epsilon) / libm::sqrt(dim as f64);
    if !(high > epsilon) {
        return Err(invalid("epsilon", "too large for non-negative losses"));
    }
    let theta = random_nonnegative_parameters(arms, dim, epsilon, high, seed);
    let misspec = (epsilon > 0.0).then(|| random_sign_bump(arms, dim, epsilon, seed));
    let adv = AdversarySpec::new(AdversaryKind::Constant { theta }, misspec, horizon)?;
    Environment::new(dist, adv)
}

/// Misspecified losses over non-centered contexts, for bias checks.
pub fn biased_benchmark(arms: usize, dim: usize, horizon: usize, epsilon: f64, seed: u64) -> Result<Environment> {
    let dist = positive_cone(dim)?;
    let theta = random_parameters(arms, dim, 1.0, seed);
    let misspec = MisspecSpec::sign_bump(
        (0..arms).map(|a| Vector::basis(dim, a % dim)).collect(),
        epsilon,
    );
    let adv = AdversarySpec::new_bounded(AdversaryKind::Constant { theta }, Some(misspec), horizon, dist.sigma())?;
    Environment::new(dist, adv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn signed_axes_is_isotropic() {
        let d = signed_axes(4).unwrap();
        assert_eq!(d.sigma(), 1.0);
        let c = d.exact_covariance().unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(c.get(i, j), if i == j { 0.25 } else { 0.0 });
            }
        }
    }

    #[test]
    fn benchmarks_respect_loss_bounds() {
        for seed in 0..5 {
            let env = linear_benchmark(4, 4, 100, 0.1, seed).unwrap();
            assert!(env.bounds.param_norm <= 0.9 + 1e-12);
            let env = nonnegative_benchmark(3, 4, 100, 0.05, seed).unwrap();
            let (points, _) = env.dist.support().unwrap();
            for x in points {
                for a in 0..3 {
                    let l = env.adversary.loss_unchecked(1, x, a);
                    assert!((0.0..=1.0).contains(&l));
                }
            }
            biased_benchmark(3, 9, 10, 0.1, seed).unwrap();
            let env = hadamard_benchmark(4, 4, 10, 0.0, seed).unwrap();
            assert!((env.bounds.param_norm - 1.0).abs() < 1e-12);
            assert!(hadamard_benchmark(3, 6, 10, 0.0, seed).is_err());
        }
    }
}
