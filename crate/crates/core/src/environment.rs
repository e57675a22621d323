//! Context distributions and oblivious loss sequences.
//!
//! Losses have the form `ℓ_t(x, a) = ⟨x, θ_{t,a}⟩ + ε(x, a)` where the
//! misspecification `ε` is bounded by a known magnitude. Adversaries here are
//! oblivious: round `t`'s parameters are a pure function of the adversary and `t`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Error, Result};
use crate::numkit::{dot, spd_factorize, spd_inverse, SymMatrix, Vector};

/// Probabilities must sum to one within this tolerance.
pub const PROB_SUM_TOLERANCE: f64 = 1e-12;
/// Covariances with a smaller eigenvalue count as singular.
pub const SINGULAR_TOLERANCE: f64 = 1e-12;
/// Round-off slack allowed when checking `|ℓ| ≤ 1`.
pub const LOSS_BOUND_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum ContextKind {
    FiniteSupport { points: Vec<Vector>, probs: Vec<f64> },
    SphereUniform { radius: f64 },
    CubeUniform { half_width: f64 },
}

/// A samplable distribution over `ℝ^d` with exactly known covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextDistribution {
    kind: ContextKind,
    dim: usize,
    sigma: f64,
    cdf: Vec<f64>,
}

impl ContextDistribution {
    pub fn finite_support(points: Vec<Vector>, probs: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(invalid("points", "support must not be empty"));
        }
        if points.len() != probs.len() {
            return Err(Error::DimensionMismatch {
                expected: points.len(),
                found: probs.len(),
            });
        }
        let dim = points[0].dim();
        if let Some(p) = points.iter().find(|p| p.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: p.dim(),
            });
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(invalid("probs", "probabilities must be finite and non-negative"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PROB_SUM_TOLERANCE {
            return Err(invalid("probs", alloc::format!("sum to {total}, not 1")));
        }
        let mut acc = 0.0;
        let cdf = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        let sigma = points.iter().map(Vector::norm).fold(0.0, f64::max);
        Ok(Self {
            kind: ContextKind::FiniteSupport { points, probs },
            dim,
            sigma,
            cdf,
        })
    }

    /// Uniform on the sphere of the given radius.
    pub fn sphere(dim: usize, radius: f64) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dimension", "must be at least 1"));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(invalid("radius", "must be positive"));
        }
        Ok(Self {
            kind: ContextKind::SphereUniform { radius },
            dim,
            sigma: radius,
            cdf: Vec::new(),
        })
    }

    /// Uniform on the cube `[-h, h]^d`.
    pub fn cube(dim: usize, half_width: f64) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dimension", "must be at least 1"));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(invalid("half_width", "must be positive"));
        }
        Ok(Self {
            kind: ContextKind::CubeUniform { half_width },
            dim,
            sigma: half_width * libm::sqrt(dim as f64),
            cdf: Vec::new(),
        })
    }

    pub fn kind(&self) -> &ContextKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Bound on `‖x‖₂` over the support.
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Support points and their probabilities, for finite distributions.
    pub fn support(&self) -> Option<(&[Vector], &[f64])> {
        match &self.kind {
            ContextKind::FiniteSupport { points, probs } => Some((points, probs)),
            _ => None,
        }
    }

    /// Index of the support point selected by a uniform draw `u ∈ [0, 1)`.
    pub(crate) fn support_index(&self, u: f64) -> usize {
        let i = self.cdf.partition_point(|&c| c <= u);
        i.min(self.cdf.len() - 1)
    }

    /// Draws one context into `out`; returns the support index for finite distributions.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) -> Option<usize> {
        match &self.kind {
            ContextKind::FiniteSupport { points, .. } => {
                let i = self.support_index(rng.random::<f64>());
                out.copy_from_slice(&points[i]);
                Some(i)
            }
            ContextKind::SphereUniform { radius } => {
                loop {
                    for v in out.iter_mut() {
                        *v = rng.sample(StandardNormal);
                    }
                    let norm = libm::sqrt(dot(out, out));
                    if norm > 0.0 {
                        let scale = radius / norm;
                        out.iter_mut().for_each(|v| *v *= scale);
                        break;
                    }
                }
                None
            }
            ContextKind::CubeUniform { half_width } => {
                for v in out.iter_mut() {
                    *v = half_width * (2.0 * rng.random::<f64>() - 1.0);
                }
                None
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vector {
        let mut out = vec![0.0; self.dim];
        self.sample_into(rng, &mut out);
        Vector::from_vec_unchecked(out)
    }

    /// Exact second-moment matrix `E[x xᵀ]`.
    pub fn exact_covariance(&self) -> Result<SymMatrix> {
        let cov = match &self.kind {
            ContextKind::FiniteSupport { points, probs } => {
                let mut cov = SymMatrix::zeros(self.dim);
                for (x, p) in points.iter().zip(probs) {
                    cov.add_outer(*p, x);
                }
                cov
            }
            ContextKind::SphereUniform { radius } => {
                SymMatrix::identity(self.dim).scaled(radius * radius / self.dim as f64)
            }
            ContextKind::CubeUniform { half_width } => {
                SymMatrix::identity(self.dim).scaled(half_width * half_width / 3.0)
            }
        };
        match spd_factorize(&cov) {
            Ok(c) if c.lambda_min() > SINGULAR_TOLERANCE => Ok(cov),
            Ok(c) => Err(Error::SingularCovariance {
                lambda_min: c.lambda_min(),
            }),
            Err(Error::NotPositiveDefinite { pivot, .. }) => {
                Err(Error::SingularCovariance { lambda_min: pivot })
            }
            Err(e) => Err(e),
        }
    }
}

/// Draws one context from `dist`.
pub fn sample_context<R: Rng + ?Sized>(dist: &ContextDistribution, rng: &mut R) -> Vector {
    dist.sample(rng)
}

/// Shape of the bounded nonlinear residual.
#[derive(Debug, Clone, PartialEq)]
pub enum MisspecKind {
    /// `ε · sign⟨x, v_a⟩`, with `sign(0) = +1`.
    SignBump { directions: Vec<Vector> },
    /// `ε · cos(ω ⟨x, v_a⟩)`.
    Cosine { directions: Vec<Vector>, frequency: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MisspecSpec {
    pub kind: MisspecKind,
    pub magnitude: f64,
}

impl MisspecSpec {
    pub fn sign_bump(directions: Vec<Vector>, magnitude: f64) -> Self {
        Self {
            kind: MisspecKind::SignBump { directions },
            magnitude,
        }
    }

    pub fn cosine(directions: Vec<Vector>, frequency: f64, magnitude: f64) -> Self {
        Self {
            kind: MisspecKind::Cosine {
                directions,
                frequency,
            },
            magnitude,
        }
    }

    fn directions(&self) -> &[Vector] {
        match &self.kind {
            MisspecKind::SignBump { directions } | MisspecKind::Cosine { directions, .. } => {
                directions
            }
        }
    }

    /// Residual at `(x, a)`. The residual does not depend on the round.
    pub fn value(&self, x: &[f64], a: usize) -> f64 {
        match &self.kind {
            MisspecKind::SignBump { directions } => {
                if directions[a].dot(x) >= 0.0 {
                    self.magnitude
                } else {
                    -self.magnitude
                }
            }
            MisspecKind::Cosine {
                directions,
                frequency,
            } => self.magnitude * libm::cos(frequency * directions[a].dot(x)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AdversaryKind {
    Constant {
        theta: Vec<Vector>,
    },
    /// Segments `(start_round, θ)`; the first starts at round 1.
    PiecewiseConstant {
        segments: Vec<(usize, Vec<Vector>)>,
    },
    /// `θ_{t,a} = base_a · (1 + amplitude · sin(2π t / period + 2π a / K))`.
    SinusoidalDrift {
        base: Vec<Vector>,
        amplitude: f64,
        period: f64,
    },
}

/// An oblivious sequence of per-arm loss parameters plus optional misspecification.
#[derive(Debug, Clone, PartialEq)]
pub struct AdversarySpec {
    kind: AdversaryKind,
    misspec: Option<MisspecSpec>,
    horizon: usize,
    arms: usize,
    dim: usize,
}

impl AdversarySpec {
    pub fn new(kind: AdversaryKind, misspec: Option<MisspecSpec>, horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(invalid("horizon", "must be at least 1"));
        }
        let rows: &[Vector] = match &kind {
            AdversaryKind::Constant { theta } => theta,
            AdversaryKind::PiecewiseConstant { segments } => {
                if segments.is_empty() || segments[0].0 != 1 {
                    return Err(invalid("segments", "first segment must start at round 1"));
                }
                if segments.windows(2).any(|w| w[1].0 <= w[0].0) {
                    return Err(invalid("segments", "start rounds must increase strictly"));
                }
                &segments[0].1
            }
            AdversaryKind::SinusoidalDrift {
                base,
                amplitude,
                period,
            } => {
                if !(*period > 0.0) || !(0.0..=1.0).contains(amplitude) {
                    return Err(invalid(
                        "drift",
                        "period must be positive and amplitude in [0, 1]",
                    ));
                }
                base
            }
        };
        let arms = rows.len();
        if arms == 0 {
            return Err(invalid("theta", "at least one arm is required"));
        }
        let dim = rows[0].dim();
        let check_rows = |rows: &[Vector]| -> Result<()> {
            if rows.len() != arms {
                return Err(Error::DimensionMismatch {
                    expected: arms,
                    found: rows.len(),
                });
            }
            match rows.iter().find(|r| r.dim() != dim) {
                Some(r) => Err(Error::DimensionMismatch {
                    expected: dim,
                    found: r.dim(),
                }),
                None => Ok(()),
            }
        };
        if let AdversaryKind::PiecewiseConstant { segments } = &kind {
            for (_, rows) in segments {
                check_rows(rows)?;
            }
        } else {
            check_rows(rows)?;
        }
        if let Some(m) = &misspec {
            if !(m.magnitude >= 0.0 && m.magnitude.is_finite()) {
                return Err(invalid("epsilon", "must be finite and non-negative"));
            }
            check_rows(m.directions())?;
        }
        Ok(Self {
            kind,
            misspec,
            horizon,
            arms,
            dim,
        })
    }

    /// Like [`AdversarySpec::new`], but shrinks the linear parts so that
    /// `‖θ_{t,a}‖ σ + ε ≤ 1` holds for contexts of norm at most `sigma`.
    pub fn new_bounded(
        kind: AdversaryKind,
        misspec: Option<MisspecSpec>,
        horizon: usize,
        sigma: f64,
    ) -> Result<Self> {
        let spec = Self::new(kind, misspec, horizon)?;
        let eps = spec.epsilon();
        if eps > 1.0 {
            return Err(invalid("epsilon", "misspecification larger than the loss bound"));
        }
        let worst = spec.param_norm_bound() * sigma;
        if worst + eps <= 1.0 || worst == 0.0 {
            return Ok(spec);
        }
        let factor = (1.0 - eps) / worst;
        Ok(spec.with_scaled_linear_part(factor))
    }

    fn with_scaled_linear_part(mut self, factor: f64) -> Self {
        let scale = |rows: &mut Vec<Vector>| {
            for r in rows.iter_mut() {
                *r = r.scaled(factor);
            }
        };
        match &mut self.kind {
            AdversaryKind::Constant { theta } => scale(theta),
            AdversaryKind::PiecewiseConstant { segments } => {
                segments.iter_mut().for_each(|(_, rows)| scale(rows))
            }
            AdversaryKind::SinusoidalDrift { base, .. } => scale(base),
        }
        self
    }

    pub fn kind(&self) -> &AdversaryKind {
        &self.kind
    }

    pub fn misspec(&self) -> Option<&MisspecSpec> {
        self.misspec.as_ref()
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn arms(&self) -> usize {
        self.arms
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Misspecification magnitude `ε` (zero when absent).
    pub fn epsilon(&self) -> f64 {
        self.misspec.as_ref().map_or(0.0, |m| m.magnitude)
    }

    fn segment(&self, t: usize) -> &[Vector] {
        match &self.kind {
            AdversaryKind::PiecewiseConstant { segments } => {
                let i = segments.partition_point(|(start, _)| *start <= t);
                &segments[i.saturating_sub(1)].1
            }
            _ => unreachable!(),
        }
    }

    fn drift_factor(t: usize, a: usize, arms: usize, amplitude: f64, period: f64) -> f64 {
        1.0 + amplitude
            * libm::sin(2.0 * PI * t as f64 / period + 2.0 * PI * a as f64 / arms as f64)
    }

    /// `⟨x, θ_{t,a}⟩` without allocating.
    pub fn linear_loss(&self, t: usize, x: &[f64], a: usize) -> f64 {
        match &self.kind {
            AdversaryKind::Constant { theta } => theta[a].dot(x),
            AdversaryKind::PiecewiseConstant { .. } => self.segment(t)[a].dot(x),
            AdversaryKind::SinusoidalDrift {
                base,
                amplitude,
                period,
            } => base[a].dot(x) * Self::drift_factor(t, a, self.arms, *amplitude, *period),
        }
    }

    /// `θ_{t,a}` for rounds `1 ≤ t ≤ T` and arms `0 ≤ a < K`.
    pub fn theta(&self, t: usize, a: usize) -> Vector {
        match &self.kind {
            AdversaryKind::Constant { theta } => theta[a].clone(),
            AdversaryKind::PiecewiseConstant { .. } => self.segment(t)[a].clone(),
            AdversaryKind::SinusoidalDrift {
                base,
                amplitude,
                period,
            } => base[a].scaled(Self::drift_factor(t, a, self.arms, *amplitude, *period)),
        }
    }

    /// `ε(x, a)`, zero without misspecification.
    pub fn misspec_value(&self, x: &[f64], a: usize) -> f64 {
        self.misspec.as_ref().map_or(0.0, |m| m.value(x, a))
    }

    /// `ℓ_t(x, a)` without range checks.
    #[inline]
    pub fn loss_unchecked(&self, t: usize, x: &[f64], a: usize) -> f64 {
        self.linear_loss(t, x, a) + self.misspec_value(x, a)
    }

    /// `R = max_{t,a} ‖θ_{t,a}‖₂` over the horizon.
    pub fn param_norm_bound(&self) -> f64 {
        let max_norm = |rows: &[Vector]| rows.iter().map(Vector::norm).fold(0.0, f64::max);
        match &self.kind {
            AdversaryKind::Constant { theta } => max_norm(theta),
            AdversaryKind::PiecewiseConstant { segments } => segments
                .iter()
                .map(|(_, rows)| max_norm(rows))
                .fold(0.0, f64::max),
            AdversaryKind::SinusoidalDrift {
                base,
                amplitude,
                period,
            } => {
                let mut r: f64 = 0.0;
                for t in 1..=self.horizon {
                    for (a, b) in base.iter().enumerate() {
                        let f = Self::drift_factor(t, a, self.arms, *amplitude, *period);
                        r = r.max(b.norm() * f.abs());
                    }
                }
                r
            }
        }
    }

    /// Calls `f(t, θ_t)` once per distinct parameter set; `t` is its first round.
    fn for_each_parameter_set(&self, mut f: impl FnMut(usize) -> Result<()>) -> Result<()> {
        match &self.kind {
            AdversaryKind::Constant { .. } => f(1),
            AdversaryKind::PiecewiseConstant { segments } => segments
                .iter()
                .filter(|(start, _)| *start <= self.horizon)
                .try_for_each(|(start, _)| f(*start)),
            AdversaryKind::SinusoidalDrift { .. } => (1..=self.horizon).try_for_each(f),
        }
    }
}

/// `ℓ_t(x, a) = ⟨x, θ_{t,a}⟩ + ε(x, a)`, rejecting values outside `[-1, 1]`.
pub fn loss_value(adv: &AdversarySpec, t: usize, x: &[f64], a: usize) -> Result<f64> {
    if t == 0 || t > adv.horizon {
        return Err(invalid("round", alloc::format!("{t} outside 1..={}", adv.horizon)));
    }
    if a >= adv.arms {
        return Err(invalid("arm", alloc::format!("{a} outside 0..{}", adv.arms)));
    }
    if x.len() != adv.dim {
        return Err(Error::DimensionMismatch {
            expected: adv.dim,
            found: x.len(),
        });
    }
    let value = adv.loss_unchecked(t, x, a);
    if !(value.abs() <= 1.0 + LOSS_BOUND_SLACK) {
        return Err(Error::LossOutOfRange {
            round: t,
            arm: a,
            value,
            context: x.to_vec(),
        });
    }
    Ok(value)
}

/// Constants of the environment that the learners and their tuning rely on.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvironmentBounds {
    pub sigma: f64,
    pub param_norm: f64,
    pub lambda_min: f64,
    pub covariance: SymMatrix,
    pub covariance_inv: SymMatrix,
}

/// Checks `|ℓ_t(x, a)| ≤ 1` on the whole support and computes the bounds bundle.
///
/// Finite supports are checked exhaustively over every support point, arm and
/// distinct parameter set. Continuous supports use the Cauchy–Schwarz bound
/// `R σ + ε ≤ 1`.
pub fn validate_adversary(
    adv: &AdversarySpec,
    dist: &ContextDistribution,
) -> Result<EnvironmentBounds> {
    if adv.dim != dist.dim() {
        return Err(Error::DimensionMismatch {
            expected: dist.dim(),
            found: adv.dim,
        });
    }
    let sigma = dist.sigma();
    let param_norm = adv.param_norm_bound();
    match dist.support() {
        Some((points, _)) => {
            adv.for_each_parameter_set(|t| {
                for x in points {
                    for a in 0..adv.arms {
                        loss_value(adv, t, x, a)?;
                    }
                }
                Ok(())
            })?;
        }
        None => {
            let worst = param_norm * sigma + adv.epsilon();
            if worst > 1.0 + LOSS_BOUND_SLACK {
                let round = 1;
                let arm = 0;
                return Err(Error::LossOutOfRange {
                    round,
                    arm,
                    value: worst,
                    context: Vec::new(),
                });
            }
        }
    }
    let covariance = dist.exact_covariance()?;
    let cert = spd_factorize(&covariance)?;
    Ok(EnvironmentBounds {
        sigma,
        param_norm,
        lambda_min: cert.lambda_min(),
        covariance_inv: spd_inverse(&cert),
        covariance,
    })
}

/// A validated pairing of a context distribution with an adversary.
#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    pub dist: ContextDistribution,
    pub adversary: AdversarySpec,
    pub bounds: EnvironmentBounds,
}

impl Environment {
    pub fn new(dist: ContextDistribution, adversary: AdversarySpec) -> Result<Self> {
        let bounds = validate_adversary(&adversary, &dist)?;
        Ok(Self {
            dist,
            adversary,
            bounds,
        })
    }

    pub fn arms(&self) -> usize {
        self.adversary.arms()
    }

    pub fn dim(&self) -> usize {
        self.dist.dim()
    }

    pub fn horizon(&self) -> usize {
        self.adversary.horizon()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Purpose};
    use alloc::vec;

    fn v(x: &[f64]) -> Vector {
        Vector::new(x.to_vec()).unwrap()
    }

    fn two_point() -> ContextDistribution {
        ContextDistribution::finite_support(vec![v(&[1.0, 0.0]), v(&[0.0, 1.0])], vec![0.5, 0.5])
            .unwrap()
    }

    #[test]
    fn point_mass_always_returns_its_point() {
        let d = ContextDistribution::finite_support(vec![v(&[1.0, 0.0])], vec![1.0]).unwrap();
        let mut rng = stream(0, Purpose::Context, 0, 0);
        for _ in 0..100 {
            assert_eq!(d.sample(&mut rng).as_slice(), &[1.0, 0.0]);
        }
    }

    #[test]
    fn two_point_frequencies() {
        let d = two_point();
        let mut rng = stream(1, Purpose::Context, 0, 0);
        let n = 100_000;
        let first = (0..n).filter(|_| d.sample(&mut rng)[0] == 1.0).count();
        let freq = first as f64 / n as f64;
        assert!((freq - 0.5).abs() < 0.01, "{freq}");
    }

    #[test]
    fn sphere_draws_have_exact_radius() {
        let d = ContextDistribution::sphere(5, 2.0).unwrap();
        let mut rng = stream(2, Purpose::Context, 0, 0);
        for _ in 0..1000 {
            assert!((d.sample(&mut rng).norm() - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn cube_draws_stay_inside() {
        let d = ContextDistribution::cube(3, 0.5).unwrap();
        let mut rng = stream(3, Purpose::Context, 0, 0);
        for _ in 0..1000 {
            let x = d.sample(&mut rng);
            assert!(x.iter().all(|c| c.abs() <= 0.5));
            assert!(x.norm() <= d.sigma());
        }
    }

    #[test]
    fn probabilities_must_sum_to_one() {
        let r = ContextDistribution::finite_support(vec![v(&[1.0]), v(&[2.0])], vec![0.5, 0.6]);
        assert!(r.is_err());
    }

    #[test]
    fn covariance_examples() {
        assert_eq!(
            two_point().exact_covariance().unwrap(),
            SymMatrix::diagonal(&[0.5, 0.5])
        );
        let sphere = ContextDistribution::sphere(2, 1.0).unwrap();
        assert_eq!(
            sphere.exact_covariance().unwrap(),
            SymMatrix::diagonal(&[0.5, 0.5])
        );
        let cube = ContextDistribution::cube(2, 3.0).unwrap();
        assert_eq!(
            cube.exact_covariance().unwrap(),
            SymMatrix::diagonal(&[3.0, 3.0])
        );
        let rank_one = ContextDistribution::finite_support(vec![v(&[1.0, 1.0])], vec![1.0]).unwrap();
        assert!(matches!(
            rank_one.exact_covariance(),
            Err(Error::SingularCovariance { .. })
        ));
    }

    fn constant(theta: &[&[f64]], misspec: Option<MisspecSpec>, horizon: usize) -> AdversarySpec {
        let theta = theta.iter().map(|r| v(r)).collect();
        AdversarySpec::new(AdversaryKind::Constant { theta }, misspec, horizon).unwrap()
    }

    #[test]
    fn loss_examples() {
        let adv = constant(&[&[0.5, 0.0], &[0.0, 0.0]], None, 10);
        assert_eq!(loss_value(&adv, 1, &[1.0, 0.0], 0).unwrap(), 0.5);

        let bump = MisspecSpec::sign_bump(vec![v(&[1.0, 0.0]), v(&[1.0, 0.0])], 0.1);
        let adv = constant(&[&[0.5, 0.0], &[0.0, 0.0]], Some(bump), 10);
        assert!((loss_value(&adv, 1, &[1.0, 0.0], 0).unwrap() - 0.6).abs() < 1e-15);

        let zero = MisspecSpec::cosine(vec![v(&[1.0, 2.0])], 3.0, 0.0);
        let adv = constant(&[&[0.0, 0.0]], Some(zero), 10);
        assert_eq!(loss_value(&adv, 3, &[0.3, -0.7], 0).unwrap(), 0.0);
    }

    #[test]
    fn loss_out_of_range_is_reported() {
        let adv = constant(&[&[1.5, 0.0]], None, 4);
        assert!(matches!(
            loss_value(&adv, 2, &[1.0, 0.0], 0),
            Err(Error::LossOutOfRange { round: 2, arm: 0, .. })
        ));
        assert!(loss_value(&adv, 0, &[1.0, 0.0], 0).is_err());
        assert!(loss_value(&adv, 5, &[1.0, 0.0], 0).is_err());
    }

    #[test]
    fn validate_examples() {
        let sphere = ContextDistribution::sphere(2, 1.0).unwrap();
        let bump = MisspecSpec::sign_bump(vec![v(&[0.0, 1.0])], 0.05);
        let ok = constant(&[&[0.9, 0.0]], Some(bump), 5);
        assert!(validate_adversary(&ok, &sphere).is_ok());

        let bad = constant(&[&[1.2, 0.0]], None, 5);
        assert!(matches!(
            validate_adversary(&bad, &sphere),
            Err(Error::LossOutOfRange { .. })
        ));

        let zero = constant(&[&[0.0, 0.0]], None, 5);
        let b = validate_adversary(&zero, &sphere).unwrap();
        assert_eq!(b.param_norm, 0.0);
    }

    #[test]
    fn finite_support_check_is_exhaustive_over_segments() {
        let d = two_point();
        let segments = vec![
            (1, vec![v(&[0.5, 0.5])]),
            (3, vec![v(&[0.5, 1.2])]),
        ];
        let adv = AdversarySpec::new(AdversaryKind::PiecewiseConstant { segments }, None, 2).unwrap();
        // the violating segment starts after the horizon
        assert!(validate_adversary(&adv, &d).is_ok());
        let segments = vec![(1, vec![v(&[0.5, 0.5])]), (2, vec![v(&[0.5, 1.2])])];
        let adv = AdversarySpec::new(AdversaryKind::PiecewiseConstant { segments }, None, 2).unwrap();
        assert!(matches!(
            validate_adversary(&adv, &d),
            Err(Error::LossOutOfRange { round: 2, arm: 0, .. })
        ));
    }

    #[test]
    fn bounded_constructor_rescales() {
        let bump = MisspecSpec::sign_bump(vec![v(&[1.0, 0.0]), v(&[0.0, 1.0])], 0.2);
        let adv = AdversarySpec::new_bounded(
            AdversaryKind::SinusoidalDrift {
                base: vec![v(&[3.0, 0.0]), v(&[0.0, -2.0])],
                amplitude: 0.5,
                period: 7.0,
            },
            Some(bump),
            50,
            1.0,
        )
        .unwrap();
        assert!(adv.param_norm_bound() + 0.2 <= 1.0 + 1e-12);
        let sphere = ContextDistribution::sphere(2, 1.0).unwrap();
        assert!(validate_adversary(&adv, &sphere).is_ok());
    }

    #[test]
    fn piecewise_switches_at_segment_starts() {
        let segments = vec![(1, vec![v(&[0.1])]), (4, vec![v(&[0.2])]), (9, vec![v(&[0.3])])];
        let adv = AdversarySpec::new(AdversaryKind::PiecewiseConstant { segments }, None, 10).unwrap();
        let got: Vec<f64> = (1..=10).map(|t| adv.theta(t, 0)[0]).collect();
        assert_eq!(got, vec![0.1, 0.1, 0.1, 0.2, 0.2, 0.2, 0.2, 0.2, 0.3, 0.3]);
    }
}
