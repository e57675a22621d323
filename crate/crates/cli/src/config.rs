//! The flat `key = value` experiment config format.
//!
//! ```text
//! # comment
//! algorithm = robust_linexp3
//! K = 2
//! d = 2
//! T = 1000
//! environment.kind = finite_support
//! environment.points = 1, 0; 0, 1
//! environment.probs = 0.5, 0.5
//! adversary.kind = constant
//! adversary.theta = 0.5, 0; 0, 0.5
//! ```
//!
//! Lists of vectors separate entries with `,` and vectors with `;`.
//! Piecewise segments are `start: θ_0; θ_1 | start: ...`.

use std::collections::BTreeMap;

use linexp3::benchmarks;
use linexp3::environment::{AdversaryKind, AdversarySpec, ContextDistribution, Environment, MisspecSpec};
use linexp3::evaluation::{Algorithm, LearnerConfig};
use linexp3::learner::{tune_counterfactual, tune_fullinfo, tune_real, tune_robust, ClampFlags, MgrMode, TunedParams};
use linexp3::{MgrConfig, Vector};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid value for `{field}`: {message}")]
    Validation { field: String, message: String },
}

fn validation(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Validation {
        field: field.to_string(),
        message: message.into(),
    }
}

/// A hyperparameter that is either given or left to the tuning rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Param<T> {
    Auto,
    Value(T),
}

impl<T: Copy> Param<T> {
    pub fn or(self, auto: T) -> T {
        match self {
            Param::Auto => auto,
            Param::Value(v) => v,
        }
    }

    pub fn is_auto(&self) -> bool {
        matches!(self, Param::Auto)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ContextSpec {
    FiniteSupport { points: Vec<Vec<f64>>, probs: Vec<f64> },
    Sphere { radius: f64 },
    Cube { half_width: f64 },
    /// One of the standard benchmark environments; it brings its own adversary.
    Benchmark { name: String, instance_seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParamSpec {
    Constant(Vec<Vec<f64>>),
    Piecewise(Vec<(usize, Vec<Vec<f64>>)>),
    Sinusoidal { base: Vec<Vec<f64>>, amplitude: f64, period: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum MisspecConfig {
    None,
    SignBump { directions: Vec<Vec<f64>> },
    Cosine { directions: Vec<Vec<f64>>, frequency: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub algorithm: Algorithm,
    pub arms: usize,
    pub dim: usize,
    pub horizon: usize,
    pub seed: u64,
    pub replications: usize,
    pub eta: Param<f64>,
    pub gamma: Param<f64>,
    pub beta: Param<f64>,
    pub iterations: Param<usize>,
    pub mgr_mode: MgrMode,
    pub contexts: ContextSpec,
    pub params: Option<ParamSpec>,
    pub misspec: MisspecConfig,
    pub epsilon: f64,
    /// Shrink the linear part so every loss stays in `[-1, 1]`.
    pub bounded: bool,
    pub output: Option<String>,
}

const KEYS: &[&str] = &[
    "algorithm",
    "K",
    "d",
    "T",
    "seed",
    "replications",
    "eta",
    "gamma",
    "beta",
    "M",
    "mgr_mode",
    "output",
    "environment.kind",
    "environment.points",
    "environment.probs",
    "environment.radius",
    "environment.half_width",
    "environment.benchmark",
    "environment.instance_seed",
    "adversary.kind",
    "adversary.theta",
    "adversary.segments",
    "adversary.base",
    "adversary.amplitude",
    "adversary.period",
    "adversary.misspec",
    "adversary.epsilon",
    "adversary.directions",
    "adversary.frequency",
    "adversary.bounded",
];

struct Entries {
    values: BTreeMap<String, (usize, String)>,
}

impl Entries {
    fn take(&mut self, key: &str) -> Option<(usize, String)> {
        self.values.remove(key)
    }

    fn required(&mut self, key: &str) -> Result<String, ConfigError> {
        self.take(key)
            .map(|(_, v)| v)
            .ok_or_else(|| validation(key, "missing"))
    }

    fn number<T: std::str::FromStr>(&mut self, key: &str) -> Result<Option<T>, ConfigError> {
        match self.take(key) {
            None => Ok(None),
            Some((_, v)) => v
                .parse()
                .map(Some)
                .map_err(|_| validation(key, format!("`{v}` is not a valid number"))),
        }
    }

    fn param<T: std::str::FromStr>(&mut self, key: &str) -> Result<Param<T>, ConfigError> {
        match self.take(key) {
            None => Ok(Param::Auto),
            Some((_, v)) if v == "auto" => Ok(Param::Auto),
            Some((_, v)) => v
                .parse()
                .map(Param::Value)
                .map_err(|_| validation(key, format!("`{v}` is neither `auto` nor a number"))),
        }
    }
}

fn parse_list(field: &str, text: &str) -> Result<Vec<f64>, ConfigError> {
    text.split(',')
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| validation(field, format!("`{s}` is not a finite number")))
        })
        .collect()
}

fn parse_vectors(field: &str, text: &str) -> Result<Vec<Vec<f64>>, ConfigError> {
    text.split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse_list(field, s))
        .collect()
}

fn parse_segments(field: &str, text: &str) -> Result<Vec<(usize, Vec<Vec<f64>>)>, ConfigError> {
    text.split('|')
        .map(|seg| {
            let (start, rows) = seg
                .split_once(':')
                .ok_or_else(|| validation(field, "segments are `start: θ_0; θ_1 | ...`"))?;
            let start = start
                .trim()
                .parse()
                .map_err(|_| validation(field, format!("`{}` is not a round index", start.trim())))?;
            Ok((start, parse_vectors(field, rows)?))
        })
        .collect()
}

fn parse_algorithm(text: &str) -> Option<Algorithm> {
    Some(match text {
        "robust_linexp3" => Algorithm::RobustLinExp3,
        "real_linexp3" => Algorithm::RealLinExp3,
        "fullinfo" => Algorithm::FullInfo,
        "counterfactual" => Algorithm::Counterfactual,
        "uniform" => Algorithm::Uniform,
        _ => return None,
    })
}

/// Parses and validates a config; every omitted hyperparameter is `auto`.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut values = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Parse {
            line,
            message: format!("expected `key = value`, found `{content}`"),
        })?;
        let key = key.trim();
        if !KEYS.contains(&key) {
            return Err(ConfigError::Parse {
                line,
                message: format!("unknown key `{key}`"),
            });
        }
        if values
            .insert(key.to_string(), (line, value.trim().to_string()))
            .is_some()
        {
            return Err(ConfigError::Parse {
                line,
                message: format!("duplicate key `{key}`"),
            });
        }
    }
    let mut e = Entries { values };

    let algorithm_text = e.required("algorithm")?;
    let algorithm = parse_algorithm(&algorithm_text)
        .ok_or_else(|| validation("algorithm", format!("unknown algorithm `{algorithm_text}`")))?;
    let arms: usize = e.number("K")?.ok_or_else(|| validation("K", "missing"))?;
    let dim: usize = e.number("d")?.ok_or_else(|| validation("d", "missing"))?;
    let horizon: usize = e.number("T")?.ok_or_else(|| validation("T", "missing"))?;
    let seed = e.number("seed")?.unwrap_or(0);
    let replications = e.number("replications")?.unwrap_or(8);
    for (field, v) in [("K", arms), ("d", dim), ("T", horizon), ("replications", replications)] {
        if v < 1 {
            return Err(validation(field, "must be at least 1"));
        }
    }
    let eta: Param<f64> = e.param("eta")?;
    let gamma: Param<f64> = e.param("gamma")?;
    let beta: Param<f64> = e.param("beta")?;
    let iterations: Param<usize> = e.param("M")?;
    if let Param::Value(v) = eta {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(validation("eta", "must be a non-negative number"));
        }
    }
    if let Param::Value(v) = gamma {
        if !(0.0..=1.0).contains(&v) {
            return Err(validation("gamma", "must lie in [0, 1]"));
        }
    }
    if let Param::Value(v) = beta {
        if !(v > 0.0 && v.is_finite()) {
            return Err(validation("beta", "must be positive"));
        }
    }
    let mgr_mode = match e.take("mgr_mode").map(|(_, v)| v).as_deref() {
        None | Some("fast") => MgrMode::Fast,
        Some("naive") => MgrMode::Naive,
        Some(other) => return Err(validation("mgr_mode", format!("`{other}` is not naive or fast"))),
    };
    let output = e.take("output").map(|(_, v)| v);

    let kind = e.required("environment.kind")?;
    let contexts = match kind.as_str() {
        "finite_support" => {
            let points = parse_vectors("environment.points", &e.required("environment.points")?)?;
            let probs = match e.take("environment.probs") {
                Some((_, v)) => parse_list("environment.probs", &v)?,
                None => vec![1.0 / points.len().max(1) as f64; points.len()],
            };
            ContextSpec::FiniteSupport { points, probs }
        }
        "sphere" => ContextSpec::Sphere {
            radius: e.number("environment.radius")?.unwrap_or(1.0),
        },
        "cube" => ContextSpec::Cube {
            half_width: e.number("environment.half_width")?.unwrap_or(1.0),
        },
        "benchmark" => ContextSpec::Benchmark {
            name: e.required("environment.benchmark")?,
            instance_seed: e.number("environment.instance_seed")?.unwrap_or(0),
        },
        other => {
            return Err(validation(
                "environment.kind",
                format!("`{other}` is not finite_support, sphere, cube or benchmark"),
            ))
        }
    };

    let epsilon = e.number("adversary.epsilon")?.unwrap_or(0.0);
    if !(epsilon >= 0.0 && epsilon <= 1.0) {
        return Err(validation("adversary.epsilon", "must lie in [0, 1]"));
    }
    let bounded = match e.take("adversary.bounded").map(|(_, v)| v).as_deref() {
        None | Some("false") => false,
        Some("true") => true,
        Some(other) => return Err(validation("adversary.bounded", format!("`{other}` is not true or false"))),
    };
    let params = if matches!(contexts, ContextSpec::Benchmark { .. }) {
        None
    } else {
        let kind = e.required("adversary.kind")?;
        Some(match kind.as_str() {
            "constant" => ParamSpec::Constant(parse_vectors("adversary.theta", &e.required("adversary.theta")?)?),
            "piecewise" => ParamSpec::Piecewise(parse_segments("adversary.segments", &e.required("adversary.segments")?)?),
            "sinusoidal" => ParamSpec::Sinusoidal {
                base: parse_vectors("adversary.base", &e.required("adversary.base")?)?,
                amplitude: e.number("adversary.amplitude")?.unwrap_or(0.5),
                period: e.number("adversary.period")?.unwrap_or(horizon as f64),
            },
            other => {
                return Err(validation(
                    "adversary.kind",
                    format!("`{other}` is not constant, piecewise or sinusoidal"),
                ))
            }
        })
    };
    let misspec = match e.take("adversary.misspec").map(|(_, v)| v).as_deref() {
        None | Some("none") => MisspecConfig::None,
        Some("sign_bump") => MisspecConfig::SignBump {
            directions: parse_vectors("adversary.directions", &e.required("adversary.directions")?)?,
        },
        Some("cosine") => MisspecConfig::Cosine {
            directions: parse_vectors("adversary.directions", &e.required("adversary.directions")?)?,
            frequency: e.number("adversary.frequency")?.unwrap_or(1.0),
        },
        Some(other) => {
            return Err(validation(
                "adversary.misspec",
                format!("`{other}` is not none, sign_bump or cosine"),
            ))
        }
    };

    if let Some((key, (line, _))) = e.values.into_iter().next() {
        return Err(ConfigError::Parse {
            line,
            message: format!("`{key}` does not apply to this environment"),
        });
    }

    let config = ExperimentConfig {
        algorithm,
        arms,
        dim,
        horizon,
        seed,
        replications,
        eta,
        gamma,
        beta,
        iterations,
        mgr_mode,
        contexts,
        params,
        misspec,
        epsilon,
        bounded,
        output,
    };
    config.check_shapes()?;
    Ok(config)
}

fn vectors(field: &str, rows: &[Vec<f64>]) -> Result<Vec<Vector>, ConfigError> {
    rows.iter()
        .map(|r| Vector::new(r.clone()).map_err(|err| validation(field, err.to_string())))
        .collect()
}

impl ExperimentConfig {
    fn check_shapes(&self) -> Result<(), ConfigError> {
        let (k, d) = (self.arms, self.dim);
        let check_rows = |field: &str, rows: &[Vec<f64>], n: usize| -> Result<(), ConfigError> {
            if rows.len() != n {
                return Err(validation(field, format!("expected {n} vectors, found {}", rows.len())));
            }
            if let Some(r) = rows.iter().find(|r| r.len() != d) {
                return Err(validation(field, format!("expected dimension {d}, found {}", r.len())));
            }
            Ok(())
        };
        if let ContextSpec::FiniteSupport { points, probs } = &self.contexts {
            if points.is_empty() {
                return Err(validation("environment.points", "at least one point is required"));
            }
            check_rows("environment.points", points, points.len())?;
            if probs.len() != points.len() {
                return Err(validation("environment.probs", "one probability per point is required"));
            }
        }
        match &self.params {
            Some(ParamSpec::Constant(theta)) => check_rows("adversary.theta", theta, k)?,
            Some(ParamSpec::Piecewise(segments)) => {
                for (_, rows) in segments {
                    check_rows("adversary.segments", rows, k)?;
                }
            }
            Some(ParamSpec::Sinusoidal { base, .. }) => check_rows("adversary.base", base, k)?,
            None => {}
        }
        match &self.misspec {
            MisspecConfig::SignBump { directions } | MisspecConfig::Cosine { directions, .. } => {
                check_rows("adversary.directions", directions, k)?
            }
            MisspecConfig::None => {}
        }
        Ok(())
    }

    /// The environment for horizon `horizon`.
    pub fn build_environment(&self, horizon: usize) -> Result<Environment, ConfigError> {
        fn env_err(field: &'static str) -> impl Fn(linexp3::Error) -> ConfigError {
            move |err| validation(field, err.to_string())
        }
        if let ContextSpec::Benchmark { name, instance_seed } = &self.contexts {
            let (k, d, eps, s) = (self.arms, self.dim, self.epsilon, *instance_seed);
            let env = match name.as_str() {
                "linear" => benchmarks::linear_benchmark(k, d, horizon, eps, s),
                "hadamard" => benchmarks::hadamard_benchmark(k, d, horizon, eps, s),
                "drifting" => benchmarks::drifting_benchmark(k, d, horizon, eps, s),
                "nonnegative" => benchmarks::nonnegative_benchmark(k, d, horizon, eps, s),
                "biased" => benchmarks::biased_benchmark(k, d, horizon, eps, s),
                other => {
                    return Err(validation(
                        "environment.benchmark",
                        format!("`{other}` is not linear, hadamard, drifting, nonnegative or biased"),
                    ))
                }
            };
            return env.map_err(env_err("environment.benchmark"));
        }
        let dist = match &self.contexts {
            ContextSpec::FiniteSupport { points, probs } => {
                ContextDistribution::finite_support(vectors("environment.points", points)?, probs.clone())
                    .map_err(env_err("environment.points"))?
            }
            ContextSpec::Sphere { radius } => {
                ContextDistribution::sphere(self.dim, *radius).map_err(env_err("environment.radius"))?
            }
            ContextSpec::Cube { half_width } => ContextDistribution::cube(self.dim, *half_width)
                .map_err(env_err("environment.half_width"))?,
            ContextSpec::Benchmark { .. } => unreachable!("handled above"),
        };
        let kind = match self.params.as_ref().expect("set for non-benchmark environments") {
            ParamSpec::Constant(theta) => AdversaryKind::Constant {
                theta: vectors("adversary.theta", theta)?,
            },
            ParamSpec::Piecewise(segments) => AdversaryKind::PiecewiseConstant {
                segments: segments
                    .iter()
                    .map(|(s, rows)| Ok((*s, vectors("adversary.segments", rows)?)))
                    .collect::<Result<_, ConfigError>>()?,
            },
            ParamSpec::Sinusoidal {
                base,
                amplitude,
                period,
            } => AdversaryKind::SinusoidalDrift {
                base: vectors("adversary.base", base)?,
                amplitude: *amplitude,
                period: *period,
            },
        };
        let misspec = match &self.misspec {
            MisspecConfig::None => None,
            MisspecConfig::SignBump { directions } => Some(MisspecSpec::sign_bump(
                vectors("adversary.directions", directions)?,
                self.epsilon,
            )),
            MisspecConfig::Cosine { directions, frequency } => Some(MisspecSpec::cosine(
                vectors("adversary.directions", directions)?,
                *frequency,
                self.epsilon,
            )),
        };
        let adv = if self.bounded {
            AdversarySpec::new_bounded(kind, misspec, horizon, dist.sigma())
        } else {
            AdversarySpec::new(kind, misspec, horizon)
        }
        .map_err(env_err("adversary"))?;
        Environment::new(dist, adv).map_err(env_err("adversary"))
    }

    /// Fills every `auto` hyperparameter from the matching tuning rule.
    pub fn resolve(&self, env: &Environment, horizon: usize) -> Result<Resolved, ConfigError> {
        let (k, d) = (env.arms(), env.dim());
        let b = &env.bounds;
        let tuned = match self.algorithm {
            Algorithm::RobustLinExp3 => tune_robust(horizon, k, d, b.sigma, b.lambda_min),
            Algorithm::RealLinExp3 => tune_real(horizon, k, d, b.sigma, b.param_norm, b.lambda_min),
            Algorithm::FullInfo => tune_fullinfo(horizon, k, d, b.sigma, b.lambda_min),
            Algorithm::Counterfactual => tune_counterfactual(horizon, k),
            Algorithm::Uniform => TunedParams {
                eta: 0.0,
                gamma: 1.0,
                beta: None,
                iterations: None,
                clamped: ClampFlags::default(),
                warnings: Vec::new(),
            },
        };
        let mut clamped = tuned.clamped;
        let mut warnings = tuned.warnings.clone();
        // flags only describe values that came from the tuning rule
        if !self.eta.is_auto() {
            clamped.eta = false;
        }
        if !self.gamma.is_auto() {
            clamped.gamma = false;
        }
        let eta = self.eta.or(tuned.eta);
        let gamma = match self.algorithm {
            Algorithm::Uniform => 1.0,
            Algorithm::Counterfactual => 0.0,
            _ => self.gamma.or(tuned.gamma),
        };
        let mgr = match self.algorithm {
            Algorithm::RealLinExp3 => {
                let beta = self.beta.or(tuned.beta.expect("set by tune_real"));
                let m = self.iterations.or(tuned.iterations.expect("set by tune_real"));
                if !self.eta.is_auto() && eta > 2.0 / (m as f64 + 1.0) {
                    warnings.push(format!("eta = {eta} exceeds 2/(M+1) = {}", 2.0 / (m as f64 + 1.0)));
                }
                Some(MgrConfig::for_contexts(beta, m, b.sigma).map_err(|err| validation("beta", err.to_string()))?)
            }
            _ => None,
        };
        if self.algorithm == Algorithm::RobustLinExp3 && !self.eta.is_auto() {
            let cap = gamma * b.lambda_min / (k as f64 * b.sigma * b.sigma);
            if eta > cap {
                warnings.push(format!("eta = {eta} exceeds gamma lambda_min/(K sigma^2) = {cap}"));
            }
        }
        let learner = LearnerConfig {
            algorithm: self.algorithm,
            eta,
            gamma,
            mgr,
            mgr_mode: self.mgr_mode,
        };
        learner
            .initial_state(env)
            .map_err(|err| validation("algorithm", err.to_string()))?;
        Ok(Resolved {
            learner,
            clamped,
            warnings,
        })
    }
}

/// Resolved learner configuration plus the tuning diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub learner: LearnerConfig,
    pub clamped: ClampFlags,
    pub warnings: Vec<String>,
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\
algorithm = robust_linexp3
K = 2
d = 2
T = 1000
environment.kind = finite_support
environment.points = 1, 0; 0, 1
adversary.kind = constant
adversary.theta = 0.5, 0; 0, 0.5
";

    #[test]
    fn minimal_config_fills_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.replications, 8);
        assert_eq!(c.seed, 0);
        assert!(c.eta.is_auto() && c.gamma.is_auto() && c.beta.is_auto() && c.iterations.is_auto());
        assert_eq!(c.mgr_mode, MgrMode::Fast);
        assert_eq!(
            c.contexts,
            ContextSpec::FiniteSupport {
                points: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
                probs: vec![0.5, 0.5]
            }
        );
    }

    #[test]
    fn auto_eta_uses_robust_tuning() {
        let c = parse_config(&format!("{MINIMAL}eta = auto\n")).unwrap();
        let env = c.build_environment(1000).unwrap();
        let r = c.resolve(&env, 1000).unwrap();
        let expected = tune_robust(1000, 2, 2, env.bounds.sigma, env.bounds.lambda_min);
        assert_eq!(r.learner.eta, expected.eta);
        assert_eq!(r.learner.gamma, expected.gamma);
    }

    #[test]
    fn zero_arms_is_a_validation_error() {
        let err = parse_config(&MINIMAL.replace("K = 2", "K = 0")).unwrap_err();
        assert!(matches!(err, ConfigError::Validation { ref field, .. } if field == "K"), "{err}");
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = parse_config(&format!("{MINIMAL}bogus = 1\n")).unwrap_err();
        assert_eq!(
            err,
            ConfigError::Parse {
                line: 9,
                message: "unknown key `bogus`".into()
            }
        );
        let err = parse_config("# header\nalgorithm robust\n").unwrap_err();
        assert!(matches!(err, ConfigError::Parse { line: 2, .. }));
    }

    #[test]
    fn shape_mismatch_names_the_field() {
        let err = parse_config(&MINIMAL.replace("0.5, 0; 0, 0.5", "0.5, 0")).unwrap_err();
        assert!(matches!(err, ConfigError::Validation { ref field, .. } if field == "adversary.theta"));
    }

    #[test]
    fn piecewise_and_misspec_parse() {
        let text = MINIMAL.replace(
            "adversary.kind = constant\nadversary.theta = 0.5, 0; 0, 0.5\n",
            "adversary.kind = piecewise\nadversary.segments = 1: 0.5, 0; 0, 0.5 | 10: 0, 0.5; 0.5, 0\n\
             adversary.misspec = sign_bump\nadversary.directions = 1, 0; 0, 1\nadversary.epsilon = 0.1\n",
        );
        let c = parse_config(&text).unwrap();
        let env = c.build_environment(20).unwrap();
        assert_eq!(env.adversary.epsilon(), 0.1);
        assert_eq!(env.adversary.theta(12, 0).as_slice(), &[0.0, 0.5]);
    }

    #[test]
    fn benchmark_environments_build() {
        let text = "algorithm = real_linexp3\nK = 4\nd = 4\nT = 64\nenvironment.kind = benchmark\n\
                    environment.benchmark = hadamard\n";
        let c = parse_config(text).unwrap();
        let env = c.build_environment(64).unwrap();
        let r = c.resolve(&env, 64).unwrap();
        assert!(r.learner.mgr.is_some());
    }
}
