//! Experiment harness for the `linexp3` learners: config parsing, the
//! `run`/`sweep`/`verify` commands and their output formats.

use std::path::Path;

pub mod checks;
pub mod config;
pub mod output;
pub mod run;

pub use config::{parse_config, ConfigError, ExperimentConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error("unknown verification suite `{0}` (expected one of: estimators, mgr, potential, bounds, all)")]
    UnknownSuite(String),
    #[error(transparent)]
    Runtime(#[from] linexp3::Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{0} verification check(s) failed")]
    Verification(usize),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Usage(_) | CliError::UnknownSuite(_) => 1,
            CliError::Runtime(_) | CliError::Io { .. } => 2,
            CliError::Verification(_) => 3,
        }
    }
}

/// A worker pool with `threads` workers, or one per logical core.
pub fn worker_pool(threads: Option<usize>) -> Result<rayon::ThreadPool, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| CliError::Usage(format!("cannot start worker pool: {e}")))
}

/// Parses `1024,2048,4096`.
pub fn parse_grid(text: &str) -> Result<Vec<usize>, CliError> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("--grid: `{}` is not a horizon", s.trim())))
        })
        .collect()
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    Ok(parse_config(&text)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        let parse = ConfigError::Parse {
            line: 1,
            message: "x".into(),
        };
        assert_eq!(CliError::from(parse).exit_code(), 1);
        assert_eq!(CliError::UnknownSuite("x".into()).exit_code(), 1);
        assert_eq!(CliError::Runtime(linexp3::Error::MismatchedConfigs).exit_code(), 2);
        assert_eq!(CliError::io(Path::new("x"), std::io::Error::other("x")).exit_code(), 2);
        assert_eq!(CliError::Verification(2).exit_code(), 3);
    }

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid("1024, 2048,4096").unwrap(), vec![1024, 2048, 4096]);
        assert!(parse_grid("1024,x").is_err());
        assert!(worker_pool(Some(0)).is_err());
    }
}
