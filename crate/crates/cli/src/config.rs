//! Run configuration: a versioned JSON file merged under command-line flags.

use std::path::{Path, PathBuf};

use qzk_core::qsvt::SvtMode;
use qzk_core::signpoly::DEFAULT_MAX_DEGREE;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const CONFIG_VERSION: u32 = 1;
pub const MAX_SAMPLES: u64 = 100_000_000;

/// Contents of a `--config` file. Every field but `version` is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub version: u32,
    pub seed: Option<u64>,
    pub eps: Option<f64>,
    pub delta: Option<f64>,
    pub mode: Option<String>,
    pub samples: Option<u64>,
    pub jobs: Option<usize>,
    pub out: Option<PathBuf>,
    pub max_degree: Option<usize>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let cfg: ConfigFile = serde_json::from_str(&text)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        if cfg.version != CONFIG_VERSION {
            return Err(CliError::Invalid(format!(
                "config version {} is not supported (expected {CONFIG_VERSION})",
                cfg.version
            )));
        }
        Ok(cfg)
    }
}

/// Resolved settings shared by every command.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub version: u32,
    pub seed: u64,
    pub eps: f64,
    pub delta: Option<f64>,
    pub mode: String,
    pub samples: u64,
    pub jobs: usize,
    pub max_degree: usize,
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub eps: Option<f64>,
    pub delta: Option<f64>,
    pub mode: Option<String>,
    pub samples: Option<u64>,
    pub jobs: Option<usize>,
    pub out: Option<PathBuf>,
    pub max_degree: Option<usize>,
}

impl RunConfig {
    pub fn resolve(file: Option<ConfigFile>, flags: Overrides) -> CliResult<Self> {
        let file = file.unwrap_or(ConfigFile {
            version: CONFIG_VERSION,
            ..ConfigFile::default()
        });
        let cfg = RunConfig {
            version: CONFIG_VERSION,
            seed: flags.seed.or(file.seed).unwrap_or(0),
            eps: flags.eps.or(file.eps).unwrap_or(1e-2),
            delta: flags.delta.or(file.delta),
            mode: flags.mode.or(file.mode).unwrap_or_else(|| "chebyshev".into()),
            samples: flags.samples.or(file.samples).unwrap_or(0),
            jobs: flags.jobs.or(file.jobs).unwrap_or(1),
            max_degree: flags.max_degree.or(file.max_degree).unwrap_or(DEFAULT_MAX_DEGREE),
            out: flags.out.or(file.out),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> CliResult<()> {
        self.svt_mode()?;
        if !self.eps.is_finite() {
            return Err(CliError::Invalid(format!("invalid target error eps = {}", self.eps)));
        }
        if let Some(d) = self.delta {
            if !(d > 0.0 && d < 1.0) {
                return Err(CliError::Invalid(format!("delta = {d} must lie in (0, 1)")));
            }
        }
        if self.samples > MAX_SAMPLES {
            return Err(CliError::Invalid(format!(
                "samples = {} exceeds {MAX_SAMPLES}",
                self.samples
            )));
        }
        if self.jobs == 0 || self.jobs > 256 {
            return Err(CliError::Invalid(format!("jobs = {} must lie in 1..=256", self.jobs)));
        }
        if self.max_degree.is_multiple_of(2) {
            return Err(CliError::Invalid(format!(
                "max_degree = {} must be odd",
                self.max_degree
            )));
        }
        Ok(())
    }

    pub fn svt_mode(&self) -> CliResult<SvtMode> {
        self.mode
            .parse()
            .map_err(|_| CliError::Invalid(format!("unknown mode '{}' (oracle or chebyshev)", self.mode)))
    }

    /// Runs `f` on a pool of `jobs` worker threads.
    pub fn install<T: Send>(&self, f: impl FnOnce() -> T + Send) -> CliResult<T> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.jobs)
            .build()
            .map_err(|e| CliError::Invalid(format!("cannot start worker pool: {e}")))?;
        Ok(pool.install(f))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let file = ConfigFile {
            version: 1,
            seed: Some(5),
            eps: Some(0.1),
            ..ConfigFile::default()
        };
        let cfg = RunConfig::resolve(
            Some(file),
            Overrides {
                seed: Some(9),
                ..Overrides::default()
            },
        )
        .unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.eps, 0.1);
        assert_eq!(cfg.mode, "chebyshev");
    }

    #[test]
    fn unknown_keys_and_versions_rejected() {
        assert!(serde_json::from_str::<ConfigFile>(r#"{"version": 1, "sead": 3}"#).is_err());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.json");
        std::fs::write(&path, r#"{"version": 2}"#).unwrap();
        assert_eq!(ConfigFile::load(&path).unwrap_err().code(), 2);
        std::fs::write(&path, r#"{"version": 1, "eps": 0.05}"#).unwrap();
        assert_eq!(ConfigFile::load(&path).unwrap().eps, Some(0.05));
    }

    #[test]
    fn invalid_values_rejected() {
        let bad = |o: Overrides| RunConfig::resolve(None, o).unwrap_err().code();
        assert_eq!(bad(Overrides { mode: Some("fast".into()), ..Default::default() }), 2);
        assert_eq!(bad(Overrides { jobs: Some(0), ..Default::default() }), 2);
        assert_eq!(bad(Overrides { max_degree: Some(10), ..Default::default() }), 2);
        assert_eq!(bad(Overrides { delta: Some(1.5), ..Default::default() }), 2);
    }
}
