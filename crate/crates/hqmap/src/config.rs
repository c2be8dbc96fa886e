//! Run configuration: defaults, an optional TOML file, then command-line
//! flags, each layer overriding the previous one.

use std::path::Path;

use hqmap_core::hypersurfaces::{Signature, DEFAULT_SEED};
use hqmap_core::normalization::{ACCEPT_TOL, NORMALIZE_ORDER};
use hqmap_core::optimize::LmOptions;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Largest accepted hypersurface residual.
    pub membership: f64,
    /// Jet distance below which two maps count as equal.
    pub jet_equality: f64,
    /// Target residual of the least-squares polish.
    pub solver: f64,
    pub max_iter: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { membership: 1e-10, jet_equality: ACCEPT_TOL, solver: LmOptions::default().target, max_iter: 100 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub eps: i32,
    pub tolerances: Tolerances,
    pub jet_order: usize,
    pub seed: u64,
    pub samples: usize,
    pub radius: f64,
    pub format: Format,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            eps: 1,
            tolerances: Tolerances::default(),
            jet_order: NORMALIZE_ORDER,
            seed: DEFAULT_SEED,
            samples: 1000,
            radius: 0.1,
            format: Format::Json,
        }
    }
}

/// Flag values that override the configuration when present.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub eps: Option<i32>,
    pub seed: Option<u64>,
    pub jet_order: Option<usize>,
    pub samples: Option<usize>,
    pub radius: Option<f64>,
    pub tol: Option<f64>,
    pub solver_tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub format: Option<Format>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Defaults, then the file at `path` if given, then `flags`.
    pub fn load(path: Option<&Path>, flags: &Overrides) -> Result<Self, CliError> {
        let mut cfg = match path {
            Some(p) => Self::from_toml(&std::fs::read_to_string(p)?)?,
            None => RunConfig::default(),
        };
        cfg.apply(flags);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply(&mut self, f: &Overrides) {
        if let Some(v) = f.eps {
            self.eps = v;
        }
        if let Some(v) = f.seed {
            self.seed = v;
        }
        if let Some(v) = f.jet_order {
            self.jet_order = v;
        }
        if let Some(v) = f.samples {
            self.samples = v;
        }
        if let Some(v) = f.radius {
            self.radius = v;
        }
        if let Some(v) = f.tol {
            self.tolerances.membership = v;
            self.tolerances.jet_equality = v;
        }
        if let Some(v) = f.solver_tol {
            self.tolerances.solver = v;
        }
        if let Some(v) = f.max_iter {
            self.tolerances.max_iter = v;
        }
        if let Some(v) = f.format {
            self.format = v;
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let t = &self.tolerances;
        if !(t.membership > 0.0 && t.jet_equality > 0.0 && t.solver > 0.0) {
            return Err(CliError::Usage("tolerances must be positive".into()));
        }
        if self.jet_order < 3 {
            return Err(CliError::Usage(format!("jet order {} is below 3", self.jet_order)));
        }
        if !(self.radius > 0.0) {
            return Err(CliError::Usage("radius must be positive".into()));
        }
        self.signature()?;
        Ok(())
    }

    pub fn signature(&self) -> Result<Signature, CliError> {
        Signature::from_i32(self.eps).ok_or_else(|| CliError::Usage(format!("eps must be 1 or -1, got {}", self.eps)))
    }

    pub fn lm_options(&self) -> LmOptions {
        LmOptions { target: self.tolerances.solver, max_iter: self.tolerances.max_iter, ..LmOptions::default() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file_override_defaults() {
        let mut cfg = RunConfig::from_toml("eps = -1\nseed = 7\n[tolerances]\nsolver = 1e-12\n").unwrap();
        assert_eq!((cfg.eps, cfg.seed, cfg.jet_order), (-1, 7, 4));
        assert_eq!(cfg.tolerances.solver, 1e-12);
        cfg.apply(&Overrides { seed: Some(9), ..Overrides::default() });
        assert_eq!((cfg.eps, cfg.seed), (-1, 9));
    }

    #[test]
    fn invalid_configs_rejected() {
        assert!(RunConfig::from_toml("jet_order = 2").is_err());
        assert!(RunConfig::from_toml("eps = 0").is_err());
        assert!(RunConfig::from_toml("[tolerances]\nmembership = -1.0").is_err());
        assert!(RunConfig::from_toml("unknown = 1").is_err());
    }
}
