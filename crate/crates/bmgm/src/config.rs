//! Run configuration: one TOML file covering data location, column types,
//! priors, sampler settings, backend choice, and the FDR target.
//!
//! Every field has a default, so an empty file (or no file at all) is a valid
//! configuration; a fit then needs only a data path and a type list. The one
//! value without a fixed default is the prior edge-inclusion probability,
//! which, when not set explicitly, is resolved to `2/(p-1)` once the column
//! count `p` of the actual dataset is known.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exchange::ArmsConfig;
use crate::priors::{ContinuousPrior, CountPrior, Hyperparams, ZipPrior};
use crate::sampler::{Backend, SamplerConfig};

/// The `[prior]` section: [`Hyperparams`] with the inclusion probability left
/// optional so it can track the dataset size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PriorSection {
    pub v0: f64,
    pub v1: f64,
    /// Explicit prior inclusion probability; None means `2/(p-1)`.
    pub pi_incl: Option<f64>,
    pub lambda_exp: f64,
    pub continuous: ContinuousPrior,
    pub count: CountPrior,
    pub zip: ZipPrior,
    pub cat_alpha: Option<f64>,
}

impl Default for PriorSection {
    fn default() -> Self {
        let h = Hyperparams::default();
        PriorSection {
            v0: h.v0,
            v1: h.v1,
            pi_incl: None,
            lambda_exp: h.lambda_exp,
            continuous: h.continuous,
            count: h.count,
            zip: h.zip,
            cat_alpha: h.cat_alpha,
        }
    }
}

impl PriorSection {
    /// Concrete hyperparameters for a `p`-column dataset.
    pub fn resolve(&self, p: usize) -> Hyperparams {
        Hyperparams {
            v0: self.v0,
            v1: self.v1,
            pi_incl: self
                .pi_incl
                .unwrap_or_else(|| Hyperparams::defaults_for(p).pi_incl),
            lambda_exp: self.lambda_exp,
            continuous: self.continuous,
            count: self.count,
            zip: self.zip,
            cat_alpha: self.cat_alpha,
        }
    }
}

/// Everything a fit needs beyond the dataset itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    /// Input CSV path; command-line flags may supply or override it.
    pub data: Option<PathBuf>,
    /// Column-type tokens (see [`crate::data::parse_type_tokens`]).
    pub types: Option<String>,
    /// Output directory for run artifacts.
    pub output: Option<PathBuf>,
    pub backend: Backend,
    pub fdr_target: f64,
    pub prior: PriorSection,
    pub sampler: SamplerConfig,
    pub exchange: ArmsConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            data: None,
            types: None,
            output: None,
            backend: Backend::Truncated,
            fdr_target: 0.05,
            prior: PriorSection::default(),
            sampler: SamplerConfig::default(),
            exchange: ArmsConfig::default(),
        }
    }
}

impl RunConfig {
    /// Loads and validates a TOML configuration file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("cannot read config {}", path.display()), e))?;
        let cfg: RunConfig = toml::from_str(&text)
            .map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fdr_target > 0.0 && self.fdr_target < 1.0) {
            return Err(Error::config(format!(
                "fdr_target must lie in (0,1), got {}",
                self.fdr_target
            )));
        }
        self.sampler.validate()?;
        self.exchange.validate()?;
        // The p=2 placeholder inclusion probability is always in range, so
        // this checks the explicit value and every other prior field.
        self.prior.resolve(2).validate()?;
        Ok(())
    }

    /// Canonical serialized form; hashed into manifests so reruns can verify
    /// they use the same configuration.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config(format!("cannot serialize config: {e}")))
    }
}
