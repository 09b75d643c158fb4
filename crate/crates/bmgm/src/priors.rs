//! Prior densities: spike-and-slab on edge weights, conjugate-style priors on
//! node parameters, and the exact conditional inclusion probability.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::types::{NodeParams, NodeType};

/// Priors for continuous node parameters: Normal mean, inverse-gamma variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ContinuousPrior {
    pub mu0: f64,
    pub sigma0_sq: f64,
    pub a0: f64,
    pub b0: f64,
}

impl Default for ContinuousPrior {
    fn default() -> Self {
        ContinuousPrior {
            mu0: 0.0,
            sigma0_sq: 100.0,
            a0: 0.001,
            b0: 0.001,
        }
    }
}

/// Priors for count node parameters: Gamma on both the rate and dispersion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CountPrior {
    pub u0: f64,
    pub v0: f64,
    pub c0: f64,
    pub d0: f64,
}

impl Default for CountPrior {
    fn default() -> Self {
        CountPrior {
            u0: 0.001,
            v0: 0.001,
            c0: 0.001,
            d0: 0.001,
        }
    }
}

/// Priors for zero-inflated count parameters: Gamma rate, Beta zero mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ZipPrior {
    pub u0: f64,
    pub v0: f64,
    pub p0: f64,
    pub q0: f64,
}

impl Default for ZipPrior {
    fn default() -> Self {
        ZipPrior {
            u0: 0.001,
            v0: 0.001,
            p0: 0.001,
            q0: 0.001,
        }
    }
}

/// All hyperparameters of the model. `pi_incl` is the prior edge-inclusion
/// probability; [`Hyperparams::defaults_for`] sets it to `2/(p-1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparams {
    /// Spike standard deviation (excluded edges).
    pub v0: f64,
    /// Slab standard deviation (included edges).
    pub v1: f64,
    /// Prior inclusion probability of each edge.
    pub pi_incl: f64,
    /// Exponential rate (as lambda/2) on the fixed diagonal weights.
    pub lambda_exp: f64,
    pub continuous: ContinuousPrior,
    pub count: CountPrior,
    pub zip: ZipPrior,
    /// Dirichlet concentration per level; None means 1/K for a K-level node.
    pub cat_alpha: Option<f64>,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            v0: 0.05,
            v1: 1.0,
            pi_incl: 0.5,
            lambda_exp: 1.0,
            continuous: ContinuousPrior::default(),
            count: CountPrior::default(),
            zip: ZipPrior::default(),
            cat_alpha: None,
        }
    }
}

impl Hyperparams {
    /// Defaults with the inclusion probability scaled for `p` nodes so the
    /// prior expected degree is 2.
    pub fn defaults_for(p: usize) -> Self {
        let pi_incl = if p > 1 {
            (2.0 / (p as f64 - 1.0)).min(1.0 - 1e-12)
        } else {
            0.5
        };
        Hyperparams {
            pi_incl,
            ..Hyperparams::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.v0 > 0.0 && self.v1 > 0.0) {
            return Err(Error::config("spike/slab scales must be positive"));
        }
        if self.v0 >= self.v1 {
            return Err(Error::config(format!(
                "spike scale v0 = {} must be smaller than slab scale v1 = {}",
                self.v0, self.v1
            )));
        }
        if !(self.pi_incl > 0.0 && self.pi_incl < 1.0) {
            return Err(Error::config(format!(
                "inclusion probability must lie in (0,1), got {}",
                self.pi_incl
            )));
        }
        if !(self.lambda_exp > 0.0) {
            return Err(Error::config("diagonal exponential rate must be positive"));
        }
        let pos = [
            self.continuous.sigma0_sq,
            self.continuous.a0,
            self.continuous.b0,
            self.count.u0,
            self.count.v0,
            self.count.c0,
            self.count.d0,
            self.zip.u0,
            self.zip.v0,
            self.zip.p0,
            self.zip.q0,
        ];
        if pos.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::config("node prior hyperparameters must be positive"));
        }
        if let Some(a) = self.cat_alpha {
            if !(a > 0.0) || !a.is_finite() {
                return Err(Error::config("Dirichlet concentration must be positive"));
            }
        }
        Ok(())
    }

    /// Dirichlet concentration used for a K-level categorical node.
    pub fn alpha_for(&self, k: usize) -> f64 {
        self.cat_alpha.unwrap_or(1.0 / k as f64)
    }
}

pub(crate) fn log_normal_pdf(x: f64, mean: f64, var: f64) -> f64 {
    let z = x - mean;
    -0.5 * z * z / var - 0.5 * (2.0 * std::f64::consts::PI * var).ln()
}

fn log_gamma_pdf(x: f64, shape: f64, rate: f64) -> f64 {
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    shape * rate.ln() - ln_gamma(shape) + (shape - 1.0) * x.ln() - rate * x
}

fn log_inv_gamma_pdf(x: f64, shape: f64, scale: f64) -> f64 {
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    shape * scale.ln() - ln_gamma(shape) - (shape + 1.0) * x.ln() - scale / x
}

fn log_beta_pdf(x: f64, p: f64, q: f64) -> f64 {
    if !(x > 0.0 && x < 1.0) {
        return f64::NEG_INFINITY;
    }
    ln_gamma(p + q) - ln_gamma(p) - ln_gamma(q) + (p - 1.0) * x.ln() + (q - 1.0) * (1.0 - x).ln()
}

fn log_dirichlet_pdf(probs: &[f64], alpha: f64) -> f64 {
    if probs.iter().any(|p| !(*p > 0.0 && *p < 1.0)) {
        return f64::NEG_INFINITY;
    }
    let k = probs.len() as f64;
    let mut acc = ln_gamma(k * alpha) - k * ln_gamma(alpha);
    for p in probs {
        acc += (alpha - 1.0) * p.ln();
    }
    acc
}

/// Log prior density of one node's parameters. Values outside the parameter
/// support yield -inf so MH reject them rather than erroring.
pub fn log_prior_node(ty: NodeType, theta: &NodeParams, hyper: &Hyperparams) -> f64 {
    match (ty, theta) {
        (NodeType::Continuous, NodeParams::Continuous { mu, sigma_sq }) => {
            log_normal_pdf(*mu, hyper.continuous.mu0, hyper.continuous.sigma0_sq)
                + log_inv_gamma_pdf(*sigma_sq, hyper.continuous.a0, hyper.continuous.b0)
        }
        (NodeType::Count, NodeParams::Count { mu, nu }) => {
            log_gamma_pdf(*mu, hyper.count.u0, hyper.count.v0)
                + log_gamma_pdf(*nu, hyper.count.c0, hyper.count.d0)
        }
        (NodeType::ZeroInflatedCount, NodeParams::ZeroInflatedCount { pi, mu }) => {
            log_gamma_pdf(*mu, hyper.zip.u0, hyper.zip.v0)
                + log_beta_pdf(*pi, hyper.zip.p0, hyper.zip.q0)
        }
        (NodeType::Categorical(k), NodeParams::Categorical { probs }) if probs.len() == k => {
            log_dirichlet_pdf(probs, hyper.alpha_for(k))
        }
        _ => f64::NEG_INFINITY,
    }
}

/// Log spike-and-slab density of one edge weight given its indicator:
/// `N(beta | 0, v1^2)` when included, `N(beta | 0, v0^2)` when excluded.
pub fn log_prior_beta(beta: f64, z: bool, hyper: &Hyperparams) -> f64 {
    let sd = if z { hyper.v1 } else { hyper.v0 };
    log_normal_pdf(beta, 0.0, sd * sd)
}

/// Exact conditional inclusion probability
/// `Pr(z = 1 | beta) = pi N(beta|0,v1^2) / (pi N(beta|0,v1^2) + (1-pi) N(beta|0,v0^2))`,
/// evaluated in log space so extreme weights saturate to 0/1 without overflow.
pub fn z_posterior_prob(beta: f64, hyper: &Hyperparams) -> f64 {
    let a = log_normal_pdf(beta, 0.0, hyper.v1 * hyper.v1) + hyper.pi_incl.ln();
    let b = log_normal_pdf(beta, 0.0, hyper.v0 * hyper.v0) + (1.0 - hyper.pi_incl).ln();
    // sigmoid(a - b), stable on both sides
    let d = a - b;
    if d >= 0.0 {
        1.0 / (1.0 + (-d).exp())
    } else {
        let e = d.exp();
        e / (1.0 + e)
    }
}
