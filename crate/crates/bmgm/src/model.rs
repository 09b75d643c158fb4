//! Pairwise mixed graphical model: node potentials, the bounded interaction
//! transform, node-conditional densities, and their normalizing constants.
//!
//! The joint density is proportional to
//! `exp{ sum_s f_s(x_s) + sum_{s<t} beta_st F(x_s) F(x_t) }`,
//! so each node's conditional given the rest is
//! `exp{ f_s(x_s) + C * F(x_s) } / A` with `C = sum_{t != s} beta_ts F(x_t)`
//! and `A` the sum/integral of the numerator over the node's support.

use std::sync::OnceLock;

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::types::{pairs, EdgeState, NodeParams, NodeType};

/// Largest factorial argument covered by the shared lookup table.
const LN_FACT_TABLE_SIZE: usize = 4097;

fn ln_factorial_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        (0..LN_FACT_TABLE_SIZE)
            // log(0!) and log(1!) are exactly zero; ln_gamma(1) is not.
            .map(|x| if x < 2 { 0.0 } else { ln_gamma(x as f64 + 1.0) })
            .collect()
    })
}

/// log(x!) via the log-gamma function; table-backed for small x.
pub fn ln_factorial(x: u64) -> f64 {
    let table = ln_factorial_table();
    if (x as usize) < table.len() {
        table[x as usize]
    } else {
        ln_gamma(x as f64 + 1.0)
    }
}

/// Interaction transform F. Count-like nodes use the bounded map
/// `(arctan x)^lambda_f`; continuous and categorical nodes use the identity.
pub fn f_transform(ty: NodeType, lambda_f: f64, x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::domain(format!("non-finite value {x} in transform")));
    }
    if !(lambda_f > 0.0) || !lambda_f.is_finite() {
        return Err(Error::domain(format!(
            "transform exponent must be positive and finite, got {lambda_f}"
        )));
    }
    match ty {
        NodeType::Continuous | NodeType::Categorical(_) => Ok(x),
        NodeType::Count | NodeType::ZeroInflatedCount => {
            if x < 0.0 {
                return Err(Error::domain(format!(
                    "count transform needs x >= 0, got {x}"
                )));
            }
            Ok(count_transform(x, lambda_f))
        }
    }
}

#[inline]
fn count_transform(x: f64, lambda_f: f64) -> f64 {
    if lambda_f == 1.0 {
        x.atan()
    } else {
        x.atan().powf(lambda_f)
    }
}

/// Log node potential f_s(x; theta). Returns -inf for x outside the node's
/// support so that samplers treat such states as having zero probability.
pub fn log_node_potential(ty: NodeType, theta: &NodeParams, x: f64) -> f64 {
    if !ty.value_in_domain(x) {
        return f64::NEG_INFINITY;
    }
    match (ty, theta) {
        (NodeType::Continuous, NodeParams::Continuous { mu, sigma_sq }) => {
            let z = x - mu;
            -0.5 * z * z / sigma_sq - 0.5 * sigma_sq.ln()
        }
        (NodeType::Count, NodeParams::Count { mu, nu }) => {
            nu * (x * mu.ln() - ln_factorial(x as u64))
        }
        (NodeType::ZeroInflatedCount, NodeParams::ZeroInflatedCount { pi, mu }) => {
            if x == 0.0 {
                (pi + (1.0 - pi) * (-mu).exp()).ln()
            } else {
                (1.0 - pi).ln() - mu + x * mu.ln() - ln_factorial(x as u64)
            }
        }
        (NodeType::Categorical(_), NodeParams::Categorical { probs }) => probs[x as usize].ln(),
        _ => f64::NEG_INFINITY,
    }
}

/// Interaction sum C = sum_{t != s} beta_ts F(x_t) for node s against a
/// complete row (missing cells, encoded as NaN, are a domain error).
pub fn interaction_sum(
    s: usize,
    row: &[f64],
    types: &[NodeType],
    edges: &EdgeState,
) -> Result<f64> {
    let mut c = 0.0;
    for t in 0..types.len() {
        if t == s {
            continue;
        }
        let beta = edges.beta(t, s);
        if beta == 0.0 {
            continue;
        }
        c += beta * f_transform(types[t], edges.lambda_f(), row[t])?;
    }
    Ok(c)
}

/// Unnormalized log conditional of node s at its current row value:
/// `f_s(x_s) + C * F(x_s)`.
pub fn log_unnorm_conditional(
    s: usize,
    row: &[f64],
    types: &[NodeType],
    theta: &NodeParams,
    edges: &EdgeState,
) -> Result<f64> {
    let c = interaction_sum(s, row, types, edges)?;
    log_unnorm_conditional_at(types[s], theta, row[s], c, edges.lambda_f())
}

/// Scalar form of the unnormalized log conditional with a precomputed
/// interaction sum `c`.
pub fn log_unnorm_conditional_at(
    ty: NodeType,
    theta: &NodeParams,
    x: f64,
    c: f64,
    lambda_f: f64,
) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::domain(format!(
            "missing or non-finite value {x} for the conditioned node"
        )));
    }
    Ok(log_node_potential(ty, theta, x) + c * f_transform(ty, lambda_f, x)?)
}

/// Streaming log-sum-exp accumulator; no allocation, max-stabilized.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LogSumExp {
    max: f64,
    sum: f64,
}

impl LogSumExp {
    pub(crate) fn new() -> Self {
        LogSumExp {
            max: f64::NEG_INFINITY,
            sum: 0.0,
        }
    }

    #[inline]
    pub(crate) fn add(&mut self, a: f64) {
        if a == f64::NEG_INFINITY {
            return;
        }
        if a > self.max {
            self.sum = self.sum * (self.max - a).exp() + 1.0;
            self.max = a;
        } else {
            self.sum += (a - self.max).exp();
        }
    }

    pub(crate) fn value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.sum.ln()
        }
    }
}

/// Log normalizing constant of the conditional `exp{f_s(x) + c F(x)}`:
/// closed form for continuous and categorical nodes, truncated log-sum-exp
/// over `x = 0..=b` for count-like nodes.
pub fn log_norm_const(
    ty: NodeType,
    theta: &NodeParams,
    c: f64,
    lambda_f: f64,
    b: usize,
) -> Result<f64> {
    theta.validate(ty)?;
    if !c.is_finite() {
        return Err(Error::numeric(format!("non-finite interaction sum {c}")));
    }
    let value = match (ty, theta) {
        (NodeType::Continuous, NodeParams::Continuous { mu, sigma_sq }) => {
            // integral of exp(-(x-mu)^2/(2 s2) - log(s2)/2 + c x); the node
            // potential's -log(s2)/2 cancels the s2 inside sqrt(2 pi s2).
            0.5 * (2.0 * std::f64::consts::PI).ln() + c * mu + 0.5 * c * c * sigma_sq
        }
        (NodeType::Categorical(k), NodeParams::Categorical { probs }) => {
            let mut lse = LogSumExp::new();
            for j in 0..k {
                lse.add(probs[j].ln() + c * j as f64);
            }
            lse.value()
        }
        (NodeType::Count, _) | (NodeType::ZeroInflatedCount, _) => {
            let mut lse = LogSumExp::new();
            for x in 0..=b {
                let xf = x as f64;
                lse.add(log_node_potential(ty, theta, xf) + c * count_transform(xf, lambda_f));
            }
            lse.value()
        }
        _ => unreachable!("validate() enforces the type/params match"),
    };
    if !value.is_finite() {
        return Err(Error::numeric(format!(
            "normalizing constant evaluated to {value} for a {} node",
            ty.describe()
        )));
    }
    Ok(value)
}

/// Normalized log conditional density/mass of node s at `x`, given the
/// interaction sum `c`.
pub fn log_conditional(
    ty: NodeType,
    theta: &NodeParams,
    x: f64,
    c: f64,
    lambda_f: f64,
    b: usize,
) -> Result<f64> {
    let unnorm = log_unnorm_conditional_at(ty, theta, x, c, lambda_f)?;
    let norm = log_norm_const(ty, theta, c, lambda_f, b)?;
    Ok(unnorm - norm)
}

/// Unnormalized log joint density of one complete row:
/// `sum_s f_s(x_s) + sum_{s<t} beta_st F(x_s) F(x_t)`.
pub fn log_joint_unnorm(
    row: &[f64],
    types: &[NodeType],
    thetas: &[NodeParams],
    edges: &EdgeState,
) -> Result<f64> {
    let p = types.len();
    if row.len() != p || thetas.len() != p || edges.p() != p {
        return Err(Error::domain("row, types, and edge state sizes disagree"));
    }
    let mut total = 0.0;
    let mut f_vals = vec![0.0; p];
    for s in 0..p {
        if !row[s].is_finite() {
            return Err(Error::domain(format!(
                "missing or non-finite value at position {s}"
            )));
        }
        total += log_node_potential(types[s], &thetas[s], row[s]);
        f_vals[s] = f_transform(types[s], edges.lambda_f(), row[s])?;
    }
    for (s, t) in pairs(p) {
        let beta = edges.beta(s, t);
        if beta != 0.0 {
            total += beta * f_vals[s] * f_vals[t];
        }
    }
    Ok(total)
}

// ---------------------------------------------------------------------------
// Table-backed fast paths used by the samplers. Behavior is identical to the
// public evaluators; tables cache log(x!) and F(x) on the integer grid.
// ---------------------------------------------------------------------------

/// Per-run cache of the count transform on the integer grid 0..=len-1.
#[derive(Debug, Clone)]
pub(crate) struct CountGrid {
    pub f: Vec<f64>,
}

impl CountGrid {
    pub(crate) fn new(lambda_f: f64, max_x: usize) -> Self {
        CountGrid {
            f: (0..=max_x)
                .map(|x| count_transform(x as f64, lambda_f))
                .collect(),
        }
    }
}

/// Truncated log normalizer of a CMP-count conditional, table-backed.
#[inline]
pub(crate) fn cmp_log_norm_tab(mu: f64, nu: f64, c: f64, b: usize, grid: &CountGrid) -> f64 {
    let lf = ln_factorial_table();
    let ln_mu = mu.ln();
    let mut lse = LogSumExp::new();
    for x in 0..=b {
        lse.add(nu * (x as f64 * ln_mu - lf[x]) + c * grid.f[x]);
    }
    lse.value()
}

/// Truncated log normalizer of a ZIP conditional, table-backed.
#[inline]
pub(crate) fn zip_log_norm_tab(pi: f64, mu: f64, c: f64, b: usize, grid: &CountGrid) -> f64 {
    let lf = ln_factorial_table();
    let ln_mu = mu.ln();
    let ln_1mpi = (1.0 - pi).ln();
    let mut lse = LogSumExp::new();
    lse.add((pi + (1.0 - pi) * (-mu).exp()).ln());
    for x in 1..=b {
        lse.add(ln_1mpi - mu + x as f64 * ln_mu - lf[x] + c * grid.f[x]);
    }
    lse.value()
}
