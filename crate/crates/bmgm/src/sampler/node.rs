//! Metropolis updates for the node-specific parameters, one node at a time.
//!
//! Proposals are Gaussian random walks on unconstrained scales (log, logit,
//! or log-weights), so each acceptance ratio carries the matching
//! change-of-variables term.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::exchange;
use crate::model::log_node_potential;
use crate::priors::log_prior_node;
use crate::types::{NodeParams, NodeType};

use super::{log_norm_const_fast, state::ChainState, Backend};

pub(crate) fn update_node_params(state: &mut ChainState, s: usize) -> Result<()> {
    let c_std = state.interaction_c_std(s);
    let c_raw = state.to_raw_coeff(s, &c_std);
    let ty = state.types[s];
    let cur = state.thetas[s].clone();
    let prop = propose_theta(ty, &cur, state.theta_scale[s], &mut state.rng);

    let delta_prior = log_prior_node(ty, &prop, &state.hyper) - log_prior_node(ty, &cur, &state.hyper);
    let delta_jacobian = log_jacobian(&prop) - log_jacobian(&cur);
    let delta_loglik = match state.backend {
        Backend::Truncated => truncated_delta(state, s, &cur, &prop, &c_raw)?,
        Backend::Exchange => exchange::exchange_delta_theta(
            ty,
            &cur,
            &prop,
            &c_raw,
            (0..state.n).map(|i| state.data[(i, s)]).collect(),
            &state.grid,
            &state.arms,
            &mut state.rng,
        )?,
    };

    let log_alpha = delta_loglik + delta_prior + delta_jacobian;
    let u: f64 = state.rng.random();
    let accept = !log_alpha.is_nan() && u.ln() < log_alpha;
    if accept {
        state.thetas[s] = prop;
    }
    state.theta_acc[s].record(accept, state.post_burnin);
    Ok(())
}

/// Likelihood ratio under the truncated-normalizer backend: the change in
/// node potentials minus the change in per-observation normalizers.
fn truncated_delta(
    state: &ChainState,
    s: usize,
    cur: &NodeParams,
    prop: &NodeParams,
    c_raw: &[f64],
) -> Result<f64> {
    let ty = state.types[s];
    let mut delta = 0.0;
    for i in 0..state.n {
        let x = state.data[(i, s)];
        delta += log_node_potential(ty, prop, x) - log_node_potential(ty, cur, x);
        delta -= log_norm_const_fast(ty, prop, c_raw[i], state.cfg.b_trunc, &state.grid)
            - log_norm_const_fast(ty, cur, c_raw[i], state.cfg.b_trunc, &state.grid);
    }
    Ok(delta)
}

/// Random-walk proposal on the unconstrained scale for each parameter block.
pub(crate) fn propose_theta<R: Rng>(
    ty: NodeType,
    cur: &NodeParams,
    scale: f64,
    rng: &mut R,
) -> NodeParams {
    match (ty, cur) {
        (NodeType::Continuous, NodeParams::Continuous { mu, sigma_sq }) => {
            let z1: f64 = rng.sample(StandardNormal);
            let z2: f64 = rng.sample(StandardNormal);
            NodeParams::Continuous {
                mu: mu + scale * z1,
                sigma_sq: (sigma_sq.ln() + scale * z2).exp(),
            }
        }
        (NodeType::Count, NodeParams::Count { mu, nu }) => {
            let z1: f64 = rng.sample(StandardNormal);
            let z2: f64 = rng.sample(StandardNormal);
            NodeParams::Count {
                mu: (mu.ln() + scale * z1).exp(),
                nu: (nu.ln() + scale * z2).exp(),
            }
        }
        (NodeType::ZeroInflatedCount, NodeParams::ZeroInflatedCount { pi, mu }) => {
            let z1: f64 = rng.sample(StandardNormal);
            let z2: f64 = rng.sample(StandardNormal);
            let logit = (pi / (1.0 - pi)).ln() + scale * z1;
            NodeParams::ZeroInflatedCount {
                pi: 1.0 / (1.0 + (-logit).exp()),
                mu: (mu.ln() + scale * z2).exp(),
            }
        }
        (NodeType::Categorical(_), NodeParams::Categorical { probs }) => {
            let logw: Vec<f64> = probs
                .iter()
                .map(|p| {
                    let z: f64 = rng.sample(StandardNormal);
                    p.ln() + scale * z
                })
                .collect();
            let max = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let weights: Vec<f64> = logw.iter().map(|l| (l - max).exp()).collect();
            let total: f64 = weights.iter().sum();
            NodeParams::Categorical {
                probs: weights.iter().map(|w| w / total).collect(),
            }
        }
        _ => cur.clone(),
    }
}

/// Log change-of-variables term for the unconstrained parametrization.
pub(crate) fn log_jacobian(theta: &NodeParams) -> f64 {
    match theta {
        NodeParams::Continuous { sigma_sq, .. } => sigma_sq.ln(),
        NodeParams::Count { mu, nu } => mu.ln() + nu.ln(),
        NodeParams::ZeroInflatedCount { pi, mu } => pi.ln() + (1.0 - pi).ln() + mu.ln(),
        NodeParams::Categorical { probs } => probs.iter().map(|p| p.ln()).sum(),
    }
}
