//! Joint Metropolis-Hastings update of one column of the symmetric weight
//! matrix.
//!
//! The proposal is an independence draw from the Laplace approximation of the
//! column's conditional posterior: a damped Newton ascent finds the mode of
//! the node's conditional log-likelihood plus the spike-and-slab log-prior,
//! and the curvature there sets the proposal precision. For continuous nodes
//! the conditional is exactly Gaussian, so the proposal is the conditional
//! itself. The proposal depends on the data, the node parameters, and the
//! indicators but not on the current column weights, so its quadratic form
//! enters the acceptance ratio as a standard independence correction.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::exchange;
use crate::model::log_node_potential;
use crate::priors::log_normal_pdf;
use crate::types::{NodeParams, NodeType};

use super::{log_norm_const_fast, state::ChainState, Backend, Warnings};

pub(crate) fn update_omega_column(state: &mut ChainState, l: usize) -> Result<()> {
    let n = state.n;
    let others: Vec<usize> = (0..state.p).filter(|&t| t != l).collect();
    let m = others.len();

    let prior_var: Vec<f64> = others
        .iter()
        .map(|&s| {
            if state.edges.z(s, l) {
                state.hyper.v1 * state.hyper.v1
            } else {
                state.hyper.v0 * state.hyper.v0
            }
        })
        .collect();
    let beta_cur = DVector::from_iterator(m, others.iter().map(|&s| state.edges.beta(s, l)));
    let g = DVector::from_iterator(m, others.iter().map(|&s| state.gram[(s, l)]));

    let (mean, chol) = match laplace_proposal(state, l, &others, &prior_var, &g) {
        Some(pair) => pair,
        None => {
            state.warnings.proposal_fallbacks += 1;
            let d_inv = DMatrix::from_diagonal(&DVector::from_iterator(
                m,
                prior_var.iter().map(|v| 1.0 / v),
            ));
            let chol = Cholesky::new(d_inv).expect("positive diagonal matrix always factors");
            (chol.solve(&g), chol)
        }
    };
    let scale = state.col_scale[l];
    let z_draw = DVector::from_iterator(m, (0..m).map(|_| -> f64 {
        state.rng.sample(StandardNormal)
    }));
    let lt = chol.l().transpose();
    let step = lt
        .solve_upper_triangular(&z_draw)
        .ok_or_else(|| Error::numeric("triangular solve failed in column proposal"))?;
    let beta_prop = &mean + scale * step;

    // log q(current) - log q(proposed); the shared normalizing constant and
    // determinant cancel because both sides use the same covariance.
    let qf = |b: &DVector<f64>| {
        let v = &lt * (b - &mean);
        v.norm_squared()
    };
    let proposal_correction = (qf(&beta_prop) - qf(&beta_cur)) / (2.0 * scale * scale);

    let mut delta_prior = 0.0;
    for j in 0..m {
        delta_prior += log_normal_pdf(beta_prop[j], 0.0, prior_var[j])
            - log_normal_pdf(beta_cur[j], 0.0, prior_var[j]);
    }

    // Per-observation interaction coefficients on the raw transform scale.
    let c_std_cur = state.interaction_c_std(l);
    let mut c_std_prop = vec![0.0; n];
    for (j, &t) in others.iter().enumerate() {
        let b = beta_prop[j];
        if b == 0.0 {
            continue;
        }
        for (ci, v) in c_std_prop.iter_mut().zip(state.f_std.column(t).iter()) {
            *ci += b * v;
        }
    }
    let c_raw_cur = state.to_raw_coeff(l, &c_std_cur);
    let c_raw_prop = state.to_raw_coeff(l, &c_std_prop);

    let ty = state.types[l];
    let delta_loglik = match state.backend {
        Backend::Truncated => {
            let theta = &state.thetas[l];
            let mut delta = 0.0;
            for i in 0..n {
                delta += state.f_raw[(i, l)] * (c_raw_prop[i] - c_raw_cur[i]);
                delta -= log_norm_const_fast(ty, theta, c_raw_prop[i], state.cfg.b_trunc, &state.grid)
                    - log_norm_const_fast(ty, theta, c_raw_cur[i], state.cfg.b_trunc, &state.grid);
            }
            delta
        }
        Backend::Exchange => exchange::exchange_delta_column(
            ty,
            &state.thetas[l],
            &c_raw_cur,
            &c_raw_prop,
            (0..n).map(|i| state.f_raw[(i, l)]).collect(),
            &state.grid,
            &state.arms,
            &mut state.rng,
        )?,
    };

    let log_alpha = delta_loglik + delta_prior + proposal_correction;
    let u: f64 = state.rng.random();
    let accept = !log_alpha.is_nan() && u.ln() < log_alpha;
    if accept {
        for (j, &s) in others.iter().enumerate() {
            state.edges.set_beta(s, l, beta_prop[j]);
        }
    }
    state.col_acc[l].record(accept, state.post_burnin);
    Ok(())
}

/// Floor on the curvature scale so a degenerate node parameter cannot zero
/// out the likelihood part of the proposal precision.
const CURVATURE_FLOOR: f64 = 1e-8;

/// Newton iteration budget for the discrete-node mode search.
const MAX_NEWTON: usize = 12;

/// Newton stops once the step norm falls below this (standardized scale).
const NEWTON_TOL: f64 = 1e-6;

/// Cap on a single Newton step so a flat likelihood stretch cannot launch the
/// iterate past the mode.
const MAX_STEP: f64 = 8.0;

/// Mode and curvature factor of the Laplace approximation to column `l`'s
/// conditional posterior (node `l`'s conditional likelihood times the
/// spike-and-slab prior at the current indicators).
///
/// Continuous nodes have an exactly Gaussian conditional with precision
/// `(sigma^2 / sd_l^2) * G_sub + D^{-1}`, solved in closed form. Discrete
/// nodes run a damped Newton ascent from zero with the exact per-observation
/// gradient and Hessian; both are functions of the data, the node parameters,
/// and the indicators only, never of the current column weights, which keeps
/// the draw a valid independence proposal. `None` signals a factorization
/// failure or non-finite iterate; the caller falls back to the prior-only
/// proposal.
fn laplace_proposal(
    state: &mut ChainState,
    l: usize,
    others: &[usize],
    prior_var: &[f64],
    g: &DVector<f64>,
) -> Option<(DVector<f64>, Cholesky<f64, Dyn>)> {
    let m = others.len();
    let sd_l = state.col_sd[l];
    let ty = state.types[l];

    if let NodeParams::Continuous { sigma_sq, .. } = state.thetas[l] {
        let curvature = sigma_sq.max(CURVATURE_FLOOR) / (sd_l * sd_l);
        let mut prec = submatrix_without(&state.gram, l) * curvature;
        for j in 0..m {
            prec[(j, j)] += 1.0 / prior_var[j];
        }
        let chol = factor_with_ridge(&prec, &mut state.warnings)?;
        let mean = chol.solve(g);
        return Some((mean, chol));
    }

    // Transform value and offset-free log weight per support point; the log
    // weights are shared across observations, only the tilt `c * f` varies.
    let theta = &state.thetas[l];
    let support: Vec<(f64, f64)> = match ty {
        NodeType::Categorical(k) => (0..k)
            .map(|j| (j as f64, log_node_potential(ty, theta, j as f64)))
            .collect(),
        _ => (0..=state.cfg.b_trunc)
            .map(|x| (state.grid.f[x], log_node_potential(ty, theta, x as f64)))
            .collect(),
    };

    let n = state.n;
    let f_sub = state.f_std.select_columns(others.iter());
    let f_l: Vec<f64> = (0..n).map(|i| state.f_raw[(i, l)]).collect();

    // Log-posterior value, conditional means of F, and conditional variances
    // over sd^2, all at one iterate; `None` on numeric breakdown.
    let eval = |b: &DVector<f64>| -> Option<(f64, DVector<f64>, Vec<f64>)> {
        let c_std = &f_sub * b;
        let mut target = 0.0;
        let mut e = DVector::zeros(n);
        let mut vw = vec![0.0; n];
        for i in 0..n {
            let c = c_std[i] / sd_l;
            let max = support
                .iter()
                .map(|&(f, lw)| lw + c * f)
                .fold(f64::NEG_INFINITY, f64::max);
            let (mut norm, mut m1, mut m2) = (0.0, 0.0, 0.0);
            for &(f, lw) in &support {
                let w = (lw + c * f - max).exp();
                norm += w;
                m1 += w * f;
                m2 += w * f * f;
            }
            m1 /= norm;
            m2 /= norm;
            target += f_l[i] * c - (max + norm.ln());
            e[i] = m1;
            vw[i] = (m2 - m1 * m1).max(0.0) / (sd_l * sd_l);
        }
        for j in 0..b.nrows() {
            target -= 0.5 * b[j] * b[j] / prior_var[j];
        }
        if target.is_finite() && e.iter().all(|v| v.is_finite()) {
            Some((target, e, vw))
        } else {
            None
        }
    };

    let mut b = DVector::zeros(m);
    let (mut t_cur, mut e, mut vw) = eval(&b)?;
    let mut factor: Option<Cholesky<f64, Dyn>> = None;
    for _ in 0..MAX_NEWTON {
        let mut grad = g - f_sub.tr_mul(&e) / sd_l;
        for j in 0..m {
            grad[j] -= b[j] / prior_var[j];
        }
        let mut weighted = f_sub.clone();
        for (i, w) in vw.iter().enumerate() {
            weighted.row_mut(i).scale_mut(*w);
        }
        let mut hess = f_sub.tr_mul(&weighted);
        for j in 0..m {
            hess[(j, j)] += 1.0 / prior_var[j];
        }
        let chol = factor_with_ridge(&hess, &mut state.warnings)?;
        let mut step = chol.solve(&grad);
        let norm = step.norm();
        if !norm.is_finite() {
            return None;
        }
        if norm > MAX_STEP {
            step *= MAX_STEP / norm;
        }
        factor = Some(chol);

        // Backtracking keeps the ascent monotone, which pins the iteration
        // to the unique mode of the concave target even across the flat
        // stretches a saturating transform creates.
        let mut applied = f64::NAN;
        for _ in 0..6 {
            let cand = &b + &step;
            if let Some((t_new, e_new, vw_new)) = eval(&cand) {
                if t_new >= t_cur - 1e-9 {
                    applied = step.norm();
                    b = cand;
                    t_cur = t_new;
                    e = e_new;
                    vw = vw_new;
                    break;
                }
            }
            step *= 0.5;
        }
        if applied.is_nan() || applied < NEWTON_TOL {
            break;
        }
    }
    factor.map(|chol| (b, chol))
}

/// Copy of `mat` with row and column `l` removed.
fn submatrix_without(mat: &DMatrix<f64>, l: usize) -> DMatrix<f64> {
    let p = mat.nrows();
    let keep: Vec<usize> = (0..p).filter(|&t| t != l).collect();
    DMatrix::from_fn(p - 1, p - 1, |r, c| mat[(keep[r], keep[c])])
}

/// Cholesky with an escalating diagonal ridge; `None` if the matrix stays
/// indefinite.
fn factor_with_ridge(mat: &DMatrix<f64>, warnings: &mut Warnings) -> Option<Cholesky<f64, Dyn>> {
    if let Some(c) = Cholesky::new(mat.clone()) {
        return Some(c);
    }
    let mean_diag = (mat.diagonal().sum() / mat.nrows() as f64).abs().max(1e-12);
    let mut ridge = 1e-10 * mean_diag;
    for _ in 0..6 {
        warnings.ridged_inversions += 1;
        let mut ridged = mat.clone();
        for j in 0..ridged.nrows() {
            ridged[(j, j)] += ridge;
        }
        if let Some(c) = Cholesky::new(ridged) {
            return Some(c);
        }
        ridge *= 100.0;
    }
    None
}
