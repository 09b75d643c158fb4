//! Metropolis-within-Gibbs sampler over node parameters, edge weights, edge
//! indicators, and missing cells.
//!
//! One sweep per iteration:
//! 1. impute missing cells (m Gibbs passes, combined element-wise),
//! 2. update each node's parameters,
//! 3. re-standardize the transformed columns and refresh the gram matrix,
//! 4. update each weight column with a multivariate-normal independence
//!    proposal built from the gram matrix and the spike-and-slab variances,
//! 5. refresh all inclusion indicators from their exact conditionals.
//!
//! Proposal scales adapt during burn-in only; every random decision flows from
//! one seeded generator per chain, so runs are reproducible bit-for-bit.

mod column;
mod impute;
mod node;
mod state;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exchange::ArmsConfig;
use crate::priors::{z_posterior_prob, Hyperparams};
use crate::types::{n_pairs, pairs, MixedDataset, NodeParams, NodeType};

pub(crate) use state::ChainState;

/// Which acceptance-ratio backend drives the parameter and weight updates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    /// Truncated normalizing constants (log-sum-exp over 0..=B).
    Truncated,
    /// Exchange algorithm with auxiliary draws; never evaluates a normalizer.
    Exchange,
}

impl std::fmt::Display for Backend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Backend::Truncated => write!(f, "truncated"),
            Backend::Exchange => write!(f, "exchange"),
        }
    }
}

/// Sampler settings. `n_iter` counts total sweeps including burn-in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    pub n_iter: usize,
    pub n_burnin: usize,
    pub n_chains: usize,
    pub seed: u64,
    /// Adaptation interval (iterations) for proposal scales during burn-in.
    pub adapt_window: usize,
    /// Acceptance band targeted by the adaptation.
    pub accept_low: f64,
    pub accept_high: f64,
    /// Complete datasets drawn and combined per imputation step.
    pub m_imputations: usize,
    /// Truncation bound for count-support normalizers and imputation draws.
    pub b_trunc: usize,
    /// Exponent of the bounded count transform.
    pub lambda_f: f64,
    /// Record per-iteration node parameters in the trace.
    pub record_theta: bool,
    /// Emit a progress record every this many iterations (0 = never).
    pub progress_every: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            n_iter: 20_000,
            n_burnin: 10_000,
            n_chains: 1,
            seed: 1,
            adapt_window: 50,
            accept_low: 0.20,
            accept_high: 0.60,
            m_imputations: 10,
            b_trunc: 100,
            lambda_f: 1.0,
            record_theta: true,
            progress_every: 0,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_burnin >= self.n_iter {
            return Err(Error::config(format!(
                "burn-in ({}) must be shorter than the total iteration count ({})",
                self.n_burnin, self.n_iter
            )));
        }
        if self.n_chains == 0 {
            return Err(Error::config("at least one chain is required"));
        }
        if self.adapt_window == 0 {
            return Err(Error::config("adaptation window must be positive"));
        }
        if !(self.accept_low > 0.0 && self.accept_low < self.accept_high && self.accept_high < 1.0)
        {
            return Err(Error::config(
                "acceptance band must satisfy 0 < low < high < 1",
            ));
        }
        if self.m_imputations == 0 {
            return Err(Error::config("at least one imputation pass is required"));
        }
        if self.b_trunc == 0 || self.b_trunc > 4096 {
            return Err(Error::config(
                "count truncation bound must lie in 1..=4096",
            ));
        }
        if !(self.lambda_f > 0.0) || !self.lambda_f.is_finite() {
            return Err(Error::config("transform exponent must be positive"));
        }
        Ok(())
    }
}

/// Counters for conditions the sampler recovers from but reports.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Warnings {
    /// Columns whose transformed values had (near-)zero variance.
    pub zero_variance_columns: u64,
    /// Sub-matrix inversions that needed a ridge to succeed.
    pub ridged_inversions: u64,
    /// Column proposals that fell back to the prior covariance.
    pub proposal_fallbacks: u64,
    /// Sweeps whose weight matrix snapshot was not positive definite.
    pub non_pd_snapshots: u64,
}

impl Warnings {
    pub(crate) fn merge(&mut self, other: &Warnings) {
        self.zero_variance_columns += other.zero_variance_columns;
        self.ridged_inversions += other.ridged_inversions;
        self.proposal_fallbacks += other.proposal_fallbacks;
        self.non_pd_snapshots += other.non_pd_snapshots;
    }
}

/// Post-burn-in acceptance rates, one entry per update block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceReport {
    /// Node-parameter blocks, indexed by node.
    pub theta: Vec<f64>,
    /// Weight-column blocks, indexed by node.
    pub column: Vec<f64>,
}

impl AcceptanceReport {
    /// Flattened view over all blocks.
    pub fn all_rates(&self) -> impl Iterator<Item = f64> + '_ {
        self.theta.iter().chain(self.column.iter()).copied()
    }
}

/// Per-iteration progress snapshot for streaming consumers.
#[derive(Debug, Clone, Copy)]
pub struct ProgressRecord {
    pub chain: usize,
    pub iteration: usize,
    pub n_iter: usize,
    pub log_pseudo_likelihood: f64,
    pub mean_theta_accept: f64,
    pub mean_column_accept: f64,
}

/// Receives progress records; implementations must tolerate concurrent chains.
pub trait ProgressSink: Sync {
    fn record(&self, rec: &ProgressRecord);
}

/// Recorded post-burn-in draws and run metadata for one chain.
#[derive(Debug, Clone)]
pub struct ChainTrace {
    pub chain_id: usize,
    pub seed: u64,
    pub p: usize,
    pub names: Vec<String>,
    pub types: Vec<NodeType>,
    /// Edge weights on the raw transform scale, `[iteration][pair]` in
    /// canonical upper-triangle order.
    pub beta: Vec<Vec<f64>>,
    /// Inclusion indicators, aligned with `beta`.
    pub z: Vec<Vec<bool>>,
    /// Flattened node parameters (empty when recording is disabled).
    pub theta: Vec<Vec<f64>>,
    pub theta_names: Vec<String>,
    pub acceptance: AcceptanceReport,
    pub warnings: Warnings,
    /// Final internal (standardized-scale) weight matrix.
    pub final_omega: DMatrix<f64>,
    /// Diagonal fixed at initialization, for invariant checks.
    pub init_diag: Vec<f64>,
}

impl ChainTrace {
    pub fn n_recorded(&self) -> usize {
        self.beta.len()
    }

    /// Mean raw-scale weight per pair over recorded iterations.
    pub fn beta_mean(&self) -> Vec<f64> {
        let m = n_pairs(self.p);
        let mut acc = vec![0.0; m];
        for row in &self.beta {
            for (a, b) in acc.iter_mut().zip(row) {
                *a += b;
            }
        }
        let n = self.beta.len().max(1) as f64;
        acc.iter_mut().for_each(|a| *a /= n);
        acc
    }

    /// Recorded weights as an iterations-by-pairs matrix, the shape the
    /// multivariate convergence diagnostic consumes.
    pub fn beta_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.beta.len(), n_pairs(self.p), |i, j| self.beta[i][j])
    }

    /// Fraction of recorded iterations with the pair included.
    pub fn z_mean(&self) -> Vec<f64> {
        let m = n_pairs(self.p);
        let mut acc = vec![0.0; m];
        for row in &self.z {
            for (a, b) in acc.iter_mut().zip(row) {
                *a += *b as u8 as f64;
            }
        }
        let n = self.z.len().max(1) as f64;
        acc.iter_mut().for_each(|a| *a /= n);
        acc
    }
}

/// Runs a single chain to completion.
pub fn run_chain(
    dataset: &MixedDataset,
    hyper: &Hyperparams,
    cfg: &SamplerConfig,
    backend: Backend,
    arms: &ArmsConfig,
    chain_id: usize,
    seed: u64,
    progress: Option<&dyn ProgressSink>,
) -> Result<ChainTrace> {
    cfg.validate()?;
    hyper.validate()?;
    arms.validate()?;
    let mut state = ChainState::new(dataset, hyper, cfg, backend, arms.clone(), chain_id, seed)?;
    let record_len = cfg.n_iter - cfg.n_burnin;
    let mut beta = Vec::with_capacity(record_len);
    let mut z = Vec::with_capacity(record_len);
    let mut theta = Vec::with_capacity(if cfg.record_theta { record_len } else { 0 });

    for iter in 0..cfg.n_iter {
        state.sweep(iter).map_err(|e| {
            Error::numeric(format!("chain {chain_id}, iteration {iter}: {e}"))
        })?;
        if iter >= cfg.n_burnin {
            beta.push(state.raw_beta_row());
            z.push(state.edges.z_slice().to_vec());
            if cfg.record_theta {
                theta.push(state.flatten_thetas());
            }
        }
        if cfg.progress_every > 0 && (iter + 1) % cfg.progress_every == 0 {
            if let Some(sink) = progress {
                sink.record(&ProgressRecord {
                    chain: chain_id,
                    iteration: iter + 1,
                    n_iter: cfg.n_iter,
                    log_pseudo_likelihood: state.log_pseudo_likelihood(),
                    mean_theta_accept: state.mean_rate_theta(),
                    mean_column_accept: state.mean_rate_column(),
                });
            }
        }
    }

    Ok(ChainTrace {
        chain_id,
        seed,
        p: state.p,
        names: dataset.names().to_vec(),
        types: state.types.clone(),
        beta,
        z,
        theta,
        theta_names: state.theta_names(),
        acceptance: state.acceptance_report(),
        warnings: state.warnings,
        final_omega: state.edges.omega().clone(),
        init_diag: state.init_diag.clone(),
    })
}

/// Derives one sub-seed per chain from the master seed.
pub fn chain_seeds(master: u64, n_chains: usize) -> Vec<u64> {
    (0..n_chains as u64)
        .map(|c| master.wrapping_add(c.wrapping_mul(0x9E37_79B9_7F4A_7C15)))
        .collect()
}

/// Runs `cfg.n_chains` chains concurrently with per-chain seeds derived from
/// `cfg.seed`; any chain failure aborts the whole run with context.
pub fn run_chains(
    dataset: &MixedDataset,
    hyper: &Hyperparams,
    cfg: &SamplerConfig,
    backend: Backend,
    arms: &ArmsConfig,
    progress: Option<&dyn ProgressSink>,
) -> Result<Vec<ChainTrace>> {
    let seeds = chain_seeds(cfg.seed, cfg.n_chains);
    seeds
        .par_iter()
        .enumerate()
        .map(|(chain_id, seed)| {
            run_chain(dataset, hyper, cfg, backend, arms, chain_id, *seed, progress)
        })
        .collect()
}

/// Times individual post-warm-up sweeps (seconds per iteration). Used by the
/// benchmark command; performs no I/O inside the timed region.
pub fn time_iterations(
    dataset: &MixedDataset,
    hyper: &Hyperparams,
    cfg: &SamplerConfig,
    backend: Backend,
    arms: &ArmsConfig,
    warmup: usize,
    measured: usize,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    hyper.validate()?;
    arms.validate()?;
    let mut state = ChainState::new(dataset, hyper, cfg, backend, arms.clone(), 0, cfg.seed)?;
    for iter in 0..warmup {
        state
            .sweep(iter)
            .map_err(|e| Error::numeric(format!("warm-up iteration {iter}: {e}")))?;
    }
    let mut times = Vec::with_capacity(measured);
    for k in 0..measured {
        let start = std::time::Instant::now();
        state
            .sweep(warmup + k)
            .map_err(|e| Error::numeric(format!("timed iteration {k}: {e}")))?;
        times.push(start.elapsed().as_secs_f64());
    }
    Ok(times)
}

/// Refreshes every inclusion indicator from its exact Bernoulli conditional
/// given the current (standardized-scale) weights.
pub(crate) fn update_indicators(state: &mut ChainState) {
    use rand::Rng;
    let p = state.p;
    for (s, t) in pairs(p) {
        let prob = z_posterior_prob(state.edges.beta(s, t), &state.hyper);
        let draw = state.rng.random::<f64>() < prob;
        state.edges.set_z(s, t, draw);
    }
}

/// One adaptation step: nudges each block's proposal scale by `exp(±0.1)`
/// when its window acceptance rate leaves the target band, then resets the
/// window counters. Called during burn-in only.
pub(crate) fn adapt_proposals(state: &mut ChainState) {
    let low = state.cfg.accept_low;
    let high = state.cfg.accept_high;
    for s in 0..state.p {
        if let Some(rate) = state.theta_acc[s].window_rate() {
            state.theta_scale[s] *= adapt_factor(rate, low, high);
            state.theta_scale[s] = state.theta_scale[s].clamp(1e-4, 1e4);
        }
        state.theta_acc[s].reset_window();
        if let Some(rate) = state.col_acc[s].window_rate() {
            // Column moves are independence proposals whose acceptance peaks
            // when the proposal width matches the target, so steering only
            // works on the overdispersed side: the scale never drops below 1
            // (a sharper-than-target proposal has unbounded importance
            // weights and the chain sticks), and high acceptance grows it.
            state.col_scale[s] *= adapt_factor(rate, low, high);
            state.col_scale[s] = state.col_scale[s].clamp(1.0, 1e4);
        }
        state.col_acc[s].reset_window();
    }
}

fn adapt_factor(rate: f64, low: f64, high: f64) -> f64 {
    if rate < low {
        (-0.1f64).exp()
    } else if rate > high {
        0.1f64.exp()
    } else {
        1.0
    }
}

/// Attempt/acceptance bookkeeping for one update block.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct AccCounter {
    win_accepted: u64,
    win_attempted: u64,
    post_accepted: u64,
    post_attempted: u64,
}

impl AccCounter {
    pub(crate) fn record(&mut self, accepted: bool, post_burnin: bool) {
        self.win_attempted += 1;
        self.win_accepted += accepted as u64;
        if post_burnin {
            self.post_attempted += 1;
            self.post_accepted += accepted as u64;
        }
    }

    pub(crate) fn window_rate(&self) -> Option<f64> {
        (self.win_attempted > 0).then(|| self.win_accepted as f64 / self.win_attempted as f64)
    }

    pub(crate) fn reset_window(&mut self) {
        self.win_accepted = 0;
        self.win_attempted = 0;
    }

    pub(crate) fn post_rate(&self) -> f64 {
        if self.post_attempted == 0 {
            0.0
        } else {
            self.post_accepted as f64 / self.post_attempted as f64
        }
    }
}

/// Dispatches the per-type normalizer with table-backed count support.
#[inline]
pub(crate) fn log_norm_const_fast(
    ty: NodeType,
    theta: &NodeParams,
    c: f64,
    b: usize,
    grid: &crate::model::CountGrid,
) -> f64 {
    match (ty, theta) {
        (NodeType::Continuous, NodeParams::Continuous { mu, sigma_sq }) => {
            0.5 * (2.0 * std::f64::consts::PI).ln() + c * mu + 0.5 * c * c * sigma_sq
        }
        (NodeType::Categorical(k), NodeParams::Categorical { probs }) => {
            let mut lse = crate::model::LogSumExp::new();
            for j in 0..k {
                lse.add(probs[j].ln() + c * j as f64);
            }
            lse.value()
        }
        (NodeType::Count, NodeParams::Count { mu, nu }) => {
            crate::model::cmp_log_norm_tab(*mu, *nu, c, b, grid)
        }
        (NodeType::ZeroInflatedCount, NodeParams::ZeroInflatedCount { pi, mu }) => {
            crate::model::zip_log_norm_tab(*pi, *mu, c, b, grid)
        }
        _ => unreachable!("state construction validates the type/params match"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::pair_index;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;
    use statrs::distribution::{ContinuousCDF, Normal};

    fn small_mixed_dataset(n: usize, seed: u64) -> MixedDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let types = vec![
            NodeType::Continuous,
            NodeType::Count,
            NodeType::Categorical(3),
            NodeType::ZeroInflatedCount,
        ];
        let mut vals = DMatrix::zeros(n, 4);
        for i in 0..n {
            let z: f64 = rng.sample(StandardNormal);
            vals[(i, 0)] = 1.5 * z;
            vals[(i, 1)] = rng.random_range(0..6) as f64;
            vals[(i, 2)] = rng.random_range(0..3) as f64;
            vals[(i, 3)] = if rng.random_bool(0.5) {
                0.0
            } else {
                rng.random_range(1..7) as f64
            };
        }
        MixedDataset::complete(types, vals).unwrap()
    }

    /// Draws from a 3-node Gaussian chain graph with the given coupling.
    fn gaussian_chain_dataset(n: usize, beta: f64, seed: u64) -> MixedDataset {
        let prec = DMatrix::from_row_slice(
            3,
            3,
            &[1.0, -beta, 0.0, -beta, 1.0, -beta, 0.0, -beta, 1.0],
        );
        let cov = prec.try_inverse().unwrap();
        let l = cov.cholesky().unwrap().l();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut vals = DMatrix::zeros(n, 3);
        for i in 0..n {
            let z = nalgebra::DVector::from_iterator(
                3,
                (0..3).map(|_| -> f64 { rng.sample(StandardNormal) }),
            );
            let x = &l * z;
            for s in 0..3 {
                vals[(i, s)] = x[s];
            }
        }
        MixedDataset::complete(vec![NodeType::Continuous; 3], vals).unwrap()
    }

    fn short_cfg(n_iter: usize, n_burnin: usize, seed: u64) -> SamplerConfig {
        SamplerConfig {
            n_iter,
            n_burnin,
            seed,
            ..SamplerConfig::default()
        }
    }

    #[test]
    fn same_seed_reproduces_the_trace_exactly() {
        let ds = small_mixed_dataset(15, 42);
        let hyper = Hyperparams::defaults_for(ds.p());
        let cfg = short_cfg(120, 40, 9);
        let arms = ArmsConfig::default();
        for backend in [Backend::Truncated, Backend::Exchange] {
            let a = run_chain(&ds, &hyper, &cfg, backend, &arms, 0, 7, None).unwrap();
            let b = run_chain(&ds, &hyper, &cfg, backend, &arms, 0, 7, None).unwrap();
            assert_eq!(a.beta, b.beta, "{backend}");
            assert_eq!(a.z, b.z, "{backend}");
            assert_eq!(a.theta, b.theta, "{backend}");
            let c = run_chain(&ds, &hyper, &cfg, backend, &arms, 0, 8, None).unwrap();
            assert_ne!(a.beta, c.beta, "different seeds must differ ({backend})");
        }
    }

    #[test]
    fn determinism_holds_with_missing_cells() {
        let mut ds = small_mixed_dataset(15, 5);
        for (i, s) in [(0usize, 0usize), (3, 1), (7, 2), (9, 3), (11, 0)] {
            ds.set_missing(i, s);
        }
        let hyper = Hyperparams::defaults_for(ds.p());
        let cfg = short_cfg(100, 30, 1);
        let arms = ArmsConfig::default();
        let a = run_chain(&ds, &hyper, &cfg, Backend::Truncated, &arms, 0, 3, None).unwrap();
        let b = run_chain(&ds, &hyper, &cfg, Backend::Truncated, &arms, 0, 3, None).unwrap();
        assert_eq!(a.beta, b.beta);
        assert!(a.beta.iter().flatten().all(|v| v.is_finite()));
    }

    #[test]
    fn weight_matrix_invariants_hold_across_a_run() {
        let ds = small_mixed_dataset(20, 8);
        let hyper = Hyperparams::defaults_for(ds.p());
        let cfg = short_cfg(120, 40, 2);
        let arms = ArmsConfig::default();
        let trace =
            run_chain(&ds, &hyper, &cfg, Backend::Truncated, &arms, 0, 11, None).unwrap();
        for s in 0..ds.p() {
            assert_eq!(trace.final_omega[(s, s)], trace.init_diag[s]);
        }
        let mut max_asym = 0.0f64;
        for (s, t) in pairs(ds.p()) {
            max_asym = max_asym.max((trace.final_omega[(s, t)] - trace.final_omega[(t, s)]).abs());
        }
        assert_eq!(max_asym, 0.0);
        assert_eq!(trace.n_recorded(), 80);
        assert!(trace.beta.iter().flatten().all(|v| v.is_finite()));
    }

    /// With no observations the weight posterior is exactly the two-component
    /// normal mixture of the prior; a Kolmogorov-Smirnov check on the sampled
    /// marginal catches sign, scaling, or proposal-correction mistakes.
    #[test]
    fn prior_only_weight_marginal_matches_the_mixture() {
        let ds = MixedDataset::complete(
            vec![NodeType::Continuous; 2],
            DMatrix::zeros(0, 2),
        )
        .unwrap();
        let mut hyper = Hyperparams::defaults_for(2);
        hyper.pi_incl = 0.3;
        let cfg = SamplerConfig {
            n_iter: 30_000,
            n_burnin: 10_000,
            record_theta: false,
            ..SamplerConfig::default()
        };
        let arms = ArmsConfig::default();
        let trace =
            run_chain(&ds, &hyper, &cfg, Backend::Truncated, &arms, 0, 123, None).unwrap();
        let mut draws: Vec<f64> = trace.beta.iter().step_by(10).map(|row| row[0]).collect();
        draws.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let spike = Normal::new(0.0, hyper.v0).unwrap();
        let slab = Normal::new(0.0, hyper.v1).unwrap();
        let cdf =
            |x: f64| (1.0 - hyper.pi_incl) * spike.cdf(x) + hyper.pi_incl * slab.cdf(x);
        let m = draws.len() as f64;
        let mut d = 0.0f64;
        for (i, x) in draws.iter().enumerate() {
            let f = cdf(*x);
            d = d.max((f - i as f64 / m).abs());
            d = d.max((f - (i as f64 + 1.0) / m).abs());
        }
        // 1% critical value for the one-sample KS statistic
        let crit = 1.628 / m.sqrt();
        assert!(d < crit, "KS statistic {d} over critical value {crit}");
    }

    #[test]
    fn strong_gaussian_edges_are_recovered_and_absent_edge_stays_out() {
        let ds = gaussian_chain_dataset(150, 0.4, 77);
        // With p = 3 the default prior inclusion probability saturates at 1,
        // which would make every indicator trivially active.
        let mut hyper = Hyperparams::defaults_for(ds.p());
        hyper.pi_incl = 0.2;
        // Short chains leave +-0.07 of Monte Carlo error on the indicator
        // means, so give the run enough draws to separate from the bounds.
        let cfg = SamplerConfig {
            n_iter: 6000,
            n_burnin: 3000,
            record_theta: false,
            ..SamplerConfig::default()
        };
        let arms = ArmsConfig::default();
        for backend in [Backend::Truncated, Backend::Exchange] {
            let trace = run_chain(&ds, &hyper, &cfg, backend, &arms, 0, 31, None).unwrap();
            let ppi = trace.z_mean();
            let idx01 = pair_index(3, 0, 1);
            let idx12 = pair_index(3, 1, 2);
            let idx02 = pair_index(3, 0, 2);
            assert!(ppi[idx01] > 0.8, "{backend}: edge 0-1 ppi {}", ppi[idx01]);
            assert!(ppi[idx12] > 0.8, "{backend}: edge 1-2 ppi {}", ppi[idx12]);
            assert!(ppi[idx02] < 0.5, "{backend}: non-edge 0-2 ppi {}", ppi[idx02]);
            // positive partial correlation must come out as positive weights
            let beta_mean = trace.beta_mean();
            assert!(beta_mean[idx01] > 0.1, "{backend}: {}", beta_mean[idx01]);
        }
    }

    #[test]
    fn acceptance_rates_and_seed_spread_are_sane() {
        let ds = small_mixed_dataset(30, 21);
        let hyper = Hyperparams::defaults_for(ds.p());
        let cfg = SamplerConfig {
            n_iter: 1500,
            n_burnin: 750,
            n_chains: 2,
            record_theta: false,
            ..SamplerConfig::default()
        };
        let traces = run_chains(
            &ds,
            &hyper,
            &cfg,
            Backend::Truncated,
            &ArmsConfig::default(),
            None,
        )
        .unwrap();
        assert_eq!(traces.len(), 2);
        assert_ne!(traces[0].seed, traces[1].seed);
        for trace in &traces {
            for rate in trace.acceptance.all_rates() {
                assert!(
                    (0.05..=0.95).contains(&rate),
                    "acceptance rate {rate} outside sanity band"
                );
            }
        }
        let seeds = chain_seeds(5, 4);
        assert_eq!(seeds.len(), 4);
        assert_eq!(seeds[0], 5);
        assert!(seeds.windows(2).all(|w| w[0] != w[1]));
    }

    #[test]
    fn config_validation_rejects_bad_settings() {
        let mut cfg = SamplerConfig::default();
        cfg.n_burnin = cfg.n_iter;
        assert!(cfg.validate().is_err());
        let cfg = SamplerConfig {
            b_trunc: 0,
            ..SamplerConfig::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = SamplerConfig {
            accept_low: 0.7,
            accept_high: 0.6,
            ..SamplerConfig::default()
        };
        assert!(cfg.validate().is_err());
        assert!(SamplerConfig::default().validate().is_ok());
    }

    #[test]
    fn adapt_factor_tracks_the_band() {
        assert!(adapt_factor(0.1, 0.2, 0.6) < 1.0);
        assert!(adapt_factor(0.9, 0.2, 0.6) > 1.0);
        assert_eq!(adapt_factor(0.4, 0.2, 0.6), 1.0);
    }

    #[test]
    fn progress_sink_receives_records() {
        use std::sync::Mutex;
        struct Collect(Mutex<Vec<ProgressRecord>>);
        impl ProgressSink for Collect {
            fn record(&self, rec: &ProgressRecord) {
                self.0.lock().unwrap().push(*rec);
            }
        }
        let ds = small_mixed_dataset(10, 3);
        let hyper = Hyperparams::defaults_for(ds.p());
        let cfg = SamplerConfig {
            n_iter: 40,
            n_burnin: 10,
            progress_every: 10,
            ..SamplerConfig::default()
        };
        let sink = Collect(Mutex::new(Vec::new()));
        run_chain(
            &ds,
            &hyper,
            &cfg,
            Backend::Truncated,
            &ArmsConfig::default(),
            0,
            1,
            Some(&sink),
        )
        .unwrap();
        let recs = sink.0.into_inner().unwrap();
        assert_eq!(recs.len(), 4);
        assert!(recs.iter().all(|r| r.log_pseudo_likelihood.is_finite()));
        assert_eq!(recs.last().unwrap().iteration, 40);
    }
}
