//! Mutable chain state: working data, transformed/standardized columns, the
//! gram matrix, parameter values, proposal scales, and acceptance counters.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exchange::ArmsConfig;
use crate::model::{f_transform, log_conditional, CountGrid};
use crate::priors::Hyperparams;
use crate::types::{pairs, EdgeState, MixedDataset, NodeParams, NodeType};

use super::{
    adapt_proposals, column, impute, node, update_indicators, AccCounter, Backend, SamplerConfig,
    Warnings,
};

/// Ridge added to the correlation matrix before inverting for the fixed
/// diagonal weights.
const DIAG_RIDGE: f64 = 1e-4;

/// Variance threshold below which a transformed column counts as constant.
const VAR_EPS: f64 = 1e-10;

pub(crate) struct ChainState {
    pub(crate) types: Vec<NodeType>,
    pub(crate) hyper: Hyperparams,
    pub(crate) cfg: SamplerConfig,
    pub(crate) backend: Backend,
    pub(crate) arms: ArmsConfig,
    pub(crate) n: usize,
    pub(crate) p: usize,
    /// Working data with missing cells imputed (n x p).
    pub(crate) data: DMatrix<f64>,
    /// (row, column) of every masked cell, row-major order.
    pub(crate) missing_cells: Vec<(usize, usize)>,
    pub(crate) thetas: Vec<NodeParams>,
    /// Weight state on the standardized transform scale.
    pub(crate) edges: EdgeState,
    /// Raw transform values F(x) per cell.
    pub(crate) f_raw: DMatrix<f64>,
    /// Standardized transform values per cell.
    pub(crate) f_std: DMatrix<f64>,
    pub(crate) col_mean: Vec<f64>,
    pub(crate) col_sd: Vec<f64>,
    zero_var: Vec<bool>,
    /// Gram matrix of the standardized transform columns.
    pub(crate) gram: DMatrix<f64>,
    pub(crate) theta_scale: Vec<f64>,
    pub(crate) col_scale: Vec<f64>,
    pub(crate) theta_acc: Vec<AccCounter>,
    pub(crate) col_acc: Vec<AccCounter>,
    pub(crate) rng: ChaCha8Rng,
    pub(crate) grid: CountGrid,
    pub(crate) warnings: Warnings,
    pub(crate) init_diag: Vec<f64>,
    pub(crate) post_burnin: bool,
}

impl ChainState {
    pub(crate) fn new(
        dataset: &MixedDataset,
        hyper: &Hyperparams,
        cfg: &SamplerConfig,
        backend: Backend,
        arms: ArmsConfig,
        _chain_id: usize,
        seed: u64,
    ) -> Result<Self> {
        let n = dataset.n();
        let p = dataset.p();
        if p < 2 {
            return Err(Error::input("the model needs at least two columns"));
        }
        let types = dataset.types().to_vec();

        // Working data: observed values with per-column median/mode fills.
        let mut data = dataset.values().clone();
        let mut missing_cells = Vec::new();
        for i in 0..n {
            for s in 0..p {
                if dataset.is_missing(i, s) {
                    missing_cells.push((i, s));
                }
            }
        }
        for s in 0..p {
            let observed: Vec<f64> = (0..n).filter_map(|i| dataset.value(i, s)).collect();
            let fill = initial_fill(types[s], &observed);
            for i in 0..n {
                if dataset.is_missing(i, s) {
                    data[(i, s)] = fill;
                }
            }
        }

        let thetas: Vec<NodeParams> = (0..p)
            .map(|s| {
                let column: Vec<f64> = (0..n).map(|i| data[(i, s)]).collect();
                moment_init(types[s], &column)
            })
            .collect();
        for (s, theta) in thetas.iter().enumerate() {
            theta.validate(types[s])?;
        }

        let grid_max = cfg.b_trunc.max(arms.b_aux);
        let grid = CountGrid::new(cfg.lambda_f, grid_max);

        let mut f_raw = DMatrix::zeros(n, p);
        for s in 0..p {
            for i in 0..n {
                f_raw[(i, s)] = f_transform(types[s], cfg.lambda_f, data[(i, s)])?;
            }
        }

        let mut state = ChainState {
            types,
            hyper: hyper.clone(),
            cfg: cfg.clone(),
            backend,
            arms,
            n,
            p,
            data,
            missing_cells,
            thetas,
            edges: EdgeState::new(&vec![1.0; p], cfg.lambda_f)?,
            f_raw,
            f_std: DMatrix::zeros(n, p),
            col_mean: vec![0.0; p],
            col_sd: vec![1.0; p],
            zero_var: vec![false; p],
            gram: DMatrix::zeros(p, p),
            theta_scale: vec![0.1; p],
            col_scale: vec![1.0; p],
            theta_acc: vec![AccCounter::default(); p],
            col_acc: vec![AccCounter::default(); p],
            rng: ChaCha8Rng::seed_from_u64(seed),
            grid,
            warnings: Warnings::default(),
            init_diag: vec![1.0; p],
            post_burnin: false,
        };
        state.refresh_standardization();

        // Fixed diagonal: diagonal of the ridged inverse correlation matrix
        // of the standardized transform columns.
        let diag = state.initial_diagonal();
        state.edges = EdgeState::new(&diag, cfg.lambda_f)?;
        state.init_diag = diag;
        Ok(state)
    }

    fn initial_diagonal(&mut self) -> Vec<f64> {
        let p = self.p;
        if self.n < 2 {
            return vec![1.0; p];
        }
        let mut corr = &self.gram / (self.n as f64 - 1.0);
        for s in 0..p {
            corr[(s, s)] += DIAG_RIDGE;
        }
        match corr.try_inverse() {
            Some(inv) => (0..p).map(|s| inv[(s, s)]).collect(),
            None => {
                self.warnings.ridged_inversions += 1;
                vec![1.0; p]
            }
        }
    }

    /// Recomputes per-column standardization constants, the standardized
    /// matrix, and the gram matrix from the current raw transform values.
    pub(crate) fn refresh_standardization(&mut self) {
        let n = self.n;
        for s in 0..self.p {
            let col = self.f_raw.column(s);
            let (mean, sd) = if n >= 2 {
                let mean = col.sum() / n as f64;
                let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
                    / (n as f64 - 1.0);
                if var > VAR_EPS {
                    (mean, var.sqrt())
                } else {
                    self.zero_var[s] = true;
                    (mean, 1.0)
                }
            } else {
                self.zero_var[s] = n == 1 || self.zero_var[s];
                (0.0, 1.0)
            };
            self.col_mean[s] = mean;
            self.col_sd[s] = sd;
            for i in 0..n {
                self.f_std[(i, s)] = (self.f_raw[(i, s)] - mean) / sd;
            }
        }
        self.gram = self.f_std.transpose() * &self.f_std;
        self.warnings.zero_variance_columns = self.zero_var.iter().filter(|z| **z).count() as u64;
    }

    /// Updates one working cell and its transform caches after imputation.
    pub(crate) fn set_cell(&mut self, i: usize, s: usize, value: f64) {
        self.data[(i, s)] = value;
        let f = match self.types[s] {
            NodeType::Continuous | NodeType::Categorical(_) => value,
            NodeType::Count | NodeType::ZeroInflatedCount => self.grid.f[value as usize],
        };
        self.f_raw[(i, s)] = f;
        self.f_std[(i, s)] = (f - self.col_mean[s]) / self.col_sd[s];
    }

    /// Standardized-scale interaction sums for one node:
    /// `c_std[i] = sum_{t != node} beta_t,node * f_std[i, t]`.
    pub(crate) fn interaction_c_std(&self, node: usize) -> Vec<f64> {
        let mut c = vec![0.0; self.n];
        for t in 0..self.p {
            if t == node {
                continue;
            }
            let beta = self.edges.beta(t, node);
            if beta == 0.0 {
                continue;
            }
            let col = self.f_std.column(t);
            for (ci, v) in c.iter_mut().zip(col.iter()) {
                *ci += beta * v;
            }
        }
        c
    }

    /// Converts standardized interaction sums to the raw-F coefficient for
    /// `node`'s own transform.
    pub(crate) fn to_raw_coeff(&self, node: usize, c_std: &[f64]) -> Vec<f64> {
        let sd = self.col_sd[node];
        c_std.iter().map(|c| c / sd).collect()
    }

    /// One full sweep. `iter` is zero-based.
    pub(crate) fn sweep(&mut self, iter: usize) -> Result<()> {
        self.post_burnin = iter >= self.cfg.n_burnin;
        if !self.missing_cells.is_empty() {
            impute::impute_missing(self)?;
        }
        for s in 0..self.p {
            node::update_node_params(self, s)?;
        }
        self.refresh_standardization();
        for l in 0..self.p {
            column::update_omega_column(self, l)?;
        }
        update_indicators(self);
        // Positive definiteness is a property of the precision-analog matrix
        // (same diagonal, off-diagonals negated), not of the weight matrix.
        let omega = self.edges.omega();
        let precision_analog = nalgebra::DMatrix::from_fn(self.p, self.p, |r, c| {
            if r == c {
                omega[(r, r)]
            } else {
                -omega[(r, c)]
            }
        });
        if precision_analog.cholesky().is_none() {
            self.warnings.non_pd_snapshots += 1;
        }
        if !self.post_burnin && (iter + 1) % self.cfg.adapt_window == 0 {
            adapt_proposals(self);
        }
        Ok(())
    }

    /// Edge weights mapped back to the raw transform scale, canonical pair
    /// order.
    pub(crate) fn raw_beta_row(&self) -> Vec<f64> {
        pairs(self.p)
            .map(|(s, t)| self.edges.beta(s, t) / (self.col_sd[s] * self.col_sd[t]))
            .collect()
    }

    pub(crate) fn flatten_thetas(&self) -> Vec<f64> {
        self.thetas.iter().flat_map(|t| t.flatten()).collect()
    }

    pub(crate) fn theta_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        for (s, theta) in self.thetas.iter().enumerate() {
            for comp in theta.component_names() {
                names.push(format!("x{s}.{comp}"));
            }
        }
        names
    }

    pub(crate) fn acceptance_report(&self) -> super::AcceptanceReport {
        super::AcceptanceReport {
            theta: self.theta_acc.iter().map(AccCounter::post_rate).collect(),
            column: self.col_acc.iter().map(AccCounter::post_rate).collect(),
        }
    }

    pub(crate) fn mean_rate_theta(&self) -> f64 {
        let rates: Vec<f64> = self
            .theta_acc
            .iter()
            .filter_map(AccCounter::window_rate)
            .collect();
        mean_or_zero(&rates)
    }

    pub(crate) fn mean_rate_column(&self) -> f64 {
        let rates: Vec<f64> = self
            .col_acc
            .iter()
            .filter_map(AccCounter::window_rate)
            .collect();
        mean_or_zero(&rates)
    }

    /// Sum over nodes and observations of the normalized log conditionals;
    /// reported in progress records only.
    pub(crate) fn log_pseudo_likelihood(&self) -> f64 {
        let mut total = 0.0;
        for s in 0..self.p {
            let c_std = self.interaction_c_std(s);
            let c_raw = self.to_raw_coeff(s, &c_std);
            for i in 0..self.n {
                total += log_conditional(
                    self.types[s],
                    &self.thetas[s],
                    self.data[(i, s)],
                    c_raw[i],
                    self.cfg.lambda_f,
                    self.cfg.b_trunc,
                )
                .unwrap_or(f64::NEG_INFINITY);
            }
        }
        total
    }
}

fn mean_or_zero(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

/// Median (numeric) or mode (categorical) fill for initializing missing cells.
fn initial_fill(ty: NodeType, observed: &[f64]) -> f64 {
    if observed.is_empty() {
        return match ty {
            NodeType::Continuous => 0.0,
            _ => 0.0,
        };
    }
    match ty {
        NodeType::Categorical(k) => {
            let mut counts = vec![0usize; k];
            for x in observed {
                counts[*x as usize] += 1;
            }
            let best = counts.iter().max().copied().unwrap_or(0);
            counts.iter().position(|c| *c == best).unwrap_or(0) as f64
        }
        _ => {
            let mut sorted = observed.to_vec();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mid = sorted.len() / 2;
            let median = if sorted.len() % 2 == 1 {
                sorted[mid]
            } else {
                0.5 * (sorted[mid - 1] + sorted[mid])
            };
            if ty.is_count_like() {
                median.round()
            } else {
                median
            }
        }
    }
}

/// Moment-based starting values for node parameters.
fn moment_init(ty: NodeType, column: &[f64]) -> NodeParams {
    let n = column.len();
    let mean = if n > 0 {
        column.iter().sum::<f64>() / n as f64
    } else {
        0.0
    };
    match ty {
        NodeType::Continuous => {
            let var = if n >= 2 {
                column.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n as f64 - 1.0)
            } else {
                1.0
            };
            NodeParams::Continuous {
                mu: mean,
                sigma_sq: var.max(1e-4),
            }
        }
        NodeType::Count => NodeParams::Count {
            mu: mean.max(0.1),
            nu: 1.0,
        },
        NodeType::ZeroInflatedCount => {
            let zeros = column.iter().filter(|x| **x == 0.0).count();
            let pi = if n > 0 {
                (zeros as f64 / n as f64).clamp(0.05, 0.95)
            } else {
                0.5
            };
            let positives: Vec<f64> = column.iter().copied().filter(|x| *x > 0.0).collect();
            let mu = if positives.is_empty() {
                1.0
            } else {
                (positives.iter().sum::<f64>() / positives.len() as f64).max(0.1)
            };
            NodeParams::ZeroInflatedCount { pi, mu }
        }
        NodeType::Categorical(k) => {
            let mut counts = vec![1.0; k]; // add-one smoothing keeps probs positive
            for x in column {
                counts[*x as usize] += 1.0;
            }
            let total: f64 = counts.iter().sum();
            NodeParams::Categorical {
                probs: counts.iter().map(|c| c / total).collect(),
            }
        }
    }
}
