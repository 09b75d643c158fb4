//! Posterior summaries and decision rules: pooled inclusion probabilities,
//! FDR-controlled edge selection, convergence diagnostics, and ROC/AUC
//! scoring against a known graph.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampler::ChainTrace;
use crate::types::{n_pairs, pairs};

/// Cutoffs sit this far below each distinct probability so that "select
/// everything at or above a value" is expressible with a strict comparison.
const CUTOFF_EPS: f64 = 1e-12;

/// Slack when comparing an estimated FDR against the target, so sets that
/// meet the target exactly are not rejected over floating-point residue
/// (e.g. `1.0 - 0.95 > 0.05` in binary arithmetic).
const FDR_BOUNDARY_TOL: f64 = 1e-10;

/// Pools posterior inclusion probabilities across chains, weighting each
/// chain by its recorded length. Returned in canonical pair order.
pub fn compute_ppi(traces: &[ChainTrace]) -> Result<Vec<f64>> {
    if traces.is_empty() {
        return Err(Error::input("no chains to summarize"));
    }
    let p = traces[0].p;
    if traces.iter().any(|t| t.p != p) {
        return Err(Error::input("chains disagree on the number of columns"));
    }
    let m = n_pairs(p);
    let mut counts = vec![0.0f64; m];
    let mut total = 0usize;
    for trace in traces {
        total += trace.z.len();
        for row in &trace.z {
            for (acc, z) in counts.iter_mut().zip(row) {
                *acc += *z as u8 as f64;
            }
        }
    }
    if total == 0 {
        return Err(Error::input("chains contain no recorded iterations"));
    }
    counts.iter_mut().for_each(|c| *c /= total as f64);
    Ok(counts)
}

/// Pooled posterior mean of the raw-scale edge weights, canonical pair order.
pub fn pooled_beta_mean(traces: &[ChainTrace]) -> Result<Vec<f64>> {
    if traces.is_empty() {
        return Err(Error::input("no chains to summarize"));
    }
    let p = traces[0].p;
    let m = n_pairs(p);
    let mut acc = vec![0.0f64; m];
    let mut total = 0usize;
    for trace in traces {
        if trace.p != p {
            return Err(Error::input("chains disagree on the number of columns"));
        }
        total += trace.beta.len();
        for row in &trace.beta {
            for (a, b) in acc.iter_mut().zip(row) {
                *a += b;
            }
        }
    }
    if total == 0 {
        return Err(Error::input("chains contain no recorded iterations"));
    }
    acc.iter_mut().for_each(|a| *a /= total as f64);
    Ok(acc)
}

/// Result of thresholding inclusion probabilities at an FDR target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FdrSelection {
    /// Threshold applied with a strict `ppi > cutoff` comparison.
    pub cutoff: f64,
    /// Estimated false discovery rate of the selected set.
    pub expected_fdr: f64,
    /// Selection flag per canonical pair index.
    pub selected: Vec<bool>,
}

impl FdrSelection {
    pub fn n_selected(&self) -> usize {
        self.selected.iter().filter(|s| **s).count()
    }
}

/// Picks the most permissive cutoff whose selected set has estimated FDR
/// `sum(1 - ppi) / |S|` at or below `target`. With no qualifying cutoff the
/// selection is empty with cutoff 1 and estimated FDR 0.
pub fn fdr_select(ppi: &[f64], target: f64) -> Result<FdrSelection> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::config(format!(
            "FDR target must lie strictly between 0 and 1, got {target}"
        )));
    }
    if ppi.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::input("inclusion probabilities must lie in [0, 1]"));
    }
    let mut distinct: Vec<f64> = ppi.to_vec();
    distinct.sort_by(|a, b| b.partial_cmp(a).unwrap());
    distinct.dedup();

    let mut best: Option<(f64, f64)> = None; // (cutoff, efdr)
    for value in distinct {
        let cutoff = value - CUTOFF_EPS;
        let mut k = 0usize;
        let mut miss = 0.0;
        for v in ppi {
            if *v > cutoff {
                k += 1;
                miss += 1.0 - v;
            }
        }
        if k == 0 {
            continue;
        }
        let efdr = miss / k as f64;
        if efdr <= target + FDR_BOUNDARY_TOL {
            best = Some((cutoff, efdr)); // later candidates are smaller cutoffs
        }
    }
    match best {
        Some((cutoff, efdr)) => Ok(FdrSelection {
            cutoff,
            expected_fdr: efdr,
            selected: ppi.iter().map(|v| *v > cutoff).collect(),
        }),
        None => Ok(FdrSelection {
            cutoff: 1.0,
            expected_fdr: 0.0,
            selected: vec![false; ppi.len()],
        }),
    }
}

/// A scalar convergence statistic plus a flag for degenerate inputs (zero
/// within-chain variance or a non-invertible pooled covariance).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceStat {
    pub value: f64,
    pub degenerate: bool,
}

/// Potential scale reduction factor for one scalar across chains, floored at
/// 1. Chains must share a common length of at least 2.
pub fn psrf(chains: &[&[f64]]) -> Result<ConvergenceStat> {
    let m = chains.len();
    if m < 2 {
        return Err(Error::input("potential scale reduction needs >= 2 chains"));
    }
    let n = chains[0].len();
    if n < 2 || chains.iter().any(|c| c.len() != n) {
        return Err(Error::input(
            "chains must share a common length of at least 2",
        ));
    }
    let nf = n as f64;
    let mf = m as f64;
    let means: Vec<f64> = chains
        .iter()
        .map(|c| c.iter().sum::<f64>() / nf)
        .collect();
    let grand = means.iter().sum::<f64>() / mf;
    let b = nf / (mf - 1.0)
        * means
            .iter()
            .map(|x| (x - grand) * (x - grand))
            .sum::<f64>();
    let w = chains
        .iter()
        .zip(&means)
        .map(|(c, mu)| c.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / (nf - 1.0))
        .sum::<f64>()
        / mf;
    if w <= f64::EPSILON * grand.abs().max(1.0) {
        // all chains (numerically) constant
        let value = if b <= f64::EPSILON { 1.0 } else { f64::INFINITY };
        return Ok(ConvergenceStat {
            value,
            degenerate: true,
        });
    }
    let v_hat = (nf - 1.0) / nf * w + (mf + 1.0) / (mf * nf) * b;
    Ok(ConvergenceStat {
        value: (v_hat / w).sqrt().max(1.0),
        degenerate: false,
    })
}

/// Multivariate potential scale reduction factor, floored at 1. Each chain is
/// an iterations x parameters matrix; chains must agree on both dimensions.
pub fn mpsrf(chains: &[DMatrix<f64>]) -> Result<ConvergenceStat> {
    let m = chains.len();
    if m < 2 {
        return Err(Error::input("potential scale reduction needs >= 2 chains"));
    }
    let n = chains[0].nrows();
    let d = chains[0].ncols();
    if n < 2 || d == 0 {
        return Err(Error::input(
            "chains need at least 2 iterations and 1 parameter",
        ));
    }
    if chains.iter().any(|c| c.nrows() != n || c.ncols() != d) {
        return Err(Error::input("chains disagree on dimensions"));
    }
    let nf = n as f64;
    let mf = m as f64;

    let means: Vec<nalgebra::DVector<f64>> = chains
        .iter()
        .map(|c| c.row_mean().transpose())
        .collect();
    let grand = means.iter().fold(nalgebra::DVector::zeros(d), |acc, v| acc + v) / mf;

    let mut w = DMatrix::zeros(d, d);
    for (chain, mean) in chains.iter().zip(&means) {
        for i in 0..n {
            let dev = chain.row(i).transpose() - mean;
            w += &dev * dev.transpose();
        }
    }
    w /= mf * (nf - 1.0);

    let mut b_over_n = DMatrix::zeros(d, d);
    for mean in &means {
        let dev = mean - &grand;
        b_over_n += &dev * dev.transpose();
    }
    b_over_n /= mf - 1.0;

    // Largest eigenvalue of W^{-1} B/n via Cholesky whitening; a ridge keeps
    // nearly singular pooled covariances usable but marks the result.
    let mut degenerate = false;
    let mean_diag = (w.diagonal().sum() / d as f64).abs().max(f64::MIN_POSITIVE);
    let mut ridge = 0.0;
    let chol = loop {
        let mut w_try = w.clone();
        for j in 0..d {
            w_try[(j, j)] += ridge;
        }
        if let Some(c) = w_try.cholesky() {
            break c;
        }
        degenerate = true;
        ridge = if ridge == 0.0 { 1e-12 * mean_diag } else { ridge * 100.0 };
        if ridge > mean_diag {
            return Ok(ConvergenceStat {
                value: f64::INFINITY,
                degenerate: true,
            });
        }
    };
    let l_inv_b = chol.l().solve_lower_triangular(&b_over_n).ok_or_else(|| {
        Error::numeric("triangular solve failed in convergence diagnostic")
    })?;
    let whitened = chol
        .l()
        .solve_lower_triangular(&l_inv_b.transpose())
        .ok_or_else(|| Error::numeric("triangular solve failed in convergence diagnostic"))?;
    let sym = (&whitened + whitened.transpose()) * 0.5;
    let lambda_max = sym
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max)
        .max(0.0);

    let value = ((nf - 1.0) / nf + (mf + 1.0) / mf * lambda_max).sqrt().max(1.0);
    Ok(ConvergenceStat { value, degenerate })
}

/// Area under the ROC curve by the trapezoid rule with tied scores grouped.
/// `None` when either class is empty (the curve is undefined).
pub fn roc_auc(scores: &[f64], truth: &[bool]) -> Result<Option<f64>> {
    if scores.len() != truth.len() {
        return Err(Error::input("scores and labels differ in length"));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::input("scores must not be NaN"));
    }
    let pos = truth.iter().filter(|t| **t).count();
    let neg = truth.len() - pos;
    if pos == 0 || neg == 0 {
        return Ok(None);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap());

    let mut area = 0.0f64;
    let mut tp = 0.0f64;
    let mut fp = 0.0f64;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        let mut d_tp = 0.0;
        let mut d_fp = 0.0;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            if truth[order[j]] {
                d_tp += 1.0;
            } else {
                d_fp += 1.0;
            }
            j += 1;
        }
        // trapezoid over the tied block
        area += d_fp * (tp + d_tp / 2.0);
        tp += d_tp;
        fp += d_fp;
        i = j;
    }
    debug_assert_eq!(tp as usize, pos);
    debug_assert_eq!(fp as usize, neg);
    Ok(Some(area / (pos as f64 * neg as f64)))
}

/// Edge-level posterior summary pooled over chains, with the FDR decision
/// applied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub p: usize,
    pub names: Vec<String>,
    /// Canonical pair order throughout.
    pub ppi: Vec<f64>,
    pub beta_mean: Vec<f64>,
    pub fdr_target: f64,
    pub cutoff: f64,
    pub expected_fdr: f64,
    pub selected: Vec<bool>,
}

impl PosteriorSummary {
    pub fn from_traces(traces: &[ChainTrace], fdr_target: f64) -> Result<Self> {
        let ppi = compute_ppi(traces)?;
        let beta_mean = pooled_beta_mean(traces)?;
        let decision = fdr_select(&ppi, fdr_target)?;
        Ok(PosteriorSummary {
            p: traces[0].p,
            names: traces[0].names.clone(),
            ppi,
            beta_mean,
            fdr_target,
            cutoff: decision.cutoff,
            expected_fdr: decision.expected_fdr,
            selected: decision.selected,
        })
    }

    /// Selected edges as column-index pairs.
    pub fn selected_pairs(&self) -> Vec<(usize, usize)> {
        pairs(self.p)
            .zip(&self.selected)
            .filter(|(_, sel)| **sel)
            .map(|(pair, _)| pair)
            .collect()
    }

    /// 0/1 adjacency matrix of the selected graph.
    pub fn adjacency(&self) -> DMatrix<u8> {
        let mut adj = DMatrix::zeros(self.p, self.p);
        for (s, t) in self.selected_pairs() {
            adj[(s, t)] = 1;
            adj[(t, s)] = 1;
        }
        adj
    }
}
