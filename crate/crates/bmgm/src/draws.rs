//! Exact draws from node-conditional distributions. Shared by the missing-data
//! imputation step, the data simulator, and the exchange backend's auxiliary
//! samples.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::model::{log_node_potential, CountGrid};
use crate::types::{NodeParams, NodeType};

/// Draws x_s from `p(x | c) ∝ exp{f_s(x) + c F(x)}` for any node type.
///
/// `c` is on the raw-F scale. Count-like nodes use inverse-CDF over the
/// truncated support `0..=b`; `scratch` is a caller-provided weight buffer so
/// hot loops do not allocate.
pub(crate) fn draw_conditional<R: Rng>(
    ty: NodeType,
    theta: &NodeParams,
    c: f64,
    b: usize,
    grid: &CountGrid,
    scratch: &mut Vec<f64>,
    rng: &mut R,
) -> f64 {
    match (ty, theta) {
        (NodeType::Continuous, NodeParams::Continuous { mu, sigma_sq }) => {
            let mean = mu + c * sigma_sq;
            Normal::new(mean, sigma_sq.sqrt()).unwrap().sample(rng)
        }
        (NodeType::Categorical(k), NodeParams::Categorical { probs }) => {
            scratch.clear();
            let mut max = f64::NEG_INFINITY;
            for j in 0..k {
                let lw = probs[j].ln() + c * j as f64;
                scratch.push(lw);
                max = max.max(lw);
            }
            inverse_cdf_from_log_weights(scratch, max, rng) as f64
        }
        (NodeType::Count, _) | (NodeType::ZeroInflatedCount, _) => {
            scratch.clear();
            let mut max = f64::NEG_INFINITY;
            for x in 0..=b {
                let lw = log_node_potential(ty, theta, x as f64) + c * grid.f[x];
                scratch.push(lw);
                max = max.max(lw);
            }
            inverse_cdf_from_log_weights(scratch, max, rng) as f64
        }
        _ => unreachable!("callers validate the type/params match"),
    }
}

/// Exponentiates max-stabilized log weights in place and inverse-CDF samples
/// an index.
fn inverse_cdf_from_log_weights<R: Rng>(log_w: &mut [f64], max: f64, rng: &mut R) -> usize {
    let mut total = 0.0;
    for lw in log_w.iter_mut() {
        *lw = (*lw - max).exp();
        total += *lw;
    }
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (idx, w) in log_w.iter().enumerate() {
        acc += w;
        if u <= acc {
            return idx;
        }
    }
    log_w.len() - 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn empirical_tv(ty: NodeType, theta: &NodeParams, c: f64, b: usize, draws: usize) -> f64 {
        let grid = CountGrid::new(1.0, b);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut scratch = Vec::new();
        let mut counts = vec![0usize; b + 1];
        for _ in 0..draws {
            let x = draw_conditional(ty, theta, c, b, &grid, &mut scratch, &mut rng);
            counts[x as usize] += 1;
        }
        // exact truncated probabilities
        let mut log_w = Vec::with_capacity(b + 1);
        let mut max = f64::NEG_INFINITY;
        for x in 0..=b {
            let lw = log_node_potential(ty, theta, x as f64) + c * grid.f[x];
            log_w.push(lw);
            max = max.max(lw);
        }
        let total: f64 = log_w.iter().map(|lw| (lw - max).exp()).sum();
        let mut tv = 0.0;
        for x in 0..=b {
            let exact = (log_w[x] - max).exp() / total;
            let emp = counts[x] as f64 / draws as f64;
            tv += (exact - emp).abs();
        }
        tv / 2.0
    }

    #[test]
    fn count_draws_match_brute_force_distribution() {
        let theta = NodeParams::Count { mu: 2.0, nu: 0.8 };
        let tv = empirical_tv(NodeType::Count, &theta, 0.6, 100, 20_000);
        assert!(tv < 0.02, "total variation {tv} too large");
    }

    #[test]
    fn zip_draws_match_brute_force_distribution() {
        let theta = NodeParams::ZeroInflatedCount { pi: 0.4, mu: 3.0 };
        let tv = empirical_tv(NodeType::ZeroInflatedCount, &theta, -0.4, 100, 20_000);
        assert!(tv < 0.02, "total variation {tv} too large");
    }

    #[test]
    fn continuous_draws_have_shifted_mean() {
        let theta = NodeParams::Continuous {
            mu: 1.0,
            sigma_sq: 4.0,
        };
        let grid = CountGrid::new(1.0, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut scratch = Vec::new();
        let n = 40_000;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let x = draw_conditional(
                NodeType::Continuous,
                &theta,
                0.5,
                100,
                &grid,
                &mut scratch,
                &mut rng,
            );
            sum += x;
            sum_sq += x * x;
        }
        let mean = sum / n as f64;
        let var = sum_sq / n as f64 - mean * mean;
        // conditional is N(mu + c sigma^2, sigma^2) = N(3, 4)
        assert!((mean - 3.0).abs() < 0.05, "mean {mean}");
        assert!((var - 4.0).abs() < 0.15, "var {var}");
    }

    #[test]
    fn categorical_draws_follow_tilted_weights() {
        let theta = NodeParams::Categorical {
            probs: vec![0.5, 0.5],
        };
        let grid = CountGrid::new(1.0, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let mut scratch = Vec::new();
        let c = 0.9f64;
        let n = 30_000;
        let mut ones = 0usize;
        for _ in 0..n {
            let x = draw_conditional(
                NodeType::Categorical(2),
                &theta,
                c,
                100,
                &grid,
                &mut scratch,
                &mut rng,
            );
            ones += x as usize;
        }
        let want = c.exp() / (1.0 + c.exp());
        let got = ones as f64 / n as f64;
        assert!((got - want).abs() < 0.01, "got {got}, want {want}");
    }
}
