//! Release acceptance suite: one test per criterion, each printing a single
//! `criterion NN (...): PASS/FAIL` line (visible with `--nocapture`) before
//! asserting.
//!
//! Criteria 1-5 are exact and fast: model identities against independent
//! oracles (brute-force enumeration, adaptive quadrature, textbook density
//! ratios, hand-enumerated selection fixtures). Criteria 6-11 are scaled
//! stochastic reproductions of the benchmark study this library implements:
//! they run real chains on simulated data and check tolerance bands, so they
//! take minutes, not seconds.

use std::sync::OnceLock;

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{Continuous as _, Normal};

use bmgm::exchange::ArmsConfig;
use bmgm::inference::{compute_ppi, fdr_select, mpsrf, roc_auc, PosteriorSummary};
use bmgm::model::{interaction_sum, log_conditional, log_joint_unnorm, log_norm_const};
use bmgm::priors::{z_posterior_prob, Hyperparams};
use bmgm::sampler::{run_chains, time_iterations, Backend, SamplerConfig};
use bmgm::simulate::{
    fixed_graph_scenario, generate_replicate, null_scenario, random_scenario, GraphSource,
    ScenarioSpec,
};
use bmgm::types::{pairs, EdgeState, NodeParams, NodeType};

fn status(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

// ---------------------------------------------------------------------------
// Oracles
// ---------------------------------------------------------------------------

/// Adaptive Simpson quadrature with absolute tolerance `tol`.
fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (left, lm, flm) = simpson(f, a, fa, m, fm);
        let (right, rm, frm) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, fa, m, fm, left, lm, flm, 0.5 * tol, depth - 1)
            + recurse(f, m, fm, b, fb, right, rm, frm, 0.5 * tol, depth - 1)
    }
    let fa = f(a);
    let fb = f(b);
    let (whole, m, fm) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, whole, m, fm, tol, 48)
}

/// Max-stabilized log of a sum of exponentials.
fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

// ---------------------------------------------------------------------------
// Random model instances
// ---------------------------------------------------------------------------

struct Instance {
    types: Vec<NodeType>,
    thetas: Vec<NodeParams>,
    edges: EdgeState,
    row: Vec<f64>,
}

fn random_node(rng: &mut ChaCha8Rng) -> (NodeType, NodeParams) {
    match rng.random_range(0..5) {
        0 => (
            NodeType::Continuous,
            NodeParams::Continuous {
                mu: rng.random_range(-2.0..2.0),
                sigma_sq: rng.random_range(0.5..4.0),
            },
        ),
        1 => (
            NodeType::Count,
            NodeParams::Count {
                mu: rng.random_range(0.5..4.0),
                nu: [0.5, 1.0, 2.0][rng.random_range(0..3)],
            },
        ),
        2 => (
            NodeType::ZeroInflatedCount,
            NodeParams::ZeroInflatedCount {
                pi: rng.random_range(0.2..0.8),
                mu: rng.random_range(0.5..5.0),
            },
        ),
        k => {
            let levels = if k == 3 { 2 } else { 3 };
            let raw: Vec<f64> = (0..levels).map(|_| rng.random_range(0.2..1.0)).collect();
            let total: f64 = raw.iter().sum();
            (
                NodeType::Categorical(levels),
                NodeParams::Categorical {
                    probs: raw.iter().map(|w| w / total).collect(),
                },
            )
        }
    }
}

fn random_instance(rng: &mut ChaCha8Rng, p: usize) -> Instance {
    let mut types = Vec::with_capacity(p);
    let mut thetas = Vec::with_capacity(p);
    for _ in 0..p {
        let (ty, theta) = random_node(rng);
        types.push(ty);
        thetas.push(theta);
    }
    let mut edges = EdgeState::new(&vec![1.0; p], 1.0).unwrap();
    for (s, t) in pairs(p) {
        edges.set_beta(s, t, rng.random_range(-0.5..0.5));
    }
    let row: Vec<f64> = types
        .iter()
        .map(|ty| match ty {
            NodeType::Continuous => rng.random_range(-3.0..3.0),
            NodeType::Count | NodeType::ZeroInflatedCount => rng.random_range(0..9) as f64,
            NodeType::Categorical(k) => rng.random_range(0..*k) as f64,
        })
        .collect();
    Instance {
        types,
        thetas,
        edges,
        row,
    }
}

// ---------------------------------------------------------------------------
// Criterion 1
// ---------------------------------------------------------------------------

/// Every node conditional produced by the model code must match the
/// conditional obtained from the unnormalized joint by direct summation or
/// quadrature over that node's support.
#[test]
fn criterion_01_conditionals_are_compatible_with_the_joint() {
    const B: usize = 60;
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0.0f64;
    for k in 0..100 {
        let p = 2 + (k % 4);
        let inst = random_instance(&mut rng, p);
        for s in 0..p {
            let c = interaction_sum(s, &inst.row, &inst.types, &inst.edges).unwrap();
            let direct =
                log_conditional(inst.types[s], &inst.thetas[s], inst.row[s], c, 1.0, B).unwrap();

            let joint_at = |x: f64| {
                let mut row = inst.row.clone();
                row[s] = x;
                log_joint_unnorm(&row, &inst.types, &inst.thetas, &inst.edges).unwrap()
            };
            let here = joint_at(inst.row[s]);
            let log_denominator = match inst.types[s] {
                NodeType::Categorical(levels) => {
                    let terms: Vec<f64> = (0..levels).map(|j| joint_at(j as f64)).collect();
                    log_sum_exp(&terms)
                }
                NodeType::Count | NodeType::ZeroInflatedCount => {
                    let terms: Vec<f64> = (0..=B).map(|x| joint_at(x as f64)).collect();
                    log_sum_exp(&terms)
                }
                NodeType::Continuous => {
                    let (mu, sigma_sq) = match inst.thetas[s] {
                        NodeParams::Continuous { mu, sigma_sq } => (mu, sigma_sq),
                        _ => unreachable!(),
                    };
                    let center = mu + c * sigma_sq;
                    let sd = sigma_sq.sqrt();
                    let shift = joint_at(center);
                    let mass = integrate(
                        &|x| (joint_at(x) - shift).exp(),
                        center - 14.0 * sd,
                        center + 14.0 * sd,
                        1e-12,
                    );
                    shift + mass.ln()
                }
            };
            let from_joint = here - log_denominator;
            worst = worst.max((direct - from_joint).abs());
        }
    }
    let pass = worst < 1e-9;
    println!(
        "criterion 01 (joint/conditional compatibility): {} — worst log-density gap {worst:.3e} over 100 mixed instances (tolerance 1e-9)",
        status(pass)
    );
    assert!(pass, "worst compatibility gap {worst:.3e} exceeds 1e-9");
}

// ---------------------------------------------------------------------------
// Criterion 2
// ---------------------------------------------------------------------------

/// With the 0-1 coupling removed, nodes 0 and 1 must be conditionally
/// independent given node 2 under the brute-force joint table.
#[test]
fn criterion_02_zero_weight_means_conditional_independence() {
    const B: usize = 25;
    let layouts: [[(NodeType, NodeParams); 3]; 5] = [
        [
            (NodeType::Count, NodeParams::Count { mu: 2.0, nu: 1.0 }),
            (NodeType::Count, NodeParams::Count { mu: 1.0, nu: 0.5 }),
            (
                NodeType::Categorical(3),
                NodeParams::Categorical {
                    probs: vec![0.5, 0.3, 0.2],
                },
            ),
        ],
        [
            (
                NodeType::ZeroInflatedCount,
                NodeParams::ZeroInflatedCount { pi: 0.4, mu: 3.0 },
            ),
            (NodeType::Count, NodeParams::Count { mu: 2.5, nu: 2.0 }),
            (
                NodeType::Categorical(2),
                NodeParams::Categorical {
                    probs: vec![0.7, 0.3],
                },
            ),
        ],
        [
            (
                NodeType::Categorical(2),
                NodeParams::Categorical {
                    probs: vec![0.45, 0.55],
                },
            ),
            (
                NodeType::Categorical(3),
                NodeParams::Categorical {
                    probs: vec![0.2, 0.5, 0.3],
                },
            ),
            (NodeType::Count, NodeParams::Count { mu: 1.5, nu: 1.0 }),
        ],
        [
            (
                NodeType::ZeroInflatedCount,
                NodeParams::ZeroInflatedCount { pi: 0.6, mu: 2.0 },
            ),
            (
                NodeType::ZeroInflatedCount,
                NodeParams::ZeroInflatedCount { pi: 0.3, mu: 4.0 },
            ),
            (
                NodeType::ZeroInflatedCount,
                NodeParams::ZeroInflatedCount { pi: 0.5, mu: 1.0 },
            ),
        ],
        [
            (NodeType::Count, NodeParams::Count { mu: 3.0, nu: 2.0 }),
            (
                NodeType::ZeroInflatedCount,
                NodeParams::ZeroInflatedCount { pi: 0.25, mu: 2.0 },
            ),
            (
                NodeType::Categorical(2),
                NodeParams::Categorical {
                    probs: vec![0.6, 0.4],
                },
            ),
        ],
    ];
    let couplings = [(0.4, -0.3), (-0.5, 0.25), (0.3, 0.3), (-0.2, -0.4), (0.5, -0.5)];

    let support = |ty: NodeType| -> Vec<f64> {
        match ty {
            NodeType::Categorical(k) => (0..k).map(|j| j as f64).collect(),
            _ => (0..=B).map(|x| x as f64).collect(),
        }
    };

    let mut worst = 0.0f64;
    for (layout, (b02, b12)) in layouts.iter().zip(couplings) {
        let types: Vec<NodeType> = layout.iter().map(|(ty, _)| *ty).collect();
        let thetas: Vec<NodeParams> = layout.iter().map(|(_, th)| th.clone()).collect();
        let mut edges = EdgeState::new(&[1.0; 3], 1.0).unwrap();
        edges.set_beta(0, 2, b02);
        edges.set_beta(1, 2, b12);
        // The 0-1 weight stays exactly zero.

        let s0 = support(types[0]);
        let s1 = support(types[1]);
        let s2 = support(types[2]);
        for &x2 in &s2 {
            // Joint weights over (x0, x1) at this x2, normalized in place.
            let mut table = vec![0.0; s0.len() * s1.len()];
            let mut logs = Vec::with_capacity(table.len());
            for &x0 in &s0 {
                for &x1 in &s1 {
                    logs.push(
                        log_joint_unnorm(&[x0, x1, x2], &types, &thetas, &edges).unwrap(),
                    );
                }
            }
            let norm = log_sum_exp(&logs);
            for (cell, lw) in table.iter_mut().zip(&logs) {
                *cell = (lw - norm).exp();
            }
            let marginal0: Vec<f64> = (0..s0.len())
                .map(|i| table[i * s1.len()..(i + 1) * s1.len()].iter().sum())
                .collect();
            let marginal1: Vec<f64> = (0..s1.len())
                .map(|j| (0..s0.len()).map(|i| table[i * s1.len() + j]).sum())
                .collect();
            for i in 0..s0.len() {
                for j in 0..s1.len() {
                    let gap = (table[i * s1.len() + j] - marginal0[i] * marginal1[j]).abs();
                    worst = worst.max(gap);
                }
            }
        }
    }
    let pass = worst < 1e-9;
    println!(
        "criterion 02 (conditional independence at zero weight): {} — worst factorization gap {worst:.3e} (tolerance 1e-9)",
        status(pass)
    );
    assert!(pass, "worst factorization gap {worst:.3e} exceeds 1e-9");
}

// ---------------------------------------------------------------------------
// Criterion 3
// ---------------------------------------------------------------------------

/// Closed-form Gaussian normalizers must agree with adaptive quadrature, and
/// truncated count normalizers must be insensitive to the truncation bound
/// across the parameter ranges the benchmarks use.
#[test]
fn criterion_03_normalizing_constants() {
    let mut worst_gauss = 0.0f64;
    for mu in [-2.0, 0.0, 3.0] {
        for sigma_sq in [0.25, 1.0, 9.0] {
            for c in [-2.0, -0.5, 0.0, 1.0, 2.5] {
                let theta = NodeParams::Continuous { mu, sigma_sq };
                let closed =
                    log_norm_const(NodeType::Continuous, &theta, c, 1.0, 0).unwrap();
                let sd = sigma_sq.sqrt();
                let center = mu + c * sigma_sq;
                let quad = integrate(
                    &|x| {
                        let z = x - mu;
                        (-0.5 * z * z / sigma_sq - 0.5 * sigma_sq.ln() + c * x - closed).exp()
                    },
                    center - 16.0 * sd,
                    center + 16.0 * sd,
                    1e-13,
                );
                worst_gauss = worst_gauss.max(quad.ln().abs());
            }
        }
    }

    let mut worst_trunc = 0.0f64;
    let mut count_cases: Vec<(NodeType, NodeParams)> = Vec::new();
    for mu in [0.5, 1.0, 3.0, 8.0] {
        for nu in [0.5, 1.0, 2.0] {
            count_cases.push((NodeType::Count, NodeParams::Count { mu, nu }));
        }
    }
    for pi in [0.3, 0.6] {
        for mu in [1.0, 4.0, 8.0] {
            count_cases.push((
                NodeType::ZeroInflatedCount,
                NodeParams::ZeroInflatedCount { pi, mu },
            ));
        }
    }
    for (ty, theta) in &count_cases {
        for c in [-1.0, -0.3, 0.0, 0.3, 1.0] {
            let at_100 = log_norm_const(*ty, theta, c, 1.0, 100).unwrap();
            let at_1000 = log_norm_const(*ty, theta, c, 1.0, 1000).unwrap();
            worst_trunc = worst_trunc.max((at_100 - at_1000).abs());
        }
    }

    let pass = worst_gauss < 1e-6 && worst_trunc < 1e-8;
    println!(
        "criterion 03 (normalizing constants): {} — Gaussian closed-form vs quadrature {worst_gauss:.3e} (tol 1e-6), count truncation B=100 vs B=1000 {worst_trunc:.3e} (tol 1e-8)",
        status(pass)
    );
    assert!(worst_gauss < 1e-6, "Gaussian gap {worst_gauss:.3e}");
    assert!(worst_trunc < 1e-8, "truncation gap {worst_trunc:.3e}");
}

// ---------------------------------------------------------------------------
// Criterion 4
// ---------------------------------------------------------------------------

/// The exact inclusion-indicator posterior must match the textbook two-density
/// ratio computed with an independent normal pdf implementation.
#[test]
fn criterion_04_indicator_posterior_matches_density_ratio() {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let v0 = rng.random_range(0.01..0.3);
        let v1 = rng.random_range(0.4..2.0);
        let pi = rng.random_range(0.05..0.95);
        let beta = rng.random_range(-3.0..3.0);
        let hyper = Hyperparams {
            v0,
            v1,
            pi_incl: pi,
            ..Hyperparams::default()
        };
        let got = z_posterior_prob(beta, &hyper);
        let slab = pi * Normal::new(0.0, v1).unwrap().pdf(beta);
        let spike = (1.0 - pi) * Normal::new(0.0, v0).unwrap().pdf(beta);
        let expected = slab / (slab + spike);
        worst = worst.max((got - expected).abs());
    }
    let pass = worst < 1e-12;
    println!(
        "criterion 04 (indicator posterior): {} — worst probability gap {worst:.3e} over 1000 random draws (tolerance 1e-12)",
        status(pass)
    );
    assert!(pass, "worst gap {worst:.3e} exceeds 1e-12");
}

// ---------------------------------------------------------------------------
// Criterion 5
// ---------------------------------------------------------------------------

/// Hand-enumerated selection fixtures: the rule picks the most permissive
/// cutoff whose selected set keeps mean(1 - PPI) at or below the target.
#[test]
fn criterion_05_fdr_selection_fixtures() {
    struct Fixture {
        ppi: Vec<f64>,
        target: f64,
        selected: Vec<bool>,
        efdr: f64,
    }
    let fixtures = [
        // Adding the 0.2 edge would push the estimate to 0.4333; stop at two.
        Fixture {
            ppi: vec![0.9, 0.6, 0.2],
            target: 0.3,
            selected: vec![true, true, false],
            efdr: ((1.0 - 0.9) + (1.0 - 0.6)) / 2.0,
        },
        // Third edge brings 0.1167 > 0.1.
        Fixture {
            ppi: vec![0.95, 0.9, 0.8, 0.5, 0.3],
            target: 0.1,
            selected: vec![true, true, false, false, false],
            efdr: ((1.0 - 0.95) + (1.0 - 0.9)) / 2.0,
        },
        // The tie at 0.95 enters as a block of two (k jumps 3 -> 5).
        Fixture {
            ppi: vec![1.0, 0.98, 0.96, 0.95, 0.95, 0.7, 0.5, 0.3, 0.1, 0.0],
            target: 0.05,
            selected: vec![
                true, true, true, true, true, false, false, false, false, false,
            ],
            efdr: (0.0 + 0.02 + 0.04 + 0.05 + 0.05) / 5.0,
        },
        // Everything clears the bar comfortably.
        Fixture {
            ppi: vec![0.999; 10],
            target: 0.05,
            selected: vec![true; 10],
            efdr: 1.0 - 0.999,
        },
        // Nothing qualifies: empty set, unit cutoff, zero estimate.
        Fixture {
            ppi: vec![0.5, 0.4, 0.1],
            target: 0.05,
            selected: vec![false, false, false],
            efdr: 0.0,
        },
    ];

    let mut pass = true;
    let mut detail = String::new();
    for (idx, fx) in fixtures.iter().enumerate() {
        let got = fdr_select(&fx.ppi, fx.target).unwrap();
        let sel_ok = got.selected == fx.selected;
        let efdr_ok = (got.expected_fdr - fx.efdr).abs() < 1e-12;
        // The cutoff must separate the selected block from the rest.
        let included_min = fx
            .ppi
            .iter()
            .zip(&fx.selected)
            .filter(|(_, s)| **s)
            .map(|(v, _)| *v)
            .fold(f64::INFINITY, f64::min);
        let excluded_max = fx
            .ppi
            .iter()
            .zip(&fx.selected)
            .filter(|(_, s)| !**s)
            .map(|(v, _)| *v)
            .fold(f64::NEG_INFINITY, f64::max);
        let cutoff_ok = if got.n_selected() == 0 {
            got.cutoff >= excluded_max
        } else {
            got.cutoff < included_min && got.cutoff >= excluded_max
        };
        if !(sel_ok && efdr_ok && cutoff_ok) {
            pass = false;
            detail.push_str(&format!(
                " fixture {idx}: selected {:?} (want {:?}), efdr {} (want {}), cutoff {};",
                got.selected, fx.selected, got.expected_fdr, fx.efdr, got.cutoff
            ));
        }
    }
    println!(
        "criterion 05 (FDR selection fixtures): {} — 5 hand-enumerated fixtures{}",
        status(pass),
        if pass { " all exact".to_string() } else { detail.clone() }
    );
    assert!(pass, "{detail}");
}

// ---------------------------------------------------------------------------
// Criterion 6
// ---------------------------------------------------------------------------

/// Both backends target the same posterior: their inclusion-probability
/// matrices on a shared mixed dataset must agree entrywise.
#[test]
fn criterion_06_backends_agree_on_inclusion_probabilities() {
    let spec = ScenarioSpec {
        name: "mixed6".into(),
        p: 6,
        n: 100,
        types: vec![
            NodeType::Continuous,
            NodeType::Continuous,
            NodeType::Count,
            NodeType::Count,
            NodeType::ZeroInflatedCount,
            NodeType::Categorical(2),
        ],
        source: GraphSource::Random,
        rho_m: 0.0,
        replicates: 1,
        seed: 61,
    };
    let rep = generate_replicate(&spec, 0).unwrap();
    let hyper = Hyperparams::defaults_for(spec.p);
    let cfg = SamplerConfig {
        n_iter: 10_000,
        n_burnin: 5_000,
        n_chains: 1,
        seed: 606,
        record_theta: false,
        ..SamplerConfig::default()
    };
    let arms = ArmsConfig::default();

    let mut ppis = Vec::new();
    for backend in [Backend::Truncated, Backend::Exchange] {
        let traces = run_chains(&rep.dataset, &hyper, &cfg, backend, &arms, None).unwrap();
        ppis.push(compute_ppi(&traces).unwrap());
    }
    let worst = ppis[0]
        .iter()
        .zip(&ppis[1])
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    let pass = worst <= 0.10;
    println!(
        "criterion 06 (backend agreement): {} — max |PPI difference| {worst:.4} on a p=6, n=100 mixed dataset (tolerance 0.10)",
        status(pass)
    );
    assert!(pass, "backends disagree by {worst:.4} > 0.10");
}

// ---------------------------------------------------------------------------
// Criterion 7
// ---------------------------------------------------------------------------

/// On edge-free data with missingness, selection at FDR 0.05 must stay
/// essentially empty: mean false-positive rate at most 0.01 and at least 44
/// of 45 true negatives in every replicate.
#[test]
fn criterion_07_null_graph_stays_empty() {
    let mut spec = null_scenario();
    spec.rho_m = 0.1;
    spec.replicates = 5;
    spec.seed = 7;

    let hyper = Hyperparams::defaults_for(spec.p);
    let arms = ArmsConfig::default();
    let mut false_positives = Vec::new();
    for rep_idx in 0..spec.replicates {
        let rep = generate_replicate(&spec, rep_idx).unwrap();
        let cfg = SamplerConfig {
            n_iter: 8_000,
            n_burnin: 4_000,
            n_chains: 1,
            seed: 700 + rep_idx as u64,
            record_theta: false,
            ..SamplerConfig::default()
        };
        let traces =
            run_chains(&rep.dataset, &hyper, &cfg, Backend::Truncated, &arms, None).unwrap();
        let summary = PosteriorSummary::from_traces(&traces, 0.05).unwrap();
        false_positives.push(summary.selected.iter().filter(|s| **s).count());
    }
    let n_pairs = 45.0;
    let mean_fpr =
        false_positives.iter().map(|fp| *fp as f64 / n_pairs).sum::<f64>() / 5.0;
    let min_tn = 45 - false_positives.iter().copied().max().unwrap();
    let pass = mean_fpr <= 0.01 && min_tn >= 44;
    println!(
        "criterion 07 (null graph): {} — mean FPR {mean_fpr:.4} (<= 0.01), per-replicate false positives {false_positives:?} (>= 44 true negatives each)",
        status(pass)
    );
    assert!(pass, "mean FPR {mean_fpr:.4}, false positives {false_positives:?}");
}

// ---------------------------------------------------------------------------
// Criteria 8 and 10 share the same runs
// ---------------------------------------------------------------------------

struct BenchmarkRuns {
    auc_complete: Vec<f64>,
    auc_missing: Vec<f64>,
    acceptance_rates: Vec<f64>,
    mpsrf_beta: f64,
    mpsrf_degenerate: bool,
}

static RUNS: OnceLock<BenchmarkRuns> = OnceLock::new();

/// Five random-graph replicates (p=12, n=200) fitted completely, plus five
/// with 20% censoring; replicate 0 of the complete arm runs three chains so
/// the multivariate convergence diagnostic has something to pool.
fn benchmark_runs() -> &'static BenchmarkRuns {
    RUNS.get_or_init(|| {
        let arms = ArmsConfig::default();
        let mut acceptance_rates = Vec::new();
        let mut mpsrf_beta = f64::NAN;
        let mut mpsrf_degenerate = false;

        let mut run_arm = |spec: &ScenarioSpec, seed_base: u64, chains_on_first: usize| {
            let hyper = Hyperparams::defaults_for(spec.p);
            let mut aucs = Vec::new();
            for rep_idx in 0..spec.replicates {
                let rep = generate_replicate(spec, rep_idx).unwrap();
                let cfg = SamplerConfig {
                    n_iter: 10_000,
                    n_burnin: 5_000,
                    n_chains: if rep_idx == 0 { chains_on_first } else { 1 },
                    seed: seed_base + rep_idx as u64,
                    record_theta: false,
                    ..SamplerConfig::default()
                };
                let traces =
                    run_chains(&rep.dataset, &hyper, &cfg, Backend::Truncated, &arms, None)
                        .unwrap();
                for trace in &traces {
                    acceptance_rates.extend(trace.acceptance.theta.iter().copied());
                    acceptance_rates.extend(trace.acceptance.column.iter().copied());
                }
                if rep_idx == 0 && chains_on_first > 1 {
                    let mats: Vec<DMatrix<f64>> =
                        traces.iter().map(|t| t.beta_matrix()).collect();
                    let stat = mpsrf(&mats).unwrap();
                    mpsrf_beta = stat.value;
                    mpsrf_degenerate = stat.degenerate;
                }
                let ppi = compute_ppi(&traces).unwrap();
                let auc = roc_auc(&ppi, &rep.truth)
                    .unwrap()
                    .expect("random graphs have both edges and non-edges");
                aucs.push(auc);
            }
            aucs
        };

        let complete = random_scenario(12, 200, 0.0, 5, 81).unwrap();
        let auc_complete = run_arm(&complete, 8100, 3);
        let missing = random_scenario(12, 200, 0.2, 5, 82).unwrap();
        let auc_missing = run_arm(&missing, 8200, 1);

        BenchmarkRuns {
            auc_complete,
            auc_missing,
            acceptance_rates,
            mpsrf_beta,
            mpsrf_degenerate,
        }
    })
}

/// Structure recovery on random mixed graphs: mean AUC at least 0.85 on
/// complete data and 0.83 with 20% of rows censored in the target columns.
#[test]
fn criterion_08_random_graph_recovery() {
    let runs = benchmark_runs();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let mean_complete = mean(&runs.auc_complete);
    let mean_missing = mean(&runs.auc_missing);
    let pass = mean_complete >= 0.85 && mean_missing >= 0.83;
    println!(
        "criterion 08 (random-graph recovery): {} — mean AUC {mean_complete:.3} complete (>= 0.85), {mean_missing:.3} with censoring (>= 0.83); per-replicate {:?} / {:?}",
        status(pass),
        runs.auc_complete
            .iter()
            .map(|a| (a * 1000.0).round() / 1000.0)
            .collect::<Vec<_>>(),
        runs.auc_missing
            .iter()
            .map(|a| (a * 1000.0).round() / 1000.0)
            .collect::<Vec<_>>()
    );
    assert!(
        pass,
        "mean AUC complete {mean_complete:.3}, missing {mean_missing:.3}"
    );
}

// ---------------------------------------------------------------------------
// Criterion 9
// ---------------------------------------------------------------------------

/// Structure recovery on the shipped 14-node fixture graph: mean AUC at
/// least 0.85 complete and 0.80 with 10% censoring.
#[test]
fn criterion_09_fixture_graph_recovery() {
    let arms = ArmsConfig::default();
    let mut means = Vec::new();
    let mut all = Vec::new();
    for (rho_m, seed, seed_base) in [(0.0, 91u64, 9100u64), (0.1, 92, 9200)] {
        let mut spec = fixed_graph_scenario(seed);
        spec.rho_m = rho_m;
        spec.replicates = 5;
        let hyper = Hyperparams::defaults_for(spec.p);
        let mut aucs = Vec::new();
        for rep_idx in 0..spec.replicates {
            let rep = generate_replicate(&spec, rep_idx).unwrap();
            let cfg = SamplerConfig {
                n_iter: 10_000,
                n_burnin: 5_000,
                n_chains: 1,
                seed: seed_base + rep_idx as u64,
                record_theta: false,
                ..SamplerConfig::default()
            };
            let traces =
                run_chains(&rep.dataset, &hyper, &cfg, Backend::Truncated, &arms, None).unwrap();
            let ppi = compute_ppi(&traces).unwrap();
            aucs.push(
                roc_auc(&ppi, &rep.truth)
                    .unwrap()
                    .expect("the fixture graph has both edges and non-edges"),
            );
        }
        means.push(aucs.iter().sum::<f64>() / aucs.len() as f64);
        all.push(aucs);
    }
    let pass = means[0] >= 0.85 && means[1] >= 0.80;
    println!(
        "criterion 09 (fixture-graph recovery): {} — mean AUC {:.3} complete (>= 0.85), {:.3} with censoring (>= 0.80); per-replicate {:?} / {:?}",
        status(pass),
        means[0],
        means[1],
        all[0].iter().map(|a| (a * 1000.0).round() / 1000.0).collect::<Vec<_>>(),
        all[1].iter().map(|a| (a * 1000.0).round() / 1000.0).collect::<Vec<_>>()
    );
    assert!(pass, "mean AUCs {means:?}");
}

// ---------------------------------------------------------------------------
// Criterion 10
// ---------------------------------------------------------------------------

/// Sampler hygiene on the criterion-8 runs: every per-block acceptance rate
/// inside [0.15, 0.70], and the multivariate scale-reduction factor of the
/// three-chain replicate below 1.2.
#[test]
fn criterion_10_acceptance_band_and_convergence() {
    let runs = benchmark_runs();
    let lo = runs
        .acceptance_rates
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let hi = runs
        .acceptance_rates
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let band_ok = lo >= 0.15 && hi <= 0.70;
    let mpsrf_ok = !runs.mpsrf_degenerate && runs.mpsrf_beta < 1.2;
    let pass = band_ok && mpsrf_ok;
    println!(
        "criterion 10 (sampler hygiene): {} — acceptance rates span [{lo:.3}, {hi:.3}] over {} blocks (band [0.15, 0.70]), three-chain MPSRF {:.3} (< 1.2)",
        status(pass),
        runs.acceptance_rates.len(),
        runs.mpsrf_beta
    );
    assert!(band_ok, "acceptance rates span [{lo:.3}, {hi:.3}]");
    assert!(mpsrf_ok, "MPSRF {:.3}", runs.mpsrf_beta);
}

// ---------------------------------------------------------------------------
// Criterion 11
// ---------------------------------------------------------------------------

/// The truncated backend must cost at most 0.35x the exchange backend per
/// iteration on a p=14, n=300 mixed dataset with missing cells, and clear
/// 100 iterations in 40 seconds outright.
#[test]
fn criterion_11_per_iteration_performance() {
    let mut spec = fixed_graph_scenario(111);
    spec.n = 300;
    spec.rho_m = 0.2;
    let rep = generate_replicate(&spec, 0).unwrap();
    let missing_pct = 100.0 * rep.dataset.n_missing() as f64
        / (rep.dataset.n() * rep.dataset.p()) as f64;

    let hyper = Hyperparams::defaults_for(spec.p);
    let arms = ArmsConfig::default();
    let cfg = SamplerConfig {
        n_iter: 200,
        n_burnin: 100,
        n_chains: 1,
        seed: 1,
        record_theta: false,
        ..SamplerConfig::default()
    };
    let median = |mut v: Vec<f64>| -> f64 {
        v.sort_by(|a, b| a.total_cmp(b));
        let k = v.len();
        if k % 2 == 1 {
            v[k / 2]
        } else {
            0.5 * (v[k / 2 - 1] + v[k / 2])
        }
    };
    let trunc = median(
        time_iterations(&rep.dataset, &hyper, &cfg, Backend::Truncated, &arms, 50, 100).unwrap(),
    );
    let exch = median(
        time_iterations(&rep.dataset, &hyper, &cfg, Backend::Exchange, &arms, 50, 100).unwrap(),
    );
    let ratio = trunc / exch;
    let hundred_iters = 100.0 * trunc;
    let pass = ratio <= 0.35 && hundred_iters <= 40.0;
    println!(
        "criterion 11 (per-iteration cost): {} — truncated {trunc:.4}s vs exchange {exch:.4}s per iteration (ratio {ratio:.3} <= 0.35), 100 iterations in {hundred_iters:.1}s (<= 40s), {missing_pct:.1}% missing cells",
        status(pass)
    );
    assert!(ratio <= 0.35, "ratio {ratio:.3} > 0.35");
    assert!(hundred_iters <= 40.0, "100 iterations take {hundred_iters:.1}s");
}
