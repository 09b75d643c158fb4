//! Benchmark data generation: random, fixed, and null graph scenarios over
//! mixed node types, a Gibbs sampler that draws datasets from the joint
//! model, and a value-dependent (missing-at-random) censoring mechanism.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::draws::draw_conditional;
use crate::error::{Error, Result};
use crate::model::{f_transform, log_node_potential, CountGrid};
use crate::types::{pairs, MixedDataset, NodeParams, NodeType};

/// Sweeps discarded before the first retained row.
pub const GIBBS_WARMUP: usize = 500;
/// Sweeps between retained rows.
pub const GIBBS_THIN: usize = 10;
/// Support bound for count draws during generation.
pub const GIBBS_SUPPORT: usize = 500;

/// Where a scenario's graph comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphSource {
    /// Freshly drawn adjacency and weights per replicate.
    Random,
    /// The 14-node mixed-sign graph shipped with the crate.
    Fixed,
    /// No edges.
    Null,
}

/// A benchmark scenario: layout, graph source, size, and censoring level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub name: String,
    pub p: usize,
    pub n: usize,
    pub types: Vec<NodeType>,
    pub source: GraphSource,
    /// Fraction of rows censored per target column; 0 disables censoring.
    pub rho_m: f64,
    pub replicates: usize,
    pub seed: u64,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        if self.types.len() != self.p {
            return Err(Error::config(format!(
                "layout lists {} node types for p = {}",
                self.types.len(),
                self.p
            )));
        }
        if self.p < 2 {
            return Err(Error::config("scenarios need at least two columns"));
        }
        if self.n == 0 {
            return Err(Error::config("scenarios need at least one row"));
        }
        if !(self.rho_m == 0.0 || (self.rho_m > 0.0 && self.rho_m < 1.0)) {
            return Err(Error::config(format!(
                "missing fraction must be 0 or in (0,1), got {}",
                self.rho_m
            )));
        }
        if self.replicates == 0 {
            return Err(Error::config("at least one replicate is required"));
        }
        Ok(())
    }
}

/// Random-graph scenario: half continuous nodes, half counts.
pub fn random_scenario(
    p: usize,
    n: usize,
    rho_m: f64,
    replicates: usize,
    seed: u64,
) -> Result<ScenarioSpec> {
    let n_cont = p / 2;
    let mut types = vec![NodeType::Continuous; n_cont];
    types.extend(vec![NodeType::Count; p - n_cont]);
    let spec = ScenarioSpec {
        name: "random".into(),
        p,
        n,
        types,
        source: GraphSource::Random,
        rho_m,
        replicates,
        seed,
    };
    spec.validate()?;
    Ok(spec)
}

/// Fixed 14-node scenario: 6 continuous, 6 zero-inflated counts, 2 binary.
pub fn fixed_graph_scenario(seed: u64) -> ScenarioSpec {
    let mut types = vec![NodeType::Continuous; 6];
    types.extend(vec![NodeType::ZeroInflatedCount; 6]);
    types.extend(vec![NodeType::Categorical(2); 2]);
    ScenarioSpec {
        name: "fixed".into(),
        p: 14,
        n: 200,
        types,
        source: GraphSource::Fixed,
        rho_m: 0.0,
        replicates: 1,
        seed,
    }
}

/// Edge-free scenario: 4 standard-normal, 3 Poisson(4), 3 balanced binary.
pub fn null_scenario() -> ScenarioSpec {
    let mut types = vec![NodeType::Continuous; 4];
    types.extend(vec![NodeType::Count; 3]);
    types.extend(vec![NodeType::Categorical(2); 3]);
    ScenarioSpec {
        name: "null".into(),
        p: 10,
        n: 500,
        types,
        source: GraphSource::Null,
        rho_m: 0.0,
        replicates: 1,
        seed: 1,
    }
}

/// A drawn graph: flags in canonical pair order plus the symmetric weight
/// matrix on the standardized transform scale. `prob_clipped` marks the
/// degenerate p=2 case where the nominal edge probability 2/(p-1) exceeds 1.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedGraph {
    pub adjacency: Vec<bool>,
    pub weights: DMatrix<f64>,
    pub prob_clipped: bool,
}

/// Draws a graph with edge probability 2/(p-1) and weights `z * y * r`,
/// `y = ±1` fair, `r ~ U(0.2, 0.6)`.
pub fn generate_random_graph(p: usize, seed: u64) -> Result<GeneratedGraph> {
    if p < 2 {
        return Err(Error::input("graphs need at least two nodes"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(random_graph_with(p, &mut rng))
}

fn random_graph_with<R: Rng>(p: usize, rng: &mut R) -> GeneratedGraph {
    let nominal = 2.0 / (p as f64 - 1.0);
    let prob_clipped = nominal > 1.0;
    let prob = nominal.min(1.0);
    let mut adjacency = Vec::new();
    let mut weights = DMatrix::zeros(p, p);
    for (s, t) in pairs(p) {
        let z = rng.random_bool(prob);
        adjacency.push(z);
        if z {
            let r = 0.2 + 0.4 * rng.random::<f64>();
            let y = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            weights[(s, t)] = y * r;
            weights[(t, s)] = y * r;
        }
    }
    GeneratedGraph {
        adjacency,
        weights,
        prob_clipped,
    }
}

/// A fully specified generating model: types, node parameters, and the
/// symmetric weight matrix of raw couplings on `F(x_s) F(x_t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrueModel {
    pub types: Vec<NodeType>,
    pub thetas: Vec<NodeParams>,
    pub weights: DMatrix<f64>,
}

impl TrueModel {
    pub fn validate(&self) -> Result<()> {
        let p = self.types.len();
        if self.thetas.len() != p || self.weights.nrows() != p || self.weights.ncols() != p {
            return Err(Error::input("model pieces disagree on the column count"));
        }
        for (s, theta) in self.thetas.iter().enumerate() {
            theta.validate(self.types[s])?;
        }
        for (s, t) in pairs(p) {
            if self.weights[(s, t)] != self.weights[(t, s)] {
                return Err(Error::input("weight matrix must be symmetric"));
            }
            if !self.weights[(s, t)].is_finite() {
                return Err(Error::input("weights must be finite"));
            }
        }
        for s in 0..p {
            if self.weights[(s, s)] != 0.0 {
                return Err(Error::input("self-interactions are not allowed"));
            }
        }
        Ok(())
    }

    /// True-edge flags in canonical pair order.
    pub fn adjacency_pairs(&self) -> Vec<bool> {
        pairs(self.types.len())
            .map(|(s, t)| self.weights[(s, t)] != 0.0)
            .collect()
    }

    pub fn n_edges(&self) -> usize {
        self.adjacency_pairs().iter().filter(|e| **e).count()
    }

    /// Nodes incident to at least one edge.
    pub fn interacting_nodes(&self) -> Vec<usize> {
        let p = self.types.len();
        let mut active = vec![false; p];
        for (s, t) in pairs(p) {
            if self.weights[(s, t)] != 0.0 {
                active[s] = true;
                active[t] = true;
            }
        }
        (0..p).filter(|s| active[*s]).collect()
    }
}

/// Instantiates the generating model for one replicate. Random scenarios
/// redraw the graph and node parameters per replicate; fixed and null
/// scenarios are constant across replicates.
///
/// Drawn weights are interpreted on the standardized-transform scale and
/// mapped to raw couplings via each node's marginal transform spread, which
/// keeps the joint proper and makes edge strength comparable across node
/// noise levels. Random draws whose continuous block would still be
/// degenerate (weight cycles) are rejected and redrawn deterministically.
pub fn realize(spec: &ScenarioSpec, replicate: usize) -> Result<TrueModel> {
    spec.validate()?;
    let model = match spec.source {
        GraphSource::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(spec.seed, replicate as u64, 1));
            let mut attempts = 0;
            loop {
                attempts += 1;
                if attempts > 200 {
                    return Err(Error::numeric(
                        "could not draw a well-posed random graph in 200 attempts",
                    ));
                }
                let graph = random_graph_with(spec.p, &mut rng);
                let thetas: Vec<NodeParams> = spec
                    .types
                    .iter()
                    .map(|ty| match ty {
                        NodeType::Continuous => {
                            let sigma = [1.0, 2.0, 4.0][rng.random_range(0..3)];
                            NodeParams::Continuous {
                                mu: 0.0,
                                sigma_sq: sigma * sigma,
                            }
                        }
                        NodeType::Count => NodeParams::Count {
                            mu: 1.0,
                            nu: [0.5, 1.0, 2.0][rng.random_range(0..3)],
                        },
                        NodeType::ZeroInflatedCount => NodeParams::ZeroInflatedCount {
                            pi: 0.5,
                            mu: 3.0,
                        },
                        NodeType::Categorical(k) => NodeParams::Categorical {
                            probs: vec![1.0 / *k as f64; *k],
                        },
                    })
                    .collect();
                if !continuous_block_well_posed(&spec.types, &graph.weights) {
                    continue;
                }
                let weights = to_raw_couplings(&spec.types, &thetas, &graph.weights);
                break TrueModel {
                    types: spec.types.clone(),
                    thetas,
                    weights,
                };
            }
        }
        GraphSource::Fixed => fixed_model()?,
        GraphSource::Null => TrueModel {
            types: spec.types.clone(),
            thetas: null_thetas(&spec.types),
            weights: DMatrix::zeros(spec.p, spec.p),
        },
    };
    model.validate()?;
    Ok(model)
}

/// Standard deviation of `F(x)` when `x` follows the node potential alone.
fn marginal_f_sd(ty: NodeType, theta: &NodeParams, lambda_f: f64, b: usize) -> Result<f64> {
    let var = match (ty, theta) {
        (NodeType::Continuous, NodeParams::Continuous { sigma_sq, .. }) => *sigma_sq,
        (NodeType::Categorical(k), NodeParams::Categorical { probs }) => {
            let mean: f64 = (0..k).map(|j| probs[j] * j as f64).sum();
            (0..k)
                .map(|j| probs[j] * (j as f64 - mean) * (j as f64 - mean))
                .sum()
        }
        (NodeType::Count, _) | (NodeType::ZeroInflatedCount, _) => {
            let mut weights = Vec::with_capacity(b + 1);
            let mut max = f64::NEG_INFINITY;
            for x in 0..=b {
                let lw = log_node_potential(ty, theta, x as f64);
                weights.push(lw);
                max = max.max(lw);
            }
            let mut total = 0.0;
            let mut mean = 0.0;
            let mut second = 0.0;
            for (x, lw) in weights.iter().enumerate() {
                let w = (lw - max).exp();
                let f = f_transform(ty, lambda_f, x as f64)?;
                total += w;
                mean += w * f;
                second += w * f * f;
            }
            mean /= total;
            second /= total;
            (second - mean * mean).max(0.0)
        }
        _ => return Err(Error::input("node type and parameters disagree")),
    };
    if var <= 0.0 {
        return Err(Error::numeric(
            "degenerate marginal transform spread in scenario generation",
        ));
    }
    Ok(var.sqrt())
}

/// Maps standardized-scale weights to raw couplings on `F(x_s) F(x_t)`.
fn to_raw_couplings(
    types: &[NodeType],
    thetas: &[NodeParams],
    std_weights: &DMatrix<f64>,
) -> DMatrix<f64> {
    let p = types.len();
    let sds: Vec<f64> = (0..p)
        .map(|s| {
            marginal_f_sd(types[s], &thetas[s], 1.0, GIBBS_SUPPORT).unwrap_or(1.0)
        })
        .collect();
    let mut raw = DMatrix::zeros(p, p);
    for (s, t) in pairs(p) {
        let w = std_weights[(s, t)] / (sds[s] * sds[t]);
        raw[(s, t)] = w;
        raw[(t, s)] = w;
    }
    raw
}

/// The continuous sub-block must define a proper Gaussian conditional system:
/// unit-diagonal precision minus the standardized couplings stays positive
/// definite with margin.
fn continuous_block_well_posed(types: &[NodeType], std_weights: &DMatrix<f64>) -> bool {
    let cont: Vec<usize> = (0..types.len())
        .filter(|&s| types[s] == NodeType::Continuous)
        .collect();
    if cont.len() < 2 {
        return true;
    }
    let d = cont.len();
    let prec = DMatrix::from_fn(d, d, |r, c| {
        if r == c {
            1.0
        } else {
            -std_weights[(cont[r], cont[c])]
        }
    });
    let min_eig = prec
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    min_eig > 0.1
}

fn null_thetas(types: &[NodeType]) -> Vec<NodeParams> {
    types
        .iter()
        .map(|ty| match ty {
            NodeType::Continuous => NodeParams::Continuous {
                mu: 0.0,
                sigma_sq: 1.0,
            },
            NodeType::Count => NodeParams::Count { mu: 4.0, nu: 1.0 },
            NodeType::ZeroInflatedCount => NodeParams::ZeroInflatedCount { pi: 0.5, mu: 3.0 },
            NodeType::Categorical(k) => NodeParams::Categorical {
                probs: vec![1.0 / *k as f64; *k],
            },
        })
        .collect()
}

/// The 14-node model behind [`fixed_graph_scenario`], edges read from the
/// fixture shipped with the crate.
pub fn fixed_model() -> Result<TrueModel> {
    let spec = fixed_graph_scenario(0);
    let mut weights = DMatrix::zeros(spec.p, spec.p);
    let fixture = include_str!("../data/fixed_graph_p14.csv");
    for (lineno, line) in fixture.lines().enumerate().skip(1) {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(Error::input(format!(
                "fixed-graph fixture line {}: expected s,t,weight",
                lineno + 1
            )));
        }
        let s: usize = fields[0].trim().parse().map_err(|_| bad_fixture(lineno))?;
        let t: usize = fields[1].trim().parse().map_err(|_| bad_fixture(lineno))?;
        let w: f64 = fields[2].trim().parse().map_err(|_| bad_fixture(lineno))?;
        if s >= spec.p || t >= spec.p || s == t {
            return Err(bad_fixture(lineno));
        }
        weights[(s, t)] = w;
        weights[(t, s)] = w;
    }
    let thetas: Vec<NodeParams> = spec
        .types
        .iter()
        .map(|ty| match ty {
            NodeType::Continuous => NodeParams::Continuous {
                mu: 0.0,
                sigma_sq: 1.0,
            },
            NodeType::ZeroInflatedCount => NodeParams::ZeroInflatedCount { pi: 0.5, mu: 3.0 },
            NodeType::Categorical(k) => NodeParams::Categorical {
                probs: vec![1.0 / *k as f64; *k],
            },
            NodeType::Count => NodeParams::Count { mu: 1.0, nu: 1.0 },
        })
        .collect();
    let weights = to_raw_couplings(&spec.types, &thetas, &weights);
    Ok(TrueModel {
        types: spec.types,
        thetas,
        weights,
    })
}

fn bad_fixture(lineno: usize) -> Error {
    Error::input(format!(
        "fixed-graph fixture line {}: malformed entry",
        lineno + 1
    ))
}

/// Draws an n-row dataset from the joint model by Gibbs sampling the
/// node-conditionals: warm-up sweeps first, then one retained row every
/// [`GIBBS_THIN`] sweeps. Deterministic given `seed`.
pub fn gibbs_simulate(
    model: &TrueModel,
    n: usize,
    lambda_f: f64,
    b: usize,
    seed: u64,
) -> Result<MixedDataset> {
    model.validate()?;
    if n == 0 {
        return Err(Error::input("cannot generate an empty dataset"));
    }
    let p = model.types.len();
    let grid = CountGrid::new(lambda_f, b);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut scratch = Vec::new();

    let mut x = vec![0.0; p];
    let mut f = vec![0.0; p];
    for s in 0..p {
        x[s] = draw_conditional(
            model.types[s],
            &model.thetas[s],
            0.0,
            b,
            &grid,
            &mut scratch,
            &mut rng,
        );
        f[s] = f_transform(model.types[s], lambda_f, x[s])?;
    }

    let mut sweep = |x: &mut Vec<f64>, f: &mut Vec<f64>, rng: &mut ChaCha8Rng| {
        for s in 0..p {
            let mut c = 0.0;
            for t in 0..p {
                if t != s {
                    c += model.weights[(s, t)] * f[t];
                }
            }
            x[s] = draw_conditional(
                model.types[s],
                &model.thetas[s],
                c,
                b,
                &grid,
                &mut scratch,
                rng,
            );
            f[s] = match model.types[s] {
                NodeType::Continuous | NodeType::Categorical(_) => x[s],
                NodeType::Count | NodeType::ZeroInflatedCount => grid.f[x[s] as usize],
            };
        }
    };

    for _ in 0..GIBBS_WARMUP {
        sweep(&mut x, &mut f, &mut rng);
    }
    let mut vals = DMatrix::zeros(n, p);
    for i in 0..n {
        for _ in 0..GIBBS_THIN {
            sweep(&mut x, &mut f, &mut rng);
        }
        for s in 0..p {
            vals[(i, s)] = x[s];
        }
    }
    MixedDataset::complete(model.types.clone(), vals)
}

/// Censors the top `round(rho_m * n)` rows of each target column, ranked by
/// the companion column's value (ties broken at random), so missingness
/// depends only on observed data. The companion is the lowest-indexed fully
/// observed non-target column. Returns the censored data and whether the
/// request was too small to act on (`rho_m * n < 1`).
pub fn mar_censor(
    dataset: &MixedDataset,
    rho_m: f64,
    targets: &[usize],
    seed: u64,
) -> Result<(MixedDataset, bool)> {
    if rho_m == 0.0 {
        return Ok((dataset.clone(), false));
    }
    if !(rho_m > 0.0 && rho_m < 1.0) {
        return Err(Error::input(format!(
            "missing fraction must lie in (0,1), got {rho_m}"
        )));
    }
    if targets.is_empty() {
        return Err(Error::input("censoring needs at least one target column"));
    }
    let p = dataset.p();
    let n = dataset.n();
    if let Some(bad) = targets.iter().find(|t| **t >= p) {
        return Err(Error::input(format!(
            "target column {bad} out of range for {p} columns"
        )));
    }
    let companion = (0..p)
        .find(|c| {
            !targets.contains(c) && (0..n).all(|i| !dataset.is_missing(i, *c))
        })
        .ok_or_else(|| {
            Error::input("censoring needs a fully observed non-target companion column")
        })?;
    if rho_m * (n as f64) < 1.0 {
        return Ok((dataset.clone(), true));
    }
    let k = (rho_m * n as f64).round() as usize;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = dataset.clone();
    let mut sorted_targets: Vec<usize> = targets.to_vec();
    sorted_targets.sort_unstable();
    sorted_targets.dedup();
    for &t in &sorted_targets {
        let tiebreak: Vec<f64> = (0..n).map(|_| rng.random()).collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            let va = dataset.value(a, companion).unwrap();
            let vb = dataset.value(b, companion).unwrap();
            vb.partial_cmp(&va)
                .unwrap()
                .then(tiebreak[a].partial_cmp(&tiebreak[b]).unwrap())
        });
        for &i in order.iter().take(k) {
            out.set_missing(i, t);
        }
    }
    Ok((out, false))
}

/// Default censoring targets: a seeded half of the interacting nodes, or of
/// all nodes when the graph is empty.
pub fn default_censor_targets(model: &TrueModel, seed: u64) -> Vec<usize> {
    let mut pool = model.interacting_nodes();
    if pool.is_empty() {
        pool = (0..model.types.len()).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pool.shuffle(&mut rng);
    let take = pool.len().div_ceil(2);
    let mut targets: Vec<usize> = pool.into_iter().take(take).collect();
    targets.sort_unstable();
    targets
}

/// One generated benchmark replicate.
#[derive(Debug, Clone)]
pub struct Replicate {
    pub index: usize,
    pub model: TrueModel,
    pub dataset: MixedDataset,
    /// True-edge flags in canonical pair order.
    pub truth: Vec<bool>,
    /// Columns censored by the missing-data mechanism (empty when rho_m = 0).
    pub censored_columns: Vec<usize>,
}

/// Generates every replicate of a scenario concurrently, with per-replicate
/// seeds derived from the scenario seed.
pub fn generate_replicates(spec: &ScenarioSpec) -> Result<Vec<Replicate>> {
    spec.validate()?;
    (0..spec.replicates)
        .into_par_iter()
        .map(|idx| generate_replicate(spec, idx))
        .collect()
}

/// Generates a single replicate: realize the model, Gibbs-sample the data,
/// then censor if the scenario calls for it.
pub fn generate_replicate(spec: &ScenarioSpec, index: usize) -> Result<Replicate> {
    let model = realize(spec, index)?;
    let data_seed = sub_seed(spec.seed, index as u64, 2);
    let dataset = gibbs_simulate(&model, spec.n, 1.0, GIBBS_SUPPORT, data_seed)?;
    let truth = model.adjacency_pairs();
    let (dataset, censored_columns) = if spec.rho_m > 0.0 {
        let targets = default_censor_targets(&model, sub_seed(spec.seed, index as u64, 3));
        let (censored, no_op) =
            mar_censor(&dataset, spec.rho_m, &targets, sub_seed(spec.seed, index as u64, 4))?;
        if no_op {
            (censored, Vec::new())
        } else {
            (censored, targets)
        }
    } else {
        (dataset, Vec::new())
    };
    Ok(Replicate {
        index,
        model,
        dataset,
        truth,
        censored_columns,
    })
}

/// Stable seed derivation for independent generator streams.
fn sub_seed(base: u64, replicate: u64, stream: u64) -> u64 {
    let mut z = base
        .wrapping_add(replicate.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(stream.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
