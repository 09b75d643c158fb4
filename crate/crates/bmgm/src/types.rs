//! Core domain types: node types, node parameters, mixed datasets, and the
//! edge-weight state shared by the samplers.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Variable type of one node in the graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeType {
    /// Real-valued with Gaussian node potential.
    Continuous,
    /// Non-negative integer with Conway–Maxwell–Poisson node potential.
    Count,
    /// Non-negative integer with zero-inflated Poisson node potential.
    ZeroInflatedCount,
    /// Finite levels coded 0..K-1; K >= 2.
    Categorical(usize),
}

impl NodeType {
    /// True for count-like nodes whose interaction transform is bounded.
    pub fn is_count_like(self) -> bool {
        matches!(self, NodeType::Count | NodeType::ZeroInflatedCount)
    }

    /// True when the node's support is a finite or countable set of integers.
    pub fn is_discrete(self) -> bool {
        !matches!(self, NodeType::Continuous)
    }

    /// Checks that `x` lies in the node's support. Missing values are handled
    /// by the dataset mask, not here.
    pub fn value_in_domain(self, x: f64) -> bool {
        if !x.is_finite() {
            return false;
        }
        match self {
            NodeType::Continuous => true,
            NodeType::Count | NodeType::ZeroInflatedCount => x >= 0.0 && x.fract() == 0.0,
            NodeType::Categorical(k) => x >= 0.0 && x.fract() == 0.0 && (x as usize) < k,
        }
    }

    pub fn describe(self) -> String {
        match self {
            NodeType::Continuous => "continuous".to_string(),
            NodeType::Count => "count".to_string(),
            NodeType::ZeroInflatedCount => "zip".to_string(),
            NodeType::Categorical(k) => format!("categorical({k})"),
        }
    }
}

/// Node-conditional parameters; the variant must match the node's `NodeType`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum NodeParams {
    Continuous { mu: f64, sigma_sq: f64 },
    Count { mu: f64, nu: f64 },
    ZeroInflatedCount { pi: f64, mu: f64 },
    Categorical { probs: Vec<f64> },
}

impl NodeParams {
    /// Validates positivity/simplex constraints and the match with `ty`.
    pub fn validate(&self, ty: NodeType) -> Result<()> {
        match (self, ty) {
            (NodeParams::Continuous { mu, sigma_sq }, NodeType::Continuous) => {
                if !mu.is_finite() || !sigma_sq.is_finite() || *sigma_sq <= 0.0 {
                    return Err(Error::domain(format!(
                        "continuous params need finite mu and sigma_sq > 0, got mu={mu}, sigma_sq={sigma_sq}"
                    )));
                }
            }
            (NodeParams::Count { mu, nu }, NodeType::Count) => {
                if !(*mu > 0.0) || !(*nu > 0.0) || !mu.is_finite() || !nu.is_finite() {
                    return Err(Error::domain(format!(
                        "count params need mu > 0 and nu > 0, got mu={mu}, nu={nu}"
                    )));
                }
            }
            (NodeParams::ZeroInflatedCount { pi, mu }, NodeType::ZeroInflatedCount) => {
                if !(*pi > 0.0 && *pi < 1.0) || !(*mu > 0.0) || !mu.is_finite() {
                    return Err(Error::domain(format!(
                        "zip params need pi in (0,1) and mu > 0, got pi={pi}, mu={mu}"
                    )));
                }
            }
            (NodeParams::Categorical { probs }, NodeType::Categorical(k)) => {
                if probs.len() != k {
                    return Err(Error::domain(format!(
                        "categorical params have {} probabilities but the node has {k} levels",
                        probs.len()
                    )));
                }
                if probs.iter().any(|p| !(*p > 0.0) || !p.is_finite()) {
                    return Err(Error::domain("categorical probabilities must be positive"));
                }
                let sum: f64 = probs.iter().sum();
                if (sum - 1.0).abs() > 1e-8 {
                    return Err(Error::domain(format!(
                        "categorical probabilities sum to {sum}, expected 1"
                    )));
                }
            }
            (params, ty) => {
                return Err(Error::domain(format!(
                    "parameter variant {params:?} does not match node type {}",
                    ty.describe()
                )));
            }
        }
        Ok(())
    }

    /// Flattens the parameters for trace recording.
    pub fn flatten(&self) -> Vec<f64> {
        match self {
            NodeParams::Continuous { mu, sigma_sq } => vec![*mu, *sigma_sq],
            NodeParams::Count { mu, nu } => vec![*mu, *nu],
            NodeParams::ZeroInflatedCount { pi, mu } => vec![*pi, *mu],
            NodeParams::Categorical { probs } => probs.clone(),
        }
    }

    /// Component names matching [`NodeParams::flatten`], for trace headers.
    pub fn component_names(&self) -> Vec<String> {
        match self {
            NodeParams::Continuous { .. } => vec!["mu".into(), "sigma_sq".into()],
            NodeParams::Count { .. } => vec!["mu".into(), "nu".into()],
            NodeParams::ZeroInflatedCount { .. } => vec!["pi".into(), "mu".into()],
            NodeParams::Categorical { probs } => {
                (0..probs.len()).map(|j| format!("p{j}")).collect()
            }
        }
    }
}

/// Number of unordered node pairs for `p` nodes.
pub fn n_pairs(p: usize) -> usize {
    p * (p - 1) / 2
}

/// Upper-triangle pairs (s, t) with s < t in row-major order; this is the
/// canonical flattening used by traces, summaries, and CSV output.
pub fn pairs(p: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..p).flat_map(move |s| (s + 1..p).map(move |t| (s, t)))
}

/// Index of pair (s, t), s != t, in the canonical order of [`pairs`].
pub fn pair_index(p: usize, s: usize, t: usize) -> usize {
    let (s, t) = if s < t { (s, t) } else { (t, s) };
    debug_assert!(t < p);
    // offset of row s = sum_{r<s} (p-1-r)
    s * (2 * p - s - 1) / 2 + (t - s - 1)
}

/// A rectangular mixed-type dataset with per-cell missingness.
///
/// Values are stored as `f64` for all types: counts hold integral values and
/// categorical cells hold level codes `0..K-1`. Masked (missing) cells hold
/// NaN and are ignored by every likelihood evaluation until imputed.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedDataset {
    names: Vec<String>,
    types: Vec<NodeType>,
    /// n x p, column-major.
    values: DMatrix<f64>,
    /// Column-major mask aligned with `values`; true = missing.
    missing: Vec<bool>,
    /// For each categorical column, the original string labels in level order.
    cat_labels: Vec<Option<Vec<String>>>,
}

impl MixedDataset {
    /// Builds and validates a dataset. `values` is n x p with NaN at missing
    /// cells; `missing` must agree with the NaN pattern or be derivable from it.
    pub fn new(
        names: Vec<String>,
        types: Vec<NodeType>,
        values: DMatrix<f64>,
        missing: Vec<bool>,
        cat_labels: Vec<Option<Vec<String>>>,
    ) -> Result<Self> {
        let p = types.len();
        let n = values.nrows();
        if values.ncols() != p {
            return Err(Error::input(format!(
                "value matrix has {} columns but {} types were declared",
                values.ncols(),
                p
            )));
        }
        if names.len() != p {
            return Err(Error::input(format!(
                "{} column names for {} columns",
                names.len(),
                p
            )));
        }
        if missing.len() != n * p {
            return Err(Error::input(format!(
                "missing mask has {} entries for an {n} x {p} matrix",
                missing.len()
            )));
        }
        if cat_labels.len() != p {
            return Err(Error::input("label table length must equal column count"));
        }
        for (s, ty) in types.iter().enumerate() {
            if let NodeType::Categorical(k) = ty {
                if *k < 2 {
                    return Err(Error::input(format!(
                        "column {s}: categorical nodes need at least 2 levels, got {k}"
                    )));
                }
            }
            match (ty, &cat_labels[s]) {
                (NodeType::Categorical(k), Some(labels)) if labels.len() != *k => {
                    return Err(Error::input(format!(
                        "column {s}: {} labels for {k} levels",
                        labels.len()
                    )));
                }
                (NodeType::Categorical(_), _) => {}
                (_, Some(_)) => {
                    return Err(Error::input(format!(
                        "column {s}: label table on a non-categorical column"
                    )));
                }
                _ => {}
            }
        }
        let ds = MixedDataset {
            names,
            types,
            values,
            missing,
            cat_labels,
        };
        ds.validate_cells()?;
        Ok(ds)
    }

    /// Convenience constructor for complete (no-missing) data.
    pub fn complete(types: Vec<NodeType>, values: DMatrix<f64>) -> Result<Self> {
        let p = types.len();
        let n = values.nrows();
        let names = (0..p).map(|s| format!("x{s}")).collect();
        let cat_labels = types
            .iter()
            .map(|ty| match ty {
                NodeType::Categorical(k) => Some((0..*k).map(|j| j.to_string()).collect()),
                _ => None,
            })
            .collect();
        MixedDataset::new(names, types, values, vec![false; n * p], cat_labels)
    }

    fn validate_cells(&self) -> Result<()> {
        for s in 0..self.p() {
            let ty = self.types[s];
            for i in 0..self.n() {
                if self.is_missing(i, s) {
                    continue;
                }
                let x = self.values[(i, s)];
                if !ty.value_in_domain(x) {
                    return Err(Error::input(format!(
                        "row {i}, column {s} ({}): value {x} outside the {} domain",
                        self.names[s],
                        ty.describe()
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn p(&self) -> usize {
        self.types.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn types(&self) -> &[NodeType] {
        &self.types
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn is_missing(&self, i: usize, s: usize) -> bool {
        self.missing[s * self.n() + i]
    }

    pub fn missing_mask(&self) -> &[bool] {
        &self.missing
    }

    pub fn n_missing(&self) -> usize {
        self.missing.iter().filter(|m| **m).count()
    }

    /// Observed value at (i, s), or None when masked.
    pub fn value(&self, i: usize, s: usize) -> Option<f64> {
        if self.is_missing(i, s) {
            None
        } else {
            Some(self.values[(i, s)])
        }
    }

    pub fn cat_labels(&self, s: usize) -> Option<&[String]> {
        self.cat_labels[s].as_deref()
    }

    /// Marks cell (i, s) missing and overwrites the stored value with NaN.
    pub fn set_missing(&mut self, i: usize, s: usize) {
        let n = self.n();
        self.missing[s * n + i] = true;
        self.values[(i, s)] = f64::NAN;
    }

    /// Overwrites the names (used by readers that know header strings).
    pub fn set_names(&mut self, names: Vec<String>) -> Result<()> {
        if names.len() != self.p() {
            return Err(Error::input("name count must equal column count"));
        }
        self.names = names;
        Ok(())
    }
}

/// Edge-weight state: symmetric weight matrix, inclusion indicators for every
/// unordered pair, and the interaction-transform exponent.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeState {
    /// p x p symmetric; diagonal entries are held fixed by the samplers.
    omega: DMatrix<f64>,
    /// Inclusion indicator per pair, in canonical [`pairs`] order.
    z: Vec<bool>,
    /// Exponent of the bounded count transform (arctan x)^lambda_f.
    lambda_f: f64,
}

impl EdgeState {
    /// All-zero off-diagonal with the given fixed diagonal, all z = false.
    pub fn new(diag: &[f64], lambda_f: f64) -> Result<Self> {
        if !(lambda_f > 0.0) || !lambda_f.is_finite() {
            return Err(Error::domain(format!(
                "transform exponent must be positive and finite, got {lambda_f}"
            )));
        }
        let p = diag.len();
        let mut omega = DMatrix::zeros(p, p);
        for (s, d) in diag.iter().enumerate() {
            omega[(s, s)] = *d;
        }
        Ok(EdgeState {
            omega,
            z: vec![false; n_pairs(p)],
            lambda_f,
        })
    }

    pub fn p(&self) -> usize {
        self.omega.nrows()
    }

    pub fn lambda_f(&self) -> f64 {
        self.lambda_f
    }

    pub fn omega(&self) -> &DMatrix<f64> {
        &self.omega
    }

    pub fn beta(&self, s: usize, t: usize) -> f64 {
        self.omega[(s, t)]
    }

    /// Sets an off-diagonal weight symmetrically.
    pub fn set_beta(&mut self, s: usize, t: usize, value: f64) {
        debug_assert_ne!(s, t, "diagonal entries are fixed");
        self.omega[(s, t)] = value;
        self.omega[(t, s)] = value;
    }

    pub fn z(&self, s: usize, t: usize) -> bool {
        self.z[pair_index(self.p(), s, t)]
    }

    pub fn set_z(&mut self, s: usize, t: usize, value: bool) {
        let idx = pair_index(self.p(), s, t);
        self.z[idx] = value;
    }

    pub fn z_slice(&self) -> &[bool] {
        &self.z
    }

    /// Maximum absolute symmetry violation; exactly 0 when the setters were
    /// used throughout.
    pub fn symmetry_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for (s, t) in pairs(self.p()) {
            worst = worst.max((self.omega[(s, t)] - self.omega[(t, s)]).abs());
        }
        worst
    }
}
