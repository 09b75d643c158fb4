//! Run artifacts: atomic file writes, posterior summaries, selection outputs
//! (adjacency, edge list, DOT graph), per-chain trace files, and the run
//! manifest that makes a fit reproducible.
//!
//! Every writer goes through [`write_atomic`], so a crash mid-write never
//! leaves a truncated artifact behind: content lands in a temporary file in
//! the destination directory and is renamed into place.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::inference::PosteriorSummary;
use crate::sampler::{AcceptanceReport, ChainTrace, Warnings};
use crate::types::{n_pairs, pairs, MixedDataset, NodeType};

static TMP_COUNTER: AtomicU64 = AtomicU64::new(0);

/// Writes `bytes` to `path` atomically: the content goes to a uniquely named
/// temporary file in the same directory, then a rename moves it into place.
/// Parent directories are created as needed.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir)
        .map_err(|e| Error::io(format!("cannot create directory {}", dir.display()), e))?;
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::input(format!("{} has no file name", path.display())))?;
    let tmp = dir.join(format!(
        ".{}.tmp.{}.{}",
        file_name.to_string_lossy(),
        std::process::id(),
        TMP_COUNTER.fetch_add(1, Ordering::Relaxed)
    ));
    fs::write(&tmp, bytes)
        .map_err(|e| Error::io(format!("cannot write {}", tmp.display()), e))?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::io(format!("cannot move {} into place", path.display()), e)
    })
}

/// Hex-encoded SHA-256 digest.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for byte in digest {
        let _ = write!(out, "{byte:02x}");
    }
    out
}

/// Expands a canonical-pair-order vector into the symmetric `p x p` matrix
/// with zero diagonal.
pub fn pair_matrix(p: usize, vals: &[f64]) -> Result<DMatrix<f64>> {
    if vals.len() != n_pairs(p) {
        return Err(Error::input(format!(
            "{} pair values for p = {p}",
            vals.len()
        )));
    }
    let mut m = DMatrix::zeros(p, p);
    for ((s, t), v) in pairs(p).zip(vals) {
        m[(s, t)] = *v;
        m[(t, s)] = *v;
    }
    Ok(m)
}

/// Writes a square matrix as CSV with row/column headers.
pub fn write_matrix_csv(path: &Path, names: &[String], m: &DMatrix<f64>) -> Result<()> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let io_err = |e: csv::Error| Error::input(format!("cannot encode matrix: {e}"));
    let mut header = vec![String::new()];
    header.extend(names.iter().cloned());
    writer.write_record(&header).map_err(io_err)?;
    for i in 0..m.nrows() {
        let mut row = vec![names[i].clone()];
        row.extend((0..m.ncols()).map(|j| format!("{}", m[(i, j)])));
        writer.write_record(&row).map_err(io_err)?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| Error::input(format!("cannot encode matrix: {e}")))?;
    write_atomic(path, &bytes)
}

fn to_json(value: &impl Serialize, what: &str) -> Result<Vec<u8>> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::input(format!("cannot encode {what}: {e}")))?;
    text.push('\n');
    Ok(text.into_bytes())
}

/// Writes `summary.json`, `ppi.csv`, and `beta_mean.csv` into `dir`.
pub fn write_summary_files(dir: &Path, summary: &PosteriorSummary) -> Result<()> {
    write_atomic(&dir.join("summary.json"), &to_json(summary, "summary")?)?;
    let ppi = pair_matrix(summary.p, &summary.ppi)?;
    write_matrix_csv(&dir.join("ppi.csv"), &summary.names, &ppi)?;
    let beta = pair_matrix(summary.p, &summary.beta_mean)?;
    write_matrix_csv(&dir.join("beta_mean.csv"), &summary.names, &beta)
}

/// Reads a `summary.json` produced by [`write_summary_files`].
pub fn read_summary(path: &Path) -> Result<PosteriorSummary> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::io(format!("cannot read summary {}", path.display()), e))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::input(format!("{}: not a posterior summary: {e}", path.display())))
}

/// Renders the selected graph in DOT format: one undirected edge per selected
/// pair, solid for positive posterior-mean weight, dashed for negative, line
/// width proportional to the magnitude.
pub fn render_dot(summary: &PosteriorSummary) -> String {
    let quote = |name: &str| format!("\"{}\"", name.replace('"', "\\\""));
    let mut out = String::from("graph selected {\n");
    for name in &summary.names {
        let _ = writeln!(out, "    {};", quote(name));
    }
    let selected: Vec<(usize, usize, f64)> = pairs(summary.p)
        .zip(summary.selected.iter().zip(&summary.beta_mean))
        .filter(|(_, (sel, _))| **sel)
        .map(|((s, t), (_, b))| (s, t, *b))
        .collect();
    let max_mag = selected
        .iter()
        .map(|(_, _, b)| b.abs())
        .fold(0.0_f64, f64::max);
    for (s, t, b) in &selected {
        let style = if *b < 0.0 { "dashed" } else { "solid" };
        let width = if max_mag > 0.0 {
            (4.0 * b.abs() / max_mag).max(0.1)
        } else {
            1.0
        };
        let _ = writeln!(
            out,
            "    {} -- {} [style={style}, penwidth={width:.2}];",
            quote(&summary.names[*s]),
            quote(&summary.names[*t])
        );
    }
    out.push_str("}\n");
    out
}

/// Writes `adjacency.csv`, `edges.csv`, and `graph.dot` into `dir`.
pub fn write_selection_files(dir: &Path, summary: &PosteriorSummary) -> Result<()> {
    let adj = summary.adjacency();
    let adj_f = DMatrix::from_fn(summary.p, summary.p, |i, j| adj[(i, j)] as f64);
    write_matrix_csv(&dir.join("adjacency.csv"), &summary.names, &adj_f)?;

    let mut writer = csv::Writer::from_writer(Vec::new());
    let io_err = |e: csv::Error| Error::input(format!("cannot encode edge list: {e}"));
    writer
        .write_record(["source", "target", "ppi", "beta_mean"])
        .map_err(io_err)?;
    for (idx, (s, t)) in pairs(summary.p).enumerate() {
        if summary.selected[idx] {
            writer
                .write_record([
                    summary.names[s].clone(),
                    summary.names[t].clone(),
                    format!("{}", summary.ppi[idx]),
                    format!("{}", summary.beta_mean[idx]),
                ])
                .map_err(io_err)?;
        }
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| Error::input(format!("cannot encode edge list: {e}")))?;
    write_atomic(&dir.join("edges.csv"), &bytes)?;

    write_atomic(&dir.join("graph.dot"), render_dot(summary).as_bytes())
}

/// Writes a true-edge list for a simulated graph: one `source,target,weight`
/// row per pair with nonzero coupling.
pub fn write_truth_csv(path: &Path, names: &[String], weights: &DMatrix<f64>) -> Result<()> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let io_err = |e: csv::Error| Error::input(format!("cannot encode truth table: {e}"));
    writer
        .write_record(["source", "target", "weight"])
        .map_err(io_err)?;
    for (s, t) in pairs(weights.nrows()) {
        let w = weights[(s, t)];
        if w != 0.0 {
            writer
                .write_record([names[s].clone(), names[t].clone(), format!("{w}")])
                .map_err(io_err)?;
        }
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| Error::input(format!("cannot encode truth table: {e}")))?;
    write_atomic(path, &bytes)
}

/// Per-chain metadata stored next to each trace CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct ChainMeta {
    chain_id: usize,
    seed: u64,
    p: usize,
    names: Vec<String>,
    types: Vec<NodeType>,
    theta_names: Vec<String>,
    acceptance: AcceptanceReport,
    warnings: Warnings,
}

fn trace_header(trace: &ChainTrace) -> Vec<String> {
    let mut header = vec!["draw".to_string()];
    for (s, t) in pairs(trace.p) {
        header.push(format!("beta_{s}_{t}"));
    }
    for (s, t) in pairs(trace.p) {
        header.push(format!("z_{s}_{t}"));
    }
    if !trace.theta.is_empty() {
        header.extend(trace.theta_names.iter().cloned());
    }
    header
}

/// Writes one CSV of recorded draws plus a metadata sidecar per chain into
/// `dir/traces/`.
pub fn write_traces(dir: &Path, traces: &[ChainTrace]) -> Result<()> {
    let tdir = dir.join("traces");
    for trace in traces {
        let meta = ChainMeta {
            chain_id: trace.chain_id,
            seed: trace.seed,
            p: trace.p,
            names: trace.names.clone(),
            types: trace.types.clone(),
            theta_names: trace.theta_names.clone(),
            acceptance: trace.acceptance.clone(),
            warnings: trace.warnings,
        };
        write_atomic(
            &tdir.join(format!("chain_{}.meta.json", trace.chain_id)),
            &to_json(&meta, "chain metadata")?,
        )?;

        let mut writer = csv::Writer::from_writer(Vec::new());
        let io_err = |e: csv::Error| Error::input(format!("cannot encode trace: {e}"));
        writer.write_record(trace_header(trace)).map_err(io_err)?;
        let record_theta = !trace.theta.is_empty();
        for (row, (beta, z)) in trace.beta.iter().zip(&trace.z).enumerate() {
            let mut record = Vec::with_capacity(1 + beta.len() + z.len());
            record.push(format!("{row}"));
            record.extend(beta.iter().map(|b| format!("{b}")));
            record.extend(z.iter().map(|zi| if *zi { "1".into() } else { "0".to_string() }));
            if record_theta {
                record.extend(trace.theta[row].iter().map(|t| format!("{t}")));
            }
            writer.write_record(&record).map_err(io_err)?;
        }
        let bytes = writer
            .into_inner()
            .map_err(|e| Error::input(format!("cannot encode trace: {e}")))?;
        write_atomic(&tdir.join(format!("chain_{}.csv", trace.chain_id)), &bytes)?;
    }
    Ok(())
}

/// Reads traces written by [`write_traces`]. `dir` may be the run directory
/// or the `traces/` directory itself. Fields that only exist in-process (the
/// final weight matrix, the initial diagonal) come back empty.
pub fn read_traces(dir: &Path) -> Result<Vec<ChainTrace>> {
    let tdir = if dir.join("traces").is_dir() {
        dir.join("traces")
    } else {
        dir.to_path_buf()
    };
    let mut metas: Vec<PathBuf> = fs::read_dir(&tdir)
        .map_err(|e| Error::io(format!("cannot list {}", tdir.display()), e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|path| {
            path.file_name()
                .and_then(|f| f.to_str())
                .is_some_and(|f| f.starts_with("chain_") && f.ends_with(".meta.json"))
        })
        .collect();
    metas.sort();
    if metas.is_empty() {
        return Err(Error::input(format!(
            "no chain_*.meta.json files under {}",
            tdir.display()
        )));
    }

    let mut traces = Vec::with_capacity(metas.len());
    for meta_path in metas {
        let text = fs::read_to_string(&meta_path)
            .map_err(|e| Error::io(format!("cannot read {}", meta_path.display()), e))?;
        let meta: ChainMeta = serde_json::from_str(&text)
            .map_err(|e| Error::input(format!("{}: bad chain metadata: {e}", meta_path.display())))?;
        let csv_path = tdir.join(format!("chain_{}.csv", meta.chain_id));
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_path(&csv_path)
            .map_err(|e| Error::input(format!("cannot read {}: {e}", csv_path.display())))?;
        let m = n_pairs(meta.p);
        let n_theta = meta.theta_names.len();
        let mut beta = Vec::new();
        let mut z = Vec::new();
        let mut theta = Vec::new();
        for (row, record) in reader.records().enumerate() {
            let record = record
                .map_err(|e| Error::input(format!("{}: row {row}: {e}", csv_path.display())))?;
            let expect_theta = record.len() == 1 + 2 * m + n_theta;
            if !expect_theta && record.len() != 1 + 2 * m {
                return Err(Error::input(format!(
                    "{}: row {row} has {} fields, expected {} or {}",
                    csv_path.display(),
                    record.len(),
                    1 + 2 * m,
                    1 + 2 * m + n_theta
                )));
            }
            let cell = |idx: usize| -> Result<f64> {
                record[idx].parse::<f64>().map_err(|_| {
                    Error::input(format!(
                        "{}: row {row}, field {idx}: '{}' is not a number",
                        csv_path.display(),
                        &record[idx]
                    ))
                })
            };
            let mut beta_row = Vec::with_capacity(m);
            for idx in 1..=m {
                beta_row.push(cell(idx)?);
            }
            let mut z_row = Vec::with_capacity(m);
            for idx in (m + 1)..=(2 * m) {
                z_row.push(cell(idx)? != 0.0);
            }
            if expect_theta && n_theta > 0 {
                let mut theta_row = Vec::with_capacity(n_theta);
                for idx in (2 * m + 1)..record.len() {
                    theta_row.push(cell(idx)?);
                }
                theta.push(theta_row);
            }
            beta.push(beta_row);
            z.push(z_row);
        }
        traces.push(ChainTrace {
            chain_id: meta.chain_id,
            seed: meta.seed,
            p: meta.p,
            names: meta.names,
            types: meta.types,
            beta,
            z,
            theta,
            theta_names: meta.theta_names,
            acceptance: meta.acceptance,
            warnings: meta.warnings,
            final_omega: DMatrix::zeros(meta.p, meta.p),
            init_diag: Vec::new(),
        });
    }
    traces.sort_by_key(|t| t.chain_id);
    Ok(traces)
}

/// Wall-clock accounting for a fit, excluding I/O.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub total_seconds: f64,
    pub n_iter: usize,
    pub n_chains: usize,
    /// Mean wall-clock seconds per iteration per chain.
    pub seconds_per_iteration: f64,
}

impl Timing {
    pub fn new(total_seconds: f64, n_iter: usize, n_chains: usize) -> Self {
        let work = (n_iter * n_chains).max(1) as f64;
        Timing {
            total_seconds,
            n_iter,
            n_chains,
            seconds_per_iteration: total_seconds / work,
        }
    }
}

/// Summary of one chain for the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainReport {
    pub chain_id: usize,
    pub seed: u64,
    pub n_recorded: usize,
    pub acceptance: AcceptanceReport,
    pub warnings: Warnings,
}

/// Everything needed to reproduce and audit a run: the resolved
/// configuration (and its hash), the input fingerprint, column typing and
/// categorical level mappings, per-chain seeds and acceptance rates, and
/// timing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool_version: String,
    pub command: String,
    /// Fully resolved configuration; rerunning with it reproduces the run.
    pub config: RunConfig,
    pub config_sha256: String,
    /// Digest of the input data file bytes.
    pub data_sha256: String,
    pub n: usize,
    pub p: usize,
    pub column_names: Vec<String>,
    pub column_types: Vec<NodeType>,
    /// Level labels per categorical column, in code order 0..K-1.
    pub categorical_levels: BTreeMap<String, Vec<String>>,
    pub chains: Vec<ChainReport>,
    /// Warning counters summed over chains.
    pub warnings: Warnings,
    pub timing: Option<Timing>,
}

impl Manifest {
    pub fn new(
        command: &str,
        config: &RunConfig,
        dataset: &MixedDataset,
        data_sha256: String,
        traces: &[ChainTrace],
        timing: Option<Timing>,
    ) -> Result<Self> {
        let config_sha256 = sha256_hex(config.to_toml()?.as_bytes());
        let mut categorical_levels = BTreeMap::new();
        for s in 0..dataset.p() {
            if let Some(labels) = dataset.cat_labels(s) {
                categorical_levels.insert(dataset.names()[s].clone(), labels.to_vec());
            }
        }
        let mut warnings = Warnings::default();
        let chains = traces
            .iter()
            .map(|t| {
                warnings.merge(&t.warnings);
                ChainReport {
                    chain_id: t.chain_id,
                    seed: t.seed,
                    n_recorded: t.n_recorded(),
                    acceptance: t.acceptance.clone(),
                    warnings: t.warnings,
                }
            })
            .collect();
        Ok(Manifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config: config.clone(),
            config_sha256,
            data_sha256,
            n: dataset.n(),
            p: dataset.p(),
            column_names: dataset.names().to_vec(),
            column_types: dataset.types().to_vec(),
            categorical_levels,
            chains,
            warnings,
            timing,
        })
    }

    /// Writes `manifest.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        write_atomic(&dir.join("manifest.json"), &to_json(self, "manifest")?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::io(format!("cannot read manifest {}", path.display()), e))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::input(format!("{}: not a manifest: {e}", path.display())))
    }
}
