//! Command-line front end: generate benchmark data, fit the graphical model,
//! select edges at an FDR target, check convergence, and compare the two
//! sampler backends.
//!
//! Exit codes: 0 success; 2 input, configuration, or filesystem errors;
//! 3 numeric failures inside the sampler; 4 convergence threshold exceeded.
//! Every failure prints one machine-parsable line `error[kind]: detail` to
//! stderr.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use bmgm::config::RunConfig;
use bmgm::data::{declared_types, parse_type_tokens, read_dataset, type_token, write_dataset};
use bmgm::error::{Error, Result};
use bmgm::inference::{fdr_select, mpsrf, psrf, ConvergenceStat, PosteriorSummary};
use bmgm::output::{
    read_summary, read_traces, sha256_hex, write_atomic, write_selection_files,
    write_summary_files, write_traces, write_truth_csv, Manifest, Timing,
};
use bmgm::sampler::{
    run_chains, time_iterations, Backend, ChainTrace, ProgressRecord, ProgressSink,
};
use bmgm::simulate::{
    fixed_graph_scenario, generate_replicates, null_scenario, random_scenario, ScenarioSpec,
};
use bmgm::types::pairs;

#[derive(Parser)]
#[command(
    name = "bmgm",
    version,
    about = "Conditional-independence graphs for mixed continuous/count/categorical data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ScenarioArg {
    /// Random graph over half continuous, half count columns.
    Random,
    /// The 14-node mixed-type benchmark graph shipped with the library.
    Fixed,
    /// Ten mixed-type columns with no edges.
    Null,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BackendArg {
    /// Truncated-support normalizing constants.
    Truncated,
    /// Auxiliary-draw exchange algorithm (no normalizers).
    Exchange,
}

impl From<BackendArg> for Backend {
    fn from(arg: BackendArg) -> Backend {
        match arg {
            BackendArg::Truncated => Backend::Truncated,
            BackendArg::Exchange => Backend::Exchange,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate benchmark replicate datasets with known graphs.
    Simulate {
        /// Benchmark layout to generate.
        #[arg(long, value_enum)]
        scenario: ScenarioArg,
        /// Column count (random scenario only; fixed and null have set layouts).
        #[arg(long)]
        p: Option<usize>,
        /// Rows per replicate.
        #[arg(long)]
        n: Option<usize>,
        /// Fraction of rows censored in each missing-data target column.
        #[arg(long = "rho-m", default_value_t = 0.0)]
        rho_m: f64,
        /// Number of replicates.
        #[arg(long, default_value_t = 1)]
        reps: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Sample the posterior and write traces, summary, and manifest.
    Fit {
        /// Input CSV (overrides the config file).
        #[arg(long)]
        data: Option<PathBuf>,
        /// Comma-separated column types: continuous|count|zip|categorical.
        #[arg(long)]
        types: Option<String>,
        /// TOML configuration file; defaults cover everything else.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum)]
        backend: Option<BackendArg>,
        /// Number of chains (overrides the config).
        #[arg(long)]
        chains: Option<usize>,
        /// Master seed (overrides the config).
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (overrides the config; default bmgm_fit).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Apply FDR edge selection to a fit summary.
    Select {
        /// summary.json produced by fit.
        #[arg(long)]
        summary: PathBuf,
        /// Target false discovery rate.
        #[arg(long, default_value_t = 0.05)]
        fdr: f64,
        /// Output directory (defaults to the summary's directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Convergence diagnostics from stored traces.
    Diagnose {
        /// Fit output directory or its traces/ subdirectory.
        #[arg(long)]
        traces: PathBuf,
        /// Warning threshold on the multivariate scale-reduction factor.
        #[arg(long, default_value_t = 1.2)]
        threshold: f64,
    },
    /// Per-iteration wall-clock comparison of the two backends.
    Bench {
        /// Input CSV.
        #[arg(long)]
        data: PathBuf,
        /// Comma-separated column types: continuous|count|zip|categorical.
        #[arg(long)]
        types: String,
        /// Timed iterations per backend (after warm-up).
        #[arg(long, default_value_t = 100)]
        iters: usize,
        /// Untimed warm-up iterations per backend.
        #[arg(long, default_value_t = 50)]
        warmup: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("error[{}]: {err}", err.kind());
        let code = match err.kind() {
            "numeric" => 3,
            "convergence" => 4,
            _ => 2,
        };
        std::process::exit(code);
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate {
            scenario,
            p,
            n,
            rho_m,
            reps,
            seed,
            out,
        } => run_simulate(scenario, p, n, rho_m, reps, seed, &out),
        Command::Fit {
            data,
            types,
            config,
            backend,
            chains,
            seed,
            out,
        } => run_fit(data, types, config, backend, chains, seed, out),
        Command::Select { summary, fdr, out } => run_select(&summary, fdr, out),
        Command::Diagnose { traces, threshold } => run_diagnose(&traces, threshold),
        Command::Bench {
            data,
            types,
            iters,
            warmup,
            seed,
        } => run_bench(&data, &types, iters, warmup, seed),
    }
}

/// Builds the scenario spec, applying flag overrides where the layout allows.
fn build_scenario(
    scenario: ScenarioArg,
    p: Option<usize>,
    n: Option<usize>,
    rho_m: f64,
    reps: usize,
    seed: u64,
) -> Result<ScenarioSpec> {
    match scenario {
        ScenarioArg::Random => {
            random_scenario(p.unwrap_or(12), n.unwrap_or(200), rho_m, reps, seed)
        }
        ScenarioArg::Fixed => {
            let mut spec = fixed_graph_scenario(seed);
            if let Some(p) = p {
                if p != spec.p {
                    return Err(Error::config(format!(
                        "the fixed scenario has a set {}-column layout; --p {p} is not available",
                        spec.p
                    )));
                }
            }
            if let Some(n) = n {
                spec.n = n;
            }
            spec.rho_m = rho_m;
            spec.replicates = reps;
            spec.validate()?;
            Ok(spec)
        }
        ScenarioArg::Null => {
            let mut spec = null_scenario();
            if let Some(p) = p {
                if p != spec.p {
                    return Err(Error::config(format!(
                        "the null scenario has a set {}-column layout; --p {p} is not available",
                        spec.p
                    )));
                }
            }
            if let Some(n) = n {
                spec.n = n;
            }
            spec.rho_m = rho_m;
            spec.replicates = reps;
            spec.seed = seed;
            spec.validate()?;
            Ok(spec)
        }
    }
}

fn run_simulate(
    scenario: ScenarioArg,
    p: Option<usize>,
    n: Option<usize>,
    rho_m: f64,
    reps: usize,
    seed: u64,
    out: &Path,
) -> Result<()> {
    if reps == 0 {
        return Err(Error::config("--reps must be positive"));
    }
    let spec = build_scenario(scenario, p, n, rho_m, reps, seed)?;
    let types_line = declared_types(&spec.types)
        .into_iter()
        .map(type_token)
        .collect::<Vec<_>>()
        .join(",");
    let replicates = generate_replicates(&spec)?;

    let mut entries = Vec::with_capacity(replicates.len());
    for rep in &replicates {
        let data_name = format!("rep_{}.csv", rep.index);
        let truth_name = format!("rep_{}_truth.csv", rep.index);
        write_dataset(&rep.dataset, out.join(&data_name))?;
        write_truth_csv(&out.join(&truth_name), rep.dataset.names(), &rep.model.weights)?;
        entries.push(serde_json::json!({
            "index": rep.index,
            "data": data_name,
            "truth": truth_name,
            "n_edges": rep.model.n_edges(),
            "censored_columns": rep.censored_columns,
        }));
    }
    let manifest = serde_json::json!({
        "scenario": spec,
        "types": types_line,
        "replicates": entries,
    });
    let mut text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::input(format!("cannot encode scenario manifest: {e}")))?;
    text.push('\n');
    write_atomic(&out.join("scenario.json"), text.as_bytes())?;

    println!(
        "wrote {} replicate(s) of scenario '{}' (p={}, n={}, rho_m={}) to {}",
        replicates.len(),
        spec.name,
        spec.p,
        spec.n,
        spec.rho_m,
        out.display()
    );
    println!("column types: {types_line}");
    Ok(())
}

/// Streams one status line to stderr per progress record.
struct StderrProgress;

impl ProgressSink for StderrProgress {
    fn record(&self, rec: &ProgressRecord) {
        eprintln!(
            "chain {}: {}/{} iterations, log-PL {:.2}, accept theta {:.2} column {:.2}",
            rec.chain,
            rec.iteration,
            rec.n_iter,
            rec.log_pseudo_likelihood,
            rec.mean_theta_accept,
            rec.mean_column_accept
        );
    }
}

#[allow(clippy::too_many_arguments)]
fn run_fit(
    data: Option<PathBuf>,
    types: Option<String>,
    config: Option<PathBuf>,
    backend: Option<BackendArg>,
    chains: Option<usize>,
    seed: Option<u64>,
    out: Option<PathBuf>,
) -> Result<()> {
    let mut cfg = match config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(data) = data {
        cfg.data = Some(data);
    }
    if let Some(types) = types {
        cfg.types = Some(types);
    }
    if let Some(backend) = backend {
        cfg.backend = backend.into();
    }
    if let Some(chains) = chains {
        cfg.sampler.n_chains = chains;
    }
    if let Some(seed) = seed {
        cfg.sampler.seed = seed;
    }
    if let Some(out) = out {
        cfg.output = Some(out);
    }

    let data_path = cfg
        .data
        .clone()
        .ok_or_else(|| Error::config("no input data: pass --data or set `data` in the config"))?;
    let types_line = cfg
        .types
        .clone()
        .ok_or_else(|| Error::config("no column types: pass --types or set `types` in the config"))?;
    let declared = parse_type_tokens(&types_line)?;
    let dataset = read_dataset(&data_path, &declared)?;
    let raw = std::fs::read(&data_path)
        .map_err(|e| Error::io(format!("cannot read {}", data_path.display()), e))?;

    // Freeze the dataset-dependent prior default so the manifest alone
    // reproduces the run.
    cfg.prior.pi_incl = Some(cfg.prior.resolve(dataset.p()).pi_incl);
    let out_dir = cfg.output.clone().unwrap_or_else(|| PathBuf::from("bmgm_fit"));
    cfg.output = Some(out_dir.clone());
    cfg.validate()?;

    let hyper = cfg.prior.resolve(dataset.p());
    let progress: Option<&dyn ProgressSink> = if cfg.sampler.progress_every > 0 {
        Some(&StderrProgress)
    } else {
        None
    };
    let started = Instant::now();
    let traces = run_chains(
        &dataset,
        &hyper,
        &cfg.sampler,
        cfg.backend,
        &cfg.exchange,
        progress,
    )?;
    let timing = Timing::new(
        started.elapsed().as_secs_f64(),
        cfg.sampler.n_iter,
        cfg.sampler.n_chains,
    );

    let summary = PosteriorSummary::from_traces(&traces, cfg.fdr_target)?;
    write_summary_files(&out_dir, &summary)?;
    write_traces(&out_dir, &traces)?;
    let manifest = Manifest::new(
        "fit",
        &cfg,
        &dataset,
        sha256_hex(&raw),
        &traces,
        Some(timing.clone()),
    )?;
    manifest.write(&out_dir)?;

    let backend_name = match cfg.backend {
        Backend::Truncated => "truncated",
        Backend::Exchange => "exchange",
    };
    println!(
        "fit complete: p={}, n={}, backend={backend_name}, chains={}, {} draws/chain",
        dataset.p(),
        dataset.n(),
        cfg.sampler.n_chains,
        traces[0].n_recorded()
    );
    println!(
        "mean acceptance: theta {:.2}, column {:.2}",
        mean(traces.iter().flat_map(|t| t.acceptance.theta.iter().copied())),
        mean(traces.iter().flat_map(|t| t.acceptance.column.iter().copied()))
    );
    println!("seconds per iteration: {:.5}", timing.seconds_per_iteration);
    println!(
        "selected edges at FDR {}: {} (cutoff {:.3}, expected FDR {:.3})",
        summary.fdr_target,
        summary.selected.iter().filter(|s| **s).count(),
        summary.cutoff,
        summary.expected_fdr
    );
    println!("artifacts: {}", out_dir.display());
    Ok(())
}

fn mean(vals: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut count) = (0.0, 0_usize);
    for v in vals {
        sum += v;
        count += 1;
    }
    sum / count.max(1) as f64
}

fn run_select(summary_path: &Path, fdr: f64, out: Option<PathBuf>) -> Result<()> {
    if !(fdr > 0.0 && fdr < 1.0) {
        return Err(Error::config(format!("--fdr must lie in (0,1), got {fdr}")));
    }
    let mut summary = read_summary(summary_path)?;
    let decision = fdr_select(&summary.ppi, fdr)?;
    summary.fdr_target = fdr;
    summary.cutoff = decision.cutoff;
    summary.expected_fdr = decision.expected_fdr;
    summary.selected = decision.selected.clone();

    let out_dir = match out {
        Some(dir) => dir,
        None => summary_path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from(".")),
    };
    write_selection_files(&out_dir, &summary)?;
    println!(
        "selected {} of {} possible edges at FDR {fdr} (PPI cutoff {:.3}, expected FDR {:.3})",
        decision.n_selected(),
        summary.ppi.len(),
        decision.cutoff,
        decision.expected_fdr
    );
    println!("artifacts: {}", out_dir.display());
    Ok(())
}

fn run_diagnose(traces_dir: &Path, threshold: f64) -> Result<()> {
    let traces = read_traces(traces_dir)?;
    if traces.len() < 2 {
        return Err(Error::input(
            "diagnostics need at least two chains; rerun the fit with --chains 2 or more",
        ));
    }

    println!(
        "PSRF per edge weight ({} chains, {} draws each):",
        traces.len(),
        traces[0].n_recorded()
    );
    let per_pair = pair_psrf(&traces)?;
    let label_width = per_pair.iter().map(|(l, _)| l.len()).max().unwrap_or(0);
    let mut worst: f64 = 1.0;
    for (label, stat) in &per_pair {
        let mark = if stat.degenerate { " (constant)" } else { "" };
        println!("  {label:<label_width$}  {:.3}{mark}", stat.value);
        if !stat.degenerate {
            worst = worst.max(stat.value);
        }
    }
    println!("worst edge PSRF: {worst:.3}");

    let beta_mats: Vec<_> = traces.iter().map(ChainTrace::beta_matrix).collect();
    let multi = mpsrf(&beta_mats)?;
    let mark = if multi.degenerate { " (near-singular pooled covariance)" } else { "" };
    println!("MPSRF over edge weights: {:.3}{mark}", multi.value);

    println!("post-burn-in acceptance rates:");
    for trace in &traces {
        let (theta_mean, theta_min) = summarize_rates(&trace.acceptance.theta);
        let (col_mean, col_min) = summarize_rates(&trace.acceptance.column);
        println!(
            "  chain {}: theta mean {theta_mean:.2} (min {theta_min:.2}), column mean {col_mean:.2} (min {col_min:.2})",
            trace.chain_id
        );
    }

    if multi.value > threshold {
        return Err(Error::convergence(format!(
            "MPSRF {:.3} exceeds the threshold {threshold}",
            multi.value
        )));
    }
    println!("MPSRF {:.3} is below the threshold {threshold}", multi.value);
    Ok(())
}

/// PSRF per canonical pair, labeled `name--name`.
fn pair_psrf(traces: &[ChainTrace]) -> Result<Vec<(String, ConvergenceStat)>> {
    let p = traces[0].p;
    let names = &traces[0].names;
    let mut out = Vec::new();
    for (idx, (s, t)) in pairs(p).enumerate() {
        let series: Vec<Vec<f64>> = traces
            .iter()
            .map(|tr| tr.beta.iter().map(|row| row[idx]).collect())
            .collect();
        let views: Vec<&[f64]> = series.iter().map(Vec::as_slice).collect();
        let stat = psrf(&views)?;
        out.push((format!("{}--{}", names[s], names[t]), stat));
    }
    Ok(out)
}

fn summarize_rates(rates: &[f64]) -> (f64, f64) {
    let mean = mean(rates.iter().copied());
    let min = rates.iter().copied().fold(f64::INFINITY, f64::min);
    (mean, if min.is_finite() { min } else { 0.0 })
}

fn median(mut vals: Vec<f64>) -> f64 {
    vals.sort_by(|a, b| a.total_cmp(b));
    let k = vals.len();
    if k == 0 {
        return f64::NAN;
    }
    if k % 2 == 1 {
        vals[k / 2]
    } else {
        0.5 * (vals[k / 2 - 1] + vals[k / 2])
    }
}

fn run_bench(data: &Path, types: &str, iters: usize, warmup: usize, seed: u64) -> Result<()> {
    if iters == 0 {
        return Err(Error::config("--iters must be positive"));
    }
    let declared = parse_type_tokens(types)?;
    let dataset = read_dataset(data, &declared)?;
    let mut cfg = RunConfig::default();
    cfg.sampler.seed = seed;
    let hyper = cfg.prior.resolve(dataset.p());

    let missing_pct =
        100.0 * dataset.n_missing() as f64 / (dataset.n() * dataset.p()).max(1) as f64;
    println!(
        "benchmark on {}: p={}, n={}, {missing_pct:.1}% missing, {iters} timed iterations after {warmup} warm-up",
        data.display(),
        dataset.p(),
        dataset.n()
    );

    let mut medians = Vec::new();
    for (backend, label) in [(Backend::Truncated, "truncated"), (Backend::Exchange, "exchange")] {
        let times = time_iterations(
            &dataset,
            &hyper,
            &cfg.sampler,
            backend,
            &cfg.exchange,
            warmup,
            iters,
        )?;
        let med = median(times);
        println!("{label:<9}: median {med:.5} s/iteration");
        medians.push(med);
    }
    println!(
        "ratio (truncated/exchange): {:.3}",
        medians[0] / medians[1]
    );
    Ok(())
}
