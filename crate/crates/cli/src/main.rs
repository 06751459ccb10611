//! Command-line interface for RMST-difference estimation.
//!
//! Subcommands: `estimate` (one estimator on a CSV dataset, optional
//! bootstrap), `simulate` (write a synthetic dataset), `benchmark` (full
//! replication sweep from a JSON config) and `truth` (Monte Carlo ground
//! truth of a generator preset).
//!
//! Exit codes: 0 on success, 2 on input/validation errors, 3 on numerical
//! or fitting failures. All outputs are deterministic given the seed;
//! wall-clock information is only ever written to stderr.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use rmst_core::bootstrap::{bootstrap_ci, BootstrapError};
use rmst_core::data;
use rmst_core::estimators::{estimate, EstimateDiagnostics, EstimatorSpec, Method, Normalization};
use rmst_core::nuisance::{fit_nuisances, FeatureMap, Learner, NuisanceConfig};
use rmst_core::sim::{
    run_benchmark, true_rmst, BenchmarkConfig, DgpConfig, ScenarioConfig,
};

#[derive(Parser)]
#[command(name = "rmst", version, about = "Restricted mean survival time difference estimation")]
struct Cli {
    /// Size of the thread pool (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the RMST difference on a dataset.
    Estimate(EstimateArgs),
    /// Generate a synthetic dataset from a built-in scenario.
    Simulate(SimulateArgs),
    /// Run a replication benchmark from a JSON config.
    Benchmark(BenchmarkArgs),
    /// Monte Carlo ground truth of a scenario preset.
    Truth(TruthArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Naive,
    Km,
    IpcwKm,
    IpcwMean,
    Bj,
    GformulaT,
    GformulaS,
    IptwKm,
    IptwIpcwKm,
    IptwIpcwMean,
    IptwBj,
    AiptwAipcw,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::Naive => Method::Naive,
            MethodArg::Km => Method::Km,
            MethodArg::IpcwKm => Method::IpcwKm,
            MethodArg::IpcwMean => Method::IpcwMean,
            MethodArg::Bj => Method::Bj,
            MethodArg::GformulaT => Method::GformulaT,
            MethodArg::GformulaS => Method::GformulaS,
            MethodArg::IptwKm => Method::IptwKm,
            MethodArg::IptwIpcwKm => Method::IptwIpcwKm,
            MethodArg::IptwIpcwMean => Method::IptwIpcwMean,
            MethodArg::IptwBj => Method::IptwBj,
            MethodArg::AiptwAipcw => Method::AiptwAipcw,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FeaturesArg {
    Raw,
    SquaresOnly,
    SquaresAndCross,
}

impl From<FeaturesArg> for FeatureMap {
    fn from(f: FeaturesArg) -> FeatureMap {
        match f {
            FeaturesArg::Raw => FeatureMap::Raw,
            FeaturesArg::SquaresOnly => FeatureMap::SquaresOnly,
            FeaturesArg::SquaresAndCross => FeatureMap::SquaresAndCross,
        }
    }
}

#[derive(Args)]
struct EstimateArgs {
    /// Input dataset (CSV: id,x1,...,xp,a,time,status).
    data: PathBuf,
    #[arg(long, value_enum)]
    method: MethodArg,
    /// Restriction horizon τ.
    #[arg(long)]
    tau: f64,
    /// Divide weighted sums by the weight totals instead of sample counts.
    #[arg(long)]
    hajek: bool,
    /// Covariate expansion used by all fitted nuisance models.
    #[arg(long, value_enum, default_value = "raw")]
    features: FeaturesArg,
    /// Pool the outcome model with treatment as a covariate.
    #[arg(long)]
    pooled_outcome: bool,
    /// Pool the censoring model with treatment as a covariate.
    #[arg(long)]
    pooled_censoring: bool,
    /// Lower clip for propensity predictions (upper is symmetric).
    #[arg(long, default_value_t = 0.01)]
    propensity_clip: f64,
    /// Lower clip for censoring survival predictions.
    #[arg(long, default_value_t = 0.01)]
    censoring_clip: f64,
    /// Number of bootstrap replicates for SE and CI.
    #[arg(long)]
    bootstrap: Option<usize>,
    /// Bootstrap confidence level.
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path for the JSON result (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario preset: rct_indep, rct_cond, obs_indep, obs_cond, misspec.
    #[arg(long)]
    preset: String,
    #[arg(long)]
    n: usize,
    /// Master seed; with --rep, reproduces the benchmark dataset of the
    /// scenario named like the preset.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Replicate index within a benchmark run.
    #[arg(long)]
    rep: Option<usize>,
    /// Scenario name used in seed derivation (defaults to the preset name).
    #[arg(long)]
    scenario_name: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchmarkArgs {
    /// Benchmark config (JSON).
    config: PathBuf,
    /// Directory for replicates.csv, summary.csv and manifest.json.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct TruthArgs {
    #[arg(long)]
    preset: String,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long, default_value_t = 1_000_000)]
    draws: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Provenance header embedded in every result document. Wall-clock data is
/// deliberately excluded so reruns with identical inputs are byte-identical.
#[derive(Serialize)]
struct Manifest {
    command: String,
    version: &'static str,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    input_digest: Option<String>,
    config: serde_json::Value,
}

fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

fn write_output(out: &Option<PathBuf>, payload: &str) -> std::io::Result<()> {
    match out {
        Some(p) => std::fs::write(p, payload),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(payload.as_bytes())
        }
    }
}

enum CliError {
    /// User/validation error → exit 2.
    Input(String),
    /// Numerical/fitting failure → exit 3.
    Numeric(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::Numeric(m) => m,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let started = std::time::Instant::now();
    let result = match cli.command {
        Command::Estimate(a) => cmd_estimate(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Benchmark(a) => cmd_benchmark(a),
        Command::Truth(a) => cmd_truth(a),
    };
    match result {
        Ok(()) => {
            eprintln!("done in {:.2?}", started.elapsed());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

#[derive(Serialize)]
struct EstimateResult {
    method: Method,
    normalization: Normalization,
    tau: f64,
    theta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    se: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ci_lower: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ci_upper: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bootstrap_replicates: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bootstrap_failures: Option<usize>,
    n: usize,
    diagnostics: EstimateDiagnostics,
    manifest: Manifest,
}

fn cmd_estimate(a: EstimateArgs) -> Result<(), CliError> {
    let raw = std::fs::read(&a.data)
        .map_err(|e| CliError::Input(format!("{}: {e}", a.data.display())))?;
    let dataset = data::read_csv(raw.as_slice()).map_err(|e| CliError::Input(e.to_string()))?;
    let rd = dataset.restrict(a.tau).map_err(|e| CliError::Input(e.to_string()))?;

    let method: Method = a.method.into();
    let spec = EstimatorSpec {
        method,
        normalization: if a.hajek { Normalization::Hajek } else { Normalization::Standard },
    };
    let mut nuisance = NuisanceConfig {
        outcome_learner: if a.pooled_outcome { Learner::SinglePooled } else { Learner::TwoSeparate },
        censoring_learner: if a.pooled_censoring {
            Learner::SinglePooled
        } else {
            Learner::TwoSeparate
        },
        outcome_features: a.features.into(),
        censoring_features: a.features.into(),
        propensity_features: a.features.into(),
        propensity_clip: a.propensity_clip,
        censoring_clip: a.censoring_clip,
    };
    if let Some(l) = method.forced_learner() {
        nuisance.outcome_learner = l;
    }

    let ns = fit_nuisances(&rd, &nuisance, method.needs())
        .map_err(|e| CliError::Numeric(e.to_string()))?;
    let est = estimate(&rd, &spec, &ns).map_err(|e| CliError::Numeric(e.to_string()))?;

    let boot = match a.bootstrap {
        Some(b) => Some(
            bootstrap_ci(&rd, &spec, &nuisance, b, a.level, a.seed).map_err(|e| match e {
                BootstrapError::TooFewReplicates(_) | BootstrapError::BadLevel(_) => {
                    CliError::Input(e.to_string())
                }
                _ => CliError::Numeric(e.to_string()),
            })?,
        ),
        None => None,
    };

    let config = serde_json::json!({
        "method": method,
        "hajek": a.hajek,
        "tau": a.tau,
        "nuisance": nuisance,
        "bootstrap": a.bootstrap,
        "level": a.level,
    });
    let result = EstimateResult {
        method,
        normalization: spec.normalization,
        tau: a.tau,
        theta: est.theta,
        se: boot.as_ref().map(|b| b.se),
        ci_lower: boot.as_ref().map(|b| b.ci_lower),
        ci_upper: boot.as_ref().map(|b| b.ci_upper),
        bootstrap_replicates: boot.as_ref().map(|b| b.replicates),
        bootstrap_failures: boot.as_ref().map(|b| b.n_failed),
        n: rd.n(),
        diagnostics: est.diagnostics,
        manifest: Manifest {
            command: "estimate".into(),
            version: env!("CARGO_PKG_VERSION"),
            seed: a.seed,
            input_digest: Some(sha256_hex(&raw)),
            config,
        },
    };
    let mut payload = serde_json::to_string_pretty(&result).expect("serializable");
    payload.push('\n');
    write_output(&a.out, &payload).map_err(|e| CliError::Input(e.to_string()))
}

fn cmd_simulate(a: SimulateArgs) -> Result<(), CliError> {
    let cfg = DgpConfig::preset_by_name(&a.preset)
        .ok_or_else(|| CliError::Input(format!("unknown preset {}", a.preset)))?;
    let name = a.scenario_name.clone().unwrap_or_else(|| a.preset.clone());
    let mut rng = match a.rep {
        // The exact stream a benchmark cell uses for this replicate.
        Some(rep) => rmst_core::rng::stream(
            a.seed,
            &format!("bench:{name}"),
            &[a.n as u64, rep as u64],
        ),
        None => rmst_core::rng::stream(a.seed, "dataset", &[]),
    };
    let synth = rmst_core::sim::generate(&cfg, a.n, &mut rng)
        .map_err(|e| CliError::Input(e.to_string()))?;
    let mut buf = Vec::new();
    data::write_csv(&synth.data, &mut buf).map_err(|e| CliError::Input(e.to_string()))?;
    write_output(&a.out, std::str::from_utf8(&buf).expect("utf8"))
        .map_err(|e| CliError::Input(e.to_string()))
}

fn cmd_benchmark(a: BenchmarkArgs) -> Result<(), CliError> {
    let raw = std::fs::read(&a.config)
        .map_err(|e| CliError::Input(format!("{}: {e}", a.config.display())))?;
    let cfg: BenchmarkConfig =
        serde_json::from_slice(&raw).map_err(|e| CliError::Input(format!("config: {e}")))?;
    validate_benchmark_config(&cfg)?;
    eprintln!(
        "running {} scenario(s), master seed {}",
        cfg.scenarios.len(),
        cfg.master_seed
    );
    let res = run_benchmark(&cfg).map_err(|e| match e {
        rmst_core::sim::BenchmarkError::EmptyScenarios
        | rmst_core::sim::BenchmarkError::BadScenario(..)
        | rmst_core::sim::BenchmarkError::Sim(_) => CliError::Input(e.to_string()),
    })?;
    std::fs::create_dir_all(&a.out_dir).map_err(|e| CliError::Input(e.to_string()))?;
    let write = |name: &str, bytes: &[u8]| -> Result<(), CliError> {
        std::fs::write(a.out_dir.join(name), bytes).map_err(|e| CliError::Input(e.to_string()))
    };
    let mut replicates = Vec::new();
    res.write_replicates_csv(&mut replicates).expect("vec write");
    write("replicates.csv", &replicates)?;
    let mut summary = Vec::new();
    res.write_summary_csv(&mut summary).expect("vec write");
    write("summary.csv", &summary)?;
    let manifest = Manifest {
        command: "benchmark".into(),
        version: env!("CARGO_PKG_VERSION"),
        seed: cfg.master_seed,
        input_digest: Some(sha256_hex(&raw)),
        config: serde_json::to_value(&cfg).expect("serializable"),
    };
    let mut mjson = serde_json::to_string_pretty(&manifest).expect("serializable");
    mjson.push('\n');
    write("manifest.json", mjson.as_bytes())?;
    for note in &res.failure_notes {
        eprintln!("failed replicate: {note}");
    }
    eprintln!(
        "{} replicate rows, {} summary rows, {} failures",
        res.rows.len(),
        res.summaries.len(),
        res.failure_notes.len()
    );
    Ok(())
}

fn validate_benchmark_config(cfg: &BenchmarkConfig) -> Result<(), CliError> {
    if cfg.scenarios.is_empty() {
        return Err(CliError::Input("benchmark config has no scenarios".into()));
    }
    for sc in &cfg.scenarios {
        let _resolved: Option<&ScenarioConfig> = Some(sc);
        if sc.estimators.is_empty() || sc.n.is_empty() || sc.reps == 0 {
            return Err(CliError::Input(format!(
                "scenario {}: needs estimators, sample sizes and reps ≥ 1",
                sc.name
            )));
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct TruthResult {
    preset: String,
    tau: f64,
    draws: u64,
    theta: f64,
    mc_se: f64,
    manifest: Manifest,
}

fn cmd_truth(a: TruthArgs) -> Result<(), CliError> {
    let cfg = DgpConfig::preset_by_name(&a.preset)
        .ok_or_else(|| CliError::Input(format!("unknown preset {}", a.preset)))?;
    let tau = a.tau.unwrap_or(cfg.tau);
    let t = true_rmst(&cfg, tau, a.draws, a.seed).map_err(|e| CliError::Input(e.to_string()))?;
    let result = TruthResult {
        preset: a.preset.clone(),
        tau,
        draws: a.draws,
        theta: t.theta,
        mc_se: t.mc_se,
        manifest: Manifest {
            command: "truth".into(),
            version: env!("CARGO_PKG_VERSION"),
            seed: a.seed,
            input_digest: None,
            config: serde_json::json!({"preset": a.preset, "tau": tau, "draws": a.draws}),
        },
    };
    let mut payload = serde_json::to_string_pretty(&result).expect("serializable");
    payload.push('\n');
    write_output(&a.out, &payload).map_err(|e| CliError::Input(e.to_string()))
}
