//! Command-line harness: reproducible experiment runs with CSV outputs, run
//! manifests, and companion gnuplot scripts.
//!
//! Exit codes: 0 success, 2 invalid usage/config, 3 runtime failure.
//! `BACC_THREADS` caps internal parallelism; results are byte-identical for
//! any thread count. Outputs are written atomically (temp file + rename), so
//! failed runs leave no partial files.

mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{ArgMatches, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use bacc_core::bacc::CodedShare;
use bacc_core::diagnostics::{
    error_bound, lebesgue_function, survivor_nodes, theoretical_lebesgue_bound, worst_case_pattern,
    GridSpec,
};
use bacc_core::gradcode::{self, idx, LabelCoding, Loss, SyntheticSpec, TrainConfig, TrainScheme};
use bacc_core::pointsets::worker_abscissa;
use bacc_core::simulator::{
    compare_nodesets, run_nonpoly_experiment, run_poly_experiment, ErrorStats, FunctionRegistry,
    FunctionSpec, NodeFamily, NonPolyConfig, PolyExperimentConfig,
};
use bacc_core::{decode, Array2, DecodeInput, Encoder, Scheme};

use config::ConfigFile;
use output::{
    compare_plot_script, fmt_f64, plot_path, sweep_plot_script, write_atomic, write_atomic_bytes,
    xy_plot_script, ManifestBuilder,
};

#[derive(Parser)]
#[command(
    name = "bacc",
    version,
    about = "Straggler-resistant approximate coded computing: experiments and tools"
)]
struct Cli {
    /// Plain key=value config file; flags override it, it overrides defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Emit the Lebesgue function of a worst-case survivor set as CSV.
    Lebesgue(LebesgueArgs),
    /// Print the closed-form decode error bound for (N, s) and a function.
    Bound(BoundArgs),
    /// Random-polynomial straggler sweep (case 1).
    PolyExp(PolyArgs),
    /// x*sin(x) curve and straggler sweep (case 2).
    NonpolyExp(NonPolyArgs),
    /// Paired Chebyshev vs equidistant abscissa comparison.
    NodesCompare(PolyArgs),
    /// Train the toy network under a straggler scheme.
    TrainToy(TrainArgs),
    /// Encode a dataset file into binary coded shares.
    Encode(EncodeArgs),
    /// Decode binary result shares back into outputs.
    Decode(DecodeArgs),
}

/// CLI-side validation failure (exit code 2).
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(UsageError(msg.into()))
}

fn classify(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<UsageError>().is_some() {
        return 2;
    }
    if let Some(e) = err.downcast_ref::<bacc_core::Error>() {
        use bacc_core::Error::*;
        return match e {
            InvalidParameter(_)
            | InvalidInterval { .. }
            | InvalidPartition(_)
            | OutOfRegime(_)
            | TooFewNodes { .. }
            | UnsupportedKind(_)
            | EmptyInput(_)
            | InfeasibleReplication(_)
            | IndexOutOfRange { .. } => 2,
            _ => 3,
        };
    }
    3
}

fn main() -> ExitCode {
    let matches = match Cli::command().try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(2);
        }
    };

    if let Ok(threads) = std::env::var("BACC_THREADS") {
        match threads.parse::<usize>() {
            Ok(t) if t >= 1 => {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(t)
                    .build_global();
            }
            _ => {
                eprintln!("error: BACC_THREADS must be a positive integer, got {threads:?}");
                return ExitCode::from(2);
            }
        }
    }

    let file = match &cli.config {
        Some(path) => match ConfigFile::load(path) {
            Ok(f) => f,
            Err(e) => {
                eprintln!("error: {e:#}");
                return ExitCode::from(2);
            }
        },
        None => ConfigFile::empty(),
    };
    let sub = matches
        .subcommand()
        .map(|(_, m)| m)
        .expect("subcommand is required");

    match run(cli.command, &file, sub) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(classify(&e))
        }
    }
}

fn run(command: Command, file: &ConfigFile, m: &ArgMatches) -> Result<()> {
    match command {
        Command::Lebesgue(a) => run_lebesgue(a, file, m),
        Command::Bound(a) => run_bound(a, file, m),
        Command::PolyExp(a) => run_poly(a, file, m),
        Command::NonpolyExp(a) => run_nonpoly(a, file, m),
        Command::NodesCompare(a) => run_compare(a, file, m),
        Command::TrainToy(a) => run_train(a, file, m),
        Command::Encode(a) => run_encode(a, file, m),
        Command::Decode(a) => run_decode(a, file, m),
    }
}

// ---------------------------------------------------------------------------
// lebesgue
// ---------------------------------------------------------------------------

#[derive(clap::Args, Serialize)]
struct LebesgueArgs {
    /// Worker index bound (workers are 0..=N).
    #[arg(long = "N")]
    n: usize,
    /// Number of consecutively removed workers.
    #[arg(long, default_value_t = 0)]
    s: usize,
    /// Position of the removed run; defaults to the middle.
    #[arg(long)]
    kbar: Option<usize>,
    /// Grid samples per inter-node interval (>= 10).
    #[arg(long, default_value_t = 64)]
    grid: usize,
    #[arg(long)]
    out: PathBuf,
}

fn run_lebesgue(mut a: LebesgueArgs, file: &ConfigFile, m: &ArgMatches) -> Result<()> {
    file.merge(m, "N", "n", &mut a.n)?;
    file.merge(m, "s", "s", &mut a.s)?;
    file.merge_opt(m, "kbar", "kbar", &mut a.kbar)?;
    file.merge(m, "grid", "grid", &mut a.grid)?;
    file.merge(m, "out", "out", &mut a.out)?;

    let kbar = a.kbar.unwrap_or_else(|| (a.n.saturating_sub(a.s + 1)) / 2);
    let mut config = serde_json::to_value(&a)?;
    config["kbar_resolved"] = serde_json::json!(kbar);
    if let Ok(bound) = theoretical_lebesgue_bound(a.n, a.s) {
        config["theoretical_bound"] = serde_json::json!(bound);
    }
    let mut manifest = ManifestBuilder::new("lebesgue", config, None);
    let pattern = worst_case_pattern(a.n, a.s, kbar)?;
    let nodes = survivor_nodes(&pattern)?;
    let grid = GridSpec::new(a.grid)?;

    let mut csv = String::from("x,lebesgue_value\n");
    for x in grid.points(&nodes) {
        let v = lebesgue_function(&Scheme::Berrut, &nodes, x)?;
        csv.push_str(&format!("{},{}\n", fmt_f64(x), fmt_f64(v)));
    }
    write_atomic(&a.out, &csv)?;
    let plt = plot_path(&a.out);
    write_atomic(&plt, &xy_plot_script(&a.out, 2, "lebesgue function", true))?;
    manifest.add_output(&a.out);
    manifest.add_output(&plt);
    manifest.write(&a.out)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// bound
// ---------------------------------------------------------------------------

#[derive(clap::Args, Serialize)]
struct BoundArgs {
    #[arg(long = "N")]
    n: usize,
    #[arg(long)]
    s: usize,
    /// Named registry function whose derivative norms feed the bound.
    #[arg(long)]
    g: Option<String>,
    /// Explicit max-norm of g' (overrides --g).
    #[arg(long = "norm-g1")]
    norm_g1: Option<f64>,
    /// Explicit max-norm of g'' (overrides --g).
    #[arg(long = "norm-g2")]
    norm_g2: Option<f64>,
}

fn run_bound(mut a: BoundArgs, file: &ConfigFile, m: &ArgMatches) -> Result<()> {
    file.merge(m, "N", "n", &mut a.n)?;
    file.merge(m, "s", "s", &mut a.s)?;
    file.merge_opt(m, "g", "g", &mut a.g)?;
    file.merge_opt(m, "norm-g1", "norm_g1", &mut a.norm_g1)?;
    file.merge_opt(m, "norm-g2", "norm_g2", &mut a.norm_g2)?;

    let (n1, n2) = match (a.norm_g1, a.norm_g2) {
        (Some(n1), Some(n2)) => (n1, n2),
        (None, None) => {
            let name =
                a.g.as_deref()
                    .ok_or_else(|| usage("pass --g <name> or both --norm-g1 and --norm-g2"))?;
            let registry = FunctionRegistry::standard();
            FunctionSpec::named(name).derivative_norms(-1.0, 1.0, &registry)?
        }
        _ => return Err(usage("--norm-g1 and --norm-g2 must be given together")),
    };
    let bound = error_bound(a.n, a.s, n1, n2)?;
    println!("{}", fmt_f64(bound));
    Ok(())
}

// ---------------------------------------------------------------------------
// poly-exp and nodes-compare
// ---------------------------------------------------------------------------

#[derive(clap::Args, Serialize, Clone)]
struct PolyArgs {
    #[arg(long = "N", default_value_t = 500)]
    n: usize,
    #[arg(long = "K", default_value_t = 20)]
    k: usize,
    /// Polynomial degree of the worker function.
    #[arg(long, default_value_t = 25)]
    deg: usize,
    #[arg(long = "s-max", default_value_t = 450)]
    s_max: usize,
    #[arg(long = "s-step", default_value_t = 50)]
    s_step: usize,
    /// Random functions per sweep point.
    #[arg(long = "trials-f", default_value_t = 20)]
    trials_f: usize,
    /// Straggler draws per function.
    #[arg(long = "trials-s", default_value_t = 100)]
    trials_s: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

impl PolyArgs {
    fn merge(&mut self, file: &ConfigFile, m: &ArgMatches) -> Result<()> {
        file.merge(m, "N", "n", &mut self.n)?;
        file.merge(m, "K", "k", &mut self.k)?;
        file.merge(m, "deg", "deg", &mut self.deg)?;
        file.merge(m, "s-max", "s_max", &mut self.s_max)?;
        file.merge(m, "s-step", "s_step", &mut self.s_step)?;
        file.merge(m, "trials-f", "trials_f", &mut self.trials_f)?;
        file.merge(m, "trials-s", "trials_s", &mut self.trials_s)?;
        file.merge(m, "seed", "seed", &mut self.seed)?;
        file.merge(m, "out", "out", &mut self.out)?;
        Ok(())
    }

    fn experiment_config(&self) -> Result<PolyExperimentConfig> {
        if self.s_step == 0 {
            return Err(usage("--s-step must be positive"));
        }
        Ok(PolyExperimentConfig {
            n: self.n,
            k: self.k,
            deg_f: self.deg,
            s_values: (0..=self.s_max).step_by(self.s_step).collect(),
            trials_functions: self.trials_f,
            trials_stragglers: self.trials_s,
            coefficient_range: (-10.0, 10.0),
            input_range: (-1.0, 1.0),
            node_family: NodeFamily::ChebyshevPair,
            master_seed: self.seed,
        })
    }
}

fn sweep_csv(stats: &[ErrorStats]) -> String {
    let mut csv = String::from("s,mean_rel_err,min_rel_err,max_rel_err,n_trials\n");
    for e in stats {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            e.s,
            fmt_f64(e.mean_rel_err),
            fmt_f64(e.min_rel_err),
            fmt_f64(e.max_rel_err),
            e.n_trials
        ));
    }
    csv
}

fn run_poly(mut a: PolyArgs, file: &ConfigFile, m: &ArgMatches) -> Result<()> {
    a.merge(file, m)?;
    let cfg = a.experiment_config()?;
    let mut manifest = ManifestBuilder::new("poly-exp", serde_json::to_value(&a)?, Some(a.seed));
    let stats = run_poly_experiment(&cfg)?;
    write_atomic(&a.out, &sweep_csv(&stats))?;
    let plt = plot_path(&a.out);
    write_atomic(&plt, &sweep_plot_script(&a.out))?;
    manifest.add_output(&a.out);
    manifest.add_output(&plt);
    manifest.write(&a.out)?;
    Ok(())
}

fn run_compare(mut a: PolyArgs, file: &ConfigFile, m: &ArgMatches) -> Result<()> {
    a.merge(file, m)?;
    let cfg = a.experiment_config()?;
    let mut manifest =
        ManifestBuilder::new("nodes-compare", serde_json::to_value(&a)?, Some(a.seed));
    let pairs = compare_nodesets(&cfg)?;
    let mut csv = String::from("s,mean_rel_err,min_rel_err,max_rel_err,n_trials,node_family\n");
    for p in &pairs {
        for (stats, family) in [(&p.chebyshev, "chebyshev"), (&p.equidistant, "equidistant")] {
            csv.push_str(&format!(
                "{},{},{},{},{},{}\n",
                stats.s,
                fmt_f64(stats.mean_rel_err),
                fmt_f64(stats.min_rel_err),
                fmt_f64(stats.max_rel_err),
                stats.n_trials,
                family
            ));
        }
    }
    write_atomic(&a.out, &csv)?;
    let plt = plot_path(&a.out);
    write_atomic(&plt, &compare_plot_script(&a.out))?;
    manifest.add_output(&a.out);
    manifest.add_output(&plt);
    manifest.write(&a.out)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// nonpoly-exp
// ---------------------------------------------------------------------------

#[derive(clap::Args, Serialize)]
struct NonPolyArgs {
    #[arg(long = "N", default_value_t = 250)]
    n: usize,
    #[arg(long = "K", default_value_t = 20)]
    k: usize,
    #[arg(long = "s-max", default_value_t = 225)]
    s_max: usize,
    #[arg(long = "s-step", default_value_t = 25)]
    s_step: usize,
    #[arg(long = "trials-s", default_value_t = 1000)]
    trials_s: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Sweep CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Curve CSV path; defaults to `<out stem>-curve.csv`.
    #[arg(long = "curve-out")]
    curve_out: Option<PathBuf>,
    #[arg(long = "curve-N", default_value_t = 60)]
    curve_n: usize,
    #[arg(long = "curve-K", default_value_t = 20)]
    curve_k: usize,
    #[arg(long = "curve-s", default_value_t = 20)]
    curve_s: usize,
}

fn run_nonpoly(mut a: NonPolyArgs, file: &ConfigFile, m: &ArgMatches) -> Result<()> {
    file.merge(m, "N", "n", &mut a.n)?;
    file.merge(m, "K", "k", &mut a.k)?;
    file.merge(m, "s-max", "s_max", &mut a.s_max)?;
    file.merge(m, "s-step", "s_step", &mut a.s_step)?;
    file.merge(m, "trials-s", "trials_s", &mut a.trials_s)?;
    file.merge(m, "seed", "seed", &mut a.seed)?;
    file.merge(m, "out", "out", &mut a.out)?;
    file.merge_opt(m, "curve-out", "curve_out", &mut a.curve_out)?;
    file.merge(m, "curve-N", "curve_n", &mut a.curve_n)?;
    file.merge(m, "curve-K", "curve_k", &mut a.curve_k)?;
    file.merge(m, "curve-s", "curve_s", &mut a.curve_s)?;

    if a.s_step == 0 {
        return Err(usage("--s-step must be positive"));
    }
    let cfg = NonPolyConfig {
        curve_n: a.curve_n,
        curve_k: a.curve_k,
        curve_s: a.curve_s,
        curve_inputs: None,
        sweep_n: a.n,
        sweep_k: a.k,
        sweep_s_values: (0..=a.s_max).step_by(a.s_step).collect(),
        sweep_trials: a.trials_s,
        master_seed: a.seed,
    };
    let mut manifest = ManifestBuilder::new("nonpoly-exp", serde_json::to_value(&a)?, Some(a.seed));
    let result = run_nonpoly_experiment(&cfg)?;

    write_atomic(&a.out, &sweep_csv(&result.stats))?;
    let sweep_plt = plot_path(&a.out);
    write_atomic(&sweep_plt, &sweep_plot_script(&a.out))?;

    let curve_path = a.curve_out.clone().unwrap_or_else(|| {
        let stem = a.out.file_stem().map(|s| s.to_string_lossy().into_owned());
        a.out.with_file_name(format!(
            "{}-curve.csv",
            stem.unwrap_or_else(|| "out".into())
        ))
    });
    let mut curve_csv = String::from("x,exact,approx,abs_err\n");
    for p in &result.curve {
        curve_csv.push_str(&format!(
            "{},{},{},{}\n",
            fmt_f64(p.x),
            fmt_f64(p.exact),
            fmt_f64(p.approx),
            fmt_f64(p.abs_err)
        ));
    }
    write_atomic(&curve_path, &curve_csv)?;
    let curve_plt = plot_path(&curve_path);
    write_atomic(
        &curve_plt,
        &xy_plot_script(&curve_path, 3, "f(x) approximation", false),
    )?;

    for p in [&a.out, &sweep_plt, &curve_path, &curve_plt] {
        manifest.add_output(p);
    }
    manifest.write(&a.out)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// train-toy
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
enum SchemeArg {
    Bacc,
    Replication,
    None,
    Full,
}

impl From<SchemeArg> for TrainScheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Bacc => TrainScheme::Bacc,
            SchemeArg::Replication => TrainScheme::Replication,
            SchemeArg::None => TrainScheme::NoRedundancy,
            SchemeArg::Full => TrainScheme::UncodedFull,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
enum LossArg {
    Mse,
    Sce,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
enum LabelsArg {
    Regression,
    Classification,
}

#[derive(clap::Args, Serialize)]
struct TrainArgs {
    #[arg(long, value_enum)]
    scheme: SchemeArg,
    #[arg(long = "N", default_value_t = 8)]
    n: usize,
    #[arg(long = "K", default_value_t = 8)]
    k: usize,
    #[arg(long, default_value_t = 2)]
    s: usize,
    #[arg(long, default_value_t = 50)]
    epochs: usize,
    #[arg(long, default_value_t = 0.1)]
    eta: f64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = LossArg::Mse)]
    loss: LossArg,
    #[arg(long, value_enum, default_value_t = LabelsArg::Regression)]
    labels: LabelsArg,
    #[arg(long = "n-samples", default_value_t = 256)]
    n_samples: usize,
    #[arg(long, default_value_t = 8)]
    features: usize,
    #[arg(long, default_value_t = 16)]
    hidden: usize,
    #[arg(long, default_value_t = 2)]
    outputs: usize,
    #[arg(long, default_value_t = 0.05)]
    noise: f64,
    /// Directory with `train-images-idx3-ubyte` / `train-labels-idx1-ubyte`;
    /// replaces the synthetic dataset.
    #[arg(long = "mnist-dir")]
    mnist_dir: Option<PathBuf>,
}

fn run_train(mut a: TrainArgs, file: &ConfigFile, m: &ArgMatches) -> Result<()> {
    file.merge(m, "N", "n", &mut a.n)?;
    file.merge(m, "K", "k", &mut a.k)?;
    file.merge(m, "s", "s", &mut a.s)?;
    file.merge(m, "epochs", "epochs", &mut a.epochs)?;
    file.merge(m, "eta", "eta", &mut a.eta)?;
    file.merge(m, "seed", "seed", &mut a.seed)?;
    file.merge(m, "out", "out", &mut a.out)?;
    file.merge(m, "n-samples", "n_samples", &mut a.n_samples)?;
    file.merge(m, "features", "features", &mut a.features)?;
    file.merge(m, "hidden", "hidden", &mut a.hidden)?;
    file.merge(m, "outputs", "outputs", &mut a.outputs)?;
    file.merge(m, "noise", "noise", &mut a.noise)?;
    file.merge_opt(m, "mnist-dir", "mnist_dir", &mut a.mnist_dir)?;

    let cfg = TrainConfig {
        scheme: a.scheme.into(),
        n: a.n,
        k: a.k,
        s: a.s,
        epochs: a.epochs,
        eta: a.eta,
        seed: a.seed,
        loss: match a.loss {
            LossArg::Mse => Loss::Mse,
            LossArg::Sce => Loss::SigmoidCrossEntropy,
        },
        label_coding: match a.labels {
            LabelsArg::Regression => LabelCoding::Regression,
            LabelsArg::Classification => LabelCoding::Classification,
        },
        data: SyntheticSpec {
            n_samples: a.n_samples,
            features: a.features,
            hidden: a.hidden,
            outputs: a.outputs,
            noise: a.noise,
        },
    };

    let mut manifest = ManifestBuilder::new("train-toy", serde_json::to_value(&a)?, Some(a.seed));
    let records = match &a.mnist_dir {
        None => gradcode::train(&cfg)?,
        Some(dir) => {
            let (x, y) = load_idx_dataset(dir, a.n_samples)?;
            gradcode::train_with_data(&cfg, &x, &y)?
        }
    };

    let scheme = TrainScheme::from(a.scheme);
    let mut csv = String::from("epoch,scheme,train_loss\n");
    for r in &records {
        csv.push_str(&format!(
            "{},{},{}\n",
            r.epoch,
            scheme.as_str(),
            fmt_f64(r.loss)
        ));
    }
    write_atomic(&a.out, &csv)?;
    let plt = plot_path(&a.out);
    write_atomic(&plt, &xy_plot_script(&a.out, 3, "training loss", true))?;
    manifest.add_output(&a.out);
    manifest.add_output(&plt);
    manifest.write(&a.out)?;
    Ok(())
}

/// Load an IDX image/label pair as a flat-feature dataset with one-hot
/// labels, truncated to `take` samples.
fn load_idx_dataset(dir: &Path, take: usize) -> Result<(Array2<f64>, Array2<f64>)> {
    let images = idx::read_images_file(&dir.join("train-images-idx3-ubyte"))?;
    let labels = idx::read_labels_file(&dir.join("train-labels-idx1-ubyte"))?;
    if images.count != labels.len() {
        bail!(
            "image count {} does not match label count {}",
            images.count,
            labels.len()
        );
    }
    if take > images.count {
        return Err(usage(format!(
            "--n-samples {take} exceeds dataset size {}",
            images.count
        )));
    }
    let d = images.rows * images.cols;
    let classes = 1 + labels.iter().take(take).copied().max().unwrap_or(0) as usize;
    let x = Array2::from_shape_fn((take, d), |(i, j)| images.pixels[i * d + j] as f64 / 255.0);
    let mut y = Array2::zeros((take, classes));
    for (i, &label) in labels.iter().take(take).enumerate() {
        y[(i, label as usize)] = 1.0;
    }
    Ok((x, y))
}

// ---------------------------------------------------------------------------
// encode / decode
// ---------------------------------------------------------------------------

#[derive(clap::Args, Serialize)]
struct EncodeArgs {
    /// CSV file: one matrix per line, row-major, rows*cols comma-separated
    /// values.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 1)]
    rows: usize,
    #[arg(long, default_value_t = 1)]
    cols: usize,
    #[arg(long = "N")]
    n: usize,
    #[arg(long = "out-dir")]
    out_dir: PathBuf,
}

fn run_encode(mut a: EncodeArgs, file: &ConfigFile, m: &ArgMatches) -> Result<()> {
    file.merge(m, "data", "data", &mut a.data)?;
    file.merge(m, "rows", "rows", &mut a.rows)?;
    file.merge(m, "cols", "cols", &mut a.cols)?;
    file.merge(m, "N", "n", &mut a.n)?;
    file.merge(m, "out-dir", "out_dir", &mut a.out_dir)?;

    if a.rows == 0 || a.cols == 0 {
        return Err(usage("--rows and --cols must be positive"));
    }
    let text = std::fs::read_to_string(&a.data)
        .with_context(|| format!("reading {}", a.data.display()))?;
    let mut data = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .split(',')
            .map(|tok| tok.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| usage(format!("data line {}: {e}", lineno + 1)))?;
        if vals.len() != a.rows * a.cols {
            return Err(usage(format!(
                "data line {}: expected {} values, got {}",
                lineno + 1,
                a.rows * a.cols,
                vals.len()
            )));
        }
        data.push(Array2::from_shape_vec((a.rows, a.cols), vals).expect("shape checked above"));
    }
    let mut manifest = ManifestBuilder::new("encode", serde_json::to_value(&a)?, None);
    let encoder = Encoder::new(data)?;
    let shares = encoder.encode_shares(a.n)?;
    std::fs::create_dir_all(&a.out_dir)?;
    for share in &shares {
        let mut bytes = Vec::new();
        share.write_to(&mut bytes)?;
        let path = a.out_dir.join(format!("share_{:04}.bin", share.worker));
        write_atomic_bytes(&path, &bytes)?;
        manifest.add_output(&path);
    }
    manifest.write(&a.out_dir.join("shares"))?;
    Ok(())
}

#[derive(clap::Args, Serialize)]
struct DecodeArgs {
    /// Directory of `*.bin` result shares (same binary layout as encoded
    /// shares, payload = worker result). Present files define the survivors.
    #[arg(long = "shares-dir")]
    shares_dir: PathBuf,
    #[arg(long = "K")]
    k: usize,
    #[arg(long = "N")]
    n: usize,
    #[arg(long)]
    out: PathBuf,
}

fn run_decode(mut a: DecodeArgs, file: &ConfigFile, m: &ArgMatches) -> Result<()> {
    file.merge(m, "shares-dir", "shares_dir", &mut a.shares_dir)?;
    file.merge(m, "K", "k", &mut a.k)?;
    file.merge(m, "N", "n", &mut a.n)?;
    file.merge(m, "out", "out", &mut a.out)?;

    let mut manifest = ManifestBuilder::new("decode", serde_json::to_value(&a)?, None);
    let mut paths: Vec<PathBuf> = std::fs::read_dir(&a.shares_dir)
        .with_context(|| format!("reading {}", a.shares_dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "bin"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        bail!("no .bin shares in {}", a.shares_dir.display());
    }
    let mut shares = Vec::with_capacity(paths.len());
    for path in &paths {
        let mut reader = std::io::BufReader::new(
            std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?,
        );
        let share = CodedShare::read_from(&mut reader)
            .with_context(|| format!("parsing {}", path.display()))?;
        let expected = worker_abscissa(a.n, share.worker);
        if (share.z - expected).abs() > 1e-9 {
            bail!(
                "{}: abscissa {} does not match worker {} of N={} (expected {})",
                path.display(),
                share.z,
                share.worker,
                a.n,
                expected
            );
        }
        shares.push(share);
    }
    let input = DecodeInput::from_shares(a.n, shares)?;
    let alphas = bacc_core::NodeSet::chebyshev_first(a.k)?;
    let outputs = decode(&input, &alphas)?;

    let (rows, cols) = outputs[0].dim();
    let mut header = String::from("index");
    for r in 0..rows {
        for c in 0..cols {
            header.push_str(&format!(",entry_{r}_{c}"));
        }
    }
    let mut csv = header;
    csv.push('\n');
    for (j, mat) in outputs.iter().enumerate() {
        csv.push_str(&j.to_string());
        for v in mat.iter() {
            csv.push(',');
            csv.push_str(&fmt_f64(*v));
        }
        csv.push('\n');
    }
    write_atomic(&a.out, &csv)?;
    manifest.add_output(&a.out);
    manifest.write(&a.out)?;
    Ok(())
}
