use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use emms_cli::bench::{bench_task, benchmark_models, reference_pgd, run_benchmark};
use emms_cli::pipeline::{
    evaluate_scores, load_flabels, rank_models, read_matrix, run_ranking, threads_from_env,
    LabelInput, ModelInput,
};
use emms_cli::suite::write_suite;
use emms_cli::tables::{read_labels, read_score_table};
use emms_cli::{IoError, PipelineError};
use emms_core::{
    generate_model_suite, one_hot_stack, Algorithm, FeatureMatrix, SolverConfig, TaskParams,
};

#[derive(Parser)]
#[command(
    name = "emms",
    version,
    about = "Rank pre-trained models by transferability"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score one feature matrix against label embeddings.
    Score(ScoreArgs),
    /// Rank every model of a manifest.
    Rank(RankArgs),
    /// Rank metrics from a table of scores and a table of ground truth.
    Eval(EvalArgs),
    /// Write a synthetic model suite as a task directory.
    Synth(SynthArgs),
    /// Compare the PGD and fast solvers.
    Bench(BenchArgs),
}

#[derive(Args, Clone)]
struct SolverArgs {
    #[arg(long, default_value = "pgd")]
    algorithm: Algorithm,
    /// Outer iterations (default 10 for pgd, 3 for fast).
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    /// Ridge for the least-squares solves (default: scaled to the problem).
    #[arg(long)]
    ridge: Option<f64>,
    /// Append a constant feature column.
    #[arg(long)]
    intercept: bool,
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        let mut cfg = SolverConfig::for_algorithm(self.algorithm);
        if let Some(n) = self.max_iters {
            cfg = cfg.with_max_outer_iters(n);
        }
        if let Some(t) = self.tol {
            cfg = cfg.with_tol(t);
        }
        if let Some(r) = self.ridge {
            cfg = cfg.with_ridge(r);
        }
        cfg.intercept = self.intercept;
        cfg
    }
}

#[derive(Args)]
struct ScoreArgs {
    /// Feature matrix (.npy or headerless CSV).
    #[arg(long)]
    features: PathBuf,
    /// F-Label files, one per foundation model.
    #[arg(long, num_args = 1.., required_unless_present = "labels")]
    flabels: Vec<PathBuf>,
    /// Integer class ids, one per line; scores against one-hot labels.
    #[arg(long, requires = "classes", conflicts_with = "flabels")]
    labels: Option<PathBuf>,
    #[arg(long)]
    classes: Option<usize>,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RankArgs {
    manifest: PathBuf,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// `model,score` table of transferability scores.
    scores: PathBuf,
    /// `model,score` table.
    #[arg(long)]
    ground_truth: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 500)]
    n: usize,
    #[arg(long, default_value_t = 32)]
    d: usize,
    #[arg(long, default_value_t = 8)]
    l: usize,
    /// Noise levels: label noise first, then one per oracle.
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.2,0.5,1.0")]
    sigma: Vec<f64>,
    /// One model per quality level in [0, 1].
    #[arg(long, value_delimiter = ',', default_value = "0.2,0.4,0.6,0.8,1.0")]
    quality: Vec<f64>,
    #[arg(long)]
    normalize: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct BenchArgs {
    /// Task manifest; omit to use the built-in synthetic task.
    manifest: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// PGD reference outer-iteration cap (default 10000).
    #[arg(long)]
    max_iters: Option<usize>,
    /// PGD reference tolerance (default 1e-8).
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Input(String),
    Numerical(String),
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Input(e.to_string())
        }
    }
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        Failure::Input(e.to_string())
    }
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Input(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable output");
    s.push('\n');
    s
}

fn score(args: ScoreArgs) -> Result<(), Failure> {
    let x = FeatureMatrix::new(read_matrix(&args.features)?);
    let labels = match (&args.labels, args.classes) {
        (Some(path), Some(classes)) => {
            let ids = read_labels(path)?;
            let stack = one_hot_stack(&ids, classes).map_err(|source| PipelineError::Labels {
                files: path.display().to_string(),
                source,
            })?;
            LabelInput {
                stack,
                origin: path.display().to_string(),
            }
        }
        _ => load_flabels(&args.flabels)?,
    };
    let id = args
        .features
        .file_stem()
        .map_or_else(|| "model".to_string(), |s| s.to_string_lossy().into_owned());
    let models = [ModelInput::in_memory(id, x)];
    let report = rank_models("score", &models, &labels, None, &args.solver.config(), 1)?;
    emit(&report.to_json(), args.out.as_deref())
}

fn rank(args: RankArgs) -> Result<(), Failure> {
    let report = run_ranking(&args.manifest, &args.solver.config(), threads_from_env())?;
    emit(&report.to_json(), args.out.as_deref())
}

fn eval(args: EvalArgs) -> Result<(), Failure> {
    let scores = read_score_table(&args.scores)?;
    let gt = read_score_table(&args.ground_truth)?;
    let report = evaluate_scores(&scores, &gt)?;
    emit(&to_json(&report), args.out.as_deref())
}

fn synth(args: SynthArgs) -> Result<(), Failure> {
    let mut params = TaskParams::new(args.n, args.d, args.l, args.sigma);
    params.normalize = args.normalize;
    let suite = generate_model_suite(&args.quality, &params, args.seed)
        .map_err(|e| Failure::Input(e.to_string()))?;
    let name = format!("synthetic-seed{}", args.seed);
    let manifest = write_suite(&args.out, &suite, &name)?;
    println!("{}", manifest.display());
    Ok(())
}

fn bench(args: BenchArgs) -> Result<(), Failure> {
    let mut pgd = reference_pgd();
    let fast = SolverConfig::fast();
    if let Some(n) = args.max_iters {
        pgd = pgd.with_max_outer_iters(n);
    }
    if let Some(t) = args.tol {
        pgd = pgd.with_tol(t);
    }
    let report = match &args.manifest {
        Some(path) => run_benchmark(path, &pgd, &fast)?,
        None => {
            let task = bench_task(args.seed).map_err(|e| Failure::Input(e.to_string()))?;
            let models = [ModelInput::in_memory("synthetic", task.x)];
            let labels = LabelInput::in_memory(task.z);
            benchmark_models("synthetic-bench", &models, &labels, &pgd, &fast)?
        }
    };
    emit(&to_json(&report), args.out.as_deref())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    // Usage errors exit 1 like any other bad input; 2 is kept for numerics.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Score(a) => score(a),
        Command::Rank(a) => rank(a),
        Command::Eval(a) => eval(a),
        Command::Synth(a) => synth(a),
        Command::Bench(a) => bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(2)
        }
    }
}
