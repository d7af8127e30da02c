//! Thin CLI over the softtype library: infer annotations for one file,
//! train the naming model, evaluate a mode over a corpus directory, or
//! generate the synthetic fixtures.
//!
//! Exit codes: 0 success, 1 usage/configuration error, 2 pipeline error.

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use softtype::logic::TypeUniverse;
use softtype::natural::{
    load_checkpoint, save_checkpoint, synthetic_naming_corpus, LabelledCorpus, TrainConfig,
};
use softtype::optim::{LambdaMode, OptimiserConfig};
use softtype::pipeline::{
    batch_run, default_universe, run_pipeline, write_corpus_dir, BatchConfig, Mode, PipelineConfig,
    PipelineError,
};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "softtype",
    version,
    about = "Type inference by optimising relaxed logical constraints against learned naming conventions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Infer annotations for a single program (or constraint-DSL input)
    Infer(InferArgs),
    /// Train the character-level naming model on name<TAB>type pairs
    Train(TrainArgs),
    /// Run a mode over a directory of gold .tl files and score it
    Eval(EvalArgs),
    /// Generate the synthetic fixture corpus (names.tsv + programs/)
    GenCorpus(GenCorpusArgs),
}

#[derive(Args)]
struct OptimFlags {
    /// Seed for every randomised component
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Initial multiplier weight on the constraint term
    #[arg(long)]
    lambda: Option<f64>,
    /// dual-ascent (default; multiplier grows with the residual) or
    /// fixed-penalty
    #[arg(long)]
    lambda_mode: Option<String>,
    /// Multiplier growth rate in dual-ascent mode
    #[arg(long)]
    dual_ascent_step: Option<f64>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    max_iterations: Option<usize>,
    /// Residual threshold for convergence
    #[arg(long)]
    convergence_threshold: Option<f64>,
    /// Penalise the probability-space residual instead of the (default)
    /// log-space constraint value
    #[arg(long)]
    prob_space: bool,
    /// Extra diversified optimisation attempts within the iteration budget
    #[arg(long)]
    restarts: Option<usize>,
}

impl OptimFlags {
    fn build(&self) -> Result<OptimiserConfig, CliError> {
        let mut cfg = OptimiserConfig {
            rng_seed: self.seed,
            log_space: !self.prob_space,
            ..OptimiserConfig::default()
        };
        if let Some(restarts) = self.restarts {
            cfg.restarts = restarts;
        }
        if let Some(lambda) = self.lambda {
            cfg.initial_lambda = lambda;
        }
        match self.lambda_mode.as_deref() {
            None => {}
            Some("dual-ascent") => cfg.lambda_mode = LambdaMode::DualAscent,
            Some("fixed-penalty") => cfg.lambda_mode = LambdaMode::FixedPenalty,
            Some(other) => {
                return Err(CliError::Usage(format!(
                    "unknown lambda mode `{other}` (expected dual-ascent or fixed-penalty)"
                )))
            }
        }
        if let Some(step) = self.dual_ascent_step {
            cfg.dual_ascent_step = step;
        }
        if let Some(lr) = self.learning_rate {
            cfg.learning_rate = lr;
        }
        if let Some(n) = self.max_iterations {
            cfg.max_iterations = n;
        }
        if let Some(t) = self.convergence_threshold {
            cfg.convergence_threshold = t;
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct InferArgs {
    /// logical | natural | combined
    #[arg(long)]
    mode: String,
    /// Toy-language source file (.tl)
    #[arg(long)]
    program: Option<PathBuf>,
    /// Constraint-DSL file (requires --sidecar)
    #[arg(long)]
    constraints: Option<PathBuf>,
    /// JSON sidecar with identifier order, slot kinds and universe
    #[arg(long)]
    sidecar: Option<PathBuf>,
    /// Natural matrix JSON produced by any model
    #[arg(long)]
    matrix: Option<PathBuf>,
    /// Naming-model checkpoint
    #[arg(long)]
    model: Option<PathBuf>,
    /// Fill uniform rows for identifiers missing from --matrix
    #[arg(long)]
    allow_missing: bool,
    /// Comma-separated type universe
    #[arg(long)]
    types: Option<String>,
    /// Write the annotated program here
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the machine-readable report here
    #[arg(long)]
    report: Option<PathBuf>,
    /// Also write the generated constraints as DSL text
    #[arg(long)]
    emit_constraints: Option<PathBuf>,
    /// Also write the bundle sidecar JSON
    #[arg(long)]
    emit_sidecar: Option<PathBuf>,
    /// Include the per-iteration solve trace in the report
    #[arg(long)]
    trace: bool,
    #[command(flatten)]
    optim: OptimFlags,
}

#[derive(Args)]
struct TrainArgs {
    /// Labelled corpus, one name<TAB>type per line
    #[arg(long)]
    corpus: PathBuf,
    /// Checkpoint output path
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 25)]
    epochs: usize,
    #[arg(long, default_value_t = 32)]
    embed_dim: usize,
    #[arg(long, default_value_t = 32)]
    hidden_dim: usize,
    #[arg(long, default_value_t = 32)]
    batch_size: usize,
    #[arg(long, default_value_t = 1e-3)]
    learning_rate: f64,
    #[arg(long, default_value_t = 0.2)]
    val_fraction: f64,
    /// Comma-separated type universe the model predicts over
    #[arg(long)]
    types: Option<String>,
}

#[derive(Args)]
struct EvalArgs {
    /// Directory of gold .tl files
    #[arg(long)]
    dir: PathBuf,
    /// logical | natural | combined
    #[arg(long)]
    mode: String,
    /// Naming-model checkpoint (natural and combined modes)
    #[arg(long)]
    model: Option<PathBuf>,
    /// Comma-separated type universe
    #[arg(long)]
    types: Option<String>,
    /// Worker threads for independent files
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Write the aggregated report here
    #[arg(long)]
    report: Option<PathBuf>,
    #[command(flatten)]
    optim: OptimFlags,
}

#[derive(Args)]
struct GenCorpusArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 50)]
    programs: usize,
    #[arg(long, default_value_t = 1000)]
    names: usize,
}

enum CliError {
    Usage(String),
    Pipeline(String),
}

impl From<PipelineError> for CliError {
    fn from(err: PipelineError) -> Self {
        match err {
            PipelineError::Config(msg) => CliError::Usage(msg),
            other => CliError::Pipeline(other.to_string()),
        }
    }
}

fn parse_mode(text: &str) -> Result<Mode, CliError> {
    text.parse().map_err(CliError::Usage)
}

fn parse_universe(types: &Option<String>) -> Result<TypeUniverse, CliError> {
    match types {
        None => Ok(default_universe()),
        Some(list) => TypeUniverse::new(list.split(',').map(str::trim).map(str::to_string))
            .map_err(|e| CliError::Usage(e.to_string())),
    }
}

fn main() {
    std::process::exit(real_main());
}

fn real_main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return 0;
        }
        Err(e) => {
            eprint!("{e}");
            return 1;
        }
    };
    let result = match cli.command {
        Command::Infer(args) => infer(args),
        Command::Train(args) => train(args),
        Command::Eval(args) => eval(args),
        Command::GenCorpus(args) => gen_corpus(args),
    };
    match result {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            1
        }
        Err(CliError::Pipeline(msg)) => {
            eprintln!("error: {msg}");
            2
        }
    }
}

fn infer(args: InferArgs) -> Result<(), CliError> {
    let cfg = PipelineConfig {
        mode: parse_mode(&args.mode)?,
        program: args.program,
        constraints: args.constraints,
        sidecar: args.sidecar,
        matrix: args.matrix,
        model: args.model,
        universe: parse_universe(&args.types)?,
        optimiser: args.optim.build()?,
        allow_missing: args.allow_missing,
        out: args.out,
        report: args.report,
        emit_constraints: args.emit_constraints,
        emit_sidecar: args.emit_sidecar,
        trace: args.trace,
    };
    let outcome = run_pipeline(&cfg)?;
    let report = &outcome.report;
    println!("mode: {}  seed: {}", args.mode, report.seed);
    if let Some(dsl) = &report.constraint_dsl {
        println!("constraints: {dsl}");
    } else {
        println!("constraints: (none)");
    }
    for ((name, kind), prediction) in report
        .identifiers
        .iter()
        .zip(&report.slot_kinds)
        .zip(&report.predictions)
    {
        println!("  {:<4} {name}: {prediction}", kind.label());
    }
    if let (Some(value), Some(iterations), Some(converged)) =
        (report.constraint_value, report.iterations, report.converged)
    {
        println!(
            "constraint value {value:.6} after {iterations} iterations (converged: {converged})"
        );
    }
    Ok(())
}

fn train(args: TrainArgs) -> Result<(), CliError> {
    let universe = parse_universe(&args.types)?;
    let text = std::fs::read_to_string(&args.corpus)
        .map_err(|e| CliError::Usage(format!("{}: {e}", args.corpus.display())))?;
    let corpus = LabelledCorpus::from_tsv(&text, &universe)
        .map_err(|e| CliError::Pipeline(e.to_string()))?;
    let cfg = TrainConfig {
        embed_dim: args.embed_dim,
        hidden_dim: args.hidden_dim,
        epochs: args.epochs,
        batch_size: args.batch_size,
        learning_rate: args.learning_rate,
        val_fraction: args.val_fraction,
        seed: args.seed,
        ..TrainConfig::default()
    };
    let (model, stats) = softtype::natural::train_model(&corpus, &cfg)
        .map_err(|e| CliError::Pipeline(e.to_string()))?;
    for (epoch, (train_nll, val_nll)) in stats.train_nll.iter().zip(&stats.val_nll).enumerate() {
        println!(
            "epoch {:>3}  train nll {train_nll:.4}  val nll {val_nll:.4}",
            epoch + 1
        );
    }
    println!(
        "best epoch {}  validation accuracy {:.3} ({} train / {} val samples)",
        stats.best_epoch + 1,
        stats.val_accuracy,
        stats.train_samples,
        stats.val_samples
    );
    save_checkpoint(&args.out, &model).map_err(|e| CliError::Pipeline(e.to_string()))?;
    println!("checkpoint written to {}", args.out.display());
    Ok(())
}

fn eval(args: EvalArgs) -> Result<(), CliError> {
    let mode = parse_mode(&args.mode)?;
    let model = match (&args.model, mode) {
        (None, Mode::Logical) => None,
        (Some(path), _) => {
            Some(load_checkpoint(path).map_err(|e| CliError::Pipeline(e.to_string()))?)
        }
        (None, _) => {
            return Err(CliError::Usage(format!(
                "{} mode requires --model",
                args.mode
            )))
        }
    };
    let cfg = BatchConfig {
        mode,
        universe: parse_universe(&args.types)?,
        optimiser: args.optim.build()?,
        model,
        jobs: args.jobs,
    };
    let report = batch_run(&args.dir, &cfg)?;
    let eval = &report.evaluation;
    println!(
        "files {}  evaluated slots {}  oov {}  unannotated {}",
        eval.files, eval.evaluated_slots, eval.oov_excluded, eval.unannotated
    );
    for kind in &eval.per_kind {
        if kind.evaluated > 0 {
            println!(
                "  {:<4} {:>5} slots  accuracy {:.3}",
                kind.kind.label(),
                kind.evaluated,
                kind.accuracy
            );
        }
    }
    println!(
        "  ALL  {:>5} slots  accuracy {:.3}",
        eval.evaluated_slots, eval.accuracy
    );
    if !report.failures.is_empty() {
        println!("failures:");
        for failure in &report.failures {
            println!("  {}: {}", failure.file, failure.error);
        }
    }
    if let Some(path) = &args.report {
        let json =
            serde_json::to_string_pretty(&report).map_err(|e| CliError::Pipeline(e.to_string()))?;
        std::fs::write(path, json).map_err(|e| CliError::Pipeline(e.to_string()))?;
        println!("report written to {}", path.display());
    }
    Ok(())
}

fn gen_corpus(args: GenCorpusArgs) -> Result<(), CliError> {
    let universe = default_universe();
    let slots = write_corpus_dir(&args.out, args.programs, args.names, args.seed, &universe)?;
    // Quick sanity line so downstream scripts can grep the totals.
    let corpus = synthetic_naming_corpus(args.names, args.seed, &universe)
        .map_err(|e| CliError::Pipeline(e.to_string()))?;
    println!(
        "wrote {} names to names.tsv and {} programs ({} annotation slots) under programs/",
        corpus.len(),
        args.programs,
        slots
    );
    Ok(())
}
