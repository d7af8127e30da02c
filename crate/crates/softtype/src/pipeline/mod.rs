//! End-to-end inference and evaluation.
//!
//! Three modes share one shape: extract a constraint bundle from a program,
//! gather per-identifier type distributions, optimise, discretise.
//!
//! - **logical**: maximise the relaxed constraint alone; slots the formula
//!   never mentions abstain to `any`.
//! - **natural**: per-row argmax of the learned matrix, no optimisation.
//! - **combined**: minimise distance to the learned matrix subject to the
//!   relaxed constraint via the multiplier objective.
//!
//! Evaluation is top-1 accuracy over gold-annotated slots, split by slot
//! kind, with out-of-universe (and `any`) gold types excluded as OOV.
//! Abstentions count against accuracy. Batch runs process whole directories,
//! aggregate order-independently and never abort on one bad file.

mod fixtures;
mod rewrite;

pub use fixtures::{generate_program_corpus, write_corpus_dir, CorpusFile};
pub use rewrite::{rewrite_annotations, strip_source};

use crate::frontend::{
    self, generate_constraints, parse_program, ConstraintBundle, FrontendError, SlotKind,
};
use crate::logic::{LogicError, TypeUniverse};
use crate::natural::{
    load_matrix, predict_matrix, LstmModel, NaturalConstraintMatrix, NaturalError,
};
use crate::optim::{
    discretise, solve, solve_logical_only, solve_unconstrained, OptimError, OptimiserConfig,
    SolveReport,
};
use crate::relax::{ProbabilityMatrix, RelaxError};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Frontend(#[from] FrontendError),
    #[error(transparent)]
    Logic(#[from] LogicError),
    #[error(transparent)]
    Natural(#[from] NaturalError),
    #[error(transparent)]
    Optim(#[from] OptimError),
    #[error(transparent)]
    Relax(#[from] RelaxError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Logical,
    Natural,
    Combined,
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "logical" => Ok(Mode::Logical),
            "natural" => Ok(Mode::Natural),
            "combined" => Ok(Mode::Combined),
            other => Err(format!(
                "unknown mode `{other}` (expected logical, natural or combined)"
            )),
        }
    }
}

pub fn default_universe() -> TypeUniverse {
    TypeUniverse::new(["number", "string", "boolean", "any"]).expect("static names are valid")
}

/// Mode-level inference over a prepared bundle and (optional) natural
/// matrix. Pure with respect to the filesystem.
#[derive(Debug, Clone)]
pub struct Inference {
    /// Predicted type index per slot; the `any` index marks an abstention.
    pub predictions: Vec<usize>,
    pub matrix: ProbabilityMatrix,
    pub solve: Option<SolveReport>,
}

pub fn infer_bundle(
    bundle: &ConstraintBundle,
    natural: Option<&NaturalConstraintMatrix>,
    mode: Mode,
    optimiser: &OptimiserConfig,
) -> Result<Inference, PipelineError> {
    let v = bundle.identifiers.len();
    let t = bundle.universe.len();
    match mode {
        Mode::Natural => {
            let m = natural.ok_or_else(|| {
                PipelineError::Config("natural mode requires a natural matrix".to_string())
            })?;
            let matrix = stochastic_from_natural(m)?;
            let predictions = discretise(&matrix).assignment().to_vec();
            Ok(Inference {
                predictions,
                matrix,
                solve: None,
            })
        }
        Mode::Logical => {
            let abstain = abstain_index(&bundle.universe)?;
            match &bundle.constraint {
                None => {
                    // Nothing constrains anything: every slot abstains.
                    let uniform = ProbabilityMatrix::new(v, t, vec![1.0 / t as f64; v * t])?;
                    Ok(Inference {
                        predictions: vec![abstain; v],
                        matrix: uniform,
                        solve: None,
                    })
                }
                Some(constraint) => {
                    let report = solve_logical_only(constraint, v, t, optimiser)?;
                    let env = discretise(&report.matrix);
                    let mentioned = constraint.mentioned_identifiers(v);
                    let predictions = (0..v)
                        .map(|slot| {
                            if mentioned[slot] {
                                env.get(slot)
                            } else {
                                abstain
                            }
                        })
                        .collect();
                    Ok(Inference {
                        predictions,
                        matrix: report.matrix.clone(),
                        solve: Some(report),
                    })
                }
            }
        }
        Mode::Combined => {
            let m = natural.ok_or_else(|| {
                PipelineError::Config("combined mode requires a natural matrix".to_string())
            })?;
            let report = match &bundle.constraint {
                Some(constraint) => solve(m, constraint, optimiser)?,
                None => solve_unconstrained(m, optimiser)?,
            };
            let predictions = discretise(&report.matrix).assignment().to_vec();
            Ok(Inference {
                predictions,
                matrix: report.matrix.clone(),
                solve: Some(report),
            })
        }
    }
}

fn abstain_index(universe: &TypeUniverse) -> Result<usize, PipelineError> {
    universe.index_of("any").ok_or_else(|| {
        PipelineError::Config("logical mode needs an `any` type in the universe".to_string())
    })
}

/// Natural rows satisfy a looser sum tolerance than probability matrices;
/// renormalise exactly when converting.
fn stochastic_from_natural(
    m: &NaturalConstraintMatrix,
) -> Result<ProbabilityMatrix, PipelineError> {
    let t = m.type_count();
    let mut data = Vec::with_capacity(m.ident_count() * t);
    for v in 0..m.ident_count() {
        let row = m.row(v);
        let sum: f64 = row.iter().sum();
        data.extend(row.iter().map(|x| x / sum));
    }
    Ok(ProbabilityMatrix::new(m.ident_count(), t, data)?)
}

/// File-level pipeline configuration (mirrors the CLI).
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub mode: Mode,
    pub program: Option<PathBuf>,
    /// Constraint-DSL input (used with `sidecar` instead of `program`).
    pub constraints: Option<PathBuf>,
    pub sidecar: Option<PathBuf>,
    pub matrix: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub universe: TypeUniverse,
    pub optimiser: OptimiserConfig,
    pub allow_missing: bool,
    pub out: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub emit_constraints: Option<PathBuf>,
    pub emit_sidecar: Option<PathBuf>,
    /// Verbose reports carry the per-iteration solve trace.
    pub trace: bool,
}

impl PipelineConfig {
    pub fn new(mode: Mode) -> Self {
        Self {
            mode,
            program: None,
            constraints: None,
            sidecar: None,
            matrix: None,
            model: None,
            universe: default_universe(),
            optimiser: OptimiserConfig::default(),
            allow_missing: false,
            out: None,
            report: None,
            emit_constraints: None,
            emit_sidecar: None,
            trace: false,
        }
    }
}

/// Machine-readable outcome of a single `infer` run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InferReport {
    pub schema_version: u32,
    pub mode: Mode,
    pub seed: u64,
    pub universe: Vec<String>,
    pub identifiers: Vec<String>,
    pub slot_kinds: Vec<SlotKind>,
    pub predictions: Vec<String>,
    pub constraint_dsl: Option<String>,
    pub constraint_value: Option<f64>,
    pub objective: Option<f64>,
    pub iterations: Option<usize>,
    pub converged: Option<bool>,
    pub matrix: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<crate::optim::TraceStep>>,
}

#[derive(Debug)]
pub struct PipelineOutcome {
    pub report: InferReport,
    pub annotated_source: Option<String>,
    pub solve: Option<SolveReport>,
}

/// Runs one file through the pipeline: parse (or load DSL), strip, generate
/// constraints, gather the natural channel, optimise, discretise, annotate.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineOutcome, PipelineError> {
    let (bundle, source_and_slots) = match (&cfg.program, &cfg.constraints) {
        (Some(path), None) => {
            let source = std::fs::read_to_string(path)?;
            let program = parse_program(&source)?;
            let slots = frontend::collect_slots(&program)?;
            let stripped = frontend::strip_annotations(&program);
            let bundle = generate_constraints(&stripped, &cfg.universe)?;
            (bundle, Some((source, slots)))
        }
        (None, Some(dsl_path)) => {
            let sidecar_path = cfg.sidecar.as_ref().ok_or_else(|| {
                PipelineError::Config("constraint-DSL input needs a sidecar".to_string())
            })?;
            let dsl = std::fs::read_to_string(dsl_path)?;
            let sidecar = std::fs::read_to_string(sidecar_path)?;
            (ConstraintBundle::from_dsl(&dsl, &sidecar)?, None)
        }
        _ => {
            return Err(PipelineError::Config(
                "exactly one of a program or a constraint-DSL file is required".to_string(),
            ))
        }
    };

    if let Some(path) = &cfg.emit_constraints {
        std::fs::write(path, bundle.to_dsl())?;
    }
    if let Some(path) = &cfg.emit_sidecar {
        std::fs::write(path, bundle.sidecar_json())?;
    }

    let natural = natural_channel(cfg, &bundle)?;
    let optimiser = OptimiserConfig {
        record_trace: cfg.trace,
        ..cfg.optimiser.clone()
    };
    let inference = infer_bundle(&bundle, natural.as_ref(), cfg.mode, &optimiser)?;

    let predictions: Vec<String> = inference
        .predictions
        .iter()
        .map(|&t| bundle.universe.name(t).to_string())
        .collect();

    let annotated_source = source_and_slots.as_ref().map(|(source, slots)| {
        let names: Vec<Option<&str>> = predictions.iter().map(|s| Some(s.as_str())).collect();
        rewrite_annotations(source, slots, &names)
    });
    if let (Some(out), Some(text)) = (&cfg.out, &annotated_source) {
        std::fs::write(out, text)?;
    }

    let report = InferReport {
        schema_version: REPORT_SCHEMA_VERSION,
        mode: cfg.mode,
        seed: cfg.optimiser.rng_seed,
        universe: bundle.universe.names().to_vec(),
        identifiers: bundle.identifiers.names().to_vec(),
        slot_kinds: bundle.slot_kinds.clone(),
        predictions,
        constraint_dsl: bundle
            .constraint
            .as_ref()
            .map(|c| crate::logic::constraint_to_dsl(c, &bundle.identifiers, &bundle.universe)),
        constraint_value: inference.solve.as_ref().map(|s| s.constraint_value),
        objective: inference.solve.as_ref().map(|s| s.objective),
        iterations: inference.solve.as_ref().map(|s| s.iterations),
        converged: inference.solve.as_ref().map(|s| s.converged),
        matrix: (0..inference.matrix.ident_count())
            .map(|v| inference.matrix.row(v).to_vec())
            .collect(),
        trace: inference.solve.as_ref().and_then(|s| s.trace.clone()),
    };
    if let Some(path) = &cfg.report {
        std::fs::write(path, serde_json::to_string_pretty(&report)?)?;
    }

    Ok(PipelineOutcome {
        report,
        annotated_source,
        solve: inference.solve,
    })
}

fn natural_channel(
    cfg: &PipelineConfig,
    bundle: &ConstraintBundle,
) -> Result<Option<NaturalConstraintMatrix>, PipelineError> {
    if cfg.mode == Mode::Logical {
        return Ok(None);
    }
    match (&cfg.matrix, &cfg.model) {
        (Some(path), None) => Ok(Some(load_matrix(
            path,
            &bundle.identifiers,
            &bundle.universe,
            cfg.allow_missing,
        )?)),
        (None, Some(path)) => {
            let model = crate::natural::load_checkpoint(path)?;
            check_model_types(&model, &bundle.universe)?;
            Ok(Some(predict_matrix(&model, &bundle.identifiers)?))
        }
        _ => Err(PipelineError::Config(format!(
            "{:?} mode requires exactly one of a matrix file or a model checkpoint",
            cfg.mode
        ))),
    }
}

fn check_model_types(model: &LstmModel, universe: &TypeUniverse) -> Result<(), PipelineError> {
    if model.type_names() != universe.names() {
        return Err(PipelineError::Config(format!(
            "model predicts over {:?}, pipeline universe is {:?}",
            model.type_names(),
            universe.names()
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KindReport {
    pub kind: SlotKind,
    pub evaluated: usize,
    pub correct: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeReport {
    pub type_name: String,
    pub true_positives: usize,
    pub false_positives: usize,
}

/// Top-1 accuracy report: `accuracy = sum TP / sum (TP + FP)` over evaluated
/// slots, overall and per slot kind. Every evaluated slot contributes one TP
/// or one FP (abstentions are FPs on the `any` row and also counted
/// separately).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub schema_version: u32,
    pub files: usize,
    pub evaluated_slots: usize,
    pub correct: usize,
    pub accuracy: f64,
    pub abstained: usize,
    pub oov_excluded: usize,
    pub unannotated: usize,
    pub per_kind: Vec<KindReport>,
    pub per_type: Vec<TypeReport>,
}

impl EvaluationReport {
    fn empty(universe: &TypeUniverse) -> Self {
        Self {
            schema_version: REPORT_SCHEMA_VERSION,
            files: 0,
            evaluated_slots: 0,
            correct: 0,
            accuracy: 0.0,
            abstained: 0,
            oov_excluded: 0,
            unannotated: 0,
            per_kind: SlotKind::ALL
                .iter()
                .map(|&kind| KindReport {
                    kind,
                    evaluated: 0,
                    correct: 0,
                    accuracy: 0.0,
                })
                .collect(),
            per_type: universe
                .names()
                .iter()
                .map(|name| TypeReport {
                    type_name: name.clone(),
                    true_positives: 0,
                    false_positives: 0,
                })
                .collect(),
        }
    }

    fn finalise(&mut self) {
        self.accuracy = if self.evaluated_slots == 0 {
            0.0
        } else {
            self.correct as f64 / self.evaluated_slots as f64
        };
        for kind in &mut self.per_kind {
            kind.accuracy = if kind.evaluated == 0 {
                0.0
            } else {
                kind.correct as f64 / kind.evaluated as f64
            };
        }
    }

    /// Order-independent merge of per-file reports.
    pub fn merge(&mut self, other: &EvaluationReport) {
        self.files += other.files;
        self.evaluated_slots += other.evaluated_slots;
        self.correct += other.correct;
        self.abstained += other.abstained;
        self.oov_excluded += other.oov_excluded;
        self.unannotated += other.unannotated;
        for (mine, theirs) in self.per_kind.iter_mut().zip(&other.per_kind) {
            mine.evaluated += theirs.evaluated;
            mine.correct += theirs.correct;
        }
        for (mine, theirs) in self.per_type.iter_mut().zip(&other.per_type) {
            mine.true_positives += theirs.true_positives;
            mine.false_positives += theirs.false_positives;
        }
        self.finalise();
    }

    pub fn kind(&self, kind: SlotKind) -> &KindReport {
        self.per_kind
            .iter()
            .find(|k| k.kind == kind)
            .expect("all kinds present")
    }
}

/// Scores predictions against gold type names. Gold types outside the
/// universe, and the gradual `any`, are excluded as OOV; unannotated slots
/// are skipped.
pub fn evaluate(
    predictions: &[usize],
    gold: &[Option<String>],
    kinds: &[SlotKind],
    universe: &TypeUniverse,
) -> Result<EvaluationReport, PipelineError> {
    if predictions.len() != gold.len() || predictions.len() != kinds.len() {
        return Err(PipelineError::Config(format!(
            "evaluate: {} predictions, {} gold annotations, {} kinds",
            predictions.len(),
            gold.len(),
            kinds.len()
        )));
    }
    let abstain = universe.index_of("any");
    let mut report = EvaluationReport::empty(universe);
    report.files = 1;
    for ((&predicted, gold), &kind) in predictions.iter().zip(gold).zip(kinds) {
        let Some(gold_name) = gold else {
            report.unannotated += 1;
            continue;
        };
        let gold_index = universe.index_of(gold_name);
        let gold_index = match gold_index {
            Some(g) if Some(g) != abstain => g,
            _ => {
                report.oov_excluded += 1;
                continue;
            }
        };
        report.evaluated_slots += 1;
        let kind_entry = report
            .per_kind
            .iter_mut()
            .find(|k| k.kind == kind)
            .expect("all kinds present");
        kind_entry.evaluated += 1;
        if predicted == gold_index {
            report.correct += 1;
            kind_entry.correct += 1;
            report.per_type[gold_index].true_positives += 1;
        } else {
            report.per_type[predicted].false_positives += 1;
            if Some(predicted) == abstain {
                report.abstained += 1;
            }
        }
    }
    report.finalise();
    Ok(report)
}

// ---------------------------------------------------------------------------
// Batch runs
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct BatchConfig {
    pub mode: Mode,
    pub universe: TypeUniverse,
    pub optimiser: OptimiserConfig,
    pub model: Option<LstmModel>,
    /// Worker threads; files are independent.
    pub jobs: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FileFailure {
    pub file: String,
    pub error: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BatchReport {
    #[serde(flatten)]
    pub evaluation: EvaluationReport,
    pub mode: Mode,
    pub seed: u64,
    pub failures: Vec<FileFailure>,
}

/// FNV-1a, used to derive a stable per-file seed from the base seed and the
/// file name so batch results do not depend on scheduling.
fn stable_hash(text: &str) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for byte in text.bytes() {
        hash ^= u64::from(byte);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Strip, constrain, predict, solve and evaluate one gold file.
pub fn run_gold_file(
    name: &str,
    source: &str,
    cfg: &BatchConfig,
) -> Result<EvaluationReport, PipelineError> {
    let program = parse_program(source)?;
    let slots = frontend::collect_slots(&program)?;
    let gold: Vec<Option<String>> = slots.iter().map(|s| s.annotation.clone()).collect();
    let kinds: Vec<SlotKind> = slots.iter().map(|s| s.kind).collect();
    let stripped = frontend::strip_annotations(&program);
    let bundle = generate_constraints(&stripped, &cfg.universe)?;

    let natural = match cfg.mode {
        Mode::Logical => None,
        _ => {
            let model = cfg.model.as_ref().ok_or_else(|| {
                PipelineError::Config("this mode requires a naming model".to_string())
            })?;
            check_model_types(model, &cfg.universe)?;
            Some(predict_matrix(model, &bundle.identifiers)?)
        }
    };

    let optimiser = OptimiserConfig {
        rng_seed: cfg.optimiser.rng_seed ^ stable_hash(name),
        ..cfg.optimiser.clone()
    };
    let inference = infer_bundle(&bundle, natural.as_ref(), cfg.mode, &optimiser)?;
    evaluate(&inference.predictions, &gold, &kinds, &cfg.universe)
}

/// Runs every `.tl` file under `dir` (sorted by name) and aggregates.
/// Per-file failures are recorded and the batch continues.
pub fn batch_run(dir: &Path, cfg: &BatchConfig) -> Result<BatchReport, PipelineError> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "tl"))
        .collect();
    paths.sort();

    let jobs = cfg.jobs.max(1);
    let results: Vec<Result<EvaluationReport, PipelineError>> = if jobs == 1 || paths.len() <= 1 {
        paths.iter().map(|path| run_path(path, cfg)).collect()
    } else {
        let mut slots: Vec<Option<Result<EvaluationReport, PipelineError>>> =
            (0..paths.len()).map(|_| None).collect();
        let next = std::sync::atomic::AtomicUsize::new(0);
        let slot_refs = std::sync::Mutex::new(&mut slots);
        std::thread::scope(|scope| {
            for _ in 0..jobs.min(paths.len()) {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                    if i >= paths.len() {
                        break;
                    }
                    let result = run_path(&paths[i], cfg);
                    slot_refs.lock().expect("no poisoned workers")[i] = Some(result);
                });
            }
        });
        slots
            .into_iter()
            .map(|r| r.expect("every file ran"))
            .collect()
    };

    let mut aggregate = EvaluationReport::empty(&cfg.universe);
    let mut failures = Vec::new();
    for (path, result) in paths.iter().zip(results) {
        let file = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        match result {
            Ok(report) => aggregate.merge(&report),
            Err(error) => failures.push(FileFailure {
                file,
                error: error.to_string(),
            }),
        }
    }
    aggregate.finalise();
    Ok(BatchReport {
        evaluation: aggregate,
        mode: cfg.mode,
        seed: cfg.optimiser.rng_seed,
        failures,
    })
}

fn run_path(path: &Path, cfg: &BatchConfig) -> Result<EvaluationReport, PipelineError> {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let source = std::fs::read_to_string(path)?;
    run_gold_file(&name, &source, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::Constraint;

    fn universe() -> TypeUniverse {
        default_universe()
    }

    fn fig2_bundle() -> ConstraintBundle {
        let program = parse_program("function addNum(start, end) { return start + end; }").unwrap();
        generate_constraints(&program, &universe()).unwrap()
    }

    fn number_biased_matrix() -> NaturalConstraintMatrix {
        NaturalConstraintMatrix::from_rows(vec![
            vec![0.75, 0.15, 0.05, 0.05],
            vec![0.7, 0.2, 0.05, 0.05],
            vec![0.6, 0.25, 0.1, 0.05],
        ])
        .unwrap()
    }

    #[test]
    fn natural_mode_is_row_argmax() {
        let bundle = fig2_bundle();
        let m = number_biased_matrix();
        let inference = infer_bundle(
            &bundle,
            Some(&m),
            Mode::Natural,
            &OptimiserConfig::default(),
        )
        .unwrap();
        assert_eq!(inference.predictions, vec![0, 0, 0]);
        assert!(inference.solve.is_none());
    }

    #[test]
    fn logical_mode_picks_a_consistent_equality_side() {
        let bundle = fig2_bundle();
        let inference =
            infer_bundle(&bundle, None, Mode::Logical, &OptimiserConfig::default()).unwrap();
        let report = inference.solve.as_ref().unwrap();
        assert!(report.constraint_value >= 0.99);
        // All three slots share one of the two `+`-compatible types.
        assert_eq!(inference.predictions[0], inference.predictions[1]);
        assert_eq!(inference.predictions[0], inference.predictions[2]);
        assert!(inference.predictions[0] <= 1);
    }

    #[test]
    fn combined_mode_respects_both_channels() {
        let bundle = fig2_bundle();
        let m = number_biased_matrix();
        let inference = infer_bundle(
            &bundle,
            Some(&m),
            Mode::Combined,
            &OptimiserConfig::default(),
        )
        .unwrap();
        assert_eq!(inference.predictions, vec![0, 0, 0]);
        let report = inference.solve.as_ref().unwrap();
        assert!(1.0 - report.constraint_value < 1e-3);
    }

    #[test]
    fn logical_mode_abstains_on_unmentioned_slots() {
        let program = parse_program("function fmtMsg(msg, cnt) { return \"hi\"; }").unwrap();
        let bundle = generate_constraints(&program, &universe()).unwrap();
        let inference =
            infer_bundle(&bundle, None, Mode::Logical, &OptimiserConfig::default()).unwrap();
        let any = universe().index_of("any").unwrap();
        assert_eq!(inference.predictions[0], any);
        assert_eq!(inference.predictions[1], any);
        assert_eq!(
            inference.predictions[2],
            universe().index_of("string").unwrap()
        );
    }

    #[test]
    fn zero_constraint_program_in_natural_mode_is_pure_argmax() {
        let program = parse_program("function mix(val, item) { return val; }").unwrap();
        // Drop to a constraint-free bundle by hand.
        let bundle = ConstraintBundle {
            constraint: None,
            ..generate_constraints(&program, &universe()).unwrap()
        };
        let m = NaturalConstraintMatrix::from_rows(vec![
            vec![0.1, 0.6, 0.2, 0.1],
            vec![0.3, 0.3, 0.35, 0.05],
            vec![0.25, 0.25, 0.25, 0.25],
        ])
        .unwrap();
        let inference = infer_bundle(
            &bundle,
            Some(&m),
            Mode::Natural,
            &OptimiserConfig::default(),
        )
        .unwrap();
        assert_eq!(inference.predictions, vec![1, 2, 0]);
    }

    #[test]
    fn evaluate_counts_and_excludes() {
        let uni = universe();
        let predictions = vec![0, 1, 3, 0, 1];
        let gold = vec![
            Some("number".to_string()),  // correct
            Some("number".to_string()),  // wrong (string predicted)
            Some("boolean".to_string()), // abstained (any predicted)
            Some("Date".to_string()),    // OOV gold: excluded
            None,                        // unannotated: skipped
        ];
        let kinds = vec![
            SlotKind::Par,
            SlotKind::Par,
            SlotKind::Fun,
            SlotKind::Var,
            SlotKind::Var,
        ];
        let report = evaluate(&predictions, &gold, &kinds, &uni).unwrap();
        assert_eq!(report.evaluated_slots, 3);
        assert_eq!(report.correct, 1);
        assert!((report.accuracy - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(report.abstained, 1);
        assert_eq!(report.oov_excluded, 1);
        assert_eq!(report.unannotated, 1);
        // Per-type TP/FP sums to the evaluated slots.
        let tp: usize = report.per_type.iter().map(|t| t.true_positives).sum();
        let fp: usize = report.per_type.iter().map(|t| t.false_positives).sum();
        assert_eq!(tp + fp, report.evaluated_slots);
        assert_eq!(report.kind(SlotKind::Par).evaluated, 2);
        assert_eq!(report.kind(SlotKind::Par).correct, 1);
    }

    #[test]
    fn evaluate_perfect_and_three_quarters() {
        let uni = universe();
        let gold: Vec<Option<String>> = ["number", "string", "boolean", "number"]
            .iter()
            .map(|s| Some(s.to_string()))
            .collect();
        let kinds = vec![SlotKind::Par; 4];
        let perfect = evaluate(&[0, 1, 2, 0], &gold, &kinds, &uni).unwrap();
        assert_eq!(perfect.accuracy, 1.0);
        let three_quarters = evaluate(&[0, 1, 2, 1], &gold, &kinds, &uni).unwrap();
        assert!((three_quarters.accuracy - 0.75).abs() < 1e-12);
    }

    #[test]
    fn merge_is_order_independent() {
        let uni = universe();
        let gold: Vec<Option<String>> =
            vec![Some("number".to_string()), Some("string".to_string())];
        let kinds = vec![SlotKind::Par, SlotKind::Fun];
        let a = evaluate(&[0, 1], &gold, &kinds, &uni).unwrap();
        let b = evaluate(&[1, 1], &gold, &kinds, &uni).unwrap();
        let mut ab = EvaluationReport::empty(&uni);
        ab.merge(&a);
        ab.merge(&b);
        let mut ba = EvaluationReport::empty(&uni);
        ba.merge(&b);
        ba.merge(&a);
        assert_eq!(ab, ba);
        assert_eq!(ab.evaluated_slots, 4);
        assert_eq!(ab.correct, 3);
    }

    #[test]
    fn batch_run_empty_directory_gives_empty_report() {
        let dir = std::env::temp_dir().join(format!(
            "softtype-batch-empty-{}-{}",
            std::process::id(),
            std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .unwrap()
                .as_nanos()
        ));
        std::fs::create_dir_all(&dir).unwrap();
        let cfg = BatchConfig {
            mode: Mode::Logical,
            universe: universe(),
            optimiser: OptimiserConfig::default(),
            model: None,
            jobs: 1,
        };
        let report = batch_run(&dir, &cfg).unwrap();
        assert_eq!(report.evaluation.files, 0);
        assert_eq!(report.evaluation.evaluated_slots, 0);
        assert!(report.failures.is_empty());
        std::fs::remove_dir_all(dir).ok();
    }

    #[test]
    fn batch_run_records_failures_and_continues() {
        let dir = std::env::temp_dir().join(format!(
            "softtype-batch-fail-{}-{}",
            std::process::id(),
            std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .unwrap()
                .as_nanos()
        ));
        std::fs::create_dir_all(&dir).unwrap();
        std::fs::write(
            dir.join("good.tl"),
            "function f(x: number): number { return x * 2; }",
        )
        .unwrap();
        std::fs::write(dir.join("bad.tl"), "function f( {").unwrap();
        let cfg = BatchConfig {
            mode: Mode::Logical,
            universe: universe(),
            optimiser: OptimiserConfig::default(),
            model: None,
            jobs: 1,
        };
        let report = batch_run(&dir, &cfg).unwrap();
        assert_eq!(report.failures.len(), 1);
        assert_eq!(report.failures[0].file, "bad.tl");
        assert_eq!(report.evaluation.files, 1);
        assert_eq!(report.evaluation.evaluated_slots, 2);
        assert_eq!(report.evaluation.correct, 2);
        std::fs::remove_dir_all(dir).ok();
    }

    #[test]
    fn parallel_batch_matches_sequential() {
        let dir = std::env::temp_dir().join(format!(
            "softtype-batch-par-{}-{}",
            std::process::id(),
            std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .unwrap()
                .as_nanos()
        ));
        std::fs::create_dir_all(&dir).unwrap();
        for file in generate_program_corpus(8, 3) {
            std::fs::write(dir.join(&file.name), &file.source).unwrap();
        }
        let make = |jobs| BatchConfig {
            mode: Mode::Logical,
            universe: universe(),
            optimiser: OptimiserConfig::default(),
            model: None,
            jobs,
        };
        let sequential = batch_run(&dir, &make(1)).unwrap();
        let parallel = batch_run(&dir, &make(4)).unwrap();
        assert_eq!(sequential.evaluation, parallel.evaluation);
        std::fs::remove_dir_all(dir).ok();
    }

    #[test]
    fn logical_inference_is_deterministic_per_seed() {
        let bundle = fig2_bundle();
        let cfg = OptimiserConfig {
            rng_seed: 9,
            ..OptimiserConfig::default()
        };
        let a = infer_bundle(&bundle, None, Mode::Logical, &cfg).unwrap();
        let b = infer_bundle(&bundle, None, Mode::Logical, &cfg).unwrap();
        assert_eq!(a.predictions, b.predictions);
        assert_eq!(a.matrix, b.matrix);
    }

    #[test]
    fn tautology_like_constraint_converges_with_untouched_rows_at_natural() {
        // x or not x peaks only at a corner of the mentioned row; rows the
        // formula does not mention stay at the natural evidence.
        let identifiers = crate::logic::IdentifierSet::new(["flag", "cnt"]).unwrap();
        let bundle = ConstraintBundle {
            identifiers,
            universe: universe(),
            slot_kinds: vec![SlotKind::Par, SlotKind::Par],
            constraint: Some(Constraint::or(
                Constraint::is(0, 2),
                Constraint::not(Constraint::is(0, 2)),
            )),
        };
        let m = NaturalConstraintMatrix::from_rows(vec![
            vec![0.25, 0.25, 0.25, 0.25],
            vec![0.7, 0.1, 0.1, 0.1],
        ])
        .unwrap();
        let cfg = OptimiserConfig {
            convergence_threshold: 1e-7,
            ..OptimiserConfig::default()
        };
        let inference = infer_bundle(&bundle, Some(&m), Mode::Combined, &cfg).unwrap();
        let report = inference.solve.unwrap();
        assert!(
            1.0 - report.constraint_value < 1e-6,
            "residual {}",
            1.0 - report.constraint_value
        );
        for t in 0..4 {
            assert!(
                (report.matrix.get(1, t) - m.row(1)[t]).abs() < 0.05,
                "row 1 drifted from natural evidence"
            );
        }
        assert_eq!(inference.predictions[1], 0);
    }
}
