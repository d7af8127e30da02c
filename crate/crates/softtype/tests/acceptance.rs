//! Acceptance suite: one test per release criterion, each printing a
//! `[PASS]` line with the measured numbers (run with `--nocapture` to see
//! them). Tolerances are pinned here, not configurable.

use rand::Rng;
use softtype::frontend::{generate_constraints, parse_program, SlotKind};
use softtype::logic::{enumerate_environments, gen, DEFAULT_ENUMERATION_CAP};
use softtype::natural::{
    predict_matrix, synthetic_naming_corpus, train_model, LstmModel, NaturalConstraintMatrix,
    TrainConfig, TrainStats,
};
use softtype::optim::{
    gradient, objective, solve, solve_logical_only, OptimiserConfig, RelaxedAssignment,
};
use softtype::pipeline::{
    default_universe, generate_program_corpus, infer_bundle, run_gold_file, BatchConfig,
    EvaluationReport, Mode,
};
use softtype::relax::{check_duality, eval_log, eval_prob, random_matrix};
use std::sync::OnceLock;
use std::time::Instant;

const CORPUS_SEED: u64 = 5;
const NAMING_SAMPLES: usize = 1000;

/// The toy naming model shared by the end-to-end criteria, trained once on
/// the fixed-seed convention corpus.
fn toy_model() -> &'static (LstmModel, TrainStats) {
    static MODEL: OnceLock<(LstmModel, TrainStats)> = OnceLock::new();
    MODEL.get_or_init(|| {
        let universe = default_universe();
        let corpus = synthetic_naming_corpus(NAMING_SAMPLES, CORPUS_SEED, &universe)
            .expect("naming corpus generates");
        train_model(
            &corpus,
            &TrainConfig {
                seed: CORPUS_SEED,
                ..TrainConfig::default()
            },
        )
        .expect("training converges")
    })
}

#[test]
fn criterion_1_relaxation_exactness() {
    // On one-hot matrices the continuous semantics is exactly boolean:
    // value in {0, 1}, and 1 precisely on satisfying environments.
    let start = Instant::now();
    let mut rng = gen::seeded_rng(101);
    let mut formulas = 0usize;
    let mut checks = 0usize;
    for v in 1..=3usize {
        for t in 1..=3usize {
            let envs: Vec<_> = enumerate_environments(v, t, DEFAULT_ENUMERATION_CAP)
                .unwrap()
                .collect();
            let matrices: Vec<_> = envs.iter().map(|e| e.to_binary_matrix()).collect();
            for _ in 0..1200 {
                let e = gen::random_constraint(&mut rng, v, t, 4);
                let graph = softtype::relax::ConstraintGraph::compile(&e, v, t).unwrap();
                for (env, matrix) in envs.iter().zip(&matrices) {
                    let value = graph.eval_prob(matrix).unwrap();
                    assert!(
                        value == 0.0 || value == 1.0,
                        "continuous value {value} is not exactly binary"
                    );
                    assert_eq!(value == 1.0, env.satisfies(&e).unwrap());
                    checks += 1;
                }
                formulas += 1;
            }
        }
    }
    assert!(formulas >= 10_000);
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 60, "took {elapsed:?}");
    println!(
        "[PASS] criterion 1: relaxation exact on {checks} one-hot checks across {formulas} formulas in {elapsed:.2?}"
    );
}

#[test]
fn criterion_2_duality() {
    let mut rng = gen::seeded_rng(102);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let p = random_matrix(&mut rng, 3, 3);
        let e1 = gen::random_constraint(&mut rng, 3, 3, 4);
        let e2 = gen::random_constraint(&mut rng, 3, 3, 4);
        let check = check_duality(&p, &e1, &e2).unwrap();
        let gap_and = (check.negated_and.0 - check.negated_and.1).abs();
        let gap_or = (check.negated_or.0 - check.negated_or.1).abs();
        assert!(gap_and < 1e-12, "negated-and identity off by {gap_and}");
        assert!(gap_or < 1e-12, "negated-or identity off by {gap_or}");
        worst = worst.max(gap_and).max(gap_or);
    }
    println!("[PASS] criterion 2: both De Morgan identities within 1e-12 on 10000 triples (worst gap {worst:.2e})");
}

#[test]
fn criterion_3_log_space_agreement() {
    let mut rng = gen::seeded_rng(103);
    let mut worst: f64 = 0.0;
    let mut compared = 0usize;
    for _ in 0..1000 {
        let p = random_matrix(&mut rng, 3, 4);
        let e = gen::random_constraint(&mut rng, 3, 4, 5);
        let direct = eval_prob(&p, &e).unwrap();
        let logged = eval_log(&p.ln(), &e).unwrap();
        assert!(!logged.is_nan(), "log route produced NaN on interior P");
        assert!(!direct.is_nan());
        if direct > 1e-8 {
            let gap = (logged - direct.ln()).abs();
            assert!(gap < 1e-6, "log route off by {gap}");
            worst = worst.max(gap);
            compared += 1;
        }
    }
    println!(
        "[PASS] criterion 3: log-space evaluator within 1e-6 of ln(direct) on {compared}/1000 pairs (worst {worst:.2e}), no NaN"
    );
}

#[test]
fn criterion_4_gradient_correctness() {
    // Reverse-mode gradient of the combined objective against central
    // finite differences at step 1e-5.
    let mut rng = gen::seeded_rng(104);
    let mut worst: f64 = 0.0;
    for round in 0..100 {
        let rows = rng.gen_range(1..=5);
        let cols = rng.gen_range(2..=5);
        let e = gen::random_constraint(&mut rng, rows, cols, 5);
        let lambda = [0.0, 1.0, 10.0, 100.0][round % 4];
        let m_rows = random_matrix(&mut rng, rows, cols);
        let m =
            NaturalConstraintMatrix::from_rows((0..rows).map(|v| m_rows.row(v).to_vec()).collect())
                .unwrap();
        let mut data: Vec<f64> = (0..rows * cols).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let y = RelaxedAssignment::new(rows, cols, data.clone()).unwrap();
        let analytic = gradient(&y, lambda, &m, &e).unwrap();
        let h = 1e-5;
        for i in 0..data.len() {
            let orig = data[i];
            data[i] = orig + h;
            let up = objective(
                &RelaxedAssignment::new(rows, cols, data.clone()).unwrap(),
                lambda,
                &m,
                &e,
            )
            .unwrap();
            data[i] = orig - h;
            let down = objective(
                &RelaxedAssignment::new(rows, cols, data.clone()).unwrap(),
                lambda,
                &m,
                &e,
            )
            .unwrap();
            data[i] = orig;
            let fd = (up - down) / (2.0 * h);
            // Relative against the larger magnitude, floored so that
            // finite-difference noise on near-zero entries is not divided
            // by itself.
            let rel = (analytic[i] - fd).abs() / analytic[i].abs().max(fd.abs()).max(1e-3);
            assert!(
                rel < 1e-4,
                "objective gradient entry {i}: reverse-mode {} vs fd {fd} (rel {rel})",
                analytic[i]
            );
            worst = worst.max(rel);
        }
    }

    // Backpropagation through time on a hidden-size-4 model and a
    // 3-character name, every parameter checked.
    let universe = default_universe();
    let mut model = LstmModel::with_random_weights(3, 4, universe.names().to_vec(), 104);
    let name = "cnt";
    let label = 0;
    let (_, analytic) = model.nll_gradient(name, label).unwrap();
    let mut params = model.parameters();
    let h = 1e-5;
    let mut worst_bptt: f64 = 0.0;
    for i in 0..params.len() {
        let orig = params[i];
        params[i] = orig + h;
        model.set_parameters(&params).unwrap();
        let up = -model.forward(name).unwrap()[label];
        params[i] = orig - h;
        model.set_parameters(&params).unwrap();
        let down = -model.forward(name).unwrap()[label];
        params[i] = orig;
        model.set_parameters(&params).unwrap();
        let fd = (up - down) / (2.0 * h);
        let rel = (analytic[i] - fd).abs() / analytic[i].abs().max(fd.abs()).max(1e-4);
        assert!(
            rel < 1e-3,
            "BPTT parameter {i}: analytic {} vs fd {fd} (rel {rel})",
            analytic[i]
        );
        worst_bptt = worst_bptt.max(rel);
    }
    println!(
        "[PASS] criterion 4: objective gradients within 1e-4 of central differences on 100 instances (worst {worst:.2e}); BPTT within 1e-3 on all {} parameters (worst {worst_bptt:.2e})",
        params.len()
    );
}

#[test]
fn criterion_5_constraint_satisfaction_at_convergence() {
    // Every satisfiable fixture must reach residual < 1e-3 within the
    // default 5000-iteration budget, in both solve paths.
    let universe = default_universe();
    let (model, _) = toy_model();
    let mut fixtures: Vec<(String, softtype::frontend::ConstraintBundle)> = Vec::new();
    for file in generate_program_corpus(50, CORPUS_SEED) {
        let program = parse_program(&file.source).unwrap();
        let stripped = softtype::frontend::strip_annotations(&program);
        let bundle = generate_constraints(&stripped, &universe).unwrap();
        fixtures.push((file.name, bundle));
    }
    let fig2 = parse_program("function addNum(start, end) { return start + end; }").unwrap();
    fixtures.push((
        "fig2".to_string(),
        generate_constraints(&fig2, &universe).unwrap(),
    ));

    let mut solved = 0usize;
    let mut skipped_unsat = 0usize;
    for (name, bundle) in &fixtures {
        let Some(constraint) = &bundle.constraint else {
            continue;
        };
        let v = bundle.identifiers.len();
        let t = bundle.universe.len();
        let satisfiable = enumerate_environments(v, t, DEFAULT_ENUMERATION_CAP)
            .unwrap()
            .any(|env| env.satisfies(constraint).unwrap());
        if !satisfiable {
            skipped_unsat += 1;
            continue;
        }

        let cfg = OptimiserConfig {
            rng_seed: CORPUS_SEED,
            ..OptimiserConfig::default()
        };
        let logical = solve_logical_only(constraint, v, t, &cfg).unwrap();
        let residual = 1.0 - eval_prob(&logical.matrix, constraint).unwrap();
        assert!(
            residual < 1e-3 && logical.iterations <= 5000,
            "{name}: logical-only residual {residual} after {} iterations",
            logical.iterations
        );

        let m = predict_matrix(model, &bundle.identifiers).unwrap();
        let combined = solve(&m, constraint, &cfg).unwrap();
        let residual = 1.0 - eval_prob(&combined.matrix, constraint).unwrap();
        assert!(
            residual < 1e-3 && combined.iterations <= 5000,
            "{name}: combined residual {residual} after {} iterations",
            combined.iterations
        );
        solved += 1;
    }
    assert!(solved >= 50, "only {solved} satisfiable fixtures solved");
    println!(
        "[PASS] criterion 5: residual < 1e-3 within 5000 iterations on all {solved} satisfiable fixtures ({skipped_unsat} unsatisfiable skipped), both solve paths"
    );
}

#[test]
fn criterion_6_end_to_end_reproduction() {
    let universe = default_universe();
    let (model, _) = toy_model();
    let program = parse_program("function addNum(start, end) { return start + end; }").unwrap();
    let bundle = generate_constraints(&program, &universe).unwrap();

    let start = Instant::now();
    let logical = infer_bundle(
        &bundle,
        None,
        Mode::Logical,
        &OptimiserConfig {
            rng_seed: 7,
            ..OptimiserConfig::default()
        },
    )
    .unwrap();
    let report = logical.solve.as_ref().unwrap();
    assert!(
        report.constraint_value >= 0.99,
        "logical constraint value {}",
        report.constraint_value
    );
    // A consistent one-hot: all three slots share one `+`-compatible type.
    assert_eq!(logical.predictions[0], logical.predictions[1]);
    assert_eq!(logical.predictions[0], logical.predictions[2]);
    assert!(logical.predictions[0] <= 1, "picked a non-additive type");
    for v in 0..3 {
        let top = logical
            .matrix
            .row(v)
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(top >= 0.99, "row {v} is not one-hot: top {top}");
    }

    let m = predict_matrix(model, &bundle.identifiers).unwrap();
    let combined = infer_bundle(
        &bundle,
        Some(&m),
        Mode::Combined,
        &OptimiserConfig {
            rng_seed: 7,
            ..OptimiserConfig::default()
        },
    )
    .unwrap();
    let number = universe.index_of("number").unwrap();
    assert_eq!(
        combined.predictions,
        vec![number; 3],
        "combined run should pick number for start, end and addNum"
    );
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "took {elapsed:?}");
    println!(
        "[PASS] criterion 6: logical run one-hot and consistent, combined run all-number, in {elapsed:.2?}"
    );
}

#[test]
fn criterion_7_ablation_pattern() {
    // Desk-scale analogue of the logical/natural/combined ablation: the
    // combination must dominate both single channels by at least 0.03
    // absolute, and logical-only must do better on return slots than on
    // parameters. Timed end to end, LSTM training included.
    let start = Instant::now();
    let universe = default_universe();
    let corpus = synthetic_naming_corpus(NAMING_SAMPLES, CORPUS_SEED, &universe).unwrap();
    let (model, _) = train_model(
        &corpus,
        &TrainConfig {
            seed: CORPUS_SEED,
            ..TrainConfig::default()
        },
    )
    .unwrap();
    let files = generate_program_corpus(50, CORPUS_SEED);

    let run_mode = |mode: Mode, model: Option<LstmModel>| -> EvaluationReport {
        let cfg = BatchConfig {
            mode,
            universe: universe.clone(),
            optimiser: OptimiserConfig {
                rng_seed: CORPUS_SEED,
                ..OptimiserConfig::default()
            },
            model,
            jobs: 1,
        };
        let mut total: Option<EvaluationReport> = None;
        for file in &files {
            let report = run_gold_file(&file.name, &file.source, &cfg)
                .unwrap_or_else(|e| panic!("{}: {e}", file.name));
            match &mut total {
                Some(total) => total.merge(&report),
                None => total = Some(report),
            }
        }
        total.expect("corpus is nonempty")
    };

    let logical = run_mode(Mode::Logical, None);
    let natural = run_mode(Mode::Natural, Some(model.clone()));
    let combined = run_mode(Mode::Combined, Some(model));

    let expected_slots: usize = files.iter().map(|f| f.slot_count).sum();
    assert_eq!(combined.evaluated_slots, expected_slots);

    assert!(
        combined.accuracy >= natural.accuracy,
        "combined {} < natural {}",
        combined.accuracy,
        natural.accuracy
    );
    assert!(
        combined.accuracy >= logical.accuracy,
        "combined {} < logical {}",
        combined.accuracy,
        logical.accuracy
    );
    let margin = combined.accuracy - natural.accuracy.max(logical.accuracy);
    assert!(
        margin >= 0.03,
        "combined must beat the best single channel by 0.03 absolute, got {margin}"
    );
    let logical_fun = logical.kind(SlotKind::Fun).accuracy;
    let logical_par = logical.kind(SlotKind::Par).accuracy;
    assert!(
        logical_fun > logical_par,
        "logical-only should do better on returns ({logical_fun}) than parameters ({logical_par})"
    );
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 600, "took {elapsed:?}");
    println!(
        "[PASS] criterion 7: accuracy logical {:.3} / natural {:.3} / combined {:.3} (margin {margin:.3}), logical FUN {logical_fun:.3} > PAR {logical_par:.3}, {} slots in {elapsed:.2?}",
        logical.accuracy, natural.accuracy, combined.accuracy, expected_slots
    );
}

#[test]
fn criterion_8_naming_model_quality() {
    let (model, stats) = toy_model();
    assert!(
        stats.val_accuracy >= 0.85,
        "held-out accuracy {} below 0.85",
        stats.val_accuracy
    );
    for i in 1..5 {
        assert!(
            stats.train_nll[i] < stats.train_nll[i - 1],
            "training NLL did not strictly decrease at epoch {i}: {:?}",
            &stats.train_nll[..5]
        );
    }
    // Point checks of the learned conventions: `count` is confidently a
    // number, and the three Fig-style names all lean number.
    let universe = default_universe();
    let number = universe.index_of("number").unwrap();
    let count = model.forward("count").unwrap();
    let p_count = count[number].exp();
    assert!(
        count.iter().all(|&lp| lp <= count[number]) && p_count > 0.8,
        "count should be a confident number, got p = {p_count}"
    );
    let ids = softtype::logic::IdentifierSet::new(["start", "end", "addNum"]).unwrap();
    let m = predict_matrix(model, &ids).unwrap();
    for v in 0..3 {
        let row = m.row(v);
        assert!(
            row.iter().all(|&p| p <= row[number]),
            "{} should lean number, got {row:?}",
            ids.name(v)
        );
    }
    println!(
        "[PASS] criterion 8: held-out accuracy {:.3} >= 0.85, training NLL strictly decreasing over first 5 epochs ({:.3} -> {:.3}), count -> number at {p_count:.2}",
        stats.val_accuracy, stats.train_nll[0], stats.train_nll[4]
    );
}

#[test]
fn criterion_9_cli_determinism() {
    // Identical flags and seed must produce byte-identical artifacts:
    // corpus, checkpoint, infer report, annotated output and eval report.
    let bin = env!("CARGO_BIN_EXE_softtype");
    let base = std::path::Path::new(env!("CARGO_TARGET_TMPDIR")).join("determinism");
    let _ = std::fs::remove_dir_all(&base);
    std::fs::create_dir_all(&base).unwrap();

    let run = |args: &[&str]| {
        let output = std::process::Command::new(bin)
            .args(args)
            .output()
            .expect("binary runs");
        assert!(
            output.status.success(),
            "{args:?} failed: {}",
            String::from_utf8_lossy(&output.stderr)
        );
    };

    let mut artifacts: Vec<Vec<Vec<u8>>> = Vec::new();
    for round in 0..2 {
        let dir = base.join(format!("round{round}"));
        std::fs::create_dir_all(&dir).unwrap();
        let corpus = dir.join("corpus");
        run(&[
            "gen-corpus",
            "--seed",
            "11",
            "--out",
            corpus.to_str().unwrap(),
            "--programs",
            "8",
            "--names",
            "200",
        ]);
        let ckpt = dir.join("model.ckpt");
        run(&[
            "train",
            "--corpus",
            corpus.join("names.tsv").to_str().unwrap(),
            "--out",
            ckpt.to_str().unwrap(),
            "--seed",
            "11",
            "--epochs",
            "6",
        ]);
        let program = corpus.join("programs").join("prog_000.tl");
        let infer_report = dir.join("infer.json");
        let annotated = dir.join("out.tl");
        run(&[
            "infer",
            "--mode",
            "combined",
            "--program",
            program.to_str().unwrap(),
            "--model",
            ckpt.to_str().unwrap(),
            "--seed",
            "11",
            "--report",
            infer_report.to_str().unwrap(),
            "--out",
            annotated.to_str().unwrap(),
        ]);
        let eval_report = dir.join("eval.json");
        run(&[
            "eval",
            "--dir",
            corpus.join("programs").to_str().unwrap(),
            "--mode",
            "combined",
            "--model",
            ckpt.to_str().unwrap(),
            "--seed",
            "11",
            "--jobs",
            "4",
            "--report",
            eval_report.to_str().unwrap(),
        ]);
        artifacts.push(
            [
                corpus.join("names.tsv"),
                corpus.join("programs").join("prog_000.tl"),
                ckpt,
                infer_report,
                annotated,
                eval_report,
            ]
            .iter()
            .map(|p| std::fs::read(p).expect("artifact exists"))
            .collect(),
        );
    }
    let names = [
        "names.tsv",
        "prog_000.tl",
        "model.ckpt",
        "infer.json",
        "out.tl",
        "eval.json",
    ];
    for ((a, b), name) in artifacts[0].iter().zip(&artifacts[1]).zip(names) {
        assert_eq!(a, b, "{name} differs between identical runs");
    }
    println!(
        "[PASS] criterion 9: corpus, checkpoint, infer report, annotated output and eval report byte-identical across repeated runs"
    );
}
