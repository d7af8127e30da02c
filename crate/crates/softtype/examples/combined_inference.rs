//! End-to-end combined inference on one file.
//!
//! The logical channel knows `start`, `end` and `addNum` must share a
//! `+`-compatible type but not which one; the naming model knows all three
//! names smell like numbers. The multiplier objective hands the final say on
//! consistency to the constraints and the final say on taste to the
//! evidence: every slot comes out `number`.
//!
//! ```bash
//! cargo run --example combined_inference
//! ```

use softtype::frontend::{collect_slots, generate_constraints, parse_program};
use softtype::natural::{predict_matrix, synthetic_naming_corpus, train_model, TrainConfig};
use softtype::optim::OptimiserConfig;
use softtype::pipeline::{default_universe, infer_bundle, rewrite_annotations, Mode};

fn main() {
    let source = "function addNum(start, end) {\n    return start + end;\n}\n";
    let universe = default_universe();
    let program = parse_program(source).unwrap();
    let slots = collect_slots(&program).unwrap();
    let bundle = generate_constraints(&program, &universe).unwrap();
    println!("input:\n{source}");
    println!("constraints: {}", bundle.to_dsl().trim_end());

    println!("\ntraining the naming model...");
    let corpus = synthetic_naming_corpus(1000, 5, &universe).unwrap();
    let (model, _) = train_model(
        &corpus,
        &TrainConfig {
            seed: 5,
            ..TrainConfig::default()
        },
    )
    .unwrap();
    let natural = predict_matrix(&model, &bundle.identifiers).unwrap();
    println!("naming evidence:");
    for (v, name) in bundle.identifiers.names().iter().enumerate() {
        let row: Vec<String> = natural
            .row(v)
            .iter()
            .zip(universe.names())
            .map(|(p, ty)| format!("{ty} {p:.2}"))
            .collect();
        println!("  {name:<8} {}", row.join("  "));
    }

    let inference = infer_bundle(
        &bundle,
        Some(&natural),
        Mode::Combined,
        &OptimiserConfig::default(),
    )
    .unwrap();
    let report = inference.solve.as_ref().unwrap();
    println!(
        "\nsolve: constraint value {:.6} in {} iterations (converged: {})",
        report.constraint_value, report.iterations, report.converged
    );

    let names: Vec<Option<&str>> = inference
        .predictions
        .iter()
        .map(|&t| Some(universe.name(t)))
        .collect();
    println!(
        "\nannotated output:\n{}",
        rewrite_annotations(source, &slots, &names)
    );
}
