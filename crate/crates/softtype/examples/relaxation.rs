//! The continuous relaxation of logical constraints.
//!
//! A formula over `ident is Type` atoms is reinterpreted as a smooth
//! function of a row-stochastic matrix: atoms read entries, `and` multiplies
//! (the product t-norm), `or` is its dual, `not` complements. On one-hot
//! matrices the value is exactly 0 or 1 and agrees with boolean
//! satisfaction; in between it is a differentiable degree of satisfaction.
//!
//! ```bash
//! cargo run --example relaxation
//! ```

use softtype::logic::{enumerate_environments, Constraint, IdentifierSet, TypeUniverse};
use softtype::relax::{eval_prob, ProbabilityMatrix};

fn main() {
    let universe = TypeUniverse::new(["number", "string", "any"]).unwrap();
    let idents = IdentifierSet::new(["start", "end"]).unwrap();

    // start and end have the same type, which supports `+`.
    let number = universe.index_of("number").unwrap();
    let string = universe.index_of("string").unwrap();
    let same_type = Constraint::or(
        Constraint::and(Constraint::is(0, number), Constraint::is(1, number)),
        Constraint::and(Constraint::is(0, string), Constraint::is(1, string)),
    );
    println!(
        "constraint: {}",
        softtype::logic::constraint_to_dsl(&same_type, &idents, &universe)
    );

    println!("\nover every one-hot assignment (boolean vs continuous):");
    for env in enumerate_environments(idents.len(), universe.len(), 1_000).unwrap() {
        let satisfied = env.satisfies(&same_type).unwrap();
        let value = eval_prob(&env.to_binary_matrix(), &same_type).unwrap();
        println!(
            "  start={:<6} end={:<6} satisfies={:<5} relaxed={}",
            universe.name(env.get(0)),
            universe.name(env.get(1)),
            satisfied,
            value
        );
        assert_eq!(satisfied, value == 1.0);
    }

    println!("\nbetween the corners the value is a degree of satisfaction:");
    for (p_start, p_end) in [(0.9, 0.9), (0.5, 0.5), (0.9, 0.2)] {
        let rows = vec![
            vec![p_start, 1.0 - p_start, 0.0],
            vec![p_end, 1.0 - p_end, 0.0],
        ];
        let p = ProbabilityMatrix::from_rows(rows).unwrap();
        println!(
            "  p(start=number)={p_start:.1} p(end=number)={p_end:.1}  ->  {:.4}",
            eval_prob(&p, &same_type).unwrap()
        );
    }
}
