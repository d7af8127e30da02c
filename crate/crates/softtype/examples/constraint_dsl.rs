//! The textual constraint DSL and the algebra of the continuous semantics.
//!
//! Formulas are exchanged as text (`ident is Type`, `not`/`and`/`or`,
//! parentheses, `#` comments); several formulas in one file are conjoined by
//! the pipeline. The De Morgan duals evaluate identically under the product
//! t-norm, and the log-space evaluator tracks the logarithm of the direct
//! value exactly.
//!
//! ```bash
//! cargo run --example constraint_dsl
//! ```

use softtype::logic::{
    constraint_to_dsl, gen, parse_constraints, Constraint, IdentifierSet, TypeUniverse,
};
use softtype::relax::{check_duality, eval_log, eval_prob, random_matrix};

fn main() {
    let universe = TypeUniverse::new(["number", "string", "boolean"]).unwrap();
    let idents = IdentifierSet::new(["cnt", "label", "flag"]).unwrap();

    let src = "\
# each line here is its own formula
cnt is number and not label is number
label is string or flag is boolean
";
    let formulas = parse_constraints(src, &idents, &universe).unwrap();
    println!("parsed {} formulas:", formulas.len());
    for formula in &formulas {
        println!("  {}", constraint_to_dsl(formula, &idents, &universe));
    }
    let conjoined = Constraint::and_all(formulas).unwrap();
    println!(
        "conjoined: {}",
        constraint_to_dsl(&conjoined, &idents, &universe)
    );

    let mut rng = gen::seeded_rng(1);
    let p = random_matrix(&mut rng, idents.len(), universe.len());
    println!("\nunder a random matrix:");
    println!("  direct value: {:.6}", eval_prob(&p, &conjoined).unwrap());
    println!(
        "  exp(log-space value): {:.6}",
        eval_log(&p.ln(), &conjoined).unwrap().exp()
    );

    let e1 = Constraint::is(0, 0);
    let e2 = Constraint::or(Constraint::is(1, 1), Constraint::is(2, 2));
    let duality = check_duality(&p, &e1, &e2).unwrap();
    println!("\nDe Morgan under the relaxation:");
    println!(
        "  not(a and b) = {:.12}   (not a) or (not b) = {:.12}",
        duality.negated_and.0, duality.negated_and.1
    );
    println!(
        "  not(a or b)  = {:.12}   (not a) and (not b) = {:.12}",
        duality.negated_or.0, duality.negated_or.1
    );
}
