//! Reverse-mode gradients against central finite differences.
//!
//! Both differentiable pieces of the system are hand-rolled, so both get the
//! classic sanity check: the combined objective (through the shared-
//! subformula DAG and the softmax) and the LSTM's backpropagation through
//! time.
//!
//! ```bash
//! cargo run --example gradient_check
//! ```

use rand::Rng;
use softtype::logic::gen;
use softtype::natural::{LstmModel, NaturalConstraintMatrix};
use softtype::optim::{gradient, objective, RelaxedAssignment};
use softtype::pipeline::default_universe;
use softtype::relax::random_matrix;

fn main() {
    let mut rng = gen::seeded_rng(5);
    let (rows, cols) = (3, 4);
    let constraint = gen::random_constraint(&mut rng, rows, cols, 5);
    let m = random_matrix(&mut rng, rows, cols);
    let natural =
        NaturalConstraintMatrix::from_rows((0..rows).map(|v| m.row(v).to_vec()).collect()).unwrap();
    let data: Vec<f64> = (0..rows * cols).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let y = RelaxedAssignment::new(rows, cols, data.clone()).unwrap();
    let lambda = 10.0;

    let analytic = gradient(&y, lambda, &natural, &constraint).unwrap();
    let h = 1e-5;
    println!("combined objective, reverse-mode vs central differences:");
    let mut worst: f64 = 0.0;
    let mut perturbed = data;
    for i in 0..perturbed.len() {
        let orig = perturbed[i];
        perturbed[i] = orig + h;
        let up = objective(
            &RelaxedAssignment::new(rows, cols, perturbed.clone()).unwrap(),
            lambda,
            &natural,
            &constraint,
        )
        .unwrap();
        perturbed[i] = orig - h;
        let down = objective(
            &RelaxedAssignment::new(rows, cols, perturbed.clone()).unwrap(),
            lambda,
            &natural,
            &constraint,
        )
        .unwrap();
        perturbed[i] = orig;
        let fd = (up - down) / (2.0 * h);
        worst = worst.max((analytic[i] - fd).abs());
        if i < 4 {
            println!(
                "  dJ/dy[{i}]  reverse-mode {:>12.8}  fd {:>12.8}",
                analytic[i], fd
            );
        }
    }
    println!(
        "  ... worst absolute gap over all {} entries: {worst:.2e}",
        analytic.len()
    );

    println!("\nLSTM negative log likelihood, backprop-through-time vs differences:");
    let universe = default_universe();
    let mut model = LstmModel::with_random_weights(3, 4, universe.names().to_vec(), 5);
    let (loss, bptt) = model.nll_gradient("idx", 0).unwrap();
    println!("  loss at start: {loss:.4}");
    let mut params = model.parameters();
    let mut worst: f64 = 0.0;
    for i in 0..params.len() {
        let orig = params[i];
        params[i] = orig + h;
        model.set_parameters(&params).unwrap();
        let up = -model.forward("idx").unwrap()[0];
        params[i] = orig - h;
        model.set_parameters(&params).unwrap();
        let down = -model.forward("idx").unwrap()[0];
        params[i] = orig;
        model.set_parameters(&params).unwrap();
        worst = worst.max((bptt[i] - (up - down) / (2.0 * h)).abs());
    }
    println!(
        "  worst absolute gap over all {} parameters: {worst:.2e}",
        params.len()
    );
}
