//! Continuous semantics of constraints.
//!
//! A formula is reinterpreted as a smooth function of a row-stochastic
//! `V x T` matrix: an atom reads its matrix entry, `not x` is `1 - x`,
//! `and` is the numeric product (the product t-norm) and `or` its dual
//! `x + y - x*y`. On one-hot matrices this agrees exactly with boolean
//! satisfaction, which is what makes the relaxation usable as an
//! optimisation target.
//!
//! A log-space twin of the evaluator handles deeply nested formulas where
//! products underflow; see [`graph::ConstraintGraph::eval_log`].

pub mod graph;

pub use graph::ConstraintGraph;

use crate::logic::{Constraint, LogicError};
use rand::Rng;
use thiserror::Error;

/// Tolerance for entries straying outside `[0, 1]`.
pub const ENTRY_TOLERANCE: f64 = 1e-12;
/// Tolerance for row sums straying from 1.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RelaxError {
    #[error("matrix data has {got} entries, expected {rows} x {cols} = {expected}")]
    ShapeMismatch {
        rows: usize,
        cols: usize,
        got: usize,
        expected: usize,
    },
    #[error("matrix must have at least one row and one column")]
    EmptyMatrix,
    #[error("entry ({row}, {col}) = {value} is outside [0, 1]")]
    EntryOutOfRange { row: usize, col: usize, value: f64 },
    #[error("row {row} sums to {sum}, expected 1")]
    RowNotStochastic { row: usize, sum: f64 },
    #[error("entry ({row}, {col}) = {value} is not a log-probability (> 0)")]
    NotLogProbability { row: usize, col: usize, value: f64 },
    #[error("constraint does not fit a {rows} x {cols} matrix: {source}")]
    DimensionMismatch {
        rows: usize,
        cols: usize,
        source: LogicError,
    },
}

/// Row-stochastic `V x T` matrix: every entry in `[0, 1]`, every row summing
/// to 1 within [`ROW_SUM_TOLERANCE`].
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl ProbabilityMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, RelaxError> {
        if rows == 0 || cols == 0 {
            return Err(RelaxError::EmptyMatrix);
        }
        if data.len() != rows * cols {
            return Err(RelaxError::ShapeMismatch {
                rows,
                cols,
                got: data.len(),
                expected: rows * cols,
            });
        }
        for (i, &x) in data.iter().enumerate() {
            if !(-ENTRY_TOLERANCE..=1.0 + ENTRY_TOLERANCE).contains(&x) {
                return Err(RelaxError::EntryOutOfRange {
                    row: i / cols,
                    col: i % cols,
                    value: x,
                });
            }
        }
        for row in 0..rows {
            let sum: f64 = data[row * cols..(row + 1) * cols].iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(RelaxError::RowNotStochastic { row, sum });
            }
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, RelaxError> {
        let cols = rows.first().map_or(0, Vec::len);
        let count = rows.len();
        let mut data = Vec::with_capacity(count * cols);
        for row in &rows {
            if row.len() != cols {
                return Err(RelaxError::ShapeMismatch {
                    rows: count,
                    cols,
                    got: row.len(),
                    expected: cols,
                });
            }
            data.extend_from_slice(row);
        }
        Self::new(count, cols, data)
    }

    /// Number of identifiers, `V`.
    pub fn ident_count(&self) -> usize {
        self.rows
    }

    /// Number of types, `T`.
    pub fn type_count(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Componentwise logarithm, with `log 0 = -inf`.
    pub fn ln(&self) -> LogProbMatrix {
        LogProbMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| x.ln()).collect(),
        }
    }
}

/// Componentwise log of a probability matrix: entries in `[-inf, 0]`, each
/// row exponentiating back to a distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct LogProbMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl LogProbMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, RelaxError> {
        if rows == 0 || cols == 0 {
            return Err(RelaxError::EmptyMatrix);
        }
        if data.len() != rows * cols {
            return Err(RelaxError::ShapeMismatch {
                rows,
                cols,
                got: data.len(),
                expected: rows * cols,
            });
        }
        for (i, &x) in data.iter().enumerate() {
            if x > 0.0 || x.is_nan() {
                return Err(RelaxError::NotLogProbability {
                    row: i / cols,
                    col: i % cols,
                    value: x,
                });
            }
        }
        for row in 0..rows {
            let sum: f64 = data[row * cols..(row + 1) * cols]
                .iter()
                .map(|&x| x.exp())
                .sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(RelaxError::RowNotStochastic { row, sum });
            }
        }
        Ok(Self { rows, cols, data })
    }

    pub fn ident_count(&self) -> usize {
        self.rows
    }

    pub fn type_count(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// Continuous (product t-norm) value of a constraint under a probability
/// matrix. Shared subformulas are evaluated once: the constraint is
/// hash-consed into a DAG first.
pub fn eval_prob(p: &ProbabilityMatrix, constraint: &Constraint) -> Result<f64, RelaxError> {
    ConstraintGraph::compile(constraint, p.ident_count(), p.type_count())?.eval_prob(p)
}

/// Log-space value of a constraint under a log-probability matrix, equal to
/// `ln(eval_prob(p, e))` for `l = p.ln()` but computed entirely in
/// numerically safe log arithmetic.
pub fn eval_log(l: &LogProbMatrix, constraint: &Constraint) -> Result<f64, RelaxError> {
    ConstraintGraph::compile(constraint, l.ident_count(), l.type_count())?.eval_log(l)
}

/// Both De Morgan identities evaluated under `p`. Each pair is equal as a
/// mathematical identity of the continuous semantics; callers assert the
/// tolerance they care about.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualityCheck {
    /// `not (e1 and e2)` versus `(not e1) or (not e2)`.
    pub negated_and: (f64, f64),
    /// `not (e1 or e2)` versus `(not e1) and (not e2)`.
    pub negated_or: (f64, f64),
}

pub fn check_duality(
    p: &ProbabilityMatrix,
    e1: &Constraint,
    e2: &Constraint,
) -> Result<DualityCheck, RelaxError> {
    let not_and = Constraint::not(Constraint::and(e1.clone(), e2.clone()));
    let or_nots = Constraint::or(Constraint::not(e1.clone()), Constraint::not(e2.clone()));
    let not_or = Constraint::not(Constraint::or(e1.clone(), e2.clone()));
    let and_nots = Constraint::and(Constraint::not(e1.clone()), Constraint::not(e2.clone()));
    Ok(DualityCheck {
        negated_and: (eval_prob(p, &not_and)?, eval_prob(p, &or_nots)?),
        negated_or: (eval_prob(p, &not_or)?, eval_prob(p, &and_nots)?),
    })
}

/// Random row-stochastic matrix with rows drawn from the uniform simplex
/// (normalised exponentials). Test and benchmark support.
pub fn random_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> ProbabilityMatrix {
    let mut data = vec![0.0; rows * cols];
    for row in data.chunks_mut(cols) {
        let mut sum = 0.0;
        for x in row.iter_mut() {
            *x = -rng.gen::<f64>().max(f64::MIN_POSITIVE).ln();
            sum += *x;
        }
        for x in row.iter_mut() {
            *x /= sum;
        }
    }
    ProbabilityMatrix::new(rows, cols, data).expect("normalised rows are stochastic")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{enumerate_environments, gen, DEFAULT_ENUMERATION_CAP};
    use proptest::prelude::*;

    fn half_matrix() -> ProbabilityMatrix {
        ProbabilityMatrix::from_rows(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap()
    }

    #[test]
    fn matrix_validation() {
        assert!(matches!(
            ProbabilityMatrix::from_rows(vec![vec![0.5, 0.6]]),
            Err(RelaxError::RowNotStochastic { .. })
        ));
        assert!(matches!(
            ProbabilityMatrix::from_rows(vec![vec![1.5, -0.5]]),
            Err(RelaxError::EntryOutOfRange { .. })
        ));
        assert!(matches!(
            LogProbMatrix::new(1, 2, vec![0.1, -0.5]),
            Err(RelaxError::NotLogProbability { .. })
        ));
    }

    #[test]
    fn product_t_norm_conjunction() {
        let p = half_matrix();
        let e = Constraint::and(Constraint::is(0, 0), Constraint::is(1, 0));
        assert!((eval_prob(&p, &e).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn dual_disjunction() {
        let p = half_matrix();
        let e = Constraint::or(Constraint::is(0, 0), Constraint::is(1, 0));
        assert!((eval_prob(&p, &e).unwrap() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let p = half_matrix();
        assert!(matches!(
            eval_prob(&p, &Constraint::is(5, 0)),
            Err(RelaxError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn relaxation_agrees_with_boolean_semantics_exhaustively() {
        // On one-hot matrices the continuous value is exactly 0 or 1 and is 1
        // precisely on satisfying environments. Exhaustive over V, T <= 3 and
        // generated formulas of depth <= 4.
        let mut rng = gen::seeded_rng(29);
        for v in 1..=3usize {
            for t in 1..=3usize {
                for _ in 0..120 {
                    let e = gen::random_constraint(&mut rng, v, t, 4);
                    for env in enumerate_environments(v, t, DEFAULT_ENUMERATION_CAP).unwrap() {
                        let value = eval_prob(&env.to_binary_matrix(), &e).unwrap();
                        assert!(value == 0.0 || value == 1.0, "value = {value}");
                        assert_eq!(value == 1.0, env.satisfies(&e).unwrap());
                    }
                }
            }
        }
    }

    #[test]
    fn duality_on_uniform_rows() {
        let p = half_matrix();
        let atom = Constraint::is(0, 0);
        let check = check_duality(&p, &atom, &atom).unwrap();
        assert_eq!(check.negated_and.0, 0.75);
        assert_eq!(check.negated_and.1, 0.75);
    }

    #[test]
    fn duality_on_one_hot_is_binary() {
        let mut rng = gen::seeded_rng(31);
        for _ in 0..50 {
            let env = gen::random_environment(&mut rng, 3, 3);
            let p = env.to_binary_matrix();
            let e1 = gen::random_constraint(&mut rng, 3, 3, 3);
            let e2 = gen::random_constraint(&mut rng, 3, 3, 3);
            let check = check_duality(&p, &e1, &e2).unwrap();
            for pair in [check.negated_and, check.negated_or] {
                assert!(pair.0 == 0.0 || pair.0 == 1.0);
                assert_eq!(pair.0, pair.1);
            }
        }
    }

    #[test]
    fn duality_random_triples() {
        let mut rng = gen::seeded_rng(37);
        for _ in 0..1000 {
            let p = random_matrix(&mut rng, 3, 3);
            let e1 = gen::random_constraint(&mut rng, 3, 3, 4);
            let e2 = gen::random_constraint(&mut rng, 3, 3, 4);
            let check = check_duality(&p, &e1, &e2).unwrap();
            assert!((check.negated_and.0 - check.negated_and.1).abs() < 1e-12);
            assert!((check.negated_or.0 - check.negated_or.1).abs() < 1e-12);
        }
    }

    #[test]
    fn log_eval_of_one_hot_satisfied_constraint_is_zero() {
        let env = crate::logic::TypeEnvironment::new(vec![0, 0], 2).unwrap();
        let e = Constraint::and(Constraint::is(0, 0), Constraint::is(1, 0));
        let l = env.to_binary_matrix().ln();
        assert_eq!(eval_log(&l, &e).unwrap(), 0.0);
    }

    #[test]
    fn log_eval_of_conjunction_is_sum_of_logs() {
        let p = half_matrix();
        let e = Constraint::and(Constraint::is(0, 0), Constraint::is(1, 0));
        let got = eval_log(&p.ln(), &e).unwrap();
        assert!((got - 0.25f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn log_and_prob_evaluators_agree() {
        let mut rng = gen::seeded_rng(41);
        for _ in 0..1000 {
            let p = random_matrix(&mut rng, 3, 4);
            let e = gen::random_constraint(&mut rng, 3, 4, 5);
            let direct = eval_prob(&p, &e).unwrap();
            let logged = eval_log(&p.ln(), &e).unwrap();
            assert!(!logged.is_nan());
            if direct > 1e-8 {
                assert!(
                    (logged - direct.ln()).abs() < 1e-6,
                    "log route {logged} vs direct {}",
                    direct.ln()
                );
            }
        }
    }

    proptest! {
        #[test]
        fn eval_prob_stays_in_unit_interval(seed in 0u64..1000) {
            let mut rng = gen::seeded_rng(seed);
            let p = random_matrix(&mut rng, 4, 3);
            let e = gen::random_constraint(&mut rng, 4, 3, 6);
            let value = eval_prob(&p, &e).unwrap();
            prop_assert!((0.0..=1.0).contains(&value));
            prop_assert!(value.is_finite());
        }

        #[test]
        fn row_sums_survive_ln_round_trip(seed in 0u64..200) {
            let mut rng = gen::seeded_rng(seed);
            let p = random_matrix(&mut rng, 3, 5);
            let l = p.ln();
            for row in 0..3 {
                let sum: f64 = (0..5).map(|c| l.get(row, c).exp()).sum();
                prop_assert!((sum - 1.0).abs() < 1e-9);
            }
        }
    }
}
