//! Constrained optimisation over relaxed type assignments.
//!
//! The simplex constraints on the probability matrix are removed by a
//! per-row softmax reparameterisation of an unconstrained matrix `Y`; the
//! remaining equality constraint (the relaxed formula must evaluate to 1)
//! is folded into the objective with a multiplier:
//!
//! ```text
//! J(Y) = sum_v || softmax(y_v) - mu_v ||^2  -  lambda * (f(softmax(Y)) - 1)
//! ```
//!
//! where `f` is the continuous constraint value and `mu_v` are the learned
//! per-identifier type distributions. Gradients are reverse-mode through the
//! shared-subformula DAG, the softmax and the squared-error term; RMSprop
//! minimises.
//!
//! The relaxation is nonconvex, so the solve takes several precautions, all
//! deterministic per seed: the constraint term is the log-space value by
//! default (see [`OptimiserConfig::log_space`]), the multiplier grows with
//! the residual from a small start (see [`LambdaMode`]), solves with a fit
//! term warm-start at the evidence matrix, and the iteration budget is
//! split across diversified restarts when an attempt stalls.

use crate::logic::{Constraint, TypeEnvironment};
use crate::natural::NaturalConstraintMatrix;
use crate::relax::{ConstraintGraph, ProbabilityMatrix, RelaxError};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OptimError {
    #[error("invalid optimiser configuration: {0}")]
    InvalidConfig(String),
    #[error("assignment is {y_rows} x {y_cols} but natural matrix is {m_rows} x {m_cols}")]
    ShapeMismatch {
        y_rows: usize,
        y_cols: usize,
        m_rows: usize,
        m_cols: usize,
    },
    #[error("assignment entries must be finite")]
    NonFiniteAssignment,
    #[error(transparent)]
    Relax(#[from] RelaxError),
}

/// Unconstrained pre-softmax score matrix `Y`.
#[derive(Debug, Clone, PartialEq)]
pub struct RelaxedAssignment {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl RelaxedAssignment {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, OptimError> {
        if data.len() != rows * cols || rows == 0 || cols == 0 {
            return Err(OptimError::InvalidConfig(format!(
                "assignment data has {} entries, expected {rows} x {cols}",
                data.len()
            )));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(OptimError::NonFiniteAssignment);
        }
        Ok(Self { rows, cols, data })
    }

    pub fn ident_count(&self) -> usize {
        self.rows
    }

    pub fn type_count(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Row-wise softmax. Sound for any finite `Y`: the image always satisfies
    /// the probability-matrix invariants.
    pub fn softmax(&self) -> ProbabilityMatrix {
        let mut data = vec![0.0; self.data.len()];
        for (out, row) in data.chunks_mut(self.cols).zip(self.data.chunks(self.cols)) {
            softmax_into(row, out);
        }
        ProbabilityMatrix::new(self.rows, self.cols, data).expect("softmax rows are stochastic")
    }
}

/// Numerically stable softmax of one row: shifts by the maximum before
/// exponentiating, then normalises.
pub fn softmax_row(y: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; y.len()];
    softmax_into(y, &mut out);
    out
}

fn softmax_into(y: &[f64], out: &mut [f64]) {
    let max = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for (o, &x) in out.iter_mut().zip(y) {
        *o = (x - max).exp();
        sum += *o;
    }
    for o in out.iter_mut() {
        *o /= sum;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LambdaMode {
    /// Keep the multiplier fixed at its initial value. With a large value
    /// the constraint dominates from the first iteration, which commits
    /// rows to corners before the evidence terms have spoken; frustrated
    /// instances can freeze there (saturated softmax rows have vanishing
    /// gradients).
    FixedPenalty,
    /// Gradient ascent on the multiplier alongside descent on `Y`:
    /// `lambda += step * (1 - f)` per iteration. Starting small, the fit
    /// term shapes the iterate first and the constraint pressure grows
    /// until satisfied - the standard penalty-continuation schedule. This
    /// is the default.
    DualAscent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimiserConfig {
    pub learning_rate: f64,
    pub rmsprop_decay: f64,
    pub epsilon: f64,
    pub max_iterations: usize,
    /// Convergence threshold on the constraint residual `1 - f`.
    pub convergence_threshold: f64,
    /// Convergence threshold on the infinity norm of the `Y` gradient. Sits
    /// at RMSprop's noise-floor scale for the default learning rate.
    pub grad_norm_tolerance: f64,
    pub initial_lambda: f64,
    pub lambda_mode: LambdaMode,
    pub dual_ascent_step: f64,
    pub rng_seed: u64,
    /// Extra optimisation attempts from diversified starting points when an
    /// attempt fails to converge. The relaxation is nonconvex (conflicting
    /// evidence can carve a genuine local maximum into the constraint
    /// surface), so the solve splits its iteration budget across restarts:
    /// evidence-anchored starts first, then uniform ones that let the
    /// constraint term pick the basin. The first converged attempt wins.
    pub restarts: usize,
    /// Penalise the log-space constraint value `-lambda * ln f` instead of
    /// the probability-space residual `lambda * (1 - f)`. Both vanish
    /// exactly at satisfaction, but a conjunction of many constraints makes
    /// `f` a near-zero product at interior points and its gradient vanishes
    /// with it; the log form keeps every conjunct's gradient alive, so this
    /// is the default.
    pub log_space: bool,
    /// Record a per-iteration trace in the report.
    pub record_trace: bool,
}

impl Default for OptimiserConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            rmsprop_decay: 0.9,
            epsilon: 1e-8,
            max_iterations: 5000,
            convergence_threshold: 1e-4,
            grad_norm_tolerance: 5e-2,
            initial_lambda: 1.0,
            lambda_mode: LambdaMode::DualAscent,
            dual_ascent_step: 1.0,
            rng_seed: 0,
            restarts: 3,
            log_space: true,
            record_trace: false,
        }
    }
}

impl OptimiserConfig {
    pub fn validate(&self) -> Result<(), OptimError> {
        let check = |ok: bool, msg: &str| {
            if ok {
                Ok(())
            } else {
                Err(OptimError::InvalidConfig(msg.to_string()))
            }
        };
        check(self.learning_rate > 0.0, "learning rate must be positive")?;
        check(
            self.rmsprop_decay > 0.0 && self.rmsprop_decay < 1.0,
            "rmsprop decay must lie in (0, 1)",
        )?;
        check(self.epsilon > 0.0, "epsilon must be positive")?;
        check(self.max_iterations > 0, "max iterations must be positive")?;
        check(
            self.convergence_threshold > 0.0,
            "convergence threshold must be positive",
        )?;
        check(
            self.grad_norm_tolerance > 0.0,
            "gradient norm tolerance must be positive",
        )?;
        check(self.initial_lambda > 0.0, "initial lambda must be positive")?;
        check(
            self.dual_ascent_step > 0.0,
            "dual ascent step must be positive",
        )
    }
}

/// Overflow guard on pre-softmax scores during solves. A gap of twice this
/// bound pins row probabilities within 1e-52 of a one-hot corner, far past
/// every tolerance in use, so the clamp never affects a converging run.
const SCORE_BOUND: f64 = 60.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub iteration: usize,
    pub objective: f64,
    pub residual: f64,
    pub grad_norm: f64,
    pub lambda: f64,
}

/// Outcome of a solve: the optimised probability matrix plus diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub matrix: ProbabilityMatrix,
    pub objective: f64,
    /// Continuous constraint value at the solution, in `[0, 1]`.
    pub constraint_value: f64,
    /// Total iterations consumed, summed across restart attempts; never
    /// exceeds the configured maximum.
    pub iterations: usize,
    pub converged: bool,
    pub final_lambda: f64,
    /// Per-iteration trace of the returned attempt, when recording was on.
    pub trace: Option<Vec<TraceStep>>,
}

struct Evaluation {
    objective: f64,
    constraint_value: f64,
    grad: Vec<f64>,
    grad_norm: f64,
}

/// Objective and gradient at one point. `graph` is `None` when there is no
/// logical constraint (the fit term alone remains), `natural` is `None` in
/// logical-only mode (the constraint term alone remains).
fn evaluate(
    y: &[f64],
    rows: usize,
    cols: usize,
    lambda: f64,
    natural: Option<&NaturalConstraintMatrix>,
    graph: Option<&ConstraintGraph>,
    log_space: bool,
) -> Evaluation {
    let mut p = vec![0.0; y.len()];
    for (out, row) in p.chunks_mut(cols).zip(y.chunks(cols)) {
        softmax_into(row, out);
    }

    let mut fit = 0.0;
    // Gradient of the objective w.r.t. probability entries.
    let mut grad_p = vec![0.0; y.len()];
    if let Some(m) = natural {
        for v in 0..rows {
            let mu = m.row(v);
            for t in 0..cols {
                let diff = p[v * cols + t] - mu[t];
                fit += diff * diff;
                grad_p[v * cols + t] += 2.0 * diff;
            }
        }
    }

    // Gradient of the objective w.r.t. log-probability entries (log route).
    let mut grad_l = vec![0.0; y.len()];
    let mut constraint_value = 1.0;
    let mut constraint_term = 0.0;
    if let Some(graph) = graph {
        if log_space {
            // Penalise the log-space constraint value directly. Both forms
            // share the same constrained solutions (log f = 0 iff f = 1),
            // but the gradient of log f is the gradient of f divided by f:
            // through a deep conjunction f is a product of many factors and
            // vanishes at interior points, taking its gradient with it,
            // while log f keeps every conjunct's pull at full strength.
            let l: Vec<f64> = p.iter().map(|&x| x.ln()).collect();
            let values = graph.forward_log(&l);
            let log_f = values[graph.root()];
            constraint_value = log_f.exp();
            constraint_term = -lambda * log_f;
            let back = graph.backward_log(&values, -lambda);
            for (g, b) in grad_l.iter_mut().zip(back) {
                *g += b;
            }
        } else {
            let values = graph.forward_prob(&p);
            constraint_value = values[graph.root()];
            constraint_term = -lambda * (constraint_value - 1.0);
            let back = graph.backward_prob(&values, -lambda);
            for (g, b) in grad_p.iter_mut().zip(back) {
                *g += b;
            }
        }
    }

    let objective = fit + constraint_term;

    // Chain both gradient pieces through the softmax. For a row p = softmax(y):
    //   dJ/dy_i = p_i * (g_i - sum_t g_t p_t')           via probabilities,
    //   dJ/dy_i = gl_i - p_i * sum_t gl_t                via log-probabilities.
    let mut grad = vec![0.0; y.len()];
    for v in 0..rows {
        let p_row = &p[v * cols..(v + 1) * cols];
        let gp_row = &grad_p[v * cols..(v + 1) * cols];
        let gl_row = &grad_l[v * cols..(v + 1) * cols];
        let dot: f64 = gp_row.iter().zip(p_row).map(|(g, p)| g * p).sum();
        let gl_sum: f64 = gl_row.iter().sum();
        for t in 0..cols {
            grad[v * cols + t] = p_row[t] * (gp_row[t] - dot) + gl_row[t] - p_row[t] * gl_sum;
        }
    }

    let grad_norm = grad.iter().fold(0.0f64, |acc, g| acc.max(g.abs()));
    Evaluation {
        objective,
        constraint_value,
        grad,
        grad_norm,
    }
}

/// Combined objective value at `y`.
pub fn objective(
    y: &RelaxedAssignment,
    lambda: f64,
    natural: &NaturalConstraintMatrix,
    constraint: &Constraint,
) -> Result<f64, OptimError> {
    let (rows, cols) = check_shapes(y, natural)?;
    let graph = ConstraintGraph::compile(constraint, rows, cols)?;
    Ok(evaluate(
        y.as_slice(),
        rows,
        cols,
        lambda,
        Some(natural),
        Some(&graph),
        false,
    )
    .objective)
}

/// Reverse-mode gradient of the combined objective with respect to `Y`,
/// returned row-major.
pub fn gradient(
    y: &RelaxedAssignment,
    lambda: f64,
    natural: &NaturalConstraintMatrix,
    constraint: &Constraint,
) -> Result<Vec<f64>, OptimError> {
    let (rows, cols) = check_shapes(y, natural)?;
    let graph = ConstraintGraph::compile(constraint, rows, cols)?;
    Ok(evaluate(
        y.as_slice(),
        rows,
        cols,
        lambda,
        Some(natural),
        Some(&graph),
        false,
    )
    .grad)
}

fn check_shapes(
    y: &RelaxedAssignment,
    natural: &NaturalConstraintMatrix,
) -> Result<(usize, usize), OptimError> {
    if y.ident_count() != natural.ident_count() || y.type_count() != natural.type_count() {
        return Err(OptimError::ShapeMismatch {
            y_rows: y.ident_count(),
            y_cols: y.type_count(),
            m_rows: natural.ident_count(),
            m_cols: natural.type_count(),
        });
    }
    Ok((y.ident_count(), y.type_count()))
}

/// Minimises the combined objective with RMSprop. Fit term against `natural`,
/// constraint term from `constraint`.
pub fn solve(
    natural: &NaturalConstraintMatrix,
    constraint: &Constraint,
    cfg: &OptimiserConfig,
) -> Result<SolveReport, OptimError> {
    let rows = natural.ident_count();
    let cols = natural.type_count();
    let graph = ConstraintGraph::compile(constraint, rows, cols)?;
    run(
        rows,
        cols,
        cfg.initial_lambda,
        Some(natural),
        Some(&graph),
        cfg,
    )
}

/// Fit-only solve: no logical constraint, the minimiser is the natural
/// matrix itself. Used by the pipeline when a file yields no constraints.
pub fn solve_unconstrained(
    natural: &NaturalConstraintMatrix,
    cfg: &OptimiserConfig,
) -> Result<SolveReport, OptimError> {
    run(
        natural.ident_count(),
        natural.type_count(),
        cfg.initial_lambda,
        Some(natural),
        None,
        cfg,
    )
}

/// Maximises the continuous constraint value alone (the fit term is
/// dropped); equivalently minimises the residual `1 - f`. The multiplier is
/// pinned to 1: with no second term it only rescales the gradient.
pub fn solve_logical_only(
    constraint: &Constraint,
    ident_count: usize,
    type_count: usize,
    cfg: &OptimiserConfig,
) -> Result<SolveReport, OptimError> {
    let graph = ConstraintGraph::compile(constraint, ident_count, type_count)?;
    let cfg = OptimiserConfig {
        initial_lambda: 1.0,
        lambda_mode: LambdaMode::FixedPenalty,
        ..cfg.clone()
    };
    run(ident_count, type_count, 1.0, None, Some(&graph), &cfg)
}

fn run(
    rows: usize,
    cols: usize,
    initial_lambda: f64,
    natural: Option<&NaturalConstraintMatrix>,
    graph: Option<&ConstraintGraph>,
    cfg: &OptimiserConfig,
) -> Result<SolveReport, OptimError> {
    cfg.validate()?;
    let attempts = cfg.restarts + 1;
    let slice = (cfg.max_iterations / attempts).max(1);
    let mut used = 0;
    let mut best: Option<SolveReport> = None;
    for attempt in 0..attempts {
        let budget = if attempt == attempts - 1 {
            cfg.max_iterations.saturating_sub(used).max(1)
        } else {
            slice
        };
        let y = initial_scores(rows, cols, natural, cfg.rng_seed, attempt);
        let mut report = run_attempt(y, rows, cols, initial_lambda, natural, graph, cfg, budget)?;
        used += report.iterations;
        report.iterations = used;
        if report.converged {
            return Ok(report);
        }
        let better = match &best {
            None => true,
            Some(best) => report.constraint_value > best.constraint_value,
        };
        if better {
            best = Some(report);
        }
        if used >= cfg.max_iterations {
            break;
        }
    }
    let mut report = best.expect("at least one attempt ran");
    report.iterations = used;
    Ok(report)
}

/// Starting point for one attempt. With a fit term the first attempts start
/// at the natural evidence itself: RMSprop's per-coordinate normalisation
/// flattens gradient magnitudes, so from a symmetric start the constraint
/// term picks an arbitrary satisfying corner instead of the one the
/// evidence favours. Later attempts (and constraint-only solves) start near
/// uniform with escalating noise, letting the constraint term choose the
/// basin when the evidence-anchored start led into a local optimum.
fn initial_scores(
    rows: usize,
    cols: usize,
    natural: Option<&NaturalConstraintMatrix>,
    seed: u64,
    attempt: usize,
) -> Vec<f64> {
    let mut rng = crate::logic::gen::seeded_rng(
        seed.wrapping_add((attempt as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)),
    );
    let noise = match attempt {
        0 | 1 => 0.01,
        2 | 3 => 0.5,
        _ => 2.0,
    };
    let warm = attempt.is_multiple_of(2);
    match natural {
        Some(m) if warm => m
            .as_slice()
            .iter()
            .map(|&mu| mu.max(1e-12).ln().max(-SCORE_BOUND) + rng.gen_range(-noise..noise))
            .collect(),
        _ => (0..rows * cols)
            .map(|_| rng.gen_range(-noise..noise))
            .collect(),
    }
}

#[allow(clippy::too_many_arguments)]
fn run_attempt(
    mut y: Vec<f64>,
    rows: usize,
    cols: usize,
    initial_lambda: f64,
    natural: Option<&NaturalConstraintMatrix>,
    graph: Option<&ConstraintGraph>,
    cfg: &OptimiserConfig,
    budget: usize,
) -> Result<SolveReport, OptimError> {
    let mut sq_avg = vec![0.0; y.len()];
    let mut lambda = initial_lambda;
    let mut trace = cfg.record_trace.then(Vec::new);
    let mut iterations = 0;
    let mut converged = false;

    let mut state = evaluate(&y, rows, cols, lambda, natural, graph, cfg.log_space);
    loop {
        let residual = 1.0 - state.constraint_value;
        if let Some(trace) = trace.as_mut() {
            trace.push(TraceStep {
                iteration: iterations,
                objective: state.objective,
                residual,
                grad_norm: state.grad_norm,
                lambda,
            });
        }
        if residual < cfg.convergence_threshold && state.grad_norm < cfg.grad_norm_tolerance {
            converged = true;
            break;
        }
        if iterations >= budget {
            break;
        }
        for (i, g) in state.grad.iter().enumerate() {
            sq_avg[i] = cfg.rmsprop_decay * sq_avg[i] + (1.0 - cfg.rmsprop_decay) * g * g;
            y[i] -= cfg.learning_rate * g / (sq_avg[i].sqrt() + cfg.epsilon);
            // Overflow guard only; see SCORE_BOUND.
            y[i] = y[i].clamp(-SCORE_BOUND, SCORE_BOUND);
        }
        if cfg.lambda_mode == LambdaMode::DualAscent {
            lambda += cfg.dual_ascent_step * residual;
        }
        iterations += 1;
        state = evaluate(&y, rows, cols, lambda, natural, graph, cfg.log_space);
    }

    let assignment = RelaxedAssignment::new(rows, cols, y)?;
    Ok(SolveReport {
        matrix: assignment.softmax(),
        objective: state.objective,
        constraint_value: state.constraint_value,
        iterations,
        converged,
        final_lambda: lambda,
        trace,
    })
}

/// Per-row argmax; ties break towards the lowest type index.
pub fn discretise(p: &ProbabilityMatrix) -> TypeEnvironment {
    let assignment = (0..p.ident_count())
        .map(|v| {
            let row = p.row(v);
            let mut best = 0;
            for (t, &x) in row.iter().enumerate() {
                if x > row[best] {
                    best = t;
                }
            }
            best
        })
        .collect();
    TypeEnvironment::new(assignment, p.type_count()).expect("argmax indices are in range")
}
