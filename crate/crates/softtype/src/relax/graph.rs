//! Hash-consed constraint DAG with forward evaluation and reverse-mode
//! adjoint passes, in probability space and in log space.
//!
//! Union-type disjunctions repeat atoms heavily; interning structurally
//! identical subformulas means each distinct subformula is computed once per
//! evaluation and its adjoint accumulated across all of its uses.

use super::{LogProbMatrix, ProbabilityMatrix, RelaxError};
use crate::logic::Constraint;
use std::collections::HashMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Node {
    Is { ident: usize, ty: usize },
    Not(usize),
    And(usize, usize),
    Or(usize, usize),
}

/// A constraint compiled to a DAG. Nodes are stored in topological order
/// (children strictly before parents), so evaluation is a single forward
/// sweep and differentiation a single reverse sweep.
#[derive(Debug, Clone)]
pub struct ConstraintGraph {
    nodes: Vec<Node>,
    root: usize,
    ident_count: usize,
    type_count: usize,
}

impl ConstraintGraph {
    pub fn compile(
        constraint: &Constraint,
        ident_count: usize,
        type_count: usize,
    ) -> Result<Self, RelaxError> {
        constraint
            .validate(ident_count, type_count)
            .map_err(|source| RelaxError::DimensionMismatch {
                rows: ident_count,
                cols: type_count,
                source,
            })?;
        let mut graph = Self {
            nodes: Vec::new(),
            root: 0,
            ident_count,
            type_count,
        };
        let mut interned = HashMap::new();
        graph.root = graph.intern(constraint, &mut interned);
        Ok(graph)
    }

    fn intern(&mut self, constraint: &Constraint, interned: &mut HashMap<Node, usize>) -> usize {
        let node = match constraint {
            Constraint::Is { ident, ty } => Node::Is {
                ident: *ident,
                ty: *ty,
            },
            Constraint::Not(inner) => Node::Not(self.intern(inner, interned)),
            Constraint::And(lhs, rhs) => {
                let l = self.intern(lhs, interned);
                let r = self.intern(rhs, interned);
                Node::And(l, r)
            }
            Constraint::Or(lhs, rhs) => {
                let l = self.intern(lhs, interned);
                let r = self.intern(rhs, interned);
                Node::Or(l, r)
            }
        };
        *interned.entry(node).or_insert_with(|| {
            self.nodes.push(node);
            self.nodes.len() - 1
        })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Index of the root node in the topological node order.
    pub fn root(&self) -> usize {
        self.root
    }

    pub fn ident_count(&self) -> usize {
        self.ident_count
    }

    pub fn type_count(&self) -> usize {
        self.type_count
    }

    /// Marks which identifiers occur in at least one atom.
    pub fn mentioned_identifiers(&self) -> Vec<bool> {
        let mut seen = vec![false; self.ident_count];
        for node in &self.nodes {
            if let Node::Is { ident, .. } = node {
                seen[*ident] = true;
            }
        }
        seen
    }

    fn check_dims(&self, rows: usize, cols: usize) -> Result<(), RelaxError> {
        if rows != self.ident_count || cols != self.type_count {
            return Err(RelaxError::ShapeMismatch {
                rows: self.ident_count,
                cols: self.type_count,
                got: rows * cols,
                expected: self.ident_count * self.type_count,
            });
        }
        Ok(())
    }

    pub fn eval_prob(&self, p: &ProbabilityMatrix) -> Result<f64, RelaxError> {
        self.check_dims(p.ident_count(), p.type_count())?;
        Ok(self.forward_prob(p.as_slice())[self.root])
    }

    pub fn eval_log(&self, l: &LogProbMatrix) -> Result<f64, RelaxError> {
        self.check_dims(l.ident_count(), l.type_count())?;
        Ok(self.forward_log(l.as_slice())[self.root])
    }

    /// Forward sweep in probability space over a raw row-major `V x T` slice.
    /// `or` is computed as `1 - (1-x)(1-y)`, algebraically equal to
    /// `x + y - x*y` but closed over `[0, 1]` in floating point.
    pub(crate) fn forward_prob(&self, p: &[f64]) -> Vec<f64> {
        let mut values = vec![0.0; self.nodes.len()];
        for (i, node) in self.nodes.iter().enumerate() {
            values[i] = match *node {
                Node::Is { ident, ty } => p[ident * self.type_count + ty],
                Node::Not(x) => 1.0 - values[x],
                Node::And(a, b) => values[a] * values[b],
                Node::Or(a, b) => 1.0 - (1.0 - values[a]) * (1.0 - values[b]),
            };
        }
        values
    }

    /// Reverse sweep: adjoints of the root value with respect to every matrix
    /// entry, scaled by `out_grad`. `values` must come from `forward_prob`.
    pub(crate) fn backward_prob(&self, values: &[f64], out_grad: f64) -> Vec<f64> {
        let mut adjoint = vec![0.0; self.nodes.len()];
        adjoint[self.root] = out_grad;
        let mut grad = vec![0.0; self.ident_count * self.type_count];
        for (i, node) in self.nodes.iter().enumerate().rev() {
            let a = adjoint[i];
            if a == 0.0 {
                continue;
            }
            match *node {
                Node::Is { ident, ty } => grad[ident * self.type_count + ty] += a,
                Node::Not(x) => adjoint[x] -= a,
                Node::And(x, y) => {
                    adjoint[x] += a * values[y];
                    adjoint[y] += a * values[x];
                }
                Node::Or(x, y) => {
                    adjoint[x] += a * (1.0 - values[y]);
                    adjoint[y] += a * (1.0 - values[x]);
                }
            }
        }
        grad
    }

    /// Forward sweep in log space over a raw row-major slice of
    /// log-probabilities.
    pub(crate) fn forward_log(&self, l: &[f64]) -> Vec<f64> {
        let mut values = vec![0.0; self.nodes.len()];
        for (i, node) in self.nodes.iter().enumerate() {
            values[i] = match *node {
                Node::Is { ident, ty } => l[ident * self.type_count + ty],
                Node::Not(x) => log1mexp(values[x]),
                Node::And(a, b) => values[a] + values[b],
                Node::Or(a, b) => log_or(values[a], values[b]),
            };
        }
        values
    }

    /// Reverse sweep in log space: adjoints with respect to every
    /// log-probability entry.
    pub(crate) fn backward_log(&self, values: &[f64], out_grad: f64) -> Vec<f64> {
        let mut adjoint = vec![0.0; self.nodes.len()];
        adjoint[self.root] = out_grad;
        let mut grad = vec![0.0; self.ident_count * self.type_count];
        for (i, node) in self.nodes.iter().enumerate().rev() {
            let a = adjoint[i];
            if a == 0.0 {
                continue;
            }
            match *node {
                Node::Is { ident, ty } => grad[ident * self.type_count + ty] += a,
                Node::Not(x) => {
                    // d/dx log(1 - e^x) = -e^x / (1 - e^x) = -e^(x - out)
                    let d = -(values[x] - values[i]).exp();
                    if d.is_finite() {
                        adjoint[x] += a * d;
                    }
                }
                Node::And(x, y) => {
                    adjoint[x] += a;
                    adjoint[y] += a;
                }
                Node::Or(x, y) => {
                    // With O = log(e^x + e^y - e^(x+y)):
                    // dO/dx = e^(x - O) * (1 - e^y), symmetrically for y.
                    let out = values[i];
                    let dx = (values[x] - out).exp() * (-values[y].exp() + 1.0);
                    let dy = (values[y] - out).exp() * (-values[x].exp() + 1.0);
                    if dx.is_finite() {
                        adjoint[x] += a * dx;
                    }
                    if dy.is_finite() {
                        adjoint[y] += a * dy;
                    }
                }
            }
        }
        grad
    }
}

/// `log(1 - e^x)` for `x <= 0`, switching between `log(-expm1(x))` and
/// `log1p(-exp(x))` at `x = -ln 2` to keep full precision on both sides.
pub fn log1mexp(x: f64) -> f64 {
    if x == 0.0 {
        return f64::NEG_INFINITY;
    }
    if x > -std::f64::consts::LN_2 {
        (-x.exp_m1()).ln()
    } else {
        (-x.exp()).ln_1p()
    }
}

/// `log(e^x + e^y - e^(x+y))` for `x, y <= 0`: the log-space disjunction.
/// Factoring out the max keeps the summands in `[0, 2]`.
pub fn log_or(x: f64, y: f64) -> f64 {
    let (m, n) = if x >= y { (x, y) } else { (y, x) };
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    m + ((n - m).exp() - n.exp()).ln_1p()
}
