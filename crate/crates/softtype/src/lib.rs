//! softtype: type inference by numerical optimisation over relaxed logical
//! constraints.
//!
//! Hard type constraints extracted from a program are propositional formulas
//! over atoms `ident is Type`. Relaxing those formulas into continuous space
//! (product t-norm semantics over probability matrices) turns type inference
//! into a smooth optimisation problem, which lets them be combined with soft,
//! learned evidence: a character-level LSTM that predicts a type distribution
//! for each identifier from its name alone. A single Lagrangian objective
//! trades the two sources off, RMSprop minimises it, and per-row argmax turns
//! the optimised probability matrix back into discrete annotations.
//!
//! The crate is organised around that pipeline:
//!
//! - [`logic`]: type universe, identifier slots, the constraint AST, boolean
//!   satisfaction, and the textual constraint DSL.
//! - [`relax`]: probability matrices and the continuous (and log-space)
//!   evaluators over a hash-consed constraint DAG.
//! - [`optim`]: the combined objective, reverse-mode gradients, the RMSprop
//!   solve loop, and discretisation.
//! - [`natural`]: the from-scratch char-level LSTM, its training loop, and
//!   probability-matrix ingestion for externally produced predictions.
//! - [`frontend`]: a small annotatable toy language (`.tl` files), its
//!   parser, annotation stripping, and constraint generation.
//! - [`pipeline`]: end-to-end inference modes (logical / natural / combined),
//!   the evaluation harness, batch runs, and report formats.
//!
//! Each major capability has a runnable example under `examples/`; the
//! `softtype` binary exposes the same pipeline as a small CLI.

pub mod frontend;
pub mod logic;
pub mod natural;
pub mod optim;
pub mod pipeline;
pub mod relax;

pub use logic::{Constraint, IdentifierSet, TypeEnvironment, TypeUniverse};
pub use optim::{OptimiserConfig, SolveReport};
pub use relax::{LogProbMatrix, ProbabilityMatrix};
