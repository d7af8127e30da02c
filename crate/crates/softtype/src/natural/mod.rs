//! The natural-constraint channel: learned, per-identifier type
//! distributions.
//!
//! The bundled model is a from-scratch character-level LSTM classifier over
//! identifier names (training included, no autograd framework underneath).
//! Externally produced predictions can be ingested instead through a small
//! JSON matrix format, so any model that outputs a probability vector per
//! identifier can drive the same pipeline.

mod corpus;
mod io;
mod lstm;
mod train;

pub(crate) use corpus::name_for_type;
pub use corpus::synthetic_naming_corpus;
pub use io::{load_checkpoint, load_matrix, save_checkpoint, save_matrix};
pub use lstm::{CharVocab, LstmModel};
pub use train::{train_model, LabelledCorpus, TrainConfig, TrainStats};

use crate::logic::IdentifierSet;
use thiserror::Error;

/// Row tolerance for natural-constraint rows.
pub const NATURAL_ROW_TOLERANCE: f64 = 1e-6;
/// Looser acceptance tolerance for rows read from external files; accepted
/// rows are renormalised to machine precision.
pub const LOAD_ROW_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum NaturalError {
    #[error("identifier name must be nonempty")]
    EmptyName,
    #[error("corpus must contain at least one labelled pair")]
    EmptyCorpus,
    #[error("label {label} out of range (T = {type_count})")]
    LabelOutOfRange { label: usize, type_count: usize },
    #[error("training diverged (non-finite loss) at epoch {epoch}")]
    Divergence { epoch: usize },
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("natural matrix row {row} sums to {sum}, expected 1")]
    RowNotStochastic { row: usize, sum: f64 },
    #[error("natural matrix file: {0}")]
    MatrixFormat(String),
    #[error("model checkpoint: {0}")]
    Checkpoint(String),
    #[error("corpus line {line}: {message}")]
    CorpusFormat { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// `V x T` matrix of learned type distributions, one row per identifier.
#[derive(Debug, Clone, PartialEq)]
pub struct NaturalConstraintMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl NaturalConstraintMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, NaturalError> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(NaturalError::MatrixFormat(format!(
                "matrix data has {} entries, expected {rows} x {cols}",
                data.len()
            )));
        }
        for row in 0..rows {
            let sum: f64 = data[row * cols..(row + 1) * cols].iter().sum();
            if (sum - 1.0).abs() > NATURAL_ROW_TOLERANCE {
                return Err(NaturalError::RowNotStochastic { row, sum });
            }
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, NaturalError> {
        let cols = rows.first().map_or(0, Vec::len);
        let count = rows.len();
        let mut data = Vec::with_capacity(count * cols);
        for row in &rows {
            if row.len() != cols {
                return Err(NaturalError::MatrixFormat(
                    "ragged rows in natural matrix".to_string(),
                ));
            }
            data.extend_from_slice(row);
        }
        Self::new(count, cols, data)
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

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// Runs the model over every identifier name and stacks the resulting
/// distributions into a natural-constraint matrix.
pub fn predict_matrix(
    model: &LstmModel,
    idents: &IdentifierSet,
) -> Result<NaturalConstraintMatrix, NaturalError> {
    let mut rows = Vec::with_capacity(idents.len());
    for name in idents.names() {
        let logp = model.forward(name)?;
        rows.push(logp.into_iter().map(f64::exp).collect());
    }
    NaturalConstraintMatrix::from_rows(rows)
}
