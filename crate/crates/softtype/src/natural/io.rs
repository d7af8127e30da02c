//! File formats for the natural channel.
//!
//! Matrix files are UTF-8 JSON: `{"types": [..T names..], "rows":
//! {"<identifier>": [..T floats..]}}`. Rows may come from any model; they
//! are validated against the pipeline's identifier order and type universe
//! when loaded.
//!
//! Model checkpoints are versioned JSON containers of every parameter
//! tensor with a dimension header; see [`CHECKPOINT_VERSION`].

use super::lstm::{CharVocab, LstmModel, Params};
use super::{NaturalConstraintMatrix, NaturalError, LOAD_ROW_TOLERANCE};
use crate::logic::{IdentifierSet, TypeUniverse};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct MatrixFile {
    types: Vec<String>,
    rows: BTreeMap<String, Vec<f64>>,
}

/// Writes a natural matrix in the interchange format, rows keyed by
/// identifier name (sorted, so output bytes are deterministic).
pub fn save_matrix(
    path: &Path,
    matrix: &NaturalConstraintMatrix,
    idents: &IdentifierSet,
    universe: &TypeUniverse,
) -> Result<(), NaturalError> {
    let mut rows = BTreeMap::new();
    for (v, name) in idents.names().iter().enumerate() {
        rows.insert(name.clone(), matrix.row(v).to_vec());
    }
    let file = MatrixFile {
        types: universe.names().to_vec(),
        rows,
    };
    std::fs::write(path, serde_json::to_string_pretty(&file)?)?;
    Ok(())
}

/// Loads and validates a matrix against the pipeline's identifier order and
/// universe. The file's column order may differ from the universe's; columns
/// are aligned by type name. Rows must sum to 1 within [`LOAD_ROW_TOLERANCE`]
/// and are renormalised to machine precision. Identifiers missing from the
/// file are rejected unless `allow_missing`, which fills a uniform row.
pub fn load_matrix(
    path: &Path,
    idents: &IdentifierSet,
    universe: &TypeUniverse,
    allow_missing: bool,
) -> Result<NaturalConstraintMatrix, NaturalError> {
    let text = std::fs::read_to_string(path)?;
    let file: MatrixFile = serde_json::from_str(&text)?;
    let t = universe.len();
    if file.types.len() != t {
        return Err(NaturalError::MatrixFormat(format!(
            "file has {} types, universe has {t}",
            file.types.len()
        )));
    }
    let mut column_of = Vec::with_capacity(t);
    for name in universe.names() {
        let col = file
            .types
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| NaturalError::MatrixFormat(format!("missing type `{name}`")))?;
        column_of.push(col);
    }
    for name in &file.types {
        if universe.index_of(name).is_none() {
            return Err(NaturalError::MatrixFormat(format!("unknown type `{name}`")));
        }
    }

    let mut rows = Vec::with_capacity(idents.len());
    for (v, name) in idents.names().iter().enumerate() {
        match file.rows.get(name) {
            Some(row) => {
                if row.len() != t {
                    return Err(NaturalError::MatrixFormat(format!(
                        "row `{name}` has {} entries, expected {t}",
                        row.len()
                    )));
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > LOAD_ROW_TOLERANCE {
                    return Err(NaturalError::RowNotStochastic { row: v, sum });
                }
                // Rows already inside the strict tolerance pass through
                // untouched (bit-exact round trips); slightly off rows are
                // renormalised.
                if (sum - 1.0).abs() <= super::NATURAL_ROW_TOLERANCE {
                    rows.push(column_of.iter().map(|&c| row[c]).collect());
                } else {
                    rows.push(column_of.iter().map(|&c| row[c] / sum).collect());
                }
            }
            None if allow_missing => rows.push(vec![1.0 / t as f64; t]),
            None => {
                return Err(NaturalError::MatrixFormat(format!(
                    "missing identifier `{name}`"
                )))
            }
        }
    }
    NaturalConstraintMatrix::from_rows(rows)
}

#[derive(Debug, Serialize, Deserialize)]
struct CheckpointFile {
    format_version: u32,
    embed_dim: usize,
    hidden_dim: usize,
    /// In-vocabulary characters in index order; the OOV slot is implicit at
    /// the next index.
    vocab: String,
    types: Vec<String>,
    tensors: CheckpointTensors,
}

#[derive(Debug, Serialize, Deserialize)]
struct CheckpointTensors {
    embedding: Vec<f64>,
    input_weights: Vec<f64>,
    recurrent_weights: Vec<f64>,
    gate_bias: Vec<f64>,
    head_weights: Vec<f64>,
    head_bias: Vec<f64>,
}

pub fn save_checkpoint(path: &Path, model: &LstmModel) -> Result<(), NaturalError> {
    let file = CheckpointFile {
        format_version: CHECKPOINT_VERSION,
        embed_dim: model.embed_dim(),
        hidden_dim: model.hidden_dim(),
        vocab: model.vocab().chars().iter().collect(),
        types: model.type_names().to_vec(),
        tensors: CheckpointTensors {
            embedding: model.params.embedding.clone(),
            input_weights: model.params.input_weights.clone(),
            recurrent_weights: model.params.recurrent_weights.clone(),
            gate_bias: model.params.gate_bias.clone(),
            head_weights: model.params.head_weights.clone(),
            head_bias: model.params.head_bias.clone(),
        },
    };
    std::fs::write(path, serde_json::to_string(&file)?)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<LstmModel, NaturalError> {
    let text = std::fs::read_to_string(path)?;
    let file: CheckpointFile = serde_json::from_str(&text)?;
    if file.format_version != CHECKPOINT_VERSION {
        return Err(NaturalError::Checkpoint(format!(
            "unsupported format version {} (expected {CHECKPOINT_VERSION})",
            file.format_version
        )));
    }
    let vocab = CharVocab::from_chars(file.vocab.chars().collect());
    let (v, e, h, t) = (
        vocab.size(),
        file.embed_dim,
        file.hidden_dim,
        file.types.len(),
    );
    let expect = |name: &str, got: usize, want: usize| {
        if got == want {
            Ok(())
        } else {
            Err(NaturalError::Checkpoint(format!(
                "tensor `{name}` has {got} entries, expected {want}"
            )))
        }
    };
    expect("embedding", file.tensors.embedding.len(), v * e)?;
    expect("input_weights", file.tensors.input_weights.len(), 4 * h * e)?;
    expect(
        "recurrent_weights",
        file.tensors.recurrent_weights.len(),
        4 * h * h,
    )?;
    expect("gate_bias", file.tensors.gate_bias.len(), 4 * h)?;
    expect("head_weights", file.tensors.head_weights.len(), t * h)?;
    expect("head_bias", file.tensors.head_bias.len(), t)?;
    let params = Params {
        embedding: file.tensors.embedding,
        input_weights: file.tensors.input_weights,
        recurrent_weights: file.tensors.recurrent_weights,
        gate_bias: file.tensors.gate_bias,
        head_weights: file.tensors.head_weights,
        head_bias: file.tensors.head_bias,
    };
    Ok(LstmModel::from_parts(vocab, file.types, e, h, params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::natural::predict_matrix;

    fn tmpdir() -> std::path::PathBuf {
        let dir = std::env::temp_dir().join(format!(
            "softtype-io-test-{}-{}",
            std::process::id(),
            std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .unwrap()
                .as_nanos()
        ));
        std::fs::create_dir_all(&dir).unwrap();
        dir
    }

    fn fixture() -> (IdentifierSet, TypeUniverse) {
        (
            IdentifierSet::new(["start", "end"]).unwrap(),
            TypeUniverse::new(["number", "string", "any"]).unwrap(),
        )
    }

    #[test]
    fn matrix_save_load_is_bit_exact() {
        let (ids, uni) = fixture();
        let m = NaturalConstraintMatrix::from_rows(vec![
            vec![0.7, 0.2, 0.1],
            vec![1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
        ])
        .unwrap();
        let dir = tmpdir();
        let path = dir.join("m.json");
        save_matrix(&path, &m, &ids, &uni).unwrap();
        let loaded = load_matrix(&path, &ids, &uni, false).unwrap();
        assert_eq!(loaded.as_slice(), m.as_slice());
        save_matrix(&path, &loaded, &ids, &uni).unwrap();
        let twice = std::fs::read(&path).unwrap();
        save_matrix(&path, &m, &ids, &uni).unwrap();
        assert_eq!(twice, std::fs::read(&path).unwrap());
        std::fs::remove_dir_all(dir).ok();
    }

    #[test]
    fn matrix_load_rejects_bad_rows() {
        let (ids, uni) = fixture();
        let dir = tmpdir();
        let path = dir.join("bad.json");
        std::fs::write(
            &path,
            r#"{"types":["number","string","any"],"rows":{"start":[0.3,0.1,0.1],"end":[0.5,0.25,0.25]}}"#,
        )
        .unwrap();
        assert!(matches!(
            load_matrix(&path, &ids, &uni, false),
            Err(NaturalError::RowNotStochastic { .. })
        ));
        std::fs::write(
            &path,
            r#"{"types":["number","Date","any"],"rows":{"start":[0.5,0.25,0.25],"end":[0.5,0.25,0.25]}}"#,
        )
        .unwrap();
        assert!(matches!(
            load_matrix(&path, &ids, &uni, false),
            Err(NaturalError::MatrixFormat(_))
        ));
        std::fs::remove_dir_all(dir).ok();
    }

    #[test]
    fn missing_identifier_respects_allow_missing() {
        let (ids, uni) = fixture();
        let dir = tmpdir();
        let path = dir.join("partial.json");
        std::fs::write(
            &path,
            r#"{"types":["number","string","any"],"rows":{"start":[0.5,0.25,0.25]}}"#,
        )
        .unwrap();
        assert!(load_matrix(&path, &ids, &uni, false).is_err());
        let m = load_matrix(&path, &ids, &uni, true).unwrap();
        assert_eq!(m.row(1), &[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]);
        std::fs::remove_dir_all(dir).ok();
    }

    #[test]
    fn matrix_columns_align_by_type_name() {
        let (ids, uni) = fixture();
        let dir = tmpdir();
        let path = dir.join("perm.json");
        std::fs::write(
            &path,
            r#"{"types":["any","number","string"],"rows":{"start":[0.1,0.7,0.2],"end":[0.2,0.3,0.5]}}"#,
        )
        .unwrap();
        let m = load_matrix(&path, &ids, &uni, false).unwrap();
        assert!((m.get(0, 0) - 0.7).abs() < 1e-12);
        assert!((m.get(0, 2) - 0.1).abs() < 1e-12);
        assert!((m.get(1, 1) - 0.5).abs() < 1e-12);
        std::fs::remove_dir_all(dir).ok();
    }

    #[test]
    fn predicted_matrix_round_trips_within_tolerance() {
        let (ids, uni) = fixture();
        let model = LstmModel::with_random_weights(8, 8, uni.names().to_vec(), 21);
        let m = predict_matrix(&model, &ids).unwrap();
        let dir = tmpdir();
        let path = dir.join("pred.json");
        save_matrix(&path, &m, &ids, &uni).unwrap();
        let loaded = load_matrix(&path, &ids, &uni, false).unwrap();
        for (a, b) in m.as_slice().iter().zip(loaded.as_slice()) {
            assert!((a - b).abs() < 1e-9);
        }
        std::fs::remove_dir_all(dir).ok();
    }

    #[test]
    fn checkpoint_round_trips_and_rejects_mismatches() {
        let uni = TypeUniverse::new(["number", "string", "boolean", "any"]).unwrap();
        let model = LstmModel::with_random_weights(6, 5, uni.names().to_vec(), 31);
        let dir = tmpdir();
        let path = dir.join("model.ckpt");
        save_checkpoint(&path, &model).unwrap();
        let loaded = load_checkpoint(&path).unwrap();
        assert_eq!(loaded, model);
        assert_eq!(
            loaded.forward("count").unwrap(),
            model.forward("count").unwrap()
        );

        // Corrupt the dimension header.
        let text = std::fs::read_to_string(&path).unwrap();
        let corrupted = text.replace("\"hidden_dim\":5", "\"hidden_dim\":6");
        std::fs::write(&path, corrupted).unwrap();
        assert!(matches!(
            load_checkpoint(&path),
            Err(NaturalError::Checkpoint(_))
        ));
        std::fs::remove_dir_all(dir).ok();
    }
}
