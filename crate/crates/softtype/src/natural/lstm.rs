//! Character-level LSTM classifier, written out longhand: embedding lookup,
//! the standard four-gate cell recurrence, an affine head and log-softmax,
//! plus the full backward pass through time for training.

use super::NaturalError;
use rand::Rng;

/// Character vocabulary with a dedicated out-of-vocabulary slot at the last
/// index. The default vocabulary is the 95 printable ASCII characters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CharVocab {
    chars: Vec<char>,
}

impl CharVocab {
    pub fn printable_ascii() -> Self {
        Self {
            chars: (0x20u8..=0x7E).map(char::from).collect(),
        }
    }

    pub fn from_chars(chars: Vec<char>) -> Self {
        Self { chars }
    }

    /// Vocabulary size including the OOV slot.
    pub fn size(&self) -> usize {
        self.chars.len() + 1
    }

    pub fn oov_index(&self) -> usize {
        self.chars.len()
    }

    pub fn index_of(&self, c: char) -> usize {
        self.chars
            .iter()
            .position(|&v| v == c)
            .unwrap_or(self.chars.len())
    }

    pub fn chars(&self) -> &[char] {
        &self.chars
    }
}

/// All learnable tensors, stored row-major. Gate blocks are stacked in the
/// order input, forget, cell candidate, output.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Params {
    /// vocab_size x embed_dim
    pub embedding: Vec<f64>,
    /// 4*hidden x embed_dim
    pub input_weights: Vec<f64>,
    /// 4*hidden x hidden
    pub recurrent_weights: Vec<f64>,
    /// 4*hidden
    pub gate_bias: Vec<f64>,
    /// types x hidden
    pub head_weights: Vec<f64>,
    /// types
    pub head_bias: Vec<f64>,
}

impl Params {
    pub fn zeros(vocab: usize, embed: usize, hidden: usize, types: usize) -> Self {
        Self {
            embedding: vec![0.0; vocab * embed],
            input_weights: vec![0.0; 4 * hidden * embed],
            recurrent_weights: vec![0.0; 4 * hidden * hidden],
            gate_bias: vec![0.0; 4 * hidden],
            head_weights: vec![0.0; types * hidden],
            head_bias: vec![0.0; types],
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            embedding: vec![0.0; self.embedding.len()],
            input_weights: vec![0.0; self.input_weights.len()],
            recurrent_weights: vec![0.0; self.recurrent_weights.len()],
            gate_bias: vec![0.0; self.gate_bias.len()],
            head_weights: vec![0.0; self.head_weights.len()],
            head_bias: vec![0.0; self.head_bias.len()],
        }
    }

    pub fn tensors(&self) -> [&Vec<f64>; 6] {
        [
            &self.embedding,
            &self.input_weights,
            &self.recurrent_weights,
            &self.gate_bias,
            &self.head_weights,
            &self.head_bias,
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut Vec<f64>; 6] {
        [
            &mut self.embedding,
            &mut self.input_weights,
            &mut self.recurrent_weights,
            &mut self.gate_bias,
            &mut self.head_weights,
            &mut self.head_bias,
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmModel {
    vocab: CharVocab,
    type_names: Vec<String>,
    embed_dim: usize,
    hidden_dim: usize,
    pub(crate) params: Params,
}

struct StepCache {
    char_index: usize,
    input_gate: Vec<f64>,
    forget_gate: Vec<f64>,
    cell_candidate: Vec<f64>,
    output_gate: Vec<f64>,
    cell_tanh: Vec<f64>,
    prev_hidden: Vec<f64>,
    prev_cell: Vec<f64>,
}

pub(crate) struct ForwardCache {
    steps: Vec<StepCache>,
    final_hidden: Vec<f64>,
    pub log_probs: Vec<f64>,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl LstmModel {
    /// Fresh model over the printable-ASCII vocabulary. Weights are uniform
    /// in `(-k, k)` with `k = 1/sqrt(hidden)`; the forget-gate bias starts
    /// at 1 so early training does not wash out the cell state.
    pub fn with_random_weights(
        embed_dim: usize,
        hidden_dim: usize,
        type_names: Vec<String>,
        seed: u64,
    ) -> Self {
        let vocab = CharVocab::printable_ascii();
        let mut rng = crate::logic::gen::seeded_rng(seed);
        let mut params = Params::zeros(vocab.size(), embed_dim, hidden_dim, type_names.len());
        let k = 1.0 / (hidden_dim as f64).sqrt();
        for tensor in params.tensors_mut() {
            for x in tensor.iter_mut() {
                *x = rng.gen_range(-k..k);
            }
        }
        for x in &mut params.gate_bias[hidden_dim..2 * hidden_dim] {
            *x = 1.0;
        }
        Self {
            vocab,
            type_names,
            embed_dim,
            hidden_dim,
            params,
        }
    }

    pub(crate) fn from_parts(
        vocab: CharVocab,
        type_names: Vec<String>,
        embed_dim: usize,
        hidden_dim: usize,
        params: Params,
    ) -> Self {
        Self {
            vocab,
            type_names,
            embed_dim,
            hidden_dim,
            params,
        }
    }

    pub fn vocab(&self) -> &CharVocab {
        &self.vocab
    }

    pub fn type_names(&self) -> &[String] {
        &self.type_names
    }

    pub fn type_count(&self) -> usize {
        self.type_names.len()
    }

    pub fn embed_dim(&self) -> usize {
        self.embed_dim
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden_dim
    }

    /// Log-probability vector over the type names for one identifier.
    /// Unknown characters map to the OOV slot; an empty name is an error.
    pub fn forward(&self, name: &str) -> Result<Vec<f64>, NaturalError> {
        Ok(self.forward_cached(name)?.log_probs)
    }

    pub(crate) fn forward_cached(&self, name: &str) -> Result<ForwardCache, NaturalError> {
        if name.is_empty() {
            return Err(NaturalError::EmptyName);
        }
        let h_dim = self.hidden_dim;
        let e_dim = self.embed_dim;
        let mut hidden = vec![0.0; h_dim];
        let mut cell = vec![0.0; h_dim];
        let mut steps = Vec::new();
        for c in name.chars() {
            let char_index = self.vocab.index_of(c);
            let x = &self.params.embedding[char_index * e_dim..(char_index + 1) * e_dim];
            // z = W x + U h_prev + b, all four gate blocks at once.
            let mut z = self.params.gate_bias.clone();
            for (k, zk) in z.iter_mut().enumerate() {
                let w_row = &self.params.input_weights[k * e_dim..(k + 1) * e_dim];
                let u_row = &self.params.recurrent_weights[k * h_dim..(k + 1) * h_dim];
                let mut acc = 0.0;
                for (w, xv) in w_row.iter().zip(x) {
                    acc += w * xv;
                }
                for (u, hv) in u_row.iter().zip(&hidden) {
                    acc += u * hv;
                }
                *zk += acc;
            }
            let input_gate: Vec<f64> = z[..h_dim].iter().map(|&v| sigmoid(v)).collect();
            let forget_gate: Vec<f64> = z[h_dim..2 * h_dim].iter().map(|&v| sigmoid(v)).collect();
            let cell_candidate: Vec<f64> =
                z[2 * h_dim..3 * h_dim].iter().map(|&v| v.tanh()).collect();
            let output_gate: Vec<f64> = z[3 * h_dim..].iter().map(|&v| sigmoid(v)).collect();
            let prev_cell = cell.clone();
            let prev_hidden = hidden.clone();
            for j in 0..h_dim {
                cell[j] = forget_gate[j] * prev_cell[j] + input_gate[j] * cell_candidate[j];
            }
            let cell_tanh: Vec<f64> = cell.iter().map(|&v| v.tanh()).collect();
            for j in 0..h_dim {
                hidden[j] = output_gate[j] * cell_tanh[j];
            }
            steps.push(StepCache {
                char_index,
                input_gate,
                forget_gate,
                cell_candidate,
                output_gate,
                cell_tanh,
                prev_hidden,
                prev_cell,
            });
        }

        let t_count = self.type_names.len();
        let mut logits = self.params.head_bias.clone();
        for (t, logit) in logits.iter_mut().enumerate() {
            let row = &self.params.head_weights[t * h_dim..(t + 1) * h_dim];
            for (w, hv) in row.iter().zip(&hidden) {
                *logit += w * hv;
            }
        }
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + logits.iter().map(|&l| (l - max).exp()).sum::<f64>().ln();
        let log_probs: Vec<f64> = logits.iter().map(|&l| l - lse).collect();
        debug_assert_eq!(log_probs.len(), t_count);
        Ok(ForwardCache {
            steps,
            final_hidden: hidden,
            log_probs,
        })
    }

    /// Per-sample negative log likelihood of `label` and its gradient with
    /// respect to every parameter, flattened in checkpoint tensor order
    /// (embedding, input weights, recurrent weights, gate bias, head
    /// weights, head bias). Gradient-checking support.
    pub fn nll_gradient(&self, name: &str, label: usize) -> Result<(f64, Vec<f64>), NaturalError> {
        if label >= self.type_names.len() {
            return Err(NaturalError::LabelOutOfRange {
                label,
                type_count: self.type_names.len(),
            });
        }
        let cache = self.forward_cached(name)?;
        let mut grads = self.params.zeros_like();
        let loss = self.backward_nll(&cache, label, &mut grads);
        let mut flat = Vec::new();
        for tensor in grads.tensors() {
            flat.extend_from_slice(tensor);
        }
        Ok((loss, flat))
    }

    /// All parameters flattened in checkpoint tensor order.
    pub fn parameters(&self) -> Vec<f64> {
        let mut flat = Vec::new();
        for tensor in self.params.tensors() {
            flat.extend_from_slice(tensor);
        }
        flat
    }

    /// Replaces the parameters from a flat vector in checkpoint tensor
    /// order.
    pub fn set_parameters(&mut self, flat: &[f64]) -> Result<(), NaturalError> {
        let total: usize = self.params.tensors().iter().map(|t| t.len()).sum();
        if flat.len() != total {
            return Err(NaturalError::Checkpoint(format!(
                "expected {total} parameters, got {}",
                flat.len()
            )));
        }
        let mut offset = 0;
        for tensor in self.params.tensors_mut() {
            let len = tensor.len();
            tensor.copy_from_slice(&flat[offset..offset + len]);
            offset += len;
        }
        Ok(())
    }

    /// Backward pass through time for the negative-log-likelihood of `label`,
    /// accumulating into `grads`. Returns the per-sample loss.
    pub(crate) fn backward_nll(
        &self,
        cache: &ForwardCache,
        label: usize,
        grads: &mut Params,
    ) -> f64 {
        let h_dim = self.hidden_dim;
        let e_dim = self.embed_dim;
        let loss = -cache.log_probs[label];

        // d L / d logits = softmax(logits) - onehot(label)
        let mut d_logits: Vec<f64> = cache.log_probs.iter().map(|&lp| lp.exp()).collect();
        d_logits[label] -= 1.0;

        let mut d_hidden = vec![0.0; h_dim];
        for (t, &dl) in d_logits.iter().enumerate() {
            let row = &self.params.head_weights[t * h_dim..(t + 1) * h_dim];
            let grow = &mut grads.head_weights[t * h_dim..(t + 1) * h_dim];
            for j in 0..h_dim {
                d_hidden[j] += row[j] * dl;
                grow[j] += dl * cache.final_hidden[j];
            }
            grads.head_bias[t] += dl;
        }

        let mut d_cell = vec![0.0; h_dim];
        for step in cache.steps.iter().rev() {
            let mut dz = vec![0.0; 4 * h_dim];
            let mut d_cell_prev = vec![0.0; h_dim];
            for j in 0..h_dim {
                let d_out = d_hidden[j] * step.cell_tanh[j];
                let dc = d_cell[j]
                    + d_hidden[j] * step.output_gate[j] * (1.0 - step.cell_tanh[j].powi(2));
                let d_in = dc * step.cell_candidate[j];
                let d_forget = dc * step.prev_cell[j];
                let d_cand = dc * step.input_gate[j];
                d_cell_prev[j] = dc * step.forget_gate[j];
                dz[j] = d_in * step.input_gate[j] * (1.0 - step.input_gate[j]);
                dz[h_dim + j] = d_forget * step.forget_gate[j] * (1.0 - step.forget_gate[j]);
                dz[2 * h_dim + j] = d_cand * (1.0 - step.cell_candidate[j].powi(2));
                dz[3 * h_dim + j] = d_out * step.output_gate[j] * (1.0 - step.output_gate[j]);
            }

            let x = &self.params.embedding[step.char_index * e_dim..(step.char_index + 1) * e_dim];
            let dx = &mut grads.embedding[step.char_index * e_dim..(step.char_index + 1) * e_dim];
            let mut d_hidden_prev = vec![0.0; h_dim];
            for (k, &dzk) in dz.iter().enumerate() {
                if dzk == 0.0 {
                    continue;
                }
                grads.gate_bias[k] += dzk;
                let w_row = &self.params.input_weights[k * e_dim..(k + 1) * e_dim];
                let gw_row = &mut grads.input_weights[k * e_dim..(k + 1) * e_dim];
                for j in 0..e_dim {
                    gw_row[j] += dzk * x[j];
                    dx[j] += dzk * w_row[j];
                }
                let u_row = &self.params.recurrent_weights[k * h_dim..(k + 1) * h_dim];
                let gu_row = &mut grads.recurrent_weights[k * h_dim..(k + 1) * h_dim];
                for j in 0..h_dim {
                    gu_row[j] += dzk * step.prev_hidden[j];
                    d_hidden_prev[j] += dzk * u_row[j];
                }
            }
            d_hidden = d_hidden_prev;
            d_cell = d_cell_prev;
        }
        loss
    }
}
