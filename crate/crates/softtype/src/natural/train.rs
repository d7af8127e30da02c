//! Training loop for the naming model: negative log likelihood minimised by
//! Adam over manually backpropagated gradients.

use super::lstm::{LstmModel, Params};
use super::NaturalError;
use crate::logic::TypeUniverse;
use rand::seq::SliceRandom;

/// Labelled (identifier, type) pairs plus the universe the labels index.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelledCorpus {
    universe: TypeUniverse,
    pairs: Vec<(String, usize)>,
}

impl LabelledCorpus {
    pub fn new(universe: TypeUniverse, pairs: Vec<(String, usize)>) -> Result<Self, NaturalError> {
        if pairs.is_empty() {
            return Err(NaturalError::EmptyCorpus);
        }
        for (name, label) in &pairs {
            if name.is_empty() {
                return Err(NaturalError::EmptyName);
            }
            if *label >= universe.len() {
                return Err(NaturalError::LabelOutOfRange {
                    label: *label,
                    type_count: universe.len(),
                });
            }
        }
        Ok(Self { universe, pairs })
    }

    /// Parses `name<TAB>type` lines.
    pub fn from_tsv(text: &str, universe: &TypeUniverse) -> Result<Self, NaturalError> {
        let mut pairs = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let Some((name, ty)) = line.split_once('\t') else {
                return Err(NaturalError::CorpusFormat {
                    line: i + 1,
                    message: "expected `name<TAB>type`".to_string(),
                });
            };
            let label = universe
                .index_of(ty.trim())
                .ok_or(NaturalError::CorpusFormat {
                    line: i + 1,
                    message: format!("unknown type `{}`", ty.trim()),
                })?;
            pairs.push((name.to_string(), label));
        }
        Self::new(universe.clone(), pairs)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (name, label) in &self.pairs {
            out.push_str(name);
            out.push('\t');
            out.push_str(self.universe.name(*label));
            out.push('\n');
        }
        out
    }

    pub fn universe(&self) -> &TypeUniverse {
        &self.universe
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[(String, usize)] {
        &self.pairs
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_epsilon: f64,
    /// Fraction of samples held out for validation (split by sample).
    pub val_fraction: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            embed_dim: 32,
            hidden_dim: 32,
            epochs: 25,
            batch_size: 32,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            adam_epsilon: 1e-8,
            val_fraction: 0.2,
            seed: 0,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<(), NaturalError> {
        let bad = |msg: &str| Err(NaturalError::InvalidConfig(msg.to_string()));
        if self.embed_dim == 0 || self.hidden_dim == 0 {
            return bad("model dimensions must be positive");
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return bad("epochs and batch size must be positive");
        }
        if self.learning_rate <= 0.0 {
            return bad("learning rate must be positive");
        }
        if !(0.0..1.0).contains(&self.val_fraction) {
            return bad("validation fraction must lie in [0, 1)");
        }
        Ok(())
    }
}

/// Per-epoch curves and the selected epoch. Accuracy is top-1 on the
/// validation split.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainStats {
    pub train_nll: Vec<f64>,
    pub val_nll: Vec<f64>,
    pub best_epoch: usize,
    pub val_accuracy: f64,
    pub train_samples: usize,
    pub val_samples: usize,
}

struct Adam {
    m: Params,
    v: Params,
    step: u64,
}

impl Adam {
    fn new(like: &Params) -> Self {
        Self {
            m: like.zeros_like(),
            v: like.zeros_like(),
            step: 0,
        }
    }

    fn update(&mut self, params: &mut Params, grads: &Params, cfg: &TrainConfig) {
        self.step += 1;
        let bias1 = 1.0 - cfg.beta1.powi(self.step as i32);
        let bias2 = 1.0 - cfg.beta2.powi(self.step as i32);
        let ps = params.tensors_mut();
        let gs = grads.tensors();
        let ms = self.m.tensors_mut();
        let vs = self.v.tensors_mut();
        for (((p, g), m), v) in ps.into_iter().zip(gs).zip(ms).zip(vs) {
            for i in 0..p.len() {
                m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
                v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
                let m_hat = m[i] / bias1;
                let v_hat = v[i] / bias2;
                p[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.adam_epsilon);
            }
        }
    }
}

fn mean_nll(model: &LstmModel, samples: &[&(String, usize)]) -> f64 {
    let total: f64 = samples
        .iter()
        .map(|(name, label)| -model.forward(name).expect("nonempty name")[*label])
        .sum();
    total / samples.len() as f64
}

fn accuracy(model: &LstmModel, samples: &[&(String, usize)]) -> f64 {
    let correct = samples
        .iter()
        .filter(|(name, label)| {
            let logp = model.forward(name).expect("nonempty name");
            let mut best = 0;
            for (t, &x) in logp.iter().enumerate() {
                if x > logp[best] {
                    best = t;
                }
            }
            best == *label
        })
        .count();
    correct as f64 / samples.len() as f64
}

/// Trains a fresh model on the corpus and returns the parameters that
/// achieved the best validation NLL. Deterministic for a fixed seed.
pub fn train_model(
    corpus: &LabelledCorpus,
    cfg: &TrainConfig,
) -> Result<(LstmModel, TrainStats), NaturalError> {
    cfg.validate()?;
    let mut rng = crate::logic::gen::seeded_rng(cfg.seed);
    let mut indices: Vec<usize> = (0..corpus.len()).collect();
    indices.shuffle(&mut rng);
    // Tiny corpora validate on the training set itself.
    let val_count = if corpus.len() < 5 {
        0
    } else {
        ((corpus.len() as f64 * cfg.val_fraction) as usize).min(corpus.len() - 1)
    };
    let (val_idx, train_idx) = indices.split_at(val_count);
    let train: Vec<&(String, usize)> = train_idx.iter().map(|&i| &corpus.pairs()[i]).collect();
    let val: Vec<&(String, usize)> = if val_count == 0 {
        train.clone()
    } else {
        val_idx.iter().map(|&i| &corpus.pairs()[i]).collect()
    };

    let mut model = LstmModel::with_random_weights(
        cfg.embed_dim,
        cfg.hidden_dim,
        corpus.universe().names().to_vec(),
        cfg.seed.wrapping_add(1),
    );
    let mut adam = Adam::new(&model.params);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut train_nll = Vec::with_capacity(cfg.epochs);
    let mut val_nll = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, Params, usize)> = None;

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let mut grads = model.params.zeros_like();
            let mut batch_loss = 0.0;
            for &i in batch {
                let (name, label) = train[i];
                let cache = model.forward_cached(name)?;
                batch_loss += model.backward_nll(&cache, *label, &mut grads);
            }
            if !batch_loss.is_finite() {
                return Err(NaturalError::Divergence { epoch });
            }
            let scale = 1.0 / batch.len() as f64;
            for tensor in grads.tensors_mut() {
                for g in tensor.iter_mut() {
                    *g *= scale;
                }
            }
            adam.update(&mut model.params, &grads, cfg);
            epoch_loss += batch_loss;
        }
        train_nll.push(epoch_loss / train.len() as f64);

        let v = mean_nll(&model, &val);
        if !v.is_finite() {
            return Err(NaturalError::Divergence { epoch });
        }
        val_nll.push(v);
        if best.as_ref().is_none_or(|(best_v, _, _)| v < *best_v) {
            best = Some((v, model.params.clone(), epoch));
        }
    }

    let (_, best_params, best_epoch) = best.expect("at least one epoch ran");
    model.params = best_params;
    let val_accuracy = accuracy(&model, &val);
    Ok((
        model,
        TrainStats {
            train_nll,
            val_nll,
            best_epoch,
            val_accuracy,
            train_samples: train.len(),
            val_samples: val.len(),
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::TypeUniverse;

    fn universe() -> TypeUniverse {
        TypeUniverse::new(["number", "string", "boolean", "any"]).unwrap()
    }

    #[test]
    fn tsv_round_trip() {
        let universe = universe();
        let corpus = LabelledCorpus::from_tsv("count\tnumber\nmsg\tstring\n", &universe).unwrap();
        assert_eq!(corpus.len(), 2);
        assert_eq!(corpus.to_tsv(), "count\tnumber\nmsg\tstring\n");
        assert!(LabelledCorpus::from_tsv("x\tDate\n", &universe).is_err());
        assert!(LabelledCorpus::from_tsv("count number\n", &universe).is_err());
    }

    #[test]
    fn single_example_is_memorised() {
        let universe = universe();
        let corpus = LabelledCorpus::new(universe, vec![("x".to_string(), 1)]).unwrap();
        let cfg = TrainConfig {
            embed_dim: 8,
            hidden_dim: 8,
            epochs: 500,
            batch_size: 1,
            learning_rate: 1e-2,
            ..TrainConfig::default()
        };
        let (model, stats) = train_model(&corpus, &cfg).unwrap();
        let nll = -model.forward("x").unwrap()[1];
        assert!(nll < 0.01, "nll = {nll}");
        assert_eq!(stats.train_samples, 1);
    }

    #[test]
    fn training_is_bit_reproducible() {
        let universe = universe();
        let pairs = vec![
            ("count".to_string(), 0),
            ("total".to_string(), 0),
            ("name".to_string(), 1),
            ("msg".to_string(), 1),
            ("isDone".to_string(), 2),
            ("hasNext".to_string(), 2),
        ];
        let corpus = LabelledCorpus::new(universe, pairs).unwrap();
        let cfg = TrainConfig {
            embed_dim: 8,
            hidden_dim: 8,
            epochs: 3,
            seed: 5,
            ..TrainConfig::default()
        };
        let (a, sa) = train_model(&corpus, &cfg).unwrap();
        let (b, sb) = train_model(&corpus, &cfg).unwrap();
        assert_eq!(sa, sb);
        assert_eq!(a.forward("count").unwrap(), b.forward("count").unwrap());
    }

    #[test]
    fn nll_gradient_of_head_matches_finite_differences_one_step() {
        let universe = universe();
        let mut model = LstmModel::with_random_weights(4, 4, universe.names().to_vec(), 11);
        let name = "ab";
        let label = 2;
        let cache = model.forward_cached(name).unwrap();
        let mut grads = model.params.zeros_like();
        model.backward_nll(&cache, label, &mut grads);
        let h = 1e-5;
        // Head weights are tensor 4, head bias tensor 5.
        for tensor_index in [4usize, 5] {
            for i in 0..model.params.tensors()[tensor_index].len() {
                let orig = model.params.tensors()[tensor_index][i];
                model.params.tensors_mut()[tensor_index][i] = orig + h;
                let up = -model.forward(name).unwrap()[label];
                model.params.tensors_mut()[tensor_index][i] = orig - h;
                let down = -model.forward(name).unwrap()[label];
                model.params.tensors_mut()[tensor_index][i] = orig;
                let fd = (up - down) / (2.0 * h);
                let ad = grads.tensors()[tensor_index][i];
                let rel = (ad - fd).abs() / ad.abs().max(fd.abs()).max(1e-4);
                assert!(rel < 1e-3, "ad {ad} vs fd {fd}");
            }
        }
    }
}
