//! A small trainable masked language model for desk-scale end-to-end runs.

pub mod fixture;
mod model;

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::finetune::{FinetuneError, MaskedSequence, TrainableMlm};
use crate::mlm::{MlmError, Tokenizer, WordPieceTokenizer};
use crate::optim::AdamWConfig;
pub use model::ToyMlm;
use model::{Example, Layout};

pub const CHECKPOINT_FORMAT: &str = "becpro-toy-mlm";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ToyError {
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Mlm(#[from] MlmError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ToyMlmConfig {
    pub vocab_cap: usize,
    pub dim: usize,
    /// Maximum sequence length, special tokens included.
    pub context: usize,
    pub layers: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    pub lowercase: bool,
    /// Chance that each other position is hidden while a training target is predicted.
    pub context_mask_prob: f64,
}

impl Default for ToyMlmConfig {
    fn default() -> Self {
        Self {
            vocab_cap: 2000,
            dim: 16,
            context: 64,
            layers: 1,
            learning_rate: 0.01,
            epochs: 8,
            seed: 42,
            lowercase: true,
            context_mask_prob: 0.15,
        }
    }
}

impl ToyMlmConfig {
    pub fn validate(&self) -> Result<(), ToyError> {
        let bad = |m: &str| Err(ToyError::InvalidConfig(m.to_string()));
        if self.vocab_cap <= crate::mlm::tokenizer::RESERVED.len() {
            return bad("vocab_cap must exceed the reserved tokens");
        }
        if self.dim == 0 || self.context < 3 || self.epochs == 0 {
            return bad("dim, context and epochs must be positive");
        }
        if !(1..=2).contains(&self.layers) {
            return bad("layers must be 1 or 2");
        }
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 {
            return bad("learning_rate must be positive");
        }
        if !(0.0..1.0).contains(&self.context_mask_prob) {
            return bad("context_mask_prob must lie in [0, 1)");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Held-in loss before the first update.
    pub initial_loss: f64,
    /// Held-in loss after each epoch.
    pub epoch_losses: Vec<f64>,
}

struct Encoded {
    ids: Vec<u32>,
    attention: Vec<u8>,
    eligible: Vec<usize>,
}

fn encode_all(model: &ToyMlm, corpus: &[String]) -> Result<Vec<Encoded>, MlmError> {
    let special = model.special_tokens();
    let max = model.config.context;
    corpus
        .iter()
        .map(|s| {
            let mut ids = model.encode(s)?.ids;
            if ids.len() > max {
                ids.truncate(max - 1);
                ids.extend(special.sep);
            }
            let eligible = (0..ids.len()).filter(|&i| !special.is_special(ids[i]) || ids[i] == special.unk).collect();
            Ok(Encoded { attention: vec![1; ids.len()], ids, eligible })
        })
        .collect()
}

/// Leave-one-out loss over every eligible position of every sentence.
fn held_in_loss(model: &ToyMlm, data: &[Encoded]) -> Result<f64, MlmError> {
    let mut total = 0.0;
    let mut count = 0usize;
    for e in data {
        let examples: Vec<Example<'_>> = e
            .eligible
            .iter()
            .map(|&p| Example { ids: &e.ids, attention: &e.attention, position: p, target: e.ids[p] })
            .collect();
        total += model.loss(&examples)? * examples.len() as f64;
        count += examples.len();
    }
    Ok(if count == 0 { 0.0 } else { total / count as f64 })
}

/// Trains a fresh model on `corpus` with a vocabulary built from it.
///
/// Each step predicts every eligible position of one sentence from its
/// context, with other positions hidden at `context_mask_prob`.
pub fn train<S: AsRef<str>>(corpus: &[S], config: ToyMlmConfig) -> Result<(ToyMlm, TrainReport), ToyError> {
    config.validate()?;
    let corpus: Vec<String> = corpus.iter().map(|s| s.as_ref().to_string()).filter(|s| !s.trim().is_empty()).collect();
    if corpus.is_empty() {
        return Err(ToyError::EmptyCorpus);
    }
    let tokenizer = WordPieceTokenizer::from_texts(&corpus, config.lowercase, config.vocab_cap)?;
    let mut model = ToyMlm::init(tokenizer, config);
    let data = encode_all(&model, &corpus)?;
    let mask = model.special_tokens().mask;
    let initial_loss = held_in_loss(&model, &data)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5e_ed0f_7ea1);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut grad = vec![0.0; model.parameter_count()];
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    model.reset_optimizer(AdamWConfig::default());
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let e = &data[i];
            if e.eligible.is_empty() {
                continue;
            }
            let inputs: Vec<Vec<u32>> = e
                .eligible
                .iter()
                .map(|&p| {
                    let mut ids = e.ids.clone();
                    ids[p] = mask;
                    for &q in &e.eligible {
                        if q != p && rng.gen_bool(config.context_mask_prob) {
                            ids[q] = mask;
                        }
                    }
                    ids
                })
                .collect();
            let examples: Vec<Example<'_>> = e
                .eligible
                .iter()
                .zip(&inputs)
                .map(|(&p, ids)| Example { ids, attention: &e.attention, position: p, target: e.ids[p] })
                .collect();
            grad.iter_mut().for_each(|g| *g = 0.0);
            model.loss_and_grad(&examples, &mut grad)?;
            model.optimizer_step(&mut grad, config.learning_rate);
        }
        epoch_losses.push(held_in_loss(&model, &data)?);
    }
    model.optimizer = None;
    Ok((model, TrainReport { initial_loss, epoch_losses }))
}

#[derive(Serialize)]
struct CheckpointOut<'a> {
    format: &'static str,
    version: u32,
    model: &'a ToyMlm,
}

#[derive(Deserialize)]
struct CheckpointIn {
    format: String,
    version: u32,
    model: ToyMlm,
}

impl ToyMlm {
    /// JSON checkpoint with config, vocabulary and parameters.
    pub fn to_checkpoint_bytes(&self) -> Result<Vec<u8>, ToyError> {
        let mut out =
            serde_json::to_vec(&CheckpointOut { format: CHECKPOINT_FORMAT, version: CHECKPOINT_VERSION, model: self })?;
        out.push(b'\n');
        Ok(out)
    }

    pub fn from_checkpoint_bytes(bytes: &[u8]) -> Result<Self, ToyError> {
        let ck: CheckpointIn = serde_json::from_slice(bytes)?;
        if ck.format != CHECKPOINT_FORMAT || ck.version != CHECKPOINT_VERSION {
            return Err(ToyError::Checkpoint(format!("unsupported format {} v{}", ck.format, ck.version)));
        }
        let mut model = ck.model;
        model.tokenizer.rebuild_index();
        let expected = Layout::new(model.tokenizer.vocab_size(), model.config.dim, model.config.context, model.config.layers)
            .total;
        if model.params.len() != expected {
            return Err(ToyError::Checkpoint(format!(
                "{} parameters stored, layout needs {expected}",
                model.params.len()
            )));
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<(), ToyError> {
        std::fs::write(path, self.to_checkpoint_bytes()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ToyError> {
        Self::from_checkpoint_bytes(&std::fs::read(path)?)
    }
}

impl TrainableMlm for ToyMlm {
    type Snapshot = Vec<f64>;

    fn begin_training(&mut self, optimizer: AdamWConfig) {
        self.reset_optimizer(optimizer);
    }

    fn train_step(&mut self, batch: &MaskedSequence, lr: f64) -> Result<f64, FinetuneError> {
        let examples: Vec<Example<'_>> = batch
            .labels
            .targets()
            .map(|(position, target)| Example { ids: &batch.input_ids, attention: &batch.attention, position, target })
            .collect();
        let mut grad = vec![0.0; self.parameter_count()];
        let loss = self.loss_and_grad(&examples, &mut grad)?;
        self.optimizer_step(&mut grad, lr);
        Ok(loss)
    }

    fn loss(&self, batch: &MaskedSequence) -> Result<f64, FinetuneError> {
        let examples: Vec<Example<'_>> = batch
            .labels
            .targets()
            .map(|(position, target)| Example { ids: &batch.input_ids, attention: &batch.attention, position, target })
            .collect();
        Ok(ToyMlm::loss(self, &examples)?)
    }

    fn snapshot(&self) -> Vec<f64> {
        self.params.clone()
    }

    fn restore(&mut self, snapshot: &Vec<f64>) {
        self.params.clone_from(snapshot);
    }

    fn max_sequence_length(&self) -> usize {
        self.config.context
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mlm::MlmScorer;

    fn small() -> ToyMlmConfig {
        ToyMlmConfig { dim: 8, context: 16, epochs: 10, ..Default::default() }
    }

    #[test]
    fn empty_corpus_is_rejected() {
        let empty: [&str; 0] = [];
        assert!(matches!(train(&empty, small()), Err(ToyError::EmptyCorpus)));
        assert!(matches!(train(&["  "], small()), Err(ToyError::EmptyCorpus)));
    }

    #[test]
    fn learns_planted_co_occurrence() {
        let mut corpus = vec!["she is a nurse ."; 30];
        corpus.extend(vec!["he is a builder ."; 30]);
        let (model, report) = train(&corpus, small()).unwrap();
        assert!(report.epoch_losses.last().unwrap() < &report.initial_loss);
        let enc = model.encode("[MASK] is a nurse .").unwrap();
        let att = vec![1; enc.len()];
        let p_she = model.probability(&enc.ids, &att, 1, model.vocab_index("she").unwrap()).unwrap();
        let p_he = model.probability(&enc.ids, &att, 1, model.vocab_index("he").unwrap()).unwrap();
        assert!(p_she > p_he, "{p_she} <= {p_he}");
    }

    #[test]
    fn repeated_sentence_loss_decreases_early() {
        let corpus = vec!["the cat sat on the mat ."; 4];
        let (_, report) = train(&corpus, ToyMlmConfig { epochs: 4, context_mask_prob: 0.0, ..small() }).unwrap();
        let mut losses = vec![report.initial_loss];
        losses.extend(&report.epoch_losses);
        assert!(losses.windows(2).all(|w| w[1] < w[0]), "{losses:?}");
    }

    #[test]
    fn checkpoint_round_trip_is_bit_exact() {
        let (model, _) = train(&["she is a nurse .", "he is a judge ."], small()).unwrap();
        let bytes = model.to_checkpoint_bytes().unwrap();
        let back = ToyMlm::from_checkpoint_bytes(&bytes).unwrap();
        let enc = model.encode("[MASK] is a nurse .").unwrap();
        let att = vec![1; enc.len()];
        let a = model.distribution(&enc.ids, &att, 1).unwrap();
        let b = back.distribution(&enc.ids, &att, 1).unwrap();
        assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
        assert_eq!(back.to_checkpoint_bytes().unwrap(), bytes);
    }

    #[test]
    fn training_is_deterministic() {
        let corpus = ["she is a nurse .", "he is a judge .", "my sister works as a nurse ."];
        let (a, _) = train(&corpus, small()).unwrap();
        let (b, _) = train(&corpus, small()).unwrap();
        assert_eq!(a.to_checkpoint_bytes().unwrap(), b.to_checkpoint_bytes().unwrap());
    }

    #[test]
    fn invalid_config_is_rejected() {
        assert!(ToyMlmConfig { layers: 3, ..small() }.validate().is_err());
        assert!(ToyMlmConfig { dim: 0, ..small() }.validate().is_err());
    }
}
