//! Masked-LM fine-tuning: input masking, the training loop and its log.
//!
//! Each sentence is one batch. Sentences are visited in a seeded random order
//! every epoch; the learning rate warms up linearly and then decays linearly
//! to zero over all steps.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mlm::{fixed_length, MlmError, MlmScorer, SpecialTokens};
use crate::optim::{AdamWConfig, LinearSchedule};

#[derive(Debug, Error)]
pub enum FinetuneError {
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("sequence has no maskable positions")]
    NoEligiblePositions,
    #[error("sentence {index} has no maskable positions")]
    EmptySentence { index: usize },
    #[error("loss is not finite at step {step}: {loss}")]
    DivergenceDetected { step: usize, loss: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("backend does not support fine-tuning: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Mlm(#[from] MlmError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// BERT-style corruption of the selected positions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlmMaskingPolicy {
    pub select_fraction: f64,
    pub mask_fraction: f64,
    pub random_fraction: f64,
    pub keep_fraction: f64,
}

impl Default for MlmMaskingPolicy {
    fn default() -> Self {
        Self { select_fraction: 0.15, mask_fraction: 0.8, random_fraction: 0.1, keep_fraction: 0.1 }
    }
}

impl MlmMaskingPolicy {
    pub fn validate(&self) -> Result<(), FinetuneError> {
        let parts = [self.select_fraction, self.mask_fraction, self.random_fraction, self.keep_fraction];
        if parts.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(FinetuneError::InvalidConfig("masking fractions must lie in [0, 1]".into()));
        }
        if (self.mask_fraction + self.random_fraction + self.keep_fraction - 1.0).abs() > 1e-9 {
            return Err(FinetuneError::InvalidConfig("mask + random + keep fractions must sum to 1".into()));
        }
        Ok(())
    }
}

/// What happened to a position during input masking.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaskAction {
    Unselected,
    Masked,
    Randomized,
    Kept,
}

/// The uncorrupted sequence and which of its positions are prediction targets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MlmLabels {
    pub original: Vec<u32>,
    pub selected: Vec<bool>,
}

impl MlmLabels {
    /// Label at `i`, or `None` (ignored) when the position was not selected.
    pub fn get(&self, i: usize) -> Option<u32> {
        self.selected.get(i).copied().unwrap_or(false).then(|| self.original[i])
    }

    /// `(position, label)` for every selected position.
    pub fn targets(&self) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.selected.iter().enumerate().filter(|(_, s)| **s).map(|(i, _)| (i, self.original[i]))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskedSequence {
    pub input_ids: Vec<u32>,
    pub attention: Vec<u8>,
    pub labels: MlmLabels,
    pub actions: Vec<MaskAction>,
}

/// Selects positions and corrupts them for the masked-LM objective.
///
/// Pad positions (attention 0) and special tokens are never selected.
pub fn mask_inputs<R: Rng + ?Sized>(
    ids: &[u32],
    attention: &[u8],
    special: &SpecialTokens,
    vocab_size: usize,
    policy: &MlmMaskingPolicy,
    rng: &mut R,
) -> Result<MaskedSequence, FinetuneError> {
    let eligible: Vec<bool> =
        ids.iter().zip(attention).map(|(&id, &a)| a == 1 && (!special.is_special(id) || id == special.unk)).collect();
    if !eligible.iter().any(|e| *e) {
        return Err(FinetuneError::NoEligiblePositions);
    }
    let mut input_ids = ids.to_vec();
    let mut selected = vec![false; ids.len()];
    let mut actions = vec![MaskAction::Unselected; ids.len()];
    for i in 0..ids.len() {
        if !eligible[i] || !rng.gen_bool(policy.select_fraction) {
            continue;
        }
        selected[i] = true;
        let r: f64 = rng.gen();
        actions[i] = if r < policy.mask_fraction {
            input_ids[i] = special.mask;
            MaskAction::Masked
        } else if r < policy.mask_fraction + policy.random_fraction {
            input_ids[i] = rng.gen_range(0..vocab_size as u32);
            MaskAction::Randomized
        } else {
            MaskAction::Kept
        };
    }
    Ok(MaskedSequence {
        input_ids,
        attention: attention.to_vec(),
        labels: MlmLabels { original: ids.to_vec(), selected },
        actions,
    })
}

/// A scorer whose parameters can be updated with masked-LM steps.
pub trait TrainableMlm: MlmScorer {
    type Snapshot: Clone + PartialEq;

    /// Resets optimizer state before a training run.
    fn begin_training(&mut self, optimizer: AdamWConfig);

    /// One optimizer step on `batch`; returns the loss before the update.
    fn train_step(&mut self, batch: &MaskedSequence, lr: f64) -> Result<f64, FinetuneError>;

    /// Loss on `batch` without updating.
    fn loss(&self, batch: &MaskedSequence) -> Result<f64, FinetuneError>;

    fn snapshot(&self) -> Self::Snapshot;

    fn restore(&mut self, snapshot: &Self::Snapshot);

    fn max_sequence_length(&self) -> usize;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FinetuneConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub warmup_steps: usize,
    pub optimizer: AdamWConfig,
    pub masking: MlmMaskingPolicy,
    pub seed: u64,
}

impl Default for FinetuneConfig {
    fn default() -> Self {
        Self {
            epochs: 3,
            batch_size: 1,
            learning_rate: 5e-5,
            warmup_steps: 0,
            optimizer: AdamWConfig::default(),
            masking: MlmMaskingPolicy::default(),
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainLogEntry {
    pub step: usize,
    pub epoch: usize,
    pub lr: f64,
    pub loss: f64,
}

pub struct Finetuned<M: TrainableMlm> {
    pub model: M,
    pub pre_state: M::Snapshot,
    pub log: Vec<TrainLogEntry>,
    /// Learning rate for steps `0..=total`; the last entry is the value after the final step.
    pub lr_trace: Vec<f64>,
}

fn encode_sentence<M: TrainableMlm>(model: &M, sentence: &str) -> Result<(Vec<u32>, Vec<u8>), FinetuneError> {
    let max = model.max_sequence_length();
    let special = model.special_tokens();
    let mut ids = model.encode(sentence)?.ids;
    if ids.len() > max {
        ids.truncate(max - usize::from(special.sep.is_some()));
        ids.extend(special.sep);
    }
    let n = ids.len();
    let length = fixed_length(&[&ids])?.min(max);
    ids.resize(length, special.pad);
    let mut attention = vec![1u8; n];
    attention.resize(length, 0);
    Ok((ids, attention))
}

/// Fine-tunes `model` on `sentences` with batch size one.
///
/// Runs exactly `epochs × sentences.len()` optimizer steps.
pub fn finetune<M: TrainableMlm>(
    mut model: M,
    sentences: &[String],
    config: &FinetuneConfig,
) -> Result<Finetuned<M>, FinetuneError> {
    if sentences.is_empty() {
        return Err(FinetuneError::EmptyCorpus);
    }
    if config.batch_size != 1 {
        return Err(FinetuneError::InvalidConfig("only batch size 1 is supported".into()));
    }
    if config.learning_rate.is_nan() || config.learning_rate <= 0.0 {
        return Err(FinetuneError::InvalidConfig("learning rate must be positive".into()));
    }
    config.masking.validate()?;
    let encoded: Vec<(Vec<u32>, Vec<u8>)> =
        sentences.iter().map(|s| encode_sentence(&model, s)).collect::<Result<_, _>>()?;
    let special = model.special_tokens();
    for (index, (ids, att)) in encoded.iter().enumerate() {
        if !ids.iter().zip(att).any(|(&id, &a)| a == 1 && (!special.is_special(id) || id == special.unk)) {
            return Err(FinetuneError::EmptySentence { index });
        }
    }

    let pre_state = model.snapshot();
    let total = config.epochs * sentences.len();
    let schedule = LinearSchedule { base: config.learning_rate, warmup: config.warmup_steps, total };
    let vocab = model.vocab_size();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..sentences.len()).collect();
    let mut log = Vec::with_capacity(total);
    model.begin_training(config.optimizer);
    let mut step = 0;
    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let (ids, att) = &encoded[i];
            let batch = mask_inputs(ids, att, &special, vocab, &config.masking, &mut rng)?;
            let lr = schedule.lr(step);
            let loss = model.train_step(&batch, lr)?;
            step += 1;
            if !loss.is_finite() {
                return Err(FinetuneError::DivergenceDetected { step, loss });
            }
            log.push(TrainLogEntry { step, epoch, lr, loss });
        }
    }
    Ok(Finetuned { model, pre_state, log, lr_trace: schedule.trace() })
}

/// Tab-separated training log: step, epoch, lr, loss.
pub fn write_training_log<W: Write>(out: W, log: &[TrainLogEntry]) -> Result<(), FinetuneError> {
    let mut wtr = csv::WriterBuilder::new().delimiter(b'\t').from_writer(out);
    for e in log {
        wtr.serialize(e)?;
    }
    wtr.flush()?;
    Ok(())
}
