use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{MlmError, MlmScorer, Tokenizer};
use crate::corpus::{Gender, Language, ProfessionGroup, SentenceInstance};

/// Probabilities below this are clamped before taking logs.
pub const PROBABILITY_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelState {
    Pre,
    Post,
}

impl std::fmt::Display for ModelState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelState::Pre => "pre",
            ModelState::Post => "post",
        })
    }
}

impl std::str::FromStr for ModelState {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pre" => Ok(ModelState::Pre),
            "post" => Ok(ModelState::Post),
            other => Err(format!("unknown model state {other:?}")),
        }
    }
}

/// Association of one instance's target with its attribute under one model state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssociationRecord {
    pub instance_id: String,
    pub template_id: u8,
    pub person: String,
    pub gender: Gender,
    pub profession: String,
    pub group: ProfessionGroup,
    pub language: Language,
    pub p_target: f64,
    pub p_prior: f64,
    pub score: f64,
    pub model_state: ModelState,
    /// Either probability was raised to [`PROBABILITY_FLOOR`].
    pub clamped: bool,
}

/// Smallest power of two that fits the longest sequence.
pub fn fixed_length<S: AsRef<[u32]>>(batch: &[S]) -> Result<usize, MlmError> {
    let longest = batch.iter().map(|s| s.as_ref().len()).max().ok_or(MlmError::EmptyBatch)?;
    Ok(longest.max(1).next_power_of_two())
}

/// Token ids padded to a common power-of-two length, with attention masks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedBatch {
    pub length: usize,
    pub ids: Vec<Vec<u32>>,
    pub attention: Vec<Vec<u8>>,
    /// Positions holding the mask token, per row.
    pub mask_positions: Vec<Vec<usize>>,
    /// Unpadded token count per row.
    pub token_counts: Vec<usize>,
}

/// Encodes `sentences` with sequence-level special tokens and pads them.
pub fn encode_batch<T: Tokenizer + ?Sized, S: AsRef<str>>(
    sentences: &[S],
    tokenizer: &T,
) -> Result<EncodedBatch, MlmError> {
    if sentences.is_empty() {
        return Err(MlmError::EmptyBatch);
    }
    let special = tokenizer.special_tokens();
    let encoded: Vec<Vec<u32>> =
        sentences.iter().map(|s| tokenizer.encode(s.as_ref()).map(|e| e.ids)).collect::<Result<_, _>>()?;
    let length = fixed_length(&encoded)?;
    let mut batch = EncodedBatch {
        length,
        ids: Vec::with_capacity(encoded.len()),
        attention: Vec::with_capacity(encoded.len()),
        mask_positions: Vec::with_capacity(encoded.len()),
        token_counts: Vec::with_capacity(encoded.len()),
    };
    for mut ids in encoded {
        let n = ids.len();
        batch.mask_positions.push(ids.iter().enumerate().filter(|(_, &t)| t == special.mask).map(|(i, _)| i).collect());
        ids.resize(length, special.pad);
        let mut mask = vec![1u8; n];
        mask.resize(length, 0);
        batch.ids.push(ids);
        batch.attention.push(mask);
        batch.token_counts.push(n);
    }
    Ok(batch)
}

/// Log ratio of target to prior probability.
pub fn association(p_target: f64, p_prior: f64) -> Result<f64, MlmError> {
    for p in [p_target, p_prior] {
        if !(p > 0.0 && p <= 1.0) {
            return Err(MlmError::NonPositiveProbability(p));
        }
    }
    Ok(p_target.ln() - p_prior.ln())
}

/// Probability that `target` fills the mask at `position` of an encoded row.
pub fn target_probability<S: MlmScorer + ?Sized>(
    scorer: &S,
    ids: &[u32],
    attention: &[u8],
    target: &str,
    position: usize,
) -> Result<f64, MlmError> {
    let target_id = target_id(scorer, target)?;
    if position >= ids.len() {
        return Err(MlmError::PositionOutOfRange { position, len: ids.len() });
    }
    if ids[position] != scorer.special_tokens().mask {
        return Err(MlmError::PositionNotMasked(position));
    }
    scorer.probability(ids, attention, position, target_id)
}

/// Vocabulary id of a target word after the scorer's own normalisation.
fn target_id<T: Tokenizer + ?Sized>(tokenizer: &T, target: &str) -> Result<u32, MlmError> {
    let enc = tokenizer.tokenize(target)?;
    match enc.ids.as_slice() {
        [id] if *id != tokenizer.special_tokens().unk => Ok(*id),
        [_] | [] => Err(MlmError::TokenNotInVocabulary(target.to_string())),
        pieces => Err(MlmError::TargetNotSingleToken { word: target.to_string(), pieces: pieces.len() }),
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ScoreOptions {
    pub batch_size: usize,
}

impl Default for ScoreOptions {
    fn default() -> Self {
        Self { batch_size: 32 }
    }
}

/// Records that scored plus the instances that failed.
#[derive(Debug, Default)]
pub struct ScoredCorpus {
    pub records: Vec<AssociationRecord>,
    pub failures: Vec<(String, MlmError)>,
}

struct Prepared<'a> {
    inst: &'a SentenceInstance,
    target: u32,
    position: usize,
}

fn prepare<'a, S: MlmScorer + ?Sized>(
    scorer: &S,
    inst: &'a SentenceInstance,
) -> Result<(Prepared<'a>, &'a str, &'a str), MlmError> {
    let v = inst.variants.as_ref().ok_or_else(|| MlmError::MissingVariants { id: inst.id.clone() })?;
    let mask = scorer.special_tokens().mask;
    let t_enc = scorer.encode(&v.target_masked)?;
    let masks = t_enc.positions_of(mask);
    let [position] = masks[..] else {
        return Err(MlmError::TargetMaskCount { id: inst.id.clone(), found: masks.len() });
    };
    let ta_enc = scorer.encode(&v.both_masked)?;
    if ta_enc.ids.get(position) != Some(&mask) {
        return Err(MlmError::PositionNotMasked(position));
    }
    let target = target_id(scorer, &inst.target)?;
    Ok((Prepared { inst, target, position }, &v.target_masked, &v.both_masked))
}

fn score_batch<S: MlmScorer + ?Sized>(
    scorer: &S,
    chunk: &[SentenceInstance],
    state: ModelState,
) -> Vec<Result<AssociationRecord, (String, MlmError)>> {
    let mut prepared = Vec::with_capacity(chunk.len());
    let mut out: Vec<Option<Result<AssociationRecord, (String, MlmError)>>> = Vec::with_capacity(chunk.len());
    out.resize_with(chunk.len(), || None);
    let mut targets = Vec::new();
    let mut priors = Vec::new();
    for (i, inst) in chunk.iter().enumerate() {
        match prepare(scorer, inst) {
            Ok((p, t, ta)) => {
                prepared.push((i, p));
                targets.push(t);
                priors.push(ta);
            }
            Err(e) => out[i] = Some(Err((inst.id.clone(), e))),
        }
    }
    if !prepared.is_empty() {
        let batches = encode_batch(&targets, scorer).and_then(|t| Ok((t, encode_batch(&priors, scorer)?)));
        match batches {
            Err(e) => {
                let msg = e.to_string();
                for (i, p) in &prepared {
                    out[*i] = Some(Err((
                        p.inst.id.clone(),
                        MlmError::TokenizationFailure { text: p.inst.sentence.clone(), reason: msg.clone() },
                    )));
                }
            }
            Ok((tb, pb)) => {
                for (row, (i, p)) in prepared.iter().enumerate() {
                    let result = (|| {
                        let p_t = scorer.probability(&tb.ids[row], &tb.attention[row], p.position, p.target)?;
                        let p_p = scorer.probability(&pb.ids[row], &pb.attention[row], p.position, p.target)?;
                        record(p.inst, p_t, p_p, state)
                    })();
                    out[*i] = Some(result.map_err(|e: MlmError| (p.inst.id.clone(), e)));
                }
            }
        }
    }
    out.into_iter().map(|r| r.expect("every row resolved")).collect()
}

fn record(inst: &SentenceInstance, p_target: f64, p_prior: f64, state: ModelState) -> Result<AssociationRecord, MlmError> {
    if !(p_target.is_finite() && p_prior.is_finite() && p_target >= 0.0 && p_prior >= 0.0) {
        return Err(MlmError::NonPositiveProbability(if p_target.is_finite() { p_prior } else { p_target }));
    }
    let clamped = p_target < PROBABILITY_FLOOR || p_prior < PROBABILITY_FLOOR;
    let p_target = p_target.clamp(PROBABILITY_FLOOR, 1.0);
    let p_prior = p_prior.clamp(PROBABILITY_FLOOR, 1.0);
    Ok(AssociationRecord {
        instance_id: inst.id.clone(),
        template_id: inst.template_id,
        person: inst.person.clone(),
        gender: inst.gender,
        profession: inst.profession.clone(),
        group: inst.group,
        language: inst.language,
        p_target,
        p_prior,
        score: association(p_target, p_prior)?,
        model_state: state,
        clamped,
    })
}

/// Scores every instance, collecting failures instead of stopping at the first.
///
/// The target probability comes from the target-masked variant and the prior
/// from the variant with both target and attribute masked, at the same
/// position. Output order follows `instances`.
pub fn score_corpus_partial<S: MlmScorer + ?Sized>(
    scorer: &S,
    instances: &[SentenceInstance],
    state: ModelState,
    options: ScoreOptions,
) -> ScoredCorpus {
    let results: Vec<_> = instances
        .par_chunks(options.batch_size.max(1))
        .map(|chunk| score_batch(scorer, chunk, state))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    let mut scored = ScoredCorpus::default();
    for r in results {
        match r {
            Ok(rec) => scored.records.push(rec),
            Err(f) => scored.failures.push(f),
        }
    }
    scored
}

/// Scores every instance; the first failure is returned annotated with its instance id.
pub fn score_corpus<S: MlmScorer + ?Sized>(
    scorer: &S,
    instances: &[SentenceInstance],
    state: ModelState,
    options: ScoreOptions,
) -> Result<Vec<AssociationRecord>, MlmError> {
    let mut scored = score_corpus_partial(scorer, instances, state, options);
    if !scored.failures.is_empty() {
        let (id, source) = scored.failures.swap_remove(0);
        return Err(MlmError::Instance { id, source: Box::new(source) });
    }
    Ok(scored.records)
}
