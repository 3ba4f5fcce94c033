//! The masked-LM scorer contract, batch encoding, and association scoring.
//!
//! Any backend (the in-process toy model, or a remote service wrapping a
//! pretrained checkpoint) implements [`Tokenizer`] + [`MlmScorer`]. The scoring
//! pipeline only ever asks for the probability of one vocabulary entry at one
//! masked position, so a backend may answer that query directly instead of
//! materialising the whole distribution.

mod conformance;
mod records;
mod scoring;
pub mod tokenizer;

use thiserror::Error;

pub use conformance::{check_scorer, ConformanceFailure, ConformanceReport, DEFAULT_PROBES};
pub use records::{read_records, read_records_json, write_records, write_records_json, RECORD_COLUMNS};
pub use scoring::{
    association, encode_batch, fixed_length, score_corpus, score_corpus_partial, target_probability,
    AssociationRecord, EncodedBatch, ModelState, ScoreOptions, ScoredCorpus, PROBABILITY_FLOOR,
};
pub use tokenizer::{Encoding, SpecialTokens, WordPieceTokenizer};

#[derive(Debug, Error)]
pub enum MlmError {
    #[error("empty batch")]
    EmptyBatch,
    #[error("could not tokenize {text:?}: {reason}")]
    TokenizationFailure { text: String, reason: String },
    #[error("token {0:?} is not in the vocabulary")]
    TokenNotInVocabulary(String),
    #[error("position {0} does not hold a mask token")]
    PositionNotMasked(usize),
    #[error("position {position} is outside a sequence of length {len}")]
    PositionOutOfRange { position: usize, len: usize },
    #[error("probability {0} is not in (0, 1]")]
    NonPositiveProbability(f64),
    #[error("sequence of {len} tokens exceeds the model's context width {max}")]
    SequenceTooLong { len: usize, max: usize },
    #[error("invalid vocabulary: {0}")]
    InvalidVocabulary(String),
    #[error("instance {id} has no masking variants")]
    MissingVariants { id: String },
    #[error("instance {id}: expected one mask for the target, found {found}")]
    TargetMaskCount { id: String, found: usize },
    #[error("target {word:?} splits into {pieces} sub-tokens")]
    TargetNotSingleToken { word: String, pieces: usize },
    #[error("backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("backend error {code}: {message}")]
    Backend { code: String, message: String },
    #[error("instance {id}: {source}")]
    Instance {
        id: String,
        #[source]
        source: Box<MlmError>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl MlmError {
    /// True when the failure came from an unreachable or failing backend.
    pub fn is_backend(&self) -> bool {
        match self {
            MlmError::BackendUnavailable(_) | MlmError::Backend { .. } => true,
            MlmError::Instance { source, .. } => source.is_backend(),
            _ => false,
        }
    }
}

/// Text to token ids, with vocabulary lookups.
pub trait Tokenizer {
    /// Sub-tokens of `text`, without sequence-level special tokens.
    fn tokenize(&self, text: &str) -> Result<Encoding, MlmError>;

    fn special_tokens(&self) -> SpecialTokens;

    fn vocab_index(&self, token: &str) -> Option<u32>;

    fn vocab_size(&self) -> usize;

    /// `tokenize` wrapped in `[CLS] … [SEP]` when the backend uses them.
    fn encode(&self, text: &str) -> Result<Encoding, MlmError> {
        let inner = self.tokenize(text)?;
        let special = self.special_tokens();
        let mut enc = Encoding::default();
        if let Some(cls) = special.cls {
            enc.ids.push(cls);
            enc.tokens.push(tokenizer::CLS.to_string());
            enc.word_ids.push(None);
        }
        enc.ids.extend(inner.ids);
        enc.tokens.extend(inner.tokens);
        enc.word_ids.extend(inner.word_ids);
        if let Some(sep) = special.sep {
            enc.ids.push(sep);
            enc.tokens.push(tokenizer::SEP.to_string());
            enc.word_ids.push(None);
        }
        Ok(enc)
    }
}

/// A masked language model that can be queried for the distribution at a position.
///
/// Implementations must be deterministic for fixed inputs and model state and
/// safe to query concurrently.
pub trait MlmScorer: Tokenizer + Send + Sync {
    /// Probability vector over the vocabulary at `position`; sums to 1.
    fn distribution(&self, ids: &[u32], attention: &[u8], position: usize) -> Result<Vec<f64>, MlmError>;

    /// Probability of `token` at `position`.
    fn probability(&self, ids: &[u32], attention: &[u8], position: usize, token: u32) -> Result<f64, MlmError> {
        let dist = self.distribution(ids, attention, position)?;
        dist.get(token as usize).copied().ok_or_else(|| MlmError::TokenNotInVocabulary(token.to_string()))
    }

    /// Backend identity recorded in run manifests.
    fn describe(&self) -> String {
        "unknown".to_string()
    }
}

impl Tokenizer for WordPieceTokenizer {
    fn tokenize(&self, text: &str) -> Result<Encoding, MlmError> {
        Ok(WordPieceTokenizer::tokenize(self, text))
    }

    fn special_tokens(&self) -> SpecialTokens {
        WordPieceTokenizer::special_tokens(self)
    }

    fn vocab_index(&self, token: &str) -> Option<u32> {
        self.token_id(token)
    }

    fn vocab_size(&self) -> usize {
        WordPieceTokenizer::vocab_size(self)
    }
}
