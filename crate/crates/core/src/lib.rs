//! Measuring and mitigating gender-profession association bias in masked
//! language models.
//!
//! The pipeline builds a template corpus of person words and professions,
//! scores each sentence with a masked-LM backend, compares the scores with
//! paired non-parametric statistics, and optionally fine-tunes the model on a
//! gender-swapped corpus before scoring again.

pub mod bridge;
pub mod cds;
pub mod corpus;
pub mod finetune;
pub mod mlm;
pub mod optim;
pub mod pipeline;
pub mod report;
pub mod stats;
pub mod toy;

pub use corpus::{Gender, Language, PersonWord, ProfessionEntry, ProfessionGroup, SentenceInstance};
pub use bridge::BridgeClient;
pub use cds::{GapDocument, GenderPairLexicon, NamePairList};
pub use finetune::{FinetuneConfig, MlmMaskingPolicy, TrainableMlm};
pub use mlm::{AssociationRecord, MlmError, MlmScorer, ModelState, Tokenizer, WordPieceTokenizer};
pub use stats::{GroupStats, HypothesisVerdict, WilcoxonResult};
pub use toy::{ToyMlm, ToyMlmConfig};
