//! Mapping errors to process exit codes.

use becpro::corpus::CorpusError;
use becpro::finetune::FinetuneError;
use becpro::mlm::ConformanceFailure;
use becpro::toy::ToyError;
use becpro::MlmError;
use thiserror::Error;

pub const USAGE: u8 = 2;
pub const BACKEND: u8 = 3;
pub const INTERNAL: u8 = 4;

/// A check the tool itself guarantees did not hold.
#[derive(Debug, Error)]
#[error("invariant violated: {0}")]
pub struct InvariantBreach(pub String);

/// Scoring finished but some instances failed.
#[derive(Debug, Error)]
#[error("{failed} of {total} instances failed; see {report}")]
pub struct PartialFailure {
    pub failed: usize,
    pub total: usize,
    pub report: String,
    pub backend: bool,
}

fn mlm_code(e: &MlmError) -> Option<u8> {
    e.is_backend().then_some(BACKEND)
}

fn code_of(cause: &(dyn std::error::Error + 'static)) -> Option<u8> {
    if let Some(e) = cause.downcast_ref::<MlmError>() {
        return mlm_code(e);
    }
    if let Some(CorpusError::Tokenizer(e)) = cause.downcast_ref::<CorpusError>() {
        return mlm_code(e);
    }
    if let Some(e) = cause.downcast_ref::<ToyError>() {
        return match e {
            ToyError::Mlm(m) => mlm_code(m),
            _ => None,
        };
    }
    if let Some(e) = cause.downcast_ref::<FinetuneError>() {
        return match e {
            FinetuneError::Mlm(m) => mlm_code(m),
            FinetuneError::DivergenceDetected { .. } => Some(INTERNAL),
            _ => None,
        };
    }
    if cause.downcast_ref::<ConformanceFailure>().is_some() {
        return Some(BACKEND);
    }
    if let Some(p) = cause.downcast_ref::<PartialFailure>() {
        return Some(if p.backend { BACKEND } else { USAGE });
    }
    if cause.downcast_ref::<InvariantBreach>().is_some() {
        return Some(INTERNAL);
    }
    None
}

/// 3 for backend failures, 4 for invariant breaches, otherwise 2.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    err.chain().find_map(code_of).unwrap_or(USAGE)
}
