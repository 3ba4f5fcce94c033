//! Checks every backend must pass before its scores are trusted.

use thiserror::Error;

use super::{MlmError, MlmScorer};

pub const DEFAULT_PROBES: [&str; 4] = [
    "[MASK] is a nurse.",
    "my [MASK] works as a plumber.",
    "[MASK] is a [MASK].",
    "my [MASK], the [MASK] [MASK], had a good day at work.",
];

const NORMALIZATION_TOLERANCE: f64 = 1e-6;
const PADDING_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum ConformanceFailure {
    #[error("probe {probe:?}: {source}")]
    Scorer {
        probe: String,
        #[source]
        source: MlmError,
    },
    #[error("probe {probe:?}: no mask token after encoding")]
    NoMask { probe: String },
    #[error("probe {probe:?}: distribution has {got} entries, vocabulary has {expected}")]
    Length { probe: String, got: usize, expected: usize },
    #[error("probe {probe:?}: distribution sums to {sum}")]
    NotNormalized { probe: String, sum: f64 },
    #[error("probe {probe:?}: entry {index} is {value}")]
    BadEntry { probe: String, index: usize, value: f64 },
    #[error("probe {probe:?}: repeated query returned a different distribution")]
    NonDeterministic { probe: String },
    #[error("probe {probe:?}: probability({token}) = {single} but distribution gives {full}")]
    ProbabilityMismatch { probe: String, token: u32, single: f64, full: f64 },
    #[error("token {token:?}: vocab_index gives {got:?}, tokenizer gives {expected}")]
    VocabRoundTrip { token: String, got: Option<u32>, expected: u32 },
    #[error("probe {probe:?}: padding changed the distribution by {delta}")]
    PaddingSensitive { probe: String, delta: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConformanceReport {
    pub probes: usize,
    pub max_normalization_error: f64,
    pub max_padding_delta: f64,
}

/// Runs normalization, determinism, single-probability, vocabulary and
/// padding checks over `probes` (each must contain at least one mask).
pub fn check_scorer<S: MlmScorer + ?Sized>(scorer: &S, probes: &[&str]) -> Result<ConformanceReport, ConformanceFailure> {
    let special = scorer.special_tokens();
    let vocab = scorer.vocab_size();
    let mut report = ConformanceReport { probes: 0, max_normalization_error: 0.0, max_padding_delta: 0.0 };
    for &probe in probes {
        let wrap = |source| ConformanceFailure::Scorer { probe: probe.to_string(), source };
        let enc = scorer.encode(probe).map_err(wrap)?;
        for (tok, &id) in enc.tokens.iter().zip(&enc.ids) {
            if id == special.unk {
                continue;
            }
            let got = scorer.vocab_index(tok);
            if got != Some(id) {
                return Err(ConformanceFailure::VocabRoundTrip { token: tok.clone(), got, expected: id });
            }
        }
        let attention = vec![1u8; enc.len()];
        let Some(position) = enc.ids.iter().position(|&t| t == special.mask) else {
            return Err(ConformanceFailure::NoMask { probe: probe.to_string() });
        };
        let dist = scorer.distribution(&enc.ids, &attention, position).map_err(wrap)?;
        if dist.len() != vocab {
            return Err(ConformanceFailure::Length { probe: probe.to_string(), got: dist.len(), expected: vocab });
        }
        if let Some((index, &value)) = dist.iter().enumerate().find(|(_, p)| !(p.is_finite() && (0.0..=1.0).contains(*p)))
        {
            return Err(ConformanceFailure::BadEntry { probe: probe.to_string(), index, value });
        }
        let sum: f64 = dist.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(ConformanceFailure::NotNormalized { probe: probe.to_string(), sum });
        }
        report.max_normalization_error = report.max_normalization_error.max((sum - 1.0).abs());

        let again = scorer.distribution(&enc.ids, &attention, position).map_err(wrap)?;
        if again.iter().zip(&dist).any(|(a, b)| a.to_bits() != b.to_bits()) {
            return Err(ConformanceFailure::NonDeterministic { probe: probe.to_string() });
        }

        for &token in enc.ids.iter().chain([special.mask, (vocab - 1) as u32].iter()) {
            let single = scorer.probability(&enc.ids, &attention, position, token).map_err(wrap)?;
            let full = dist[token as usize];
            if (single - full).abs() > 1e-12 * full.max(1e-300).max(1.0) {
                return Err(ConformanceFailure::ProbabilityMismatch { probe: probe.to_string(), token, single, full });
            }
        }

        let mut padded = enc.ids.clone();
        padded.resize(enc.len() * 2, special.pad);
        let mut padded_attention = attention.clone();
        padded_attention.resize(enc.len() * 2, 0);
        let padded_dist = scorer.distribution(&padded, &padded_attention, position).map_err(wrap)?;
        let delta = padded_dist.iter().zip(&dist).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if delta > PADDING_TOLERANCE {
            return Err(ConformanceFailure::PaddingSensitive { probe: probe.to_string(), delta });
        }
        report.max_padding_delta = report.max_padding_delta.max(delta);
        report.probes += 1;
    }
    Ok(report)
}
