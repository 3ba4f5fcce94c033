//! The planted-bias mitigation run: train a toy model on the planted corpus,
//! score it, substitute a GAP-shaped corpus, fine-tune, and score again.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cds::{
    split_sentences, substitute_corpus, CdsError, GapCorpus, GenderPairLexicon, NamePairList, SubstituteOptions,
    SubstitutionOutcome,
};
use crate::corpus::CorpusError;
use crate::finetune::{finetune, FinetuneConfig, FinetuneError, TrainLogEntry};
use crate::mlm::{score_corpus, AssociationRecord, MlmError, ModelState, ScoreOptions};
use crate::report::planted_gender_gap;
use crate::toy::fixture::{planted_bias_fixture, PlantedFixture};
use crate::toy::{train, ToyError, ToyMlm, ToyMlmConfig, TrainReport};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Mlm(#[from] MlmError),
    #[error(transparent)]
    Toy(#[from] ToyError),
    #[error(transparent)]
    Cds(#[from] CdsError),
    #[error(transparent)]
    Finetune(#[from] FinetuneError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlantedRunConfig {
    pub strength: f64,
    /// Seeds the fixture, the toy model, substitution and fine-tuning.
    pub seed: u64,
    pub toy: ToyMlmConfig,
    pub gap_documents: usize,
    pub swap_probability: f64,
    pub finetune: FinetuneConfig,
}

impl Default for PlantedRunConfig {
    fn default() -> Self {
        Self {
            strength: 1.0,
            seed: 42,
            toy: ToyMlmConfig::default(),
            gap_documents: 20_000,
            swap_probability: crate::cds::DEFAULT_SWAP_PROBABILITY,
            finetune: FinetuneConfig::default(),
        }
    }
}

pub struct PlantedRun {
    pub fixture: PlantedFixture,
    pub train_report: TrainReport,
    pub pre_model: ToyMlm,
    pub post_model: ToyMlm,
    pub gap_corpus: GapCorpus,
    pub substituted: Vec<SubstitutionOutcome>,
    pub sentences: Vec<String>,
    pub log: Vec<TrainLogEntry>,
    pub pre_records: Vec<AssociationRecord>,
    pub post_records: Vec<AssociationRecord>,
    pub gap_pre: f64,
    pub gap_post: f64,
}

impl PlantedRun {
    /// Relative reduction of the planted gender gap, `1 − post/pre`.
    pub fn gap_shrink(&self) -> f64 {
        1.0 - self.gap_post / self.gap_pre
    }
}

/// Sentences of every document, in corpus order, skipping blank ones.
pub fn mitigation_sentences(outcomes: &[SubstitutionOutcome]) -> Vec<String> {
    outcomes
        .iter()
        .flat_map(|o| split_sentences(&o.document.text).sentences.into_iter().map(str::to_string).collect::<Vec<_>>())
        .filter(|s| !s.trim().is_empty())
        .collect()
}

pub fn run_planted_mitigation(config: &PlantedRunConfig) -> Result<PlantedRun, PipelineError> {
    let fixture = planted_bias_fixture(config.strength, config.seed);
    let toy = ToyMlmConfig { seed: config.seed, ..config.toy };
    let (pre_model, train_report) = train(&fixture.training_corpus, toy)?;
    let instances = fixture.instances(&pre_model)?;
    let pre_records = score_corpus(&pre_model, &instances, ModelState::Pre, ScoreOptions::default())?;

    let gap_corpus = fixture.gap_corpus(config.gap_documents, config.seed);
    let substituted = substitute_corpus(
        &gap_corpus.documents,
        &GenderPairLexicon::default_english(),
        &NamePairList::default_english(),
        config.swap_probability,
        config.seed,
        &SubstituteOptions::default(),
    )?;
    let sentences = mitigation_sentences(&substituted);
    let ft = finetune(pre_model.clone(), &sentences, &FinetuneConfig { seed: config.seed, ..config.finetune })?;
    let post_records = score_corpus(&ft.model, &instances, ModelState::Post, ScoreOptions::default())?;
    let gap_pre = planted_gender_gap(&pre_records).unwrap_or(f64::NAN);
    let gap_post = planted_gender_gap(&post_records).unwrap_or(f64::NAN);
    Ok(PlantedRun {
        fixture,
        train_report,
        pre_model,
        post_model: ft.model,
        gap_corpus,
        substituted,
        sentences,
        log: ft.log,
        pre_records,
        post_records,
        gap_pre,
        gap_post,
    })
}
