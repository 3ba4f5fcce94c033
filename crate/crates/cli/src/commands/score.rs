use std::io::Write;
use std::path::PathBuf;

use anyhow::{Context, Result};
use becpro::corpus::{apply_masking, read_corpus};
use becpro::mlm::{check_scorer, score_corpus_partial, write_records, ScoreOptions, DEFAULT_PROBES};
use becpro::{MlmError, ModelState};
use clap::Args;
use serde::Serialize;

use super::{create, create_out_dir, open};
use crate::backend::{self, Backend};
use crate::exit::PartialFailure;
use crate::manifest::ManifestBuilder;
use crate::RunContext;

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Corpus file written by corpus-build
    #[arg(long)]
    corpus: PathBuf,
    /// Model state tag stored in every record
    #[arg(long, default_value = "pre")]
    state: ModelState,
    /// Sentences per scoring batch
    #[arg(long)]
    batch_size: Option<usize>,
}

#[derive(Serialize)]
struct FailureRow {
    instance_id: String,
    backend: bool,
    error: String,
}

pub fn run(mut ctx: RunContext, args: ScoreArgs) -> Result<()> {
    if let Some(b) = args.batch_size {
        ctx.config.score.batch_size = b;
    }
    let spec = backend::required(ctx.config.backend.as_deref())?;
    let mut manifest = ManifestBuilder::new(ctx.command, &ctx.config, &ctx.out);
    let instances = read_corpus(open(&args.corpus)?).with_context(|| format!("corpus {}", args.corpus.display()))?;
    manifest.input(&args.corpus)?;
    let backend = Backend::open(&spec)?;
    if let Backend::Toy { path, .. } = &backend {
        manifest.input(path)?;
    }
    let scorer = backend.scorer();
    manifest.backend(scorer.describe());
    let conformance = check_scorer(scorer, &DEFAULT_PROBES).context("backend failed the conformance checks")?;
    log::info!("conformance: {conformance:?}");

    let mut failures: Vec<(String, MlmError)> = Vec::new();
    let mut masked = Vec::with_capacity(instances.len());
    for inst in instances.iter().cloned() {
        let (id, text) = (inst.id.clone(), inst.sentence.clone());
        match apply_masking(inst, scorer) {
            Ok(i) => masked.push(i),
            Err(becpro::corpus::CorpusError::Tokenizer(e)) => failures.push((id, e)),
            Err(e) => failures.push((id, MlmError::TokenizationFailure { text, reason: e.to_string() })),
        }
    }
    let scored = score_corpus_partial(scorer, &masked, args.state, ScoreOptions { batch_size: ctx.config.score.batch_size });
    failures.extend(scored.failures);

    create_out_dir(&ctx.out)?;
    let path = manifest.output(&format!("records_{}.tsv", args.state));
    let mut out = create(&path)?;
    write_records(&mut out, &scored.records)?;
    out.flush()?;
    let failure_path = ctx.out.join(format!("failures_{}.tsv", args.state));
    if failures.is_empty() {
        if failure_path.exists() {
            std::fs::remove_file(&failure_path)?;
        }
    } else {
        let report = manifest.output(&format!("failures_{}.tsv", args.state));
        let mut wtr = csv::WriterBuilder::new().delimiter(b'\t').from_writer(create(&report)?);
        for (instance_id, e) in &failures {
            wtr.serialize(FailureRow { instance_id: instance_id.clone(), backend: e.is_backend(), error: e.to_string() })?;
        }
        wtr.flush()?;
    }
    manifest.write()?;
    println!("{} records -> {}", scored.records.len(), path.display());
    if !failures.is_empty() {
        let backend = failures.iter().any(|(_, e)| e.is_backend());
        return Err(PartialFailure {
            failed: failures.len(),
            total: instances.len(),
            report: failure_path.display().to_string(),
            backend,
        }
        .into());
    }
    Ok(())
}
