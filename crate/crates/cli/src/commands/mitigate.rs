use std::io::Write;
use std::path::PathBuf;
use std::time::Duration;

use anyhow::{Context, Result};
use becpro::bridge::JobState;
use becpro::cds::{
    audit_balance, read_gap_path, substitute_corpus, write_gap, BalanceAudit, ResolverMiss, SubstituteOptions,
};
use becpro::finetune::{finetune, write_training_log, FinetuneError};
use becpro::pipeline::mitigation_sentences;
use becpro::{GenderPairLexicon, MlmError, MlmScorer, NamePairList};
use clap::Args;
use serde::Serialize;

use super::{create, create_out_dir, write_json};
use crate::backend::{self, Backend};
use crate::manifest::ManifestBuilder;
use crate::RunContext;

#[derive(Debug, Args)]
pub struct MitigateArgs {
    /// GAP-style TSV with a Text column
    #[arg(long)]
    gap: PathBuf,
    /// Gendered word pairs (TSV); the built-in English list when omitted
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// First-name pairs (TSV); the built-in list when omitted
    #[arg(long)]
    names: Option<PathBuf>,
    /// Probability that a document is flipped
    #[arg(long)]
    swap_probability: Option<f64>,
    /// Fine-tuning epochs (3 unless configured)
    #[arg(long)]
    epochs: Option<usize>,
    /// Peak learning rate (5e-5 unless configured)
    #[arg(long)]
    learning_rate: Option<f64>,
    /// Linear warm-up steps before the decay (0 unless configured)
    #[arg(long)]
    warmup_steps: Option<usize>,
    /// AdamW weight decay (0 unless configured)
    #[arg(long)]
    weight_decay: Option<f64>,
    /// Clip the global gradient norm to this value
    #[arg(long)]
    max_grad_norm: Option<f64>,
    /// Seconds between job status polls on a bridge backend
    #[arg(long, default_value_t = 2.0)]
    poll_interval: f64,
}

#[derive(Serialize)]
struct CdsAudit {
    documents: usize,
    flipped_documents: usize,
    sentences: usize,
    resolver_misses: usize,
    before: BalanceAudit,
    after: BalanceAudit,
}

#[derive(Serialize)]
struct StepSummary {
    sentences: usize,
    epochs: usize,
    steps: usize,
    final_loss: Option<f64>,
}

pub fn run(mut ctx: RunContext, args: MitigateArgs) -> Result<()> {
    let cfg = &mut ctx.config;
    if let Some(p) = args.swap_probability {
        cfg.cds.swap_probability = p;
    }
    if let Some(e) = args.epochs {
        cfg.finetune.epochs = e;
    }
    if let Some(lr) = args.learning_rate {
        cfg.finetune.learning_rate = lr;
    }
    if let Some(w) = args.warmup_steps {
        cfg.finetune.warmup_steps = w;
    }
    if let Some(wd) = args.weight_decay {
        cfg.finetune.optimizer.weight_decay = wd;
    }
    if args.max_grad_norm.is_some() {
        cfg.finetune.optimizer.max_grad_norm = args.max_grad_norm;
    }
    let spec = backend::required(ctx.config.backend.as_deref())?;
    let mut manifest = ManifestBuilder::new(ctx.command, &ctx.config, &ctx.out);
    manifest.seed("cds", ctx.config.seed);
    manifest.seed("finetune", ctx.config.finetune.seed);

    let lexicon = match &args.lexicon {
        Some(p) => {
            manifest.input(p)?;
            GenderPairLexicon::load(p).with_context(|| format!("lexicon {}", p.display()))?
        }
        None => GenderPairLexicon::default_english(),
    };
    let names = match &args.names {
        Some(p) => {
            manifest.input(p)?;
            NamePairList::load(p).with_context(|| format!("name pairs {}", p.display()))?
        }
        None => NamePairList::default_english(),
    };
    let corpus = read_gap_path(&args.gap).with_context(|| format!("GAP corpus {}", args.gap.display()))?;
    manifest.input(&args.gap)?;

    let backend = Backend::open(&spec)?;
    manifest.backend(backend.scorer().describe());
    if let Backend::Bridge(client) = &backend {
        if !client.health().supports_finetune {
            return Err(FinetuneError::Unsupported(format!(
                "{} cannot fine-tune; mitigation is toy-model-only unless the bridge supports it (use --backend toy:<checkpoint>)",
                client.describe()
            ))
            .into());
        }
    }

    let options = SubstituteOptions {
        strict: ctx.config.strict,
        default_discriminator: ctx.config.cds.default_discriminator.clone(),
        ..SubstituteOptions::default()
    };
    let outcomes =
        substitute_corpus(&corpus.documents, &lexicon, &names, ctx.config.cds.swap_probability, ctx.config.seed, &options)?;
    let sentences = mitigation_sentences(&outcomes);
    let misses: Vec<&ResolverMiss> = outcomes.iter().flat_map(|o| &o.misses).collect();
    let audit = CdsAudit {
        documents: outcomes.len(),
        flipped_documents: outcomes.iter().filter(|o| o.flipped).count(),
        sentences: sentences.len(),
        resolver_misses: misses.len(),
        before: audit_balance(corpus.documents.iter().map(|d| d.text.as_str()), &lexicon),
        after: audit_balance(outcomes.iter().map(|o| o.document.text.as_str()), &lexicon),
    };

    create_out_dir(&ctx.out)?;
    let cds_path = manifest.output("cds_corpus.tsv");
    let mut out = create(&cds_path)?;
    write_gap(&mut out, &corpus, &outcomes)?;
    out.flush()?;
    write_json(&manifest.output("cds_audit.json"), &audit)?;
    let mut wtr = csv::WriterBuilder::new().delimiter(b'\t').from_writer(create(&manifest.output("resolver_misses.tsv"))?);
    for m in &misses {
        wtr.serialize(m)?;
    }
    wtr.flush()?;
    drop(wtr);

    match backend {
        Backend::Toy { model, .. } => {
            model.save(&manifest.output("model_pre.json"))?;
            let ft = finetune(model, &sentences, &ctx.config.finetune)?;
            if ft.log.len() != ctx.config.finetune.epochs * sentences.len() {
                return Err(crate::exit::InvariantBreach(format!(
                    "{} steps for {} epochs over {} sentences",
                    ft.log.len(),
                    ctx.config.finetune.epochs,
                    sentences.len()
                ))
                .into());
            }
            ft.model.save(&manifest.output("model_post.json"))?;
            let mut log_out = create(&manifest.output("training_log.tsv"))?;
            write_training_log(&mut log_out, &ft.log)?;
            log_out.flush()?;
            let summary = StepSummary {
                sentences: sentences.len(),
                epochs: ctx.config.finetune.epochs,
                steps: ft.log.len(),
                final_loss: ft.log.last().map(|e| e.loss),
            };
            write_json(&manifest.output("finetune_summary.json"), &summary)?;
            println!(
                "flipped {}/{} documents, {} sentences, {} fine-tuning steps -> {}",
                audit.flipped_documents,
                audit.documents,
                summary.sentences,
                summary.steps,
                ctx.out.join("model_post.json").display()
            );
        }
        Backend::Bridge(client) => {
            let job = client.finetune_start(&sentences, &ctx.config.finetune)?;
            println!("bridge fine-tuning job {job} started");
            let status = loop {
                let status = client.finetune_status(&job)?;
                match status.state {
                    JobState::Done | JobState::Failed => break status,
                    _ => std::thread::sleep(Duration::from_secs_f64(args.poll_interval.max(0.0))),
                }
            };
            write_json(&manifest.output("finetune_job.json"), &status)?;
            if status.state == JobState::Failed {
                manifest.write()?;
                return Err(MlmError::Backend {
                    code: "finetune-failed".into(),
                    message: status.message.unwrap_or_else(|| format!("job {job} failed")),
                }
                .into());
            }
            println!("job {job} done; post-state handle {}", status.checkpoint.as_deref().unwrap_or("(none)"));
        }
    }
    manifest.write()?;
    Ok(())
}
