use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{Context, Result};
use becpro::corpus::{
    apply_masking, default_persons, default_professions, expand_templates, load_persons_path, load_professions_path,
    templates, write_corpus,
};
use becpro::{Language, Tokenizer, WordPieceTokenizer};
use clap::Args;

use super::{create, create_out_dir};
use crate::backend::{Backend, BackendSpec};
use crate::manifest::ManifestBuilder;
use crate::RunContext;

#[derive(Debug, Args)]
pub struct CorpusArgs {
    /// Profession list (TSV); the built-in list when omitted
    #[arg(long)]
    professions: Option<PathBuf>,
    /// Person word list (TSV); the built-in list when omitted
    #[arg(long)]
    persons: Option<PathBuf>,
}

pub fn run(ctx: RunContext, args: CorpusArgs) -> Result<()> {
    let started = Instant::now();
    let lang = ctx.config.lang;
    let mut manifest = ManifestBuilder::new(ctx.command, &ctx.config, &ctx.out);
    let professions = match &args.professions {
        Some(p) => {
            let list = load_professions_path(p).with_context(|| format!("professions file {}", p.display()))?;
            manifest.input(p)?;
            list
        }
        None => default_professions(),
    };
    let persons = match &args.persons {
        Some(p) => {
            let list = load_persons_path(p).with_context(|| format!("persons file {}", p.display()))?;
            manifest.input(p)?;
            list
        }
        None => default_persons(),
    };
    let expanded = expand_templates(&templates(lang), &persons, &professions, lang)?;

    let backend = match &ctx.config.backend {
        Some(spec) => Some(Backend::open(&spec.parse::<BackendSpec>().map_err(anyhow::Error::msg)?)?),
        None => None,
    };
    let fallback;
    let tokenizer: &dyn Tokenizer = match &backend {
        Some(b) => {
            manifest.backend(b.scorer().describe());
            b.scorer()
        }
        None => {
            let sentences: Vec<&str> = expanded.iter().map(|i| i.sentence.as_str()).collect();
            fallback = WordPieceTokenizer::from_texts(&sentences, lang == Language::English, usize::MAX)?;
            &fallback
        }
    };
    let instances = expanded.into_iter().map(|i| apply_masking(i, tokenizer)).collect::<Result<Vec<_>, _>>()?;

    create_out_dir(&ctx.out)?;
    let path = manifest.output(&format!("corpus_{}.tsv", lang.code()));
    let mut out = create(&path)?;
    write_corpus(&mut out, &instances)?;
    out.flush()?;
    manifest.write()?;
    println!(
        "{} instances ({} persons x {} professions x 5 templates) -> {} in {:.2}s",
        instances.len(),
        persons.len(),
        professions.len(),
        path.display(),
        started.elapsed().as_secs_f64()
    );
    Ok(())
}
