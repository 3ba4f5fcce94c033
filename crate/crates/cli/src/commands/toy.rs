use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use becpro::cds::write_gap_corpus;
use becpro::corpus::write_corpus;
use becpro::toy::fixture::planted_bias_fixture;
use becpro::toy::train;
use clap::Args;

use super::{create, create_out_dir, write_json};
use crate::manifest::ManifestBuilder;
use crate::RunContext;

#[derive(Debug, Args)]
pub struct ToyTrainArgs {
    /// Plain-text training corpus, one sentence per line
    #[arg(long, conflicts_with = "planted")]
    corpus: Option<PathBuf>,
    /// Train on the planted-bias fixture and write its scoring corpus and GAP file
    #[arg(long)]
    planted: bool,
    /// Bias strength of the planted fixture
    #[arg(long, default_value_t = 1.0, requires = "planted")]
    strength: f64,
    /// Documents in the fixture GAP file (0 writes none)
    #[arg(long, default_value_t = 20_000, requires = "planted")]
    gap_documents: usize,
    /// Training epochs of the toy model
    #[arg(long)]
    epochs: Option<usize>,
}

pub fn run(mut ctx: RunContext, args: ToyTrainArgs) -> Result<()> {
    if let Some(e) = args.epochs {
        ctx.config.toy.epochs = e;
    }
    let mut manifest = ManifestBuilder::new(ctx.command, &ctx.config, &ctx.out);
    manifest.seed("toy", ctx.config.toy.seed);
    create_out_dir(&ctx.out)?;
    let (model, report) = if args.planted {
        let fixture = planted_bias_fixture(args.strength, ctx.config.seed);
        manifest.seed("fixture", ctx.config.seed);
        let (model, report) = train(&fixture.training_corpus, ctx.config.toy)?;
        let mut out = create(&manifest.output("fixture_corpus.tsv"))?;
        write_corpus(&mut out, &fixture.instances(&model)?)?;
        out.flush()?;
        if args.gap_documents > 0 {
            let mut out = create(&manifest.output("fixture_gap.tsv"))?;
            write_gap_corpus(&mut out, &fixture.gap_corpus(args.gap_documents, ctx.config.seed))?;
            out.flush()?;
        }
        (model, report)
    } else if let Some(path) = &args.corpus {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        manifest.input(path)?;
        let lines: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
        train(&lines, ctx.config.toy)?
    } else {
        bail!("toy-train needs --planted or --corpus <file>");
    };
    let path = manifest.output("model.json");
    model.save(&path)?;
    write_json(&manifest.output("train_report.json"), &report)?;
    manifest.write()?;
    println!(
        "vocabulary {}, loss {:.4} -> {:.4} -> {}",
        becpro::Tokenizer::vocab_size(&model),
        report.initial_loss,
        report.epoch_losses.last().copied().unwrap_or(report.initial_loss),
        path.display()
    );
    Ok(())
}
