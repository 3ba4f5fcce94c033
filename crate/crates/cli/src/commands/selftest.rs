use std::collections::BTreeMap;

use anyhow::Result;
use becpro::cds::{flip_text, SubstituteOptions};
use becpro::corpus::{default_persons, default_professions, expand_templates, templates};
use becpro::mlm::{association, check_scorer, DEFAULT_PROBES};
use becpro::pipeline::{run_planted_mitigation, PlantedRunConfig};
use becpro::stats::{effect_size_r, wilcoxon_differences, WilcoxonOptions};
use becpro::toy::fixture::planted_bias_fixture;
use becpro::toy::train;
use becpro::{GenderPairLexicon, Language, NamePairList};
use clap::Args;

use crate::backend::{self, Backend};
use crate::exit::InvariantBreach;
use crate::RunContext;

#[derive(Debug, Args)]
pub struct SelftestArgs {
    /// Also run the planted-bias mitigation end to end
    #[arg(long)]
    full: bool,
    /// GAP documents for the end-to-end run
    #[arg(long, default_value_t = 20_000)]
    gap_documents: usize,
}

type Check = Result<String, String>;

fn corpus_counts(language: Language) -> Check {
    let inst = expand_templates(&templates(language), &default_persons(), &default_professions(), language)
        .map_err(|e| e.to_string())?;
    let mut cells: BTreeMap<(String, char), usize> = BTreeMap::new();
    for i in &inst {
        *cells.entry((i.group.code().to_string(), i.gender.code())).or_default() += 1;
    }
    if inst.len() == 5400 && cells.len() == 6 && cells.values().all(|&c| c == 900) {
        Ok(format!("{} instances, 900 per group x gender cell", inst.len()))
    } else {
        Err(format!("{} instances, cells {cells:?}", inst.len()))
    }
}

fn algebra() -> Check {
    let s = association(0.2, 0.1).map_err(|e| e.to_string())?;
    if (s - 2f64.ln()).abs() < 1e-12 {
        Ok(format!("ln(0.2/0.1) = {s:.12}"))
    } else {
        Err(format!("ln(0.2/0.1) computed as {s}"))
    }
}

fn wilcoxon() -> Check {
    let w = wilcoxon_differences(&[1.0, 2.0, 3.0], WilcoxonOptions::default()).map_err(|e| e.to_string())?;
    let r = effect_size_r(4.0, 16).map_err(|e| e.to_string())?;
    if w.w_plus == 6.0 && w.exact && (w.p - 0.25).abs() < 1e-12 && r == 1.0 {
        Ok(format!("exact W+ = {}, p = {}", w.w_plus, w.p))
    } else {
        Err(format!("W+ = {}, p = {}, exact = {}, r = {r}", w.w_plus, w.p, w.exact))
    }
}

fn cds() -> Check {
    let (lex, names) = (GenderPairLexicon::default_english(), NamePairList::default_english());
    let options = SubstituteOptions::default();
    let text = "The King told his Uncle that John had left.";
    let (once, _) = flip_text("selftest", text, &lex, &names, &options).map_err(|e| e.to_string())?;
    let (twice, _) = flip_text("selftest", &once, &lex, &names, &options).map_err(|e| e.to_string())?;
    if twice == text && once != text {
        Ok(format!("{text:?} -> {once:?} -> back"))
    } else {
        Err(format!("{text:?} -> {once:?} -> {twice:?}"))
    }
}

fn toy_conformance(ctx: &RunContext) -> Check {
    let fixture = planted_bias_fixture(1.0, ctx.config.seed);
    let (model, _) = train(&fixture.training_corpus, ctx.config.toy).map_err(|e| e.to_string())?;
    let report = check_scorer(&model, &DEFAULT_PROBES).map_err(|e| e.to_string())?;
    Ok(format!("{} probes, normalization error {:.2e}", report.probes, report.max_normalization_error))
}

fn planted(ctx: &RunContext, gap_documents: usize) -> Check {
    let config = PlantedRunConfig {
        seed: ctx.config.seed,
        toy: ctx.config.toy,
        gap_documents,
        swap_probability: ctx.config.cds.swap_probability,
        finetune: ctx.config.finetune,
        ..PlantedRunConfig::default()
    };
    let run = run_planted_mitigation(&config).map_err(|e| e.to_string())?;
    let shrink = run.gap_shrink();
    let msg = format!("gap {:.4} -> {:.4} ({:.1}% smaller)", run.gap_pre, run.gap_post, 100.0 * shrink);
    if shrink >= 0.3 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

pub fn run(ctx: RunContext, args: SelftestArgs) -> Result<()> {
    let mut checks: Vec<(&str, Check)> = vec![
        ("corpus-en", corpus_counts(Language::English)),
        ("corpus-de", corpus_counts(Language::German)),
        ("association", algebra()),
        ("wilcoxon", wilcoxon()),
        ("cds-involution", cds()),
        ("toy-conformance", toy_conformance(&ctx)),
    ];
    if args.full {
        checks.push(("planted-mitigation", planted(&ctx, args.gap_documents)));
    }
    let mut failed = 0;
    for (name, result) in &checks {
        match result {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    if let Some(spec) = ctx.config.backend.as_deref() {
        let backend = Backend::open(&backend::required(Some(spec))?)?;
        let report = check_scorer(backend.scorer(), &DEFAULT_PROBES)?;
        println!("PASS backend-conformance: {} ({} probes)", backend.scorer().describe(), report.probes);
    }
    if failed > 0 {
        return Err(InvariantBreach(format!("{failed} of {} self-checks failed", checks.len())).into());
    }
    Ok(())
}
