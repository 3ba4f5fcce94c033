use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use becpro::mlm::{read_records, read_records_json};
use becpro::report::{
    planted_gender_gap, plot_series, profession_table, write_plot_series, write_profession_table, write_verdicts,
};
use becpro::stats::{
    aggregate, hypothesis_check, write_aggregate_json, write_contrasts, write_group_stats, Scope, StatsError,
    WilcoxonOptions,
};
use becpro::{AssociationRecord, ModelState, ProfessionGroup};
use clap::Args;

use super::{create, create_out_dir, open, write_json};
use crate::exit::InvariantBreach;
use crate::manifest::ManifestBuilder;
use crate::RunContext;

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Pre-mitigation records (TSV, or JSON by extension)
    #[arg(long)]
    pre: PathBuf,
    /// Post-mitigation records (TSV, or JSON by extension)
    #[arg(long)]
    post: PathBuf,
}

fn load(path: &Path, expected: ModelState) -> Result<Vec<AssociationRecord>> {
    let file = open(path)?;
    let records = if path.extension().is_some_and(|e| e == "json") { read_records_json(file) } else { read_records(file) }
        .with_context(|| format!("records {}", path.display()))?;
    if let Some(r) = records.iter().find(|r| r.model_state != expected) {
        anyhow::bail!("{}: record {} is tagged {}, expected {expected}", path.display(), r.instance_id, r.model_state);
    }
    Ok(records)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |v| format!("{v:.4}"))
}

pub fn run(ctx: RunContext, args: ReportArgs) -> Result<()> {
    let mut manifest = ManifestBuilder::new(ctx.command, &ctx.config, &ctx.out);
    let pre = load(&args.pre, ModelState::Pre)?;
    let post = load(&args.post, ModelState::Post)?;
    manifest.input(&args.pre)?;
    manifest.input(&args.post)?;

    let agg = aggregate(&pre, &post, WilcoxonOptions::default())?;
    let verdicts = match hypothesis_check(&agg.cells, ctx.config.report) {
        Ok(v) => v,
        Err(StatsError::MissingCell { group, gender }) => {
            log::warn!("no hypothesis verdicts: records have no {group}/{gender} cell");
            Vec::new()
        }
        Err(e) => return Err(e.into()),
    };

    create_out_dir(&ctx.out)?;
    let mut out = create(&manifest.output("group_stats.tsv"))?;
    write_group_stats(&mut out, &agg)?;
    out.flush()?;
    let mut out = create(&manifest.output("group_stats.json"))?;
    write_aggregate_json(&mut out, &agg)?;
    out.flush()?;
    let mut out = create(&manifest.output("contrasts.tsv"))?;
    write_contrasts(&mut out, &agg.contrasts)?;
    out.flush()?;

    let mut all_rows = Vec::new();
    for group in ProfessionGroup::ALL {
        let rows = profession_table(&pre, &post, group);
        if rows.windows(2).any(|w| w[0].abs_diff < w[1].abs_diff) {
            return Err(InvariantBreach(format!("{group} profession rows are not sorted by abs_diff")).into());
        }
        let mut out = create(&manifest.output(&format!("professions_{}.tsv", group.code())))?;
        write_profession_table(&mut out, &rows)?;
        out.flush()?;
        all_rows.extend(rows);
    }
    let mut out = create(&manifest.output("plot_series.tsv"))?;
    write_plot_series(&mut out, &plot_series(&all_rows))?;
    out.flush()?;
    let mut out = create(&manifest.output("verdicts.tsv"))?;
    write_verdicts(&mut out, &verdicts)?;
    out.flush()?;
    write_json(&manifest.output("verdicts.json"), &verdicts)?;
    manifest.write()?;

    println!("{:<6} {:<7} {:<6} {:>5} {:>9} {:>9} {:>9} {:>10} {:>8}", "scope", "group", "gender", "n", "pre", "post", "diff", "p", "r");
    for s in agg.cells.iter().chain(&agg.pooled) {
        println!(
            "{:<6} {:<7} {:<6} {:>5} {:>9.4} {:>9.4} {:>9.4} {:>10} {:>8}",
            if s.scope == Scope::Cell { "cell" } else { "pooled" },
            s.group.code(),
            s.gender.map_or("both".into(), |g| g.to_string()),
            s.n,
            s.mean_pre,
            s.mean_post,
            s.mean_diff,
            s.wilcoxon.as_ref().map_or_else(|| "-".into(), |w| format!("{:.3e}", w.p)),
            fmt_opt(s.r),
        );
    }
    for v in &verdicts {
        println!(
            "{:?} {:<6} {:<6} {}  ({})",
            v.hypothesis,
            v.group.code(),
            v.gender.map_or("both".into(), |g| g.to_string()),
            if v.pass { "PASS" } else { "FAIL" },
            v.observed
        );
    }
    if let (Some(a), Some(b)) = (planted_gender_gap(&pre), planted_gender_gap(&post)) {
        println!("gender gap over F and M professions: pre {a:.4}, post {b:.4}");
    }
    Ok(())
}
