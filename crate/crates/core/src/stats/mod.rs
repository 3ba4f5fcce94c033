//! Group means, paired signed-rank tests, effect sizes and hypothesis checks.

mod aggregate;
mod hypothesis;
mod wilcoxon;

use std::io::Write;

use serde::Serialize;
use thiserror::Error;

pub use aggregate::{aggregate, gender_contrasts, Aggregate, GenderContrast, GroupStats, Scope};
pub use hypothesis::{hypothesis_check, Hypothesis, HypothesisThresholds, HypothesisVerdict, Setting};
pub use wilcoxon::{
    effect_size_r, wilcoxon_differences, wilcoxon_signed_rank, Alternative, PairedSample, WilcoxonMode,
    WilcoxonOptions, WilcoxonResult, ZeroMethod, EXACT_AUTO_LIMIT,
};

use crate::corpus::{Gender, ProfessionGroup};

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("every difference is zero")]
    DegenerateSample,
    #[error("sample size must be positive")]
    NonPositiveN,
    #[error("sample contains a non-finite value")]
    NonFinite,
    #[error("paired sample lengths differ: {keys} keys, {x} x, {y} y")]
    LengthMismatch { keys: usize, x: usize, y: usize },
    #[error("duplicate key {0}")]
    DuplicateKey(String),
    #[error("records do not line up: {0}")]
    KeyMismatch(String),
    #[error("no statistics for group {group}, gender {gender}")]
    MissingCell { group: ProfessionGroup, gender: Gender },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// One exported row; `test` is `none` when every difference was zero.
#[derive(Debug, Serialize)]
struct StatsRow {
    scope: String,
    group: ProfessionGroup,
    gender: String,
    n: usize,
    mean_pre: f64,
    mean_post: f64,
    mean_diff: f64,
    w: Option<f64>,
    w_plus: Option<f64>,
    w_minus: Option<f64>,
    z: Option<f64>,
    p: Option<f64>,
    r: Option<f64>,
    n_effective: Option<usize>,
    test: &'static str,
}

fn test_label(w: Option<&WilcoxonResult>) -> &'static str {
    match w {
        None => "none",
        Some(w) if w.exact => "exact",
        Some(_) => "normal",
    }
}

fn stats_row(s: &GroupStats) -> StatsRow {
    let w = s.wilcoxon.as_ref();
    StatsRow {
        scope: match s.scope {
            Scope::Cell => "cell".into(),
            Scope::Pooled => "pooled".into(),
        },
        group: s.group,
        gender: s.gender.map_or("both".into(), |g| g.to_string()),
        n: s.n,
        mean_pre: s.mean_pre,
        mean_post: s.mean_post,
        mean_diff: s.mean_diff,
        w: w.map(|w| w.w),
        w_plus: w.map(|w| w.w_plus),
        w_minus: w.map(|w| w.w_minus),
        z: w.map(|w| w.z),
        p: w.map(|w| w.p),
        r: s.r,
        n_effective: w.map(|w| w.n_effective),
        test: test_label(w),
    }
}

/// Table-5-style rows (cells, then pooled groups) as tab-separated text.
pub fn write_group_stats<W: Write>(out: W, aggregate: &Aggregate) -> Result<(), StatsError> {
    let mut wtr = csv::WriterBuilder::new().delimiter(b'\t').from_writer(out);
    for s in aggregate.cells.iter().chain(&aggregate.pooled) {
        wtr.serialize(stats_row(s))?;
    }
    wtr.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct ContrastRow {
    group: ProfessionGroup,
    state: String,
    n: usize,
    mean_female: f64,
    mean_male: f64,
    mean_diff: f64,
    w: Option<f64>,
    z: Option<f64>,
    p: Option<f64>,
    r: Option<f64>,
    test: &'static str,
}

/// Female-vs-male contrasts as tab-separated text.
pub fn write_contrasts<W: Write>(out: W, contrasts: &[GenderContrast]) -> Result<(), StatsError> {
    let mut wtr = csv::WriterBuilder::new().delimiter(b'\t').from_writer(out);
    for c in contrasts {
        let w = c.wilcoxon.as_ref();
        wtr.serialize(ContrastRow {
            group: c.group,
            state: c.state.to_string(),
            n: c.n,
            mean_female: c.mean_female,
            mean_male: c.mean_male,
            mean_diff: c.mean_diff,
            w: w.map(|w| w.w),
            z: w.map(|w| w.z),
            p: w.map(|w| w.p),
            r: c.r,
            test: test_label(w),
        })?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_aggregate_json<W: Write>(out: W, aggregate: &Aggregate) -> Result<(), StatsError> {
    serde_json::to_writer_pretty(out, aggregate)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_rows_are_marked() {
        let agg = Aggregate {
            cells: vec![GroupStats {
                scope: Scope::Cell,
                group: ProfessionGroup::Balanced,
                gender: Some(Gender::Female),
                n: 2,
                mean_pre: 0.5,
                mean_post: 0.5,
                mean_diff: 0.0,
                wilcoxon: None,
                r: None,
            }],
            pooled: vec![],
            contrasts: vec![],
        };
        let mut buf = Vec::new();
        write_group_stats(&mut buf, &agg).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("scope\tgroup\tgender\tn\tmean_pre"));
        assert!(text.lines().nth(1).unwrap().ends_with("\t\t\t\t\t\t\t\tnone"));
    }
}
