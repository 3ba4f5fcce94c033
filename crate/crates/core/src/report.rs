//! Per-profession tables, plot series and mitigation gap summaries.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::corpus::{Gender, ProfessionGroup};
use crate::mlm::{AssociationRecord, ModelState};
use crate::stats::{HypothesisVerdict, StatsError};

/// Mean associations of one profession before and after mitigation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfessionReportRow {
    pub profession: String,
    pub group: ProfessionGroup,
    pub pre_female: f64,
    pub pre_male: f64,
    pub post_female: f64,
    pub post_male: f64,
    /// Largest |post − pre| over the two genders.
    pub abs_diff: f64,
}

/// Profession index encoded in an instance id (`…-pNN`).
fn profession_key(instance_id: &str) -> &str {
    instance_id.rsplit('-').next().unwrap_or(instance_id)
}

#[derive(Default)]
struct Acc {
    names: [Option<String>; 2],
    sums: [[f64; 2]; 2],
    counts: [[usize; 2]; 2],
}

fn state_index(s: ModelState) -> usize {
    match s {
        ModelState::Pre => 0,
        ModelState::Post => 1,
    }
}

fn accumulate<'a, I>(records: I) -> BTreeMap<(ProfessionGroup, String), Acc>
where
    I: IntoIterator<Item = &'a AssociationRecord>,
{
    let mut map: BTreeMap<(ProfessionGroup, String), Acc> = BTreeMap::new();
    for r in records {
        let acc = map.entry((r.group, profession_key(&r.instance_id).to_string())).or_default();
        let g = r.gender as usize;
        acc.names[g].get_or_insert_with(|| r.profession.clone());
        acc.sums[state_index(r.model_state)][g] += r.score;
        acc.counts[state_index(r.model_state)][g] += 1;
    }
    map
}

fn display_name(names: &[Option<String>; 2]) -> String {
    match names {
        [Some(f), Some(m)] if f != m => format!("{f}/{m}"),
        [Some(n), _] | [None, Some(n)] => n.clone(),
        [None, None] => String::new(),
    }
}

/// Per-profession rows for `group`, sorted by `abs_diff` descending with the
/// profession name as tiebreak.
///
/// Professions are identified by their index in the instance id, so German
/// feminine and masculine forms share a row (shown as `feminine/masculine`).
pub fn profession_table(
    pre: &[AssociationRecord],
    post: &[AssociationRecord],
    group: ProfessionGroup,
) -> Vec<ProfessionReportRow> {
    let acc = accumulate(pre.iter().chain(post).filter(|r| r.group == group));
    let mean = |a: &Acc, s: usize, g: usize| {
        if a.counts[s][g] == 0 {
            f64::NAN
        } else {
            a.sums[s][g] / a.counts[s][g] as f64
        }
    };
    let mut rows: Vec<ProfessionReportRow> = acc
        .values()
        .map(|a| {
            let (pf, pm, qf, qm) = (mean(a, 0, 0), mean(a, 0, 1), mean(a, 1, 0), mean(a, 1, 1));
            ProfessionReportRow {
                profession: display_name(&a.names),
                group,
                pre_female: pf,
                pre_male: pm,
                post_female: qf,
                post_male: qm,
                abs_diff: (qf - pf).abs().max((qm - pm).abs()),
            }
        })
        .collect();
    rows.sort_by(|a, b| b.abs_diff.total_cmp(&a.abs_diff).then_with(|| a.profession.cmp(&b.profession)));
    rows
}

/// One bar of a pre/post chart: mean association for profession × gender × state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotPoint {
    pub group: ProfessionGroup,
    pub profession: String,
    pub gender: Gender,
    pub state: ModelState,
    pub mean: f64,
}

/// Long-format series in the same profession order as [`profession_table`].
pub fn plot_series(rows: &[ProfessionReportRow]) -> Vec<PlotPoint> {
    let mut out = Vec::with_capacity(rows.len() * 4);
    for r in rows {
        for (gender, state, mean) in [
            (Gender::Female, ModelState::Pre, r.pre_female),
            (Gender::Male, ModelState::Pre, r.pre_male),
            (Gender::Female, ModelState::Post, r.post_female),
            (Gender::Male, ModelState::Post, r.post_male),
        ] {
            out.push(PlotPoint { group: r.group, profession: r.profession.clone(), gender, state, mean });
        }
    }
    out
}

/// Mean over professions of the listed groups of |mean_female − mean_male|.
///
/// `records` should come from a single model state. Returns `None` when no
/// profession has records for both genders.
pub fn gender_gap(records: &[AssociationRecord], groups: &[ProfessionGroup]) -> Option<f64> {
    let mut acc: BTreeMap<&str, ([f64; 2], [usize; 2])> = BTreeMap::new();
    for r in records.iter().filter(|r| groups.contains(&r.group)) {
        let e = acc.entry(profession_key(&r.instance_id)).or_default();
        e.0[r.gender as usize] += r.score;
        e.1[r.gender as usize] += 1;
    }
    let gaps: Vec<f64> = acc
        .values()
        .filter(|(_, c)| c[0] > 0 && c[1] > 0)
        .map(|(s, c)| (s[0] / c[0] as f64 - s[1] / c[1] as f64).abs())
        .collect();
    (!gaps.is_empty()).then(|| gaps.iter().sum::<f64>() / gaps.len() as f64)
}

/// Gap over the female- and male-dominated groups.
pub fn planted_gender_gap(records: &[AssociationRecord]) -> Option<f64> {
    gender_gap(records, &[ProfessionGroup::FemaleDominated, ProfessionGroup::MaleDominated])
}

fn tsv<W: Write, T: Serialize>(out: W, rows: &[T]) -> Result<(), StatsError> {
    let mut wtr = csv::WriterBuilder::new().delimiter(b'\t').from_writer(out);
    for r in rows {
        wtr.serialize(r)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_profession_table<W: Write>(out: W, rows: &[ProfessionReportRow]) -> Result<(), StatsError> {
    tsv(out, rows)
}

pub fn write_plot_series<W: Write>(out: W, points: &[PlotPoint]) -> Result<(), StatsError> {
    tsv(out, points)
}

#[derive(Serialize)]
struct VerdictRow<'a> {
    hypothesis: String,
    setting: String,
    group: ProfessionGroup,
    gender: String,
    expected: &'a str,
    observed: &'a str,
    pre_clause: bool,
    post_clause: bool,
    pass: bool,
}

pub fn write_verdicts<W: Write>(out: W, verdicts: &[HypothesisVerdict]) -> Result<(), StatsError> {
    let rows: Vec<VerdictRow<'_>> = verdicts
        .iter()
        .map(|v| VerdictRow {
            hypothesis: format!("{:?}", v.hypothesis),
            setting: serde_json::to_value(v.setting).ok().and_then(|s| s.as_str().map(str::to_string)).unwrap_or_default(),
            group: v.group,
            gender: v.gender.map_or("both".into(), |g| g.to_string()),
            expected: &v.expected,
            observed: &v.observed,
            pre_clause: v.pre_clause,
            post_clause: v.post_clause,
            pass: v.pass,
        })
        .collect();
    tsv(out, &rows)
}
