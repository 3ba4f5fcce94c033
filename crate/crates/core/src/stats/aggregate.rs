use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::wilcoxon::{effect_size_r, wilcoxon_signed_rank, PairedSample, WilcoxonOptions, WilcoxonResult};
use super::StatsError;
use crate::corpus::{pair_key, Gender, ProfessionGroup};
use crate::mlm::{AssociationRecord, ModelState};

/// Which records a [`GroupStats`] row covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    /// One (group × gender) cell.
    Cell,
    /// Both genders of a group together.
    Pooled,
}

/// Pre/post comparison for one cell or one pooled group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub scope: Scope,
    pub group: ProfessionGroup,
    pub gender: Option<Gender>,
    pub n: usize,
    pub mean_pre: f64,
    pub mean_post: f64,
    pub mean_diff: f64,
    /// `None` when every difference is zero.
    pub wilcoxon: Option<WilcoxonResult>,
    pub r: Option<f64>,
}

/// Female-vs-male paired comparison within a group under one model state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenderContrast {
    pub group: ProfessionGroup,
    pub state: ModelState,
    pub n: usize,
    pub mean_female: f64,
    pub mean_male: f64,
    /// `mean_female − mean_male`.
    pub mean_diff: f64,
    pub wilcoxon: Option<WilcoxonResult>,
    pub r: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    /// Six cells in group order B, F, M with female before male.
    pub cells: Vec<GroupStats>,
    pub pooled: Vec<GroupStats>,
    pub contrasts: Vec<GenderContrast>,
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

fn index<'a>(records: &'a [AssociationRecord], label: &str) -> Result<BTreeMap<&'a str, &'a AssociationRecord>, StatsError> {
    let mut map = BTreeMap::new();
    for r in records {
        if map.insert(r.instance_id.as_str(), r).is_some() {
            return Err(StatsError::KeyMismatch(format!("{label} records repeat instance {}", r.instance_id)));
        }
    }
    Ok(map)
}

fn test(
    keys: Vec<String>,
    x: Vec<f64>,
    y: Vec<f64>,
    options: WilcoxonOptions,
) -> Result<(Option<WilcoxonResult>, Option<f64>), StatsError> {
    let sample = PairedSample::new(keys, x, y)?;
    match wilcoxon_signed_rank(&sample, options) {
        Ok(w) => Ok((Some(w), Some(effect_size_r(w.z, w.n_effective)?))),
        Err(StatsError::DegenerateSample) => Ok((None, None)),
        Err(e) => Err(e),
    }
}

fn group_stats(
    scope: Scope,
    group: ProfessionGroup,
    gender: Option<Gender>,
    pairs: &[(&AssociationRecord, &AssociationRecord)],
    options: WilcoxonOptions,
) -> Result<GroupStats, StatsError> {
    let keys: Vec<String> = pairs.iter().map(|(a, _)| a.instance_id.clone()).collect();
    let pre: Vec<f64> = pairs.iter().map(|(a, _)| a.score).collect();
    let post: Vec<f64> = pairs.iter().map(|(_, b)| b.score).collect();
    let diffs: Vec<f64> = pre.iter().zip(&post).map(|(a, b)| b - a).collect();
    let (mean_pre, mean_post, mean_diff) = (mean(&pre), mean(&post), mean(&diffs));
    let (wilcoxon, r) = test(keys, pre, post, options)?;
    Ok(GroupStats { scope, group, gender, n: pairs.len(), mean_pre, mean_post, mean_diff, wilcoxon, r })
}

/// Pairs female and male records of each group by their shared pair key.
pub fn gender_contrasts(
    records: &[AssociationRecord],
    state: ModelState,
    options: WilcoxonOptions,
) -> Result<Vec<GenderContrast>, StatsError> {
    let by_id = index(records, "scored")?;
    let mut out = Vec::with_capacity(3);
    for group in ProfessionGroup::ALL {
        let mut female: BTreeMap<String, f64> = BTreeMap::new();
        let mut male: HashMap<String, f64> = HashMap::new();
        for r in by_id.values().filter(|r| r.group == group) {
            let slot = match r.gender {
                Gender::Female => female.insert(pair_key(&r.instance_id), r.score),
                Gender::Male => male.insert(pair_key(&r.instance_id), r.score),
            };
            if slot.is_some() {
                return Err(StatsError::KeyMismatch(format!("pair key of {} is not unique", r.instance_id)));
            }
        }
        if female.len() != male.len() {
            return Err(StatsError::KeyMismatch(format!(
                "group {group}: {} female and {} male records",
                female.len(),
                male.len()
            )));
        }
        if female.is_empty() {
            continue;
        }
        let mut keys = Vec::with_capacity(female.len());
        let mut f = Vec::with_capacity(female.len());
        let mut m = Vec::with_capacity(female.len());
        for (k, v) in female {
            let Some(mv) = male.get(&k) else {
                return Err(StatsError::KeyMismatch(format!("no male counterpart for pair {k}")));
            };
            f.push(v);
            m.push(*mv);
            keys.push(k);
        }
        let diffs: Vec<f64> = f.iter().zip(&m).map(|(a, b)| a - b).collect();
        let (mean_female, mean_male, mean_diff) = (mean(&f), mean(&m), mean(&diffs));
        let (wilcoxon, r) = test(keys.clone(), m, f, options)?;
        out.push(GenderContrast { group, state, n: keys.len(), mean_female, mean_male, mean_diff, wilcoxon, r });
    }
    Ok(out)
}

/// Per-cell and per-group pre/post tests plus female-vs-male contrasts.
///
/// `pre` and `post` must cover the same instance ids. Record order does not
/// affect the result.
pub fn aggregate(
    pre: &[AssociationRecord],
    post: &[AssociationRecord],
    options: WilcoxonOptions,
) -> Result<Aggregate, StatsError> {
    let pre_map = index(pre, "pre")?;
    let post_map = index(post, "post")?;
    if pre_map.len() != post_map.len() {
        return Err(StatsError::KeyMismatch(format!("{} pre records vs {} post records", pre_map.len(), post_map.len())));
    }
    let mut pairs = Vec::with_capacity(pre_map.len());
    for (id, a) in &pre_map {
        let b = post_map.get(id).ok_or_else(|| StatsError::KeyMismatch(format!("instance {id} has no post record")))?;
        if a.group != b.group || a.gender != b.gender {
            return Err(StatsError::KeyMismatch(format!("instance {id} changes group or gender between states")));
        }
        pairs.push((*a, *b));
    }
    let mut cells = Vec::with_capacity(6);
    let mut pooled = Vec::with_capacity(3);
    for group in ProfessionGroup::ALL {
        let in_group: Vec<_> = pairs.iter().copied().filter(|(a, _)| a.group == group).collect();
        if in_group.is_empty() {
            continue;
        }
        for gender in Gender::ALL {
            let cell: Vec<_> = in_group.iter().copied().filter(|(a, _)| a.gender == gender).collect();
            if !cell.is_empty() {
                cells.push(group_stats(Scope::Cell, group, Some(gender), &cell, options)?);
            }
        }
        pooled.push(group_stats(Scope::Pooled, group, None, &in_group, options)?);
    }
    let mut contrasts = gender_contrasts(pre, ModelState::Pre, options)?;
    contrasts.extend(gender_contrasts(post, ModelState::Post, options)?);
    Ok(Aggregate { cells, pooled, contrasts })
}
