use serde::{Deserialize, Serialize};

use super::aggregate::{GroupStats, Scope};
use super::StatsError;
use crate::corpus::{Gender, ProfessionGroup};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Hypothesis {
    H1,
    H2,
    H3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Setting {
    ProTypical,
    AntiTypical,
    Balanced,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HypothesisThresholds {
    /// Largest |mean_pre(f) − mean_pre(m)| accepted as balanced.
    pub balanced_gap: f64,
    /// Largest |mean_diff| accepted as unchanged.
    pub balanced_diff: f64,
}

impl Default for HypothesisThresholds {
    fn default() -> Self {
        Self { balanced_gap: 0.1, balanced_diff: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisVerdict {
    pub hypothesis: Hypothesis,
    pub setting: Setting,
    pub group: ProfessionGroup,
    /// `None` for the group-level balanced verdict.
    pub gender: Option<Gender>,
    pub expected: String,
    pub observed: String,
    /// The sign clause on the pre-state mean.
    pub pre_clause: bool,
    /// The direction clause on the change after mitigation.
    pub post_clause: bool,
    pub pass: bool,
}

fn cell(stats: &[GroupStats], group: ProfessionGroup, gender: Gender) -> Result<&GroupStats, StatsError> {
    stats
        .iter()
        .find(|s| s.scope == Scope::Cell && s.group == group && s.gender == Some(gender))
        .ok_or(StatsError::MissingCell { group, gender })
}

/// Checks the expected pattern per setting.
///
/// Pro-typical cells (F/female, M/male) expect a positive pre mean that
/// decreases; anti-typical cells (M/female, F/male) a negative pre mean that
/// increases; balanced cells a small gender gap before and little change.
pub fn hypothesis_check(
    stats: &[GroupStats],
    thresholds: HypothesisThresholds,
) -> Result<Vec<HypothesisVerdict>, StatsError> {
    let mut out = Vec::with_capacity(7);
    let typed = [
        (Hypothesis::H1, Setting::ProTypical, ProfessionGroup::FemaleDominated, Gender::Female),
        (Hypothesis::H1, Setting::ProTypical, ProfessionGroup::MaleDominated, Gender::Male),
        (Hypothesis::H2, Setting::AntiTypical, ProfessionGroup::MaleDominated, Gender::Female),
        (Hypothesis::H2, Setting::AntiTypical, ProfessionGroup::FemaleDominated, Gender::Male),
    ];
    for (hypothesis, setting, group, gender) in typed {
        let c = cell(stats, group, gender)?;
        let (pre_clause, post_clause, expected) = match setting {
            Setting::ProTypical => (c.mean_pre > 0.0, c.mean_post < c.mean_pre, "pre > 0, post < pre"),
            _ => (c.mean_pre < 0.0, c.mean_post > c.mean_pre, "pre < 0, post > pre"),
        };
        out.push(HypothesisVerdict {
            hypothesis,
            setting,
            group,
            gender: Some(gender),
            expected: expected.into(),
            observed: format!("pre {:.4}, post {:.4}", c.mean_pre, c.mean_post),
            pre_clause,
            post_clause,
            pass: pre_clause && post_clause,
        });
    }

    let f = cell(stats, ProfessionGroup::Balanced, Gender::Female)?;
    let m = cell(stats, ProfessionGroup::Balanced, Gender::Male)?;
    let gap = (f.mean_pre - m.mean_pre).abs();
    let gap_ok = gap <= thresholds.balanced_gap;
    let expected = format!("|pre_f - pre_m| <= {}, |diff| <= {}", thresholds.balanced_gap, thresholds.balanced_diff);
    for c in [f, m] {
        let diff_ok = c.mean_diff.abs() <= thresholds.balanced_diff;
        out.push(HypothesisVerdict {
            hypothesis: Hypothesis::H3,
            setting: Setting::Balanced,
            group: ProfessionGroup::Balanced,
            gender: c.gender,
            expected: expected.clone(),
            observed: format!("gap {gap:.4}, diff {:.4}", c.mean_diff),
            pre_clause: gap_ok,
            post_clause: diff_ok,
            pass: gap_ok && diff_ok,
        });
    }
    let both_ok = f.mean_diff.abs() <= thresholds.balanced_diff && m.mean_diff.abs() <= thresholds.balanced_diff;
    out.push(HypothesisVerdict {
        hypothesis: Hypothesis::H3,
        setting: Setting::Balanced,
        group: ProfessionGroup::Balanced,
        gender: None,
        expected,
        observed: format!("gap {gap:.4}, diff f {:.4}, diff m {:.4}", f.mean_diff, m.mean_diff),
        pre_clause: gap_ok,
        post_clause: both_ok,
        pass: gap_ok && both_ok,
    });
    Ok(out)
}
