use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::StatsError;

/// Sample sizes up to this use the exact null distribution in `Auto` mode.
pub const EXACT_AUTO_LIMIT: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WilcoxonMode {
    Exact,
    Approximate,
    #[default]
    Auto,
}

/// Direction of the alternative hypothesis for the differences `y − x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Alternative {
    #[default]
    TwoSided,
    Greater,
    Less,
}

/// Treatment of zero differences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ZeroMethod {
    /// Drop zeros before ranking.
    #[default]
    Wilcox,
    /// Rank zeros with the rest, then drop them.
    Pratt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct WilcoxonOptions {
    pub mode: WilcoxonMode,
    pub alternative: Alternative,
    pub zero_method: ZeroMethod,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// `min(w_plus, w_minus)`.
    pub w: f64,
    pub w_plus: f64,
    pub w_minus: f64,
    /// Normal-approximation statistic of `w_plus`, tie-corrected, without
    /// continuity correction; positive when differences tend to be positive.
    pub z: f64,
    pub p: f64,
    pub n_effective: usize,
    pub exact: bool,
    pub alternative: Alternative,
}

/// Paired scores sharing an instance key; differences are `y − x`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSample {
    keys: Vec<String>,
    x: Vec<f64>,
    y: Vec<f64>,
}

impl PairedSample {
    pub fn new(keys: Vec<String>, x: Vec<f64>, y: Vec<f64>) -> Result<Self, StatsError> {
        if keys.len() != x.len() || x.len() != y.len() {
            return Err(StatsError::LengthMismatch { keys: keys.len(), x: x.len(), y: y.len() });
        }
        let mut seen = std::collections::HashSet::with_capacity(keys.len());
        for k in &keys {
            if !seen.insert(k.as_str()) {
                return Err(StatsError::DuplicateKey(k.clone()));
            }
        }
        Ok(Self { keys, x, y })
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn keys(&self) -> &[String] {
        &self.keys
    }

    pub fn differences(&self) -> Vec<f64> {
        self.x.iter().zip(&self.y).map(|(x, y)| y - x).collect()
    }
}

/// Average ranks of `|d|` (1-based), doubled so that tied ranks stay integral.
///
/// Returns the doubled ranks in input order and the tie-group sizes.
pub(crate) fn doubled_ranks(abs: &[f64]) -> (Vec<u64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..abs.len()).collect();
    order.sort_by(|&a, &b| abs[a].total_cmp(&abs[b]));
    let mut ranks = vec![0u64; abs.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && abs[order[j]] == abs[order[i]] {
            j += 1;
        }
        let doubled = (i + 1 + j) as u64;
        for &k in &order[i..j] {
            ranks[k] = doubled;
        }
        if j - i > 1 {
            ties.push(j - i);
        }
        i = j;
    }
    (ranks, ties)
}

/// Null distribution of doubled `W+`: `dist[s]` = P(2·W+ = s) under
/// independent fair signs for each rank.
pub(crate) fn exact_null(doubled: &[u64]) -> Vec<f64> {
    let total: u64 = doubled.iter().sum();
    let mut dist = vec![0.0f64; total as usize + 1];
    dist[0] = 1.0;
    let mut reach = 0usize;
    for &r in doubled {
        let r = r as usize;
        for s in (0..=reach).rev() {
            let v = dist[s];
            if v != 0.0 {
                dist[s + r] += v * 0.5;
                dist[s] = v * 0.5;
            }
        }
        reach += r;
    }
    dist
}

fn standard_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

/// Wilcoxon signed-rank test on differences `d`.
pub fn wilcoxon_differences(d: &[f64], options: WilcoxonOptions) -> Result<WilcoxonResult, StatsError> {
    if d.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let n_zero = d.iter().filter(|v| **v == 0.0).count();
    let (abs, signs, offset): (Vec<f64>, Vec<f64>, usize) = match options.zero_method {
        ZeroMethod::Wilcox => {
            let nz: Vec<f64> = d.iter().copied().filter(|v| *v != 0.0).collect();
            (nz.iter().map(|v| v.abs()).collect(), nz, 0)
        }
        ZeroMethod::Pratt => (d.iter().map(|v| v.abs()).collect(), d.to_vec(), n_zero),
    };
    let n_eff = d.len() - n_zero;
    if n_eff == 0 {
        return Err(StatsError::DegenerateSample);
    }
    let (all_ranks, ties) = doubled_ranks(&abs);
    let ranks: Vec<u64> = all_ranks.iter().zip(&signs).filter(|(_, s)| **s != 0.0).map(|(r, _)| *r).collect();
    let doubled_plus: u64 = all_ranks.iter().zip(&signs).filter(|(_, s)| **s > 0.0).map(|(r, _)| *r).sum();
    let doubled_total: u64 = ranks.iter().sum();
    let w_plus = doubled_plus as f64 / 2.0;
    let w_minus = (doubled_total - doubled_plus) as f64 / 2.0;

    let n_all = (n_eff + offset) as f64;
    let n0 = offset as f64;
    let mean = (n_all * (n_all + 1.0) - n0 * (n0 + 1.0)) / 4.0;
    let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / 48.0;
    let var = (n_all * (n_all + 1.0) * (2.0 * n_all + 1.0) - n0 * (n0 + 1.0) * (2.0 * n0 + 1.0)) / 24.0 - tie_term;
    let sd = var.max(0.0).sqrt();
    let z = if sd > 0.0 { (w_plus - mean) / sd } else { 0.0 };

    let exact = match options.mode {
        WilcoxonMode::Exact => true,
        WilcoxonMode::Approximate => false,
        WilcoxonMode::Auto => n_eff <= EXACT_AUTO_LIMIT,
    };
    let p = if exact {
        let dist = exact_null(&ranks);
        let at = doubled_plus as usize;
        let lower: f64 = dist[..=at].iter().sum();
        let upper: f64 = dist[at..].iter().sum();
        match options.alternative {
            Alternative::Greater => upper,
            Alternative::Less => lower,
            Alternative::TwoSided => 2.0 * lower.min(upper),
        }
    } else {
        let normal = standard_normal();
        if sd == 0.0 {
            1.0
        } else {
            match options.alternative {
                Alternative::Greater => normal.sf((w_plus - mean - 0.5) / sd),
                Alternative::Less => normal.cdf((w_plus - mean + 0.5) / sd),
                Alternative::TwoSided => {
                    let zc = ((w_plus - mean).abs() - 0.5).max(0.0) / sd;
                    2.0 * normal.sf(zc)
                }
            }
        }
    };
    Ok(WilcoxonResult {
        w: w_plus.min(w_minus),
        w_plus,
        w_minus,
        z,
        p: p.clamp(f64::MIN_POSITIVE, 1.0),
        n_effective: n_eff,
        exact,
        alternative: options.alternative,
    })
}

pub fn wilcoxon_signed_rank(sample: &PairedSample, options: WilcoxonOptions) -> Result<WilcoxonResult, StatsError> {
    wilcoxon_differences(&sample.differences(), options)
}

/// Rosenthal's r = Z / √N.
pub fn effect_size_r(z: f64, n: usize) -> Result<f64, StatsError> {
    if n == 0 {
        return Err(StatsError::NonPositiveN);
    }
    Ok(z / (n as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Enumerates every sign assignment; independent of the DP.
    fn brute_force_p(d: &[f64], alternative: Alternative) -> f64 {
        let nz: Vec<f64> = d.iter().copied().filter(|v| *v != 0.0).collect();
        let n = nz.len();
        let mut sorted: Vec<f64> = nz.iter().map(|v| v.abs()).collect();
        sorted.sort_by(f64::total_cmp);
        let rank = |v: f64| {
            let first = sorted.iter().position(|s| *s == v).unwrap() + 1;
            let last = sorted.iter().rposition(|s| *s == v).unwrap() + 1;
            (first + last) as f64 / 2.0
        };
        let ranks: Vec<f64> = nz.iter().map(|v| rank(v.abs())).collect();
        let observed: f64 = nz.iter().zip(&ranks).filter(|(v, _)| **v > 0.0).map(|(_, r)| r).sum();
        let (mut le, mut ge) = (0u64, 0u64);
        for mask in 0u64..(1 << n) {
            let w: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
            if w <= observed + 1e-9 {
                le += 1;
            }
            if w >= observed - 1e-9 {
                ge += 1;
            }
        }
        let total = (1u64 << n) as f64;
        match alternative {
            Alternative::Greater => ge as f64 / total,
            Alternative::Less => le as f64 / total,
            Alternative::TwoSided => (2.0 * le.min(ge) as f64 / total).min(1.0),
        }
    }

    fn exact(alternative: Alternative) -> WilcoxonOptions {
        WilcoxonOptions { mode: WilcoxonMode::Exact, alternative, ..Default::default() }
    }

    #[test]
    fn all_zero_is_degenerate() {
        assert!(matches!(wilcoxon_differences(&[0.0, 0.0], Default::default()), Err(StatsError::DegenerateSample)));
    }

    #[test]
    fn three_positive_differences() {
        let r = wilcoxon_differences(&[1.0, 2.0, 3.0], exact(Alternative::Greater)).unwrap();
        assert_eq!((r.w_plus, r.w_minus, r.w), (6.0, 0.0, 0.0));
        assert!((r.p - 0.125).abs() < 1e-15);
        let two = wilcoxon_differences(&[1.0, 2.0, 3.0], exact(Alternative::TwoSided)).unwrap();
        assert!((two.p - 0.25).abs() < 1e-15);
    }

    #[test]
    fn ties_get_average_ranks() {
        let (ranks, ties) = doubled_ranks(&[2.0, 1.0, 2.0, 3.0]);
        assert_eq!(ranks, [5, 2, 5, 8]);
        assert_eq!(ties, [2]);
    }

    #[test]
    fn exact_matches_enumeration_with_ties_and_zeros() {
        let d = [0.5, -0.5, 1.0, 0.0, 2.0, -3.0, 2.0, 0.25];
        for alt in [Alternative::TwoSided, Alternative::Greater, Alternative::Less] {
            let r = wilcoxon_differences(&d, exact(alt)).unwrap();
            assert!((r.p - brute_force_p(&d, alt)).abs() < 1e-12);
        }
    }

    #[test]
    fn approximate_close_to_exact_at_twenty() {
        let d: Vec<f64> = (1..=20).map(|i| if i % 3 == 0 { -(i as f64) } else { i as f64 + 0.1 }).collect();
        let e = wilcoxon_differences(&d, exact(Alternative::TwoSided)).unwrap();
        let a = wilcoxon_differences(&d, WilcoxonOptions { mode: WilcoxonMode::Approximate, ..Default::default() })
            .unwrap();
        assert!((e.p - a.p).abs() < 0.01, "{} vs {}", e.p, a.p);
        assert!(e.exact && !a.exact);
    }

    #[test]
    fn auto_switches_at_limit() {
        let small: Vec<f64> = (1..=25).map(f64::from).collect();
        let large: Vec<f64> = (1..=26).map(f64::from).collect();
        assert!(wilcoxon_differences(&small, Default::default()).unwrap().exact);
        assert!(!wilcoxon_differences(&large, Default::default()).unwrap().exact);
    }

    #[test]
    fn pratt_ranks_zeros_then_drops_them() {
        let d = [0.0, 1.0, -2.0, 3.0];
        let r = wilcoxon_differences(&d, WilcoxonOptions { zero_method: ZeroMethod::Pratt, ..Default::default() })
            .unwrap();
        assert_eq!((r.w_plus, r.w_minus, r.n_effective), (6.0, 3.0, 3));
    }

    #[test]
    fn effect_size_examples() {
        assert_eq!(effect_size_r(0.0, 17).unwrap(), 0.0);
        assert_eq!(effect_size_r(3.0, 9).unwrap(), 1.0);
        assert!((effect_size_r(-6.0, 400).unwrap() + 0.3).abs() < 1e-12);
        assert!(matches!(effect_size_r(1.0, 0), Err(StatsError::NonPositiveN)));
    }

    #[test]
    fn paired_sample_validation() {
        assert!(PairedSample::new(vec!["a".into()], vec![1.0], vec![]).is_err());
        assert!(PairedSample::new(vec!["a".into(), "a".into()], vec![1.0, 2.0], vec![1.0, 2.0]).is_err());
    }

    fn tie_free() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec((1u32..10_000, any::<bool>()), 1..=12).prop_map(|v| {
            let mut seen = std::collections::HashSet::new();
            v.into_iter()
                .filter(|(m, _)| seen.insert(*m))
                .map(|(m, neg)| if neg { -(m as f64) } else { m as f64 } / 100.0)
                .collect()
        })
    }

    proptest! {
        #[test]
        fn w_is_bounded(d in prop::collection::vec(-5i32..=5, 1..30)) {
            let d: Vec<f64> = d.into_iter().map(f64::from).collect();
            if let Ok(r) = wilcoxon_differences(&d, Default::default()) {
                let n = r.n_effective as f64;
                prop_assert!(r.w >= 0.0 && r.w_plus + r.w_minus <= n * (n + 1.0) / 2.0 + 1e-9);
                prop_assert!((r.w_plus + r.w_minus - n * (n + 1.0) / 2.0).abs() < 1e-9);
                prop_assert!(r.p > 0.0 && r.p <= 1.0);
            }
        }

        #[test]
        fn exact_equals_enumeration(d in tie_free()) {
            for alt in [Alternative::TwoSided, Alternative::Greater] {
                let r = wilcoxon_differences(&d, exact(alt)).unwrap();
                prop_assert!((r.p - brute_force_p(&d, alt)).abs() < 1e-9);
            }
        }

        #[test]
        fn shifting_up_never_weakens_evidence(d in tie_free(), c in 0.001f64..5.0) {
            let shifted: Vec<f64> = d.iter().map(|v| v + c).collect();
            let mut uniq: Vec<f64> = shifted.iter().map(|v| v.abs()).collect();
            uniq.sort_by(f64::total_cmp);
            uniq.dedup();
            prop_assume!(uniq.len() == shifted.len() && shifted.iter().all(|v| *v != 0.0));
            let before = wilcoxon_differences(&d, exact(Alternative::Greater)).unwrap();
            let after = wilcoxon_differences(&shifted, exact(Alternative::Greater)).unwrap();
            prop_assert!(after.p <= before.p + 1e-12);
        }

        #[test]
        fn sign_flip_mirrors(d in tie_free()) {
            let neg: Vec<f64> = d.iter().map(|v| -v).collect();
            let a = wilcoxon_differences(&d, Default::default()).unwrap();
            let b = wilcoxon_differences(&neg, Default::default()).unwrap();
            prop_assert_eq!(a.w_plus, b.w_minus);
            prop_assert!((a.z + b.z).abs() < 1e-12);
            prop_assert!((a.p - b.p).abs() < 1e-12);
        }
    }
}
