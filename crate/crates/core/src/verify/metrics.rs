//! Distances and goodness-of-fit statistics between a theoretical law and
//! observed counts.

use std::collections::BTreeMap;

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::dist::LawTable;

/// Minimum expected count per pooled chi-square bin.
pub const MIN_EXPECTED: f64 = 5.0;

/// Total variation between a law and the empirical law of `counts`.
pub fn tv_counts(law: &LawTable, counts: &BTreeMap<i64, u64>) -> f64 {
    let total: u64 = counts.values().sum();
    if total == 0 {
        return 1.0;
    }
    let t = total as f64;
    let mut keys: Vec<i64> = law.support.clone();
    keys.extend(counts.keys().copied());
    keys.sort_unstable();
    keys.dedup();
    0.5 * keys
        .iter()
        .map(|&k| (law.prob(k) - counts.get(&k).copied().unwrap_or(0) as f64 / t).abs())
        .sum::<f64>()
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

/// Pearson's test with adjacent bins pooled until each expects at least
/// [`MIN_EXPECTED`] observations. Observations outside the law's support join
/// the nearest bin.
pub fn chi_square(law: &LawTable, counts: &BTreeMap<i64, u64>) -> ChiSquare {
    let total: u64 = counts.values().sum();
    let t = total as f64;
    if law.is_empty() || total == 0 {
        return ChiSquare { statistic: 0.0, df: 0, p_value: 1.0 };
    }
    let lo = law.support[0];
    let hi = *law.support.last().unwrap();
    let mut obs: BTreeMap<i64, f64> = BTreeMap::new();
    for (&k, &c) in counts {
        *obs.entry(k.clamp(lo, hi)).or_insert(0.0) += c as f64;
    }
    // Leftover theoretical mass (truncation) goes with the last bin.
    let mut exp: Vec<(i64, f64)> = law.iter().map(|(k, p)| (k, p * t)).collect();
    let missing = t - exp.iter().map(|e| e.1).sum::<f64>();
    if missing > 0.0 {
        exp.last_mut().unwrap().1 += missing;
    }
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let (mut e_acc, mut o_acc) = (0.0, 0.0);
    for (k, e) in exp {
        e_acc += e;
        o_acc += obs.get(&k).copied().unwrap_or(0.0);
        if e_acc >= MIN_EXPECTED {
            bins.push((e_acc, o_acc));
            e_acc = 0.0;
            o_acc = 0.0;
        }
    }
    if e_acc > 0.0 || o_acc > 0.0 {
        match bins.last_mut() {
            Some(b) => {
                b.0 += e_acc;
                b.1 += o_acc;
            }
            None => bins.push((e_acc, o_acc)),
        }
    }
    let statistic: f64 = bins.iter().map(|(e, o)| (o - e) * (o - e) / e).sum();
    let df = bins.len().saturating_sub(1);
    let p_value = if df == 0 {
        1.0
    } else {
        ChiSquared::new(df as f64).map(|d| d.sf(statistic)).unwrap_or(f64::NAN)
    };
    ChiSquare { statistic, df, p_value }
}

/// Mean and standard error of a sample.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// `|empirical - theory| / |theory|`, or the absolute error when theory is 0.
pub fn rel_err(empirical: f64, theory: f64) -> f64 {
    if theory == 0.0 {
        empirical.abs()
    } else {
        (empirical - theory).abs() / theory.abs()
    }
}
