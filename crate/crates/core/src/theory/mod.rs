//! Limit laws and constants: Malthusian data, fringe degree/size/key laws,
//! restricted-sampling laws, fragmentation constants, and the height,
//! saturation, profile and depth constants.

mod frag;
mod height;
mod report;

pub use frag::{fragmentation_constants, FragmentationConstants, LogCombination};
pub use height::{gamma_height, gamma_saturation, rate_functions, GammaRoot, RateFunctions};
pub use report::{theory_report, TheoryReport};

use std::collections::BTreeMap;

use num_traits::One;
use serde::Serialize;

use crate::dist::{birth_stopped_law, BirthRates, LawTable, Mass, EXACT_PREFIX, MAX_SUPPORT, TRUNCATION_MASS};
use crate::error::{Error, Result};
use crate::exact::{harmonic, int, rat, to_f64, Number, Rational};
use crate::models::{heir_index_law, m_psi, Family, ModelSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    ClosedForm,
    Solved,
}

/// A constant together with how it was obtained.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Constant {
    pub value: Number,
    pub provenance: Provenance,
}

impl Constant {
    fn closed(value: impl Into<Number>) -> Self {
        Self {
            value: value.into(),
            provenance: Provenance::ClosedForm,
        }
    }

    fn solved(value: f64) -> Self {
        Self {
            value: Number::Float(value),
            provenance: Provenance::Solved,
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.value.to_f64()
    }
}

pub fn malthusian(spec: &ModelSpec) -> Result<Constant> {
    if let Some(a) = spec.alpha_exact() {
        return Ok(Constant::closed(a));
    }
    let a = spec.alpha()?;
    Ok(match spec.family() {
        Family::BinaryPyramid => Constant::closed(a),
        _ => Constant::solved(a),
    })
}

/// `beta = -mu_hat'(alpha)`, the mean heir age.
pub fn beta(spec: &ModelSpec) -> Result<Constant> {
    if let Some(b) = spec.beta_exact() {
        return Ok(Constant::closed(b));
    }
    let b = spec.beta()?;
    Ok(match spec.family() {
        Family::BinaryPyramid => Constant::closed(b),
        _ => Constant::solved(b),
    })
}

/// Law of the root degree of the limiting fringe tree.
pub fn degree_law(spec: &ModelSpec) -> Result<LawTable> {
    let label = format!("degree ({spec})");
    Ok(match spec.family() {
        Family::Mst(m) => {
            let m = *m as i64;
            let mut e = vec![(0, rat(m - 1, m + 1))];
            e.extend((1..=m).map(|k| (k, rat(2, m * (m + 1)))));
            LawTable::exact(label, e)
        }
        Family::Emst(m) | Family::MstGen { m, .. } => {
            let m = *m as i64;
            LawTable::exact(label, vec![(0, rat(m - 1, m)), (m, rat(1, m))])
        }
        Family::FragBinaryUniform => LawTable::exact(label, vec![(0, rat(1, 4)), (1, rat(1, 2)), (2, rat(1, 4))]),
        Family::BinaryPyramid => {
            let a = spec.alpha()?;
            LawTable::float(label, vec![(0, 1.0 - a), (1, 2.0 * a - 1.0), (2, 1.0 - a)])
        }
        _ => match (spec.linear_params(), spec.alpha_exact()) {
            (Some((chi, rho)), Some(alpha)) => birth_stopped_law(&BirthRates::linear(chi, rho)?, &alpha)?.with_label(label),
            _ => degree_from_heir_law(spec, label)?,
        },
    })
}

/// `P(D = k) = q_k - q_{k+1}` with `q_0 = 1`.
fn degree_from_heir_law(spec: &ModelSpec, label: String) -> Result<LawTable> {
    let q = heir_index_law(spec)?;
    let mut prev = Mass::Exact(Rational::one());
    let mut support = Vec::new();
    let mut masses = Vec::new();
    for (k, m) in q.support.iter().zip(&q.p) {
        support.push(k - 1);
        masses.push(prev.sub(m));
        prev = m.clone();
    }
    support.push(*q.support.last().unwrap_or(&0));
    masses.push(prev);
    Ok(LawTable::new(label, support, masses))
}

/// Unbounded law from an exact pmf, truncated like the other unbounded tables;
/// `pmf_f` evaluates the same pmf in floating point past the exact prefix.
fn unbounded_law(label: String, start: i64, pmf: impl Fn(i64) -> Rational, pmf_f: impl Fn(f64) -> f64) -> LawTable {
    let mut support = Vec::new();
    let mut masses = Vec::new();
    let mut cum = 0.0;
    let mut k = start;
    while cum < 1.0 - TRUNCATION_MASS && support.len() < MAX_SUPPORT {
        let m = if support.len() < EXACT_PREFIX {
            Mass::Exact(pmf(k))
        } else {
            Mass::Float(pmf_f(k as f64))
        };
        cum += m.to_f64();
        support.push(k);
        masses.push(m);
        k += 1;
    }
    LawTable::new(label, support, masses)
}

/// Limiting law of fringe tree sizes; the number of keys for search trees.
pub fn fringe_size_law(spec: &ModelSpec) -> Result<LawTable> {
    match spec.family() {
        Family::Emst(_) => Ok(unbounded_law(format!("fringe keys ({spec})"), 0, |k| rat(1, (k + 1) * (k + 2)), |k| 1.0 / ((k + 1.0) * (k + 2.0)))),
        Family::Mst(_) => Ok(unbounded_law(format!("fringe keys ({spec})"), 1, |k| rat(2, (k + 1) * (k + 2)), |k| 2.0 / ((k + 1.0) * (k + 2.0)))),
        _ => match spec.linear_params() {
            Some((chi, rho)) => {
                let kappa = &rho / (&chi + &rho);
                let kf = to_f64(&kappa);
                let label = format!("fringe size ({spec})");
                Ok(unbounded_law(
                    label,
                    1,
                    move |n| {
                        let n = int(n);
                        &kappa / ((&n + &kappa - int(1)) * (&n + &kappa))
                    },
                    move |n| kf / ((n + kf - 1.0) * (n + kf)),
                ))
            }
            None => Err(Error::NoClosedForm(format!("no closed fringe size law for {spec}"))),
        },
    }
}

/// Limiting law of the number of keys in a uniformly random node.
pub fn key_count_law(spec: &ModelSpec) -> Result<LawTable> {
    let label = format!("key count ({spec})");
    let mut acc: BTreeMap<i64, Rational> = BTreeMap::new();
    match spec.family() {
        Family::Emst(m) => {
            let m = *m as i64;
            for k in 0..m - 1 {
                acc.insert(k, rat(1, (k + 1) * (k + 2)));
            }
            acc.insert(m - 1, rat(1, m));
        }
        Family::Mst(m) => {
            let m = *m as i64;
            for k in 1..m - 1 {
                acc.insert(k, rat(2, (k + 1) * (k + 2)));
            }
            acc.insert(m - 1, rat(2, m));
        }
        Family::MstGen { m, ell } => {
            let (m, l) = (*m as i64, *ell as i64);
            let top = l + (m - 1) * (l + 1) - 1;
            for k in l..=top {
                acc.insert(k, rat(l + 1, (k + 1) * (k + 2)));
            }
            *acc.entry(m - 1).or_insert_with(|| int(0)) += rat(1, m);
        }
        _ => return Err(Error::Unsupported(format!("{spec} is not a search tree"))),
    }
    Ok(LawTable::exact(label, acc.into_iter().collect()))
}

/// Limiting fraction of nodes with children, for search trees.
pub fn internal_fraction(spec: &ModelSpec) -> Result<Rational> {
    match spec.family() {
        Family::Emst(m) | Family::MstGen { m, .. } => Ok(rat(1, *m as i64)),
        Family::Mst(m) => Ok(rat(2, *m as i64 + 1)),
        _ => Err(Error::Unsupported(format!("{spec} is not a search tree"))),
    }
}

/// Laws seen from a random leaf or from the node of a random key.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct RestrictedLaws {
    pub laws: BTreeMap<String, LawTable>,
    pub constants: BTreeMap<String, f64>,
}

/// Key for the law of `|T^{v,-1}|` minus `v` (RRT) or the internal nodes below
/// the parent of a random external node (BST, EMST with m=2).
pub const LEAF_PARENT_LAW: &str = "leaf-parent";
pub const KEY_OWNER_KEYS: &str = "key-owner-keys";
pub const KEY_OWNER_DEGREE: &str = "key-owner-degree";

pub fn restricted_laws(spec: &ModelSpec) -> Result<RestrictedLaws> {
    let mut out = RestrictedLaws::default();
    let e = std::f64::consts::E;
    match spec.family() {
        Family::Bst | Family::Emst(2) => {
            // One plus a Yule count stopped at Exp(2).
            let law = unbounded_law(
                format!("leaf parent internal size ({spec})"),
                1,
                |k| rat(4, k * (k + 1) * (k + 2)),
                |k| 4.0 / (k * (k + 1.0) * (k + 2.0)),
            );
            out.laws.insert(LEAF_PARENT_LAW.into(), law);
        }
        Family::Rrt => {
            let law = unbounded_law(
                format!("leaf parent size ({spec})"),
                1,
                |k| rat(2, (k + 1) * (k + 2)),
                |k| 2.0 / ((k + 1.0) * (k + 2.0)),
            );
            out.laws.insert(LEAF_PARENT_LAW.into(), law);
            out.constants.insert("p1".into(), 6.0 - 2.0 * e);
            out.constants.insert("p2".into(), 11.0 - 4.0 * e);
        }
        _ => {}
    }
    if spec.is_search_tree() && !matches!(spec.family(), Family::MstGen { .. }) {
        let keys = key_count_law(spec)?;
        let mean = m_psi(spec).as_exact().cloned().expect("exact key mean");
        let owner: Vec<(i64, Rational)> = keys
            .support
            .iter()
            .zip(&keys.p)
            .filter(|(k, _)| **k > 0)
            .map(|(&k, p)| (k, int(k) * p.as_exact().unwrap() / &mean))
            .collect();
        out.laws.insert(KEY_OWNER_KEYS.into(), LawTable::exact(format!("key owner keys ({spec})"), owner));
        let deg = degree_law(spec)?;
        let m = spec.arity().unwrap() as i64;
        // A node with children always holds m-1 keys.
        let full = int(m - 1) / &mean;
        let mut entries: Vec<(i64, Rational)> = deg
            .support
            .iter()
            .zip(&deg.p)
            .filter(|(k, _)| **k > 0)
            .map(|(&k, p)| (k, p.as_exact().unwrap() * &full))
            .collect();
        let rest: Rational = entries.iter().map(|(_, p)| p.clone()).sum();
        entries.insert(0, (0, int(1) - rest));
        out.laws.insert(KEY_OWNER_DEGREE.into(), LawTable::exact(format!("key owner degree ({spec})"), entries));
    }
    if out.laws.is_empty() {
        return Err(Error::Unsupported(format!("no restricted laws for {spec}")));
    }
    Ok(out)
}

/// `((alpha beta)^-1, (alpha beta m_psi)^-1)`: depth of a random node and total
/// path length, both per `log n` (the latter also per node).
pub fn depth_and_pathlength(spec: &ModelSpec) -> Result<(Number, Number)> {
    let mpsi = m_psi(spec);
    match (spec.alpha_exact(), spec.beta_exact(), mpsi.as_exact()) {
        (Some(a), Some(b), Some(m)) => {
            let depth = int(1) / (a * b);
            let path = &depth / m;
            Ok((Number::Exact(depth), Number::Exact(path)))
        }
        _ => {
            let d = 1.0 / (spec.alpha()? * spec.beta()?);
            Ok((Number::Float(d), Number::Float(d / mpsi.to_f64())))
        }
    }
}

/// `a_bar_i` in closed form where known: `1/H_{m-1}` for m-ary search trees.
pub fn a_bar_i_closed(spec: &ModelSpec) -> Option<Rational> {
    match spec.family() {
        Family::Mst(m) | Family::Emst(m) => Some(int(1) / harmonic(*m as u64 - 1)),
        // m / sum_i E xi_i, and the expected birth ages sum to m.
        Family::Bst | Family::MaryIncreasing(_) => Some(int(1)),
        _ => None,
    }
}
