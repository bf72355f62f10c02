//! Tree families as CMJ branching processes: life-history samplers, the
//! heir-biased ancestor samplers, and the Laplace transform of the
//! reproduction intensity.

mod ancestor;
mod life;
mod transform;
mod weights;

pub use ancestor::{sample_ancestor_life, AncestorLifeHistory};
pub(crate) use life::exp;
pub use life::{sample_life, ChildBirth, EventKind, LifeEvent, LifeHistory, LifeState};
pub use transform::{heir_index_law, m_psi, mu_hat, mu_hat_exact, mu_hat_pair, mu_hat_prime, Abscissa};
pub use weights::Weights;

use std::fmt;
use std::str::FromStr;

use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::exact::{int, is_integer, parse_rational, Rational};

/// Every accepted model string, for help texts.
pub const MODEL_GRAMMAR: &[&str] = &[
    "rrt",
    "bst",
    "pa:linear:<chi>,<rho>",
    "pa:weights:<path-or-expr>",
    "mary:<m>",
    "emst:<m>",
    "mst:<m>",
    "mstgen:<m>,<ell>",
    "pyramid",
    "frag:binary-uniform",
];

#[derive(Clone, Debug)]
pub enum Family {
    Rrt,
    Bst,
    LinearPa { chi: Rational, rho: Rational },
    GeneralPa(Weights),
    MaryIncreasing(u32),
    Emst(u32),
    Mst(u32),
    MstGen { m: u32, ell: u32 },
    BinaryPyramid,
    FragBinaryUniform,
}

/// How a node with a given number of children behaves while it reproduces.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) enum Reproduction {
    /// Children one at a time with rate `w_d` after `d` children.
    Sequential,
    /// `m` slots, each filled after an independent `Exp(rate)` wait.
    Slots { m: u32, rate: f64 },
    /// Keys at rates `ell+1, ..., ell+K`, then `m` children at once.
    KeysThenSplit { m: u32, ell: u32 },
    /// Keys at rates `2, ..., m-1`, then one `Exp(1)` wait per slot.
    KeysThenSlots { m: u32 },
    /// Two children at `-ln V`, `-ln(1-V)`.
    UniformSplit,
}

/// An immutable description of one tree family.
#[derive(Clone, Debug)]
pub struct ModelSpec {
    family: Family,
    label: String,
}

impl ModelSpec {
    pub fn new(family: Family) -> Result<Self> {
        validate(&family)?;
        let label = canonical_label(&family);
        Ok(Self { family, label })
    }

    pub fn parse(s: &str) -> Result<Self> {
        s.parse()
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Maximum outdegree, when finite.
    pub fn arity(&self) -> Option<u32> {
        match &self.family {
            Family::Rrt => None,
            Family::Bst | Family::BinaryPyramid | Family::FragBinaryUniform => Some(2),
            Family::LinearPa { chi, rho } if chi.is_negative() => (rho / -chi).to_integer().to_u32(),
            Family::LinearPa { .. } => None,
            Family::GeneralPa(w) => w.support_len().map(|n| n as u32),
            Family::MaryIncreasing(m) | Family::Emst(m) | Family::Mst(m) => Some(*m),
            Family::MstGen { m, .. } => Some(*m),
        }
    }

    /// True when the weight is the number of keys rather than one per node.
    pub fn is_search_tree(&self) -> bool {
        matches!(self.family, Family::Emst(_) | Family::Mst(_) | Family::MstGen { .. })
    }

    /// Keys held by a newborn node (1 for node-counted families).
    pub fn initial_keys(&self) -> u32 {
        match self.family {
            Family::Emst(_) => 0,
            Family::MstGen { ell, .. } => ell,
            _ => 1,
        }
    }

    /// Birth rate after `d` children, for families that reproduce one child at a time.
    pub fn birth_rate(&self, d: u64) -> f64 {
        match &self.family {
            Family::Rrt => 1.0,
            Family::Bst => (2.0 - d as f64).max(0.0),
            Family::MaryIncreasing(m) => (*m as f64 - d as f64).max(0.0),
            Family::LinearPa { chi, rho } => {
                (crate::exact::to_f64(chi) * d as f64 + crate::exact::to_f64(rho)).max(0.0)
            }
            Family::GeneralPa(w) => w.get(d),
            Family::BinaryPyramid => {
                if d < 2 {
                    1.0
                } else {
                    0.0
                }
            }
            _ => 0.0,
        }
    }

    /// Exact birth rate where the family has rational rates.
    pub fn exact_birth_rate(&self, d: u64) -> Option<Rational> {
        let k = int(d as i64);
        let clip = |r: Rational| if r.is_negative() { Rational::zero() } else { r };
        match &self.family {
            Family::Rrt => Some(int(1)),
            Family::Bst => Some(clip(int(2) - k)),
            Family::MaryIncreasing(m) => Some(clip(int(*m as i64) - k)),
            Family::LinearPa { chi, rho } => Some(clip(chi * k + rho)),
            Family::BinaryPyramid => Some(if d < 2 { int(1) } else { int(0) }),
            Family::GeneralPa(w) => w.exact(d),
            _ => None,
        }
    }

    /// The linear weight parameters `(chi, rho)` for the linear preferential attachment
    /// families, including the random recursive tree and the m-ary increasing trees.
    pub fn linear_params(&self) -> Option<(Rational, Rational)> {
        match &self.family {
            Family::Rrt => Some((int(0), int(1))),
            Family::Bst => Some((int(-1), int(2))),
            Family::MaryIncreasing(m) => Some((int(-1), int(*m as i64))),
            Family::LinearPa { chi, rho } => Some((chi.clone(), rho.clone())),
            _ => None,
        }
    }

    pub(crate) fn reproduction(&self) -> Reproduction {
        match &self.family {
            Family::Bst => Reproduction::Slots { m: 2, rate: 1.0 },
            Family::MaryIncreasing(m) => Reproduction::Slots { m: *m, rate: 1.0 },
            Family::LinearPa { chi, rho } if chi.is_negative() => Reproduction::Slots {
                m: (rho / -chi).to_integer().to_u32().unwrap_or(0),
                rate: crate::exact::to_f64(&-chi),
            },
            Family::Emst(m) => Reproduction::KeysThenSplit { m: *m, ell: 0 },
            Family::MstGen { m, ell } => Reproduction::KeysThenSplit { m: *m, ell: *ell },
            Family::Mst(m) => Reproduction::KeysThenSlots { m: *m },
            Family::FragBinaryUniform => Reproduction::UniformSplit,
            _ => Reproduction::Sequential,
        }
    }

    /// `sum 1/w_k < infinity`: the reproduction process explodes.
    pub fn is_explosive(&self) -> bool {
        match &self.family {
            Family::GeneralPa(w) => w.is_explosive(),
            _ => false,
        }
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

impl FromStr for ModelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |why: &str| Error::Parse(format!("model {s:?}: {why}"));
        let s = s.trim();
        let uint = |x: &str| x.trim().parse::<u32>().map_err(|_| bad("expected a non-negative integer"));
        let family = match s {
            "rrt" => Family::Rrt,
            "bst" => Family::Bst,
            "pyramid" => Family::BinaryPyramid,
            "frag:binary-uniform" => Family::FragBinaryUniform,
            _ => {
                if let Some(rest) = s.strip_prefix("pa:linear:") {
                    let (c, r) = rest.split_once(',').ok_or_else(|| bad("expected <chi>,<rho>"))?;
                    let chi = parse_rational(c.trim()).ok_or_else(|| bad("bad chi"))?;
                    let rho = parse_rational(r.trim()).ok_or_else(|| bad("bad rho"))?;
                    Family::LinearPa { chi, rho }
                } else if let Some(rest) = s.strip_prefix("pa:weights:") {
                    Family::GeneralPa(Weights::parse(rest)?)
                } else if let Some(rest) = s.strip_prefix("mary:") {
                    Family::MaryIncreasing(uint(rest)?)
                } else if let Some(rest) = s.strip_prefix("emst:") {
                    Family::Emst(uint(rest)?)
                } else if let Some(rest) = s.strip_prefix("mstgen:") {
                    let (m, l) = rest.split_once(',').ok_or_else(|| bad("expected <m>,<ell>"))?;
                    Family::MstGen { m: uint(m)?, ell: uint(l)? }
                } else if let Some(rest) = s.strip_prefix("mst:") {
                    Family::Mst(uint(rest)?)
                } else {
                    return Err(bad(&format!("unknown model; expected one of {}", MODEL_GRAMMAR.join(", "))));
                }
            }
        };
        ModelSpec::new(family)
    }
}

fn validate(f: &Family) -> Result<()> {
    let bad = |s: String| Err(Error::InvalidParameters(s));
    match f {
        Family::MaryIncreasing(m) | Family::Emst(m) | Family::Mst(m) if *m < 2 => bad(format!("m must be >= 2, got {m}")),
        Family::MstGen { m, .. } if *m < 2 => bad(format!("m must be >= 2, got {m}")),
        Family::LinearPa { rho, .. } if !rho.is_positive() => bad(format!("rho must be > 0, got {rho}")),
        Family::LinearPa { chi, rho } if chi.is_negative() && !is_integer(&(rho / -chi)) => {
            bad(format!("rho/|chi| must be an integer when chi < 0 (chi={chi}, rho={rho})"))
        }
        Family::GeneralPa(w) if !(w.get(0) > 0.0) => bad("w_0 must be > 0".into()),
        _ => Ok(()),
    }
}

fn canonical_label(f: &Family) -> String {
    match f {
        Family::Rrt => "rrt".into(),
        Family::Bst => "bst".into(),
        Family::LinearPa { chi, rho } => format!("pa:linear:{chi},{rho}"),
        Family::GeneralPa(w) => format!("pa:weights:{}", w.source()),
        Family::MaryIncreasing(m) => format!("mary:{m}"),
        Family::Emst(m) => format!("emst:{m}"),
        Family::Mst(m) => format!("mst:{m}"),
        Family::MstGen { m, ell } => format!("mstgen:{m},{ell}"),
        Family::BinaryPyramid => "pyramid".into(),
        Family::FragBinaryUniform => "frag:binary-uniform".into(),
    }
}
