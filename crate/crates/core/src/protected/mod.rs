//! Protected nodes: the exact exp-polynomial recursion for the limiting
//! fraction of nodes with rank at least `k` in an m-ary search tree, the
//! closed form for `k = 2`, the random recursive tree recursion, and a few
//! ancestor-property constants.

mod rrt;

pub use rrt::{rrt_pk_curve, rrt_protected};

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock, RwLock};

use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{factorial, int, rat, smooth_cofactor, to_f64, ExpPolynomial, Rational};

/// Default cap on the number of terms in any intermediate exp-polynomial.
pub const DEFAULT_TERM_CAP: usize = 2_000_000;

#[derive(Clone, Debug, Serialize)]
pub struct ProtectedResult {
    pub m: u32,
    pub k: u32,
    pub value: ProtectedValue,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h_poly: Option<ExpPolynomial>,
}

#[derive(Clone, Debug, Serialize)]
#[serde(untagged)]
pub enum ProtectedValue {
    #[serde(serialize_with = "crate::exact::ser_rational")]
    Exact(Rational),
    Float(f64),
}

fn e(rate: u64) -> ExpPolynomial {
    ExpPolynomial::exp_neg(rate)
}

/// `1 * e^{-t} conv 2 e^{-2t} conv ... conv (m-1) e^{-(m-1)t}`: the density of the
/// time a node of an m-ary search tree takes to fill up.
pub fn fill_kernel(m: u32) -> ExpPolynomial {
    let mut f = e(1);
    for i in 2..m as u64 {
        f = f.convolve(&e(i).scale(&int(i as i64)));
    }
    f
}

type Memo = RwLock<HashMap<(u32, u32), Arc<ExpPolynomial>>>;

fn memo() -> &'static (Memo, Mutex<()>) {
    static MEMO: OnceLock<(Memo, Mutex<()>)> = OnceLock::new();
    MEMO.get_or_init(|| (RwLock::new(HashMap::new()), Mutex::new(())))
}

fn check_cap(p: &ExpPolynomial, cap: usize, what: &str) -> Result<()> {
    if p.len() > cap {
        return Err(Error::BlowUp(format!("{what} has {} terms (cap {cap})", p.len())));
    }
    Ok(())
}

/// `(h + e^{-t})^m - e^{-mt}`.
fn lifted_power(h: &ExpPolynomial, m: u32, cap: usize) -> Result<ExpPolynomial> {
    let base = h + &e(1);
    let mut acc = ExpPolynomial::one();
    for _ in 0..m {
        acc = &acc * &base;
        check_cap(&acc, cap, "power")?;
    }
    Ok(&acc - &e(m as u64))
}

/// `h_k` with an explicit term cap; results are memoised per `(m, k)`.
pub fn h_k_with_cap(m: u32, k: u32, cap: usize) -> Result<Arc<ExpPolynomial>> {
    if m < 2 {
        return Err(Error::InvalidParameters(format!("m must be >= 2, got {m}")));
    }
    let (table, writer) = memo();
    if let Some(h) = table.read().unwrap().get(&(m, k)) {
        return Ok(h.clone());
    }
    let h = if k == 0 {
        Arc::new(&ExpPolynomial::one() - &e(1))
    } else {
        let prev = h_k_with_cap(m, k - 1, cap)?;
        let _guard = writer.lock().unwrap();
        if let Some(h) = table.read().unwrap().get(&(m, k)) {
            return Ok(h.clone());
        }
        let g = lifted_power(&prev, m, cap)?;
        let h = g.convolve(&fill_kernel(m));
        check_cap(&h, cap, "h_k")?;
        Arc::new(h)
    };
    table.write().unwrap().insert((m, k), h.clone());
    Ok(h)
}

pub fn h_k(m: u32, k: u32) -> Result<Arc<ExpPolynomial>> {
    h_k_with_cap(m, k, DEFAULT_TERM_CAP)
}

/// Limiting fraction of nodes of rank `>= k` in the m-ary search tree, exact.
///
/// Uses one fewer convolution than going through `h_k` itself.
pub fn p_protected(m: u32, k: u32) -> Result<Rational> {
    p_protected_with_cap(m, k, DEFAULT_TERM_CAP)
}

pub fn p_protected_with_cap(m: u32, k: u32, cap: usize) -> Result<Rational> {
    if m < 2 {
        return Err(Error::InvalidParameters(format!("m must be >= 2, got {m}")));
    }
    if k == 0 {
        return Ok(Rational::one());
    }
    let prev = h_k_with_cap(m, k - 1, cap)?;
    let g = lifted_power(&prev, m, cap)?;
    Ok(g.laplace(&int(1))? * rat(2, m as i64))
}

/// The same quantity as `2 * L[h_k](1)`; kept as an independent cross-check.
pub fn p_protected_via_h(m: u32, k: u32) -> Result<Rational> {
    if k == 0 {
        return Ok(Rational::one());
    }
    Ok(h_k(m, k)?.laplace(&int(1))? * int(2))
}

pub fn protected_result(m: u32, k: u32, exact: bool, with_poly: bool) -> Result<ProtectedResult> {
    let v = p_protected(m, k)?;
    let value = if exact {
        ProtectedValue::Exact(v)
    } else {
        ProtectedValue::Float(to_f64(&v))
    };
    let h_poly = if with_poly {
        Some((*h_k(m, k)?).clone())
    } else {
        None
    };
    Ok(ProtectedResult { m, k, value, h_poly })
}

/// Closed form for `k = 2`:
/// `(2/m) sum_{l<m} [m!/(m-l)!] [(m(m-l))! / (m(m-l)+l+1)!]`.
pub fn p2_closed(m: u32) -> Rational {
    let m = m as u64;
    let mut sum = Rational::zero();
    for l in 0..m {
        let a = Rational::new(factorial(m), factorial(m - l));
        let j = m * (m - l);
        let b = Rational::new(factorial(j), factorial(j + l + 1));
        sum += a * b;
    }
    sum * rat(2, m as i64)
}

/// Leading terms `2/m^3 + 2/m^4 + 4/m^5` of the large-m expansion of `p2_closed`.
pub fn p2_asymptotic(m: u32) -> f64 {
    let m = m as f64;
    2.0 / m.powi(3) + 2.0 / m.powi(4) + 4.0 / m.powi(5)
}

/// True iff every prime factor of the denominator of `value` is `<= m^k + 1`.
pub fn denominator_prime_check(m: u32, k: u32, value: &Rational) -> bool {
    let bound = (m as u64).pow(k) + 1;
    smooth_cofactor(value.denom(), bound).is_one()
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct AncestorConstants {
    pub bst_maximal_clade: f64,
    pub bst_no_unary_ancestor: f64,
    pub rrt_no_unary_ancestor: f64,
}

pub fn ancestor_constants() -> AncestorConstants {
    let e2 = (-2.0f64).exp();
    AncestorConstants {
        bst_maximal_clade: (1.0 - e2) / 4.0,
        bst_no_unary_ancestor: (1.0 - e2) / 2.0,
        rrt_no_unary_ancestor: 1.0 - (-1.0f64).exp(),
    }
}
