use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{binomial, factorial, fixed, parse_rational, to_f64, Rational};
use crate::error::{Error, Result};

/// One term `coef * t^tpow * exp(-rate t)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Term {
    pub coef: Rational,
    pub tpow: u32,
    pub rate: u64,
}

/// A finite sum of terms `c t^j e^{-a t}` with rational `c` and integer `a >= 0`.
///
/// Terms are keyed by `(rate, tpow)` so that equality is structural and
/// iteration order is canonical.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ExpPolynomial {
    terms: BTreeMap<(u64, u32), Rational>,
}

impl ExpPolynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: Rational) -> Self {
        Self::monomial(c, 0, 0)
    }

    pub fn one() -> Self {
        Self::constant(Rational::one())
    }

    pub fn monomial(coef: Rational, tpow: u32, rate: u64) -> Self {
        let mut p = Self::zero();
        p.accumulate(rate, tpow, coef);
        p
    }

    /// `exp(-rate t)`.
    pub fn exp_neg(rate: u64) -> Self {
        Self::monomial(Rational::one(), 0, rate)
    }

    pub fn from_terms<I: IntoIterator<Item = Term>>(terms: I) -> Self {
        let mut p = Self::zero();
        for t in terms {
            p.accumulate(t.rate, t.tpow, t.coef);
        }
        p
    }

    fn accumulate(&mut self, rate: u64, tpow: u32, coef: Rational) {
        if coef.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry((rate, tpow)) {
            Entry::Vacant(v) => {
                v.insert(coef);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += coef;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = Term> + '_ {
        self.terms.iter().map(|(&(rate, tpow), c)| Term {
            coef: c.clone(),
            tpow,
            rate,
        })
    }

    pub fn coef(&self, tpow: u32, rate: u64) -> Rational {
        self.terms
            .get(&(rate, tpow))
            .cloned()
            .unwrap_or_else(Rational::zero)
    }

    pub fn min_rate(&self) -> Option<u64> {
        self.terms.keys().map(|k| k.0).min()
    }

    pub fn max_rate(&self) -> Option<u64> {
        self.terms.keys().map(|k| k.0).max()
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Self {
            terms: self.terms.iter().map(|(k, v)| (*k, v * c)).collect(),
        }
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut acc = Self::one();
        let mut base = self.clone();
        let mut n = n;
        while n > 0 {
            if n & 1 == 1 {
                acc = &acc * &base;
            }
            n >>= 1;
            if n > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// The convolution `(self * other)(t) = int_0^t self(s) other(t - s) ds`.
    pub fn convolve(&self, other: &Self) -> Self {
        let mut acc: BTreeMap<(u64, u32), Rational> = BTreeMap::new();
        let mut cache = MonomialCache::default();
        for (&(a, j), ca) in &self.terms {
            for (&(b, k), cb) in &other.terms {
                let c = ca * cb;
                for (rate, tpow, w) in cache.get(a, j, b, k).iter() {
                    let e = acc.entry((*rate, *tpow)).or_insert_with(Rational::zero);
                    *e += &c * w;
                }
            }
        }
        acc.retain(|_, v| !v.is_zero());
        Self { terms: acc }
    }

    /// `int_0^inf e^{-theta t} self(t) dt`.
    pub fn laplace(&self, theta: &Rational) -> Result<Rational> {
        let mut sum = Rational::zero();
        for (&(rate, tpow), c) in &self.terms {
            let s = Rational::from_integer(BigInt::from(rate)) + theta;
            if !s.is_positive() {
                return Err(Error::Divergent(format!(
                    "laplace transform diverges: rate {rate} + theta {theta} <= 0"
                )));
            }
            let denom = num_traits::pow(s, tpow as usize + 1);
            sum += c * Rational::from_integer(factorial(tpow as u64)) / denom;
        }
        Ok(sum)
    }

    pub fn derivative(&self) -> Self {
        let mut out = Self::zero();
        for (&(rate, tpow), c) in &self.terms {
            if tpow > 0 {
                out.accumulate(rate, tpow - 1, c * Rational::from_integer(BigInt::from(tpow)));
            }
            if rate > 0 {
                out.accumulate(rate, tpow, -(c * Rational::from_integer(BigInt::from(rate))));
            }
        }
        out
    }

    pub fn value_at_zero(&self) -> Rational {
        self.terms
            .iter()
            .filter(|(k, _)| k.1 == 0)
            .fold(Rational::zero(), |acc, (_, c)| acc + c)
    }

    /// Numeric value at `t >= 0`.
    ///
    /// A compensated double-precision sum is used when the terms do not
    /// cancel badly; otherwise the sum is redone in 320-bit fixed point.
    pub fn eval(&self, t: f64) -> f64 {
        assert!(t >= 0.0 && t.is_finite(), "eval needs finite t >= 0");
        let mut sum = 0.0f64;
        let mut comp = 0.0f64;
        let mut magnitude = 0.0f64;
        let mut finite = true;
        for (&(rate, tpow), c) in &self.terms {
            let v = to_f64(c) * t.powi(tpow as i32) * (-(rate as f64) * t).exp();
            if !v.is_finite() {
                finite = false;
                break;
            }
            magnitude += v.abs();
            let s = sum + v;
            if sum.abs() >= v.abs() {
                comp += (sum - s) + v;
            } else {
                comp += (v - s) + sum;
            }
            sum = s;
        }
        let value = sum + comp;
        if finite && (magnitude == 0.0 || magnitude <= 1e3 * value.abs()) {
            return value;
        }
        fixed::eval_terms(self.terms.iter().map(|(&(r, j), c)| (r, j, c)), t)
    }
}

/// Closed forms for `t^j e^{-a t} * t^k e^{-b t}`, memoised per call site.
#[derive(Default)]
struct MonomialCache {
    map: std::collections::HashMap<(u64, u32, u64, u32), Vec<(u64, u32, Rational)>>,
}

impl MonomialCache {
    fn get(&mut self, a: u64, j: u32, b: u64, k: u32) -> &Vec<(u64, u32, Rational)> {
        self.map
            .entry((a, j, b, k))
            .or_insert_with(|| monomial_convolution(a, j, b, k))
    }
}

fn monomial_convolution(a: u64, j: u32, b: u64, k: u32) -> Vec<(u64, u32, Rational)> {
    if a == b {
        let c = Rational::new(
            factorial(j as u64) * factorial(k as u64),
            factorial((j + k + 1) as u64),
        );
        return vec![(a, j + k + 1, c)];
    }
    // int_0^t s^j (t-s)^k e^{-a s - b (t-s)} ds, expanding (t-s)^k and
    // integrating s^n e^{d s} with d = b - a.
    let d = Rational::from_integer(BigInt::from(b as i128 - a as i128));
    let dinv = d.recip();
    let mut out: BTreeMap<(u64, u32), Rational> = BTreeMap::new();
    let sign = |e: u32| if e % 2 == 0 { Rational::one() } else { -Rational::one() };
    for i in 0..=k {
        let bin = Rational::from_integer(binomial(k as u64, i as u64));
        let n = j + i;
        let nfact = factorial(n as u64);
        let mut dpow = dinv.clone();
        for r in 0..=n {
            let falling = Rational::new(nfact.clone(), factorial((n - r) as u64));
            let c = &bin * sign(i + r) * falling * &dpow;
            *out.entry((a, k - i + n - r)).or_insert_with(Rational::zero) += c;
            dpow *= &dinv;
        }
        let dn = num_traits::pow(dinv.clone(), n as usize + 1);
        let c = -(&bin * sign(i + n) * Rational::from_integer(nfact) * dn);
        *out.entry((b, k - i)).or_insert_with(Rational::zero) += c;
    }
    out.into_iter()
        .filter(|(_, c)| !c.is_zero())
        .map(|((r, p), c)| (r, p, c))
        .collect()
}

impl Add for &ExpPolynomial {
    type Output = ExpPolynomial;
    fn add(self, rhs: &ExpPolynomial) -> ExpPolynomial {
        let mut out = self.clone();
        for (&(rate, tpow), c) in &rhs.terms {
            out.accumulate(rate, tpow, c.clone());
        }
        out
    }
}

impl Neg for &ExpPolynomial {
    type Output = ExpPolynomial;
    fn neg(self) -> ExpPolynomial {
        ExpPolynomial {
            terms: self.terms.iter().map(|(k, v)| (*k, -v)).collect(),
        }
    }
}

impl Sub for &ExpPolynomial {
    type Output = ExpPolynomial;
    fn sub(self, rhs: &ExpPolynomial) -> ExpPolynomial {
        self + &(-rhs)
    }
}

impl Mul for &ExpPolynomial {
    type Output = ExpPolynomial;
    fn mul(self, rhs: &ExpPolynomial) -> ExpPolynomial {
        let mut acc: BTreeMap<(u64, u32), Rational> = BTreeMap::new();
        for (&(a, j), ca) in &self.terms {
            for (&(b, k), cb) in &rhs.terms {
                *acc.entry((a + b, j + k)).or_insert_with(Rational::zero) += ca * cb;
            }
        }
        acc.retain(|_, v| !v.is_zero());
        ExpPolynomial { terms: acc }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $f:ident) => {
        impl $tr for ExpPolynomial {
            type Output = ExpPolynomial;
            fn $f(self, rhs: ExpPolynomial) -> ExpPolynomial {
                (&self).$f(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for ExpPolynomial {
    type Output = ExpPolynomial;
    fn neg(self) -> ExpPolynomial {
        -&self
    }
}

impl fmt::Display for ExpPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return write!(f, "0");
        }
        for (i, (&(rate, tpow), c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({c})")?;
            match tpow {
                0 => {}
                1 => write!(f, "*t")?,
                p => write!(f, "*t^{p}")?,
            }
            if rate > 0 {
                write!(f, "*e^(-{rate}t)")?;
            }
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct TermRepr {
    c: String,
    j: u32,
    a: u64,
}

impl Serialize for ExpPolynomial {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let v: Vec<TermRepr> = self
            .terms
            .iter()
            .map(|(&(a, j), c)| TermRepr {
                c: c.to_string(),
                j,
                a,
            })
            .collect();
        v.serialize(s)
    }
}

impl<'de> Deserialize<'de> for ExpPolynomial {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<TermRepr>::deserialize(d)?;
        let mut p = ExpPolynomial::zero();
        for t in v {
            let c = parse_rational(&t.c)
                .ok_or_else(|| serde::de::Error::custom(format!("bad rational {:?}", t.c)))?;
            p.accumulate(t.a, t.j, c);
        }
        Ok(p)
    }
}
