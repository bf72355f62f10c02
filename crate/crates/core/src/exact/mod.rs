//! Exact rational arithmetic and the exp-polynomial algebra.

mod expoly;
mod fixed;
mod number;

pub use expoly::{ExpPolynomial, Term};
pub use number::Number;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rational = num_rational::BigRational;

/// Builds `num/den` as a reduced rational.
pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Renders a rational as `p/q` (or `p` when the denominator is one).
pub fn rat_to_string(r: &Rational) -> String {
    r.to_string()
}

/// Parses `p/q`, `p`, or a finite decimal such as `-0.25`.
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().ok()?;
        let q: BigInt = q.trim().parse().ok()?;
        if q.is_zero() {
            return None;
        }
        return Some(Rational::new(p, q));
    }
    if let Ok(p) = s.parse::<BigInt>() {
        return Some(Rational::from_integer(p));
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (whole, frac) = body.split_once('.')?;
    if frac.is_empty() && whole.is_empty() {
        return None;
    }
    if !whole.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits: BigInt = format!("{}{}", if whole.is_empty() { "0" } else { whole }, frac)
        .parse()
        .ok()?;
    let scale = num_traits::pow(BigInt::from(10), frac.len());
    let r = Rational::new(digits, scale);
    Some(if neg { -r } else { r })
}

/// Nearest `f64` to a rational, robust to numerators and denominators beyond `f64` range.
/// Serde helper: rationals are written as strings such as `"19/140"`.
pub fn ser_rational<S: serde::Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

pub fn to_f64(r: &Rational) -> f64 {
    if let (Some(n), Some(d)) = (r.numer().to_f64(), r.denom().to_f64()) {
        if n.is_finite() && d.is_finite() && d != 0.0 {
            return n / d;
        }
    }
    let nb = r.numer().bits() as i64;
    let db = r.denom().bits() as i64;
    // Shift so the quotient keeps about 64 significant bits.
    let shift = 64 - (nb - db);
    let q = if shift >= 0 {
        (r.numer() << (shift as usize)) / r.denom()
    } else {
        r.numer() / (r.denom() << ((-shift) as usize))
    };
    let qf = q.to_f64().unwrap_or(f64::NAN);
    qf * 2f64.powi(-(shift as i32))
}

pub fn factorial(n: u64) -> BigInt {
    product_range(1, n + 1, 0, 1)
}

/// `prod_{i in lo..hi} (p + i q)` by a balanced product tree.
fn product_range(lo: u64, hi: u64, p: i64, q: i64) -> BigInt {
    product_tree(lo, hi, &BigInt::from(p), &BigInt::from(q))
}

fn product_tree(lo: u64, hi: u64, p: &BigInt, q: &BigInt) -> BigInt {
    match hi.saturating_sub(lo) {
        0 => BigInt::one(),
        1 => p + q * BigInt::from(lo),
        n if n <= 16 => (lo..hi).fold(BigInt::one(), |acc, i| acc * (p + q * BigInt::from(i))),
        n => {
            let mid = lo + n / 2;
            product_tree(lo, mid, p, q) * product_tree(mid, hi, p, q)
        }
    }
}

pub fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// Rising factorial `x (x+1) ... (x+n-1)`.
pub fn rising(x: &Rational, n: u64) -> Rational {
    let num = product_tree(0, n, x.numer(), x.denom());
    Rational::new(num, num_traits::pow(x.denom().clone(), n as usize))
}

/// `H_n = 1 + 1/2 + ... + 1/n`.
pub fn harmonic(n: u64) -> Rational {
    (1..=n).fold(Rational::zero(), |acc, k| acc + rat(1, k as i64))
}

pub fn is_integer(r: &Rational) -> bool {
    r.denom().is_one()
}

/// True when `r` is a non-positive integer.
pub fn is_nonpositive_integer(r: &Rational) -> bool {
    is_integer(r) && !r.is_positive()
}

/// Distinct prime factors by trial division; only used on moderate denominators.
pub fn prime_factors(n: &BigInt) -> Vec<BigInt> {
    let mut n = n.abs();
    let mut out = Vec::new();
    let two = BigInt::from(2);
    if n.is_zero() {
        return out;
    }
    while (&n % &two).is_zero() {
        if out.last() != Some(&two) {
            out.push(two.clone());
        }
        n /= &two;
    }
    let mut p = BigInt::from(3);
    while &p * &p <= n {
        while (&n % &p).is_zero() {
            if out.last() != Some(&p) {
                out.push(p.clone());
            }
            n /= &p;
        }
        p += 2;
    }
    if n > BigInt::one() {
        out.push(n);
    }
    out
}

/// Strips every prime `<= bound` from `n`; the cofactor is 1 iff all prime factors are `<= bound`.
pub fn smooth_cofactor(n: &BigInt, bound: u64) -> BigInt {
    let mut n = n.abs();
    for p in 2..=bound {
        if (2..p).take_while(|d| d * d <= p).any(|d| p % d == 0) {
            continue;
        }
        let bp = BigInt::from(p);
        while !n.is_zero() && (&n % &bp).is_zero() {
            n /= &bp;
        }
    }
    n
}
