//! Fixed-point evaluation for sums whose terms cancel badly in `f64`.

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};

use super::{to_f64, Rational};

const BITS: usize = 320;

fn one() -> BigInt {
    BigInt::one() << BITS
}

fn mul(a: &BigInt, b: &BigInt) -> BigInt {
    (a * b) >> BITS
}

/// Exact fixed-point image of a finite `f64`.
fn from_f64(x: f64) -> BigInt {
    let r = Rational::from_float(x).expect("finite");
    (r.numer() << BITS) / r.denom()
}

/// `exp(-t)` for `t >= 0`, by halving then a Taylor series then squaring.
fn exp_neg(t: &BigInt) -> BigInt {
    let mut halvings = 0usize;
    let mut r = t.clone();
    let small = one() >> 8;
    while r > small {
        r >>= 1;
        halvings += 1;
    }
    let mut term = one();
    let mut sum = one();
    for k in 1..60u32 {
        term = -mul(&term, &r) / BigInt::from(k);
        if term.is_zero() {
            break;
        }
        sum += &term;
    }
    for _ in 0..halvings {
        sum = mul(&sum, &sum);
    }
    sum
}

pub(super) fn eval_terms<'a, I>(terms: I, t: f64) -> f64
where
    I: Iterator<Item = (u64, u32, &'a Rational)>,
{
    let tf = from_f64(t);
    let x = exp_neg(&tf);
    let mut total = BigInt::zero();
    for (rate, tpow, c) in terms {
        let mut v = (c.numer() << BITS) / c.denom();
        for _ in 0..tpow {
            v = mul(&v, &tf);
        }
        // x^rate by binary powering.
        let mut base = x.clone();
        let mut e = rate;
        let mut acc = one();
        while e > 0 {
            if e & 1 == 1 {
                acc = mul(&acc, &base);
            }
            e >>= 1;
            if e > 0 {
                base = mul(&base, &base);
            }
        }
        total += mul(&v, &acc);
    }
    let r = Rational::new(total, one());
    let v = to_f64(&r);
    if v.is_finite() {
        v
    } else {
        r.to_f64().unwrap_or(f64::NAN)
    }
}
