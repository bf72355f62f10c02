use fringe_core::dist::{
    birth_marginal, birth_stopped_law, hg_factorial_moment, hg_factorial_moment_formula, hg_law, hg_pmf, hg_tail,
    BirthRates, HGParams, MAX_SUPPORT,
};
use fringe_core::exact::{int, rat, to_f64, Rational};
use num_traits::One;
use proptest::prelude::*;
use quadrature::double_exponential::integrate;
use statrs::function::beta::ln_beta;
use statrs::function::gamma::ln_gamma;

fn positive() -> impl Strategy<Value = Rational> {
    (1i64..=24, 1i64..=6).prop_map(|(n, d)| rat(n, d))
}

fn exact_sum(p: &HGParams) -> Rational {
    let n = p.support_max().unwrap();
    (0..=n).map(|k| hg_pmf(p, k).as_exact().cloned().unwrap()).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    /// `a = -n`, `b > 0`, `c < a + 1`.
    #[test]
    fn bounded_case_two_sums_to_one(n in 1i64..9, b in positive(), gap in positive()) {
        let a = int(-n);
        let c = &a + int(1) - gap;
        let p = HGParams::new(a, b, c).unwrap();
        prop_assert_eq!(p.support_max(), Some(n as u64));
        prop_assert_eq!(exact_sum(&p), Rational::one());
    }

    /// `a = -n`, `b < a + 1`, `c > 0`.
    #[test]
    fn bounded_case_three_sums_to_one(n in 1i64..9, gap in positive(), c in positive()) {
        let a = int(-n);
        let b = &a + int(1) - gap;
        let p = HGParams::new(a, b, c).unwrap();
        prop_assert_eq!(exact_sum(&p), Rational::one());
    }

    #[test]
    fn bounded_moments_match_formula(n in 1i64..8, b in positive(), gap in positive(), m in 1u64..4) {
        let a = int(-n);
        let c = &a + int(1) - gap;
        let p = HGParams::new(a, b, c).unwrap();
        prop_assert_eq!(hg_factorial_moment(&p, m), hg_factorial_moment_formula(&p, m));
    }

    /// `a, b > 0`, `c > a + b`: the listed mass plus the tail estimate is 1.
    #[test]
    fn unbounded_mass_and_tail(a in positive(), b in positive(), gap in (3i64..=12, 1i64..=4).prop_map(|(n, d)| rat(n, d))) {
        prop_assume!(to_f64(&gap) > 0.6);
        let c = &a + &b + gap;
        let p = HGParams::new(a, b, c).unwrap();
        let law = hg_law(&p);
        let cut = law.len().min(40_000);
        let listed: f64 = law.iter().take(cut).map(|(_, q)| q).sum();
        let (kk, e) = hg_tail(&p).unwrap();
        // Tail sum of K k^e from `cut` on, by the midpoint rule.
        let tail = kk * (cut as f64 - 0.5).powf(e + 1.0) / -(e + 1.0);
        let rest = 1.0 - listed;
        prop_assert!(rest >= -1e-12);
        if cut == 40_000 {
            prop_assert!((rest - tail).abs() <= 0.05 * tail + 1e-11, "rest {} vs tail {}", rest, tail);
        }
        if law.len() < MAX_SUPPORT {
            prop_assert!((law.total() - 1.0).abs() < 2e-9);
        }
    }

    #[test]
    fn finite_birth_law_is_exact(rates in prop::collection::vec(1i64..6, 1..7), alpha in positive()) {
        let mut list: Vec<Rational> = rates.into_iter().map(int).collect();
        list.push(int(0));
        let law = birth_stopped_law(&BirthRates::Explicit(list), &alpha).unwrap();
        prop_assert_eq!(law.exact_total().unwrap(), Rational::one());
    }

}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn linear_birth_law_partial_sums_rise_to_one(chi in 0i64..3, rho in 1i64..5, alpha in 1i64..4) {
        let r = BirthRates::linear(int(chi), int(rho)).unwrap();
        let law = birth_stopped_law(&r, &int(alpha)).unwrap();
        let mut cum = 0.0;
        for (_, p) in law.iter() {
            prop_assert!(p >= 0.0);
            cum += p;
            prop_assert!(cum <= 1.0 + 1e-12);
        }
        if law.len() < MAX_SUPPORT {
            prop_assert!(cum > 1.0 - 2e-9, "{}", cum);
        } else {
            // Heavy tails stop at the support cap; the rest is the tail.
            let (kk, e) = hg_tail(&r.stopped_hg(&int(alpha)).unwrap()).unwrap();
            let tail = kk * (MAX_SUPPORT as f64 - 0.5).powf(e + 1.0) / -(e + 1.0);
            prop_assert!((1.0 - cum - tail).abs() < 0.01 * tail, "{} vs {}", 1.0 - cum, tail);
        }
    }
}

fn quad(f: impl Fn(f64) -> f64) -> f64 {
    integrate(f, 0.0, 1.0, 1e-13).integral
}

/// `E f(P)` for `P ~ B(a, b)`. Each half substitutes `p = s^(1/a)` (or the
/// mirror image) so the endpoint singularity of the density disappears.
fn beta_mixture(a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let left = integrate(|s: f64| f(s.powf(1.0 / a)) * (1.0 - s.powf(1.0 / a)).powf(b - 1.0), 0.0, 0.5f64.powf(a), 1e-14);
    let right = integrate(|s: f64| f(1.0 - s.powf(1.0 / b)) * (1.0 - s.powf(1.0 / b)).powf(a - 1.0), 0.0, 0.5f64.powf(b), 1e-14);
    (left.integral / a + right.integral / b) / ln_beta(a, b).exp()
}

#[test]
fn negative_binomial_mixture() {
    let sets = [(1, 1, 1, 1, 1, 1), (2, 1, 3, 2, 1, 2), (5, 2, 2, 1, 7, 3), (1, 3, 5, 2, 3, 2), (3, 1, 1, 2, 4, 1)];
    for (rn, rd, an, ad, bn, bd) in sets {
        let (r, a, b) = (rat(rn, rd), rat(an, ad), rat(bn, bd));
        let (rf, af, bf) = (to_f64(&r), to_f64(&a), to_f64(&b));
        let p = HGParams::new(r.clone(), b.clone(), &r + &a + &b).unwrap();
        for k in 0..8u64 {
            let ln_coef = ln_gamma(rf + k as f64) - ln_gamma(rf) - ln_gamma(k as f64 + 1.0);
            let coef = ln_coef.exp();
            let mixed = beta_mixture(af, bf, |q| coef * q.powf(rf) * (1.0 - q).powi(k as i32));
            let want = hg_pmf(&p, k).to_f64();
            assert!((mixed - want).abs() < 1e-10, "NBin({r}) x B({a},{b}) k={k}: {mixed} vs {want}");
        }
    }
}

#[test]
fn binomial_mixture() {
    let sets = [(1, 1, 1, 1, 1), (3, 1, 2, 1, 2), (5, 3, 2, 5, 3), (4, 7, 3, 1, 4), (6, 2, 1, 9, 2)];
    for (m, an, ad, bn, bd) in sets {
        let (a, b) = (rat(an, ad), rat(bn, bd));
        let (af, bf) = (to_f64(&a), to_f64(&b));
        let p = HGParams::new(int(-m), a.clone(), int(1) - &b - int(m)).unwrap();
        for k in 0..=m as u64 {
            let ln_coef = ln_gamma(m as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((m as u64 - k) as f64 + 1.0);
            let coef = ln_coef.exp();
            let mixed = beta_mixture(af, bf, |q| coef * q.powi(k as i32) * (1.0 - q).powi((m as u64 - k) as i32));
            let want = hg_pmf(&p, k).to_f64();
            assert!((mixed - want).abs() < 1e-10, "Bin({m}) x B({a},{b}) k={k}: {mixed} vs {want}");
        }
    }
}

/// Stopping the linear pure-birth process at an independent `Exp(alpha)`
/// time, computed from its time marginals, gives the stopped law.
#[test]
fn marginals_integrate_to_stopped_law() {
    for (chi, rho, alpha) in [(1, 1, 1), (0, 2, 1), (1, 3, 2), (-1, 3, 1), (2, 1, 3), (-1, 2, 2)] {
        let r = BirthRates::linear(int(chi), int(rho)).unwrap();
        let law = birth_stopped_law(&r, &int(alpha)).unwrap();
        let af = alpha as f64;
        for k in 0..10u64 {
            let got = quad(|u| {
                if u <= 0.0 {
                    return 0.0;
                }
                birth_marginal(&int(chi), &int(rho), -u.ln() / af, k)
            });
            let want = law.prob(k as i64);
            assert!((got - want).abs() < 1e-8, "chi={chi} rho={rho} alpha={alpha} k={k}: {got} vs {want}");
        }
    }
}
