//! The Laplace transform `mu_hat(theta) = E sum_i exp(-theta xi_i)` of the
//! reproduction intensity, its derivative, and the constants built from it.

use num_traits::{One, Signed, ToPrimitive, Zero};

use super::{Family, ModelSpec, Weights};
use crate::dist::{LawTable, Mass, MAX_SUPPORT, TRUNCATION_MASS};
use crate::error::{Error, Result};
use crate::exact::{harmonic, int, rat, to_f64, Number, Rational};

/// Abscissa of convergence `A = inf { theta : mu_hat(theta) < infinity }`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Abscissa(pub f64);

impl ModelSpec {
    pub fn abscissa(&self) -> Abscissa {
        Abscissa(match self.family() {
            Family::Rrt => 0.0,
            Family::LinearPa { chi, .. } => to_f64(chi),
            Family::GeneralPa(w) => w.abscissa(),
            Family::MstGen { ell, .. } => -(*ell as f64) - 1.0,
            Family::Bst
            | Family::MaryIncreasing(_)
            | Family::Emst(_)
            | Family::Mst(_)
            | Family::BinaryPyramid
            | Family::FragBinaryUniform => -1.0,
        })
    }

    /// The Malthusian parameter in closed form, when rational.
    pub fn alpha_exact(&self) -> Option<Rational> {
        match self.family() {
            Family::Rrt | Family::Bst | Family::Emst(_) | Family::Mst(_) | Family::MstGen { .. } => Some(int(1)),
            Family::FragBinaryUniform => Some(int(1)),
            Family::MaryIncreasing(m) => Some(int(*m as i64 - 1)),
            Family::LinearPa { chi, rho } => Some(chi + rho),
            Family::BinaryPyramid | Family::GeneralPa(_) => None,
        }
    }

    /// The Malthusian parameter: the root of `mu_hat(alpha) = 1`.
    pub fn alpha(&self) -> Result<f64> {
        if let Some(a) = self.alpha_exact() {
            return Ok(to_f64(&a));
        }
        match self.family() {
            Family::BinaryPyramid => Ok((5f64.sqrt() - 1.0) / 2.0),
            Family::GeneralPa(w) => pa_alpha(w),
            _ => unreachable!(),
        }
    }

    /// `beta = -mu_hat'(alpha)`, the mean age at which an ancestor bears its heir.
    pub fn beta_exact(&self) -> Option<Rational> {
        match self.family() {
            Family::Rrt => Some(int(1)),
            Family::Bst | Family::FragBinaryUniform => Some(rat(1, 2)),
            Family::MaryIncreasing(m) => Some(rat(1, *m as i64)),
            Family::LinearPa { rho, .. } => Some(Rational::one() / rho),
            Family::Emst(m) | Family::Mst(m) => Some(harmonic(*m as u64) - int(1)),
            Family::MstGen { m, ell } => {
                let (m, l) = (*m as u64, *ell as u64);
                Some(harmonic(m * l + m) - harmonic(l + 1))
            }
            Family::BinaryPyramid | Family::GeneralPa(_) => None,
        }
    }

    pub fn beta(&self) -> Result<f64> {
        if let Some(b) = self.beta_exact() {
            return Ok(to_f64(&b));
        }
        match self.family() {
            Family::BinaryPyramid => Ok((3.0 * 5f64.sqrt() - 5.0) / 2.0),
            _ => Ok(-mu_hat_prime(self, self.alpha()?)?),
        }
    }
}

fn divergent(spec: &ModelSpec, theta: f64) -> Error {
    Error::Divergent(format!("mu_hat({theta}) diverges for {spec}"))
}

fn explosive(spec: &ModelSpec) -> Error {
    Error::Explosive(format!("{spec}: sum of 1/w_k is finite"))
}

/// `mu_hat(theta)` as an exact rational where the family allows it.
pub fn mu_hat_exact(spec: &ModelSpec, theta: &Rational) -> Result<Option<Rational>> {
    if spec.is_explosive() {
        return Err(explosive(spec));
    }
    if to_f64(theta) <= spec.abscissa().0 {
        return Err(divergent(spec, to_f64(theta)));
    }
    let one = Rational::one();
    Ok(match spec.family() {
        Family::Rrt => Some(&one / theta),
        Family::Bst | Family::FragBinaryUniform => Some(int(2) / (&one + theta)),
        Family::MaryIncreasing(m) => Some(int(*m as i64) / (&one + theta)),
        Family::LinearPa { chi, rho } => Some(rho / (theta - chi)),
        Family::Emst(m) | Family::Mst(m) => Some(split_transform(*m, 0, theta)),
        Family::MstGen { m, ell } => Some(split_transform(*m, *ell, theta)),
        Family::BinaryPyramid => {
            let x = &one / (&one + theta);
            Some(&x + &x * &x)
        }
        Family::GeneralPa(w) => match w.support_len() {
            Some(n) => {
                let mut acc = Rational::zero();
                let mut t = Rational::one();
                for k in 0..n {
                    let Some(wk) = w.exact(k) else { return Ok(None) };
                    t *= &wk / (&wk + theta);
                    acc += &t;
                }
                Some(acc)
            }
            None => None,
        },
    })
}

/// `m prod_{i=1}^{(m-1)(ell+1)} (ell+i)/(ell+i+theta)`.
fn split_transform(m: u32, ell: u32, theta: &Rational) -> Rational {
    let k = (m - 1) * (ell + 1);
    let mut acc = int(m as i64);
    for i in 1..=k {
        let a = int((ell + i) as i64);
        acc *= &a / (&a + theta);
    }
    acc
}

pub fn mu_hat(spec: &ModelSpec, theta: f64) -> Result<f64> {
    Ok(mu_hat_pair(spec, theta)?.0)
}

pub fn mu_hat_prime(spec: &ModelSpec, theta: f64) -> Result<f64> {
    Ok(mu_hat_pair(spec, theta)?.1)
}

/// `(mu_hat(theta), mu_hat'(theta))`.
pub fn mu_hat_pair(spec: &ModelSpec, theta: f64) -> Result<(f64, f64)> {
    if spec.is_explosive() {
        return Err(explosive(spec));
    }
    if !(theta > spec.abscissa().0) {
        return Err(divergent(spec, theta));
    }
    Ok(match spec.family() {
        Family::Rrt => (1.0 / theta, -1.0 / (theta * theta)),
        Family::Bst | Family::FragBinaryUniform => (2.0 / (1.0 + theta), -2.0 / (1.0 + theta).powi(2)),
        Family::MaryIncreasing(m) => {
            let m = *m as f64;
            (m / (1.0 + theta), -m / (1.0 + theta).powi(2))
        }
        Family::LinearPa { chi, rho } => {
            let (c, r) = (to_f64(chi), to_f64(rho));
            (r / (theta - c), -r / (theta - c).powi(2))
        }
        Family::Emst(m) | Family::Mst(m) => split_pair(*m, 0, theta),
        Family::MstGen { m, ell } => split_pair(*m, *ell, theta),
        Family::BinaryPyramid => {
            let x = 1.0 / (1.0 + theta);
            (x + x * x, -x * x - 2.0 * x * x * x)
        }
        Family::GeneralPa(w) => pa_series(w, theta).map_err(|_| divergent(spec, theta))?,
    })
}

fn split_pair(m: u32, ell: u32, theta: f64) -> (f64, f64) {
    let k = (m - 1) * (ell + 1);
    let mut v = m as f64;
    let mut dlog = 0.0;
    for i in 1..=k {
        let a = (ell + i) as f64;
        v *= a / (a + theta);
        dlog -= 1.0 / (a + theta);
    }
    (v, v * dlog)
}

/// Summation cut-off for `sum_n prod_{k<n} w_k/(w_k+theta)`.
const SERIES_TERMS: u64 = 1 << 16;

/// The series and its derivative, with a fitted tail past `SERIES_TERMS` terms.
///
/// The tail model is `t_n = C n^{-p} (1 + a/n)`, fitted at `N/4, N/2, N` and summed
/// by Euler-Maclaurin.
fn pa_series(w: &Weights, theta: f64) -> Result<(f64, f64)> {
    let mut t = 1.0f64;
    let mut h = 0.0f64;
    let (mut s, mut ds) = (0.0f64, 0.0f64);
    let n_max = SERIES_TERMS;
    let mut probes = [(0.0, 0.0); 3];
    let mut k = 0u64;
    while k < n_max {
        let wk = w.get(k);
        if wk <= 0.0 {
            return Ok((s, ds));
        }
        if wk + theta <= 0.0 {
            return Err(Error::Divergent(format!("w_{k} + theta <= 0")));
        }
        t *= wk / (wk + theta);
        h += 1.0 / (wk + theta);
        s += t;
        ds -= t * h;
        k += 1;
        if t < 1e-18 * s && t * h < 1e-18 * ds.abs() {
            return Ok((s, ds));
        }
        if k == n_max / 4 {
            probes[0] = (t, h);
        } else if k == n_max / 2 {
            probes[1] = (t, h);
        }
    }
    probes[2] = (t, h);
    let n = n_max as f64;
    let xs = [n / 4.0, n / 2.0, n];
    // ln t = c - p ln x + a / x through the three probes.
    let ys: Vec<f64> = probes.iter().map(|(t, _)| t.ln()).collect();
    let (p, a, c) = fit_tail(&xs, &ys);
    if !(p > 1.0 + 1e-6) {
        return Err(Error::Divergent(format!("series terms decay like n^-{p}")));
    }
    let cc = c.exp();
    let f = |x: f64| cc * (x.powf(-p) + a * x.powf(-p - 1.0));
    let df = |x: f64| cc * (-p * x.powf(-p - 1.0) - a * (p + 1.0) * x.powf(-p - 2.0));
    let integral = cc * (n.powf(1.0 - p) / (p - 1.0) + a * n.powf(-p) / p);
    let tail = integral - f(n) / 2.0 - df(n) / 12.0;
    let slope = (h - probes[1].1) / std::f64::consts::LN_2;
    let dtail = -(tail * h + slope * cc * n.powf(1.0 - p) / (p - 1.0).powi(2));
    Ok((s + tail, ds + dtail))
}

fn fit_tail(xs: &[f64; 3], ys: &[f64]) -> (f64, f64, f64) {
    // Unknowns (c, p, a) in y = c - p ln x + a/x.
    let rows: Vec<[f64; 4]> = (0..3).map(|i| [1.0, -xs[i].ln(), 1.0 / xs[i], ys[i]]).collect();
    let mut m = rows;
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs())).unwrap();
        m.swap(col, piv);
        for r in 0..3 {
            if r != col {
                let f = m[r][col] / m[col][col];
                for j in col..4 {
                    m[r][j] -= f * m[col][j];
                }
            }
        }
    }
    let c = m[0][3] / m[0][0];
    let p = m[1][3] / m[1][1];
    let a = m[2][3] / m[2][2];
    (p, a, c)
}

/// Malthusian parameter for general weights by bisection on the decreasing `mu_hat`.
fn pa_alpha(w: &Weights) -> Result<f64> {
    if w.is_explosive() {
        return Err(Error::Explosive(format!("weights {} explode", w.source())));
    }
    let spec = ModelSpec::new(Family::GeneralPa(w.clone()))?;
    let f = |x: f64| mu_hat_pair(&spec, x).map(|(v, _)| v - 1.0);
    let a = w.abscissa();
    let mut hi = a.max(0.0) + 1.0;
    while f(hi)? > 0.0 {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::NoConvergence("no upper bracket for alpha".into()));
        }
    }
    let mut lo = hi;
    loop {
        let next = a + (lo - a) / 2.0;
        if next - a < 1e-12 {
            return Err(Error::NoConvergence("mu_hat stays below 1 near the abscissa".into()));
        }
        match f(next) {
            Ok(v) if v > 0.0 => {
                lo = next;
                break;
            }
            Ok(_) => {
                hi = next;
                lo = next;
            }
            Err(_) => break,
        }
    }
    if f(lo)? <= 0.0 {
        return Err(Error::NoConvergence("could not bracket alpha".into()));
    }
    crate::solve::bisect_newton(|x| mu_hat_pair(&spec, x).map(|(v, d)| (v - 1.0, d)), lo, hi, 1e-14)
}

/// `m_psi = E psi(tau)` with `tau ~ Exp(alpha)`; the ratio weight/nodes tends to it.
pub fn m_psi(spec: &ModelSpec) -> Number {
    match spec.family() {
        Family::Emst(m) => Number::Exact(harmonic(*m as u64) - int(1)),
        Family::Mst(m) => Number::Exact((harmonic(*m as u64) - int(1)) * int(2)),
        Family::MstGen { m, ell } => {
            let (m, l) = (*m as i64, *ell as i64);
            let k = (m - 1) * (l + 1);
            let mut acc = Rational::zero();
            for j in 0..k {
                acc += rat((l + j) * (l + 1), (l + j + 1) * (l + j + 2));
            }
            acc += rat((m - 1) * (l + 1), l + k + 1);
            Number::Exact(acc)
        }
        _ => Number::Exact(int(1)),
    }
}

/// `q_i = E exp(-alpha xi_i)`, the law of the index of the heir among an
/// ancestor's children; it also equals `P(D >= i)` for the fringe root degree.
pub fn heir_index_law(spec: &ModelSpec) -> Result<LawTable> {
    if spec.is_explosive() {
        return Err(explosive(spec));
    }
    let label = format!("heir index ({spec})");
    match spec.family() {
        Family::Emst(m) | Family::MstGen { m, .. } => {
            let m = *m as i64;
            Ok(LawTable::exact(label, (1..=m).map(|i| (i, rat(1, m))).collect()))
        }
        Family::Mst(m) => {
            let m = *m as i64;
            Ok(LawTable::exact(label, (1..=m).map(|i| (i, rat(2 * (m - i + 1), m * (m + 1)))).collect()))
        }
        Family::FragBinaryUniform => Ok(LawTable::exact(label, vec![(1, rat(3, 4)), (2, rat(1, 4))])),
        _ => sequential_heir_law(spec, label),
    }
}

fn sequential_heir_law(spec: &ModelSpec, label: String) -> Result<LawTable> {
    let alpha_exact = spec.alpha_exact();
    let alpha = spec.alpha()?;
    let mut support = Vec::new();
    let mut masses = Vec::new();
    let mut q = Rational::one();
    let mut qf = 1.0f64;
    let mut exact = alpha_exact.is_some();
    let mut cum = 0.0;
    for i in 1..=MAX_SUPPORT as u64 {
        let d = i - 1;
        let wf = spec.birth_rate(d);
        if wf <= 0.0 {
            break;
        }
        if exact {
            match (spec.exact_birth_rate(d), &alpha_exact) {
                (Some(wk), Some(a)) if i <= 512 => {
                    q *= &wk / (&wk + a);
                    qf = to_f64(&q);
                }
                _ => exact = false,
            }
        }
        if !exact {
            qf *= wf / (wf + alpha);
        }
        support.push(i as i64);
        masses.push(if exact { Mass::Exact(q.clone()) } else { Mass::Float(qf) });
        cum += qf;
        if cum >= 1.0 - TRUNCATION_MASS {
            break;
        }
    }
    Ok(LawTable::new(label, support, masses))
}

impl ModelSpec {
    /// `rho/|chi|` for negative-linear families.
    pub fn slot_count(&self) -> Option<u32> {
        self.linear_params()
            .filter(|(c, _)| c.is_negative())
            .and_then(|(c, r)| (r / -c).to_integer().to_u32())
    }
}
