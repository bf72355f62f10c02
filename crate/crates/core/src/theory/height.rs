//! Height and saturation constants and the profile rate functions, all built
//! from the convex function `L(theta) = log mu_hat(theta)`.

use serde::Serialize;

use super::{a_bar_i_closed, Provenance};
use crate::error::{Error, Result};
use crate::exact::to_f64;
use crate::models::{Family, ModelSpec};
use crate::solve::brent;

const TOL: f64 = 1e-14;
/// `mu_hat` beyond this is treated as infinite when probing the abscissa.
const HUGE: f64 = 1e8;

/// `(L(theta), L'(theta))`.
fn log_pair(spec: &ModelSpec, theta: f64) -> Result<(f64, f64)> {
    let (v, d) = crate::models::mu_hat_pair(spec, theta)?;
    Ok((v.ln(), d / v))
}

/// `theta L'(theta) - L(theta)`; its zeros give the height and saturation roots.
fn tangent_gap(spec: &ModelSpec, theta: f64) -> Result<f64> {
    let (l, dl) = log_pair(spec, theta)?;
    Ok(theta * dl - l)
}

/// A root of `theta L'(theta) = L(theta)` and the constant it yields.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GammaRoot {
    pub theta: Option<f64>,
    pub gamma: f64,
    /// `gamma / alpha`, the constant for the normalised height or saturation level.
    pub normalised: f64,
    pub residual: f64,
    pub provenance: Provenance,
}

fn finish(spec: &ModelSpec, theta: f64, provenance: Provenance) -> Result<GammaRoot> {
    let (_, dl) = log_pair(spec, theta)?;
    let gamma = -1.0 / dl;
    Ok(GammaRoot {
        theta: Some(theta),
        gamma,
        normalised: gamma / spec.alpha()?,
        residual: tangent_gap(spec, theta)?.abs(),
        provenance,
    })
}

/// The height constant: the positive root `theta` of the tangent equation and
/// `gamma = -mu_hat(theta)/mu_hat'(theta)`.
pub fn gamma_height(spec: &ModelSpec) -> Result<GammaRoot> {
    let alpha = spec.alpha()?;
    if let Family::Rrt = spec.family() {
        let mut r = finish(spec, std::f64::consts::E, Provenance::ClosedForm)?;
        r.gamma = std::f64::consts::E;
        r.normalised = std::f64::consts::E;
        return Ok(r);
    }
    // The gap is increasing on theta > 0 and negative at alpha.
    let lo = alpha + 1e-9;
    let mut hi = 2.0 * alpha.max(1.0);
    for _ in 0..200 {
        let (v, _) = crate::models::mu_hat_pair(spec, hi)?;
        if v < 1e-300 {
            break;
        }
        if tangent_gap(spec, hi)? > 0.0 {
            let theta = brent(|t| tangent_gap(spec, t), lo, hi, TOL)?;
            return finish(spec, theta, Provenance::Solved);
        }
        hi *= 2.0;
    }
    // No positive root: 1/gamma is the slope of the asymptote of L(theta)/theta.
    let slope = -crate::models::mu_hat(spec, hi)?.ln() / hi;
    if !(slope > 1e-6) {
        return Err(Error::NoConvergence(format!("no positive tangent root for {spec}")));
    }
    Ok(GammaRoot {
        theta: None,
        gamma: 1.0 / slope,
        normalised: 1.0 / (slope * alpha),
        residual: f64::NAN,
        provenance: Provenance::Solved,
    })
}

/// The saturation constant: the root of the tangent equation in `(A, 0)`, or 0
/// when `A >= 0`.
pub fn gamma_saturation(spec: &ModelSpec) -> Result<GammaRoot> {
    let a = spec.abscissa().0;
    if a >= 0.0 {
        return Ok(GammaRoot {
            theta: None,
            gamma: 0.0,
            normalised: 0.0,
            residual: 0.0,
            provenance: Provenance::ClosedForm,
        });
    }
    // The gap decreases on (A, 0) and is negative at 0.
    let hi = 0.0;
    let mut d = 1e-3 * a.abs().min(1.0);
    for _ in 0..60 {
        let lo = a + d;
        if tangent_gap(spec, lo)? > 0.0 {
            let theta = brent(|t| tangent_gap(spec, t), lo, hi, TOL)?;
            return finish(spec, theta, Provenance::Solved);
        }
        d /= 4.0;
    }
    // No root: the limit of L(theta)/|theta| at A.
    let theta = a + d;
    let slope = crate::models::mu_hat(spec, theta)?.ln() / theta.abs();
    if !(slope > 0.0) {
        return Err(Error::NoConvergence(format!("no negative tangent root for {spec}")));
    }
    Ok(GammaRoot {
        theta: None,
        gamma: 1.0 / slope,
        normalised: 1.0 / (slope * spec.alpha()?),
        residual: f64::NAN,
        provenance: Provenance::Solved,
    })
}

/// Constants and evaluators for the profile of the tree.
#[derive(Clone, Debug, Serialize)]
pub struct RateFunctions {
    #[serde(skip)]
    spec: ModelSpec,
    pub alpha: f64,
    pub beta: f64,
    /// The abscissa of convergence `A`.
    #[serde(rename = "A")]
    pub abscissa: f64,
    pub a_bar: f64,
    pub a_bar_minus: f64,
    pub a_bar_i: f64,
    pub a_bar_circ: f64,
    pub gamma: f64,
    pub gamma_minus: f64,
}

pub fn rate_functions(spec: &ModelSpec) -> Result<RateFunctions> {
    let alpha = spec.alpha()?;
    let beta = spec.beta()?;
    let a = spec.abscissa().0;
    let a_bar_i = match a_bar_i_closed(spec) {
        Some(r) => to_f64(&r),
        None if a < 0.0 => {
            let (_, dl) = log_pair(spec, 0.0)?;
            -1.0 / dl
        }
        None => 0.0,
    };
    let a_bar_circ = if a.is_finite() {
        let probe = a + 1e-10 * a.abs().max(1.0);
        match crate::models::mu_hat_pair(spec, probe) {
            Ok((v, d)) if v < HUGE && d.abs() < HUGE => v / -d,
            _ => 0.0,
        }
    } else {
        0.0
    };
    Ok(RateFunctions {
        spec: spec.clone(),
        alpha,
        beta,
        abscissa: a,
        // Every implemented family has children at all ages in (0, infinity).
        a_bar: f64::INFINITY,
        a_bar_minus: 0.0,
        a_bar_i,
        a_bar_circ,
        gamma: gamma_height(spec)?.gamma,
        gamma_minus: gamma_saturation(spec)?.gamma,
    })
}

impl RateFunctions {
    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    fn log_mu(&self, theta: f64) -> Result<f64> {
        Ok(crate::models::mu_hat(&self.spec, theta)?.ln())
    }

    /// `alpha(zeta) = inf { theta : L(theta) <= zeta }`.
    pub fn alpha_of_zeta(&self, zeta: f64) -> Result<f64> {
        let a = self.abscissa;
        let lo = a + 1e-12 * a.abs().max(1.0);
        if self.log_mu(lo)? <= zeta {
            return Ok(a);
        }
        let mut hi = self.alpha.max(0.0) + 1.0;
        for _ in 0..200 {
            if self.log_mu(hi)? <= zeta {
                return brent(|t| Ok(self.log_mu(t)? - zeta), lo, hi, TOL);
            }
            hi *= 2.0;
        }
        Err(Error::NoConvergence(format!("alpha({zeta}) has no finite value")))
    }

    /// `alpha*(x) = inf_{theta > alpha} { x L(theta) + theta }`, `x >= 0`.
    pub fn alpha_star(&self, x: f64) -> Result<f64> {
        check_nonneg(x)?;
        self.convex_inf(x, self.alpha, f64::INFINITY)
    }

    /// `inf_{theta <= alpha} { |x| L(theta) + theta }` for `x < 0`.
    pub fn alpha_check_star(&self, x: f64) -> Result<f64> {
        if !(x < 0.0) {
            return Err(Error::InvalidParameters(format!("need x < 0, got {x}")));
        }
        self.convex_inf(-x, f64::NEG_INFINITY, self.alpha)
    }

    /// `inf_{0 <= theta <= alpha} { x L(theta) + theta }`, for `0 <= x < gamma`.
    pub fn alpha_tilde_star(&self, x: f64) -> Result<f64> {
        self.check_profile_range(x)?;
        if x == 0.0 {
            return Ok(self.abscissa.max(0.0));
        }
        if let Some(v) = self.closed_tilde(x) {
            return Ok(v);
        }
        self.convex_inf(x, 0.0, self.alpha)
    }

    /// `inf_{theta >= 0} { x L(theta) + theta }`, for `0 <= x < gamma`.
    pub fn alpha_hat_star(&self, x: f64) -> Result<f64> {
        self.check_profile_range(x)?;
        if x == 0.0 {
            return Ok(self.abscissa.max(0.0));
        }
        if let Some(v) = self.closed_hat(x) {
            return Ok(v);
        }
        self.convex_inf(x, 0.0, f64::INFINITY)
    }

    fn check_profile_range(&self, x: f64) -> Result<()> {
        check_nonneg(x)?;
        if x >= self.gamma {
            return Err(Error::InvalidParameters(format!(
                "x = {x} is beyond the height constant {}; the profile asymptotics do not hold there",
                self.gamma
            )));
        }
        Ok(())
    }

    fn closed_tilde(&self, x: f64) -> Option<f64> {
        if self.a_bar_i > 0.0 && x <= self.a_bar_i {
            return Some(x * self.log_mu(0.0).ok()?);
        }
        if x >= 1.0 / self.beta {
            return Some(self.alpha);
        }
        None
    }

    fn closed_hat(&self, x: f64) -> Option<f64> {
        let ln = f64::ln;
        match self.spec.family() {
            Family::Bst if x <= 1.0 => Some(x * ln(2.0)),
            Family::Bst => Some(x * ln(2.0) - x * ln(x) + x - 1.0),
            Family::Rrt => Some(-x * ln(x) + x),
            Family::LinearPa { chi, rho } if to_f64(chi) > 0.0 => {
                let (c, r) = (to_f64(chi), to_f64(rho));
                Some(x * ln(r) - x * ln(x) + x + c)
            }
            _ => None,
        }
    }

    /// `inf { c L(theta) + theta : theta in [lo, hi], theta > A }` for `c >= 0`;
    /// the objective is convex, so this is a root of its increasing derivative.
    fn convex_inf(&self, c: f64, lo: f64, hi: f64) -> Result<f64> {
        let spec = &self.spec;
        let f = |t: f64| -> Result<f64> { Ok(c * self.log_mu(t)? + t) };
        let fp = |t: f64| -> Result<f64> { Ok(c * log_pair(spec, t)?.1 + 1.0) };
        let a = self.abscissa;
        let left = if lo > a {
            if fp(lo)? >= 0.0 {
                return f(lo);
            }
            lo
        } else {
            if c == 0.0 {
                return Ok(a);
            }
            let scale = a.abs().max(1.0);
            let mut d = 1e-3 * scale;
            // Slowly converging transforms may not be computable this close to A.
            while let Err(Error::Divergent(_)) = fp(a + d) {
                d *= 4.0;
                if a + d >= hi {
                    return Err(Error::NoConvergence(format!("transform not computable near {a}")));
                }
            }
            let mut last = a + d;
            loop {
                let t = a + d;
                match fp(t) {
                    Ok(v) if v < 0.0 => break t,
                    Ok(_) => last = t,
                    Err(Error::Divergent(_)) => return f(last),
                    Err(e) => return Err(e),
                }
                if d < 1e-13 * scale {
                    // The derivative stays positive: the infimum is the limit at A.
                    return f(t);
                }
                d /= 4.0;
            }
        };
        let right = if hi.is_finite() {
            if fp(hi)? <= 0.0 {
                return f(hi);
            }
            hi
        } else {
            let mut h = left.max(0.0) + 1.0;
            let mut n = 0;
            while fp(h)? <= 0.0 {
                h *= 2.0;
                n += 1;
                if n > 200 {
                    return Err(Error::NoConvergence("objective keeps decreasing".into()));
                }
            }
            h
        };
        let t = brent(fp, left, right, TOL)?;
        f(t)
    }
}

fn check_nonneg(x: f64) -> Result<()> {
    if !(x >= 0.0) {
        return Err(Error::InvalidParameters(format!("need x >= 0, got {x}")));
    }
    Ok(())
}
