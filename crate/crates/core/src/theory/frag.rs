//! Constants of the fringe of binary uniform fragmentation.

use std::fmt;

use serde::{Serialize, Serializer};

use crate::dist::LawTable;
use crate::exact::{int, rat, to_f64, Rational};

/// `a + b ln 2 + c ln 3` with rational coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct LogCombination {
    pub a: Rational,
    pub b: Rational,
    pub c: Rational,
}

impl LogCombination {
    fn new(a: Rational, b: Rational, c: Rational) -> Self {
        Self { a, b, c }
    }

    pub fn to_f64(&self) -> f64 {
        to_f64(&self.a) + to_f64(&self.b) * 2f64.ln() + to_f64(&self.c) * 3f64.ln()
    }

    pub fn add(&self, o: &Self) -> Self {
        Self::new(&self.a + &o.a, &self.b + &o.b, &self.c + &o.c)
    }

    pub fn scale(&self, k: &Rational) -> Self {
        Self::new(&self.a * k, &self.b * k, &self.c * k)
    }
}

impl fmt::Display for LogCombination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + ({}) ln 2 + ({}) ln 3", self.a, self.b, self.c)
    }
}

impl Serialize for LogCombination {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("LogCombination", 3)?;
        st.serialize_field("symbolic", &self.to_string())?;
        st.serialize_field("value", &self.to_f64())?;
        st.end()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FragmentationConstants {
    #[serde(serialize_with = "crate::exact::ser_rational")]
    pub beta: Rational,
    /// The limit of the normalised population, `1/beta`.
    #[serde(serialize_with = "crate::exact::ser_rational")]
    pub w: Rational,
    pub degree: LawTable,
    /// Outdegree (0, 1, 2) of the first child of the root, given that it is in
    /// the fringe tree and its sibling is not.
    pub conditional_child_degree: [LogCombination; 3],
    pub p_size_two: LogCombination,
}

pub fn fragmentation_constants() -> FragmentationConstants {
    let lc = |a: Rational, b: i64, c: i64| LogCombination::new(a, int(b), int(c));
    let cond = [lc(rat(3, 2), -8, 4), lc(int(1), 12, -8), lc(rat(-3, 2), -4, 4)];
    // Size 2 needs root degree 1 (probability 1/2) and a childless child.
    let p2 = cond[0].scale(&rat(1, 2));
    FragmentationConstants {
        beta: rat(1, 2),
        w: int(2),
        degree: LawTable::exact("degree (frag:binary-uniform)", vec![(0, rat(1, 4)), (1, rat(1, 2)), (2, rat(1, 4))]),
        conditional_child_degree: cond,
        p_size_two: p2,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use quadrature::double_exponential::integrate;

    /// Children of a node of mass `v` that stay above the threshold `u`, with
    /// the split point integrated out: `(P(0), P(1), P(2))`.
    fn child_counts(u: f64, v: f64) -> [f64; 3] {
        let r = u / v;
        let both = (1.0 - 2.0 * r).max(0.0);
        let none = (2.0 * r - 1.0).max(0.0);
        [none, 1.0 - both - none, both]
    }

    /// Root of mass 1 splits at V; threshold U. Condition on `V >= U > 1 - V`.
    fn conditional_by_quadrature(k: usize) -> f64 {
        let outer = |u: f64| {
            let lo = u.max(1.0 - u);
            let f = |v: f64| child_counts(u, v)[k];
            let kink = (2.0 * u).clamp(lo, 1.0);
            integrate(f, lo, kink, 1e-13).integral + integrate(f, kink, 1.0, 1e-13).integral
        };
        let p: f64 = [0.0, 1.0 / 3.0, 0.5, 1.0].windows(2).map(|w| integrate(outer, w[0], w[1], 1e-12).integral).sum();
        p / 0.25
    }

    #[test]
    fn triple_sums_to_one() {
        let c = fragmentation_constants();
        let s = c.conditional_child_degree[0]
            .add(&c.conditional_child_degree[1])
            .add(&c.conditional_child_degree[2]);
        assert_eq!(s, LogCombination::new(int(1), int(0), int(0)));
    }

    #[test]
    fn triple_matches_quadrature() {
        let c = fragmentation_constants();
        for k in 0..3 {
            let q = conditional_by_quadrature(k);
            let want = c.conditional_child_degree[k].to_f64();
            assert!((q - want).abs() < 1e-9, "k={k}: {q} vs {want}");
        }
        let vals: Vec<f64> = c.conditional_child_degree.iter().map(LogCombination::to_f64).collect();
        for (v, want) in vals.iter().zip([0.34927, 0.52887, 0.12186]) {
            assert!((v - want).abs() < 5e-6);
        }
        assert!((c.p_size_two.to_f64() - 0.17464).abs() < 5e-6);
        assert_eq!(c.p_size_two, LogCombination::new(rat(3, 4), int(-4), int(2)));
    }
}
