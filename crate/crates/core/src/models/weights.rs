//! Preferential-attachment weights `w_0, w_1, ...`, given either as an
//! explicit list (zero past its end) or as an expression in `k`.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use evalexpr::{ContextWithMutableVariables, HashMapContext, Node, Value};
use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::exact::{parse_rational, to_f64, Rational};

const CACHE_LEN: usize = 1 << 16;
/// Index at which growth is probed for the explosion and abscissa heuristics.
const PROBE: u64 = 1 << 20;

#[derive(Clone)]
pub struct Weights {
    source: String,
    kind: Arc<Kind>,
    cache: Arc<Vec<f64>>,
}

enum Kind {
    List(Vec<Rational>),
    Expr(Node),
}

impl fmt::Debug for Weights {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Weights({})", self.source)
    }
}

impl Weights {
    /// A file path holding numbers, an inline list such as `2 1` or `2,1`,
    /// or an expression in `k` such as `(k+1)^0.9`.
    pub fn parse(src: &str) -> Result<Self> {
        let src = src.trim();
        if src.is_empty() {
            return Err(Error::Parse("empty weight specification".into()));
        }
        let path = Path::new(src);
        if path.is_file() {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{src}: {e}")))?;
            let list = parse_list(&text).ok_or_else(|| Error::Parse(format!("{src}: expected numbers")))?;
            return Self::from_list(src, list);
        }
        if let Some(list) = parse_list(src) {
            return Self::from_list(src, list);
        }
        let node = evalexpr::build_operator_tree(src).map_err(|e| Error::Parse(format!("{src}: {e}")))?;
        let kind = Kind::Expr(node);
        let cache = (0..CACHE_LEN as u64).map(|k| eval(&kind, k)).collect::<Result<Vec<_>>>()?;
        Ok(Self {
            source: src.to_string(),
            kind: Arc::new(kind),
            cache: Arc::new(cache),
        })
    }

    pub fn from_list(source: &str, list: Vec<Rational>) -> Result<Self> {
        if list.iter().any(Signed::is_negative) {
            return Err(Error::InvalidParameters("weights must be non-negative".into()));
        }
        let cache = list.iter().map(to_f64).collect();
        Ok(Self {
            source: source.to_string(),
            kind: Arc::new(Kind::List(list)),
            cache: Arc::new(cache),
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn get(&self, k: u64) -> f64 {
        if let Some(&w) = self.cache.get(k as usize) {
            return w;
        }
        match &*self.kind {
            Kind::List(_) => 0.0,
            kind => eval(kind, k).unwrap_or(f64::NAN).max(0.0),
        }
    }

    /// Exact weight for lists and integer-valued expressions.
    pub fn exact(&self, k: u64) -> Option<Rational> {
        match &*self.kind {
            Kind::List(v) => Some(v.get(k as usize).cloned().unwrap_or_else(Rational::zero)),
            Kind::Expr(_) => {
                let w = self.get(k);
                (w.fract() == 0.0 && w.abs() < 9.0e15).then(|| Rational::from_integer((w as i64).into()))
            }
        }
    }

    /// Number of positive weights before the first zero, if a zero occurs.
    pub fn support_len(&self) -> Option<u64> {
        match &*self.kind {
            Kind::List(v) => Some(v.iter().position(Zero::is_zero).unwrap_or(v.len()) as u64),
            Kind::Expr(_) => self.cache.iter().position(|&w| w <= 0.0).map(|i| i as u64),
        }
    }

    /// Local growth exponent `log2(w(2K)/w(K))` at a large index.
    pub fn growth_exponent(&self) -> Option<f64> {
        if self.support_len().is_some() {
            return None;
        }
        Some((self.get(2 * PROBE) / self.get(PROBE)).log2())
    }

    /// Heuristic test of `sum 1/w_k < infinity`: weights growing faster than
    /// `k^1.1` at the probe index are treated as explosive.
    pub fn is_explosive(&self) -> bool {
        self.growth_exponent().is_some_and(|p| p > 1.1)
    }

    /// Abscissa of convergence of `sum_n prod_{k<n} w_k/(w_k+theta)`.
    ///
    /// Finite support gives `-min w_k`; otherwise sublinear growth gives 0 and
    /// linear growth gives the slope at the probe index.
    pub fn abscissa(&self) -> f64 {
        if let Some(n) = self.support_len() {
            return -(0..n).map(|k| self.get(k)).fold(f64::INFINITY, f64::min);
        }
        match self.growth_exponent() {
            Some(p) if p < 0.99 => 0.0,
            _ => (self.get(2 * PROBE) - self.get(PROBE)) / PROBE as f64,
        }
    }
}

fn parse_list(text: &str) -> Option<Vec<Rational>> {
    let toks: Vec<&str> = text
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .collect();
    if toks.is_empty() {
        return None;
    }
    toks.into_iter().map(parse_rational).collect()
}

fn eval(kind: &Kind, k: u64) -> Result<f64> {
    let Kind::Expr(node) = kind else {
        unreachable!("lists are served from the cache")
    };
    let mut ctx = HashMapContext::new();
    ctx.set_value("k".into(), Value::Float(k as f64))
        .map_err(|e| Error::Parse(e.to_string()))?;
    let v = node.eval_with_context(&ctx).map_err(|e| Error::Parse(format!("w({k}): {e}")))?;
    let w = v.as_number().map_err(|e| Error::Parse(format!("w({k}): {e}")))?;
    if !(w >= 0.0) {
        return Err(Error::InvalidParameters(format!("w({k}) = {w} is not a non-negative number")));
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::int;

    #[test]
    fn expressions() {
        let w = Weights::parse("(k+1)^2").unwrap();
        assert_eq!(w.get(3), 16.0);
        assert_eq!(w.get(1 << 17), ((1u64 << 17) + 1) as f64 * ((1u64 << 17) + 1) as f64);
        assert_eq!(w.exact(2), Some(int(9)));
        assert!(w.is_explosive());
        let lin = Weights::parse("k+1").unwrap();
        assert!(!lin.is_explosive());
        assert!((lin.abscissa() - 1.0).abs() < 1e-12);
        let sub = Weights::parse("(k+1)^0.9").unwrap();
        assert!(!sub.is_explosive());
        assert_eq!(sub.abscissa(), 0.0);
    }

    #[test]
    fn lists() {
        let w = Weights::parse("2 1").unwrap();
        assert_eq!(w.support_len(), Some(2));
        assert_eq!(w.get(5), 0.0);
        assert_eq!(w.abscissa(), -1.0);
        assert_eq!(Weights::parse("3,2,1,0").unwrap().support_len(), Some(3));
        assert!(Weights::parse("1 -1").is_err());
    }

    #[test]
    fn file_source() {
        let dir = std::env::temp_dir().join(format!("fringe-weights-{}", std::process::id()));
        std::fs::write(&dir, "1\n1\n").unwrap();
        let w = Weights::parse(dir.to_str().unwrap()).unwrap();
        assert_eq!(w.support_len(), Some(2));
        std::fs::remove_file(dir).unwrap();
    }
}
