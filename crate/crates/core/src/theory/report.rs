use std::collections::BTreeMap;

use serde::Serialize;

use super::*;

#[derive(Clone, Debug, Serialize)]
pub struct TheoryReport {
    pub model: String,
    pub alpha: Constant,
    pub beta: Constant,
    pub m_psi: Number,
    pub gamma: Option<GammaRoot>,
    pub gamma_minus: Option<GammaRoot>,
    pub a_bar_i: Option<f64>,
    pub depth_const: Number,
    pub pathlength_const: Number,
    pub laws: BTreeMap<String, LawTable>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub constants: BTreeMap<String, f64>,
    /// Parts that could not be produced, with the reason.
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub unavailable: BTreeMap<String, String>,
}

/// Everything the theory module knows about one family.
pub fn theory_report(spec: &ModelSpec) -> Result<TheoryReport> {
    let mut unavailable = BTreeMap::new();
    let mut laws = BTreeMap::new();
    let mut constants = BTreeMap::new();
    let mut note = |key: &str, e: &Error| {
        unavailable.insert(key.to_string(), e.to_string());
    };
    let (depth, path) = depth_and_pathlength(spec)?;
    let gamma = gamma_height(spec).map_err(|e| note("gamma", &e)).ok();
    let gamma_minus = gamma_saturation(spec).map_err(|e| note("gamma_minus", &e)).ok();
    let a_bar_i = rate_functions(spec).map(|r| r.a_bar_i).map_err(|e| note("a_bar_i", &e)).ok();
    let mut put = |key: &str, law: Result<LawTable>| match law {
        Ok(l) => {
            laws.insert(key.to_string(), l);
        }
        Err(e) => note(key, &e),
    };
    put("degree", degree_law(spec));
    put("fringe_size", fringe_size_law(spec));
    if spec.is_search_tree() {
        put("key_count", key_count_law(spec));
    }
    if let Ok(r) = restricted_laws(spec) {
        for (k, l) in r.laws {
            put(&format!("restricted:{k}"), Ok(l));
        }
        constants.extend(r.constants);
    }
    if let Family::FragBinaryUniform = spec.family() {
        let f = fragmentation_constants();
        for (i, c) in f.conditional_child_degree.iter().enumerate() {
            constants.insert(format!("conditional_child_degree_{i}"), c.to_f64());
        }
        constants.insert("p_size_two".into(), f.p_size_two.to_f64());
        constants.insert("w".into(), to_f64(&f.w));
    }
    Ok(TheoryReport {
        model: spec.label().to_string(),
        alpha: malthusian(spec)?,
        beta: beta(spec)?,
        m_psi: m_psi(spec),
        gamma,
        gamma_minus,
        a_bar_i,
        depth_const: depth,
        pathlength_const: path,
        laws,
        constants,
        unavailable,
    })
}
