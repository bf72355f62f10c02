//! Life histories of ancestors on the spine of the sin-tree.
//!
//! An ancestor's life is tilted by `exp(-alpha xi_I)` where `xi_I` is the age
//! at which it bears its heir `I`.

use rand::Rng;

use super::life::exp;
use super::{ChildBirth, LifeHistory, ModelSpec, Reproduction};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct AncestorLifeHistory {
    pub life: LifeHistory,
    /// 1-based position of the heir in `life.child_births`.
    pub heir_index: usize,
}

impl AncestorLifeHistory {
    pub fn heir_age(&self) -> f64 {
        self.life.child_births[self.heir_index - 1].age
    }

    pub fn heir_slot(&self) -> Option<u32> {
        self.life.child_births[self.heir_index - 1].slot
    }
}

/// Largest heir index tried before giving up on a sequential law.
const MAX_HEIR_INDEX: u64 = 1 << 40;

/// Sample an ancestor whose life is observed until `extra` after its heir is born.
pub fn sample_ancestor_life<R: Rng + ?Sized>(spec: &ModelSpec, extra: f64, rng: &mut R) -> Result<AncestorLifeHistory> {
    if spec.is_explosive() {
        return Err(Error::Unsupported(format!("{spec}: no heir-biased law for explosive weights")));
    }
    if !(extra >= 0.0) {
        return Err(Error::InvalidParameters(format!("extra age must be >= 0, got {extra}")));
    }
    let alpha = spec.alpha()?;
    let mut keys = Vec::new();
    let mut births: Vec<ChildBirth> = Vec::new();
    let mut split = None;
    let heir_index;
    let horizon;
    match spec.reproduction() {
        Reproduction::Sequential => {
            let u: f64 = rng.random();
            let (mut q, mut cum) = (1.0, 0.0);
            let mut i = 0u64;
            loop {
                let w = spec.birth_rate(i);
                i += 1;
                if !(w > 0.0) || i > MAX_HEIR_INDEX {
                    i -= 1;
                    break;
                }
                q *= w / (w + alpha);
                cum += q;
                if cum >= u {
                    break;
                }
            }
            let heir = i.max(1);
            let mut age = 0.0;
            for j in 0..heir {
                age += exp(rng, spec.birth_rate(j) + alpha);
                births.push(ChildBirth { age, slot: None });
            }
            horizon = age + extra;
            let mut j = heir;
            loop {
                let w = spec.birth_rate(j);
                if !(w > 0.0) {
                    break;
                }
                age += exp(rng, w);
                if age > horizon {
                    break;
                }
                births.push(ChildBirth { age, slot: None });
                j += 1;
            }
            heir_index = heir as usize;
        }
        Reproduction::Slots { m, rate } => {
            let heir_slot = rng.random_range(1..=m);
            let heir_age = exp(rng, rate + alpha);
            horizon = heir_age + extra;
            for j in 1..=m {
                let age = if j == heir_slot { heir_age } else { exp(rng, rate) };
                if age <= horizon {
                    births.push(ChildBirth { age, slot: Some(j) });
                }
            }
            births.sort_by(|a, b| a.age.total_cmp(&b.age));
            heir_index = 1 + births.iter().position(|c| c.slot == Some(heir_slot)).unwrap();
        }
        Reproduction::KeysThenSplit { m, ell } => {
            let total = (m - 1) * (ell + 1);
            let mut age = 0.0;
            for i in 1..=total {
                age += exp(rng, (ell + i) as f64 + alpha);
                keys.push(age);
            }
            split = Some((age, m * ell));
            births.extend((1..=m).map(|j| ChildBirth { age, slot: Some(j) }));
            heir_index = rng.random_range(1..=m) as usize;
            horizon = age + extra;
        }
        Reproduction::KeysThenSlots { m } => {
            let mut age = 0.0;
            for i in 2..m {
                age += exp(rng, i as f64 + alpha);
                keys.push(age);
            }
            let heir_slot = rng.random_range(1..=m);
            let heir_age = age + exp(rng, 1.0 + alpha);
            horizon = heir_age + extra;
            for j in 1..=m {
                let a = if j == heir_slot { heir_age } else { age + exp(rng, 1.0) };
                if a <= horizon {
                    births.push(ChildBirth { age: a, slot: Some(j) });
                }
            }
            births.sort_by(|a, b| a.age.total_cmp(&b.age));
            heir_index = 1 + births.iter().position(|c| c.slot == Some(heir_slot)).unwrap();
        }
        Reproduction::UniformSplit => {
            let u: f64 = rng.random();
            let v = u.sqrt();
            let heir_age = -v.ln();
            let sib_age = -(1.0 - v).ln();
            horizon = heir_age + extra;
            births.push(ChildBirth { age: heir_age, slot: Some(1) });
            if sib_age <= horizon {
                births.push(ChildBirth { age: sib_age, slot: Some(2) });
            }
            births.sort_by(|a, b| a.age.total_cmp(&b.age));
            heir_index = 1 + births.iter().position(|c| c.slot == Some(1)).unwrap();
        }
    }
    Ok(AncestorLifeHistory {
        life: LifeHistory {
            initial_keys: spec.initial_keys(),
            key_arrival_ages: keys,
            child_births: births,
            split,
            horizon,
        },
        heir_index,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::heir_index_law;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn heir_age_mean_is_beta() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for s in ["rrt", "bst", "mst:4", "emst:3", "mstgen:2,1", "pyramid", "frag:binary-uniform", "pa:linear:1,1", "mary:3"] {
            let spec = ModelSpec::parse(s).unwrap();
            let n = 200_000;
            let mut sum = 0.0;
            let mut sq = 0.0;
            for _ in 0..n {
                let a = sample_ancestor_life(&spec, 0.0, &mut rng).unwrap().heir_age();
                sum += a;
                sq += a * a;
            }
            let mean = sum / n as f64;
            let sd = ((sq / n as f64 - mean * mean) / n as f64).sqrt();
            let beta = spec.beta().unwrap();
            assert!((mean - beta).abs() < 5.0 * sd, "{s}: {mean} vs {beta} (sd {sd})");
        }
    }

    #[test]
    fn heir_index_follows_q() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for s in ["rrt", "bst", "mst:4", "pyramid", "frag:binary-uniform", "mary:3"] {
            let spec = ModelSpec::parse(s).unwrap();
            let law = heir_index_law(&spec).unwrap();
            let n = 100_000;
            let mut counts = vec![0u64; 64];
            for _ in 0..n {
                let a = sample_ancestor_life(&spec, 0.0, &mut rng).unwrap();
                counts[a.heir_index.min(63)] += 1;
            }
            for i in 1..6 {
                let p = law.prob(i);
                let f = counts[i as usize] as f64 / n as f64;
                let sd = (p * (1.0 - p) / n as f64).sqrt();
                assert!((f - p).abs() < 5.0 * sd + 1e-12, "{s} i={i}: {f} vs {p}");
            }
        }
    }

    #[test]
    fn horizon_keeps_heir() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let spec = ModelSpec::parse("rrt").unwrap();
        for _ in 0..1000 {
            let a = sample_ancestor_life(&spec, 0.5, &mut rng).unwrap();
            assert!(a.life.child_births.iter().all(|c| c.age <= a.heir_age() + 0.5));
            assert!((a.life.horizon - a.heir_age() - 0.5).abs() < 1e-12);
        }
        let exp = ModelSpec::parse("pa:weights:(k+1)^2").unwrap();
        assert!(matches!(sample_ancestor_life(&exp, 0.0, &mut rng), Err(Error::Unsupported(_))));
    }
}
