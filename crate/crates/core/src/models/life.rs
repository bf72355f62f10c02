//! Lazy life histories: each node keeps a small state and yields its next
//! event on demand, so unbounded child sequences are never materialised.

use rand::Rng;
use rand_distr::Exp1;
use serde::Serialize;

use super::{ModelSpec, Reproduction};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum EventKind {
    /// The node gains one key.
    Key,
    /// One child is born.
    Child { slot: Option<u32> },
    /// The node gains its last key, keeps `m - 1` keys and bears `children`
    /// children at once, handing them `dropped` keys in total.
    Split { children: u32, dropped: u32 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LifeEvent {
    pub age: f64,
    pub kind: EventKind,
}

pub(crate) fn exp<R: Rng + ?Sized>(rng: &mut R, rate: f64) -> f64 {
    let e: f64 = rng.sample(Exp1);
    e / rate
}

/// Per-node sampler state.
#[derive(Clone, Debug, Default)]
pub struct LifeState {
    age: f64,
    step: u32,
    /// Pre-drawn `(age, slot)` births, latest first.
    pending: Vec<(f64, u32)>,
}

impl LifeState {
    pub fn new<R: Rng + ?Sized>(spec: &ModelSpec, rng: &mut R) -> Self {
        let mut s = LifeState::default();
        match spec.reproduction() {
            Reproduction::Slots { m, rate } => s.fill_slots(m, rate, rng),
            Reproduction::KeysThenSlots { m: 2 } => s.fill_slots(2, 1.0, rng),
            Reproduction::UniformSplit => {
                let v: f64 = rng.random();
                s.pending = vec![(-v.ln(), 1), (-(1.0 - v).ln(), 2)];
                s.sort_pending();
            }
            _ => {}
        }
        s
    }

    fn fill_slots<R: Rng + ?Sized>(&mut self, m: u32, rate: f64, rng: &mut R) {
        self.pending = (1..=m).map(|j| (self.age + exp(rng, rate), j)).collect();
        self.sort_pending();
    }

    fn sort_pending(&mut self) {
        self.pending.sort_by(|a, b| b.0.total_cmp(&a.0));
    }

    /// The next event of this life, or `None` once the life is over.
    pub fn next<R: Rng + ?Sized>(&mut self, spec: &ModelSpec, rng: &mut R) -> Option<LifeEvent> {
        if let Some((age, slot)) = self.pending.pop() {
            return Some(LifeEvent {
                age,
                kind: EventKind::Child { slot: Some(slot) },
            });
        }
        match spec.reproduction() {
            Reproduction::Sequential => {
                let rate = spec.birth_rate(self.step as u64);
                if !(rate > 0.0) {
                    return None;
                }
                self.age += exp(rng, rate);
                self.step += 1;
                Some(LifeEvent {
                    age: self.age,
                    kind: EventKind::Child { slot: None },
                })
            }
            Reproduction::KeysThenSplit { m, ell } => {
                let total = (m - 1) * (ell + 1);
                if self.step >= total {
                    return None;
                }
                self.step += 1;
                self.age += exp(rng, (ell + self.step) as f64);
                let kind = if self.step == total {
                    EventKind::Split {
                        children: m,
                        dropped: m * ell,
                    }
                } else {
                    EventKind::Key
                };
                Some(LifeEvent { age: self.age, kind })
            }
            Reproduction::KeysThenSlots { m } => {
                if self.step + 2 >= m {
                    return None;
                }
                self.step += 1;
                self.age += exp(rng, (self.step + 1) as f64);
                if self.step + 2 == m {
                    self.fill_slots(m, 1.0, rng);
                }
                Some(LifeEvent {
                    age: self.age,
                    kind: EventKind::Key,
                })
            }
            Reproduction::Slots { .. } | Reproduction::UniformSplit => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChildBirth {
    pub age: f64,
    pub slot: Option<u32>,
}

/// A life history observed up to a horizon age.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LifeHistory {
    pub initial_keys: u32,
    /// Ages at which keys arrive (including the key that triggers a split).
    pub key_arrival_ages: Vec<f64>,
    /// Births in order of age; simultaneous births are ordered by slot.
    pub child_births: Vec<ChildBirth>,
    /// Age of the split and the number of keys handed to the children.
    pub split: Option<(f64, u32)>,
    pub horizon: f64,
}

impl LifeHistory {
    /// The weight `psi(t)`: keys held at age `t` (1 for node-counted families).
    pub fn psi(&self, t: f64) -> u32 {
        let arrived = self.key_arrival_ages.iter().take_while(|&&a| a <= t).count() as u32;
        let dropped = match self.split {
            Some((age, d)) if age <= t => d,
            _ => 0,
        };
        self.initial_keys + arrived - dropped
    }

    pub fn children_by(&self, t: f64) -> usize {
        self.child_births.iter().take_while(|c| c.age <= t).count()
    }

    /// `sum_i exp(-theta xi_i)` over the observed births.
    pub fn discounted_births(&self, theta: f64) -> f64 {
        self.child_births.iter().map(|c| (-theta * c.age).exp()).sum()
    }
}

/// One life history, with all events up to age `horizon`.
pub fn sample_life<R: Rng + ?Sized>(spec: &ModelSpec, horizon: f64, rng: &mut R) -> LifeHistory {
    let mut state = LifeState::new(spec, rng);
    let mut life = LifeHistory {
        initial_keys: spec.initial_keys(),
        key_arrival_ages: Vec::new(),
        child_births: Vec::new(),
        split: None,
        horizon,
    };
    while let Some(ev) = state.next(spec, rng) {
        if ev.age > horizon {
            break;
        }
        match ev.kind {
            EventKind::Key => life.key_arrival_ages.push(ev.age),
            EventKind::Child { slot } => life.child_births.push(ChildBirth { age: ev.age, slot }),
            EventKind::Split { children, dropped } => {
                life.key_arrival_ages.push(ev.age);
                life.split = Some((ev.age, dropped));
                life.child_births
                    .extend((1..=children).map(|j| ChildBirth { age: ev.age, slot: Some(j) }));
            }
        }
    }
    life
}
