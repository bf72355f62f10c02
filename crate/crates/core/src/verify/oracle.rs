//! Exact finite-n laws by inserting every permutation of `n` keys.

use std::collections::BTreeMap;

use itertools::Itertools;
use serde::Serialize;

use crate::dist::LawTable;
use crate::error::{Error, Result};
use crate::exact::{factorial, Rational};
use crate::models::{Family, ModelSpec};
use crate::sim::{stats, NodeId, SimTree};

/// Largest `n` the enumeration accepts (`n!` insertion orders).
pub const ORACLE_MAX_N: usize = 9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum OracleStatistic {
    Leaves,
    Protected(u32),
    /// `(leaves, 2-protected nodes)` packed by [`joint_code`].
    LeavesAndProtected2,
}

/// Packs `(leaves, protected)` for a tree with at most `n` nodes.
pub fn joint_code(n: usize, leaves: u64, protected: u64) -> i64 {
    (leaves * (n as u64 + 1) + protected) as i64
}

pub fn joint_decode(n: usize, code: i64) -> (u64, u64) {
    let b = n as u64 + 1;
    (code as u64 / b, code as u64 % b)
}

/// The search tree built by inserting `keys` in order into an m-ary search tree.
pub fn search_tree(m: u32, keys: &[usize]) -> SimTree {
    let spec = ModelSpec::new(if m == 2 { Family::Bst } else { Family::Mst(m) }).expect("valid arity");
    let mut tree = SimTree::empty(&spec);
    let m = m as usize;
    let mut held: Vec<Vec<usize>> = Vec::new();
    let mut slots: Vec<Vec<Option<NodeId>>> = Vec::new();
    for &key in keys {
        if tree.is_empty() {
            tree.push_node(None, None, 0.0, 0);
            held.push(Vec::new());
            slots.push(vec![None; m]);
        }
        let mut v = 0usize;
        loop {
            if held[v].len() < m - 1 {
                let pos = held[v].partition_point(|&k| k < key);
                held[v].insert(pos, key);
                break;
            }
            let slot = held[v].partition_point(|&k| k < key);
            match slots[v][slot] {
                Some(c) => v = c as usize,
                None => {
                    let c = tree.push_node(Some(v as NodeId), Some(slot as u32 + 1), 0.0, 0);
                    slots[v][slot] = Some(c);
                    held.push(vec![key]);
                    slots.push(vec![None; m]);
                    break;
                }
            }
        }
    }
    for (node, keys) in tree.nodes.iter_mut().zip(&held) {
        node.key_count = keys.len() as u32;
    }
    tree.total_weight = keys.len() as u64;
    tree
}

fn statistic_of(tree: &SimTree, n: usize, stat: OracleStatistic) -> i64 {
    let st = stats(tree, 2);
    match stat {
        OracleStatistic::Leaves => st.leaf_count() as i64,
        OracleStatistic::Protected(k) => stats(tree, k as usize).protected_count(k as usize) as i64,
        OracleStatistic::LeavesAndProtected2 => joint_code(n, st.leaf_count(), st.protected_count(2)),
    }
}

/// Exact law of a statistic of the search tree with `n` uniformly permuted keys.
pub fn exact_oracle(spec: &ModelSpec, n: usize, stat: OracleStatistic) -> Result<LawTable> {
    let m = match spec.family() {
        Family::Bst => 2,
        Family::Mst(m) => *m,
        _ => return Err(Error::Unsupported(format!("no permutation oracle for {spec}"))),
    };
    if n == 0 || n > ORACLE_MAX_N {
        return Err(Error::BlowUp(format!("oracle needs 1 <= n <= {ORACLE_MAX_N}, got {n}")));
    }
    let mut counts: BTreeMap<i64, u64> = BTreeMap::new();
    for perm in (0..n).permutations(n) {
        *counts.entry(statistic_of(&search_tree(m, &perm), n, stat)).or_insert(0) += 1;
    }
    let total = Rational::from_integer(factorial(n as u64));
    let entries = counts
        .into_iter()
        .map(|(k, c)| (k, Rational::from_integer(c.into()) / &total))
        .collect();
    Ok(LawTable::exact(format!("{stat:?} ({spec}, n={n})"), entries))
}

/// The same statistic of one tree, for comparing simulations with the oracle.
pub fn observe(tree: &SimTree, n: usize, stat: OracleStatistic) -> i64 {
    statistic_of(tree, n, stat)
}
