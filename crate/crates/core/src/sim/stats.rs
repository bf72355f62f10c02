use serde::Serialize;

use super::SimTree;

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct TreeStats {
    pub node_count: u64,
    /// `degree_hist[d]` nodes with outdegree `d`.
    pub degree_hist: Vec<u64>,
    /// `fringe_size_hist[s]` nodes whose subtree has `s` nodes.
    pub fringe_size_hist: Vec<u64>,
    /// `fringe_key_hist[s]` nodes whose subtree holds `s` keys.
    pub fringe_key_hist: Vec<u64>,
    pub key_count_hist: Vec<u64>,
    /// `rank_hist[r]` nodes of rank exactly `r`, for `r <= rank_max`.
    pub rank_hist: Vec<u64>,
    /// Nodes of rank above `rank_max`.
    pub rank_overflow: u64,
    pub height: u32,
    /// Last generation holding all `m^k` possible nodes (m-ary families).
    pub saturation_level: Option<u32>,
    /// Nodes at each depth.
    pub profile: Vec<u64>,
    pub total_path_length: u64,
    /// Nodes with fewer than `m` children (m-ary families).
    pub clade_count: Option<u64>,
    /// Clades with no clade among their proper ancestors.
    pub maximal_clade_count: Option<u64>,
    /// Nodes with no proper ancestor of outdegree 1.
    pub unblemished_count: u64,
}

impl TreeStats {
    /// Nodes of rank at least `k`, i.e. `k`-protected nodes.
    pub fn protected_count(&self, k: usize) -> u64 {
        self.rank_hist.iter().skip(k).sum::<u64>() + self.rank_overflow
    }

    pub fn leaf_count(&self) -> u64 {
        self.degree_hist.first().copied().unwrap_or(0)
    }
}

fn bump(hist: &mut Vec<u64>, i: usize) {
    if hist.len() <= i {
        hist.resize(i + 1, 0);
    }
    hist[i] += 1;
}

/// All statistics of a tree in one bottom-up and one top-down pass.
pub fn stats(tree: &SimTree, rank_max: usize) -> TreeStats {
    let n = tree.len();
    let mut size = vec![1u64; n];
    let mut keys: Vec<u64> = tree.nodes.iter().map(|v| v.key_count as u64).collect();
    let mut rank = vec![0u32; n];
    // Children always have larger ids than their parent.
    for id in (1..n).rev() {
        let p = tree.nodes[id].parent.expect("non-root node without parent") as usize;
        size[p] += size[id];
        keys[p] += keys[id];
    }
    for id in (0..n).rev() {
        let ch = &tree.nodes[id].children;
        if !ch.is_empty() {
            rank[id] = 1 + ch.iter().map(|&c| rank[c as usize]).min().unwrap();
        }
    }
    let mut st = TreeStats {
        node_count: n as u64,
        rank_hist: vec![0; rank_max + 1],
        ..Default::default()
    };
    let m = tree.arity;
    let is_clade = |id: usize| m.is_some_and(|m| (tree.nodes[id].children.len() as u32) < m);
    let mut clade_above = vec![false; n];
    let mut unary_above = vec![false; n];
    let (mut clades, mut maximal) = (0u64, 0u64);
    for id in 0..n {
        let v = &tree.nodes[id];
        if let Some(p) = v.parent {
            let p = p as usize;
            clade_above[id] = clade_above[p] || is_clade(p);
            unary_above[id] = unary_above[p] || tree.nodes[p].children.len() == 1;
        }
        bump(&mut st.degree_hist, v.children.len());
        bump(&mut st.fringe_size_hist, size[id] as usize);
        if tree.key_weighted {
            bump(&mut st.fringe_key_hist, keys[id] as usize);
        }
        bump(&mut st.key_count_hist, v.key_count as usize);
        match st.rank_hist.get_mut(rank[id] as usize) {
            Some(c) => *c += 1,
            None => st.rank_overflow += 1,
        }
        bump(&mut st.profile, v.depth as usize);
        st.total_path_length += v.depth as u64;
        st.height = st.height.max(v.depth);
        if is_clade(id) {
            clades += 1;
            if !clade_above[id] {
                maximal += 1;
            }
        }
        if !unary_above[id] {
            st.unblemished_count += 1;
        }
    }
    if let Some(m) = m {
        st.clade_count = Some(clades);
        st.maximal_clade_count = Some(maximal);
        let mut full = 1u64;
        let mut level = 0u32;
        for (k, &c) in st.profile.iter().enumerate().skip(1) {
            full = full.saturating_mul(m as u64);
            if c == full {
                level = k as u32;
            } else {
                break;
            }
        }
        st.saturation_level = Some(level);
    }
    st
}
