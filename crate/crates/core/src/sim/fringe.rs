use rand::Rng;
use serde::Serialize;

use super::{grow_until, stats, Node, NodeId, SimTree};
use crate::dist::LawTable;
use crate::error::{Error, Result};
use crate::models::{exp, sample_ancestor_life, AncestorLifeHistory, ModelSpec};

/// A finite tree rooted at node 0 with one distinguished node.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MarkedTree {
    pub nodes: Vec<Node>,
    pub marked: NodeId,
}

impl MarkedTree {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id as usize]
    }

    pub fn root_degree(&self) -> usize {
        self.nodes[0].children.len()
    }

    pub fn key_total(&self) -> u64 {
        self.nodes.iter().map(|n| n.key_count as u64).sum()
    }

    /// Nodes satisfying `pred`.
    pub fn count(&self, pred: impl Fn(&Node) -> bool) -> usize {
        self.nodes.iter().filter(|n| pred(n)).count()
    }

    fn push(&mut self, parent: Option<NodeId>, slot: Option<u32>, time: f64, keys: u32) -> NodeId {
        let id = self.nodes.len() as NodeId;
        let depth = parent.map_or(0, |p| self.nodes[p as usize].depth + 1);
        self.nodes.push(Node {
            parent,
            children: Vec::new(),
            slot,
            birth_time: time,
            key_count: keys,
            depth,
        });
        if let Some(p) = parent {
            self.nodes[p as usize].children.push(id);
        }
        id
    }

    /// Copy the subtree of `src` rooted at `from` below `parent`, shifting birth times.
    fn graft(&mut self, parent: Option<NodeId>, slot: Option<u32>, src: &[Node], from: NodeId, shift: f64) -> NodeId {
        let v = &src[from as usize];
        let id = self.push(parent, slot, v.birth_time + shift, v.key_count);
        let mut stack: Vec<(NodeId, NodeId)> = v.children.iter().rev().map(|&c| (c, id)).collect();
        while let Some((c, p)) = stack.pop() {
            let w = &src[c as usize];
            let nid = self.push(Some(p), w.slot, w.birth_time + shift, w.key_count);
            stack.extend(w.children.iter().rev().map(|&g| (g, nid)));
        }
        id
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum ExtendedFringe {
    Tree(MarkedTree),
    /// The chosen node has fewer than `k` ancestors.
    TooShallow,
}

/// `T^{v,-k}` for a uniformly random node `v`.
pub fn sample_extended_fringe<R: Rng + ?Sized>(tree: &SimTree, k: u32, rng: &mut R) -> ExtendedFringe {
    let v = rng.random_range(0..tree.len()) as NodeId;
    extended_fringe_at(tree, v, k)
}

pub(crate) fn extended_fringe_at(tree: &SimTree, v: NodeId, k: u32) -> ExtendedFringe {
    let mut top = v;
    for _ in 0..k {
        match tree.node(top).parent {
            Some(p) => top = p,
            None => return ExtendedFringe::TooShallow,
        }
    }
    let mut out = MarkedTree {
        nodes: Vec::new(),
        marked: 0,
    };
    out.graft(None, None, &tree.nodes, top, 0.0);
    // Locate v by walking the same child positions down from the top.
    let mut path = Vec::new();
    let mut cur = v;
    while cur != top {
        let p = tree.node(cur).parent.unwrap();
        path.push(tree.node(p).children.iter().position(|&c| c == cur).unwrap());
        cur = p;
    }
    let mut id = 0;
    for &i in path.iter().rev() {
        id = out.node(id).children[i];
    }
    out.marked = id;
    ExtendedFringe::Tree(out)
}

/// The limit of `T^{v,-k}`: `k` heir-biased ancestors above a root `o`, every
/// branch grown until an independent `Exp(alpha)` time.
pub fn sample_sin_tree<R: Rng + ?Sized>(spec: &ModelSpec, k: u32, rng: &mut R) -> Result<MarkedTree> {
    let alpha = spec.alpha()?;
    let tau = exp(rng, alpha);
    let mut ancestors: Vec<AncestorLifeHistory> = Vec::with_capacity(k as usize);
    let mut extra = tau;
    for _ in 0..k {
        let a = sample_ancestor_life(spec, extra, rng)?;
        extra += a.heir_age();
        ancestors.push(a);
    }
    let mut out = MarkedTree {
        nodes: Vec::new(),
        marked: 0,
    };
    let top_birth = tau - extra;
    build_level(&mut out, spec, &ancestors, k as usize, None, None, top_birth, tau, rng)?;
    Ok(out)
}

/// `ancestors[j-1]` is `o^{-j}`; level 0 is `o` itself.
#[allow(clippy::too_many_arguments)]
fn build_level<R: Rng + ?Sized>(
    out: &mut MarkedTree,
    spec: &ModelSpec,
    ancestors: &[AncestorLifeHistory],
    level: usize,
    parent: Option<NodeId>,
    slot: Option<u32>,
    born: f64,
    tau: f64,
    rng: &mut R,
) -> Result<()> {
    if level == 0 {
        let sub = grow_until(spec, tau, rng)?;
        out.marked = out.graft(parent, slot, &sub.nodes, 0, 0.0);
        return Ok(());
    }
    let a = &ancestors[level - 1];
    let life = &a.life;
    let id = out.push(parent, slot, born, life.psi(life.horizon));
    for (i, c) in life.child_births.iter().enumerate() {
        let b = born + c.age;
        if i + 1 == a.heir_index {
            build_level(out, spec, ancestors, level - 1, Some(id), c.slot, b, tau, rng)?;
        } else {
            let sub = grow_until(spec, (tau - b).max(0.0), rng)?;
            out.graft(Some(id), c.slot, &sub.nodes, 0, b);
        }
    }
    Ok(())
}

/// Empirical law of fringe sizes (subtree keys for key-weighted families).
pub fn fringe_size_hist(tree: &SimTree) -> LawTable {
    let st = stats(tree, 0);
    if tree.key_weighted {
        LawTable::from_counts("fringe keys", &st.fringe_key_hist)
    } else {
        LawTable::from_counts("fringe size", &st.fringe_size_hist)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Restriction {
    /// A uniformly random node without children.
    Leaf,
    /// The node holding a uniformly random key.
    KeyOwner,
}

pub fn sample_restricted<R: Rng + ?Sized>(tree: &SimTree, which: Restriction, rng: &mut R) -> Result<NodeId> {
    match which {
        Restriction::Leaf => {
            let leaves: Vec<NodeId> = (0..tree.len() as NodeId)
                .filter(|&v| tree.node(v).children.is_empty())
                .collect();
            if leaves.is_empty() {
                return Err(Error::EmptySelection("tree has no leaf".into()));
            }
            Ok(leaves[rng.random_range(0..leaves.len())])
        }
        Restriction::KeyOwner => {
            let total = tree.key_total();
            if total == 0 {
                return Err(Error::EmptySelection("tree holds no key".into()));
            }
            let mut r = rng.random_range(0..total);
            for (id, v) in tree.nodes.iter().enumerate() {
                if r < v.key_count as u64 {
                    return Ok(id as NodeId);
                }
                r -= v.key_count as u64;
            }
            unreachable!()
        }
    }
}

/// Binary uniform fragmentation of a unit mass, keeping pieces heavier than
/// an independent uniform threshold.
pub fn grow_fragmentation_fringe<R: Rng + ?Sized>(rng: &mut R) -> Result<SimTree> {
    let spec = ModelSpec::new(crate::models::Family::FragBinaryUniform)?;
    let u: f64 = rng.random();
    grow_until(&spec, -u.ln(), rng)
}
