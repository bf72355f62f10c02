//! Flat tree dumps: a header line, then `id parent slot birth_time key_count`
//! per node, with `-` for a missing parent or slot.

use std::io::{BufRead, Write};

use super::SimTree;
use crate::error::{Error, Result};
use crate::models::ModelSpec;

pub fn write_dump<W: Write>(tree: &SimTree, spec: &ModelSpec, seed: u64, out: &mut W) -> std::io::Result<()> {
    writeln!(out, "# model={spec} seed={seed} stop_time={} weight={}", tree.stop_time, tree.total_weight)?;
    for (id, n) in tree.nodes.iter().enumerate() {
        let parent = n.parent.map_or("-".to_string(), |p| p.to_string());
        let slot = n.slot.map_or("-".to_string(), |s| s.to_string());
        writeln!(out, "{id} {parent} {slot} {} {}", n.birth_time, n.key_count)?;
    }
    Ok(())
}

/// Parse a dump back into the model and the tree.
pub fn read_dump<R: BufRead>(input: R) -> Result<(ModelSpec, u64, SimTree)> {
    let bad = |line: usize, why: &str| Error::Parse(format!("dump line {line}: {why}"));
    let mut lines = input.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| bad(1, "empty dump"))?;
    let header = header.map_err(|e| bad(1, &e.to_string()))?;
    let field = |key: &str| {
        header
            .split_whitespace()
            .find_map(|t| t.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
            .map(str::to_string)
            .ok_or_else(|| bad(1, &format!("missing {key}")))
    };
    let spec = ModelSpec::parse(&field("model")?)?;
    let seed = field("seed")?.parse().map_err(|_| bad(1, "bad seed"))?;
    let mut tree = SimTree::empty(&spec);
    tree.stop_time = field("stop_time")?.parse().map_err(|_| bad(1, "bad stop_time"))?;
    for (i, line) in lines {
        let line = line.map_err(|e| bad(i + 1, &e.to_string()))?;
        let t: Vec<&str> = line.split_whitespace().collect();
        if t.len() != 5 {
            return Err(bad(i + 1, "expected 5 fields"));
        }
        let opt = |s: &str| -> Result<Option<u32>> {
            if s == "-" {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|_| bad(i + 1, "bad integer"))
            }
        };
        let id: usize = t[0].parse().map_err(|_| bad(i + 1, "bad id"))?;
        if id != tree.len() {
            return Err(bad(i + 1, "ids must be consecutive"));
        }
        let parent = opt(t[1])?;
        if parent.is_some_and(|p| p as usize >= id) {
            return Err(bad(i + 1, "parent must precede child"));
        }
        let time = t[3].parse().map_err(|_| bad(i + 1, "bad time"))?;
        let keys = t[4].parse().map_err(|_| bad(i + 1, "bad key count"))?;
        tree.push_node(parent, opt(t[2])?, time, keys);
    }
    tree.total_weight = if tree.key_weighted { tree.key_total() } else { tree.len() as u64 };
    Ok((spec, seed, tree))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{grow, replication_rng, StopRule};

    #[test]
    fn round_trip() {
        let spec = ModelSpec::parse("mst:3").unwrap();
        let tree = grow(&spec, StopRule::WeightAtLeast(300), &mut replication_rng(3, 0)).unwrap();
        let mut buf = Vec::new();
        write_dump(&tree, &spec, 3, &mut buf).unwrap();
        let (s, seed, back) = read_dump(buf.as_slice()).unwrap();
        assert_eq!(s.label(), "mst:3");
        assert_eq!(seed, 3);
        assert_eq!(back, tree);
    }
}
