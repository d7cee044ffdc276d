//! Turning owner paths into directed source-to-sink paths.

use std::collections::BTreeMap;

use super::lp::remove_loops;
use crate::graph::NodeId;
use crate::paths::DirectedPathSet;

/// Each input path runs from its owner (first vertex) to another `W` vertex,
/// giving a digraph on `W` where every owner has out-degree one. A vertex
/// with two or more in-neighbors pairs them off (dropping the highest one if
/// the count is odd) and each pair `(w1, w2)` becomes `P_w1` followed by
/// `P_w2` reversed; the vertex and the pair leave the digraph. What remains
/// is a union of paths and cycles, from which every other arc is taken.
pub fn assign_paths(paths: &[Vec<NodeId>], w: &[NodeId]) -> DirectedPathSet {
    let mut owned: BTreeMap<NodeId, &Vec<NodeId>> = BTreeMap::new();
    for p in paths {
        if p.len() >= 2 && p[0] != *p.last().unwrap() {
            owned.entry(p[0]).or_insert(p);
        }
    }
    let mut alive: BTreeMap<NodeId, bool> = w.iter().map(|&v| (v, true)).collect();
    for p in owned.values() {
        alive.insert(*p.last().unwrap(), true);
    }
    let target = |v: NodeId| owned.get(&v).map(|p| *p.last().unwrap());
    let mut out = Vec::new();

    let vertices: Vec<NodeId> = alive.keys().copied().collect();
    for &x in &vertices {
        if !alive[&x] {
            continue;
        }
        let mut ins: Vec<NodeId> =
            owned.keys().copied().filter(|&u| alive[&u] && u != x && target(u) == Some(x)).collect();
        if ins.len() < 2 {
            continue;
        }
        if ins.len() % 2 == 1 {
            let dropped = ins.pop().unwrap();
            alive.insert(dropped, false);
        }
        for pair in ins.chunks(2) {
            let (a, b) = (pair[0], pair[1]);
            let mut path = owned[&a].clone();
            path.extend(owned[&b].iter().rev().skip(1));
            out.push(remove_loops(&path));
            alive.insert(a, false);
            alive.insert(b, false);
        }
        alive.insert(x, false);
    }

    // remaining digraph has in- and out-degree at most one
    let succ = |v: NodeId, alive: &BTreeMap<NodeId, bool>| target(v).filter(|t| alive[t]);
    let mut has_pred: BTreeMap<NodeId, bool> = BTreeMap::new();
    for (&v, &a) in &alive {
        if a {
            if let Some(t) = succ(v, &alive) {
                has_pred.insert(t, true);
            }
        }
    }
    let mut seen: BTreeMap<NodeId, bool> = BTreeMap::new();
    let starts: Vec<NodeId> = alive.iter().filter(|&(_, &a)| a).map(|(&v, _)| v).collect();
    // chains first (from vertices without a predecessor), then cycles
    for pass in 0..2 {
        for &s in &starts {
            if seen.contains_key(&s) || (pass == 0 && has_pred.contains_key(&s)) {
                continue;
            }
            let mut chain = vec![s];
            seen.insert(s, true);
            let mut cur = s;
            let mut cyclic = false;
            while let Some(t) = succ(cur, &alive) {
                if t == s {
                    cyclic = true;
                    break;
                }
                chain.push(t);
                seen.insert(t, true);
                cur = t;
            }
            let arcs = if cyclic { chain.len() } else { chain.len() - 1 };
            let mut i = 0;
            while i < arcs {
                // an odd cycle's last arc would reuse the first source
                if cyclic && i == arcs - 1 && arcs % 2 == 1 {
                    break;
                }
                out.push(owned[&chain[i]].clone());
                i += 2;
            }
        }
    }
    out.sort();
    DirectedPathSet::new(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;

    #[test]
    fn two_cycle() {
        let dp = assign_paths(&[vec![1, 0], vec![0, 1]], &[0, 1]);
        assert_eq!(dp.paths, vec![vec![0, 1]]);
    }

    #[test]
    fn hub_with_three_in_neighbors() {
        // star with hub 0; leaves 1,2,3 all send to W-vertex 4 through 0
        let paths = vec![vec![1, 0, 4], vec![2, 0, 4], vec![3, 0, 4]];
        let dp = assign_paths(&paths, &[1, 2, 3, 4]);
        assert_eq!(dp.len(), 1);
        assert_eq!(dp.paths[0], vec![1, 0, 2]);
    }

    #[test]
    fn odd_cycle_and_chain() {
        let cyc = vec![vec![0, 1], vec![1, 2], vec![2, 0]];
        let dp = assign_paths(&cyc, &[0, 1, 2]);
        assert_eq!(dp.paths, vec![vec![0, 1]]);
        let chain = vec![vec![0, 1], vec![1, 2], vec![2, 3]];
        let dp = assign_paths(&chain, &[0, 1, 2, 3]);
        assert_eq!(dp.paths, vec![vec![0, 1], vec![2, 3]]);
        let g = Graph::path(4);
        dp.check(&g, &[0, 1, 2, 3], true, true).unwrap();
    }
}
