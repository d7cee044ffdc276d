//! Optimal aggregation on complete graphs via the trees T(R).

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::schedule::{Action, ActionKind, NetworkParams, Schedule};
use crate::sim::{Engine, Event};

/// `|T(R)|` for `R = 0..=r_max`, saturating at `u128::MAX`.
pub fn tree_sizes(r_max: usize, p: NetworkParams) -> Vec<u128> {
    let mut sizes: Vec<u128> = Vec::with_capacity(r_max + 1);
    for r in 0..=r_max {
        let s = if r < p.tc + p.tm { 1 } else { sizes[r - p.tc].saturating_add(sizes[r - p.tc - p.tm]) };
        sizes.push(s);
    }
    sizes
}

pub fn tree_size(r: usize, p: NetworkParams) -> u128 {
    tree_sizes(r, p)[r]
}

/// Smallest `R` with `|T(R)| >= n`.
pub fn r_star(n: usize, p: NetworkParams) -> usize {
    let mut sizes: Vec<u128> = Vec::new();
    for r in 0.. {
        let s = if r < p.tc + p.tm { 1 } else { sizes[r - p.tc].saturating_add(sizes[r - p.tc - p.tm]) };
        if s >= n as u128 {
            return r;
        }
        sizes.push(s);
    }
    unreachable!()
}

/// Rooted tree with root 0 and nodes numbered in preorder.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AggTree {
    pub parent: Vec<Option<usize>>,
    pub children: Vec<Vec<usize>>,
    pub rounds: usize,
    pub params: NetworkParams,
}

impl AggTree {
    pub fn size(&self) -> usize {
        self.parent.len()
    }

    pub fn root(&self) -> usize {
        0
    }

    pub fn depth(&self, mut x: usize) -> usize {
        let mut d = 0;
        while let Some(p) = self.parent[x] {
            x = p;
            d += 1;
        }
        d
    }

    /// One line per node: `node parent`, with `-` for the root.
    pub fn parent_text(&self) -> String {
        let mut s = format!("# T(R={}) t_c={} t_m={}\n{}\n", self.rounds, self.params.tc, self.params.tm, self.size());
        for (x, p) in self.parent.iter().enumerate() {
            match p {
                Some(p) => writeln!(s, "{x} {p}").unwrap(),
                None => writeln!(s, "{x} -").unwrap(),
            }
        }
        s
    }

    fn push(&mut self, parent: Option<usize>) -> usize {
        let x = self.parent.len();
        self.parent.push(parent);
        self.children.push(Vec::new());
        if let Some(p) = parent {
            self.children[p].push(x);
        }
        x
    }

    /// Keeps the nodes in `keep` (which must be closed under parents),
    /// renumbering in preorder.
    fn restrict(&self, keep: &[bool]) -> AggTree {
        let mut out = AggTree { parent: Vec::new(), children: Vec::new(), rounds: self.rounds, params: self.params };
        let mut stack = vec![(self.root(), None)];
        while let Some((x, p)) = stack.pop() {
            let y = out.push(p);
            for &c in self.children[x].iter().rev() {
                if keep[c] {
                    stack.push((c, Some(y)));
                }
            }
        }
        out
    }
}

/// Builds T(R): a leaf when `R < t_c + t_m`, otherwise T(R - t_c) with
/// T(R - t_c - t_m) attached as the root's last child.
pub fn build_tree(r: usize, p: NetworkParams) -> AggTree {
    fn grow(t: &mut AggTree, r: usize, parent: Option<usize>, p: NetworkParams) {
        let x = t.push(parent);
        // unrolled: children are T(r - k t_c - t_m) for k = K down to 1
        let mut ks = Vec::new();
        let mut k = 1;
        while r >= k * p.tc + p.tm {
            ks.push(r - k * p.tc - p.tm);
            k += 1;
        }
        for &cr in ks.iter().rev() {
            grow(t, cr, Some(x), p);
        }
    }
    let mut t = AggTree { parent: Vec::new(), children: Vec::new(), rounds: r, params: p };
    grow(&mut t, r, None, p);
    t
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeEmbedding {
    pub map: Vec<NodeId>,
}

impl TreeEmbedding {
    pub fn identity(size: usize) -> Self {
        TreeEmbedding { map: (0..size).collect() }
    }

    pub fn new(tree: &AggTree, map: Vec<NodeId>, g: &Graph) -> Result<Self> {
        if map.len() != tree.size() {
            return Err(Error::Precondition(format!("embedding covers {} of {} tree nodes", map.len(), tree.size())));
        }
        let distinct: BTreeSet<_> = map.iter().collect();
        if distinct.len() != map.len() || map.iter().any(|&v| v >= g.n()) {
            return Err(Error::Precondition("embedding must be injective into the graph".into()));
        }
        for (x, p) in tree.parent.iter().enumerate() {
            if let Some(p) = p {
                if !g.has_edge(map[x], map[*p]) {
                    return Err(Error::Precondition(format!("tree edge ({x},{p}) is not a graph edge")));
                }
            }
        }
        Ok(TreeEmbedding { map })
    }
}

/// Greedy aggregation on `tree`: a non-root node sends to its parent once it
/// is free, holds one token and has heard from all children; any free node
/// holding two or more tokens computes.
pub fn greedy_schedule(tree: &AggTree, emb: &TreeEmbedding, p: NetworkParams) -> Schedule {
    let n = emb.map.iter().max().map_or(0, |&m| m + 1);
    let edges = tree.parent.iter().enumerate().filter_map(|(x, q)| q.map(|q| (emb.map[x], emb.map[q])));
    let g = Graph::from_edges(n, edges).expect("embedded tree is a simple graph");
    let mut node_of = vec![usize::MAX; n];
    for (x, &v) in emb.map.iter().enumerate() {
        node_of[v] = x;
    }
    let mut init = crate::sim::TokenState { nodes: vec![Vec::new(); n] };
    for &v in &emb.map {
        init.nodes[v].push(crate::sim::Token::singleton(v));
    }
    let mut eng = Engine::with_state(&g, p, &init);
    let mut heard = vec![0usize; tree.size()];
    let mut sent = vec![false; tree.size()];
    let mut actions = Vec::new();
    let mut r = 1;
    while eng.total_tokens() > 1 || eng.has_pending() {
        eng.advance_to(r);
        for e in eng.take_events() {
            if let Event::Delivered { to, .. } = e {
                heard[node_of[to]] += 1;
            }
        }
        let mut started = false;
        for x in 0..tree.size() {
            let v = emb.map[x];
            if !eng.is_free(v) {
                continue;
            }
            let a = if eng.count(v) >= 2 {
                Action::compute(r, v)
            } else if let Some(q) = tree.parent[x].filter(|_| {
                eng.count(v) == 1 && !sent[x] && heard[x] == tree.children[x].len()
            }) {
                sent[x] = true;
                Action::send(r, v, emb.map[q])
            } else {
                continue;
            };
            eng.start(&a).expect("greedy rules respect validity");
            actions.push(a);
            started = true;
        }
        assert!(started || eng.has_pending() || eng.total_tokens() == 1, "greedy aggregation stalled");
        r += 1;
    }
    // a single-leaf T(R) with R > 0 simply idles for its R rounds
    Schedule::new(actions, eng.last_busy().max(tree.rounds))
}

/// T(R*(n)) pruned to exactly `n` nodes by deleting leaves with the latest
/// send round first, deepest first among ties.
pub fn optimal_tree(n: usize, p: NetworkParams) -> AggTree {
    let full = build_tree(r_star(n, p), p);
    if full.size() == n {
        return full;
    }
    let sched = greedy_schedule(&full, &TreeEmbedding::identity(full.size()), p);
    let mut send_round = vec![0; full.size()];
    for a in &sched.actions {
        if let ActionKind::Send { .. } = a.kind {
            send_round[a.node] = a.start;
        }
    }
    let mut keep = vec![true; full.size()];
    let mut live_children: Vec<usize> = full.children.iter().map(Vec::len).collect();
    let key = |x: usize| (send_round[x], full.depth(x), x);
    let mut leaves: BTreeSet<_> = (1..full.size()).filter(|&x| live_children[x] == 0).map(key).collect();
    let mut size = full.size();
    while size > n {
        let (_, _, x) = leaves.pop_last().expect("a non-root leaf exists while size > 1");
        keep[x] = false;
        size -= 1;
        let q = full.parent[x].unwrap();
        live_children[q] -= 1;
        if live_children[q] == 0 && q != full.root() {
            leaves.insert(key(q));
        }
    }
    full.restrict(&keep)
}

/// Optimal schedule on K_n with tree node `i` placed on graph node `i`.
pub fn opt_complete(n: usize, p: NetworkParams) -> Schedule {
    if n <= 1 {
        return Schedule::empty();
    }
    let t = optimal_tree(n, p);
    greedy_schedule(&t, &TreeEmbedding::identity(n), p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Baselines {
    pub naive_binary: usize,
    pub pipelined_binary: usize,
    pub optimal: usize,
    pub compute_lb: usize,
}

pub fn baseline_lengths(n: usize, p: NetworkParams) -> Baselines {
    let lg = (n as f64).log2();
    let (tc, tm) = (p.tc as f64, p.tm as f64);
    let up = |x: f64| x.ceil() as usize;
    Baselines {
        naive_binary: up(lg * (tc + tm) + lg * tc),
        pipelined_binary: up(2.0 * tc * lg + tm * lg),
        optimal: r_star(n, p),
        compute_lb: up(tc * lg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::validate::validate_schedule;

    fn p(tc: usize, tm: usize) -> NetworkParams {
        NetworkParams::new(tc, tm).unwrap()
    }

    #[test]
    fn size_examples() {
        assert_eq!(build_tree(1, p(1, 1)).size(), 1);
        assert_eq!(build_tree(16, p(2, 1)).size(), 65);
        assert_eq!(build_tree(5, p(1, 1)).size(), 8);
        let fib: Vec<u128> = tree_sizes(6, p(1, 1));
        assert_eq!(fib, vec![1, 1, 2, 3, 5, 8, 13]);
    }

    #[test]
    fn r_star_examples() {
        assert_eq!(r_star(1, p(1, 1)), 0);
        assert_eq!(r_star(7, p(1, 1)), 5);
        assert_eq!(r_star(65, p(2, 1)), 16);
        assert_eq!(r_star(16, p(2, 1)), 11);
    }

    #[test]
    fn small_greedy_schedules() {
        let t = build_tree(2, p(1, 1));
        let s = greedy_schedule(&t, &TreeEmbedding::identity(2), p(1, 1));
        assert_eq!(s.to_text(), "TCSCHED 1\nlength 2\n1 1 SEND 0\n2 0 COMPUTE\n");
        let t = build_tree(3, p(1, 1));
        let s = greedy_schedule(&t, &TreeEmbedding::identity(3), p(1, 1));
        assert_eq!(s.to_text(), "TCSCHED 1\nlength 3\n1 1 SEND 0\n1 2 SEND 0\n2 0 COMPUTE\n3 0 COMPUTE\n");
    }

    #[test]
    fn joined_subtree_is_last_child() {
        let t = build_tree(4, p(1, 1));
        // T(4) = T(3) + T(2); T(3) = T(2) + T(1)
        assert_eq!(t.children[0].len(), 3);
        let last = *t.children[0].last().unwrap();
        assert_eq!(t.children[last].len(), 1);
    }

    #[test]
    fn opt_complete_examples() {
        for (tc, tm) in [(1, 1), (2, 1), (1, 3)] {
            assert_eq!(opt_complete(2, p(tc, tm)).length, tc + tm);
        }
        assert_eq!(opt_complete(3, p(1, 1)).length, 3);
        assert_eq!(opt_complete(7, p(1, 1)).length, 5);
        assert_eq!(opt_complete(1, p(1, 1)), Schedule::empty());
        for n in 2..60 {
            for q in [p(1, 1), p(2, 1), p(1, 2), p(3, 2)] {
                let s = opt_complete(n, q);
                assert_eq!(s.length, r_star(n, q), "n={n} {q:?}");
                assert!(validate_schedule(&Graph::complete(n), q, &s).unwrap().valid);
            }
        }
    }

    #[test]
    fn baselines() {
        assert_eq!(
            baseline_lengths(1, p(1, 1)),
            Baselines { naive_binary: 0, pipelined_binary: 0, optimal: 0, compute_lb: 0 }
        );
        let b = baseline_lengths(16, p(2, 1));
        assert_eq!((b.pipelined_binary, b.optimal), (20, 11));
        let b = baseline_lengths(1024, p(1, 1));
        assert_eq!((b.pipelined_binary, b.compute_lb), (30, 10));
    }
}
