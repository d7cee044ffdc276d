//! Exhaustive optimum search for tiny instances.
//!
//! A search state records, per node, how many tokens it holds, how many more
//! rounds it stays busy and when in-flight tokens reach it. Token contents do
//! not matter for feasibility, so states of twin nodes (same neighborhood
//! apart from each other) can be sorted into a canonical form.

use std::collections::{HashMap, HashSet};

use log::warn;

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::optcomplete::tree_size;
use crate::paths::DirectedPathSet;
use crate::schedule::{Action, NetworkParams, Schedule};
use crate::sim::{self, Event};
use crate::validate::{ceil_log2, lower_bounds, trivial_upper_bound, validate_schedule};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BruteConfig {
    pub max_nodes: usize,
    pub max_cost: usize,
    /// Give up after this many expanded states.
    pub max_expansions: u64,
}

impl Default for BruteConfig {
    fn default() -> Self {
        BruteConfig { max_nodes: 5, max_cost: 3, max_expansions: 20_000_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleResult {
    pub opt_length: usize,
    pub schedule: Schedule,
    /// Largest number of hops any singleton travels in `schedule`.
    pub max_singleton_distance: usize,
}

// Node descriptor layout: bits 0..8 token count, 8..16 busy rounds left,
// then one byte per arrival slot j = 1..=MAX_SLOTS. Bit 127 marks a node
// whose action for the current round is still undecided.
const MAX_SLOTS: usize = 13;
const UNDECIDED: u128 = 1 << 127;

fn count(d: u128) -> usize {
    (d & 0xff) as usize
}

fn busy(d: u128) -> usize {
    ((d >> 8) & 0xff) as usize
}

fn incoming(d: u128) -> u128 {
    (d >> 16) & ((1u128 << (8 * MAX_SLOTS)) - 1)
}

fn slot_bit(j: usize) -> u128 {
    1u128 << (16 + 8 * (j - 1))
}

/// Latest arrival slot, 0 if nothing is in flight.
fn last_slot(d: u128) -> usize {
    let inc = incoming(d);
    if inc == 0 {
        0
    } else {
        (128 - inc.leading_zeros() as usize).div_ceil(8)
    }
}

fn in_flight(d: u128) -> usize {
    let mut inc = incoming(d);
    let mut total = 0;
    while inc != 0 {
        total += (inc & 0xff) as usize;
        inc >>= 8;
    }
    total
}

fn advance(d: u128) -> u128 {
    let inc = incoming(d);
    let c = count(d) as u128 + (inc & 0xff);
    let b = busy(d).saturating_sub(1) as u128;
    c | (b << 8) | ((inc >> 8) << 16)
}

#[derive(Clone, Copy)]
enum Choice {
    Compute,
    Send(NodeId),
}

/// Classes of nodes `u, v` with `N(u) - v = N(v) - u`.
fn twin_classes(g: &Graph) -> Vec<Vec<NodeId>> {
    let twins = |u: NodeId, v: NodeId| {
        let a: Vec<_> = g.neighbors(u).iter().filter(|&&x| x != v).collect();
        let b: Vec<_> = g.neighbors(v).iter().filter(|&&x| x != u).collect();
        a == b
    };
    let mut class_of = vec![usize::MAX; g.n()];
    let mut classes: Vec<Vec<NodeId>> = Vec::new();
    for u in 0..g.n() {
        if class_of[u] != usize::MAX {
            continue;
        }
        let mut c = vec![u];
        for v in u + 1..g.n() {
            if class_of[v] == usize::MAX && c.iter().all(|&x| twins(x, v)) {
                c.push(v);
            }
        }
        for &v in &c {
            class_of[v] = classes.len();
        }
        classes.push(c);
    }
    classes
}

struct Search<'a> {
    g: &'a Graph,
    p: NetworkParams,
    classes: Vec<Vec<NodeId>>,
    /// canonical state -> largest number of remaining rounds proven too few
    failed: HashMap<Vec<u128>, usize>,
    expansions: u64,
    max_expansions: u64,
}

impl<'a> Search<'a> {
    fn canon(&self, st: &[u128]) -> Vec<u128> {
        let mut key = Vec::with_capacity(st.len());
        for c in &self.classes {
            let start = key.len();
            key.extend(c.iter().map(|&v| st[v]));
            key[start..].sort_unstable();
        }
        key
    }

    fn lower_bound(&self, st: &[u128]) -> usize {
        let p = self.p;
        let tokens: usize = st.iter().map(|&d| count(d) + in_flight(d)).sum();
        let mut lb = st.iter().map(|&d| busy(d).max(last_slot(d))).max().unwrap_or(0);
        if tokens >= 2 {
            lb = lb.max(p.tc * ceil_log2(tokens));
            // every location other than the terminus must ship its tokens out
            let mut first = 0;
            let mut second = 0;
            let mut first_node = usize::MAX;
            for (v, &d) in st.iter().enumerate() {
                if count(d) + in_flight(d) == 0 {
                    continue;
                }
                let need = busy(d).max(last_slot(d)) + p.tm + p.tc;
                if need > first {
                    second = first;
                    first = need;
                    first_node = v;
                } else if need > second {
                    second = need;
                }
            }
            let mut best = usize::MAX;
            for (v, &d) in st.iter().enumerate() {
                let others = if v == first_node { second } else { first };
                let own = if last_slot(d) > 0 { last_slot(d) + p.tc } else { 0 };
                best = best.min(others.max(own));
            }
            lb = lb.max(best);
        }
        lb
    }

    fn done(st: &[u128]) -> bool {
        st.iter().all(|&d| busy(d) == 0 && incoming(d) == 0) && st.iter().map(|&d| count(d)).sum::<usize>() == 1
    }

    /// Successor states for one round, deduplicated up to twin symmetry.
    fn successors(&self, st: &[u128]) -> Vec<(Vec<u128>, Vec<(NodeId, Choice)>)> {
        let p = self.p;
        let deciders: Vec<NodeId> = (0..st.len()).filter(|&v| busy(st[v]) == 0 && count(st[v]) >= 1).collect();
        let mut start = st.to_vec();
        for &v in &deciders {
            start[v] |= UNDECIDED;
        }
        let mut partial = vec![(start, Vec::new())];
        for &v in &deciders {
            let mut next = Vec::new();
            let mut seen = HashSet::new();
            for (s, acts) in &partial {
                let mut push = |s2: Vec<u128>, a: Option<Choice>| {
                    if seen.insert(self.canon(&s2)) {
                        let mut acts2: Vec<(NodeId, Choice)> = acts.clone();
                        if let Some(a) = a {
                            acts2.push((v, a));
                        }
                        next.push((s2, acts2));
                    }
                };
                let base = s[v] & !UNDECIDED;
                let mut idle = s.clone();
                idle[v] = base;
                push(idle, None);
                let left = (base & !0xffff) | (count(base) as u128 - 1);
                if count(base) >= 2 {
                    let mut s2 = s.clone();
                    s2[v] = left | ((p.tc as u128) << 8);
                    push(s2, Some(Choice::Compute));
                }
                for &u in self.g.neighbors(v) {
                    let mut s2 = s.clone();
                    s2[v] = left | ((p.tm as u128) << 8);
                    s2[u] += slot_bit(p.tm);
                    push(s2, Some(Choice::Send(u)));
                }
            }
            partial = next;
        }
        let here = self.canon(st);
        let mut out = Vec::new();
        let mut seen = HashSet::new();
        for (s, acts) in partial {
            let s2: Vec<u128> = s.iter().map(|&d| advance(d)).collect();
            let key = self.canon(&s2);
            if key != here && seen.insert(key) {
                out.push((s2, acts));
            }
        }
        out
    }

    /// Depth-first search for a completion within `remaining` rounds starting
    /// at `round`; fills `plan` on success.
    fn dfs(&mut self, st: &[u128], round: usize, remaining: usize, plan: &mut Vec<Action>) -> Result<bool> {
        if Self::done(st) {
            return Ok(true);
        }
        if remaining == 0 || self.lower_bound(st) > remaining {
            return Ok(false);
        }
        let key = self.canon(st);
        if self.failed.get(&key).is_some_and(|&r| r >= remaining) {
            return Ok(false);
        }
        self.expansions += 1;
        if self.expansions > self.max_expansions {
            return Err(Error::TooLarge(format!("search exceeded {} expansions", self.max_expansions)));
        }
        for (child, acts) in self.successors(st) {
            let mark = plan.len();
            plan.extend(acts.iter().map(|&(v, c)| match c {
                Choice::Compute => Action::compute(round, v),
                Choice::Send(u) => Action::send(round, v, u),
            }));
            if self.dfs(&child, round + 1, remaining - 1, plan)? {
                return Ok(true);
            }
            plan.truncate(mark);
        }
        let e = self.failed.entry(key).or_insert(0);
        *e = (*e).max(remaining);
        Ok(false)
    }
}

fn check_guard(g: &Graph, p: NetworkParams, cfg: &BruteConfig) -> Result<()> {
    if g.n() > cfg.max_nodes || g.n() > 255 {
        return Err(Error::TooLarge(format!("{} nodes exceeds the limit of {}", g.n(), cfg.max_nodes)));
    }
    if p.tc > cfg.max_cost || p.tm > cfg.max_cost || p.tm > MAX_SLOTS || p.tc > 255 {
        return Err(Error::TooLarge(format!("costs ({},{}) exceed the limit of {}", p.tc, p.tm, cfg.max_cost)));
    }
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    Ok(())
}

/// Minimum-length schedule, searched by iterative deepening up to `limit`
/// (default: the trivial upper bound) under the default guard.
pub fn brute_opt(g: &Graph, p: NetworkParams, limit: Option<usize>) -> Result<OracleResult> {
    brute_opt_with(g, p, limit, &BruteConfig::default())
}

pub fn brute_opt_with(g: &Graph, p: NetworkParams, limit: Option<usize>, cfg: &BruteConfig) -> Result<OracleResult> {
    check_guard(g, p, cfg)?;
    let ub = trivial_upper_bound(g, p)?;
    let limit = limit.unwrap_or(ub);
    let st: Vec<u128> = vec![1; g.n()];
    let mut search = Search {
        g,
        p,
        classes: twin_classes(g),
        failed: HashMap::new(),
        expansions: 0,
        max_expansions: cfg.max_expansions,
    };
    let lb = lower_bounds(g, p)?.combined_lb;
    for len in lb..=limit {
        let mut plan = Vec::new();
        if search.dfs(&st, 1, len, &mut plan)? {
            let schedule = Schedule::new(plan, len);
            let report = validate_schedule(g, p, &schedule)?;
            if !report.valid {
                return Err(Error::Internal(format!("oracle schedule invalid: {:?}", report.violation)));
            }
            let max_singleton_distance = max_singleton_distance(g, p, &schedule)?;
            return Ok(OracleResult { opt_length: len, schedule, max_singleton_distance });
        }
    }
    Err(Error::NoScheduleWithinLimit(limit))
}

/// Largest number of SENDs any singleton is carried through.
pub fn max_singleton_distance(g: &Graph, p: NetworkParams, s: &Schedule) -> Result<usize> {
    let mut hops = vec![0; g.n()];
    for e in sim::events(g, p, s)? {
        if let Event::Delivered { token, .. } = e {
            for &v in token.members() {
                hops[v] += 1;
            }
        }
    }
    Ok(hops.into_iter().max().unwrap_or(0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NStarEntry {
    pub rounds: usize,
    pub n_star: usize,
    pub tree_size: u128,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NStarTable {
    pub entries: Vec<NStarEntry>,
    /// Set when the table stops before `R_max` because the next check would
    /// need a complete graph beyond the guard.
    pub truncated: bool,
}

/// `N*(R)`, the largest `n` whose complete graph aggregates within `R`
/// rounds, for `R = 0..=r_max`. Errors if an entry differs from `|T(R)|`.
pub fn n_star_table(r_max: usize, p: NetworkParams, cfg: &BruteConfig) -> Result<NStarTable> {
    let mut entries = Vec::new();
    let mut n = 1;
    for r in 0..=r_max {
        loop {
            if n + 1 > cfg.max_nodes {
                warn!("N*({r}) needs K_{} which exceeds the search guard; table truncated", n + 1);
                return Ok(NStarTable { entries, truncated: true });
            }
            match brute_opt_with(&Graph::complete(n + 1), p, Some(r), cfg) {
                Ok(_) => n += 1,
                Err(Error::NoScheduleWithinLimit(_)) => break,
                Err(Error::TooLarge(msg)) => {
                    warn!("N*({r}) search refused ({msg}); table truncated");
                    return Ok(NStarTable { entries, truncated: true });
                }
                Err(e) => return Err(e),
            }
        }
        let size = tree_size(r, p);
        if size != n as u128 {
            return Err(Error::Internal(format!("N*({r}) = {n} but |T({r})| = {size}")));
        }
        entries.push(NStarEntry { rounds: r, n_star: n, tree_size: size });
    }
    Ok(NStarTable { entries, truncated: false })
}

/// Pairs the `W` vertices by their first active-active merge in `s` and
/// returns one path per vertex: its own token's route to the merge vertex,
/// then its partner's route reversed.
///
/// A token is active when it holds an odd number of `W` singletons; every
/// active token carries exactly one unpaired ("pending") singleton.
pub fn extract_opt_paths(g: &Graph, p: NetworkParams, s: &Schedule, w: &[NodeId]) -> Result<DirectedPathSet> {
    let report = validate_schedule(g, p, s)?;
    if !report.valid {
        return Err(Error::Invalid(report.violation.unwrap()));
    }
    let mut w: Vec<NodeId> = w.to_vec();
    w.sort_unstable();
    w.dedup();
    if w.iter().any(|&v| v >= g.n()) {
        return Err(Error::Precondition("W contains an unknown node".into()));
    }
    if w.len() % 2 == 1 {
        w.pop();
    }
    let mut in_w = vec![false; g.n()];
    let mut pending = vec![false; g.n()];
    let mut trace: Vec<Vec<NodeId>> = (0..g.n()).map(|v| vec![v]).collect();
    for &v in &w {
        in_w[v] = true;
        pending[v] = true;
    }
    let mut partner = vec![usize::MAX; g.n()];
    let pending_of = |t: &sim::Token, pending: &[bool]| -> Result<Option<NodeId>> {
        let active = t.members().iter().filter(|&&v| in_w[v]).count() % 2 == 1;
        let pend: Vec<NodeId> = t.members().iter().copied().filter(|&v| pending[v]).collect();
        match (active, pend.as_slice()) {
            (true, [x]) => Ok(Some(*x)),
            (false, []) => Ok(None),
            _ => Err(Error::Internal(format!("token {t} breaks the pending-singleton invariant"))),
        }
    };
    for e in sim::events(g, p, s)? {
        match e {
            Event::Delivered { to, token, .. } => {
                for &v in token.members() {
                    if pending[v] {
                        trace[v].push(to);
                    }
                }
            }
            Event::Merged { a, b, .. } => {
                if let (Some(x), Some(y)) = (pending_of(&a, &pending)?, pending_of(&b, &pending)?) {
                    partner[x] = y;
                    partner[y] = x;
                    pending[x] = false;
                    pending[y] = false;
                }
            }
        }
    }
    let mut paths = Vec::with_capacity(w.len());
    for &v in &w {
        let u = partner[v];
        if u == usize::MAX {
            return Err(Error::Internal(format!("{v} was never paired")));
        }
        let mut path = trace[v].clone();
        path.extend(trace[u].iter().rev().skip(1));
        paths.push(path);
    }
    let dp = DirectedPathSet::new(paths);
    if dp.con() * p.min() > 2 * s.length {
        return Err(Error::Internal(format!("congestion {} exceeds 2*{}/{}", dp.con(), s.length, p.min())));
    }
    Ok(dp)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(tc: usize, tm: usize) -> NetworkParams {
        NetworkParams::new(tc, tm).unwrap()
    }

    #[test]
    fn descriptor_arithmetic() {
        let d = 2 + (3 << 8) + slot_bit(2) + slot_bit(2) + slot_bit(1);
        assert_eq!((count(d), busy(d), last_slot(d), in_flight(d)), (2, 3, 2, 3));
        let d = advance(d);
        assert_eq!((count(d), busy(d), last_slot(d), in_flight(d)), (3, 2, 1, 2));
    }

    #[test]
    fn twin_classes_of_small_graphs() {
        assert_eq!(twin_classes(&Graph::complete(4)), vec![vec![0, 1, 2, 3]]);
        assert_eq!(twin_classes(&Graph::star(4)), vec![vec![0], vec![1, 2, 3]]);
        assert_eq!(twin_classes(&Graph::path(4)), vec![vec![0], vec![1], vec![2], vec![3]]);
    }

    #[test]
    fn small_optima() {
        assert_eq!(brute_opt(&Graph::complete(2), p(1, 1), None).unwrap().opt_length, 2);
        assert_eq!(brute_opt(&Graph::complete(3), p(1, 1), None).unwrap().opt_length, 3);
        let r = brute_opt(&Graph::path(3), p(1, 1), None).unwrap();
        assert_eq!(r.opt_length, 3);
        assert_eq!(r.max_singleton_distance, 1);
        assert_eq!(brute_opt(&Graph::new(1), p(1, 1), None).unwrap().opt_length, 0);
    }

    #[test]
    fn limit_and_guard() {
        let e = brute_opt(&Graph::complete(3), p(1, 1), Some(2)).unwrap_err();
        assert_eq!(e, Error::NoScheduleWithinLimit(2));
        assert!(matches!(brute_opt(&Graph::complete(6), p(1, 1), None), Err(Error::TooLarge(_))));
        assert!(matches!(brute_opt(&Graph::new(2), p(1, 1), None), Err(Error::Disconnected)));
    }

    #[test]
    fn n_star_examples() {
        let cfg = BruteConfig { max_nodes: 6, ..BruteConfig::default() };
        let t = n_star_table(4, p(1, 1), &cfg).unwrap();
        let got: Vec<_> = t.entries.iter().map(|e| (e.rounds, e.n_star)).collect();
        assert_eq!(got, vec![(0, 1), (1, 1), (2, 2), (3, 3), (4, 5)]);
        let t = n_star_table(5, p(2, 1), &cfg).unwrap();
        let got: Vec<_> = t.entries.iter().map(|e| (e.rounds, e.n_star)).collect();
        assert_eq!(&got[3..], &[(3, 2), (4, 2), (5, 3)]);
    }

    #[test]
    fn opt_paths_k2() {
        let g = Graph::complete(2);
        let r = brute_opt(&g, p(1, 1), None).unwrap();
        let dp = extract_opt_paths(&g, p(1, 1), &r.schedule, &[0, 1]).unwrap();
        assert_eq!(dp.paths, vec![vec![0, 1], vec![1, 0]]);
        assert_eq!(dp.con(), 2);
    }

    #[test]
    fn opt_paths_p3() {
        let g = Graph::path(3);
        let s = Schedule::new(
            vec![Action::send(1, 0, 1), Action::send(1, 2, 1), Action::compute(2, 1), Action::compute(3, 1)],
            3,
        );
        let dp = extract_opt_paths(&g, p(1, 1), &s, &[0, 1, 2]).unwrap();
        assert_eq!(dp.paths, vec![vec![0, 1], vec![1, 0]]);
        assert!(dp.paths.iter().all(|q| q.contains(&1)));
        dp.check(&g, &[0, 1], true, false).unwrap();
    }
}
