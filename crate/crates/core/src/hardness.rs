//! Dominating-set gadgets: the `Psi` construction, schedules built from a
//! dominating set, recovery of a dominating set from a short schedule, and
//! the MDS approximation loop on top of any scheduler.

use std::collections::BTreeSet;

use log::{debug, warn};

use crate::approx::solve_tc;
use crate::brute::{brute_opt_with, BruteConfig};
use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::schedule::{Action, ActionKind, NetworkParams, Schedule};
use crate::sim::Engine;
use crate::validate::validate_schedule;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PsiGadget {
    pub base: Graph,
    pub tm: usize,
    pub graph: Graph,
    /// Hub adjacent to every other vertex.
    pub a: NodeId,
    pub d_star: NodeId,
    pub beta: Vec<NodeId>,
}

impl PsiGadget {
    /// Gadgets are always scheduled with `t_c = 1`.
    pub fn params(&self) -> NetworkParams {
        NetworkParams { tc: 1, tm: self.tm }
    }

    pub fn delta(&self) -> usize {
        self.base.max_degree()
    }
}

/// Base vertices keep their ids; the hub is `n`, `d*` is `n + 1` and the
/// `Delta + t_m` danglers follow.
pub fn psi_transform(g: &Graph, tm: usize) -> Result<PsiGadget> {
    if g.n() == 0 || tm == 0 {
        return Err(Error::Params("gadget needs at least one vertex and t_m >= 1".into()));
    }
    let n = g.n();
    let delta = g.max_degree();
    let total = n + 2 + delta + tm;
    let a = n;
    let mut h = Graph::new(total);
    for (u, v) in g.edges() {
        h.add_edge(u, v)?;
    }
    for v in (0..total).filter(|&v| v != a) {
        h.add_edge(v.min(a), v.max(a))?;
    }
    Ok(PsiGadget { base: g.clone(), tm, graph: h, a, d_star: n + 1, beta: (n + 2..total).collect() })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DominatingSet {
    /// Sorted members.
    pub kappa: Vec<NodeId>,
    /// `sigma[v]` is `v` itself for members, else a member adjacent to `v`.
    pub sigma: Vec<NodeId>,
}

impl DominatingSet {
    /// Members map to themselves; everyone else to their lowest-id member
    /// neighbor.
    pub fn new(g: &Graph, kappa: impl IntoIterator<Item = NodeId>) -> Result<Self> {
        let kappa: BTreeSet<NodeId> = kappa.into_iter().collect();
        if let Some(&v) = kappa.iter().find(|&&v| v >= g.n()) {
            return Err(Error::Params(format!("vertex {v} out of range")));
        }
        let mut sigma = Vec::with_capacity(g.n());
        for v in 0..g.n() {
            if kappa.contains(&v) {
                sigma.push(v);
            } else {
                match g.neighbors(v).iter().find(|u| kappa.contains(u)) {
                    Some(&u) => sigma.push(u),
                    None => return Err(Error::Params(format!("vertex {v} is not dominated"))),
                }
            }
        }
        Ok(DominatingSet { kappa: kappa.into_iter().collect(), sigma })
    }

    pub fn len(&self) -> usize {
        self.kappa.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kappa.is_empty()
    }

    pub fn is_valid(&self, g: &Graph) -> bool {
        is_dominating(g, &self.kappa)
    }
}

pub fn is_dominating(g: &Graph, set: &[NodeId]) -> bool {
    let mut hit = vec![false; g.n()];
    for &v in set {
        if v >= g.n() {
            return false;
        }
        hit[v] = true;
        for &u in g.neighbors(v) {
            hit[u] = true;
        }
    }
    hit.into_iter().all(|h| h)
}

/// Three stages: everyone ships to its collector (danglers and the hub's own
/// token to `a` and `d*`, base vertices to `sigma`); collectors merge their
/// piles and forward to `a`; `a` merges everything. Runs within
/// `2 t_m + Delta + |kappa|` rounds when `Delta >= 2`, one more otherwise.
pub fn schedule_from_dominating_set(gadget: &PsiGadget, ds: &DominatingSet) -> Result<Schedule> {
    let g = &gadget.base;
    if ds.sigma.len() != g.n()
        || !ds.is_valid(g)
        || ds.sigma.iter().enumerate().any(|(v, &s)| s != v && (!g.has_edge(v, s) || ds.kappa.binary_search(&s).is_err()))
    {
        return Err(Error::Params("not a dominating set of the base graph".into()));
    }
    let p = gadget.params();
    let h = &gadget.graph;
    let a = gadget.a;
    let mut eng = Engine::new(h, p);
    let mut actions = Vec::new();
    let mut act = |eng: &mut Engine, x: Action| -> Result<()> {
        eng.start(&x).map_err(|v| Error::Internal(format!("gadget schedule broke a rule: {v}")))?;
        actions.push(x);
        Ok(())
    };

    eng.advance_to(1);
    for &b in &gadget.beta {
        act(&mut eng, Action::send(1, b, a))?;
    }
    act(&mut eng, Action::send(1, a, gadget.d_star))?;
    for v in 0..g.n() {
        if ds.sigma[v] != v {
            act(&mut eng, Action::send(1, v, ds.sigma[v]))?;
        }
    }

    // collectors: d* and the members of kappa
    let mut collectors: Vec<NodeId> = ds.kappa.clone();
    collectors.push(gadget.d_star);
    let mut shipped = vec![false; h.n()];
    let mut r = p.tm + 1;
    loop {
        eng.advance_to(r);
        for &c in &collectors {
            if shipped[c] || !eng.is_free(c) {
                continue;
            }
            if eng.count(c) >= 2 {
                act(&mut eng, Action::compute(r, c))?;
            } else {
                act(&mut eng, Action::send(r, c, a))?;
                shipped[c] = true;
            }
        }
        if eng.is_free(a) && eng.count(a) >= 2 {
            act(&mut eng, Action::compute(r, a))?;
        }
        if eng.total_tokens() == 1 && !eng.has_pending() && eng.is_free(a) {
            break;
        }
        r += 1;
    }
    let s = Schedule::new(actions, eng.last_busy());
    debug!("gadget schedule: length {} with |kappa| = {}", s.length, ds.len());
    Ok(s)
}

/// Disjoint copies used by the approximation loop: `ceil(Delta / eps)`, at
/// least one.
pub fn copies_for(g: &Graph, eps: f64) -> usize {
    ((g.max_degree() as f64 / eps).ceil() as usize).max(1)
}

/// Recovers a dominating set of `g` from a schedule on a gadget whose base is
/// disjoint copies of `g`: in every copy, the vertices that send to the hub;
/// the smallest such set that dominates its copy wins.
pub fn ds_from_schedule(gadget: &PsiGadget, g: &Graph, s: &Schedule) -> Result<DominatingSet> {
    let n = g.n();
    if n == 0 || !gadget.base.n().is_multiple_of(n) || gadget.base != g.disjoint_copies(gadget.base.n() / n) {
        return Err(Error::Params("gadget base is not a union of copies of the graph".into()));
    }
    if s.length >= 3 * gadget.tm {
        return Err(Error::Precondition(format!("schedule length {} is not below 3 t_m = {}", s.length, 3 * gadget.tm)));
    }
    let report = validate_schedule(&gadget.graph, gadget.params(), s)?;
    if let Some(v) = report.violation {
        return Err(Error::Invalid(v));
    }
    let copies = gadget.base.n() / n;
    let mut sends: Vec<BTreeSet<NodeId>> = vec![BTreeSet::new(); copies];
    for x in &s.actions {
        if let ActionKind::Send { to, .. } = x.kind {
            if to == gadget.a && x.node < gadget.base.n() {
                sends[x.node / n].insert(x.node % n);
            }
        }
    }
    let best = sends
        .into_iter()
        .map(|k| k.into_iter().collect::<Vec<_>>())
        .filter(|k| is_dominating(g, k))
        .min_by(|x, y| x.len().cmp(&y.len()).then_with(|| x.cmp(y)))
        .ok_or_else(|| Error::Internal("no copy yields a dominating set".into()))?;
    DominatingSet::new(g, best)
}

/// Anything that produces a complete schedule for a graph.
pub trait Scheduler {
    fn name(&self) -> &'static str;

    /// `limit` is a hint: a scheduler may give up (returning `Ok(None)`) when
    /// it can tell no schedule of at most `limit` rounds exists or it is out
    /// of budget.
    fn schedule(&self, g: &Graph, p: NetworkParams, limit: Option<usize>) -> Result<Option<Schedule>>;
}

pub struct BruteScheduler {
    pub config: BruteConfig,
}

impl Scheduler for BruteScheduler {
    fn name(&self) -> &'static str {
        "brute"
    }

    fn schedule(&self, g: &Graph, p: NetworkParams, limit: Option<usize>) -> Result<Option<Schedule>> {
        match brute_opt_with(g, p, limit, &self.config) {
            Ok(r) => Ok(Some(r.schedule)),
            Err(Error::NoScheduleWithinLimit(_)) => Ok(None),
            Err(Error::TooLarge(msg)) => {
                warn!("brute scheduler skipped: {msg}");
                Ok(None)
            }
            Err(e) => Err(e),
        }
    }
}

pub struct ApproxScheduler {
    pub seed: u64,
}

impl Scheduler for ApproxScheduler {
    fn name(&self) -> &'static str {
        "approx"
    }

    fn schedule(&self, g: &Graph, p: NetworkParams, _limit: Option<usize>) -> Result<Option<Schedule>> {
        Ok(Some(solve_tc(g, p, self.seed)?.schedule))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MdsOutcome {
    pub set: DominatingSet,
    /// `(k_hat, t_m, schedule length)` for each guess that produced a schedule.
    pub guesses: Vec<(usize, usize, usize)>,
    /// True when no guess gave a short enough schedule and `V` was returned.
    pub trivial: bool,
}

/// `t_m` for guess `k_hat`: `ceil((Delta + k_hat Delta / eps) / eps) + 1`.
pub fn guess_tm(delta: usize, k_hat: usize, eps: f64) -> usize {
    let d = delta as f64;
    ((d + k_hat as f64 * d / eps) / eps - 1e-9).ceil().max(0.0) as usize + 1
}

/// Tries each guess `k_hat = 1..=n` on the gadget over `ceil(Delta / eps)`
/// copies of `g` and keeps the smallest recovered set. Stops early at a
/// set of size one.
pub fn mds_apx(g: &Graph, scheduler: &dyn Scheduler, eps: f64) -> Result<MdsOutcome> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::Params(format!("eps = {eps} must lie in (0, 1]")));
    }
    if g.n() == 0 {
        return Err(Error::Params("empty graph".into()));
    }
    let copies = copies_for(g, eps);
    let base = g.disjoint_copies(copies);
    let delta = g.max_degree();
    let mut best: Option<DominatingSet> = None;
    let mut guesses = Vec::new();
    for k_hat in 1..=g.n() {
        let tm = guess_tm(delta, k_hat, eps);
        let gadget = psi_transform(&base, tm)?;
        let Some(s) = scheduler.schedule(&gadget.graph, gadget.params(), Some(3 * tm - 1))? else {
            debug!("k_hat = {k_hat}: no schedule from {}", scheduler.name());
            continue;
        };
        guesses.push((k_hat, tm, s.length));
        if s.length >= 3 * tm {
            continue;
        }
        let cand = ds_from_schedule(&gadget, g, &s)?;
        debug!("k_hat = {k_hat}, t_m = {tm}: length {} gives {:?}", s.length, cand.kappa);
        if best.as_ref().is_none_or(|b| (cand.len(), &cand.kappa) < (b.len(), &b.kappa)) {
            best = Some(cand);
        }
        if best.as_ref().is_some_and(|b| b.len() == 1) {
            break;
        }
    }
    match best {
        Some(set) => Ok(MdsOutcome { set, guesses, trivial: false }),
        None => {
            warn!("no guess produced a schedule shorter than 3 t_m; returning all vertices");
            Ok(MdsOutcome { set: DominatingSet::new(g, 0..g.n())?, guesses, trivial: true })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::final_state;

    #[test]
    fn gadget_counts() {
        let k = psi_transform(&Graph::complete(3), 3).unwrap();
        assert_eq!(k.graph.n(), 10);
        assert_eq!(k.graph.degree(k.a), 9);
        assert_eq!(k.beta.len(), 5);
        let one = psi_transform(&Graph::new(1), 1).unwrap();
        assert_eq!(one.graph.n(), 4);
        assert_eq!(one.beta, vec![3]);
        assert_eq!(psi_transform(&Graph::star(4), 1).unwrap().beta.len(), 4);
    }

    #[test]
    fn k3_schedule() {
        let gadget = psi_transform(&Graph::complete(3), 3).unwrap();
        let ds = DominatingSet::new(&gadget.base, [0]).unwrap();
        let s = schedule_from_dominating_set(&gadget, &ds).unwrap();
        assert!(s.length <= 9, "length {}", s.length);
        assert!(validate_schedule(&gadget.graph, gadget.params(), &s).unwrap().valid);
        let end = final_state(&gadget.graph, gadget.params(), &s, &crate::sim::TokenState::singletons(10)).unwrap();
        assert_eq!(end.total(), 1);
        let gadget = psi_transform(&Graph::complete(3), 4).unwrap();
        let s = schedule_from_dominating_set(&gadget, &ds).unwrap();
        assert!(s.length < 12);
        let back = ds_from_schedule(&gadget, &gadget.base, &s).unwrap();
        assert_eq!(back.kappa, vec![0]);
    }

    #[test]
    fn single_vertex_needs_one_extra_round() {
        let gadget = psi_transform(&Graph::new(1), 1).unwrap();
        let ds = DominatingSet::new(&gadget.base, [0]).unwrap();
        let s = schedule_from_dominating_set(&gadget, &ds).unwrap();
        assert!(validate_schedule(&gadget.graph, gadget.params(), &s).unwrap().valid);
        assert_eq!(s.length, 4);
    }

    #[test]
    fn sigma_is_lowest_member_neighbor() {
        let ds = DominatingSet::new(&Graph::cycle(5), [1, 3]).unwrap();
        assert_eq!(ds.sigma, vec![1, 1, 1, 3, 3]);
        assert!(DominatingSet::new(&Graph::path(3), [0]).is_err());
    }

    #[test]
    fn guess_tm_values() {
        assert_eq!(guess_tm(1, 1, 1.0), 3);
        assert_eq!(guess_tm(2, 1, 1.0), 5);
        assert_eq!(guess_tm(2, 1, 0.5), 13);
    }

    #[test]
    fn rejects_long_schedules() {
        let gadget = psi_transform(&Graph::path(3), 2).unwrap();
        let ds = DominatingSet::new(&gadget.base, [0, 1, 2]).unwrap();
        let s = schedule_from_dominating_set(&gadget, &ds).unwrap();
        assert!(s.length >= 6);
        assert!(matches!(ds_from_schedule(&gadget, &gadget.base, &s), Err(Error::Precondition(_))));
    }
}
