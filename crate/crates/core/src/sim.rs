//! Round-accurate execution of schedules.
//!
//! An action started in round `r` occupies rounds `r ..= r + t - 1`; its effect
//! is applied at the start of round `r + t`. In-flight tokens are reported at
//! their sender until delivered.

use std::collections::VecDeque;
use std::fmt;

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::schedule::{Action, ActionKind, NetworkParams, Schedule};
use crate::validate::{Rule, Violation};

/// A token, stored as the sorted singleton ids it contains.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Token(Vec<NodeId>);

impl Token {
    pub fn singleton(v: NodeId) -> Self {
        Token(vec![v])
    }

    pub fn from_members(mut members: Vec<NodeId>) -> Self {
        members.sort_unstable();
        members.dedup();
        Token(members)
    }

    /// Lowest contained singleton id.
    pub fn id(&self) -> NodeId {
        self.0[0]
    }

    pub fn members(&self) -> &[NodeId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, v: NodeId) -> bool {
        self.0.binary_search(&v).is_ok()
    }

    pub fn union(&self, other: &Token) -> Token {
        let mut m = Vec::with_capacity(self.len() + other.len());
        m.extend_from_slice(&self.0);
        m.extend_from_slice(&other.0);
        Token::from_members(m)
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, "}}")
    }
}

/// Tokens per node, oldest first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenState {
    pub nodes: Vec<Vec<Token>>,
}

impl TokenState {
    pub fn singletons(n: usize) -> Self {
        TokenState { nodes: (0..n).map(|v| vec![Token::singleton(v)]).collect() }
    }

    pub fn total(&self) -> usize {
        self.nodes.iter().map(Vec::len).sum()
    }

    /// Nodes holding exactly one token.
    pub fn single_holders(&self) -> Vec<NodeId> {
        (0..self.nodes.len()).filter(|&v| self.nodes[v].len() == 1).collect()
    }

    /// True when the tokens partition `0..n` exactly.
    pub fn is_partition(&self) -> bool {
        let n = self.nodes.len();
        let mut seen = vec![false; n];
        for t in self.nodes.iter().flatten() {
            for &v in t.members() {
                if v >= n || seen[v] {
                    return false;
                }
                seen[v] = true;
            }
        }
        seen.into_iter().all(|b| b)
    }
}

impl fmt::Display for TokenState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (v, toks) in self.nodes.iter().enumerate() {
            if toks.is_empty() {
                continue;
            }
            if !first {
                write!(f, " ")?;
            }
            first = false;
            write!(f, "{v}:")?;
            for t in toks {
                write!(f, "{t}")?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Event {
    Delivered { round: usize, from: NodeId, to: NodeId, token: Token },
    Merged { round: usize, node: NodeId, a: Token, b: Token },
}

#[derive(Debug, Clone)]
enum Pending {
    Deliver { at: usize, from: NodeId, to: NodeId, token: Token },
    Merge { at: usize, node: NodeId, a: Token, b: Token },
}

impl Pending {
    fn at(&self) -> usize {
        match self {
            Pending::Deliver { at, .. } | Pending::Merge { at, .. } => *at,
        }
    }
}

/// Step-by-step executor. Callers alternate `advance_to(r)` and `start` for
/// actions beginning in round `r`.
#[derive(Debug, Clone)]
pub struct Engine<'g> {
    g: &'g Graph,
    p: NetworkParams,
    held: Vec<VecDeque<Token>>,
    free_at: Vec<usize>,
    pending: Vec<Pending>,
    round: usize,
    events: Vec<Event>,
    last_busy: usize,
}

impl<'g> Engine<'g> {
    pub fn new(g: &'g Graph, p: NetworkParams) -> Self {
        Engine::with_state(g, p, &TokenState::singletons(g.n()))
    }

    pub fn with_state(g: &'g Graph, p: NetworkParams, state: &TokenState) -> Self {
        Engine {
            g,
            p,
            held: state.nodes.iter().map(|ts| ts.iter().cloned().collect()).collect(),
            free_at: vec![1; g.n()],
            pending: Vec::new(),
            round: 1,
            events: Vec::new(),
            last_busy: 0,
        }
    }

    pub fn round(&self) -> usize {
        self.round
    }

    pub fn params(&self) -> NetworkParams {
        self.p
    }

    pub fn graph(&self) -> &'g Graph {
        self.g
    }

    /// Applies every completion due at the start of rounds up to `r`.
    pub fn advance_to(&mut self, r: usize) {
        while self.round < r {
            self.round += 1;
            let now = self.round;
            let (due, rest): (Vec<Pending>, Vec<Pending>) =
                std::mem::take(&mut self.pending).into_iter().partition(|p| p.at() == now);
            self.pending = rest;
            for p in due {
                match p {
                    Pending::Deliver { from, to, token, .. } => {
                        self.held[to].push_back(token.clone());
                        self.events.push(Event::Delivered { round: now, from, to, token });
                    }
                    Pending::Merge { node, a, b, .. } => {
                        self.held[node].push_back(a.union(&b));
                        self.events.push(Event::Merged { round: now, node, a, b });
                    }
                }
            }
        }
    }

    pub fn is_free(&self, v: NodeId) -> bool {
        self.free_at[v] <= self.round
    }

    pub fn held(&self, v: NodeId) -> &VecDeque<Token> {
        &self.held[v]
    }

    pub fn count(&self, v: NodeId) -> usize {
        self.held[v].len()
    }

    pub fn has_pending(&self) -> bool {
        !self.pending.is_empty()
    }

    /// Tokens in the network, counting in-flight and merging ones as separate.
    pub fn total_tokens(&self) -> usize {
        let held: usize = self.held.iter().map(VecDeque::len).sum();
        let extra: usize = self
            .pending
            .iter()
            .map(|p| match p {
                Pending::Deliver { .. } => 1,
                Pending::Merge { .. } => 2,
            })
            .sum();
        held + extra
    }

    /// Last round occupied by any action started so far.
    pub fn last_busy(&self) -> usize {
        self.last_busy
    }

    pub fn take_events(&mut self) -> Vec<Event> {
        std::mem::take(&mut self.events)
    }

    /// Starts `a`, which must begin in the current round.
    pub fn start(&mut self, a: &Action) -> std::result::Result<(), Violation> {
        debug_assert_eq!(a.start, self.round);
        let v = a.node;
        let r = self.round;
        if !self.is_free(v) {
            return Err(Violation::new(r, Some(v), Rule::Overlap, format!("node busy until round {}", self.free_at[v] - 1)));
        }
        match a.kind {
            ActionKind::Send { to, token } => {
                let idx = match token {
                    None if self.held[v].is_empty() => {
                        return Err(Violation::new(r, Some(v), Rule::SendWithoutToken, "sender holds no token".into()));
                    }
                    None => 0,
                    Some(k) => self.held[v].iter().position(|t| t.id() == k).ok_or_else(|| {
                        Violation::new(r, Some(v), Rule::SendWithoutToken, format!("sender does not hold token {k}"))
                    })?,
                };
                let token = self.held[v].remove(idx).unwrap();
                self.pending.push(Pending::Deliver { at: r + self.p.tm, from: v, to, token });
                self.free_at[v] = r + self.p.tm;
            }
            ActionKind::Compute => {
                if self.held[v].len() < 2 {
                    return Err(Violation::new(
                        r,
                        Some(v),
                        Rule::ComputeWithoutTokens,
                        format!("node holds {} token(s)", self.held[v].len()),
                    ));
                }
                let a_tok = self.held[v].pop_front().unwrap();
                let b_tok = self.held[v].pop_front().unwrap();
                self.pending.push(Pending::Merge { at: r + self.p.tc, node: v, a: a_tok, b: b_tok });
                self.free_at[v] = r + self.p.tc;
            }
        }
        self.last_busy = self.last_busy.max(self.free_at[v] - 1);
        Ok(())
    }

    /// Placement at the current round boundary; in-flight and merging tokens
    /// are listed after held ones at the node that owns them.
    pub fn snapshot(&self) -> TokenState {
        let mut nodes: Vec<Vec<Token>> = self.held.iter().map(|d| d.iter().cloned().collect()).collect();
        for p in &self.pending {
            match p {
                Pending::Deliver { from, token, .. } => nodes[*from].push(token.clone()),
                Pending::Merge { node, a, b, .. } => {
                    nodes[*node].push(a.clone());
                    nodes[*node].push(b.clone());
                }
            }
        }
        TokenState { nodes }
    }

    /// Runs every pending completion and returns the settled state.
    pub fn finish(mut self) -> TokenState {
        let last = self.pending.iter().map(Pending::at).max().unwrap_or(self.round);
        self.advance_to(last);
        TokenState { nodes: self.held.into_iter().map(Vec::from).collect() }
    }
}

/// Input errors: unknown nodes, non-neighbor targets, unknown token names.
pub fn check_input(g: &Graph, s: &Schedule) -> Result<()> {
    for a in &s.actions {
        let bad = |msg: String| Error::MalformedAction { round: a.start, node: a.node, msg };
        if a.node >= g.n() {
            return Err(bad(format!("unknown node {}", a.node)));
        }
        if let ActionKind::Send { to, token } = a.kind {
            if to >= g.n() {
                return Err(bad(format!("unknown target {to}")));
            }
            if !g.has_edge(a.node, to) {
                return Err(bad(format!("target {to} is not a neighbor")));
            }
            if token.is_some_and(|k| k >= g.n()) {
                return Err(bad(format!("unknown token {}", token.unwrap())));
            }
        }
    }
    Ok(())
}

/// Executes `s` from `init`, calling `observe` with the state at every round
/// boundary `0..=length`. Stops at the first violation of rules (a) to (d).
pub(crate) fn run<'g>(
    g: &'g Graph,
    p: NetworkParams,
    s: &Schedule,
    init: &TokenState,
    mut observe: impl FnMut(usize, &Engine),
) -> std::result::Result<Engine<'g>, (Violation, usize)> {
    let mut actions = s.actions.clone();
    actions.sort_by_key(|a| (a.start, a.node));
    let mut eng = Engine::with_state(g, p, init);
    let mut next = 0;
    for r in 1..=s.length + 1 {
        eng.advance_to(r);
        observe(r - 1, &eng);
        while next < actions.len() && actions[next].start <= r {
            let a = &actions[next];
            if a.start < 1 || a.end(p) > s.length {
                let v = Violation::new(
                    a.start,
                    Some(a.node),
                    Rule::OutOfWindow,
                    format!("window {}..={} outside 1..={}", a.start, a.end(p), s.length),
                );
                return Err((v, eng.total_tokens()));
            }
            if let Err(v) = eng.start(a) {
                return Err((v, eng.total_tokens()));
            }
            next += 1;
        }
    }
    if let Some(a) = actions.get(next) {
        let v = Violation::new(
            a.start,
            Some(a.node),
            Rule::OutOfWindow,
            format!("starts after the last round {}", s.length),
        );
        return Err((v, eng.total_tokens()));
    }
    Ok(eng)
}

/// Token placement at each round boundary `0..=length`.
pub fn simulate(g: &Graph, p: NetworkParams, s: &Schedule) -> Result<Vec<TokenState>> {
    simulate_from(g, p, s, &TokenState::singletons(g.n()))
}

pub fn simulate_from(g: &Graph, p: NetworkParams, s: &Schedule, init: &TokenState) -> Result<Vec<TokenState>> {
    check_input(g, s)?;
    let mut trace = Vec::with_capacity(s.length + 1);
    run(g, p, s, init, |_, e| trace.push(e.snapshot())).map_err(|(v, _)| Error::Invalid(v))?;
    Ok(trace)
}

/// Final settled state after running `s` from `init`.
pub fn final_state(g: &Graph, p: NetworkParams, s: &Schedule, init: &TokenState) -> Result<TokenState> {
    check_input(g, s)?;
    let eng = run(g, p, s, init, |_, _| {}).map_err(|(v, _)| Error::Invalid(v))?;
    Ok(eng.finish())
}

/// Replays `s`, returning every delivery and merge in order.
pub fn events(g: &Graph, p: NetworkParams, s: &Schedule) -> Result<Vec<Event>> {
    check_input(g, s)?;
    let mut eng = run(g, p, s, &TokenState::singletons(g.n()), |_, _| {}).map_err(|(v, _)| Error::Invalid(v))?;
    Ok(eng.take_events())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path3_trace() {
        let g = Graph::path(3);
        let p = NetworkParams::new(1, 1).unwrap();
        let s = Schedule::new(
            vec![Action::send(1, 0, 1), Action::send(1, 2, 1), Action::compute(2, 1), Action::compute(3, 1)],
            3,
        );
        let trace = simulate(&g, p, &s).unwrap();
        assert_eq!(trace.len(), 4);
        assert_eq!(trace[1].to_string(), "1:{1}{0}{2}");
        assert_eq!(trace[2].to_string(), "1:{2}{0,1}");
        assert_eq!(trace[3].to_string(), "1:{0,1,2}");
        for st in &trace {
            assert!(st.is_partition());
        }
        assert_eq!(simulate(&g, p, &s).unwrap(), trace);
    }

    #[test]
    fn named_token_send() {
        let g = Graph::path(3);
        let p = NetworkParams::new(1, 1).unwrap();
        let s = Schedule::new(
            vec![Action::send(1, 0, 1), Action::send_token(2, 1, 2, 0), Action::compute(3, 2)],
            3,
        );
        let last = simulate(&g, p, &s).unwrap().pop().unwrap();
        assert_eq!(last.to_string(), "1:{1} 2:{0,2}");
    }

    #[test]
    fn in_flight_token_counts_at_sender() {
        let g = Graph::complete(2);
        let p = NetworkParams::new(1, 3).unwrap();
        let s = Schedule::new(vec![Action::send(1, 1, 0), Action::compute(4, 0)], 4);
        let trace = simulate(&g, p, &s).unwrap();
        assert_eq!(trace[2].to_string(), "0:{0} 1:{1}");
        assert_eq!(trace[3].to_string(), "0:{0}{1}");
        assert_eq!(trace[4].to_string(), "0:{0,1}");
    }
}
