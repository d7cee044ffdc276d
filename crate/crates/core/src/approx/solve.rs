//! The outer loop: pick `W`, get paths, route and merge, repeat.

use std::collections::VecDeque;
use std::fmt::Write as _;

use log::{debug, info};

use super::assign::assign_paths;
use super::route::{merge_at_sinks, route_fifo, route_paths_c, route_paths_m};
use super::sample::{sample_count, sample_paths};
use super::{choose_l, stream};
use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::paths::DirectedPathSet;
use crate::schedule::{NetworkParams, Schedule};
use crate::sim::{final_state, TokenState};
use crate::validate::ceil_log2;

/// Below this many token holders the LP pipeline is skipped.
pub const FALLBACK_MAX_W: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Router {
    /// Route everything, then merge at the sinks (`t_c > t_m`).
    M,
    /// Forward until blocked, then merge everywhere (`t_c <= t_m`).
    C,
    /// Greedy BFS pairing along shortest paths.
    Fallback,
}

impl Router {
    pub fn name(self) -> &'static str {
        match self {
            Router::M => "m",
            Router::C => "c",
            Router::Fallback => "fallback",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationReport {
    pub iter: usize,
    pub w: usize,
    /// Zero for fallback iterations, which solve no LP.
    pub layers: usize,
    pub z: f64,
    pub con: usize,
    pub dil: usize,
    pub sources: usize,
    pub fragment_rounds: usize,
    pub router: Router,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApproxRun {
    pub schedule: Schedule,
    pub iterations: Vec<IterationReport>,
}

impl ApproxRun {
    /// CSV with the chosen constants in `#` lines ahead of the header row.
    pub fn report_csv(&self, n: usize) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# samples={}", sample_count(n));
        let _ = writeln!(out, "# iteration_cap={}", iteration_cap(n));
        let _ = writeln!(out, "# fallback_max_w={FALLBACK_MAX_W}");
        out.push_str("iter,W,L,z,con,dil,U,fragment_rounds,router\n");
        for r in &self.iterations {
            let _ = writeln!(
                out,
                "{},{},{},{:.6},{},{},{},{},{}",
                r.iter,
                r.w,
                r.layers,
                r.z,
                r.con,
                r.dil,
                r.sources,
                r.fragment_rounds,
                r.router.name()
            );
        }
        out
    }
}

pub fn iteration_cap(n: usize) -> usize {
    24 * ceil_log2(n) + 8
}

/// Pairs each unmatched holder (ascending) with its nearest unmatched holder,
/// ties broken by id, along a BFS shortest path.
pub(crate) fn bfs_pairing(g: &Graph, w: &[NodeId]) -> DirectedPathSet {
    let mut free = vec![false; g.n()];
    for &v in w {
        free[v] = true;
    }
    let mut paths = Vec::new();
    for &a in w {
        if !free[a] {
            continue;
        }
        free[a] = false;
        let dist = g.bfs(a);
        let b = w.iter().copied().filter(|&b| free[b]).min_by_key(|&b| (dist[b].unwrap_or(usize::MAX), b));
        if let Some(b) = b {
            free[b] = false;
            paths.push(g.shortest_path(a, b).expect("graph is connected"));
        }
    }
    DirectedPathSet::new(paths)
}

/// Approximate schedule for any connected graph. All randomness comes from
/// `seed`; iteration `i` uses its own sub-stream.
pub fn solve_tc(g: &Graph, p: NetworkParams, seed: u64) -> Result<ApproxRun> {
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    let n = g.n();
    let cap = iteration_cap(n);
    let mut state = TokenState::singletons(n);
    let mut schedule = Schedule::empty();
    let mut iterations = Vec::new();
    while state.total() > 1 {
        let iter = iterations.len() + 1;
        if iter > cap {
            return Err(Error::Internal(format!("no single token after {cap} iterations")));
        }
        let holders = state.single_holders();
        let mut w: VecDeque<NodeId> = holders.iter().copied().collect();
        if w.len() % 2 == 1 {
            w.pop_back();
        }
        let w: Vec<NodeId> = w.into();
        let mut rng = stream(seed, iter as u64, 0);

        let mut lp_info = (0, 0.0);
        let mut planned = None;
        if w.len() > FALLBACK_MAX_W {
            let chosen = choose_l(g, &w, p)?;
            let sampled = sample_paths(&chosen.solution, n, &mut rng);
            let dp = assign_paths(&sampled.paths, &w);
            lp_info = (chosen.layers, chosen.solution.z);
            debug!(
                "iter {iter}: L={} z={:.3} kept {}/{} paths, {} sources",
                chosen.layers,
                chosen.solution.z,
                sampled.paths.len(),
                w.len(),
                dp.len()
            );
            if !dp.is_empty() {
                planned = Some(dp);
            }
        }
        let (dp, router, fragment) = match planned {
            Some(dp) if p.tc > p.tm => {
                let f = route_paths_m(g, p, &dp, &state, &mut rng);
                (dp, Router::M, f)
            }
            Some(dp) => {
                let f = route_paths_c(g, p, &dp, &state);
                (dp, Router::C, f)
            }
            None => {
                let dp = bfs_pairing(g, &w);
                let f = merge_at_sinks(route_fifo(p, &dp, &state, n), &dp, p);
                (dp, Router::Fallback, f)
            }
        };
        let next = final_state(g, p, &fragment, &state)?;
        if next.total() >= state.total() {
            return Err(Error::Internal(format!("iteration {iter} did not reduce the token count")));
        }
        info!("iter {iter}: {} -> {} tokens via {}", state.total(), next.total(), router.name());
        iterations.push(IterationReport {
            iter,
            w: holders.len(),
            layers: if router == Router::Fallback { 0 } else { lp_info.0 },
            z: if router == Router::Fallback { 0.0 } else { lp_info.1 },
            con: dp.con(),
            dil: dp.dil(),
            sources: dp.len(),
            fragment_rounds: fragment.length,
            router,
        });
        schedule.append(&fragment);
        state = next;
    }
    schedule.sort();
    Ok(ApproxRun { schedule, iterations })
}
