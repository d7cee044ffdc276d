//! The path-flow LP over the time-expanded graph.
//!
//! Vertex layers are `0..=L`; arc `u_r -> v_{r+1}` exists for every directed
//! base edge and `r < L`. Commodity `w` must send one unit that ends at some
//! `W - {w}` vertex on layer `L`. Vertices outside `W` conserve flow on every
//! layer, vertices of `W - {w}` may absorb commodity `w` but never create it,
//! and `z` bounds the number of path occurrences at each vertex: all inflow
//! plus the commodity's own emission at its source.
//!
//! `solve_flow_lp` works on path columns. The pricing problem is a layered
//! shortest path under the vertex duals, so only paths that could enter the
//! basis are ever generated. `solve_flow_lp_explicit` solves the arc
//! formulation directly and is meant for cross-checking small instances.

use std::collections::{BTreeMap, HashSet};

use minilp::{ComparisonOp, LinearExpr, OptimizationDirection, Problem, Variable};

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};

const EPS_LP: f64 = 1e-6;
const PRICE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct FlowLp {
    pub graph: Graph,
    pub w: Vec<NodeId>,
    pub layers: usize,
}

impl FlowLp {
    /// Arcs in the time-expanded graph.
    pub fn arc_count(&self) -> usize {
        2 * self.graph.m() * self.layers
    }

    pub fn variable_count(&self) -> usize {
        self.w.len() * self.arc_count() + 1
    }
}

pub fn build_flow_lp(g: &Graph, w: &[NodeId], layers: usize) -> Result<FlowLp> {
    let mut w = w.to_vec();
    w.sort_unstable();
    w.dedup();
    if w.len() < 2 {
        return Err(Error::Precondition("W needs at least two vertices".into()));
    }
    if layers == 0 {
        return Err(Error::Precondition("L_hat must be at least 1".into()));
    }
    if w.iter().any(|&v| v >= g.n()) {
        return Err(Error::Precondition("W contains an unknown node".into()));
    }
    Ok(FlowLp { graph: g.clone(), w, layers })
}

/// Per-commodity flows, stored sparsely as outgoing arcs of `(layer, node)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowSolution {
    pub layers: usize,
    pub w: Vec<NodeId>,
    pub z: f64,
    pub flows: Vec<BTreeMap<(usize, NodeId), Vec<(NodeId, f64)>>>,
}

impl FlowSolution {
    fn empty(lp: &FlowLp) -> Self {
        FlowSolution { layers: lp.layers, w: lp.w.clone(), z: 0.0, flows: vec![BTreeMap::new(); lp.w.len()] }
    }

    fn add(&mut self, k: usize, r: usize, u: NodeId, v: NodeId, f: f64) {
        let arcs = self.flows[k].entry((r, u)).or_default();
        match arcs.iter_mut().find(|(x, _)| *x == v) {
            Some((_, g)) => *g += f,
            None => {
                arcs.push((v, f));
                arcs.sort_by_key(|&(x, _)| x);
            }
        }
    }

    /// Outgoing arcs of commodity `k` at `u` on layer `r`.
    pub fn out_arcs(&self, k: usize, r: usize, u: NodeId) -> &[(NodeId, f64)] {
        self.flows[k].get(&(r, u)).map_or(&[], Vec::as_slice)
    }

    pub fn commodity(&self, w: NodeId) -> Option<usize> {
        self.w.binary_search(&w).ok()
    }

    /// Occurrence load per vertex: all inflow plus each source's emission.
    pub fn loads(&self, n: usize) -> Vec<f64> {
        let mut load = vec![0.0; n];
        for (k, fl) in self.flows.iter().enumerate() {
            for (&(_, u), arcs) in fl {
                for &(v, f) in arcs {
                    load[v] += f;
                    if u == self.w[k] {
                        load[u] += f;
                    }
                }
            }
        }
        load
    }

    /// Checks every LP constraint within `eps`.
    pub fn check(&self, lp: &FlowLp, eps: f64) -> Result<()> {
        let n = lp.graph.n();
        let in_w: Vec<bool> = (0..n).map(|v| lp.w.binary_search(&v).is_ok()).collect();
        let bad = |m: String| Err(Error::Lp(m));
        for (k, &w) in lp.w.iter().enumerate() {
            let mut net = vec![vec![0.0; n]; lp.layers + 1];
            for (&(r, u), arcs) in &self.flows[k] {
                for &(v, f) in arcs {
                    if f < -eps || r >= lp.layers || !lp.graph.has_edge(u, v) {
                        return bad(format!("bad arc {u}_{r} -> {v} with flow {f}"));
                    }
                    net[r][u] += f;
                    net[r + 1][v] -= f;
                }
            }
            let mut source = 0.0;
            for (r, row) in net.iter().enumerate() {
                for v in 0..n {
                    let out_minus_in = row[v];
                    if v == w {
                        source += out_minus_in;
                    } else if in_w[v] {
                        if out_minus_in > eps {
                            return bad(format!("commodity {w} created at {v}_{r}"));
                        }
                    } else if out_minus_in.abs() > eps {
                        return bad(format!("commodity {w} not conserved at {v}_{r}"));
                    }
                }
            }
            if source < 1.0 - eps {
                return bad(format!("commodity {w} emits only {source}"));
            }
            let ends: f64 = (0..n).filter(|&v| in_w[v] && v != w).map(|v| -net[lp.layers][v]).sum();
            if (ends - 1.0).abs() > eps {
                return bad(format!("commodity {w} delivers {ends} at the last layer"));
            }
        }
        let max_load = self.loads(n).into_iter().fold(0.0, f64::max);
        if max_load > self.z + eps {
            return bad(format!("load {max_load} exceeds z = {}", self.z));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct Column {
    commodity: usize,
    path: Vec<NodeId>,
}

/// Cheapest walk of at most `hops` edges from `w` to a `W - {w}` vertex when
/// every visited vertex costs its dual, with loops removed.
fn price(g: &Graph, w: NodeId, targets: &[bool], y: &[f64], hops: usize) -> Option<(f64, Vec<NodeId>)> {
    let n = g.n();
    let mut cost = vec![f64::INFINITY; n];
    cost[w] = y[w];
    let mut parent: Vec<Vec<usize>> = Vec::with_capacity(hops);
    let mut best: Option<(f64, usize, NodeId)> = None;
    for h in 1..=hops {
        let mut next = vec![f64::INFINITY; n];
        let mut par = vec![usize::MAX; n];
        for x in 0..n {
            for &u in g.neighbors(x) {
                let c = cost[u] + y[x];
                if c < next[x] - 1e-15 {
                    next[x] = c;
                    par[x] = u;
                }
            }
        }
        parent.push(par);
        for x in 0..n {
            if targets[x] && x != w && next[x].is_finite() && best.is_none_or(|(b, _, _)| next[x] < b - 1e-15) {
                best = Some((next[x], h, x));
            }
        }
        cost = next;
    }
    let (c, h, x) = best?;
    let mut walk = vec![x];
    let mut cur = x;
    for layer in (0..h).rev() {
        cur = parent[layer][cur];
        walk.push(cur);
    }
    walk.reverse();
    Some((c, remove_loops(&walk)))
}

/// Cuts every closed sub-walk so each vertex appears once.
pub(crate) fn remove_loops(walk: &[NodeId]) -> Vec<NodeId> {
    let mut out: Vec<NodeId> = Vec::with_capacity(walk.len());
    for &v in walk {
        if let Some(i) = out.iter().position(|&x| x == v) {
            out.truncate(i + 1);
        } else {
            out.push(v);
        }
    }
    out
}

fn occurrences(path: &[NodeId]) -> BTreeMap<NodeId, f64> {
    let mut occ = BTreeMap::new();
    for &v in path {
        *occ.entry(v).or_insert(0.0) += 1.0;
    }
    occ
}

fn lp_err(e: minilp::Error) -> Error {
    Error::Lp(e.to_string())
}

/// Optimal solution by column generation over hop-bounded simple paths.
pub fn solve_flow_lp(lp: &FlowLp) -> Result<FlowSolution> {
    let g = &lp.graph;
    let n = g.n();
    let mut targets = vec![false; n];
    for &v in &lp.w {
        targets[v] = true;
    }
    // simple paths never need more than n - 1 hops
    let hops = lp.layers.min(n.saturating_sub(1));

    // restricted dual: max sum pi_k  s.t.  pi_k <= sum_v occ_P(v) y_v per column, sum y <= 1
    let mut dual = Problem::new(OptimizationDirection::Maximize);
    let pi: Vec<Variable> = lp.w.iter().map(|_| dual.add_var(1.0, (0.0, f64::INFINITY))).collect();
    let y: Vec<Variable> = (0..n).map(|_| dual.add_var(0.0, (0.0, f64::INFINITY))).collect();
    dual.add_constraint(y.iter().map(|&v| (v, 1.0)).collect::<LinearExpr>(), ComparisonOp::Le, 1.0);

    let zero = vec![0.0; n];
    let mut columns: Vec<Column> = Vec::new();
    let mut known: HashSet<(usize, Vec<NodeId>)> = HashSet::new();
    let mut rows = Vec::new();
    for (k, &w) in lp.w.iter().enumerate() {
        let (_, path) = price(g, w, &targets, &zero, hops)
            .ok_or_else(|| Error::Lp(format!("no path from {w} to W within {} hops; LP infeasible", lp.layers)))?;
        rows.push(column_row(&pi, &y, k, &path));
        known.insert((k, path.clone()));
        columns.push(Column { commodity: k, path });
    }
    for (expr, op, rhs) in rows {
        dual.add_constraint(expr, op, rhs);
    }
    let mut sol = dual.solve().map_err(lp_err)?;
    for _ in 0..100_000 {
        let yv: Vec<f64> = y.iter().map(|&v| *sol.var_value(v)).collect();
        let mut added = Vec::new();
        for (k, &w) in lp.w.iter().enumerate() {
            if let Some((c, path)) = price(g, w, &targets, &yv, hops) {
                let reduced = c - *sol.var_value(pi[k]);
                if reduced < -PRICE_TOL && known.insert((k, path.clone())) {
                    added.push(Column { commodity: k, path });
                }
            }
        }
        if added.is_empty() {
            return primal(lp, &columns, sol.objective());
        }
        for c in added {
            let (expr, op, rhs) = column_row(&pi, &y, c.commodity, &c.path);
            sol = sol.add_constraint(expr, op, rhs).map_err(lp_err)?;
            columns.push(c);
        }
    }
    Err(Error::Lp("column generation did not converge".into()))
}

fn column_row(pi: &[Variable], y: &[Variable], k: usize, path: &[NodeId]) -> (LinearExpr, ComparisonOp, f64) {
    let mut expr = LinearExpr::empty();
    expr.add(pi[k], 1.0);
    for (v, c) in occurrences(path) {
        expr.add(y[v], -c);
    }
    (expr, ComparisonOp::Le, 0.0)
}

/// Solves the restricted primal on the final columns and lays each path out
/// so that it ends on the last layer.
fn primal(lp: &FlowLp, columns: &[Column], dual_obj: f64) -> Result<FlowSolution> {
    let n = lp.graph.n();
    let mut pb = Problem::new(OptimizationDirection::Minimize);
    let z = pb.add_var(1.0, (0.0, f64::INFINITY));
    let x: Vec<Variable> = columns.iter().map(|_| pb.add_var(0.0, (0.0, f64::INFINITY))).collect();
    for k in 0..lp.w.len() {
        let expr: LinearExpr =
            columns.iter().zip(&x).filter(|(c, _)| c.commodity == k).map(|(_, &v)| (v, 1.0)).collect();
        pb.add_constraint(expr, ComparisonOp::Eq, 1.0);
    }
    let mut load: Vec<LinearExpr> = (0..n).map(|_| LinearExpr::empty()).collect();
    for (c, &v) in columns.iter().zip(&x) {
        for (node, occ) in occurrences(&c.path) {
            load[node].add(v, occ);
        }
    }
    for mut expr in load {
        expr.add(z, -1.0);
        pb.add_constraint(expr, ComparisonOp::Le, 0.0);
    }
    let sol = pb.solve().map_err(lp_err)?;
    if (sol.objective() - dual_obj).abs() > EPS_LP * dual_obj.abs().max(1.0) {
        return Err(Error::Lp(format!("primal {} and dual {} disagree", sol.objective(), dual_obj)));
    }
    let mut out = FlowSolution::empty(lp);
    for (c, &v) in columns.iter().zip(&x) {
        let f = *sol.var_value(v);
        if f <= 1e-12 {
            continue;
        }
        let start = lp.layers - (c.path.len() - 1);
        for (i, e) in c.path.windows(2).enumerate() {
            out.add(c.commodity, start + i, e[0], e[1], f);
        }
    }
    out.z = out.loads(n).into_iter().fold(0.0, f64::max);
    Ok(out)
}

/// Solves the arc formulation directly. Size grows with `|W| * |E| * L`.
pub fn solve_flow_lp_explicit(lp: &FlowLp) -> Result<FlowSolution> {
    let g = &lp.graph;
    let n = g.n();
    let darcs: Vec<(NodeId, NodeId)> = (0..n).flat_map(|u| g.neighbors(u).iter().map(move |&v| (u, v))).collect();
    let in_w: Vec<bool> = (0..n).map(|v| lp.w.binary_search(&v).is_ok()).collect();
    let mut pb = Problem::new(OptimizationDirection::Minimize);
    let z = pb.add_var(1.0, (0.0, f64::INFINITY));
    let mut var = vec![vec![Vec::with_capacity(darcs.len()); lp.layers]; lp.w.len()];
    for per_k in var.iter_mut() {
        for per_r in per_k.iter_mut() {
            for _ in &darcs {
                per_r.push(pb.add_var(0.0, (0.0, f64::INFINITY)));
            }
        }
    }
    let mut load: Vec<LinearExpr> = (0..n).map(|_| LinearExpr::empty()).collect();
    for (k, &w) in lp.w.iter().enumerate() {
        let mut source = LinearExpr::empty();
        for r in 0..=lp.layers {
            // out - in at every vertex of layer r
            let mut bal: Vec<LinearExpr> = (0..n).map(|_| LinearExpr::empty()).collect();
            for (a, &(u, v)) in darcs.iter().enumerate() {
                if r < lp.layers {
                    bal[u].add(var[k][r][a], 1.0);
                    if u == w {
                        source.add(var[k][r][a], 1.0);
                        load[u].add(var[k][r][a], 1.0);
                    }
                }
                if r > 0 {
                    bal[v].add(var[k][r - 1][a], -1.0);
                    if v == w {
                        source.add(var[k][r - 1][a], -1.0);
                    }
                }
            }
            for (v, expr) in bal.into_iter().enumerate() {
                if v == w {
                    continue;
                }
                let op = if in_w[v] { ComparisonOp::Le } else { ComparisonOp::Eq };
                pb.add_constraint(expr, op, 0.0);
            }
        }
        pb.add_constraint(source, ComparisonOp::Ge, 1.0);
        let mut ends = LinearExpr::empty();
        for (a, &(_, v)) in darcs.iter().enumerate() {
            if in_w[v] && v != w {
                ends.add(var[k][lp.layers - 1][a], 1.0);
            }
            for r in 0..lp.layers {
                load[v].add(var[k][r][a], 1.0);
            }
        }
        pb.add_constraint(ends, ComparisonOp::Eq, 1.0);
    }
    for mut expr in load {
        expr.add(z, -1.0);
        pb.add_constraint(expr, ComparisonOp::Le, 0.0);
    }
    let sol = pb.solve().map_err(lp_err)?;
    let mut out = FlowSolution::empty(lp);
    for k in 0..lp.w.len() {
        for r in 0..lp.layers {
            for (a, &(u, v)) in darcs.iter().enumerate() {
                let f = *sol.var_value(var[k][r][a]);
                if f > 1e-12 {
                    out.add(k, r, u, v, f);
                }
            }
        }
    }
    out.z = sol.objective();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z_of(g: &Graph, w: &[NodeId], l: usize) -> f64 {
        let lp = build_flow_lp(g, w, l).unwrap();
        let s = solve_flow_lp(&lp).unwrap();
        s.check(&lp, 1e-6).unwrap();
        s.z
    }

    #[test]
    fn k2_and_star() {
        assert!((z_of(&Graph::complete(2), &[0, 1], 1) - 2.0).abs() < 1e-6);
        assert!((z_of(&Graph::star(4), &[1, 2, 3], 2) - 3.0).abs() < 1e-6);
    }

    #[test]
    fn rejects_small_w() {
        assert!(build_flow_lp(&Graph::complete(3), &[1], 2).is_err());
        assert!(build_flow_lp(&Graph::complete(3), &[0, 1], 0).is_err());
    }

    #[test]
    fn infeasible_when_too_few_layers() {
        let lp = build_flow_lp(&Graph::path(4), &[0, 3], 2).unwrap();
        assert!(solve_flow_lp(&lp).is_err());
    }

    #[test]
    fn explicit_agrees_with_columns() {
        let cases = [
            (Graph::complete(4), vec![0, 1, 2, 3], 1),
            (Graph::complete(4), vec![0, 1, 2, 3], 3),
            (Graph::path(4), vec![0, 1, 2, 3], 3),
            (Graph::star(5), vec![1, 2, 3, 4], 2),
            (Graph::cycle(5), vec![0, 2, 3], 2),
            (Graph::cycle(6), vec![0, 1, 2, 3, 4, 5], 4),
            (Graph::grid(2, 3), vec![0, 2, 3, 5], 3),
        ];
        for (g, w, l) in cases {
            let lp = build_flow_lp(&g, &w, l).unwrap();
            let a = solve_flow_lp(&lp).unwrap();
            let b = solve_flow_lp_explicit(&lp).unwrap();
            a.check(&lp, 1e-6).unwrap();
            b.check(&lp, 1e-6).unwrap();
            assert!((a.z - b.z).abs() < 1e-6, "{g:?} {w:?} {l}: {} vs {}", a.z, b.z);
        }
    }

    #[test]
    fn loop_removal() {
        assert_eq!(remove_loops(&[0, 1, 2, 1, 3]), vec![0, 1, 3]);
        assert_eq!(remove_loops(&[0, 1, 0, 2]), vec![0, 2]);
    }
}
