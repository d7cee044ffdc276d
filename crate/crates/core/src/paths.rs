//! Directed source-to-sink vertex paths.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DirectedPathSet {
    pub paths: Vec<Vec<NodeId>>,
}

impl DirectedPathSet {
    pub fn new(paths: Vec<Vec<NodeId>>) -> Self {
        DirectedPathSet { paths }
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn sources(&self) -> Vec<NodeId> {
        self.paths.iter().map(|p| p[0]).collect()
    }

    pub fn sinks(&self) -> Vec<NodeId> {
        self.paths.iter().map(|p| *p.last().unwrap()).collect()
    }

    /// Maximum number of path occurrences at any vertex.
    pub fn con(&self) -> usize {
        let mut load = std::collections::HashMap::new();
        for v in self.paths.iter().flatten() {
            *load.entry(*v).or_insert(0usize) += 1;
        }
        load.into_values().max().unwrap_or(0)
    }

    /// Maximum hop count.
    pub fn dil(&self) -> usize {
        self.paths.iter().map(|p| p.len().saturating_sub(1)).max().unwrap_or(0)
    }

    /// Every path walks graph edges from a `W` vertex to a different `W`
    /// vertex; sources are pairwise distinct and so are sinks. With `simple`
    /// no path repeats a vertex; with `routable` no vertex is an endpoint of
    /// two paths, as Route-and-Compute requires.
    pub fn check(&self, g: &Graph, w: &[NodeId], simple: bool, routable: bool) -> Result<()> {
        let wset: BTreeSet<_> = w.iter().copied().collect();
        let (mut srcs, mut snks) = (BTreeSet::new(), BTreeSet::new());
        for p in &self.paths {
            let bad = |m: &str| Error::Internal(format!("path {p:?}: {m}"));
            if p.len() < 2 {
                return Err(bad("needs at least one hop"));
            }
            let (s, t) = (p[0], *p.last().unwrap());
            if !wset.contains(&s) || !wset.contains(&t) || s == t {
                return Err(bad("endpoints must be distinct members of W"));
            }
            if p.windows(2).any(|e| !g.has_edge(e[0], e[1])) {
                return Err(bad("uses a non-edge"));
            }
            if simple && p.iter().collect::<BTreeSet<_>>().len() != p.len() {
                return Err(bad("repeats a vertex"));
            }
            if !srcs.insert(s) || !snks.insert(t) {
                return Err(bad("shares an endpoint with another path"));
            }
            if routable && (snks.contains(&s) || srcs.contains(&t)) {
                return Err(bad("endpoint is also an endpoint of another path"));
            }
        }
        Ok(())
    }
}
