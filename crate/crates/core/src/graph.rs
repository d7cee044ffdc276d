//! Undirected simple graphs and the text graph format.

use std::collections::VecDeque;
use std::fmt::Write as _;

use crate::error::{Error, Result};

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Graph {
    adj: Vec<Vec<NodeId>>,
    m: usize,
}

impl Graph {
    pub fn new(n: usize) -> Self {
        Graph { adj: vec![Vec::new(); n], m: 0 }
    }

    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (NodeId, NodeId)>,
    {
        let mut g = Graph::new(n);
        for (u, v) in edges {
            g.add_edge(u, v)?;
        }
        Ok(g)
    }

    pub fn add_edge(&mut self, u: NodeId, v: NodeId) -> Result<()> {
        let n = self.n();
        if u >= n || v >= n {
            return Err(Error::Graph(format!("edge ({u},{v}) out of range for n={n}")));
        }
        if u == v {
            return Err(Error::Graph(format!("self-loop at {u}")));
        }
        match self.adj[u].binary_search(&v) {
            Ok(_) => return Err(Error::Graph(format!("duplicate edge ({u},{v})"))),
            Err(pos) => self.adj[u].insert(pos, v),
        }
        let pos = self.adj[v].binary_search(&u).unwrap_err();
        self.adj[v].insert(pos, u);
        self.m += 1;
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Sorted neighbor list.
    pub fn neighbors(&self, v: NodeId) -> &[NodeId] {
        &self.adj[v]
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        u < self.n() && self.adj[u].binary_search(&v).is_ok()
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.adj[v].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Edges with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(u, ns)| ns.iter().filter(move |&&v| u < v).map(move |&v| (u, v)))
    }

    /// Hop distances from `src`; `None` for unreachable nodes.
    pub fn bfs(&self, src: NodeId) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.n()];
        let mut queue = VecDeque::new();
        dist[src] = Some(0);
        queue.push_back(src);
        while let Some(u) = queue.pop_front() {
            let d = dist[u].unwrap();
            for &v in &self.adj[u] {
                if dist[v].is_none() {
                    dist[v] = Some(d + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Shortest path from `src` to `dst`. Among shortest paths the one found by
    /// BFS with ascending neighbor order is returned.
    pub fn shortest_path(&self, src: NodeId, dst: NodeId) -> Option<Vec<NodeId>> {
        let mut parent = vec![usize::MAX; self.n()];
        let mut queue = VecDeque::new();
        parent[src] = src;
        queue.push_back(src);
        while let Some(u) = queue.pop_front() {
            if u == dst {
                break;
            }
            for &v in &self.adj[u] {
                if parent[v] == usize::MAX {
                    parent[v] = u;
                    queue.push_back(v);
                }
            }
        }
        if parent[dst] == usize::MAX {
            return None;
        }
        let mut path = vec![dst];
        let mut cur = dst;
        while cur != src {
            cur = parent[cur];
            path.push(cur);
        }
        path.reverse();
        Some(path)
    }

    pub fn is_connected(&self) -> bool {
        self.n() <= 1 || self.bfs(0).iter().all(Option::is_some)
    }

    /// Eccentricity of every node. Errors on a disconnected graph.
    pub fn eccentricities(&self) -> Result<Vec<usize>> {
        (0..self.n())
            .map(|v| {
                self.bfs(v)
                    .into_iter()
                    .try_fold(0, |acc, d| d.map(|d| acc.max(d)))
                    .ok_or(Error::Disconnected)
            })
            .collect()
    }

    pub fn diameter(&self) -> Result<usize> {
        Ok(self.eccentricities()?.into_iter().max().unwrap_or(0))
    }

    pub fn radius(&self) -> Result<usize> {
        Ok(self.eccentricities()?.into_iter().min().unwrap_or(0))
    }

    /// `k` disjoint copies; copy `i` holds nodes `i*n .. (i+1)*n`.
    pub fn disjoint_copies(&self, k: usize) -> Graph {
        let n = self.n();
        let mut g = Graph::new(n * k);
        for i in 0..k {
            for (u, v) in self.edges() {
                g.add_edge(i * n + u, i * n + v).unwrap();
            }
        }
        g
    }

    pub fn complete(n: usize) -> Graph {
        let mut g = Graph::new(n);
        for u in 0..n {
            for v in u + 1..n {
                g.add_edge(u, v).unwrap();
            }
        }
        g
    }

    pub fn path(n: usize) -> Graph {
        Graph::from_edges(n, (1..n).map(|v| (v - 1, v))).unwrap()
    }

    pub fn cycle(n: usize) -> Graph {
        let mut g = Graph::path(n);
        if n >= 3 {
            g.add_edge(0, n - 1).unwrap();
        }
        g
    }

    /// Star on `n` nodes with hub 0.
    pub fn star(n: usize) -> Graph {
        Graph::from_edges(n, (1..n).map(|v| (0, v))).unwrap()
    }

    pub fn grid(rows: usize, cols: usize) -> Graph {
        let mut g = Graph::new(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                let v = r * cols + c;
                if c + 1 < cols {
                    g.add_edge(v, v + 1).unwrap();
                }
                if r + 1 < rows {
                    g.add_edge(v, v + cols).unwrap();
                }
            }
        }
        g
    }

    pub fn parse(text: &str) -> Result<Graph> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hline, header) = lines.next().ok_or(Error::Parse { line: 0, msg: "empty graph file".into() })?;
        let nums = parse_fields(hline, header, 2)?;
        let (n, m) = (nums[0], nums[1]);
        let mut g = Graph::new(n);
        let mut count = 0;
        for (line, l) in lines {
            let f = parse_fields(line, l, 2)?;
            let (u, v) = (f[0], f[1]);
            if !(u < v && v < n) {
                return Err(Error::Parse { line, msg: format!("edge must satisfy 0 <= u < v < {n}") });
            }
            g.add_edge(u, v).map_err(|e| Error::Parse { line, msg: e.to_string() })?;
            count += 1;
        }
        if count != m {
            return Err(Error::Parse { line: hline, msg: format!("header declares {m} edges, found {count}") });
        }
        Ok(g)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.n(), self.m());
        for (u, v) in self.edges() {
            writeln!(s, "{u} {v}").unwrap();
        }
        s
    }
}

fn parse_fields(line: usize, text: &str, want: usize) -> Result<Vec<usize>> {
    let fields: Vec<&str> = text.split_whitespace().collect();
    if fields.len() != want {
        return Err(Error::Parse { line, msg: format!("expected {want} integers, got {:?}", text) });
    }
    fields
        .iter()
        .map(|f| f.parse::<usize>().map_err(|e| Error::Parse { line, msg: format!("{f:?}: {e}") }))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_roundtrip() {
        let g = Graph::parse("# path\n3 2\n0 1\n1 2\n").unwrap();
        assert_eq!(g, Graph::path(3));
        assert_eq!(Graph::parse(&g.to_text()).unwrap(), g);
    }

    #[test]
    fn parse_rejects_bad_edges() {
        assert!(Graph::parse("2 1\n1 0\n").is_err());
        assert!(Graph::parse("2 1\n0 2\n").is_err());
        assert!(Graph::parse("3 2\n0 1\n0 1\n").is_err());
        assert!(Graph::parse("3 2\n0 1\n").is_err());
        assert!(Graph::parse("3 1\n0 1 x\n").is_err());
    }

    #[test]
    fn metrics() {
        assert_eq!(Graph::complete(7).radius().unwrap(), 1);
        assert_eq!(Graph::path(3).diameter().unwrap(), 2);
        assert_eq!(Graph::path(3).radius().unwrap(), 1);
        assert_eq!(Graph::cycle(5).diameter().unwrap(), 2);
        assert_eq!(Graph::grid(2, 3).m(), 7);
        assert_eq!(Graph::new(2).diameter(), Err(Error::Disconnected));
        assert_eq!(Graph::path(4).shortest_path(3, 0).unwrap(), vec![3, 2, 1, 0]);
    }
}
