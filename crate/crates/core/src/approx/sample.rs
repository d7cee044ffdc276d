//! Randomized rounding of the flow LP into undirected paths.

use rand::{Rng, RngExt};

use super::lp::FlowSolution;
use crate::graph::NodeId;

const MAX_RETRIES: usize = 100;
const DEAD_END: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct SampledPaths {
    /// Kept paths; each starts at its owner `w` and ends at another `W` vertex.
    pub paths: Vec<Vec<NodeId>>,
    /// Index of the sample that was kept.
    pub sample: usize,
    pub samples: usize,
    /// Congestion cap used to filter paths.
    pub threshold: f64,
}

/// `ceil(4 log2 n) + 1`.
pub fn sample_count(n: usize) -> usize {
    (4.0 * (n.max(1) as f64).log2()).ceil() as usize + 1
}

fn pick<R: Rng>(rng: &mut R, weights: impl Iterator<Item = f64> + Clone) -> Option<usize> {
    let total: f64 = weights.clone().sum();
    if total < DEAD_END {
        return None;
    }
    let mut x = rng.random::<f64>() * total;
    let mut last = None;
    for (i, w) in weights.enumerate() {
        if w <= 0.0 {
            continue;
        }
        last = Some(i);
        if x < w {
            return Some(i);
        }
        x -= w;
    }
    last
}

/// One walk of commodity `k`, or `None` if it dead-ends, runs past the last
/// layer or comes back to its origin.
fn walk<R: Rng>(flow: &FlowSolution, k: usize, in_w: &[bool], rng: &mut R) -> Option<Vec<NodeId>> {
    let w = flow.w[k];
    let layers = flow.layers;
    let emit = |r: usize| flow.out_arcs(k, r, w).iter().map(|a| a.1).sum::<f64>();
    let mut r = pick(rng, (0..layers).map(emit))?;
    let mut path = vec![w];
    let mut at = w;
    loop {
        if r >= layers {
            return None;
        }
        let arcs = flow.out_arcs(k, r, at);
        let i = pick(rng, arcs.iter().map(|a| a.1))?;
        let next = arcs[i].0;
        r += 1;
        if next == w {
            return None;
        }
        if in_w[next] {
            path.push(next);
            return Some(path);
        }
        match path.iter().position(|&x| x == next) {
            Some(i) => path.truncate(i + 1),
            None => path.push(next),
        }
        at = next;
    }
}

/// Draws `sample_count(n)` samples of one walk per `W` vertex and keeps the
/// sample with the most paths whose congestion stays under
/// `10 z log2(max(L, 2))`.
pub fn sample_paths<R: Rng>(flow: &FlowSolution, n: usize, rng: &mut R) -> SampledPaths {
    let mut in_w = vec![false; n];
    for &v in &flow.w {
        in_w[v] = true;
    }
    let threshold = 10.0 * flow.z * (flow.layers.max(2) as f64).log2();
    let samples = sample_count(n);
    let mut best = SampledPaths { paths: Vec::new(), sample: 0, samples, threshold };
    for s in 0..samples {
        let mut paths = Vec::new();
        for k in 0..flow.w.len() {
            if let Some(p) = (0..MAX_RETRIES).find_map(|_| walk(flow, k, &in_w, rng)) {
                paths.push(p);
            }
        }
        let mut load = vec![0usize; n];
        for v in paths.iter().flatten() {
            load[*v] += 1;
        }
        let kept: Vec<Vec<NodeId>> = paths
            .into_iter()
            .filter(|p| p.iter().map(|&v| load[v]).max().unwrap_or(0) as f64 <= threshold)
            .collect();
        if kept.len() > best.paths.len() || s == 0 {
            best = SampledPaths { paths: kept, sample: s, samples, threshold };
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approx::{build_flow_lp, solve_flow_lp, stream};
    use crate::graph::Graph;

    #[test]
    fn k2_paths() {
        let g = Graph::complete(2);
        let flow = solve_flow_lp(&build_flow_lp(&g, &[0, 1], 1).unwrap()).unwrap();
        let s = sample_paths(&flow, 2, &mut stream(1, 0, 0));
        assert_eq!(s.paths, vec![vec![0, 1], vec![1, 0]]);
    }

    #[test]
    fn paths_end_in_w_within_layers() {
        let g = Graph::grid(3, 4);
        let w = [0, 3, 5, 6, 8, 11];
        for l in [4, 8] {
            let flow = solve_flow_lp(&build_flow_lp(&g, &w, l).unwrap()).unwrap();
            for seed in 0..20 {
                let s = sample_paths(&flow, g.n(), &mut stream(seed, 0, 0));
                for p in &s.paths {
                    assert!(w.contains(&p[0]) && w.contains(p.last().unwrap()));
                    assert_ne!(p[0], *p.last().unwrap());
                    assert!(p.len() - 1 <= l);
                    assert!(p.windows(2).all(|e| g.has_edge(e[0], e[1])));
                }
            }
        }
    }

    #[test]
    fn sample_count_values() {
        assert_eq!(sample_count(2), 5);
        assert_eq!(sample_count(16), 17);
    }
}
