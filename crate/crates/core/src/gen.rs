//! Random instances.

use rand::RngExt;

use crate::approx::stream;
use crate::error::{Error, Result};
use crate::graph::Graph;

const MAX_TRIES: u64 = 10_000;

/// `G(n, prob)`, redrawn until connected. Draw `i` uses sub-stream `i` of
/// `seed`, so the result depends only on the arguments.
pub fn erdos_renyi(n: usize, prob: f64, seed: u64) -> Result<Graph> {
    if !(0.0..=1.0).contains(&prob) {
        return Err(Error::Params(format!("edge probability {prob} not in [0, 1]")));
    }
    for attempt in 0..MAX_TRIES {
        let mut rng = stream(seed, 0x6e, attempt);
        let mut g = Graph::new(n);
        for u in 0..n {
            for v in u + 1..n {
                if rng.random::<f64>() < prob {
                    g.add_edge(u, v)?;
                }
            }
        }
        if g.is_connected() {
            return Ok(g);
        }
    }
    Err(Error::Params(format!("no connected G({n}, {prob}) after {MAX_TRIES} draws")))
}
