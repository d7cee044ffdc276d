//! Schedule validation and simple bounds.

use std::fmt;

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::schedule::{NetworkParams, Schedule};
use crate::sim::{check_input, run, TokenState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rule {
    /// (a) SEND without a token to send.
    SendWithoutToken,
    /// (b) COMPUTE with fewer than two tokens.
    ComputeWithoutTokens,
    /// (c) overlapping actions on one node.
    Overlap,
    /// (d) window outside `1..=length`.
    OutOfWindow,
    /// (e) more than one token left after the last round.
    NotAggregated,
}

impl Rule {
    pub fn id(&self) -> char {
        match self {
            Rule::SendWithoutToken => 'a',
            Rule::ComputeWithoutTokens => 'b',
            Rule::Overlap => 'c',
            Rule::OutOfWindow => 'd',
            Rule::NotAggregated => 'e',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub round: usize,
    pub node: Option<NodeId>,
    pub rule: Rule,
    pub message: String,
}

impl Violation {
    pub fn new(round: usize, node: Option<NodeId>, rule: Rule, message: String) -> Self {
        Violation { round, node, rule, message }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}) at round {}", self.rule.id(), self.round)?;
        if let Some(v) = self.node {
            write!(f, " node {v}")?;
        }
        write!(f, ": {}", self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationReport {
    pub valid: bool,
    pub violation: Option<Violation>,
    pub final_token_count: usize,
}

/// Checks rules (a) to (e). Malformed actions are reported as `Err`.
pub fn validate_schedule(g: &Graph, p: NetworkParams, s: &Schedule) -> Result<ValidationReport> {
    check_input(g, s)?;
    let report = match run(g, p, s, &TokenState::singletons(g.n()), |_, _| {}) {
        Err((v, count)) => ValidationReport { valid: false, violation: Some(v), final_token_count: count },
        Ok(eng) => {
            let count = eng.total_tokens();
            let violation = (count != 1).then(|| {
                Violation::new(s.length, None, Rule::NotAggregated, format!("{count} tokens remain"))
            });
            ValidationReport { valid: violation.is_none(), violation, final_token_count: count }
        }
    };
    Ok(report)
}

pub fn ceil_log2(n: usize) -> usize {
    if n <= 1 {
        0
    } else {
        (usize::BITS - (n - 1).leading_zeros()) as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LowerBounds {
    pub compute_lb: usize,
    pub radius_lb: usize,
    pub combined_lb: usize,
}

pub fn lower_bounds(g: &Graph, p: NetworkParams) -> Result<LowerBounds> {
    let compute_lb = p.tc * ceil_log2(g.n());
    let radius_lb = p.tm * g.radius()?;
    Ok(LowerBounds { compute_lb, radius_lb, combined_lb: compute_lb.max(radius_lb) })
}

/// `(n - 1) * (t_c + D * t_m)`: pair, route, merge, repeat.
pub fn trivial_upper_bound(g: &Graph, p: NetworkParams) -> Result<usize> {
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    let d = g.diameter()?;
    Ok(g.n().saturating_sub(1) * (p.tc + d * p.tm))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::Action;

    fn p(tc: usize, tm: usize) -> NetworkParams {
        NetworkParams::new(tc, tm).unwrap()
    }

    #[test]
    fn single_node_empty_schedule() {
        let r = validate_schedule(&Graph::new(1), p(1, 1), &Schedule::empty()).unwrap();
        assert!(r.valid);
        assert_eq!(r.final_token_count, 1);
    }

    #[test]
    fn k2_forced_schedule() {
        let g = Graph::complete(2);
        let s = Schedule::new(vec![Action::send(1, 1, 0), Action::compute(2, 0)], 2);
        assert!(validate_schedule(&g, p(1, 1), &s).unwrap().valid);
    }

    #[test]
    fn rule_violations() {
        let g = Graph::complete(2);
        let check = |s: Schedule, rule: Rule| {
            let r = validate_schedule(&g, p(1, 1), &s).unwrap();
            assert!(!r.valid);
            assert_eq!(r.violation.unwrap().rule, rule);
        };
        check(Schedule::new(vec![Action::compute(1, 0)], 1), Rule::ComputeWithoutTokens);
        check(
            Schedule::new(vec![Action::send(1, 1, 0), Action::send(2, 1, 0)], 3),
            Rule::SendWithoutToken,
        );
        check(Schedule::new(vec![Action::send(1, 1, 0), Action::compute(2, 0)], 1), Rule::OutOfWindow);
        check(Schedule::new(vec![Action::send(1, 1, 0)], 1), Rule::NotAggregated);
        let q = NetworkParams::new(1, 2).unwrap();
        let r = validate_schedule(&g, q, &Schedule::new(vec![Action::send(1, 1, 0), Action::send(2, 1, 0)], 4));
        assert_eq!(r.unwrap().violation.unwrap().rule, Rule::Overlap);
        // the token sent in round 1 only arrives at the start of round 3
        let r = validate_schedule(&g, q, &Schedule::new(vec![Action::send(1, 1, 0), Action::compute(2, 0)], 2));
        assert_eq!(r.unwrap().violation.unwrap().rule, Rule::ComputeWithoutTokens);
    }

    #[test]
    fn malformed_input_is_an_error() {
        let g = Graph::path(3);
        assert!(validate_schedule(&g, p(1, 1), &Schedule::new(vec![Action::send(1, 0, 2)], 1)).is_err());
        assert!(validate_schedule(&g, p(1, 1), &Schedule::new(vec![Action::compute(1, 7)], 1)).is_err());
    }

    #[test]
    fn bounds_examples() {
        let lb = lower_bounds(&Graph::complete(7), p(1, 1)).unwrap();
        assert_eq!((lb.compute_lb, lb.radius_lb, lb.combined_lb), (3, 1, 3));
        let lb = lower_bounds(&Graph::path(3), p(1, 5)).unwrap();
        assert_eq!((lb.compute_lb, lb.radius_lb, lb.combined_lb), (2, 5, 5));
        let lb = lower_bounds(&Graph::new(1), p(1, 1)).unwrap();
        assert_eq!(lb.combined_lb, 0);
        assert_eq!(trivial_upper_bound(&Graph::complete(4), p(1, 1)).unwrap(), 6);
        assert_eq!(trivial_upper_bound(&Graph::new(1), p(1, 1)).unwrap(), 0);
        assert_eq!(trivial_upper_bound(&Graph::path(3), p(2, 1)).unwrap(), 8);
        assert!(lower_bounds(&Graph::new(2), p(1, 1)).is_err());
    }

    #[test]
    fn ceil_log2_values() {
        let v: Vec<usize> = (1..=9).map(ceil_log2).collect();
        assert_eq!(v, vec![0, 1, 2, 2, 3, 3, 3, 3, 4]);
    }
}
