use tokensched::optcomplete::{baseline_lengths, optimal_tree, opt_complete, r_star};
use tokensched::{validate_schedule, ActionKind, Graph, NetworkParams};

fn p(tc: usize, tm: usize) -> NetworkParams {
    NetworkParams::new(tc, tm).unwrap()
}

#[test]
fn k7_beats_pipelined_binary_tree() {
    let s = opt_complete(7, p(1, 1));
    assert_eq!(s.length, 5);
    assert!(baseline_lengths(7, p(1, 1)).pipelined_binary >= 6);
}

#[test]
fn sends_form_a_spanning_tree() {
    for (tc, tm) in [(1, 1), (2, 1), (1, 3), (3, 2)] {
        for n in [2, 9, 33, 100] {
            let s = opt_complete(n, p(tc, tm));
            let edges: Vec<(usize, usize)> = s
                .actions
                .iter()
                .filter_map(|a| match a.kind {
                    ActionKind::Send { to, .. } => Some((a.node.min(to), a.node.max(to))),
                    ActionKind::Compute => None,
                })
                .collect();
            assert_eq!(edges.len(), n - 1);
            let t = Graph::from_edges(n, edges).unwrap();
            assert!(t.is_connected());
            assert!(validate_schedule(&Graph::complete(n), p(tc, tm), &s).unwrap().valid);
            assert_eq!(s.length, r_star(n, p(tc, tm)));
            assert_eq!(optimal_tree(n, p(tc, tm)).size(), n);
        }
    }
}

#[test]
fn stats_row_sixteen() {
    let b = baseline_lengths(16, p(2, 1));
    assert_eq!(b.optimal, 11);
    assert_eq!(b.compute_lb, 8);
}
