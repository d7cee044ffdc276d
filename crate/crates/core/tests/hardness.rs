use tokensched::brute::{brute_opt_with, BruteConfig};
use tokensched::gen::erdos_renyi;
use tokensched::hardness::{
    ds_from_schedule, guess_tm, is_dominating, mds_apx, psi_transform, schedule_from_dominating_set,
    ApproxScheduler, BruteScheduler, DominatingSet,
};
use tokensched::{validate_schedule, Graph};

fn gadget_oracle() -> BruteConfig {
    BruteConfig { max_nodes: 10, max_cost: 13, max_expansions: 50_000_000 }
}

#[test]
fn gadget_counts_on_random_graphs() {
    for seed in 0..20 {
        let n = 2 + seed as usize % 9;
        let g = erdos_renyi(n, 0.4, seed).unwrap();
        for tm in 1..4 {
            let gd = psi_transform(&g, tm).unwrap();
            let delta = g.max_degree();
            assert_eq!(gd.graph.n(), n + 2 + delta + tm);
            assert_eq!(gd.graph.m(), g.m() + gd.graph.n() - 1);
            assert_eq!(gd.beta.len(), delta + tm);
            for &b in gd.beta.iter().chain([&gd.d_star]) {
                assert_eq!(gd.graph.neighbors(b), &[gd.a]);
            }
        }
    }
}

#[test]
fn trivial_dominating_set_schedule() {
    for g in [Graph::path(5), Graph::star(6), Graph::cycle(6), Graph::complete(4)] {
        let tm = 2;
        let gd = psi_transform(&g, tm).unwrap();
        let ds = DominatingSet::new(&g, 0..g.n()).unwrap();
        let s = schedule_from_dominating_set(&gd, &ds).unwrap();
        assert!(validate_schedule(&gd.graph, gd.params(), &s).unwrap().valid);
        assert!(s.length <= 2 * tm + g.max_degree() + g.n());
    }
}

#[test]
fn edge_with_one_copy() {
    // Delta = 1, eps = 1: one copy; recovery is the set of base nodes sending to a
    let g = Graph::path(2);
    let gd = psi_transform(&g, 4).unwrap();
    let s = schedule_from_dominating_set(&gd, &DominatingSet::new(&g, [1]).unwrap()).unwrap();
    assert!(s.length < 12);
    assert_eq!(ds_from_schedule(&gd, &g, &s).unwrap().kappa, vec![1]);
}

#[test]
fn optimal_gadget_schedule_gives_small_set() {
    // k_hat = 2 for the single edge: t_m = 4, 9 nodes
    let g = Graph::path(2);
    let tm = guess_tm(1, 2, 1.0);
    let gd = psi_transform(&g, tm).unwrap();
    let o = brute_opt_with(&gd.graph, gd.params(), Some(3 * tm - 1), &gadget_oracle()).unwrap();
    let ds = ds_from_schedule(&gd, &g, &o.schedule).unwrap();
    assert!(ds.is_valid(&g));
    assert!(ds.len() < o.opt_length - 2 * tm);
}

#[test]
fn mds_on_an_edge_with_the_oracle() {
    let out = mds_apx(&Graph::path(2), &BruteScheduler { config: gadget_oracle() }, 1.0).unwrap();
    assert_eq!(out.set.len(), 1);
    assert!(!out.trivial);
}

#[test]
#[ignore = "the 15-node gadget for K_3 is beyond the brute-force budget"]
fn mds_on_triangle_with_the_oracle() {
    let cfg = BruteConfig { max_nodes: 16, ..gadget_oracle() };
    let out = mds_apx(&Graph::complete(3), &BruteScheduler { config: cfg }, 1.0).unwrap();
    assert_eq!(out.set.len(), 1);
}

#[test]
fn mds_with_the_approximation_always_dominates() {
    for g in [Graph::path(4), Graph::cycle(5), Graph::star(5), Graph::grid(2, 3)] {
        let out = mds_apx(&g, &ApproxScheduler { seed: 4 }, 1.0).unwrap();
        assert!(is_dominating(&g, &out.set.kappa));
    }
}
