use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use clusterlr::bounds::{
    combinatorial_bound, evaluate_dominance, random_instance, standard_lr_bound, BoundParams, DominanceModel,
};
use clusterlr::causal::term_vanishing_check;
use clusterlr::cluster_sim::{operator_expansion, plan, simulate_expectation, PlanRequest, SimOptions};
use clusterlr::lattice::{build_square_lattice_with, chain, enumerate_clusters_up_to, tile_boxes, Boundary, FactorGraph};
use clusterlr::operators::{
    build_named_hamiltonian, exact_expectation, heisenberg_evolve, LocalOperator, ModelParams, Pauli, State,
};
use clusterlr::ssb::{
    ghz_splitting, nested_identity_check, parity_defect, random_symmetric_hamiltonian, rk_disorder_direct,
    rk_disorder_enumerate, rk_disorder_transfer, DisorderRegion, RkState,
};
use clusterlr::{Hamiltonian, Hamiltonian32, Operator32};

fn pauli(k: u8) -> Pauli {
    [Pauli::X, Pauli::Y, Pauli::Z][k as usize % 3]
}

fn tfim(g: &FactorGraph, j: f64, field: f64) -> Hamiltonian {
    let p: ModelParams = [("J".to_string(), j), ("g".to_string(), field)].into();
    build_named_hamiltonian("tfim", g, &p).unwrap()
}

/// Connected graph: a random spanning tree plus extra edges.
fn connected_graph() -> impl Strategy<Value = FactorGraph> {
    (2usize..=10)
        .prop_flat_map(|n| {
            let parents: Vec<BoxedStrategy<usize>> = (1..n).map(|v| (0..v).boxed()).collect();
            (Just(n), parents, prop::collection::vec((0..n, 0..n), 0..n))
        })
        .prop_map(|(n, parents, extra)| {
            let mut edges: Vec<Vec<usize>> =
                parents.iter().enumerate().map(|(i, &p)| vec![p, i + 1]).collect();
            edges.extend(extra.into_iter().filter(|(a, b)| a != b).map(|(a, b)| vec![a.min(b), a.max(b)]));
            FactorGraph::new(n, edges, 1).unwrap()
        })
}

/// Connected subsets containing `root`, by growing every subset via BFS.
fn subsets_by_scan(adj: &[Vec<usize>], root: usize, m_max: usize) -> Vec<usize> {
    let n = adj.len();
    let mut counts = vec![0; m_max + 1];
    for mask in 0u32..(1 << n) {
        let size = mask.count_ones() as usize;
        if mask >> root & 1 == 0 || size > m_max {
            continue;
        }
        let mut seen = 1u32 << root;
        let mut stack = vec![root];
        while let Some(v) = stack.pop() {
            for &u in &adj[v] {
                if mask >> u & 1 == 1 && seen >> u & 1 == 0 {
                    seen |= 1 << u;
                    stack.push(u);
                }
            }
        }
        if seen == mask {
            counts[size] += 1;
        }
    }
    counts
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn cluster_counts_match_scan_and_cap(g in connected_graph(), root_pick in 0usize..10, m_max in 1usize..=5) {
        let root = root_pick % g.num_vertices();
        let levels = enumerate_clusters_up_to(g.adjacency(), root, m_max, 1 << 30).unwrap();
        let scan = subsets_by_scan(g.adjacency(), root, m_max);
        let delta = g.max_neighbor_count() as f64;
        for (k, level) in levels.iter().enumerate() {
            let m = k + 1;
            prop_assert_eq!(level.len(), scan[m]);
            prop_assert!(level.len() as f64 <= (std::f64::consts::E * delta).powi(m as i32));
            for c in level {
                prop_assert!(c.contains(root));
            }
        }
    }

    #[test]
    fn operator_expansion_is_complete(t in 0.0f64..1.0, field in 0.2f64..1.5, p in 0u8..3, site in 0usize..2) {
        let g = chain(6).unwrap();
        let h = tfim(&g, 1.0, field);
        let a = LocalOperator::pauli(pauli(p), site);
        let tiling = tile_boxes(&g, 2, 0).unwrap();
        let all: Vec<usize> = (0..6).collect();
        let pieces = operator_expansion(&h, &a, &tiling, tiling.num_boxes(), t).unwrap();
        let mut sum = LocalOperator::new(all.clone(), clusterlr::Matrix::zeros(64, 64)).unwrap();
        for (_, piece) in &pieces {
            sum = sum.add(&piece.on_support(&all).unwrap());
        }
        let exact = heisenberg_evolve(&h, &a, t, &all).unwrap().on_support(&all).unwrap();
        prop_assert!(sum.max_abs_diff(&exact) < 1e-10);
    }

    #[test]
    fn full_expansion_matches_oracle_and_is_deterministic(t in 0.0f64..1.0, bits in prop::collection::vec(any::<bool>(), 6)) {
        let g = chain(6).unwrap();
        let h = tfim(&g, 0.8, 1.1);
        let a = LocalOperator::pauli(Pauli::Z, 0);
        let rho = State::basis(&bits);
        let pl = plan(&BoundParams::default(), &g, 0, t, &PlanRequest::desk(2, 3)).unwrap();
        let first = simulate_expectation(&h, &a, &rho, t, &pl, &SimOptions::default()).unwrap();
        let second = simulate_expectation(&h, &a, &rho, t, &pl, &SimOptions::default()).unwrap();
        prop_assert_eq!(first.estimate.to_bits(), second.estimate.to_bits());
        let exact = exact_expectation(&h, &a, &rho, t).unwrap();
        prop_assert!((first.estimate - exact).abs() < 1e-10);
    }

    #[test]
    fn nested_identity_holds(seed in any::<u64>(), n in 1usize..=5, t in -1.5f64..1.5, o_site in 0usize..5, p in 0u8..3, vs in prop::collection::btree_set(0usize..5, 1..=3)) {
        let h = random_symmetric_hamiltonian::<f64>(n, seed).unwrap();
        let o = LocalOperator::pauli(pauli(p), o_site % n);
        let v_list: Vec<usize> = vs.into_iter().filter(|&v| v < n).collect();
        prop_assume!(!v_list.is_empty());
        let r = nested_identity_check(&h, t, &o, &v_list).unwrap();
        prop_assert!(r.gap < 1e-10, "gap {}", r.gap);
    }

    #[test]
    fn rk_evaluators_agree(n in 3usize..=10, beta in 0.0f64..1.2, start in 0usize..10, len in 1usize..10) {
        let ring = build_square_lattice_with(1, n, 1, Boundary::Periodic).unwrap();
        let s = RkState::new(beta, ring).unwrap();
        let vertices: Vec<usize> = (0..len.min(n)).map(|k| (start + k) % n).collect();
        let region = DisorderRegion::new(&s, vertices).unwrap();
        let a = rk_disorder_enumerate(&s, &region).unwrap();
        let b = rk_disorder_transfer(&s, &region).unwrap();
        let c = rk_disorder_direct(&s, &region).unwrap();
        prop_assert!((a - b).abs() < 1e-12 && (a - c).abs() < 1e-12, "{a} {b} {c}");
        prop_assert!(a > 0.0 && a <= 1.0 + 1e-12);
    }

    #[test]
    fn ghz_sectors_respect_spin_flip(seed in any::<u64>(), n in 1usize..=6) {
        let h = random_symmetric_hamiltonian::<f64>(n, seed).unwrap();
        let dense = h.dense();
        prop_assert!(parity_defect(&dense) < 1e-14);
        let split = ghz_splitting(&h).unwrap();
        let ground = dense.eigvalsh()[0];
        prop_assert!((split.even.min(split.odd) - ground).abs() < 1e-10);
        prop_assert!((split.delta - (split.even - split.odd).abs()).abs() < 1e-15);
    }

    #[test]
    fn small_instances_are_dominated(seed in any::<u64>(), l in 4usize..=7, tfim_model in any::<bool>()) {
        let g = chain(l).unwrap();
        let model = if tfim_model { DominanceModel::Tfim } else { DominanceModel::Random2Local };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_instance(&mut rng, &g, model, "p".into()).unwrap();
        let row = evaluate_dominance(&inst).unwrap();
        prop_assert!(row.dominated(), "{row:?}");
    }

    #[test]
    fn non_causal_sequences_vanish(seq in prop::collection::vec(0usize..7, 1..=5), pa in 0u8..3, po in 0u8..3) {
        let g = chain(4).unwrap();
        let p: ModelParams = [("seed".to_string(), 5.0), ("scale".to_string(), 0.7)].into();
        let h: Hamiltonian = build_named_hamiltonian("random2local", &g, &p).unwrap();
        let a = LocalOperator::pauli(pauli(pa), 0);
        let o = LocalOperator::pauli(pauli(po), 3);
        let (forest, norm) = term_vanishing_check(&h, &seq, &[0], &[vec![3]], &a, &[o]).unwrap();
        if forest.map_or(true, |f| !f.is_causal()) {
            prop_assert!(norm <= 1e-12, "norm {norm}");
        }
    }

    #[test]
    fn closed_form_bounds_are_monotone(t1 in 0.0f64..0.2, dt in 0.0f64..0.1, dist in 1usize..8) {
        let p = BoundParams::default();
        let regions = [(2, 1, 4)];
        let a = combinatorial_bound(&p, &regions, t1).unwrap();
        let b = combinatorial_bound(&p, &regions, t1 + dt).unwrap();
        prop_assert!(a <= b);
        let near = standard_lr_bound(&p, 2, 2, dist, t1).unwrap();
        let far = standard_lr_bound(&p, 2, 2, dist + 1, t1).unwrap();
        prop_assert!(far < near);
    }
}

#[test]
fn single_precision_evolution_tracks_double() {
    let g = chain(5).unwrap();
    let p: ModelParams = [("J".to_string(), 1.0), ("g".to_string(), 0.7)].into();
    let h64 = tfim(&g, 1.0, 0.7);
    let h32: Hamiltonian32 = build_named_hamiltonian("tfim", &g, &p).unwrap();
    let rho64 = State::<f64>::all_zero(5);
    let rho32 = State::<f32>::all_zero(5);
    let a64 = LocalOperator::pauli(Pauli::Z, 2);
    let a32: Operator32 = LocalOperator::pauli(Pauli::Z, 2);
    let e64 = exact_expectation(&h64, &a64, &rho64, 0.6).unwrap();
    let e32 = exact_expectation(&h32, &a32, &rho32, 0.6f32).unwrap();
    assert!((e64 - e32 as f64).abs() < 1e-4, "{e64} vs {e32}");
}
