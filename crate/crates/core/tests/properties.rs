use cornerwalk::photonic::{compile_step, simulate_layout};
use cornerwalk::walk::unitarity_residual;
use cornerwalk::*;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn site_index_round_trips(half in 2usize..12, x in 1usize..24, y in 1usize..24) {
        let g = LatticeGeometry::new(2 * half).unwrap();
        prop_assume!(g.contains(x, y));
        let i = g.site_index(x, y).unwrap();
        prop_assert_eq!(g.site_coords(i).unwrap(), (x, y));
    }

    #[test]
    fn step_is_unitary_and_norm_preserving(j1 in -3.0f64..3.0, j2 in -3.0f64..3.0, x in 1usize..=6, y in 1usize..=6) {
        let g = LatticeGeometry::new(6).unwrap();
        let step = build_one_step(&g, &CouplingParams::new(j1, j2).unwrap());
        prop_assert!(unitarity_residual(&step.to_dense()) < 1e-12);
        let psi = apply(&step, &localized_state(x, y, &g).unwrap()).unwrap();
        prop_assert!((psi.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn layout_matches_step(j1 in -3.0f64..3.0, j2 in -3.0f64..3.0) {
        let g = LatticeGeometry::new(4).unwrap();
        let cp = CouplingParams::new(j1, j2).unwrap();
        let u = simulate_layout(&compile_step(&g, &cp)).unwrap();
        let diff = cornerwalk::linalg::max_abs_diff(&u, &build_one_step(&g, &cp).to_dense());
        prop_assert!(diff < 1e-12);
    }

    #[test]
    fn disorder_is_reproducible(seed in any::<u64>(), w in 0.0f64..6.0, r in 0u64..50) {
        let g = LatticeGeometry::new(4).unwrap();
        let dc = DisorderConfig::new(w, seed, 10).unwrap();
        let a = walk::disorder_phases(&g, &dc, r);
        prop_assert_eq!(&a, &walk::disorder_phases(&g, &dc, r));
        prop_assert!(a.iter().all(|p| p.abs() <= w / 2.0));
    }
}
