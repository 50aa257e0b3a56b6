//! Property tests for the serialisation formats and basic algebra.

use proptest::prelude::*;

use wpsim::gf2::{read_sparse, write_sparse, BitMatrix, BitVec};
use wpsim::graph::TannerGraph;

fn arb_matrix() -> impl Strategy<Value = BitMatrix> {
    (1usize..12, 1usize..12).prop_flat_map(|(m, n)| {
        proptest::collection::vec(proptest::collection::vec(any::<bool>(), n), m).prop_map(
            move |rows| {
                let built = rows.iter().map(|r| BitVec::from_bits(r)).collect();
                BitMatrix::from_rows(n, built)
            },
        )
    })
}

proptest! {
    #[test]
    fn sparse_text_round_trips(a in arb_matrix()) {
        let text = write_sparse(&a);
        let back = read_sparse(&text).unwrap();
        prop_assert_eq!(back, a);
    }

    #[test]
    fn transpose_is_involutive_and_rank_preserving(a in arb_matrix()) {
        let t = a.transpose();
        prop_assert_eq!(t.transpose(), a.clone());
        prop_assert_eq!(a.rank_profile().rank, t.rank_profile().rank);
    }

    #[test]
    fn kernel_basis_solves_the_system(a in arb_matrix()) {
        let p = a.rank_profile();
        prop_assert_eq!(p.rank + p.nullity, a.n_cols());
        for b in &p.kernel_basis {
            prop_assert!(a.mul_vec(b).is_zero());
        }
    }

    #[test]
    fn graph_text_round_trips_with_multiplicities(
        edges in proptest::collection::vec((0usize..6, 0usize..5), 0..20)
    ) {
        let g = TannerGraph::new(6, 5, &edges);
        let back = TannerGraph::read_sparse(&g.write_sparse()).unwrap();
        prop_assert_eq!(back, g);
    }

    #[test]
    fn bit_string_round_trips(bits in proptest::collection::vec(any::<bool>(), 0..200)) {
        let v = BitVec::from_bits(&bits);
        let s = v.to_bit_string();
        prop_assert_eq!(BitVec::from_bit_string(&s).unwrap(), v);
    }
}
