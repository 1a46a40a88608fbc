mod common;

use common::*;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn m_and_weight_are_subadditive(f in any_family(9), u in any_point(30), v in any_point(30)) {
        m_subadditive(&f, u, v)?;
    }

    #[test]
    fn reduction_over_fp_is_certified_and_linear(
        f in any_family(4),
        p in prop::sample::select(vec![5u64, 7, 11, 13]),
        lambda in 1u64..13,
        u in any_point(8),
        v in any_point(8),
        s in 0u64..100,
        t in 0u64..100,
    ) {
        certificate_linear_fp(&f, p, lambda, u, v, s, t)?;
    }

    #[test]
    fn reduction_over_rational_functions_is_certified_and_linear(
        f in any_family(3),
        u in any_point(4),
        v in any_point(4),
        s in -5i64..5,
        t in -5i64..5,
    ) {
        certificate_linear_q(&f, u, v, s, t)?;
    }

    #[test]
    fn smith_form_and_kernel(
        shape in prop::sample::select(vec![(2usize, 3usize), (2, 4), (3, 4), (3, 3), (2, 2)]),
        entries in prop::collection::vec(-12i64..12, 12),
    ) {
        snf_and_kernel(shape.0, shape.1, &entries)?;
    }

    #[test]
    fn relation_lattice_is_bc_ad_ab(f in any_family(12)) {
        lattice_matches(&f)?;
    }

    #[test]
    fn splitting_coefficients_obey_the_valuation_bound(p in prop::sample::select(vec![3u64, 5]), i in 0usize..=30) {
        theta_bound(p, i)?;
    }

    #[test]
    fn newton_polygon_lies_on_or_above_hodge((f, p, l) in small_case()) {
        newton_above_hodge(&f, p, l)?;
    }

    #[test]
    fn frobenius_solutions_are_annihilated(which in 0usize..3, order in 1usize..9) {
        solutions_vanish(which, order)?;
    }
}
