mod support;

use ngc_core::nambu::nambu_bivector;
use proptest::prelude::*;
use support::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn schouten_graded_antisymmetry(c in graded_pair()) {
        check_graded_antisymmetry(c)?;
    }

    #[test]
    fn schouten_jacobi(c in graded_triple()) {
        check_jacobi(c)?;
    }

    #[test]
    fn total_derivatives_commute(c in derivative_case()) {
        check_derivatives_commute(c)?;
    }

    #[test]
    fn phi_is_isomorphism_covariant(c in relabeling(fixture_graphs())) {
        check_phi_covariance(c)?;
    }

    #[test]
    fn rank_plus_nullity_is_cols(rows in matrix(6, 7)) {
        check_rank_nullity(rows)?;
    }

    #[test]
    fn solutions_satisfy_the_system(c in solve_case()) {
        check_solutions(c)?;
    }
}

#[test]
fn lichnerowicz_squares_to_zero_on_hamiltonians() {
    check_lichnerowicz_square().unwrap();
}

#[test]
fn poisson_in_every_dimension() {
    for dim in 2..=4 {
        let m = nambu_bivector(dim).unwrap().multivector().clone();
        let ring = ngc_core::nambu::bracket_ring(dim, &[&m]);
        assert!(m.schouten_bracket(&ring, &m).unwrap().is_zero());
    }
}
