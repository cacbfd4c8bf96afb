//! Random inputs and checks for the property suites (shared with the
//! acceptance target).
#![allow(dead_code)]

use ngc_core::eval::{evaluate, CachedEvaluator, EvalMode, GraphEvaluator};
use ngc_core::fixtures::{FixtureKind, Fixtures};
use ngc_core::graph::permutation_sign;
use ngc_core::jet::{DiffPolynomial, Field, JetVariable, Monomial};
use ngc_core::linalg::{kernel_basis, nullity, rank, solve_particular, Solve, SparseRationalMatrix};
use ngc_core::multivector::{mask_from_indices, Multivector};
use ngc_core::nambu::nambu_bivector;
use ngc_core::{canonical_form, JetRing, MicroGraph, Rational, VertexRole};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

/// A jet variable of `ρ`, a Casimir or a base coordinate, of order at most 2.
pub fn variable(dim: usize) -> impl Strategy<Value = JetVariable> {
    let casimirs = (dim - 2) as u8;
    (0..=casimirs + 1, prop::collection::vec(0u8..=2, dim)).prop_map(move |(f, mut alpha)| {
        while alpha.iter().sum::<u8>() > 2 {
            let i = alpha.iter().position(|&a| a > 0).expect("nonzero order");
            alpha[i] -= 1;
        }
        match f {
            0 => JetVariable::new(Field::Rho, &alpha),
            k if k <= casimirs => JetVariable::new(Field::Casimir(k), &alpha),
            _ => JetVariable::base(alpha.iter().position(|&a| a > 0).unwrap_or(0) + 1),
        }
    })
}

pub fn polynomial(dim: usize, max_terms: usize) -> impl Strategy<Value = DiffPolynomial> {
    prop::collection::vec((prop::collection::vec(variable(dim), 1..=3), -3i64..=3), 1..=max_terms).prop_map(
        |terms| DiffPolynomial::from_terms(terms.into_iter().map(|(f, c)| (Monomial::from_factors(f), Rational::from(c)))),
    )
}

/// A homogeneous multivector of the given degree.
pub fn multivector(dim: usize, degree: usize, max_terms: usize) -> impl Strategy<Value = Multivector> {
    let masks: Vec<Vec<usize>> = subsets(dim, degree);
    let n = masks.len();
    prop::collection::vec((0..n, polynomial(dim, max_terms)), 1..=2).prop_map(move |comps| {
        Multivector::from_components(dim, comps.into_iter().map(|(k, p)| (mask_from_indices(&masks[k]), p)))
    })
}

pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    (0u32..1 << n).filter(|m| m.count_ones() as usize == k).map(|m| (0..n).filter(|i| m & (1 << i) != 0).collect()).collect()
}

/// A small integer matrix, rows × cols.
pub fn matrix(max_rows: usize, max_cols: usize) -> impl Strategy<Value = Vec<Vec<Rational>>> {
    (1..=max_rows, 1..=max_cols).prop_flat_map(|(r, c)| {
        prop::collection::vec(prop::collection::vec(prop_oneof![3 => Just(0i64), 2 => -4i64..=4], c), r)
            .prop_map(|rows| rows.into_iter().map(|row| row.into_iter().map(Rational::from).collect()).collect())
    })
}

/// `(−1)^n` as a rational.
pub fn parity(n: usize) -> Rational {
    Rational::from(if n.is_multiple_of(2) { 1 } else { -1 })
}

pub type Outcome = Result<(), TestCaseError>;

fn ring_for(dim: usize, args: &[&Multivector], extra: usize) -> JetRing {
    let order = args.iter().map(|a| a.max_order()).max().unwrap_or(0) + extra;
    JetRing::new(dim, order).unwrap()
}

fn br(ring: &JetRing, a: &Multivector, b: &Multivector) -> Multivector {
    a.schouten_bracket(ring, b).unwrap()
}

/// `(dim, a, b, x, y)` with `x` of degree `a` and `y` of degree `b`.
pub type Pair = (usize, usize, usize, Multivector, Multivector);
pub type Triple = (usize, usize, usize, Multivector, Multivector, Multivector);

pub fn graded_pair() -> impl Strategy<Value = Pair> {
    (2usize..=3, 0usize..=2, 0usize..=2)
        .prop_flat_map(|(d, a, b)| (Just(d), Just(a), Just(b), multivector(d, a, 3), multivector(d, b, 3)))
}

pub fn graded_triple() -> impl Strategy<Value = Triple> {
    (2usize..=3, 0usize..=2, 0usize..=2, 0usize..=2).prop_flat_map(|(d, a, b, c)| {
        (Just(d), Just(a), Just(b), multivector(d, a, 2), multivector(d, b, 2), multivector(d, c, 2))
    })
}

pub fn check_graded_antisymmetry((dim, a, b, x, y): Pair) -> Outcome {
    let ring = ring_for(dim, &[&x, &y], 1);
    let lhs = br(&ring, &x, &y);
    let rhs = br(&ring, &y, &x).scale(&parity((a + 1) * (b + 1) + 1));
    prop_assert_eq!(lhs, rhs);
    Ok(())
}

pub fn check_jacobi((dim, a, b, x, y, z): Triple) -> Outcome {
    let ring = ring_for(dim, &[&x, &y, &z], 2);
    let lhs = br(&ring, &x, &br(&ring, &y, &z));
    let rhs = br(&ring, &br(&ring, &x, &y), &z).add(&br(&ring, &y, &br(&ring, &x, &z)).scale(&parity((a + 1) * (b + 1))));
    prop_assert_eq!(lhs, rhs);
    Ok(())
}

/// `(dim, i, j, p)` with 1-based coordinates `i`, `j`.
pub fn derivative_case() -> impl Strategy<Value = (usize, usize, usize, DiffPolynomial)> {
    (2usize..=4).prop_flat_map(|d| (Just(d), 1..=d, 1..=d, polynomial(d, 4)))
}

pub fn check_derivatives_commute((dim, i, j, p): (usize, usize, usize, DiffPolynomial)) -> Outcome {
    let ring = JetRing::new(dim, 4).unwrap();
    let dij = ring.total_derivative(&ring.total_derivative(&p, i).unwrap(), j).unwrap();
    let dji = ring.total_derivative(&ring.total_derivative(&p, j).unwrap(), i).unwrap();
    prop_assert_eq!(dij, dji);
    Ok(())
}

/// Relabels Levi-Civita vertices by `perm` (Casimirs follow their owner) and
/// permutes the edge order of each vertex by `orders[k]`. Returns the graph and
/// the sign of the edge permutations.
pub fn relabel(g: &MicroGraph, perm: &[usize], orders: &[Vec<usize>]) -> (MicroGraph, i32) {
    let n = g.n_lc();
    let map = |t: u8| -> u8 {
        match g.role(t) {
            VertexRole::Sink => 0,
            VertexRole::LeviCivita(k) => g.lc_label(perm[k]),
            VertexRole::Casimir { owner, species } => g.casimir_label(perm[owner], species),
        }
    };
    let mut rows = vec![Vec::new(); n];
    let mut sign = 1;
    for k in 0..n {
        let edges: Vec<u8> = g.edges_of(k).iter().map(|&t| map(t)).collect();
        let ord = &orders[k];
        sign *= permutation_sign(ord);
        rows[perm[k]] = ord.iter().map(|&i| edges[i]).collect();
    }
    (MicroGraph::new(g.dim(), g.has_sink(), &rows).unwrap(), sign)
}

/// The 2D and 3D fixture graphs and Hamiltonians.
pub fn fixture_graphs() -> Vec<MicroGraph> {
    let fx = Fixtures::builtin();
    let mut out = Vec::new();
    for d in [2, 3] {
        out.extend(fx.graph_list(d, FixtureKind::Graph));
        out.extend(fx.graph_list(d, FixtureKind::Hamiltonian));
    }
    out
}

/// `(graph, perm, orders)`: a fixture graph with a random relabeling.
pub fn relabeling(graphs: Vec<MicroGraph>) -> impl Strategy<Value = (MicroGraph, Vec<usize>, Vec<Vec<usize>>)> {
    prop::sample::select(graphs).prop_flat_map(|g| {
        let n = g.n_lc();
        let d = g.dim();
        let perm = Just((0..n).collect::<Vec<usize>>()).prop_shuffle();
        let orders = prop::collection::vec(Just((0..d).collect::<Vec<usize>>()).prop_shuffle(), n);
        (Just(g), perm, orders)
    })
}

pub fn check_phi_covariance((g, perm, orders): (MicroGraph, Vec<usize>, Vec<Vec<usize>>)) -> Outcome {
    let (h, sign) = relabel(&g, &perm, &orders);
    let cg = canonical_form(&g);
    let ch = canonical_form(&h);
    prop_assert_eq!(cg.key(), ch.key());
    let vg = evaluate(&g).unwrap();
    let vh = evaluate(&h).unwrap();
    prop_assert_eq!(&vh, &vg.scale(&Rational::from(sign as i64)));
    if !cg.odd {
        prop_assert_eq!(cg.sign * ch.sign, sign);
    }
    let mut ev = CachedEvaluator::new();
    prop_assert_eq!(ev.evaluate(&h, EvalMode::Plain).unwrap(), vh);
    Ok(())
}

pub fn check_rank_nullity(rows: Vec<Vec<Rational>>) -> Outcome {
    let m = SparseRationalMatrix::from_dense(&rows);
    prop_assert_eq!(rank(&m) + nullity(&m), m.cols());
    for k in kernel_basis(&m) {
        prop_assert!(m.matvec(&k).unwrap().iter().all(|c| c.is_zero()));
    }
    Ok(())
}

/// `(rows, x0, b)`: a matrix, a point (giving a consistent right-hand side)
/// and an arbitrary right-hand side.
pub fn solve_case() -> impl Strategy<Value = (Vec<Vec<Rational>>, Vec<Rational>, Vec<Rational>)> {
    matrix(6, 6).prop_flat_map(|rows| {
        let (r, c) = (rows.len(), rows[0].len());
        let ints = |n| prop::collection::vec((-3i64..=3).prop_map(Rational::from), n);
        (Just(rows), ints(c), ints(r))
    })
}

pub fn check_solutions((rows, x0, b2): (Vec<Vec<Rational>>, Vec<Rational>, Vec<Rational>)) -> Outcome {
    let m = SparseRationalMatrix::from_dense(&rows);
    let b = m.matvec(&x0).unwrap();
    match solve_particular(&m, &b).unwrap() {
        Solve::Solution(x) => prop_assert_eq!(m.matvec(&x).unwrap(), b),
        Solve::NoSolution => prop_assert!(false, "consistent system reported unsolvable"),
    }
    if let Solve::Solution(x) = solve_particular(&m, &b2).unwrap() {
        prop_assert_eq!(m.matvec(&x).unwrap(), b2);
    }
    Ok(())
}

/// `d_P(d_P(H)) = 0` for every 2D and 3D Hamiltonian fixture, with `d_P(H) ≠ 0` in 2D.
pub fn check_lichnerowicz_square() -> Outcome {
    let fx = Fixtures::builtin();
    for dim in [2, 3] {
        let p = nambu_bivector(dim).unwrap();
        for h in fx.named(dim, FixtureKind::Hamiltonian) {
            let once = p.differential(&evaluate(&h.graph).unwrap()).unwrap();
            prop_assert!(!once.is_zero() || dim == 3, "H{} in {}D", h.name, dim);
            prop_assert!(p.differential(&once).unwrap().is_zero(), "d_P² H{} in {}D", h.name, dim);
        }
    }
    Ok(())
}
