//! Nambu-determinant Poisson bivectors and the Lichnerowicz–Poisson differential.

use alloc::vec::Vec;

use crate::error::Error;
use crate::graph::permutations;
use crate::jet::{DiffPolynomial, Field, JetRing, JetVariable, Monomial};
use crate::multivector::{mask_from_indices, Multivector, Shard};
use crate::rational::Rational;

/// `P = ρ Σ_{i<j} ε^{ij k₁…k_{d−2}} ∂_{k₁}a¹ ⋯ ∂_{k_{d−2}}a^{d−2} ξ_iξ_j`, certified Poisson.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NambuBivector {
    p: Multivector,
}

impl NambuBivector {
    pub fn new(dim: usize) -> Result<Self, Error> {
        if !(2..=4).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        let p = Multivector::from_components(dim, bivector_components(dim));
        let ring = bracket_ring(dim, &[&p, &p]);
        if !p.schouten_bracket(&ring, &p)?.is_zero() {
            return Err(Error::NotPoisson);
        }
        Ok(NambuBivector { p })
    }

    pub fn dim(&self) -> usize {
        self.p.dim()
    }

    pub fn multivector(&self) -> &Multivector {
        &self.p
    }

    /// `d_P(A) = ⟦P, A⟧`.
    pub fn differential(&self, a: &Multivector) -> Result<Multivector, Error> {
        if a.dim() != self.dim() {
            return Err(Error::DimensionMismatch(self.dim(), a.dim()));
        }
        let ring = bracket_ring(self.dim(), &[&self.p, a]);
        self.p.schouten_bracket(&ring, a)
    }

    /// The coordinates of `d_P(A)` lying in `shard`.
    pub fn differential_shard(&self, a: &Multivector, shard: Shard) -> Result<Multivector, Error> {
        if a.dim() != self.dim() {
            return Err(Error::DimensionMismatch(self.dim(), a.dim()));
        }
        let ring = bracket_ring(self.dim(), &[&self.p, a]);
        self.p.schouten_bracket_shard(&ring, a, shard)
    }
}

pub fn nambu_bivector(dim: usize) -> Result<NambuBivector, Error> {
    NambuBivector::new(dim)
}

/// `d_P(A) = ⟦P, A⟧`.
pub fn lichnerowicz_differential(p: &NambuBivector, a: &Multivector) -> Result<Multivector, Error> {
    p.differential(a)
}

/// A jet ring large enough to differentiate every argument once more.
pub fn bracket_ring(dim: usize, args: &[&Multivector]) -> JetRing {
    let order = args.iter().map(|a| a.max_order()).max().unwrap_or(0) + 1;
    JetRing::new(dim, order).expect("dimension already validated")
}

fn bivector_components(dim: usize) -> Vec<(u8, DiffPolynomial)> {
    let rho = JetVariable::new(Field::Rho, &[]);
    let mut out = Vec::new();
    for i in 0..dim {
        for j in i + 1..dim {
            let rest: Vec<usize> = (0..dim).filter(|&k| k != i && k != j).collect();
            let mut terms = Vec::new();
            for (perm, _) in permutations(rest.len()) {
                let ks: Vec<usize> = perm.iter().map(|&p| rest[p]).collect();
                let mut full = alloc::vec![i, j];
                full.extend(&ks);
                let sign = crate::graph::permutation_sign(&full);
                let mut factors = alloc::vec![rho];
                for (c, &k) in ks.iter().enumerate() {
                    let mut alpha = [0u8; 4];
                    alpha[k] = 1;
                    factors.push(JetVariable::new(Field::Casimir(c as u8 + 1), &alpha[..dim]));
                }
                terms.push((Monomial::from_factors(factors), Rational::from(sign)));
            }
            out.push((mask_from_indices(&[i, j]), DiffPolynomial::from_terms(terms)));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_multivector;

    #[test]
    fn two_dimensional_p() {
        let p = nambu_bivector(2).unwrap();
        assert_eq!(p.multivector(), &parse_multivector("rho*xi0*xi1", 2).unwrap());
    }

    #[test]
    fn three_dimensional_p() {
        let p = nambu_bivector(3).unwrap();
        let expected = parse_multivector("rho*a1_z*xi0*xi1 - rho*a1_y*xi0*xi2 + rho*a1_x*xi1*xi2", 3).unwrap();
        assert_eq!(p.multivector(), &expected);
    }

    #[test]
    fn four_dimensional_p_is_poisson_and_skew_under_swap() {
        let p = nambu_bivector(4).unwrap();
        assert_eq!(p.multivector().swap_casimirs(), p.multivector().neg());
        assert_eq!(p.multivector().degree(), Some(2));
    }

    #[test]
    fn unsupported_dimension() {
        assert_eq!(nambu_bivector(5), Err(Error::UnsupportedDimension(5)));
    }

    #[test]
    fn differential_of_constant_vanishes() {
        let p = nambu_bivector(3).unwrap();
        let one = Multivector::function(3, DiffPolynomial::constant(Rational::one()));
        assert!(p.differential(&one).unwrap().is_zero());
    }

    #[test]
    fn hamiltonian_vector_field_2d() {
        let p = nambu_bivector(2).unwrap();
        let h = parse_multivector("2*rho_xx*rho_yy - 2*rho_xy^2", 2).unwrap();
        let expected = parse_multivector(
            "(2*rho*rho_yy*rho_xxy - 4*rho*rho_xy*rho_xyy + 2*rho*rho_xx*rho_yyy)*xi0 \
             + (-2*rho*rho_yy*rho_xxx + 4*rho*rho_xy*rho_xxy - 2*rho*rho_xx*rho_xyy)*xi1",
            2,
        )
        .unwrap();
        assert_eq!(p.differential(&h).unwrap(), expected);
    }
}
