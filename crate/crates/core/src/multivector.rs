//! Superfunctions: polynomials in the odd symbols `ξ_1..ξ_d` whose
//! coefficients are differential polynomials. Vector fields, bivectors and
//! the Schouten bracket live here.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

use crate::error::Error;
use crate::jet::{Accumulator, DiffPolynomial, JetRing, Monomial};
use crate::rational::Rational;

/// Set of odd symbols in a component, bit `i` standing for `ξ_{i+1}`.
pub type XiMask = u8;

/// Indices (0-based) of the odd symbols in a mask, increasing.
pub fn mask_indices(mask: XiMask) -> Vec<usize> {
    (0..8).filter(|i| mask & (1 << i) != 0).collect()
}

pub fn mask_from_indices(indices: &[usize]) -> XiMask {
    indices.iter().fold(0, |m, &i| m | (1 << i))
}

/// Sign of `ξ_A ξ_B` relative to the sorted product, for disjoint `A`, `B`.
pub fn wedge_sign(a: XiMask, b: XiMask) -> i32 {
    let mut inversions = 0;
    for j in 0..8 {
        if b & (1 << j) != 0 {
            inversions += (a >> (j + 1)).count_ones();
        }
    }
    if inversions % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Sign of removing `ξ_i` from the left of `ξ_S`.
pub fn left_sign(mask: XiMask, i: usize) -> i32 {
    if (mask & ((1u8 << i) - 1)).count_ones().is_multiple_of(2) {
        1
    } else {
        -1
    }
}

/// Sign of removing `ξ_i` from the right of `ξ_S`.
pub fn right_sign(mask: XiMask, i: usize) -> i32 {
    if ((mask as u32) >> (i + 1)).count_ones().is_multiple_of(2) {
        1
    } else {
        -1
    }
}

/// A deterministic partition of the coordinates `(component, monomial)` into
/// `modulus` classes, so that very large multivectors can be handled one class
/// at a time.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Shard {
    modulus: u32,
    lo: u32,
    hi: u32,
}

impl Shard {
    pub const ALL: Shard = Shard { modulus: 1, lo: 0, hi: 1 };

    /// The coordinates whose hash is `residue` modulo `modulus`.
    pub fn new(modulus: u32, residue: u32) -> Result<Self, Error> {
        Self::range(modulus, residue, residue + 1)
    }

    /// The coordinates whose hash modulo `modulus` lies in `lo..hi`.
    pub fn range(modulus: u32, lo: u32, hi: u32) -> Result<Self, Error> {
        if modulus == 0 || lo >= hi || hi > modulus {
            return Err(Error::Shape(alloc::format!("shard {lo}..{hi} of {modulus}")));
        }
        if lo == 0 && hi == modulus {
            return Ok(Self::ALL);
        }
        Ok(Shard { modulus, lo, hi })
    }

    pub fn modulus(self) -> u32 {
        self.modulus
    }

    pub fn residues(self) -> core::ops::Range<u32> {
        self.lo..self.hi
    }

    pub fn is_all(self) -> bool {
        self.modulus == 1
    }

    /// All classes of a partition.
    pub fn partition(modulus: u32) -> impl Iterator<Item = Shard> {
        let modulus = modulus.max(1);
        (0..modulus).map(move |r| Self::new(modulus, r).expect("residue below modulus"))
    }

    pub fn contains(self, mask: XiMask, m: &Monomial) -> bool {
        if self.modulus == 1 {
            return true;
        }
        let r = (row_hash(mask, m) % self.modulus as u64) as u32;
        self.lo <= r && r < self.hi
    }
}

/// Platform-independent hash of a coordinate (FNV-1a, then a splitmix finalizer).
pub fn row_hash(mask: XiMask, m: &Monomial) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |b: u8| {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    };
    eat(mask);
    for v in m.factors() {
        for b in v.raw().to_le_bytes() {
            eat(b);
        }
    }
    h ^= h >> 30;
    h = h.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    h ^= h >> 27;
    h = h.wrapping_mul(0x94d0_49bb_1331_11eb);
    h ^ (h >> 31)
}

/// A multivector field on `ℝ^d` with differential-polynomial coefficients.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Multivector {
    dim: usize,
    components: BTreeMap<XiMask, DiffPolynomial>,
}

impl Multivector {
    pub fn zero(dim: usize) -> Self {
        Multivector { dim, components: BTreeMap::new() }
    }

    /// A degree-zero multivector (a function).
    pub fn function(dim: usize, f: DiffPolynomial) -> Self {
        Self::monomial(dim, 0, f)
    }

    /// `f · ξ_S`.
    pub fn monomial(dim: usize, mask: XiMask, f: DiffPolynomial) -> Self {
        let mut mv = Self::zero(dim);
        if !f.is_zero() {
            mv.components.insert(mask, f);
        }
        mv
    }

    /// The odd generator `ξ_i`, `i` in `1..=d`.
    pub fn xi(dim: usize, i: usize) -> Self {
        assert!((1..=dim).contains(&i));
        Self::monomial(dim, 1 << (i - 1), DiffPolynomial::constant(Rational::one()))
    }

    /// The Euler field `Σ x^i ξ_i`.
    pub fn euler_field(ring: &JetRing) -> Self {
        let d = ring.dim();
        let mut mv = Self::zero(d);
        for i in 1..=d {
            mv.components.insert(1 << (i - 1), ring.coordinate(i));
        }
        mv
    }

    pub fn from_components<I: IntoIterator<Item = (XiMask, DiffPolynomial)>>(dim: usize, comps: I) -> Self {
        let mut mv = Self::zero(dim);
        for (mask, p) in comps {
            mv.add_component(mask, &p);
        }
        mv
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        self.components.is_empty()
    }

    pub fn component(&self, mask: XiMask) -> DiffPolynomial {
        self.components.get(&mask).cloned().unwrap_or_default()
    }

    pub fn components(&self) -> impl Iterator<Item = (XiMask, &DiffPolynomial)> {
        self.components.iter().map(|(m, p)| (*m, p))
    }

    /// Components ordered by their index tuples, as the text export lists them.
    pub fn components_by_indices(&self) -> Vec<(Vec<usize>, &DiffPolynomial)> {
        let mut v: Vec<_> = self.components.iter().map(|(m, p)| (mask_indices(*m), p)).collect();
        v.sort_by(|a, b| a.0.len().cmp(&b.0.len()).then_with(|| a.0.cmp(&b.0)));
        v
    }

    /// Total number of (component, monomial) terms.
    pub fn n_terms(&self) -> usize {
        self.components.values().map(|p| p.len()).sum()
    }

    /// `Some(k)` when every component has `k` odd symbols (zero counts as degree 0).
    pub fn degree(&self) -> Option<usize> {
        let mut degrees = self.components.keys().map(|m| m.count_ones() as usize);
        match degrees.next() {
            None => Some(0),
            Some(k) => degrees.all(|j| j == k).then_some(k),
        }
    }

    fn add_component(&mut self, mask: XiMask, p: &DiffPolynomial) {
        if p.is_zero() {
            return;
        }
        let sum = match self.components.get(&mask) {
            Some(q) => q.add(p),
            None => p.clone(),
        };
        if sum.is_zero() {
            self.components.remove(&mask);
        } else {
            self.components.insert(mask, sum);
        }
    }

    fn check_dim(&self, other: &Multivector) -> Result<(), Error> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(self.dim, other.dim));
        }
        Ok(())
    }

    pub fn add(&self, other: &Multivector) -> Multivector {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        let mut out = self.clone();
        for (m, p) in &other.components {
            out.add_component(*m, p);
        }
        out
    }

    pub fn sub(&self, other: &Multivector) -> Multivector {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Multivector {
        self.map(|p| p.neg())
    }

    pub fn scale(&self, s: &Rational) -> Multivector {
        if s.is_zero() {
            return Multivector::zero(self.dim);
        }
        self.map(|p| p.scale(s))
    }

    fn map(&self, f: impl Fn(&DiffPolynomial) -> DiffPolynomial) -> Multivector {
        let components = self
            .components
            .iter()
            .map(|(m, p)| (*m, f(p)))
            .filter(|(_, p)| !p.is_zero())
            .collect();
        Multivector { dim: self.dim, components }
    }

    /// Graded-commutative product.
    pub fn wedge(&self, other: &Multivector) -> Result<Multivector, Error> {
        self.check_dim(other)?;
        let mut acc: BTreeMap<XiMask, Accumulator> = BTreeMap::new();
        for (ma, pa) in &self.components {
            for (mb, pb) in &other.components {
                if ma & mb != 0 {
                    continue;
                }
                let s = Rational::from(wedge_sign(*ma, *mb));
                pa.multiply_into(pb, &s, acc.entry(ma | mb).or_default());
            }
        }
        Ok(Self::from_accumulators(self.dim, acc))
    }

    pub(crate) fn from_accumulators(dim: usize, acc: BTreeMap<XiMask, Accumulator>) -> Multivector {
        let components = acc
            .into_iter()
            .map(|(m, a)| (m, a.finish()))
            .filter(|(_, p)| !p.is_zero())
            .collect();
        Multivector { dim, components }
    }

    /// Coefficient-wise total derivative `∂/∂x^coord`.
    pub fn total_derivative(&self, ring: &JetRing, coord: usize) -> Result<Multivector, Error> {
        let mut components = BTreeMap::new();
        for (m, p) in &self.components {
            let dp = ring.total_derivative(p, coord)?;
            if !dp.is_zero() {
                components.insert(*m, dp);
            }
        }
        Ok(Multivector { dim: self.dim, components })
    }

    /// Left derivative `∂⃗/∂ξ_i`, `i` 0-based.
    pub fn left_odd_derivative(&self, i: usize) -> Multivector {
        self.odd_derivative(i, left_sign)
    }

    /// Right derivative `·∂⃖/∂ξ_i`, `i` 0-based.
    pub fn right_odd_derivative(&self, i: usize) -> Multivector {
        self.odd_derivative(i, right_sign)
    }

    fn odd_derivative(&self, i: usize, sign: fn(XiMask, usize) -> i32) -> Multivector {
        let bit = 1u8 << i;
        let components = self
            .components
            .iter()
            .filter(|(m, _)| *m & bit != 0)
            .map(|(m, p)| {
                let p = if sign(*m, i) < 0 { p.neg() } else { p.clone() };
                (m & !bit, p)
            })
            .collect();
        Multivector { dim: self.dim, components }
    }

    /// Schouten bracket `⟦A, B⟧ = Σ_i (A ∂⃖_{ξ_i})(∂_{x^i} B) − (∂_{x^i} A)(∂⃗_{ξ_i} B)`.
    ///
    /// For homogeneous arguments the result has degree `|A| + |B| − 1`.
    pub fn schouten_bracket(&self, ring: &JetRing, other: &Multivector) -> Result<Multivector, Error> {
        self.schouten_bracket_shard(ring, other, Shard::ALL)
    }

    /// The coordinates of `⟦self, other⟧` lying in `shard`.
    pub fn schouten_bracket_shard(&self, ring: &JetRing, other: &Multivector, shard: Shard) -> Result<Multivector, Error> {
        self.check_dim(other)?;
        if ring.dim() != self.dim {
            return Err(Error::DimensionMismatch(ring.dim(), self.dim));
        }
        let mut acc: BTreeMap<XiMask, Accumulator> = BTreeMap::new();
        let one = Rational::one();
        let minus_one = -Rational::one();
        for i in 0..self.dim {
            let ra = self.right_odd_derivative(i);
            let lb = other.left_odd_derivative(i);
            if !ra.is_zero() {
                let db = other.total_derivative(ring, i + 1)?;
                wedge_into_shard(&ra, &db, &one, &mut acc, shard);
            }
            if !lb.is_zero() {
                let da = self.total_derivative(ring, i + 1)?;
                wedge_into_shard(&da, &lb, &minus_one, &mut acc, shard);
            }
        }
        Ok(Self::from_accumulators(self.dim, acc))
    }

    /// Exchanges Casimirs `a¹` and `a²` in every coefficient.
    pub fn swap_casimirs(&self) -> Multivector {
        self.map(|p| p.swap_casimirs())
    }

    /// The coordinates lying in `shard`.
    pub fn restrict(&self, shard: Shard) -> Multivector {
        if shard.is_all() {
            return self.clone();
        }
        let components = self
            .components
            .iter()
            .map(|(&mask, p)| {
                let terms = p.iter().filter(|(m, _)| shard.contains(mask, m)).map(|(m, c)| (m.clone(), c.clone()));
                (mask, DiffPolynomial::from_terms(terms))
            })
            .filter(|(_, p)| !p.is_zero())
            .collect();
        Multivector { dim: self.dim, components }
    }

    pub fn max_order(&self) -> usize {
        self.components.values().map(|p| p.max_order()).max().unwrap_or(0)
    }

    /// `Some(c)` if `self == c * other` for a nonzero constant `c`.
    pub fn ratio_to(&self, other: &Multivector) -> Option<Rational> {
        if self.components.len() != other.components.len() || self.is_zero() {
            return None;
        }
        let mut ratio: Option<Rational> = None;
        for ((ma, pa), (mb, pb)) in self.components.iter().zip(&other.components) {
            if ma != mb {
                return None;
            }
            let c = pa.ratio_to(pb)?;
            match &ratio {
                None => ratio = Some(c),
                Some(r) if *r == c => {}
                Some(_) => return None,
            }
        }
        ratio
    }
}

/// Adds `s · (a ∧ b)` into per-mask accumulators.
pub(crate) fn wedge_into(a: &Multivector, b: &Multivector, s: &Rational, acc: &mut BTreeMap<XiMask, Accumulator>) {
    for (ma, pa) in &a.components {
        for (mb, pb) in &b.components {
            if ma & mb != 0 {
                continue;
            }
            let sign = if wedge_sign(*ma, *mb) < 0 { -s } else { s.clone() };
            pa.multiply_into(pb, &sign, acc.entry(ma | mb).or_default());
        }
    }
}

pub(crate) fn wedge_into_shard(
    a: &Multivector,
    b: &Multivector,
    s: &Rational,
    acc: &mut BTreeMap<XiMask, Accumulator>,
    shard: Shard,
) {
    if shard.is_all() {
        return wedge_into(a, b, s, acc);
    }
    for (ma, pa) in &a.components {
        for (mb, pb) in &b.components {
            if ma & mb != 0 {
                continue;
            }
            let sign = if wedge_sign(*ma, *mb) < 0 { -s } else { s.clone() };
            let mask = ma | mb;
            pa.multiply_into_filtered(pb, &sign, acc.entry(mask).or_default(), |m| shard.contains(mask, m));
        }
    }
}

impl fmt::Display for Multivector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.components.is_empty() {
            return write!(f, "0");
        }
        for (k, (indices, p)) in self.components_by_indices().into_iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            if indices.is_empty() {
                write!(f, "{p}")?;
                continue;
            }
            write!(f, "({p})")?;
            for i in indices {
                write!(f, "*xi{i}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Multivector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    #[test]
    fn wedge_signs() {
        let x1 = Multivector::xi(2, 1);
        let x2 = Multivector::xi(2, 2);
        let x12 = x1.wedge(&x2).unwrap();
        assert_eq!(x12.component(0b11), DiffPolynomial::constant(Rational::one()));
        assert!(x1.wedge(&x1).unwrap().is_zero());
        assert_eq!(x2.wedge(&x1).unwrap(), x12.neg());
    }

    #[test]
    fn odd_derivatives() {
        let x12 = Multivector::xi(2, 1).wedge(&Multivector::xi(2, 2)).unwrap();
        assert_eq!(x12.left_odd_derivative(0), Multivector::xi(2, 2));
        assert_eq!(x12.left_odd_derivative(1), Multivector::xi(2, 1).neg());
        assert_eq!(x12.right_odd_derivative(1), Multivector::xi(2, 1));
        assert_eq!(x12.right_odd_derivative(0), Multivector::xi(2, 2).neg());
    }

    #[test]
    fn euler_field_derivatives() {
        let ring = JetRing::new(2, 3).unwrap();
        let e = Multivector::euler_field(&ring);
        assert_eq!(e.to_string(), "(x)*xi0 + (y)*xi1");
        let d1 = e.total_derivative(&ring, 1).unwrap();
        assert_eq!(d1, Multivector::xi(2, 1));
        assert!(d1.total_derivative(&ring, 2).unwrap().is_zero());
    }

    #[test]
    fn dimension_mismatch() {
        let ring = JetRing::new(2, 3).unwrap();
        let a = Multivector::xi(2, 1);
        let b = Multivector::xi(3, 1);
        assert_eq!(a.wedge(&b), Err(Error::DimensionMismatch(2, 3)));
        assert!(a.schouten_bracket(&ring, &b).is_err());
    }
}
