//! Differential polynomials in the jet variables of `ρ` and the Casimirs `a^k`.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use hashbrown::HashMap;
use smallvec::SmallVec;

use crate::error::Error;
use crate::rational::Rational;

/// Largest supported base dimension.
pub const MAX_DIM: usize = 4;

/// Per-coordinate derivative orders are packed into four bits.
const ORDER_BITS: u32 = 4;
const ORDER_MASK: u32 = (1 << ORDER_BITS) - 1;
const KIND_SHIFT: u32 = 24;
const TOTAL_SHIFT: u32 = 16;
const LOW_MASK: u32 = (1 << TOTAL_SHIFT) - 1;
const BASE_KIND: u32 = 0xF;

/// Display names of base coordinates, by index `1..=4`.
pub const COORD_NAMES: [char; MAX_DIM] = ['x', 'y', 'z', 'w'];

/// The field a jet variable is a derivative of.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Field {
    Rho,
    /// Casimir `a^k`, `k >= 1`.
    Casimir(u8),
}

impl Field {
    fn kind(self) -> u32 {
        match self {
            Field::Rho => 0,
            Field::Casimir(k) => k as u32,
        }
    }
}

/// A factor of a monomial: either a jet variable `∂^α f` or a base coordinate `x^i`.
///
/// Packed into a `u32` so that the integer order is the canonical factor order:
/// field first (ρ, a¹, a², …, base coordinates), then total order, then the
/// multi-index with higher `x`-orders first (`ρ_xx < ρ_xy < ρ_yy`). Per-coordinate
/// orders are stored complemented (`15 − o`) to get that last comparison.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct JetVariable(u32);

impl JetVariable {
    pub fn new(field: Field, multi_index: &[u8]) -> Self {
        let mut packed = (field.kind() << KIND_SHIFT) | LOW_MASK;
        let mut total = 0;
        for (i, &o) in multi_index.iter().enumerate() {
            assert!((o as u32) <= ORDER_MASK, "derivative order out of range");
            packed -= (o as u32) << shift(i);
            total += o as u32;
        }
        JetVariable(packed | (total << TOTAL_SHIFT))
    }

    /// The base coordinate `x^i`, `i` in `1..=4`.
    pub fn base(coord: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&coord));
        JetVariable((BASE_KIND << KIND_SHIFT) | coord as u32)
    }

    pub fn is_base(self) -> bool {
        self.0 >> KIND_SHIFT == BASE_KIND
    }

    /// `None` for base coordinates.
    pub fn field(self) -> Option<Field> {
        match self.0 >> KIND_SHIFT {
            0 => Some(Field::Rho),
            BASE_KIND => None,
            k => Some(Field::Casimir(k as u8)),
        }
    }

    /// Base coordinate index of a base factor.
    pub fn base_coord(self) -> Option<usize> {
        self.is_base().then_some((self.0 & 0xF) as usize)
    }

    /// Derivative order along coordinate `coord` (1-based).
    pub fn order(self, coord: usize) -> u8 {
        if self.is_base() {
            return 0;
        }
        (ORDER_MASK - ((self.0 >> shift(coord - 1)) & ORDER_MASK)) as u8
    }

    pub fn multi_index(self) -> [u8; MAX_DIM] {
        let mut out = [0; MAX_DIM];
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.order(i + 1);
        }
        out
    }

    pub fn total_order(self) -> usize {
        if self.is_base() {
            return 0;
        }
        ((self.0 >> TOTAL_SHIFT) & 0xFF) as usize
    }

    /// The jet variable differentiated once more along `coord`.
    pub fn bumped(self, coord: usize) -> Option<Self> {
        debug_assert!(!self.is_base());
        let s = shift(coord - 1);
        if (self.0 >> s) & ORDER_MASK == 0 {
            return None;
        }
        Some(JetVariable(self.0 - (1 << s) + (1 << TOTAL_SHIFT)))
    }

    /// Exchanges Casimir species 1 and 2; other factors are unchanged.
    pub fn swap_casimirs(self) -> Self {
        match self.field() {
            Some(Field::Casimir(k @ (1 | 2))) => {
                let low = self.0 & ((1 << KIND_SHIFT) - 1);
                JetVariable(((3 - k as u32) << KIND_SHIFT) | low)
            }
            _ => self,
        }
    }

    pub fn raw(self) -> u32 {
        self.0
    }

    pub fn from_raw(raw: u32) -> Self {
        JetVariable(raw)
    }
}

fn shift(coord0: usize) -> u32 {
    (MAX_DIM as u32 - 1 - coord0 as u32) * ORDER_BITS
}

impl fmt::Display for JetVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.field() {
            None => write!(f, "{}", COORD_NAMES[self.base_coord().unwrap() - 1]),
            Some(field) => {
                match field {
                    Field::Rho => write!(f, "rho")?,
                    Field::Casimir(k) => write!(f, "a{k}")?,
                }
                if self.total_order() > 0 {
                    write!(f, "_")?;
                    for (i, &o) in self.multi_index().iter().enumerate() {
                        for _ in 0..o {
                            write!(f, "{}", COORD_NAMES[i])?;
                        }
                    }
                }
                Ok(())
            }
        }
    }
}

impl fmt::Debug for JetVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// A product of factors, stored as a sorted multiset.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Monomial(SmallVec<[JetVariable; 12]>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(SmallVec::new())
    }

    pub fn from_factors<I: IntoIterator<Item = JetVariable>>(factors: I) -> Self {
        let mut v: SmallVec<[JetVariable; 12]> = factors.into_iter().collect();
        v.sort_unstable();
        Monomial(v)
    }

    pub fn factors(&self) -> &[JetVariable] {
        &self.0
    }

    pub fn degree(&self) -> usize {
        self.0.len()
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let (a, b) = (&self.0, &other.0);
        let mut out = SmallVec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            if a[i] <= b[j] {
                out.push(a[i]);
                i += 1;
            } else {
                out.push(b[j]);
                j += 1;
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Monomial(out)
    }

    /// Replaces the factor at `pos` by `var`, keeping the factors sorted.
    fn replace(&self, pos: usize, var: Option<JetVariable>) -> Monomial {
        let mut v = self.0.clone();
        v.remove(pos);
        if let Some(var) = var {
            let at = v.partition_point(|&x| x <= var);
            v.insert(at, var);
        }
        Monomial(v)
    }

    /// Highest total derivative order among jet factors.
    pub fn max_order(&self) -> usize {
        self.0
            .iter()
            .filter(|v| !v.is_base())
            .map(|v| v.total_order())
            .max()
            .unwrap_or(0)
    }

    pub fn swap_casimirs(&self) -> Monomial {
        Monomial::from_factors(self.0.iter().map(|v| v.swap_casimirs()))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        let mut first = true;
        let mut i = 0;
        while i < self.0.len() {
            let var = self.0[i];
            let mut run = 1;
            while i + run < self.0.len() && self.0[i + run] == var {
                run += 1;
            }
            if !first {
                write!(f, "*")?;
            }
            first = false;
            if run > 1 {
                write!(f, "{var}^{run}")?;
            } else {
                write!(f, "{var}")?;
            }
            i += run;
        }
        Ok(())
    }
}

impl fmt::Debug for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Ring parameters: base dimension, number of Casimir species and the
/// maximal total derivative order a jet variable may carry.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct JetRing {
    dim: usize,
    max_order: usize,
}

impl JetRing {
    pub fn new(dim: usize, max_order: usize) -> Result<Self, Error> {
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        Ok(JetRing { dim, max_order })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    /// Casimir species present in this dimension (`d - 2` of them, none below 3).
    pub fn n_casimirs(&self) -> usize {
        self.dim.saturating_sub(2)
    }

    pub fn with_max_order(self, max_order: usize) -> Self {
        JetRing { max_order, ..self }
    }

    pub fn rho(&self) -> DiffPolynomial {
        DiffPolynomial::variable(JetVariable::new(Field::Rho, &[]))
    }

    pub fn casimir(&self, k: u8) -> DiffPolynomial {
        assert!((1..=self.n_casimirs() as u8).contains(&k), "no Casimir a{k} in dimension {}", self.dim);
        DiffPolynomial::variable(JetVariable::new(Field::Casimir(k), &[]))
    }

    pub fn coordinate(&self, i: usize) -> DiffPolynomial {
        assert!((1..=self.dim).contains(&i));
        DiffPolynomial::variable(JetVariable::base(i))
    }

    /// Checked jet derivative of a single variable. `Ok(None)` means the
    /// derivative of a base coordinate vanished.
    fn diff_var(&self, var: JetVariable, coord: usize) -> Result<Option<Option<JetVariable>>, Error> {
        if let Some(i) = var.base_coord() {
            // d x^i / d x^coord = δ; `Some(None)` marks the constant 1.
            return Ok(if i == coord { Some(None) } else { None });
        }
        if var.total_order() + 1 > self.max_order {
            return Err(Error::MaxOrderExceeded { max_order: self.max_order });
        }
        match var.bumped(coord) {
            Some(v) => Ok(Some(Some(v))),
            None => Err(Error::MaxOrderExceeded { max_order: self.max_order }),
        }
    }

    /// Total derivative `∂/∂x^coord` by the Leibniz rule.
    pub fn total_derivative(&self, p: &DiffPolynomial, coord: usize) -> Result<DiffPolynomial, Error> {
        if !(1..=self.dim).contains(&coord) {
            return Err(Error::CoordinateOutOfRange { coord, dim: self.dim });
        }
        let mut acc = Accumulator::with_capacity(p.len() * 4);
        for (m, c) in p.iter() {
            let factors = m.factors();
            let mut k = 0;
            while k < factors.len() {
                let var = factors[k];
                let mut run = 1;
                while k + run < factors.len() && factors[k + run] == var {
                    run += 1;
                }
                if let Some(new) = self.diff_var(var, coord)? {
                    let coeff = if run == 1 { c.clone() } else { c * &Rational::from(run as i64) };
                    acc.add(m.replace(k, new), &coeff);
                }
                k += run;
            }
        }
        Ok(acc.finish())
    }

    /// Iterated total derivative along a multi-index.
    pub fn derivative(&self, p: &DiffPolynomial, multi_index: &[u8]) -> Result<DiffPolynomial, Error> {
        let mut out = p.clone();
        for (i, &o) in multi_index.iter().enumerate() {
            for _ in 0..o {
                out = self.total_derivative(&out, i + 1)?;
            }
        }
        Ok(out)
    }
}

/// A polynomial in jet variables with exact rational coefficients.
///
/// Terms are kept sorted by monomial with no zero coefficients, so the
/// representation is canonical and structural equality is mathematical equality.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct DiffPolynomial {
    terms: Vec<(Monomial, Rational)>,
}

impl DiffPolynomial {
    pub fn zero() -> Self {
        DiffPolynomial { terms: Vec::new() }
    }

    pub fn constant(c: Rational) -> Self {
        Self::term(Monomial::one(), c)
    }

    pub fn variable(v: JetVariable) -> Self {
        Self::term(Monomial::from_factors([v]), Rational::one())
    }

    pub fn term(m: Monomial, c: Rational) -> Self {
        if c.is_zero() {
            Self::zero()
        } else {
            DiffPolynomial { terms: alloc::vec![(m, c)] }
        }
    }

    /// Builds from arbitrary (possibly repeated, possibly zero) terms.
    pub fn from_terms<I: IntoIterator<Item = (Monomial, Rational)>>(terms: I) -> Self {
        let mut acc = Accumulator::default();
        for (m, c) in terms {
            acc.add(m, &c);
        }
        acc.finish()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.terms.iter().map(|(m, c)| (m, c))
    }

    /// Monomials in canonical order.
    pub fn monomials(&self) -> Vec<Monomial> {
        self.terms.iter().map(|(m, _)| m.clone()).collect()
    }

    /// Coefficients parallel to [`monomials`](Self::monomials).
    pub fn coefficients(&self) -> Vec<Rational> {
        self.terms.iter().map(|(_, c)| c.clone()).collect()
    }

    pub fn coefficient(&self, m: &Monomial) -> Rational {
        match self.terms.binary_search_by(|(k, _)| k.cmp(m)) {
            Ok(i) => self.terms[i].1.clone(),
            Err(_) => Rational::zero(),
        }
    }

    pub fn add(&self, other: &DiffPolynomial) -> DiffPolynomial {
        self.merge(other, |c| c.clone())
    }

    pub fn sub(&self, other: &DiffPolynomial) -> DiffPolynomial {
        self.merge(other, |c| -c)
    }

    fn merge(&self, other: &DiffPolynomial, map_other: impl Fn(&Rational) -> Rational) -> DiffPolynomial {
        let (a, b) = (&self.terms, &other.terms);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                core::cmp::Ordering::Less => {
                    out.push(a[i].clone());
                    i += 1;
                }
                core::cmp::Ordering::Greater => {
                    out.push((b[j].0.clone(), map_other(&b[j].1)));
                    j += 1;
                }
                core::cmp::Ordering::Equal => {
                    let c = &a[i].1 + &map_other(&b[j].1);
                    if !c.is_zero() {
                        out.push((a[i].0.clone(), c));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend(a[i..].iter().cloned());
        out.extend(b[j..].iter().map(|(m, c)| (m.clone(), map_other(c))));
        DiffPolynomial { terms: out }
    }

    pub fn neg(&self) -> DiffPolynomial {
        DiffPolynomial { terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect() }
    }

    pub fn scale(&self, s: &Rational) -> DiffPolynomial {
        if s.is_zero() {
            return Self::zero();
        }
        DiffPolynomial { terms: self.terms.iter().map(|(m, c)| (m.clone(), c * s)).collect() }
    }

    pub fn multiply(&self, other: &DiffPolynomial) -> DiffPolynomial {
        let mut acc = Accumulator::with_capacity(self.len() * other.len());
        self.multiply_into(other, &Rational::one(), &mut acc);
        acc.finish()
    }

    /// Adds `s * self * other` to `acc`.
    pub fn multiply_into(&self, other: &DiffPolynomial, s: &Rational, acc: &mut Accumulator) {
        for (ma, ca) in &self.terms {
            let cas = ca * s;
            for (mb, cb) in &other.terms {
                acc.add(ma.mul(mb), &(&cas * cb));
            }
        }
    }

    /// Like [`Self::multiply_into`], keeping only the products accepted by `keep`.
    pub fn multiply_into_filtered(
        &self,
        other: &DiffPolynomial,
        s: &Rational,
        acc: &mut Accumulator,
        keep: impl Fn(&Monomial) -> bool,
    ) {
        for (ma, ca) in &self.terms {
            let cas = ca * s;
            for (mb, cb) in &other.terms {
                let m = ma.mul(mb);
                if keep(&m) {
                    acc.add(m, &(&cas * cb));
                }
            }
        }
    }

    /// Highest derivative order among all jet factors.
    pub fn max_order(&self) -> usize {
        self.terms.iter().map(|(m, _)| m.max_order()).max().unwrap_or(0)
    }

    /// Exchanges Casimirs `a¹` and `a²`.
    pub fn swap_casimirs(&self) -> DiffPolynomial {
        DiffPolynomial::from_terms(self.terms.iter().map(|(m, c)| (m.swap_casimirs(), c.clone())))
    }

    /// `Some(c)` if `self == c * other` for a nonzero constant `c`.
    pub fn ratio_to(&self, other: &DiffPolynomial) -> Option<Rational> {
        if self.len() != other.len() || self.is_zero() {
            return None;
        }
        let c = &self.terms[0].1 / &other.terms[0].1;
        for ((ma, ca), (mb, cb)) in self.terms.iter().zip(&other.terms) {
            if ma != mb || *ca != &c * cb {
                return None;
            }
        }
        Some(c)
    }
}

impl fmt::Display for DiffPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (m, c)) in self.terms.iter().enumerate() {
            let neg = c.signum() < 0;
            let abs = c.abs();
            match (k, neg) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            if m.is_one() {
                write!(f, "{abs}")?;
            } else if abs.is_one() {
                write!(f, "{m}")?;
            } else {
                write!(f, "{abs}*{m}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for DiffPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Hash-based sink for building polynomials term by term.
#[derive(Default)]
pub struct Accumulator {
    map: HashMap<Monomial, Rational>,
}

impl Accumulator {
    pub fn with_capacity(n: usize) -> Self {
        Accumulator { map: HashMap::with_capacity(n) }
    }

    pub fn add(&mut self, m: Monomial, c: &Rational) {
        if c.is_zero() {
            return;
        }
        match self.map.entry(m) {
            hashbrown::hash_map::Entry::Occupied(mut e) => {
                *e.get_mut() += c;
            }
            hashbrown::hash_map::Entry::Vacant(e) => {
                e.insert(c.clone());
            }
        }
    }

    pub fn add_poly(&mut self, p: &DiffPolynomial, s: &Rational) {
        for (m, c) in p.iter() {
            self.add(m.clone(), &(c * s));
        }
    }

    pub fn finish(self) -> DiffPolynomial {
        let mut terms: Vec<(Monomial, Rational)> =
            self.map.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        terms.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        DiffPolynomial { terms }
    }
}

/// Renders a polynomial the way the term maps are exported.
pub fn term_strings(p: &DiffPolynomial) -> Vec<(String, String)> {
    use alloc::string::ToString;
    p.iter().map(|(m, c)| (m.to_string(), c.to_string())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn ring2() -> JetRing {
        JetRing::new(2, 6).unwrap()
    }

    fn jet(field: Field, idx: &[u8]) -> DiffPolynomial {
        DiffPolynomial::variable(JetVariable::new(field, idx))
    }

    #[test]
    fn derivative_bumps_multi_index() {
        let r = ring2();
        let rho_y = jet(Field::Rho, &[0, 1]);
        assert_eq!(r.total_derivative(&rho_y, 1).unwrap(), jet(Field::Rho, &[1, 1]));
        assert_eq!(jet(Field::Rho, &[1, 1]).to_string(), "rho_xy");
    }

    #[test]
    fn leibniz_on_square() {
        let r = ring2();
        let rho = r.rho();
        let d = r.total_derivative(&rho.multiply(&rho), 1).unwrap();
        let expected = DiffPolynomial::term(
            Monomial::from_factors([JetVariable::new(Field::Rho, &[]), JetVariable::new(Field::Rho, &[1, 0])]),
            Rational::from(2),
        );
        assert_eq!(d, expected);
    }

    #[test]
    fn base_factor_derivative() {
        let r = ring2();
        let x = r.coordinate(1);
        let p = x.multiply(&r.rho());
        let d = r.total_derivative(&p, 1).unwrap();
        let expected = r.rho().add(&x.multiply(&jet(Field::Rho, &[1, 0])));
        assert_eq!(d, expected);
        assert!(r.total_derivative(&r.coordinate(2), 1).unwrap().is_zero());
    }

    #[test]
    fn products() {
        let rx = jet(Field::Rho, &[1, 0]);
        let ry = jet(Field::Rho, &[0, 1]);
        let prod = rx.add(&ry).multiply(&rx.sub(&ry));
        assert_eq!(prod, rx.multiply(&rx).sub(&ry.multiply(&ry)));
        assert!(rx.multiply(&DiffPolynomial::zero()).is_zero());
        assert_eq!(rx.multiply(&ry).len(), 1);
    }

    #[test]
    fn monomials_and_coefficients_are_parallel() {
        let p = jet(Field::Rho, &[1, 0]).sub(&jet(Field::Rho, &[0, 1]).scale(&Rational::from(2)));
        assert_eq!(p.monomials().len(), 2);
        let rebuilt = DiffPolynomial::from_terms(p.monomials().into_iter().zip(p.coefficients()));
        assert_eq!(rebuilt, p);
        assert!(DiffPolynomial::zero().monomials().is_empty());
        let mut cs = p.coefficients();
        cs.sort();
        assert_eq!(cs, [Rational::from(-2), Rational::one()]);
    }

    #[test]
    fn max_order_is_enforced() {
        let r = JetRing::new(2, 1).unwrap();
        let rx = jet(Field::Rho, &[1, 0]);
        assert_eq!(r.total_derivative(&rx, 2), Err(Error::MaxOrderExceeded { max_order: 1 }));
        assert!(r.total_derivative(&r.rho(), 2).is_ok());
    }

    #[test]
    fn display_with_powers() {
        let r = ring2();
        let ry = jet(Field::Rho, &[0, 1]);
        let rxy = jet(Field::Rho, &[1, 1]);
        let p = ry.multiply(&rxy).multiply(&rxy).neg().add(&r.rho());
        assert_eq!(p.to_string(), "rho - rho_y*rho_xy^2");
    }

    #[test]
    fn casimir_names() {
        let v = JetVariable::new(Field::Casimir(1), &[0, 0, 1]);
        assert_eq!(v.to_string(), "a1_z");
        assert_eq!(v.swap_casimirs().to_string(), "a2_z");
    }
}
