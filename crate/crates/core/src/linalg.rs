//! Exact sparse linear algebra over ℚ on monomial coordinates.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use hashbrown::HashMap;

use crate::error::Error;
use crate::jet::Monomial;
use crate::multivector::{Multivector, XiMask};
use crate::rational::Rational;

/// Row coordinates: per ξ-component, its sorted monomials.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MonomialIndex {
    blocks: Vec<(XiMask, Vec<Monomial>)>,
    lookup: HashMap<(XiMask, Monomial), usize>,
}

impl MonomialIndex {
    pub fn len(&self) -> usize {
        self.lookup.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lookup.is_empty()
    }

    pub fn row(&self, mask: XiMask, m: &Monomial) -> Option<usize> {
        self.lookup.get(&(mask, m.clone())).copied()
    }

    pub fn components(&self) -> impl Iterator<Item = (XiMask, &[Monomial])> {
        self.blocks.iter().map(|(k, v)| (*k, v.as_slice()))
    }

    /// The `(component, monomial)` pair of row `r`.
    pub fn entry(&self, mut r: usize) -> Option<(XiMask, &Monomial)> {
        for (mask, ms) in &self.blocks {
            if r < ms.len() {
                return Some((*mask, &ms[r]));
            }
            r -= ms.len();
        }
        None
    }
}

pub fn build_index(vs: &[Multivector]) -> Result<MonomialIndex, Error> {
    let mut degree = None;
    let mut sets: BTreeMap<XiMask, alloc::collections::BTreeSet<Monomial>> = BTreeMap::new();
    for v in vs {
        if v.is_zero() {
            continue;
        }
        let d = v.degree().ok_or(Error::MixedDegrees)?;
        if *degree.get_or_insert(d) != d {
            return Err(Error::MixedDegrees);
        }
        for (mask, poly) in v.components() {
            sets.entry(mask).or_default().extend(poly.iter().map(|(m, _)| m.clone()));
        }
    }
    let mut idx = MonomialIndex::default();
    for (mask, set) in sets {
        let ms: Vec<Monomial> = set.into_iter().collect();
        for m in &ms {
            let r = idx.lookup.len();
            idx.lookup.insert((mask, m.clone()), r);
        }
        idx.blocks.push((mask, ms));
    }
    Ok(idx)
}

/// Dense coordinates of `v` in `idx`.
pub fn vectorize(v: &Multivector, idx: &MonomialIndex) -> Result<Vec<Rational>, Error> {
    let mut out = vec![Rational::zero(); idx.len()];
    for (r, c) in vectorize_sparse(v, idx)? {
        out[r] = c;
    }
    Ok(out)
}

pub fn vectorize_sparse(v: &Multivector, idx: &MonomialIndex) -> Result<Vec<(usize, Rational)>, Error> {
    let mut out = Vec::new();
    for (mask, poly) in v.components() {
        for (m, c) in poly.iter() {
            let r = idx
                .row(mask, m)
                .ok_or_else(|| Error::UnindexedMonomial(format!("{m} in component {mask:#b}")))?;
            out.push((r, c.clone()));
        }
    }
    out.sort_by_key(|e| e.0);
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparseRationalMatrix {
    rows: usize,
    cols: usize,
    entries: BTreeMap<(usize, usize), Rational>,
}

impl SparseRationalMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        SparseRationalMatrix { rows, cols, entries: BTreeMap::new() }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Rational::one());
        }
        m
    }

    /// Builds a matrix from sparse columns.
    pub fn from_columns(rows: usize, columns: &[Vec<(usize, Rational)>]) -> Result<Self, Error> {
        let mut m = Self::zeros(rows, columns.len());
        for (c, col) in columns.iter().enumerate() {
            for (r, v) in col {
                if *r >= rows {
                    return Err(Error::Shape(format!("row {r} outside {rows} rows")));
                }
                m.set(*r, c, v.clone());
            }
        }
        Ok(m)
    }

    pub fn from_dense(rows: &[Vec<Rational>]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut m = Self::zeros(rows.len(), cols);
        for (i, row) in rows.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                m.set(i, j, v.clone());
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, r: usize, c: usize) -> Rational {
        self.entries.get(&(r, c)).cloned().unwrap_or_default()
    }

    /// Stores `v`, dropping the entry when it is zero.
    pub fn set(&mut self, r: usize, c: usize, v: Rational) {
        assert!(r < self.rows && c < self.cols, "index out of bounds");
        if v.is_zero() {
            self.entries.remove(&(r, c));
        } else {
            self.entries.insert((r, c), v);
        }
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, &Rational)> {
        self.entries.iter().map(|(&(r, c), v)| (r, c, v))
    }

    /// The columns `keep`, in that order.
    pub fn select_columns(&self, keep: &[usize]) -> Self {
        let pos: HashMap<usize, usize> = keep.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        let mut m = Self::zeros(self.rows, keep.len());
        for (&(r, c), v) in &self.entries {
            if let Some(&j) = pos.get(&c) {
                m.entries.insert((r, j), v.clone());
            }
        }
        m
    }

    pub fn matvec(&self, x: &[Rational]) -> Result<Vec<Rational>, Error> {
        if x.len() != self.cols {
            return Err(Error::Shape(format!("vector of length {} for {} columns", x.len(), self.cols)));
        }
        let mut out = vec![Rational::zero(); self.rows];
        for (&(r, c), v) in &self.entries {
            if !x[c].is_zero() {
                out[r] += &(v * &x[c]);
            }
        }
        Ok(out)
    }
}

/// Outcome of a linear solve; an inconsistent system is an ordinary result.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Solve {
    Solution(Vec<Rational>),
    NoSolution,
}

impl Solve {
    pub fn solution(&self) -> Option<&[Rational]> {
        match self {
            Solve::Solution(x) => Some(x),
            Solve::NoSolution => None,
        }
    }

    pub fn is_solution(&self) -> bool {
        matches!(self, Solve::Solution(_))
    }
}

type SparseRow = BTreeMap<usize, Rational>;

/// Row echelon form built one row at a time. Every stored row has leading
/// coefficient 1 at its pivot column and no entries left of it.
#[derive(Clone, Debug, Default)]
pub struct Echelon {
    width: usize,
    pivots: BTreeMap<usize, SparseRow>,
}

impl Echelon {
    pub fn new(width: usize) -> Self {
        Echelon { width, pivots: BTreeMap::new() }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    pub fn pivot_columns(&self) -> impl Iterator<Item = usize> + '_ {
        self.pivots.keys().copied()
    }

    /// Reduces `row` against the stored pivots.
    pub fn reduce(&self, mut row: SparseRow) -> SparseRow {
        let mut cursor = 0;
        loop {
            let next = row.range(cursor..).find(|(c, _)| self.pivots.contains_key(c)).map(|(c, v)| (*c, v.clone()));
            let Some((c, f)) = next else {
                return row;
            };
            for (k, v) in &self.pivots[&c] {
                let e = row.entry(*k).or_default();
                *e -= &(&f * v);
                if e.is_zero() {
                    row.remove(k);
                }
            }
            cursor = c + 1;
        }
    }

    /// Inserts `row` if it is independent of the stored rows; returns its pivot.
    pub fn insert(&mut self, row: SparseRow) -> Option<usize> {
        let mut row = self.reduce(row);
        let (&p, lead) = row.iter().next()?;
        let inv = lead.recip();
        for v in row.values_mut() {
            *v *= &inv;
        }
        self.pivots.insert(p, row);
        Some(p)
    }

    /// Brings the form to reduced row echelon form.
    pub fn back_substitute(&mut self) {
        let keys: Vec<usize> = self.pivots.keys().rev().copied().collect();
        for (i, &p) in keys.iter().enumerate() {
            let mut row = self.pivots.remove(&p).unwrap();
            for &q in keys[..i].iter().rev() {
                if let Some(f) = row.get(&q).cloned() {
                    for (k, v) in &self.pivots[&q] {
                        let e = row.entry(*k).or_default();
                        *e -= &(&f * v);
                        if e.is_zero() {
                            row.remove(k);
                        }
                    }
                }
            }
            self.pivots.insert(p, row);
        }
    }
}

fn echelon_of(m: &SparseRationalMatrix, extra: Option<&[Rational]>) -> Echelon {
    let width = m.cols + usize::from(extra.is_some());
    let mut by_index: BTreeMap<usize, SparseRow> = BTreeMap::new();
    for (&(r, c), v) in &m.entries {
        by_index.entry(r).or_default().insert(c, v.clone());
    }
    if let Some(b) = extra {
        for (r, v) in b.iter().enumerate() {
            if !v.is_zero() {
                by_index.entry(r).or_default().insert(m.cols, v.clone());
            }
        }
    }
    // Sparse rows first keeps fill-in low.
    let mut ordered: Vec<SparseRow> = by_index.into_values().collect();
    ordered.sort_by_key(|r| r.len());
    let mut ech = Echelon::new(width);
    for row in ordered {
        ech.insert(row);
    }
    ech.back_substitute();
    ech
}

/// Some `x` with `M·x = b`, or [`Solve::NoSolution`].
pub fn solve_particular(m: &SparseRationalMatrix, b: &[Rational]) -> Result<Solve, Error> {
    if b.len() != m.rows {
        return Err(Error::Shape(format!("right-hand side of length {} for {} rows", b.len(), m.rows)));
    }
    let ech = echelon_of(m, Some(b));
    if ech.pivots.contains_key(&m.cols) {
        return Ok(Solve::NoSolution);
    }
    let mut x = vec![Rational::zero(); m.cols];
    for (&p, row) in &ech.pivots {
        x[p] = row.get(&m.cols).cloned().unwrap_or_default();
    }
    Ok(Solve::Solution(x))
}

/// A basis of the right kernel, one vector per free column (that entry 1,
/// other free entries 0).
pub fn kernel_basis(m: &SparseRationalMatrix) -> Vec<Vec<Rational>> {
    let ech = echelon_of(m, None);
    let mut basis = Vec::new();
    for f in (0..m.cols).filter(|c| !ech.pivots.contains_key(c)) {
        let mut v = vec![Rational::zero(); m.cols];
        v[f] = Rational::one();
        for (&p, row) in &ech.pivots {
            if let Some(a) = row.get(&f) {
                v[p] = -a;
            }
        }
        basis.push(v);
    }
    basis
}

pub fn rank(m: &SparseRationalMatrix) -> usize {
    echelon_of(m, None).rank()
}

pub fn nullity(m: &SparseRationalMatrix) -> usize {
    m.cols - rank(m)
}

fn to_row(v: &[Rational]) -> SparseRow {
    v.iter().enumerate().filter(|(_, x)| !x.is_zero()).map(|(i, x)| (i, x.clone())).collect()
}

/// Rank of a list of vectors.
pub fn span_rank(vs: &[Vec<Rational>]) -> usize {
    let width = vs.first().map_or(0, |v| v.len());
    let mut ech = Echelon::new(width);
    vs.iter().filter(|v| ech.insert(to_row(v)).is_some()).count()
}

/// Whether `v` lies in the span of `vs`.
pub fn in_span(vs: &[Vec<Rational>], v: &[Rational]) -> bool {
    let mut ech = Echelon::new(v.len());
    for w in vs {
        ech.insert(to_row(w));
    }
    ech.reduce(to_row(v)).is_empty()
}

/// Representatives of a basis of `span(big) / span(small)`: the vectors of
/// `big`, in order, that are independent of `small` and of those already taken.
pub fn quotient_basis(big: &[Vec<Rational>], small: &[Vec<Rational>]) -> Result<Vec<Vec<Rational>>, Error> {
    let width = big.first().or(small.first()).map_or(0, |v| v.len());
    if big.iter().chain(small).any(|v| v.len() != width) {
        return Err(Error::Shape("vectors of different lengths".into()));
    }
    let mut ambient = Echelon::new(width);
    for v in big {
        ambient.insert(to_row(v));
    }
    if small.iter().any(|v| !ambient.reduce(to_row(v)).is_empty()) {
        return Err(Error::NotASubspace);
    }
    let mut ech = Echelon::new(width);
    for v in small {
        ech.insert(to_row(v));
    }
    Ok(big.iter().filter(|v| ech.insert(to_row(v)).is_some()).cloned().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_multivector;

    fn q(n: i64) -> Rational {
        Rational::from(n)
    }

    fn qs(v: &[i64]) -> Vec<Rational> {
        v.iter().map(|&n| q(n)).collect()
    }

    #[test]
    fn index_and_vectorize() {
        let a = parse_multivector("rho_x*xi0 + rho_y*xi1", 2).unwrap();
        let b = parse_multivector("rho_x*rho_y*xi0", 2).unwrap();
        let idx = build_index(&[a.clone(), b.clone()]).unwrap();
        assert_eq!(idx.len(), 3);
        let sum = a.scale(&q(2)).add(&b.scale(&q(-3)));
        let lin: Vec<Rational> = vectorize(&a, &idx)
            .unwrap()
            .iter()
            .zip(vectorize(&b, &idx).unwrap())
            .map(|(x, y)| &(x * &q(2)) + &(&y * &q(-3)))
            .collect();
        assert_eq!(vectorize(&sum, &idx).unwrap(), lin);
        assert!(build_index(&[Multivector::zero(2)]).unwrap().is_empty());
        let c = parse_multivector("rho*xi0", 2).unwrap();
        assert!(matches!(vectorize(&c, &idx), Err(Error::UnindexedMonomial(_))));
        let f = parse_multivector("rho", 2).unwrap();
        assert_eq!(build_index(&[a, f]), Err(Error::MixedDegrees));
    }

    #[test]
    fn identity_solves() {
        let m = SparseRationalMatrix::identity(3);
        let b = qs(&[4, -1, 7]);
        assert_eq!(solve_particular(&m, &b).unwrap(), Solve::Solution(b.clone()));
        assert!(kernel_basis(&m).is_empty());
    }

    #[test]
    fn zero_matrix_has_no_solution() {
        let m = SparseRationalMatrix::zeros(2, 2);
        assert_eq!(solve_particular(&m, &qs(&[0, 1])).unwrap(), Solve::NoSolution);
        assert_eq!(nullity(&m), 2);
        assert!(solve_particular(&m, &qs(&[1])).is_err());
    }

    #[test]
    fn kernel_of_rank_deficient() {
        let m = SparseRationalMatrix::from_dense(&[qs(&[1, 2, 3]), qs(&[2, 4, 6]), qs(&[0, 1, 1])]);
        assert_eq!(rank(&m), 2);
        let k = kernel_basis(&m);
        assert_eq!(k.len(), 1);
        assert!(m.matvec(&k[0]).unwrap().iter().all(|x| x.is_zero()));
        let b = qs(&[1, 2, 5]);
        let x = solve_particular(&m, &b).unwrap();
        assert_eq!(m.matvec(x.solution().unwrap()).unwrap(), b);
        assert_eq!(solve_particular(&m, &qs(&[1, 3, 0])).unwrap(), Solve::NoSolution);
    }

    #[test]
    fn quotients() {
        let big = vec![qs(&[1, 0, 0]), qs(&[0, 1, 0])];
        let small = vec![qs(&[1, 1, 0])];
        let reps = quotient_basis(&big, &small).unwrap();
        assert_eq!(reps, vec![qs(&[1, 0, 0])]);
        assert!(quotient_basis(&big, &big).unwrap().is_empty());
        assert_eq!(quotient_basis(&big, &[qs(&[0, 0, 1])]), Err(Error::NotASubspace));
        assert!(in_span(&big, &qs(&[3, -2, 0])));
        assert_eq!(span_rank(&[qs(&[1, 2]), qs(&[2, 4])]), 1);
    }
}
