//! The morphism `φ` from micro-graphs to multivectors.
//!
//! Every Levi-Civita vertex sums over the permutations `σ` of the coordinate
//! indices with sign `sgn σ`; its `j`-th edge differentiates the content of
//! its target along `σ(j)`. Contents are `ρ` at Levi-Civita vertices, `a^c`
//! at Casimir vertices and the Euler field `Σ x^i ξ_i` at the sink.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use hashbrown::HashMap;

use crate::error::Error;
use crate::graph::{canonical_form, permutations, MicroGraph, VertexRole};
use crate::jet::{Accumulator, Field, JetVariable, Monomial, MAX_DIM};
use crate::multivector::{Multivector, XiMask};
use crate::rational::Rational;

/// Largest derivative order a single jet variable can carry.
const MAX_VAR_ORDER: u8 = 15;

/// Plain evaluation or the (anti)symmetrization under the Casimir swap `a¹ ↔ a²`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EvalMode {
    Plain,
    /// `φ⁻ = ½(φ(g) − φ(swap g))`.
    Skew,
    /// `φ⁺ = ½(φ(g) + φ(swap g))`.
    Sym,
}

impl EvalMode {
    pub fn as_str(self) -> &'static str {
        match self {
            EvalMode::Plain => "plain",
            EvalMode::Skew => "skew",
            EvalMode::Sym => "sym",
        }
    }
}

impl fmt::Display for EvalMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EvalMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "plain" => Ok(EvalMode::Plain),
            "skew" => Ok(EvalMode::Skew),
            "sym" => Ok(EvalMode::Sym),
            _ => Err(Error::Parse { column: 0, message: format!("unknown mode `{s}`") }),
        }
    }
}

/// `φ(g)`: a function for sink-less graphs, a vector field otherwise.
pub fn evaluate(g: &MicroGraph) -> Result<Multivector, Error> {
    let d = g.dim();
    let n = g.n_lc();
    let perms = permutations(d);
    let n_labels = g.max_label() + 1;
    let fields: Vec<Option<Field>> = (0..n_labels as u8)
        .map(|l| match g.role(l) {
            VertexRole::Sink => None,
            VertexRole::LeviCivita(_) => Some(Field::Rho),
            VertexRole::Casimir { species, .. } => Some(Field::Casimir(species)),
        })
        .collect();
    let edges: Vec<&[u8]> = (0..n).map(|k| g.edges_of(k)).collect();

    let mut acc: HashMap<(XiMask, Monomial), i64> = HashMap::new();
    let mut choice = vec![0usize; n];
    let mut orders = vec![[0u8; MAX_DIM]; n_labels];
    loop {
        for o in orders.iter_mut() {
            *o = [0; MAX_DIM];
        }
        let mut sign = 1i64;
        let mut sink_hits = 0;
        let mut sink_coord = 0;
        for k in 0..n {
            let (perm, s) = &perms[choice[k]];
            sign *= *s as i64;
            for (j, &t) in edges[k].iter().enumerate() {
                let coord = perm[j];
                if t == 0 && g.has_sink() {
                    sink_hits += 1;
                    sink_coord = coord;
                } else {
                    orders[t as usize][coord] += 1;
                }
            }
        }
        if sink_hits < 2 {
            let mut factors = Vec::with_capacity(n_labels);
            for (label, field) in fields.iter().enumerate() {
                if let Some(field) = field {
                    let o = &orders[label][..d];
                    if o.iter().any(|&x| x > MAX_VAR_ORDER) {
                        return Err(Error::MaxOrderExceeded { max_order: MAX_VAR_ORDER as usize });
                    }
                    factors.push(JetVariable::new(*field, o));
                }
            }
            let m = Monomial::from_factors(factors);
            if !g.has_sink() {
                *acc.entry((0, m)).or_default() += sign;
            } else if sink_hits == 1 {
                *acc.entry((1 << sink_coord, m)).or_default() += sign;
            } else {
                for i in 0..d {
                    let mx = m.mul(&Monomial::from_factors([JetVariable::base(i + 1)]));
                    *acc.entry((1 << i, mx)).or_default() += sign;
                }
            }
        }
        if !next_choice(&mut choice, perms.len()) {
            break;
        }
    }

    let mut by_mask: BTreeMap<XiMask, Accumulator> = BTreeMap::new();
    for ((mask, m), c) in acc {
        if c != 0 {
            by_mask.entry(mask).or_default().add(m, &Rational::from(c));
        }
    }
    Ok(Multivector::from_components(d, by_mask.into_iter().map(|(mask, a)| (mask, a.finish()))))
}

fn next_choice(choice: &mut [usize], base: usize) -> bool {
    for c in choice.iter_mut().rev() {
        *c += 1;
        if *c < base {
            return true;
        }
        *c = 0;
    }
    false
}

/// Applies a mode to an already computed `φ(g)`. Swapping the Casimir vertices
/// of a graph is the same as swapping `a¹ ↔ a²` in its image.
pub fn apply_mode(phi: &Multivector, mode: EvalMode) -> Result<Multivector, Error> {
    match mode {
        EvalMode::Plain => Ok(phi.clone()),
        _ if phi.dim() != 4 => Err(Error::Dimension { expected: 4, found: phi.dim() }),
        EvalMode::Skew => Ok(phi.sub(&phi.swap_casimirs()).scale(&Rational::new(1, 2))),
        EvalMode::Sym => Ok(phi.add(&phi.swap_casimirs()).scale(&Rational::new(1, 2))),
    }
}

pub fn evaluate_mode(g: &MicroGraph, mode: EvalMode) -> Result<Multivector, Error> {
    if mode != EvalMode::Plain && g.dim() != 4 {
        return Err(Error::Dimension { expected: 4, found: g.dim() });
    }
    apply_mode(&evaluate(g)?, mode)
}

pub fn evaluate_skew(g: &MicroGraph) -> Result<Multivector, Error> {
    evaluate_mode(g, EvalMode::Skew)
}

pub fn evaluate_sym(g: &MicroGraph) -> Result<Multivector, Error> {
    evaluate_mode(g, EvalMode::Sym)
}

/// `Σ c_i φ(g_i)` (or its symmetrized / skew-symmetrized version).
pub fn evaluate_combination(
    coeffs: &[Rational],
    graphs: &[MicroGraph],
    mode: EvalMode,
    eval: &mut dyn GraphEvaluator,
) -> Result<Multivector, Error> {
    if coeffs.len() != graphs.len() {
        return Err(Error::LengthMismatch(coeffs.len(), graphs.len()));
    }
    let dim = graphs.first().map_or(2, |g| g.dim());
    let mut acc: BTreeMap<XiMask, Accumulator> = BTreeMap::new();
    for (c, g) in coeffs.iter().zip(graphs) {
        if c.is_zero() {
            continue;
        }
        let phi = eval.evaluate(g, mode)?;
        for (mask, p) in phi.components() {
            acc.entry(mask).or_default().add_poly(p, c);
        }
    }
    Ok(Multivector::from_components(dim, acc.into_iter().map(|(m, a)| (m, a.finish()))))
}

/// Cache key of an evaluation: canonical encoding, dimension and mode.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EvalKey {
    pub dim: usize,
    pub sink: bool,
    pub mode: EvalMode,
    pub canonical: String,
}

impl EvalKey {
    pub fn new(canonical: &MicroGraph, mode: EvalMode) -> Self {
        EvalKey { dim: canonical.dim(), sink: canonical.has_sink(), mode, canonical: canonical.encoding() }
    }
}

impl fmt::Display for EvalKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "d{}/{}/{}{}", self.dim, self.mode, if self.sink { "s" } else { "h" }, self.canonical)
    }
}

/// Something that maps graphs to multivectors, possibly with a cache.
pub trait GraphEvaluator {
    fn evaluate(&mut self, g: &MicroGraph, mode: EvalMode) -> Result<Multivector, Error>;
}

/// Backing store consulted by [`CachedEvaluator`] for canonical graphs.
pub trait EvalStore {
    fn load(&mut self, key: &EvalKey) -> Option<Multivector>;
    fn save(&mut self, key: &EvalKey, value: &Multivector);
}

/// A store that keeps nothing.
#[derive(Default)]
pub struct NoStore;

impl EvalStore for NoStore {
    fn load(&mut self, _: &EvalKey) -> Option<Multivector> {
        None
    }
    fn save(&mut self, _: &EvalKey, _: &Multivector) {}
}

/// Evaluates through canonical forms: isomorphic graphs share one evaluation,
/// graphs with an odd automorphism are zero without evaluating. Results are
/// memoized in memory and passed through an optional persistent store.
pub struct CachedEvaluator<S: EvalStore = NoStore> {
    memo: HashMap<EvalKey, Multivector>,
    store: S,
    evaluations: usize,
}

impl Default for CachedEvaluator<NoStore> {
    fn default() -> Self {
        Self::with_store(NoStore)
    }
}

impl CachedEvaluator<NoStore> {
    pub fn new() -> Self {
        Self::default()
    }
}

impl<S: EvalStore> CachedEvaluator<S> {
    pub fn with_store(store: S) -> Self {
        CachedEvaluator { memo: HashMap::new(), store, evaluations: 0 }
    }

    /// Number of `φ` evaluations actually performed (cache misses).
    pub fn evaluations(&self) -> usize {
        self.evaluations
    }

    pub fn store(&self) -> &S {
        &self.store
    }

    pub fn into_store(self) -> S {
        self.store
    }

    fn canonical_value(&mut self, canonical: &MicroGraph, mode: EvalMode) -> Result<Multivector, Error> {
        let key = EvalKey::new(canonical, mode);
        if let Some(v) = self.memo.get(&key) {
            return Ok(v.clone());
        }
        let value = match self.store.load(&key) {
            Some(v) => v,
            None => {
                let v = if mode == EvalMode::Plain {
                    self.evaluations += 1;
                    evaluate(canonical)?
                } else {
                    let plain = self.canonical_value(canonical, EvalMode::Plain)?;
                    apply_mode(&plain, mode)?
                };
                self.store.save(&key, &v);
                v
            }
        };
        self.memo.insert(key, value.clone());
        Ok(value)
    }
}

impl<S: EvalStore> GraphEvaluator for CachedEvaluator<S> {
    fn evaluate(&mut self, g: &MicroGraph, mode: EvalMode) -> Result<Multivector, Error> {
        if mode != EvalMode::Plain && g.dim() != 4 {
            return Err(Error::Dimension { expected: 4, found: g.dim() });
        }
        let cf = canonical_form(g);
        if cf.odd {
            return Ok(Multivector::zero(g.dim()));
        }
        let v = self.canonical_value(&cf.graph, mode)?;
        Ok(if cf.sign < 0 { v.neg() } else { v })
    }
}

/// Uncached evaluation.
pub struct DirectEvaluator;

impl GraphEvaluator for DirectEvaluator {
    fn evaluate(&mut self, g: &MicroGraph, mode: EvalMode) -> Result<Multivector, Error> {
        evaluate_mode(g, mode)
    }
}
