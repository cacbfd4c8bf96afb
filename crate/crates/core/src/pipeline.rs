//! Trivialization of the tetrahedral flow over graph families, homogeneous
//! kernels modulo synonyms, Hamiltonian expressions and pair searches.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::time::Duration;

use crate::error::Error;
use crate::eval::{EvalMode, GraphEvaluator};
use crate::fixtures::{FixtureKind, Fixtures};
use crate::graph::{canonical_form, descendant_family, MicroGraph};
use crate::jet::Accumulator;
use crate::linalg::{
    build_index, in_span, kernel_basis, quotient_basis, solve_particular, vectorize, vectorize_sparse,
    MonomialIndex, Solve, SparseRationalMatrix,
};
use crate::multivector::{Multivector, Shard, XiMask};
use crate::nambu::NambuBivector;
use crate::rational::Rational;

/// Cooperative time limit, polled between graph evaluations and solves.
pub trait Budget {
    fn exhausted(&mut self) -> bool;
}

pub struct Unlimited;

impl Budget for Unlimited {
    fn exhausted(&mut self) -> bool {
        false
    }
}

/// A graph family with its images and their brackets with `P`. The brackets
/// may be restricted to a sample of coordinates (`sample`).
#[derive(Clone, Debug)]
pub struct FamilySystem {
    pub dim: usize,
    pub mode: EvalMode,
    pub graphs: Vec<MicroGraph>,
    pub values: Vec<Multivector>,
    pub brackets: Vec<Multivector>,
    pub sample: Shard,
}

/// Returned when a [`Budget`] runs out.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OutOfBudget;

/// Outer error: the computation failed. Inner error: the budget ran out first.
pub type Budgeted<T> = Result<Result<T, OutOfBudget>, Error>;

impl FamilySystem {
    pub fn build(
        p: &NambuBivector,
        graphs: Vec<MicroGraph>,
        mode: EvalMode,
        eval: &mut dyn GraphEvaluator,
        budget: &mut dyn Budget,
    ) -> Budgeted<Self> {
        Self::build_sampled(p, graphs, mode, eval, budget, Shard::ALL)
    }

    /// Like [`Self::build`], keeping only the bracket coordinates in `sample`.
    pub fn build_sampled(
        p: &NambuBivector,
        graphs: Vec<MicroGraph>,
        mode: EvalMode,
        eval: &mut dyn GraphEvaluator,
        budget: &mut dyn Budget,
        sample: Shard,
    ) -> Budgeted<Self> {
        let mut values = Vec::with_capacity(graphs.len());
        let mut brackets = Vec::with_capacity(graphs.len());
        for g in &graphs {
            if g.dim() != p.dim() {
                return Err(Error::DimensionMismatch(p.dim(), g.dim()));
            }
            if budget.exhausted() {
                return Ok(Err(OutOfBudget));
            }
            let v = eval.evaluate(g, mode)?;
            brackets.push(p.differential_shard(&v, sample)?);
            values.push(v);
        }
        Ok(Ok(FamilySystem { dim: p.dim(), mode, graphs, values, brackets, sample }))
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    /// `Σ c_i φ(g_i)` from already computed images.
    pub fn combine(&self, coeffs: &[Rational]) -> Result<Multivector, Error> {
        linear_combination(self.dim, coeffs, &self.values)
    }

    pub fn combine_brackets(&self, coeffs: &[Rational]) -> Result<Multivector, Error> {
        linear_combination(self.dim, coeffs, &self.brackets)
    }

    /// Columns `φ(g_i)` on their common monomial index.
    pub fn evaluation_matrix(&self) -> Result<(MonomialIndex, SparseRationalMatrix), Error> {
        matrix_of(&self.values, None)
    }

    /// Columns `⟦P, φ(g_i)⟧`, indexed together with `rhs` if given.
    pub fn bracket_matrix(&self, rhs: Option<&Multivector>) -> Result<(MonomialIndex, SparseRationalMatrix), Error> {
        matrix_of(&self.brackets, rhs)
    }

    /// Kernel of the evaluation matrix: the linear relations among the images.
    pub fn synonym_kernel(&self) -> Result<Vec<Vec<Rational>>, Error> {
        Ok(kernel_basis(&self.evaluation_matrix()?.1))
    }

    /// The subsystem on the given members, in that order.
    pub fn select(&self, members: &[usize]) -> FamilySystem {
        let pick = |v: &[Multivector]| members.iter().map(|&i| v[i].clone()).collect();
        FamilySystem {
            dim: self.dim,
            mode: self.mode,
            graphs: members.iter().map(|&i| self.graphs[i].clone()).collect(),
            values: pick(&self.values),
            brackets: pick(&self.brackets),
            sample: self.sample,
        }
    }

    /// Coefficients over the family of a combination of (possibly non-canonical)
    /// graphs: each graph is matched to its isomorphic member with the relative sign.
    pub fn coordinates(&self, coeffs: &[Rational], graphs: &[MicroGraph]) -> Result<Vec<Rational>, Error> {
        if coeffs.len() != graphs.len() {
            return Err(Error::LengthMismatch(coeffs.len(), graphs.len()));
        }
        let members: BTreeMap<String, (usize, i32)> = self
            .graphs
            .iter()
            .enumerate()
            .map(|(i, g)| {
                let cf = canonical_form(g);
                (cf.key(), (i, cf.sign))
            })
            .collect();
        let mut out = alloc::vec![Rational::zero(); self.len()];
        for (c, g) in coeffs.iter().zip(graphs) {
            let cf = canonical_form(g);
            if cf.odd {
                continue;
            }
            let (i, s) = members.get(&cf.key()).ok_or_else(|| Error::Structure(format!("{g} is not in the family")))?;
            let rel = Rational::from((cf.sign * s) as i64);
            out[*i] += &(c * &rel);
        }
        Ok(out)
    }
}

fn linear_combination(dim: usize, coeffs: &[Rational], vs: &[Multivector]) -> Result<Multivector, Error> {
    if coeffs.len() != vs.len() {
        return Err(Error::LengthMismatch(coeffs.len(), vs.len()));
    }
    let mut acc: BTreeMap<XiMask, Accumulator> = BTreeMap::new();
    for (c, v) in coeffs.iter().zip(vs) {
        if c.is_zero() {
            continue;
        }
        for (mask, poly) in v.components() {
            acc.entry(mask).or_default().add_poly(poly, c);
        }
    }
    Ok(Multivector::from_components(dim, acc.into_iter().map(|(m, a)| (m, a.finish()))))
}

fn matrix_of(columns: &[Multivector], rhs: Option<&Multivector>) -> Result<(MonomialIndex, SparseRationalMatrix), Error> {
    let mut all: Vec<Multivector> = columns.to_vec();
    if let Some(r) = rhs {
        all.push(r.clone());
    }
    let idx = build_index(&all)?;
    let cols = columns.iter().map(|v| vectorize_sparse(v, &idx)).collect::<Result<Vec<_>, _>>()?;
    let m = SparseRationalMatrix::from_columns(idx.len(), &cols)?;
    Ok((idx, m))
}

fn certify(what: &str, ok: bool) -> Result<(), Error> {
    if ok {
        Ok(())
    } else {
        Err(Error::Certification(what.into()))
    }
}

/// Solves `⟦P, Σ x_i φ(g_i)⟧ = Q`. A solution is re-checked both as `M·x = b`
/// and by recombining the brackets.
pub fn solve_trivialization(sys: &FamilySystem, q: &Multivector) -> Result<Solve, Error> {
    let (idx, m) = sys.bracket_matrix(Some(q))?;
    let b = vectorize(q, &idx)?;
    let sol = solve_particular(&m, &b)?;
    if let Solve::Solution(x) = &sol {
        certify("M·x = b", m.matvec(x)? == b)?;
        certify("[[P, X]] = Q", sys.combine_brackets(x)? == *q)?;
    }
    Ok(sol)
}

/// Representatives of `ker(bracket matrix) / ker(evaluation matrix)`, each
/// re-checked to satisfy `⟦P, Y⟧ = 0` with `Y ≠ 0`.
pub fn homogeneous_kernel(sys: &FamilySystem) -> Result<Vec<Vec<Rational>>, Error> {
    let big = kernel_basis(&sys.bracket_matrix(None)?.1);
    let small = sys.synonym_kernel()?;
    let reps = quotient_basis(&big, &small)?;
    for y in &reps {
        certify("[[P, Y]] = 0", sys.combine_brackets(y)?.is_zero())?;
        certify("Y != 0", !sys.combine(y)?.is_zero())?;
    }
    Ok(reps)
}

/// `d_P(H)` for each Hamiltonian graph (symmetrized in 4D).
pub fn hamiltonian_fields(
    p: &NambuBivector,
    hams: &[MicroGraph],
    eval: &mut dyn GraphEvaluator,
) -> Result<Vec<Multivector>, Error> {
    let mode = hamiltonian_mode(p.dim());
    hams.iter().map(|h| p.differential(&eval.evaluate(h, mode)?)).collect()
}

pub fn hamiltonian_mode(dim: usize) -> EvalMode {
    if dim == 4 {
        EvalMode::Sym
    } else {
        EvalMode::Plain
    }
}

/// Solves `Y = Σ c_j d_P(H_j)`; a solution is re-checked by recombination.
pub fn express_in_hamiltonians(y: &Multivector, fields: &[Multivector]) -> Result<Solve, Error> {
    let (idx, m) = matrix_of(fields, Some(y))?;
    let b = vectorize(y, &idx)?;
    let sol = solve_particular(&m, &b)?;
    if let Solve::Solution(c) = &sol {
        certify("M·c = b", m.matvec(c)? == b)?;
        certify("Y = Σ c d_P(H)", linear_combination(y.dim(), c, fields)? == *y)?;
    }
    Ok(sol)
}

/// Graphs whose images agree up to nonzero constants.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Synonyms {
    /// Each class lists `(i, c)` with `φ(g_i) = c · φ(g_first)`.
    pub classes: Vec<Vec<(usize, Rational)>>,
    pub vanishing: Vec<usize>,
}

impl Synonyms {
    pub fn class_of(&self, i: usize) -> Option<&[(usize, Rational)]> {
        self.classes.iter().find(|c| c.iter().any(|m| m.0 == i)).map(|c| c.as_slice())
    }
}

pub fn detect_synonyms(values: &[Multivector]) -> Synonyms {
    let mut out = Synonyms::default();
    for (i, v) in values.iter().enumerate() {
        if v.is_zero() {
            out.vanishing.push(i);
            continue;
        }
        let hit = out.classes.iter_mut().find_map(|class| {
            let rep = &values[class[0].0];
            v.ratio_to(rep).map(|c| (class, c))
        });
        match hit {
            Some((class, c)) => class.push((i, c)),
            None => out.classes.push(alloc::vec![(i, Rational::one())]),
        }
    }
    out
}

/// Pairs `(i, j)`, `i` from `left` and `j` from `right`, such that some
/// `a·⟦P,φ_i⟧ + b·⟦P,φ_j⟧ = Q`.
pub fn trivializing_pairs(
    sys: &FamilySystem,
    q: &Multivector,
    left: &[usize],
    right: &[usize],
) -> Result<Vec<(usize, usize)>, Error> {
    let mut out = Vec::new();
    for &i in left {
        for &j in right {
            if solve_trivialization(&sys.select(&[i, j]), q)?.is_solution() {
                out.push((i, j));
            }
        }
    }
    Ok(out)
}

/// The 2D pairs: one graph synonymous with the `left_name` graph and one
/// synonymous with the `right_name` graph, solving the 2D equation.
/// Indices are 1-based positions in the 2D fixture list.
pub fn trivializing_pairs_2d(
    sys: &FamilySystem,
    q: &Multivector,
    left_name: usize,
    right_name: usize,
) -> Result<Vec<(usize, usize)>, Error> {
    let syn = detect_synonyms(&sys.values);
    let members = |k: usize| -> Vec<usize> { syn.class_of(k - 1).map_or(Vec::new(), |c| c.iter().map(|m| m.0).collect()) };
    let pairs = trivializing_pairs(sys, q, &members(left_name), &members(right_name))?;
    Ok(pairs.into_iter().map(|(i, j)| (i + 1, j + 1)).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CellStatus {
    Yes,
    No,
    Timeout,
}

impl CellStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            CellStatus::Yes => "yes",
            CellStatus::No => "no",
            CellStatus::Timeout => "timeout",
        }
    }
}

/// Row and column sources of the pair-search tables (2D fixture names).
pub const TABLE_ROWS: [u32; 4] = [2, 4, 9, 11];
pub const TABLE_COLS: [u32; 7] = [1, 5, 6, 7, 8, 12, 13];

/// How to handle systems too large to hold: bracket columns are kept on
/// `1/modulus` of the coordinates (doubling on failure), and every answer is
/// then certified against all coordinates in `verify_shards` passes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SamplingPlan {
    pub modulus: u32,
    pub verify_shards: u32,
}

impl SamplingPlan {
    /// No sampling: full matrices, certified directly.
    pub const FULL: SamplingPlan = SamplingPlan { modulus: 1, verify_shards: 1 };

    pub fn for_dim(dim: usize) -> Self {
        if dim >= 4 {
            SamplingPlan { modulus: 64, verify_shards: 16 }
        } else {
            Self::FULL
        }
    }
}

/// Source of the flow restricted to a shard of coordinates.
pub type FlowSource<'a> = dyn FnMut(Shard) -> Result<Multivector, Error> + 'a;

/// Checks `⟦P, y⟧ = target` pass by pass over a partition of the coordinates.
pub fn verify_bracket(
    p: &NambuBivector,
    y: &Multivector,
    target: &mut FlowSource<'_>,
    shards: u32,
    budget: &mut dyn Budget,
) -> Budgeted<bool> {
    for s in Shard::partition(shards) {
        if budget.exhausted() {
            return Ok(Err(OutOfBudget));
        }
        if p.differential_shard(y, s)? != target(s)? {
            return Ok(Ok(false));
        }
    }
    Ok(Ok(true))
}

/// A certified solve or kernel together with the (possibly sampled) system used.
#[derive(Clone, Debug)]
pub struct Certified<T> {
    pub value: T,
    pub system: FamilySystem,
}

fn samples(plan: SamplingPlan) -> impl Iterator<Item = Shard> {
    let m = plan.modulus.max(1);
    let mut t = 1;
    core::iter::from_fn(move || {
        if t > m {
            return None;
        }
        let s = Shard::range(m, 0, t).expect("nonempty range");
        t = if t == m { m + 1 } else { (2 * t).min(m) };
        Some(s)
    })
}

/// [`solve_trivialization`] under a sampling plan. A sampled `NoSolution` is
/// final (a subsystem is already inconsistent); a sampled solution is kept
/// only once it satisfies the full equation.
pub fn certified_trivialization(
    p: &NambuBivector,
    graphs: &[MicroGraph],
    mode: EvalMode,
    eval: &mut dyn GraphEvaluator,
    flow: &mut FlowSource<'_>,
    plan: SamplingPlan,
    budget: &mut dyn Budget,
) -> Budgeted<Certified<Solve>> {
    let mut last = None;
    for sample in samples(plan) {
        let sys = match FamilySystem::build_sampled(p, graphs.to_vec(), mode, eval, budget, sample)? {
            Ok(s) => s,
            Err(e) => return Ok(Err(e)),
        };
        let q = flow(sample)?;
        let sol = solve_trivialization(&sys, &q)?;
        let x = match &sol {
            Solve::NoSolution => return Ok(Ok(Certified { value: sol, system: sys })),
            Solve::Solution(x) => x.clone(),
        };
        if sample.is_all() {
            return Ok(Ok(Certified { value: sol, system: sys }));
        }
        match verify_bracket(p, &sys.combine(&x)?, flow, plan.verify_shards, budget)? {
            Err(e) => return Ok(Err(e)),
            Ok(true) => return Ok(Ok(Certified { value: sol, system: sys })),
            Ok(false) => last = Some(sys),
        }
    }
    Err(Error::Certification(alloc::format!(
        "no certified answer after sampling {} graphs",
        last.map_or(0, |s| s.len())
    )))
}

/// [`homogeneous_kernel`] under a sampling plan: the sampled kernel contains
/// the true one and is accepted once each representative has `⟦P, Y⟧ = 0`.
pub fn certified_homogeneous_kernel(
    p: &NambuBivector,
    graphs: &[MicroGraph],
    mode: EvalMode,
    eval: &mut dyn GraphEvaluator,
    plan: SamplingPlan,
    budget: &mut dyn Budget,
) -> Budgeted<Certified<Vec<Vec<Rational>>>> {
    let dim = p.dim();
    let mut zero = |_: Shard| Ok(Multivector::zero(dim));
    for sample in samples(plan) {
        let sys = match FamilySystem::build_sampled(p, graphs.to_vec(), mode, eval, budget, sample)? {
            Ok(s) => s,
            Err(e) => return Ok(Err(e)),
        };
        let reps = homogeneous_kernel(&sys)?;
        if sample.is_all() {
            return Ok(Ok(Certified { value: reps, system: sys }));
        }
        let mut all_ok = true;
        for y in &reps {
            match verify_bracket(p, &sys.combine(y)?, &mut zero, plan.verify_shards, budget)? {
                Err(e) => return Ok(Err(e)),
                Ok(ok) => all_ok &= ok,
            }
            if !all_ok {
                break;
            }
        }
        if all_ok {
            return Ok(Ok(Certified { value: reps, system: sys }));
        }
    }
    Err(Error::Certification("sampled kernel never certified".into()))
}

/// Whether the trivialization is solvable over the `dim`-dimensional
/// descendants of the two 2D graphs (skew-symmetrized in 4D).
#[allow(clippy::too_many_arguments)]
pub fn pair_cell(
    p: &NambuBivector,
    a: &MicroGraph,
    b: &MicroGraph,
    eval: &mut dyn GraphEvaluator,
    flow: &mut FlowSource<'_>,
    plan: SamplingPlan,
    budget: &mut dyn Budget,
) -> Result<CellStatus, Error> {
    let dim = p.dim();
    let family = descendant_family(&[a.clone(), b.clone()], dim)?;
    let mode = family_mode(dim);
    Ok(match certified_trivialization(p, &family, mode, eval, flow, plan, budget)? {
        Err(OutOfBudget) => CellStatus::Timeout,
        Ok(c) if c.value.is_solution() => CellStatus::Yes,
        Ok(_) => CellStatus::No,
    })
}

pub fn family_mode(dim: usize) -> EvalMode {
    if dim == 4 {
        EvalMode::Skew
    } else {
        EvalMode::Plain
    }
}

/// The standard family: the 14 named 2D graphs, or the descendants of the
/// 2D graphs 11 and 12 in higher dimension.
pub fn default_family(dim: usize, fx: &Fixtures) -> Result<Vec<MicroGraph>, Error> {
    if dim == 2 {
        return Ok(fx.graph_list(2, FixtureKind::Graph));
    }
    let a = fx.graph(2, FixtureKind::Graph, "11")?.clone();
    let b = fx.graph(2, FixtureKind::Graph, "12")?.clone();
    descendant_family(&[a, b], dim)
}

#[derive(Clone, Debug)]
pub struct PipelineResult {
    pub dim: usize,
    pub family: String,
    pub mode: EvalMode,
    pub graphs: Vec<MicroGraph>,
    pub solution: Option<Solve>,
    pub kernel: Vec<Vec<Rational>>,
    pub hamiltonians: Vec<MicroGraph>,
    /// One entry per kernel representative, coefficients over `hamiltonians`.
    pub expressions: Vec<Solve>,
    pub elapsed: Option<Duration>,
}

/// Which stages to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Stages {
    pub solve: bool,
    pub kernel: bool,
    pub hamiltonians: bool,
}

impl Stages {
    pub const ALL: Stages = Stages { solve: true, kernel: true, hamiltonians: true };
}

/// Runs the requested stages over `graphs`.
#[allow(clippy::too_many_arguments)]
pub fn run_pipeline(
    p: &NambuBivector,
    family: &str,
    graphs: Vec<MicroGraph>,
    hamiltonians: Vec<MicroGraph>,
    stages: Stages,
    eval: &mut dyn GraphEvaluator,
    flow: &mut FlowSource<'_>,
    plan: SamplingPlan,
    budget: &mut dyn Budget,
) -> Budgeted<PipelineResult> {
    let mode = family_mode(p.dim());
    let mut solution = None;
    if stages.solve {
        match certified_trivialization(p, &graphs, mode, eval, flow, plan, budget)? {
            Ok(c) => solution = Some(c.value),
            Err(e) => return Ok(Err(e)),
        }
    }
    let mut kernel = Vec::new();
    let mut expressions = Vec::new();
    if stages.kernel || stages.hamiltonians {
        let cert = match certified_homogeneous_kernel(p, &graphs, mode, eval, plan, budget)? {
            Ok(c) => c,
            Err(e) => return Ok(Err(e)),
        };
        if stages.hamiltonians {
            let fields = hamiltonian_fields(p, &hamiltonians, eval)?;
            for y in &cert.value {
                if budget.exhausted() {
                    return Ok(Err(OutOfBudget));
                }
                expressions.push(express_in_hamiltonians(&cert.system.combine(y)?, &fields)?);
            }
        }
        kernel = cert.value;
    }
    Ok(Ok(PipelineResult {
        dim: p.dim(),
        family: family.into(),
        mode,
        graphs,
        solution,
        kernel,
        hamiltonians,
        expressions,
        elapsed: None,
    }))
}

/// Whether `target` lies in `span(basis) + span(modulo)`.
pub fn congruent(target: &[Rational], basis: &[Vec<Rational>], modulo: &[Vec<Rational>]) -> bool {
    let mut all: Vec<Vec<Rational>> = basis.to_vec();
    all.extend(modulo.iter().cloned());
    in_span(&all, target)
}
