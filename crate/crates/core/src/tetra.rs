//! The tetrahedral flow `Q^{γ₃}(P)`: orient the edges of `K₄`, let every
//! directed edge contract an odd symbol of its source with a derivative of its
//! target, and sum.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use hashbrown::HashMap;

use crate::error::Error;
use crate::jet::{Accumulator, JetRing, MAX_DIM};
use crate::multivector::{wedge_into, wedge_into_shard, Multivector, Shard, XiMask};
use crate::nambu::NambuBivector;
use crate::rational::Rational;

/// Global constant relating the raw orientation sum (already divided by 8) to
/// the normalization of the reference flow; fixed once on the 2D case.
pub const FLOW_CALIBRATION: i64 = 1;

/// A directed graph with ordered edges acting on one multivector per vertex.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DirectedOperationGraph {
    n_vertices: usize,
    edges: Vec<(usize, usize)>,
}

impl DirectedOperationGraph {
    pub fn new(n_vertices: usize, edges: Vec<(usize, usize)>) -> Result<Self, Error> {
        if edges.iter().any(|&(s, t)| s >= n_vertices || t >= n_vertices) {
            return Err(Error::Structure("edge endpoint out of range".into()));
        }
        Ok(DirectedOperationGraph { n_vertices, edges })
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn out_degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|e| e.0 == v).count()
    }

    pub fn max_out_degree(&self) -> usize {
        (0..self.n_vertices).map(|v| self.out_degree(v)).max().unwrap_or(0)
    }

    pub fn in_degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|e| e.1 == v).count()
    }
}

/// The complete graph on four vertices (0-based here), edges in lexicographic order.
pub fn tetrahedron() -> Vec<(usize, usize)> {
    let mut edges = Vec::with_capacity(6);
    for a in 0..4 {
        for b in a + 1..4 {
            edges.push((a, b));
        }
    }
    edges
}

/// All orientations of the tetrahedron (edge order kept) with every out-degree ≤ `max_out`.
pub fn orientations(max_out: usize) -> Vec<DirectedOperationGraph> {
    let base = tetrahedron();
    (0u32..1 << base.len())
        .map(|bits| {
            let edges = base
                .iter()
                .enumerate()
                .map(|(k, &(a, b))| if bits & (1 << k) != 0 { (b, a) } else { (a, b) })
                .collect();
            DirectedOperationGraph { n_vertices: 4, edges }
        })
        .filter(|g| g.max_out_degree() <= max_out)
        .collect()
}

/// Per-slot operations: the ordered odd symbols removed and the derivative multi-index.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct SlotOps {
    removed: Vec<u8>,
    alpha: [u8; MAX_DIM],
}

/// `Σ_{i: edges → 1..d}` of the edge contractions applied in edge order: an edge
/// `s → t` with index `i` applies `∂/∂ξ_i` (from the left, with the Koszul sign of
/// the slots before `s`) to slot `s` and `∂/∂x^i` to slot `t`; the slots are
/// then multiplied in vertex order. Arguments must be homogeneous.
pub fn graph_operation(g: &DirectedOperationGraph, args: &[&Multivector]) -> Result<Multivector, Error> {
    let mut acc = BTreeMap::new();
    let mut memo = HashMap::new();
    accumulate_operation(g, args, &Rational::one(), &mut acc, &mut memo, Shard::ALL)?;
    let dim = args.first().map_or(2, |a| a.dim());
    Ok(Multivector::from_accumulators(dim, acc))
}

type SlotMemo = HashMap<(usize, SlotOps), Multivector>;

fn accumulate_operation(
    g: &DirectedOperationGraph,
    args: &[&Multivector],
    scale: &Rational,
    acc: &mut BTreeMap<XiMask, Accumulator>,
    memo: &mut SlotMemo,
    shard: Shard,
) -> Result<(), Error> {
    if args.len() != g.n_vertices {
        return Err(Error::Arity { vertices: g.n_vertices, args: args.len() });
    }
    let Some(first) = args.first() else {
        return Ok(());
    };
    let dim = first.dim();
    if let Some(a) = args.iter().find(|a| a.dim() != dim) {
        return Err(Error::DimensionMismatch(dim, a.dim()));
    }
    let mut degrees = Vec::with_capacity(args.len());
    for a in args {
        if a.is_zero() {
            return Ok(());
        }
        degrees.push(a.degree().ok_or(Error::MixedDegrees)?);
    }
    let max_in = (0..g.n_vertices).map(|v| g.in_degree(v)).max().unwrap_or(0);
    let max_order = args.iter().map(|a| a.max_order()).max().unwrap_or(0) + max_in;
    let ring = JetRing::new(dim, max_order)?;

    // Group index assignments by the resulting per-slot operations.
    let n_edges = g.edges.len();
    let mut groups: HashMap<Vec<SlotOps>, i64> = HashMap::new();
    let mut choice = vec![0usize; n_edges];
    'assign: loop {
        let mut ops = vec![SlotOps { removed: Vec::new(), alpha: [0; MAX_DIM] }; g.n_vertices];
        let mut deg = degrees.clone();
        let mut sign = 1i64;
        for (e, &(s, t)) in g.edges.iter().enumerate() {
            let i = choice[e];
            if deg[s] == 0 || ops[s].removed.contains(&(i as u8)) {
                if !next(&mut choice, dim) {
                    break 'assign;
                }
                continue 'assign;
            }
            if deg[..s].iter().sum::<usize>() % 2 == 1 {
                sign = -sign;
            }
            ops[s].removed.push(i as u8);
            deg[s] -= 1;
            ops[t].alpha[i] += 1;
        }
        *groups.entry(ops).or_default() += sign;
        if !next(&mut choice, dim) {
            break;
        }
    }

    // Intern slot values per vertex, then sum Π_v S_v by factoring common
    // prefixes: Σ S₁ ∧ (Σ S₂ ∧ (…)).
    let n = g.n_vertices;
    let mut ids: Vec<HashMap<SlotOps, u32>> = vec![HashMap::new(); n];
    let mut values: Vec<Vec<Multivector>> = vec![Vec::new(); n];
    let mut keys: Vec<(Vec<u32>, i64)> = Vec::new();
    'key: for (ops, count) in groups {
        if count == 0 {
            continue;
        }
        let mut key = Vec::with_capacity(n);
        for (v, op) in ops.into_iter().enumerate() {
            let id = match ids[v].get(&op) {
                Some(&id) => id,
                None => {
                    let value = slot_value(&ring, v, args[v], &op, memo)?;
                    let id = values[v].len() as u32;
                    values[v].push(value);
                    ids[v].insert(op, id);
                    id
                }
            };
            if values[v][id as usize].is_zero() {
                continue 'key;
            }
            key.push(id);
        }
        keys.push((key, count));
    }
    keys.sort_unstable();
    if keys.is_empty() {
        return Ok(());
    }
    let total = combine(dim, &values, &keys, 0, shard);
    for (mask, poly) in total.components() {
        acc.entry(mask).or_default().add_poly(poly, scale);
    }
    Ok(())
}

/// `Σ_keys count · S_level ∧ … ∧ S_last` over a sorted key slice sharing the
/// ids before `level`. Only the outermost product is restricted to `shard`.
fn combine(
    dim: usize,
    values: &[Vec<Multivector>],
    keys: &[(Vec<u32>, i64)],
    level: usize,
    shard: Shard,
) -> Multivector {
    let mut acc: BTreeMap<XiMask, Accumulator> = BTreeMap::new();
    let last = level + 1 == values.len();
    let mut start = 0;
    while start < keys.len() {
        let id = keys[start].0[level];
        let mut end = start + 1;
        while end < keys.len() && keys[end].0[level] == id {
            end += 1;
        }
        let slot = &values[level][id as usize];
        let restricted;
        let slot = if last && level == 0 && !shard.is_all() {
            restricted = slot.restrict(shard);
            &restricted
        } else {
            slot
        };
        if last {
            let c: i64 = keys[start..end].iter().map(|k| k.1).sum();
            if c != 0 {
                let c = Rational::from(c);
                for (mask, poly) in slot.components() {
                    acc.entry(mask).or_default().add_poly(poly, &c);
                }
            }
        } else {
            let rest = combine(dim, values, &keys[start..end], level + 1, Shard::ALL);
            if level == 0 {
                wedge_into_shard(slot, &rest, &Rational::one(), &mut acc, shard);
            } else {
                wedge_into(slot, &rest, &Rational::one(), &mut acc);
            }
        }
        start = end;
    }
    Multivector::from_accumulators(dim, acc)
}

fn slot_value(
    ring: &JetRing,
    v: usize,
    arg: &Multivector,
    op: &SlotOps,
    memo: &mut SlotMemo,
) -> Result<Multivector, Error> {
    let key = (v, op.clone());
    if let Some(m) = memo.get(&key) {
        return Ok(m.clone());
    }
    let mut m = arg.clone();
    for &i in &op.removed {
        m = m.left_odd_derivative(i as usize);
    }
    for (c, &o) in op.alpha[..ring.dim()].iter().enumerate() {
        for _ in 0..o {
            m = m.total_derivative(ring, c + 1)?;
        }
    }
    memo.insert(key, m.clone());
    Ok(m)
}

fn next(choice: &mut [usize], base: usize) -> bool {
    for c in choice.iter_mut().rev() {
        *c += 1;
        if *c < base {
            return true;
        }
        *c = 0;
    }
    false
}

/// `Q^{γ₃}(P)`: the sum of [`graph_operation`] over the orientations of the
/// tetrahedron with out-degrees ≤ 2, applied to four copies of `P`, divided by 8
/// and multiplied by [`FLOW_CALIBRATION`].
pub fn orient_and_apply(p: &NambuBivector) -> Result<Multivector, Error> {
    orient_and_apply_shard(p, Shard::ALL)
}

/// The coordinates of [`orient_and_apply`] lying in `shard`, computed without
/// materializing the others.
pub fn orient_and_apply_shard(p: &NambuBivector, shard: Shard) -> Result<Multivector, Error> {
    let pm = p.multivector();
    let args = [pm, pm, pm, pm];
    let mut acc = BTreeMap::new();
    let mut memo = HashMap::new();
    for (g, c) in orientation_orbits(2) {
        if c != 0 {
            let scale = Rational::new(c * FLOW_CALIBRATION, 8);
            accumulate_operation(&g, &args, &scale, &mut acc, &mut memo, shard)?;
        }
    }
    Ok(Multivector::from_accumulators(p.dim(), acc))
}

/// Same as [`orient_and_apply`], one graph operation per orientation.
pub fn orient_and_apply_direct(p: &NambuBivector) -> Result<Multivector, Error> {
    let pm = p.multivector();
    let args = [pm, pm, pm, pm];
    let mut acc = BTreeMap::new();
    let mut memo = HashMap::new();
    let scale = Rational::new(FLOW_CALIBRATION, 8);
    for g in orientations(2) {
        accumulate_operation(&g, &args, &scale, &mut acc, &mut memo, Shard::ALL)?;
    }
    Ok(Multivector::from_accumulators(p.dim(), acc))
}

/// Groups the orientations into classes under relabeling of the vertices.
/// With identical even arguments a relabeled orientation contributes the
/// representative's value times the sign of the induced edge permutation
/// (edge operators are odd), so each class reduces to one representative and
/// an integer multiplicity.
pub fn orientation_orbits(max_out: usize) -> Vec<(DirectedOperationGraph, i64)> {
    let perms = crate::graph::permutations(4);
    let mut orbits: Vec<(DirectedOperationGraph, i64)> = Vec::new();
    'next: for g in orientations(max_out) {
        for (r, c) in orbits.iter_mut() {
            for (sigma, _) in &perms {
                if let Some(sign) = relabel_sign(r, &g, sigma) {
                    *c += sign;
                    continue 'next;
                }
            }
        }
        orbits.push((g, 1));
    }
    orbits
}

/// If `σ(r) = g` as directed graphs, the sign of the permutation taking the
/// edge order of `σ(r)` to that of `g`.
fn relabel_sign(r: &DirectedOperationGraph, g: &DirectedOperationGraph, sigma: &[usize]) -> Option<i64> {
    if r.edges.len() != g.edges.len() {
        return None;
    }
    let mut positions = Vec::with_capacity(r.edges.len());
    for &(a, b) in &r.edges {
        let e = (sigma[a], sigma[b]);
        positions.push(g.edges.iter().position(|&f| f == e)?);
    }
    Some(crate::graph::permutation_sign(&positions) as i64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::DiffPolynomial;
    use crate::nambu::nambu_bivector;
    use crate::parse::parse_multivector;

    #[test]
    fn k4_shape() {
        let t = tetrahedron();
        assert_eq!(t.len(), 6);
        assert!(t.windows(2).all(|w| w[0] < w[1]));
        for v in 0..4 {
            assert_eq!(t.iter().filter(|e| e.0 == v || e.1 == v).count(), 3);
        }
        assert_eq!(orientations(3).len(), 64);
        assert_eq!(orientations(2).len(), 32);
    }

    #[test]
    fn empty_operation_is_identity() {
        let g = DirectedOperationGraph::new(1, vec![]).unwrap();
        let a = parse_multivector("rho_x*xi0*xi1", 2).unwrap();
        assert_eq!(graph_operation(&g, &[&a]).unwrap(), a);
    }

    #[test]
    fn single_contraction() {
        let g = DirectedOperationGraph::new(2, vec![(0, 1)]).unwrap();
        let xi = Multivector::xi(2, 1);
        let f = parse_multivector("rho*x", 2).unwrap();
        let out = graph_operation(&g, &[&xi, &f]).unwrap();
        assert_eq!(out, parse_multivector("rho + x*rho_x", 2).unwrap());
    }

    #[test]
    fn arity_mismatch() {
        let g = DirectedOperationGraph::new(2, vec![(0, 1)]).unwrap();
        let f = Multivector::function(2, DiffPolynomial::constant(Rational::one()));
        assert_eq!(graph_operation(&g, &[&f]), Err(Error::Arity { vertices: 2, args: 1 }));
    }

    #[test]
    fn shards_reassemble() {
        let p = nambu_bivector(3).unwrap();
        let full = orient_and_apply(&p).unwrap();
        let mut sum = Multivector::zero(3);
        for s in Shard::partition(3) {
            let part = orient_and_apply_shard(&p, s).unwrap();
            assert_eq!(part, full.restrict(s));
            sum = sum.add(&part);
        }
        assert_eq!(sum, full);
    }

    #[test]
    fn orbits_of_admissible_orientations() {
        let orbits = orientation_orbits(2);
        assert_eq!(orbits.len(), 2);
        assert_eq!(orbits.iter().map(|o| o.1.abs()).sum::<i64>(), 32);
    }

    #[test]
    fn orbit_sum_matches_direct_sum() {
        for d in 2..=3 {
            let p = nambu_bivector(d).unwrap();
            assert_eq!(orient_and_apply(&p).unwrap(), orient_and_apply_direct(&p).unwrap());
        }
    }

    #[test]
    fn flow_2d() {
        let q = orient_and_apply(&nambu_bivector(2).unwrap()).unwrap();
        let expected = parse_multivector(
            "(rho_y^3*rho_xxx - 3*rho_x*rho_y^2*rho_xxy + 3*rho_x^2*rho_y*rho_xyy - rho_x^3*rho_yyy)*xi0*xi1",
            2,
        )
        .unwrap();
        assert_eq!(q, expected);
    }
}
