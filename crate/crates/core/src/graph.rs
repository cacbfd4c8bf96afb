//! Kontsevich (micro-)graphs: encodings, generators, descendants, embeddings,
//! Casimir swaps and canonical forms.
//!
//! Vertex labels follow the bracket encodings: `0` is the sink (when present),
//! `1..=n` are the Levi-Civita vertices and the Casimir of species `c` owned by
//! Levi-Civita vertex `k` (0-based) has label `1 + n·c + k`. Graphs without a
//! sink still number their Levi-Civita vertices from `1`.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use hashbrown::HashSet;

use crate::error::Error;
use crate::jet::MAX_DIM;

/// Role of a vertex label in a micro-graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VertexRole {
    Sink,
    LeviCivita(usize),
    Casimir { owner: usize, species: u8 },
}

/// A micro-graph: each Levi-Civita vertex emits `dim` ordered edges; sink and
/// Casimir vertices emit none.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MicroGraph {
    dim: u8,
    sink: bool,
    n_lc: u8,
    /// Row-major `n_lc × dim` edge targets.
    targets: Vec<u8>,
}

impl MicroGraph {
    /// Builds and validates a graph from per-Levi-Civita target lists.
    pub fn new(dim: usize, sink: bool, targets: &[Vec<u8>]) -> Result<Self, Error> {
        if !(2..=MAX_DIM).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        if targets.is_empty() {
            return Err(Error::Structure("graph has no Levi-Civita vertices".into()));
        }
        for (k, t) in targets.iter().enumerate() {
            if t.len() != dim {
                return Err(Error::Structure(format!(
                    "vertex {} emits {} edges, expected {dim}",
                    k + 1,
                    t.len()
                )));
            }
        }
        let g = MicroGraph {
            dim: dim as u8,
            sink,
            n_lc: targets.len() as u8,
            targets: targets.iter().flatten().copied().collect(),
        };
        g.validate()?;
        Ok(g)
    }

    fn from_flat(dim: usize, sink: bool, n_lc: usize, targets: Vec<u8>) -> Self {
        MicroGraph { dim: dim as u8, sink, n_lc: n_lc as u8, targets }
    }

    fn validate(&self) -> Result<(), Error> {
        let max_label = self.max_label();
        for k in 0..self.n_lc() {
            for &t in self.edges_of(k) {
                if t as usize > max_label || (t == 0 && !self.sink) {
                    return Err(Error::Structure(format!("vertex {} targets unknown vertex {t}", k + 1)));
                }
            }
        }
        Ok(())
    }

    /// Checks that every Levi-Civita vertex targets each of its own Casimirs
    /// exactly once (at any edge position).
    pub fn validate_nambu(&self) -> Result<(), Error> {
        for k in 0..self.n_lc() {
            for c in 1..=self.n_casimirs() as u8 {
                let own = self.casimir_label(k, c);
                let hits = self.edges_of(k).iter().filter(|&&t| t == own).count();
                if hits != 1 {
                    return Err(Error::Structure(format!(
                        "Levi-Civita vertex {} must target its Casimir a{c} (vertex {own}) exactly once",
                        k + 1
                    )));
                }
            }
        }
        Ok(())
    }

    /// Parses and additionally enforces [`MicroGraph::validate_nambu`].
    pub fn parse_nambu(text: &str, dim: usize, has_sink: bool) -> Result<Self, Error> {
        let g = Self::parse(text, dim, has_sink)?;
        g.validate_nambu()?;
        Ok(g)
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn has_sink(&self) -> bool {
        self.sink
    }

    pub fn n_lc(&self) -> usize {
        self.n_lc as usize
    }

    pub fn n_casimirs(&self) -> usize {
        self.dim() - 2
    }

    /// Largest vertex label in use.
    pub fn max_label(&self) -> usize {
        self.n_lc() * (self.dim() - 1)
    }

    /// Ordered targets of Levi-Civita vertex `k` (0-based).
    pub fn edges_of(&self, k: usize) -> &[u8] {
        let d = self.dim();
        &self.targets[k * d..(k + 1) * d]
    }

    pub fn lc_label(&self, k: usize) -> u8 {
        (1 + k) as u8
    }

    pub fn casimir_label(&self, owner: usize, species: u8) -> u8 {
        (1 + self.n_lc() * species as usize + owner) as u8
    }

    pub fn role(&self, label: u8) -> VertexRole {
        let n = self.n_lc();
        if label == 0 {
            return VertexRole::Sink;
        }
        let l = label as usize - 1;
        if l < n {
            VertexRole::LeviCivita(l)
        } else {
            VertexRole::Casimir { owner: l % n, species: (l / n) as u8 }
        }
    }

    /// All `(source label, target label)` edges in encoding order.
    pub fn edges(&self) -> Vec<(u8, u8)> {
        (0..self.n_lc())
            .flat_map(|k| self.edges_of(k).iter().map(move |&t| (self.lc_label(k), t)))
            .collect()
    }

    /// In-degree per label `0..=max_label`.
    pub fn in_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.max_label() + 1];
        for &t in &self.targets {
            deg[t as usize] += 1;
        }
        deg
    }

    /// Largest in-degree among vertices that carry a jet variable (not the sink).
    pub fn max_content_in_degree(&self) -> usize {
        self.in_degrees().into_iter().skip(1).max().unwrap_or(0)
    }

    pub fn sink_in_degree(&self) -> usize {
        if self.sink {
            self.in_degrees()[0]
        } else {
            0
        }
    }

    /// True if the own-Casimir edges of every Levi-Civita vertex are its last
    /// `d − 2` edges, in species order.
    pub fn has_fixed_edges_last(&self) -> bool {
        (0..self.n_lc()).all(|k| {
            (1..=self.n_casimirs() as u8).all(|c| self.edges_of(k)[1 + c as usize] == self.casimir_label(k, c))
        })
    }

    /// Connectedness of the underlying undirected graph (sink included).
    pub fn is_connected(&self) -> bool {
        let n_vertices = self.max_label() + 1;
        let first = if self.sink { 0 } else { 1 };
        let mut parent: Vec<usize> = (0..n_vertices).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for (s, t) in self.edges() {
            let (a, b) = (find(&mut parent, s as usize), find(&mut parent, t as usize));
            parent[a] = b;
        }
        let root = find(&mut parent, first);
        (first..n_vertices).all(|v| find(&mut parent, v) == root)
    }

    /// True if some Levi-Civita vertex hits the same target twice.
    pub fn has_double_edge(&self) -> bool {
        (0..self.n_lc()).any(|k| {
            let e = self.edges_of(k);
            (0..e.len()).any(|i| e[i + 1..].contains(&e[i]))
        })
    }

    /// Parses a bracket encoding such as `[0,1,4;1,3,5;1,2,6]`. Parentheses are
    /// accepted in place of brackets and whitespace is ignored.
    pub fn parse(text: &str, dim: usize, has_sink: bool) -> Result<Self, Error> {
        let trimmed = text.trim();
        let lead = text.len() - text.trim_start().len();
        let (open, close) = match (trimmed.chars().next(), trimmed.chars().last()) {
            (Some('['), Some(']')) | (Some('('), Some(')')) => (1, trimmed.len() - 1),
            (Some(c), _) if c != '[' && c != '(' => {
                return Err(Error::Parse { column: lead, message: "expected `[`".into() })
            }
            _ => {
                return Err(Error::Parse { column: lead + trimmed.len(), message: "expected closing `]`".into() })
            }
        };
        if close < open {
            return Err(Error::Parse { column: lead, message: "empty encoding".into() });
        }
        let body = &trimmed[open..close];
        let mut groups = Vec::new();
        let mut col = lead + open;
        for group in body.split(';') {
            let mut targets = Vec::new();
            let mut gcol = col;
            for item in group.split(',') {
                let item_lead = item.len() - item.trim_start().len();
                let s = item.trim();
                let label: u8 = s.parse().map_err(|_| Error::Parse {
                    column: gcol + item_lead,
                    message: if s.is_empty() { "missing vertex label".into() } else { format!("invalid vertex label `{s}`") },
                })?;
                targets.push(label);
                gcol += item.len() + 1;
            }
            if targets.len() != dim {
                return Err(Error::Parse {
                    column: col,
                    message: format!("vertex {} has {} targets, expected {dim}", groups.len() + 1, targets.len()),
                });
            }
            groups.push(targets);
            col += group.len() + 1;
        }
        MicroGraph::new(dim, has_sink, &groups)
    }

    /// Bracket encoding without spaces.
    pub fn encoding(&self) -> String {
        self.to_string()
    }

    fn map_labels(&self, f: impl Fn(VertexRole) -> VertexRole) -> MicroGraph {
        let relabel = |t: u8| -> u8 {
            match f(self.role(t)) {
                VertexRole::Sink => 0,
                VertexRole::LeviCivita(k) => self.lc_label(k),
                VertexRole::Casimir { owner, species } => self.casimir_label(owner, species),
            }
        };
        MicroGraph { targets: self.targets.iter().map(|&t| relabel(t)).collect(), ..self.clone() }
    }
}

impl fmt::Display for MicroGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for k in 0..self.n_lc() {
            if k > 0 {
                write!(f, ";")?;
            }
            for (j, t) in self.edges_of(k).iter().enumerate() {
                if j > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{t}")?;
            }
        }
        write!(f, "]")
    }
}

impl fmt::Debug for MicroGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}D{}{}", self.dim, if self.sink { "+sink" } else { "" }, self)
    }
}

/// All permutations of `0..n` with their signs, in lexicographic order.
pub fn permutations(n: usize) -> Vec<(Vec<usize>, i32)> {
    let mut out = Vec::new();
    let mut current: Vec<usize> = (0..n).collect();
    loop {
        out.push((current.clone(), permutation_sign(&current)));
        // next lexicographic permutation
        let Some(i) = (1..n).rev().find(|&i| current[i - 1] < current[i]) else { break };
        let j = (i..n).rev().find(|&j| current[j] > current[i - 1]).unwrap();
        current.swap(i - 1, j);
        current[i..].reverse();
    }
    out
}

/// Sign of the permutation sorting `seq` (strict inversions).
pub fn permutation_sign<T: Ord>(seq: &[T]) -> i32 {
    let mut inv = 0;
    for i in 0..seq.len() {
        for j in i + 1..seq.len() {
            if seq[i] > seq[j] {
                inv += 1;
            }
        }
    }
    if inv % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Canonical representative of an isomorphism class.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CanonicalForm {
    /// Minimal relabeled graph with each vertex's targets sorted.
    pub graph: MicroGraph,
    /// `φ(g) = sign · φ(canonical graph)`.
    pub sign: i32,
    /// The class admits an orientation-reversing automorphism, so `φ(g) = 0`.
    pub odd: bool,
}

impl CanonicalForm {
    /// Hashable identity of the class.
    pub fn key(&self) -> String {
        format!("{}d{}{}", self.graph.dim, if self.graph.sink { "s" } else { "" }, self.graph)
    }
}

/// Minimum over relabelings of the encoding with each vertex's targets sorted.
/// Levi-Civita vertices are permuted among themselves and the Casimirs of
/// each species among themselves (independently of their owners: `φ` only
/// sees vertex contents); the sink is fixed. The sign is the parity of the
/// per-vertex edge reorderings.
pub fn canonical_form(g: &MicroGraph) -> CanonicalForm {
    let n = g.n_lc();
    let d = g.dim();
    let perms = permutations(n);
    let mut best: Option<(Vec<u8>, i32)> = None;
    let mut odd = false;
    let mut flat = vec![0u8; n * d];
    let mut edges = Vec::with_capacity(d);
    // one permutation index for the Levi-Civita block and one per species
    for choice in odometer(&vec![perms.len(); 1 + g.n_casimirs()]) {
        let lc = &perms[choice[0]].0;
        let mut sign = 1;
        for k in 0..n {
            edges.clear();
            edges.extend(g.edges_of(k).iter().map(|&t| match g.role(t) {
                VertexRole::Sink => 0,
                VertexRole::LeviCivita(j) => (1 + lc[j]) as u8,
                VertexRole::Casimir { owner, species } => {
                    (1 + n * species as usize + perms[choice[species as usize]].0[owner]) as u8
                }
            }));
            sign *= permutation_sign(&edges);
            edges.sort_unstable();
            flat[lc[k] * d..(lc[k] + 1) * d].copy_from_slice(&edges);
        }
        match &best {
            Some((b, s)) if *b == flat => {
                if *s != sign {
                    odd = true;
                }
            }
            Some((b, _)) if *b < flat => {}
            _ => best = Some((flat.clone(), sign)),
        }
    }
    let (flat, sign) = best.expect("at least one relabeling");
    let graph = MicroGraph::from_flat(d, g.sink, n, flat);
    // A double edge makes the ε-contraction vanish as well.
    let odd = odd || graph.has_double_edge();
    CanonicalForm { graph, sign, odd }
}

/// Keeps the first graph of every isomorphism class, in input order.
pub fn dedup(graphs: impl IntoIterator<Item = MicroGraph>) -> Vec<MicroGraph> {
    let mut seen = HashSet::new();
    graphs.into_iter().filter(|g| seen.insert(canonical_form(g).key())).collect()
}

/// All connected 2D Kontsevich graphs with one sink and `n_lc` Levi-Civita
/// vertices, each emitting two distinct targets, with exactly one edge into the
/// sink, up to isomorphism. Returned as canonical representatives sorted by encoding.
pub fn generate_2d_vector_graphs(n_lc: usize) -> Vec<MicroGraph> {
    assert!(n_lc >= 1);
    let labels: Vec<u8> = (0..=n_lc as u8).collect();
    let pairs: Vec<[u8; 2]> = labels
        .iter()
        .flat_map(|&a| labels.iter().filter(move |&&b| b != a).map(move |&b| [a, b]))
        .collect();
    let mut classes = BTreeSet::new();
    let mut choice = vec![0usize; n_lc];
    loop {
        let targets: Vec<u8> = choice.iter().flat_map(|&c| pairs[c]).collect();
        if targets.iter().filter(|&&t| t == 0).count() == 1 {
            let g = MicroGraph::from_flat(2, true, n_lc, targets);
            if !g.is_connected() {
                if !advance(&mut choice, pairs.len()) {
                    break;
                }
                continue;
            }
            classes.insert(canonical_form(&g).graph);
        }
        if !advance(&mut choice, pairs.len()) {
            break;
        }
    }
    classes.into_iter().collect()
}

/// Odometer increment; false once every digit wrapped.
fn advance(digits: &mut [usize], base: usize) -> bool {
    for d in digits.iter_mut().rev() {
        *d += 1;
        if *d < base {
            return true;
        }
        *d = 0;
    }
    false
}

fn odometer(bases: &[usize]) -> impl Iterator<Item = Vec<usize>> + '_ {
    let mut cur = vec![0usize; bases.len()];
    let mut done = bases.contains(&0);
    core::iter::from_fn(move || {
        if done {
            return None;
        }
        let out = cur.clone();
        done = true;
        for (d, &b) in cur.iter_mut().zip(bases).rev() {
            *d += 1;
            if *d < b {
                done = false;
                break;
            }
            *d = 0;
        }
        Some(out)
    })
}

/// Hamiltonian micro-graphs: two Levi-Civita vertices, `d − 2` Casimirs each,
/// no sink, two free edges per vertex over all vertices without double edges,
/// own-Casimir edges last. Canonical representatives sorted by encoding.
pub fn generate_hamiltonian_micrographs(dim: usize) -> Result<Vec<MicroGraph>, Error> {
    if !(2..=MAX_DIM).contains(&dim) {
        return Err(Error::UnsupportedDimension(dim));
    }
    let n = 2;
    let shell = MicroGraph::from_flat(dim, false, n, vec![0; n * dim]);
    let max_label = shell.max_label() as u8;
    let per_vertex: Vec<Vec<Vec<u8>>> = (0..n)
        .map(|k| {
            let own: Vec<u8> = (1..=(dim - 2) as u8).map(|c| shell.casimir_label(k, c)).collect();
            let free: Vec<u8> = (1..=max_label).filter(|t| !own.contains(t)).collect();
            let mut lists = Vec::new();
            for &a in &free {
                for &b in &free {
                    if a != b {
                        let mut l = vec![a, b];
                        l.extend(&own);
                        lists.push(l);
                    }
                }
            }
            lists
        })
        .collect();
    let mut classes = BTreeSet::new();
    for choice in odometer(&[per_vertex[0].len(), per_vertex[1].len()]) {
        let targets: Vec<u8> = (0..n).flat_map(|k| per_vertex[k][choice[k]].iter().copied()).collect();
        classes.insert(canonical_form(&MicroGraph::from_flat(dim, false, n, targets)).graph);
    }
    Ok(classes.into_iter().collect())
}

/// The `dim`-dimensional descendants of a 2D graph: add `dim − 2` Casimirs to
/// every Levi-Civita vertex (edges to them ordered last) and redirect each
/// original edge aimed at a Levi-Civita vertex `j` over `j` and its Casimirs.
/// Edges to the sink stay. Candidates with a double edge are dropped; no
/// isomorphism dedup is applied here (see [`descendant_family`]).
pub fn descendants(g: &MicroGraph, dim: usize) -> Result<Vec<MicroGraph>, Error> {
    if g.dim() != 2 {
        return Err(Error::Dimension { expected: 2, found: g.dim() });
    }
    if !(2..=MAX_DIM).contains(&dim) {
        return Err(Error::UnsupportedDimension(dim));
    }
    let n = g.n_lc();
    let shell = MicroGraph::from_flat(dim, g.sink, n, vec![0; n * dim]);
    // Options for each of the 2n original edges.
    let options: Vec<Vec<u8>> = g
        .targets
        .iter()
        .map(|&t| match g.role(t) {
            VertexRole::LeviCivita(j) => {
                let mut o = vec![shell.lc_label(j)];
                o.extend((1..=(dim - 2) as u8).map(|c| shell.casimir_label(j, c)));
                o
            }
            _ => vec![t],
        })
        .collect();
    let bases: Vec<usize> = options.iter().map(|o| o.len()).collect();
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for choice in odometer(&bases) {
        let mut targets = Vec::with_capacity(n * dim);
        for k in 0..n {
            targets.push(options[2 * k][choice[2 * k]]);
            targets.push(options[2 * k + 1][choice[2 * k + 1]]);
            targets.extend((1..=(dim - 2) as u8).map(|c| shell.casimir_label(k, c)));
        }
        let h = MicroGraph::from_flat(dim, g.sink, n, targets);
        if !h.has_double_edge() && seen.insert(h.targets.clone()) {
            out.push(h);
        }
    }
    Ok(out)
}

/// Union of the descendants of several 2D graphs, deduplicated up to
/// isomorphism (first representative kept).
pub fn descendant_family(sources: &[MicroGraph], dim: usize) -> Result<Vec<MicroGraph>, Error> {
    let mut all = Vec::new();
    for g in sources {
        all.extend(descendants(g, dim)?);
    }
    Ok(dedup(all))
}

/// Adds one Casimir vertex per Levi-Civita vertex; the new edge is ordered last.
pub fn embed(g: &MicroGraph) -> Result<MicroGraph, Error> {
    let dim = g.dim() + 1;
    if dim > MAX_DIM {
        return Err(Error::UnsupportedDimension(dim));
    }
    let n = g.n_lc();
    let shell = MicroGraph::from_flat(dim, g.sink, n, vec![0; n * dim]);
    let new_species = (dim - 2) as u8;
    let mut targets = Vec::with_capacity(n * dim);
    for k in 0..n {
        // Casimir labels do not depend on the number of species, so old labels carry over.
        targets.extend_from_slice(g.edges_of(k));
        targets.push(shell.casimir_label(k, new_species));
    }
    Ok(MicroGraph::from_flat(dim, g.sink, n, targets))
}

/// Exchanges the `a¹` and `a²` Casimir vertices of every structure in 4D; edge
/// positions are kept.
pub fn swap_casimirs(g: &MicroGraph) -> Result<MicroGraph, Error> {
    if g.dim() != 4 {
        return Err(Error::Dimension { expected: 4, found: g.dim() });
    }
    Ok(g.map_labels(|r| match r {
        VertexRole::Casimir { owner, species } => VertexRole::Casimir { owner, species: 3 - species },
        other => other,
    }))
}

/// Parses a whitespace-separated list of encodings (used by fixture tables and
/// the command line).
pub fn parse_list(text: &str, dim: usize, has_sink: bool) -> Result<Vec<MicroGraph>, Error> {
    text.split_whitespace().map(|t| MicroGraph::parse(t, dim, has_sink)).collect()
}
