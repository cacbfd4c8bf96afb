//! Versioned reference data (named graphs, Hamiltonians, combinations and
//! expected relations), compiled into the crate from `data/fixtures.txt`.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::Error;
use crate::eval::EvalMode;
use crate::graph::MicroGraph;
use crate::rational::Rational;

pub const FIXTURE_TEXT: &str = include_str!("../data/fixtures.txt");

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FixtureKind {
    Graph,
    Hamiltonian,
}

impl FixtureKind {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "graph" => Some(FixtureKind::Graph),
            "hamiltonian" => Some(FixtureKind::Hamiltonian),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NamedGraph {
    pub dim: usize,
    pub kind: FixtureKind,
    pub name: String,
    pub graph: MicroGraph,
}

/// `Σ c_k · name_k`.
pub type Terms = Vec<(Rational, String)>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Combination {
    pub id: String,
    pub dim: usize,
    pub kind: FixtureKind,
    pub mode: EvalMode,
    pub terms: Terms,
}

/// `kernel = Σ c_j d_P(H_j)`, with symmetrized Hamiltonians in 4D.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Expression {
    pub id: String,
    pub dim: usize,
    pub kernel: String,
    pub terms: Terms,
}

/// `c_k · φ(name_k)` coincide for all `k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SynonymRelation {
    pub dim: usize,
    pub kind: FixtureKind,
    pub terms: Terms,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndependentSet {
    pub dim: usize,
    pub kind: FixtureKind,
    pub mode: EvalMode,
    pub names: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Fixtures {
    pub version: u32,
    pub graphs: Vec<NamedGraph>,
    pub combinations: Vec<Combination>,
    pub expressions: Vec<Expression>,
    pub synonyms: Vec<SynonymRelation>,
    pub vanishing: Vec<(usize, FixtureKind, String)>,
    pub independent: Vec<IndependentSet>,
    pub zero_bracket: Vec<(usize, Vec<String>)>,
    /// Cells `(row, col)` of the pair-search tables where a solution exists.
    pub table_yes: Vec<(usize, Vec<(u32, u32)>)>,
}

impl Fixtures {
    pub fn builtin() -> Self {
        Self::parse(FIXTURE_TEXT).expect("built-in fixtures are well formed")
    }

    pub fn parse(text: &str) -> Result<Self, Error> {
        let mut fx = Fixtures::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            fx.parse_line(line).map_err(|e| Error::Parse { column: 0, message: format!("line {}: {e}", n + 1) })?;
        }
        Ok(fx)
    }

    fn parse_line(&mut self, line: &str) -> Result<(), String> {
        let w: Vec<&str> = line.split_whitespace().collect();
        let dim = |s: &str| -> Result<usize, String> { s.parse().map_err(|_| format!("bad dimension `{s}`")) };
        let kind = |s: &str| FixtureKind::parse(s).ok_or_else(|| format!("bad kind `{s}`"));
        let mode = |s: &str| s.parse::<EvalMode>().map_err(|e| e.to_string());
        let need = |k: usize| if w.len() < k { Err(format!("expected at least {k} fields")) } else { Ok(()) };
        match w[0] {
            "version" => {
                need(2)?;
                self.version = w[1].parse().map_err(|_| "bad version".to_string())?;
            }
            "graph" | "hamiltonian" => {
                need(4)?;
                let d = dim(w[1])?;
                let k = kind(w[0])?;
                let graph = MicroGraph::parse(w[3], d, k == FixtureKind::Graph).map_err(|e| e.to_string())?;
                self.graphs.push(NamedGraph { dim: d, kind: k, name: w[2].into(), graph });
            }
            "combination" => {
                need(6)?;
                self.combinations.push(Combination {
                    id: w[1].into(),
                    dim: dim(w[2])?,
                    kind: kind(w[3])?,
                    mode: mode(w[4])?,
                    terms: parse_terms(&w[5..])?,
                });
            }
            "expression" => {
                need(5)?;
                self.expressions.push(Expression {
                    id: w[1].into(),
                    dim: dim(w[2])?,
                    kernel: w[3].into(),
                    terms: parse_terms(&w[4..])?,
                });
            }
            "synonyms" => {
                need(5)?;
                self.synonyms.push(SynonymRelation { dim: dim(w[1])?, kind: kind(w[2])?, terms: parse_terms(&w[3..])? });
            }
            "vanishing" => {
                need(4)?;
                self.vanishing.push((dim(w[1])?, kind(w[2])?, w[3].into()));
            }
            "independent" => {
                need(5)?;
                self.independent.push(IndependentSet {
                    dim: dim(w[1])?,
                    kind: kind(w[2])?,
                    mode: mode(w[3])?,
                    names: w[4..].iter().map(|s| s.to_string()).collect(),
                });
            }
            "zero-bracket" => {
                need(3)?;
                self.zero_bracket.push((dim(w[1])?, w[2..].iter().map(|s| s.to_string()).collect()));
            }
            "table" => {
                need(3)?;
                if w[2] != "yes" {
                    return Err("expected `yes`".into());
                }
                let mut cells = Vec::new();
                for c in &w[3..] {
                    let (a, b) = c.split_once(',').ok_or_else(|| format!("bad cell `{c}`"))?;
                    let a = a.parse().map_err(|_| format!("bad cell `{c}`"))?;
                    let b = b.parse().map_err(|_| format!("bad cell `{c}`"))?;
                    cells.push((a, b));
                }
                self.table_yes.push((dim(w[1])?, cells));
            }
            other => return Err(format!("unknown record `{other}`")),
        }
        Ok(())
    }

    pub fn named(&self, dim: usize, kind: FixtureKind) -> impl Iterator<Item = &NamedGraph> {
        self.graphs.iter().filter(move |g| g.dim == dim && g.kind == kind)
    }

    pub fn graph(&self, dim: usize, kind: FixtureKind, name: &str) -> Result<&MicroGraph, Error> {
        self.named(dim, kind)
            .find(|g| g.name == name)
            .map(|g| &g.graph)
            .ok_or_else(|| Error::UnknownFixture(format!("{kind:?} {name} in dimension {dim}")))
    }

    /// Graphs of one kind and dimension, in file order.
    pub fn graph_list(&self, dim: usize, kind: FixtureKind) -> Vec<MicroGraph> {
        self.named(dim, kind).map(|g| g.graph.clone()).collect()
    }

    pub fn combination(&self, dim: usize, id: &str) -> Result<&Combination, Error> {
        self.combinations
            .iter()
            .find(|c| c.dim == dim && c.id == id)
            .ok_or_else(|| Error::UnknownFixture(format!("combination {id} in dimension {dim}")))
    }

    pub fn expressions(&self, dim: usize) -> impl Iterator<Item = &Expression> {
        self.expressions.iter().filter(move |e| e.dim == dim)
    }

    pub fn kernel_combinations(&self, dim: usize) -> Vec<&Combination> {
        self.expressions(dim).filter_map(|e| self.combination(dim, &e.kernel).ok()).collect()
    }

    /// The graphs and coefficients of a named combination.
    pub fn resolve(&self, c: &Combination) -> Result<(Vec<Rational>, Vec<MicroGraph>), Error> {
        self.resolve_terms(c.dim, c.kind, &c.terms)
    }

    pub fn resolve_terms(
        &self,
        dim: usize,
        kind: FixtureKind,
        terms: &Terms,
    ) -> Result<(Vec<Rational>, Vec<MicroGraph>), Error> {
        let mut coeffs = Vec::new();
        let mut graphs = Vec::new();
        for (c, name) in terms {
            graphs.push(self.graph(dim, kind, name)?.clone());
            coeffs.push(c.clone());
        }
        Ok((coeffs, graphs))
    }

    pub fn table_yes(&self, dim: usize) -> Option<&[(u32, u32)]> {
        self.table_yes.iter().find(|t| t.0 == dim).map(|t| t.1.as_slice())
    }
}

fn parse_terms(words: &[&str]) -> Result<Terms, String> {
    words
        .iter()
        .map(|w| {
            let (c, name) = w.split_once('*').ok_or_else(|| format!("bad term `{w}`"))?;
            let c: Rational = c.parse().map_err(|_| format!("bad coefficient `{c}`"))?;
            Ok((c, name.to_string()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_loads() {
        let fx = Fixtures::builtin();
        assert_eq!(fx.version, 1);
        assert_eq!(fx.named(2, FixtureKind::Graph).count(), 14);
        assert_eq!(fx.named(3, FixtureKind::Hamiltonian).count(), 7);
        assert_eq!(fx.named(4, FixtureKind::Hamiltonian).count(), 21);
        assert_eq!(fx.table_yes(3).unwrap().len(), 5);
        let x = fx.combination(3, "X").unwrap();
        let (c, g) = fx.resolve(x).unwrap();
        assert_eq!(c.len(), 10);
        assert_eq!(g[0].encoding(), "[0,1,4;1,3,5;1,2,6]");
        assert_eq!(fx.kernel_combinations(4).len(), 7);
    }

    #[test]
    fn reports_bad_lines() {
        assert!(Fixtures::parse("graph 2 1 [0,1;2]").is_err());
        assert!(Fixtures::parse("frobnicate").is_err());
        let fx = Fixtures::parse("combination A 2 graph plain 1/2*3 -1*4").unwrap();
        assert_eq!(fx.combinations[0].terms[0].0, Rational::new(1, 2));
        assert!(matches!(fx.graph(2, FixtureKind::Graph, "3"), Err(Error::UnknownFixture(_))));
    }
}
