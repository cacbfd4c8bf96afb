//! Pipelines and tables driven by a [`RunConfig`].

use std::collections::HashMap;
use std::time::{Duration, Instant};

use ngc_core::eval::{CachedEvaluator, EvalKey, EvalStore, GraphEvaluator};
use ngc_core::fixtures::{FixtureKind, Fixtures};
use ngc_core::linalg::Solve;
use ngc_core::multivector::Shard;
use ngc_core::nambu::{nambu_bivector, NambuBivector};
use ngc_core::pipeline::{
    pair_cell, run_pipeline, CellStatus, PipelineResult, SamplingPlan, TABLE_COLS, TABLE_ROWS,
};
use ngc_core::tetra::orient_and_apply_shard;
use ngc_core::{Error, Multivector};

use crate::budget::Deadline;
use crate::cache::{CacheError, DiskCache};
use crate::config::{FamilySelector, RunConfig};
use crate::export::Table;

/// In-memory only, or backed by a [`DiskCache`].
pub enum Store {
    Memory,
    Disk(DiskCache),
}

impl EvalStore for Store {
    fn load(&mut self, key: &EvalKey) -> Option<Multivector> {
        match self {
            Store::Memory => None,
            Store::Disk(d) => d.load(key),
        }
    }

    fn save(&mut self, key: &EvalKey, value: &Multivector) {
        if let Store::Disk(d) = self {
            d.save(key, value)
        }
    }
}

/// The flow `Q(P)`, computed on demand. Small flows are computed once and
/// restricted; large ones shard by shard, keeping up to `memo_terms` terms of
/// recently requested shards.
pub struct Flow {
    p: NambuBivector,
    full: Option<Multivector>,
    keep_full: bool,
    memo: HashMap<Shard, Multivector>,
    memo_terms: usize,
}

impl Flow {
    pub fn new(p: NambuBivector) -> Self {
        let keep_full = p.dim() <= 3;
        Flow { p, full: None, keep_full, memo: HashMap::new(), memo_terms: 1_000_000 }
    }

    pub fn get(&mut self, s: Shard) -> Result<Multivector, Error> {
        if self.keep_full {
            if self.full.is_none() {
                self.full = Some(orient_and_apply_shard(&self.p, Shard::ALL)?);
            }
            let full = self.full.as_ref().expect("just computed");
            return Ok(if s.is_all() { full.clone() } else { full.restrict(s) });
        }
        if let Some(v) = self.memo.get(&s) {
            return Ok(v.clone());
        }
        let v = orient_and_apply_shard(&self.p, s)?;
        let held: usize = self.memo.values().map(|m| m.n_terms()).sum();
        if held + v.n_terms() > self.memo_terms {
            self.memo.clear();
        }
        if v.n_terms() <= self.memo_terms {
            self.memo.insert(s, v.clone());
        }
        Ok(v)
    }
}

pub struct Session {
    pub fx: Fixtures,
    pub p: NambuBivector,
    pub eval: CachedEvaluator<Store>,
    pub flow: Flow,
    pub plan: SamplingPlan,
}

impl Session {
    pub fn new(dim: usize, cache: Option<&std::path::Path>) -> Result<Self, SessionError> {
        let store = match cache {
            Some(dir) => Store::Disk(DiskCache::open(dir)?),
            None => Store::Memory,
        };
        let p = nambu_bivector(dim)?;
        Ok(Session {
            fx: Fixtures::builtin(),
            flow: Flow::new(p.clone()),
            p,
            eval: CachedEvaluator::with_store(store),
            plan: SamplingPlan::for_dim(dim),
        })
    }

    pub fn cache_errors(&self) -> &[String] {
        match self.eval.store() {
            Store::Disk(d) => &d.errors,
            Store::Memory => &[],
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SessionError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error(transparent)]
    Cache(#[from] CacheError),
}

pub enum Outcome {
    Done(PipelineResult),
    OutOfBudget(Duration),
}

pub fn pipeline(cfg: &RunConfig, s: &mut Session) -> Result<Outcome, Error> {
    let started = Instant::now();
    let graphs = cfg.graphs(&s.fx)?;
    let hams = s.fx.graph_list(cfg.dim, FixtureKind::Hamiltonian);
    let mut budget = Deadline::new(cfg.budget);
    let Session { p, eval, flow, plan, .. } = s;
    let mut source = |sh: Shard| flow.get(sh);
    let r = run_pipeline(p, &cfg.family.to_string(), graphs, hams, cfg.stages, eval, &mut source, *plan, &mut budget)?;
    Ok(match r {
        Ok(mut r) => {
            r.elapsed = Some(started.elapsed());
            Outcome::Done(r)
        }
        Err(_) => Outcome::OutOfBudget(started.elapsed()),
    })
}

/// Disagreements between a default-family result and the built-in fixtures.
pub fn fixture_failures(cfg: &RunConfig, r: &PipelineResult, fx: &Fixtures) -> Vec<String> {
    let mut out = Vec::new();
    if cfg.family != FamilySelector::Default || cfg.mode != ngc_core::pipeline::family_mode(cfg.dim) {
        return out;
    }
    if matches!(r.solution, Some(Solve::NoSolution)) {
        out.push(format!("no trivializing vector field in dimension {}", r.dim));
    }
    if cfg.stages.kernel || cfg.stages.hamiltonians {
        let expected = fx.expressions(cfg.dim).count();
        if r.kernel.len() != expected {
            out.push(format!("kernel dimension {} (expected {expected})", r.kernel.len()));
        }
    }
    for (k, e) in r.expressions.iter().enumerate() {
        if !e.is_solution() {
            out.push(format!("kernel representative {} is not a sum of Hamiltonian fields", k + 1));
        }
    }
    out
}

/// Runs every cell of the pair-search table with its own budget. `progress`
/// sees each cell as it completes.
pub fn pair_table(
    s: &mut Session,
    cell_budget: Option<Duration>,
    mut progress: impl FnMut(u32, u32, CellStatus, Duration),
) -> Result<Table, Error> {
    let mut table = Table::new();
    for r in TABLE_ROWS {
        for c in TABLE_COLS {
            let a = s.fx.graph(2, FixtureKind::Graph, &r.to_string())?.clone();
            let b = s.fx.graph(2, FixtureKind::Graph, &c.to_string())?.clone();
            let mut budget = Deadline::new(cell_budget);
            let Session { p, eval, flow, plan, .. } = s;
            let mut source = |sh: Shard| flow.get(sh);
            let status = pair_cell(p, &a, &b, eval as &mut dyn GraphEvaluator, &mut source, *plan, &mut budget)?;
            progress(r, c, status, budget.elapsed());
            table.insert((r, c), status);
        }
    }
    Ok(table)
}

/// Compares a table with the fixture `yes` cells; returns the differing cells.
pub fn table_mismatches(dim: usize, t: &Table, fx: &Fixtures) -> Vec<(u32, u32, CellStatus)> {
    let yes = fx.table_yes(dim).unwrap_or(&[]);
    t.iter()
        .filter(|(cell, st)| match st {
            CellStatus::Timeout => false,
            CellStatus::Yes => !yes.contains(cell),
            CellStatus::No => yes.contains(cell),
        })
        .map(|(&(r, c), &st)| (r, c, st))
        .collect()
}
