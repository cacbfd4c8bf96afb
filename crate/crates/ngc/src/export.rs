//! JSON and CSV renderings of results, tables and run manifests.

use std::collections::BTreeMap;

use ngc_core::fixtures::{FixtureKind, Fixtures};
use ngc_core::linalg::Solve;
use ngc_core::pipeline::{CellStatus, PipelineResult, SamplingPlan, TABLE_COLS, TABLE_ROWS};
use ngc_core::tetra::FLOW_CALIBRATION;
use ngc_core::{canonical_form, MicroGraph, Rational};
use serde_json::{json, Value};

use crate::config::RunConfig;

fn coeffs(v: &[Rational]) -> Value {
    Value::Array(v.iter().map(|c| Value::String(c.to_string())).collect())
}

fn solve_json(s: &Solve) -> Value {
    match s {
        Solve::Solution(x) => json!({ "status": "solution", "coefficients": coeffs(x) }),
        Solve::NoSolution => json!({ "status": "no-solution" }),
    }
}

/// Fixture name of each graph (matched up to isomorphism), if it has one.
pub fn fixture_names(graphs: &[MicroGraph], fx: &Fixtures, kind: FixtureKind) -> Vec<Option<String>> {
    let Some(dim) = graphs.first().map(|g| g.dim()) else {
        return Vec::new();
    };
    let mut by_key = BTreeMap::new();
    for n in fx.named(dim, kind) {
        by_key.entry(canonical_form(&n.graph).key()).or_insert_with(|| n.name.clone());
    }
    graphs.iter().map(|g| by_key.get(&canonical_form(g).key()).cloned()).collect()
}

fn graph_list(graphs: &[MicroGraph], names: &[Option<String>]) -> Value {
    Value::Array(
        graphs
            .iter()
            .zip(names)
            .enumerate()
            .map(|(i, (g, n))| json!({ "index": i + 1, "name": n, "encoding": g.encoding() }))
            .collect(),
    )
}

pub fn result_json(r: &PipelineResult, fx: &Fixtures) -> Value {
    let names = fixture_names(&r.graphs, fx, FixtureKind::Graph);
    let ham_names = fixture_names(&r.hamiltonians, fx, FixtureKind::Hamiltonian);
    json!({
        "dim": r.dim,
        "family": r.family,
        "mode": r.mode.as_str(),
        "graphs": graph_list(&r.graphs, &names),
        "solution": r.solution.as_ref().map(solve_json),
        "kernel": Value::Array(r.kernel.iter().map(|k| coeffs(k)).collect()),
        "hamiltonians": graph_list(&r.hamiltonians, &ham_names),
        "expressions": Value::Array(r.expressions.iter().map(solve_json).collect()),
        "timing": { "elapsed_secs": r.elapsed.map(|d| d.as_secs_f64()) },
    })
}

/// `result_json` without the timing block, for comparing runs.
pub fn result_json_untimed(r: &PipelineResult, fx: &Fixtures) -> Value {
    let mut v = result_json(r, fx);
    v.as_object_mut().expect("object").remove("timing");
    v
}

/// A pair-search table indexed by `(row, col)` 2D graph names.
pub type Table = BTreeMap<(u32, u32), CellStatus>;

pub fn table_csv(t: &Table) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["row".to_string()];
    header.extend(TABLE_COLS.iter().map(|c| c.to_string()));
    w.write_record(&header).expect("in-memory write");
    for r in TABLE_ROWS {
        let mut rec = vec![r.to_string()];
        rec.extend(TABLE_COLS.iter().map(|&c| t.get(&(r, c)).map_or("", |s| s.as_str()).to_string()));
        w.write_record(&rec).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("ascii")
}

pub fn table_json(dim: usize, t: &Table) -> Value {
    let cells: Vec<Value> =
        t.iter().map(|(&(r, c), s)| json!({ "row": r, "col": c, "status": s.as_str() })).collect();
    json!({ "dim": dim, "cells": cells })
}

pub fn table_text(t: &Table) -> String {
    let mut out = format!("{:>4}", "");
    for c in TABLE_COLS {
        out += &format!("{c:>9}");
    }
    out.push('\n');
    for r in TABLE_ROWS {
        out += &format!("{r:>4}");
        for c in TABLE_COLS {
            out += &format!("{:>9}", t.get(&(r, c)).map_or("-", |s| s.as_str()));
        }
        out.push('\n');
    }
    out
}

pub fn manifest(cfg: &RunConfig, fx: &Fixtures) -> Value {
    let plan = SamplingPlan::for_dim(cfg.dim);
    json!({
        "tool": { "name": env!("CARGO_PKG_NAME"), "version": env!("CARGO_PKG_VERSION") },
        "fixtures": { "version": fx.version },
        "flow_calibration": FLOW_CALIBRATION,
        "sampling": { "modulus": plan.modulus, "verify_shards": plan.verify_shards },
        "config": cfg.to_json(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let mut t = Table::new();
        t.insert((2, 8), CellStatus::Yes);
        t.insert((4, 1), CellStatus::No);
        let csv = table_csv(&t);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "row,1,5,6,7,8,12,13");
        assert_eq!(lines[1], "2,,,,,yes,,");
        assert_eq!(lines[2], "4,no,,,,,,");
        assert_eq!(lines.len(), 5);
    }

    #[test]
    fn names_match_up_to_isomorphism() {
        let fx = Fixtures::builtin();
        let g = fx.graph(2, FixtureKind::Graph, "3").unwrap().clone();
        assert_eq!(fixture_names(&[g], &fx, FixtureKind::Graph), vec![Some("3".to_string())]);
    }
}
