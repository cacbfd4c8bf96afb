use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};
use ngc::budget::parse_duration;
use ngc::cache::{DiskCache, VerifyStatus};
use ngc::config::{FamilySelector, RunConfig};
use ngc::exit;
use ngc::export::{manifest, result_json, table_csv, table_json, table_text};
use ngc::run::{fixture_failures, pair_table, pipeline, table_mismatches, Outcome, Session};
use ngc_core::eval::{EvalMode, GraphEvaluator};
use ngc_core::graph::{
    descendants, embed, generate_2d_vector_graphs, generate_hamiltonian_micrographs, MicroGraph,
};
use ngc_core::linalg::Solve;
use ngc_core::multivector::Shard;
use ngc_core::pipeline::Stages;
use ngc_core::tetra::orient_and_apply_shard;
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "ngc", version, about = "Nambu micro-graph calculus: evaluate graphs, run flow pipelines, manage the cache")]
struct Cli {
    /// Evaluation cache directory.
    #[arg(long, global = true, env = "NGC_CACHE_DIR")]
    cache_dir: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Write results here instead of stdout (a directory for `pipeline` and `table`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate one graph encoding.
    Eval {
        encoding: String,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value = "plain")]
        mode: String,
        /// Force a sink-less graph (a function); by default a graph has a sink iff some edge targets 0.
        #[arg(long)]
        function: bool,
    },
    /// List generated graphs: 2D vector graphs, or Hamiltonian micro-graphs.
    Generate {
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long)]
        hamiltonians: bool,
        /// Levi-Civita vertices of generated 2D vector graphs.
        #[arg(long, default_value_t = 3)]
        lc: usize,
    },
    /// Raw descendants of 2D graphs in a higher dimension.
    Descendants {
        encodings: Vec<String>,
        #[arg(long, default_value_t = 3)]
        dim: usize,
    },
    /// Add one Casimir per Levi-Civita vertex.
    Embed { encoding: String, #[arg(long, default_value_t = 2)] dim: usize },
    /// The tetrahedral flow of the Nambu bivector.
    Tetra {
        #[arg(long, default_value_t = 2)]
        dim: usize,
        /// Only the coordinates in residue class `k` of `n` (as `k/n`).
        #[arg(long)]
        shard: Option<String>,
    },
    /// Trivialization, homogeneous kernel and Hamiltonian expressions.
    Pipeline {
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value = "default")]
        family: String,
        #[arg(long)]
        mode: Option<String>,
        /// Comma-separated subset of solve,kernel,hamiltonians.
        #[arg(long, default_value = "solve,kernel,hamiltonians")]
        stages: String,
        #[arg(long)]
        budget: Option<String>,
    },
    /// Pair-search table over descendants of 2D graph pairs.
    Table {
        #[arg(long, default_value_t = 3)]
        dim: usize,
        /// Per-cell budget (defaults: 1h in 3D, 24h in 4D).
        #[arg(long)]
        budget: Option<String>,
    },
    /// Inspect the evaluation cache.
    Cache {
        #[command(subcommand)]
        action: CacheAction,
    },
}

#[derive(Subcommand)]
enum CacheAction {
    List,
    Clear,
    /// Check digests and re-evaluate entries.
    Verify {
        /// Re-evaluate only the first N entries (digests are always checked).
        #[arg(long)]
        sample: Option<usize>,
    },
}

enum Failure {
    Input(String),
    Assertion(String),
    Budget(String),
    Other(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Input(_) => exit::INPUT,
            Failure::Assertion(_) => exit::ASSERTION,
            Failure::Budget(_) => exit::BUDGET,
            Failure::Other(_) => exit::FAILURE,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Input(m) | Failure::Assertion(m) | Failure::Budget(m) | Failure::Other(m) => m,
        }
    }
}

impl From<ngc_core::Error> for Failure {
    fn from(e: ngc_core::Error) -> Self {
        use ngc_core::Error as E;
        match e {
            E::Parse { .. } | E::Structure(_) | E::UnsupportedDimension(_) | E::Dimension { .. } | E::UnknownFixture(_) => {
                Failure::Input(e.to_string())
            }
            _ => Failure::Other(e.to_string()),
        }
    }
}

impl From<ngc::run::SessionError> for Failure {
    fn from(e: ngc::run::SessionError) -> Self {
        match e {
            ngc::run::SessionError::Core(c) => c.into(),
            other => Failure::Other(other.to_string()),
        }
    }
}

impl From<ngc::cache::CacheError> for Failure {
    fn from(e: ngc::cache::CacheError) -> Self {
        Failure::Other(e.to_string())
    }
}

fn input<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, Failure> {
    r.map_err(|e| Failure::Input(e.to_string()))
}

/// Parse errors point at the offending column.
fn parse_graph(text: &str, dim: usize, sink: Option<bool>) -> Result<MicroGraph, Failure> {
    let sink = sink.unwrap_or_else(|| text.split(|c: char| !c.is_ascii_digit()).any(|t| t == "0"));
    MicroGraph::parse(text, dim, sink).map_err(|e| match e {
        ngc_core::Error::Parse { column, ref message } => {
            Failure::Input(format!("{text}\n{}^ {message}", " ".repeat(column)))
        }
        other => other.into(),
    })
}

fn write_out(path: &Path, text: &str) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Failure::Other(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, text).map_err(|e| Failure::Other(format!("{}: {e}", path.display())))
}

fn emit(cli: &Cli, file: &str, text: &str) -> Result<(), Failure> {
    match &cli.out {
        Some(dir) => write_out(&dir.join(file), text),
        None => {
            print!("{text}");
            if !text.ends_with('\n') {
                println!();
            }
            Ok(())
        }
    }
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("json values serialize") + "\n"
}

fn graph_lines(cli: &Cli, graphs: &[MicroGraph]) -> Result<(), Failure> {
    let text = match cli.format {
        Format::Json => pretty(&json!(graphs.iter().map(|g| g.encoding()).collect::<Vec<_>>())),
        _ => graphs.iter().map(|g| g.encoding() + "\n").collect(),
    };
    emit(cli, "graphs.txt", &text)
}

fn stages_of(s: &str) -> Result<Stages, Failure> {
    let mut st = Stages { solve: false, kernel: false, hamiltonians: false };
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part {
            "solve" => st.solve = true,
            "kernel" => st.kernel = true,
            "hamiltonians" => st.hamiltonians = true,
            other => return Err(Failure::Input(format!("unknown stage `{other}`"))),
        }
    }
    Ok(st)
}

fn budget_of(s: &Option<String>) -> Result<Option<Duration>, Failure> {
    s.as_deref().map(parse_duration).transpose().map_err(Failure::Input)
}

fn solve_text(s: &Solve) -> String {
    match s {
        Solve::Solution(x) => x.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" "),
        Solve::NoSolution => "no solution".into(),
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    match &cli.cmd {
        Cmd::Eval { encoding, dim, mode, function } => {
            let mode: EvalMode = input(mode.parse())?;
            let g = parse_graph(encoding, *dim, function.then_some(false))?;
            let mut s = Session::new(*dim, cli.cache_dir.as_deref())?;
            let v = s.eval.evaluate(&g, mode)?;
            let text = match cli.format {
                Format::Json => pretty(&json!({ "encoding": g.encoding(), "dim": dim, "mode": mode.as_str(), "value": v.to_string() })),
                _ => format!("{v}\n"),
            };
            emit(cli, "eval.txt", &text)
        }
        Cmd::Generate { dim, hamiltonians, lc } => {
            let gs = if *hamiltonians {
                generate_hamiltonian_micrographs(*dim)?
            } else if *dim == 2 && *lc >= 1 {
                generate_2d_vector_graphs(*lc)
            } else {
                return Err(Failure::Input("vector graphs are generated in dimension 2 (use descendants)".into()));
            };
            graph_lines(cli, &gs)
        }
        Cmd::Descendants { encodings, dim } => {
            let mut out = Vec::new();
            for e in encodings {
                out.extend(descendants(&parse_graph(e, 2, None)?, *dim)?);
            }
            graph_lines(cli, &out)
        }
        Cmd::Embed { encoding, dim } => graph_lines(cli, &[embed(&parse_graph(encoding, *dim, None)?)?]),
        Cmd::Tetra { dim, shard } => {
            let sh = match shard {
                None => Shard::ALL,
                Some(s) => {
                    let (k, n) = s.split_once('/').ok_or_else(|| Failure::Input(format!("bad shard `{s}` (k/n)")))?;
                    let k: u32 = input(k.parse())?;
                    let n: u32 = input(n.parse())?;
                    Shard::new(n, k)?
                }
            };
            let p = ngc_core::nambu::nambu_bivector(*dim)?;
            let q = orient_and_apply_shard(&p, sh)?;
            let text = match cli.format {
                Format::Json => pretty(&json!({ "dim": dim, "terms": q.n_terms(), "value": q.to_string() })),
                _ => format!("{q}\n"),
            };
            emit(cli, "tetra.txt", &text)
        }
        Cmd::Pipeline { dim, family, mode, stages, budget } => {
            let mut cfg = RunConfig::new(*dim);
            cfg.family = input(family.parse::<FamilySelector>())?;
            if let Some(m) = mode {
                cfg.mode = input(m.parse())?;
            }
            cfg.stages = stages_of(stages)?;
            cfg.budget = budget_of(budget)?;
            cfg.cache_dir = cli.cache_dir.clone();
            cfg.out = cli.out.clone();
            cfg.validate().map_err(Failure::Input)?;
            let mut s = Session::new(cfg.dim, cfg.cache_dir.as_deref())?;
            let man = manifest(&cfg, &s.fx);
            match pipeline(&cfg, &mut s)? {
                Outcome::OutOfBudget(t) => {
                    if let Some(dir) = &cli.out {
                        let mut m = man.clone();
                        m["outcome"] = json!({ "status": "budget-exceeded", "elapsed_secs": t.as_secs_f64() });
                        write_out(&dir.join("manifest.json"), &pretty(&m))?;
                    }
                    Err(Failure::Budget(format!("budget exceeded after {:.1}s", t.as_secs_f64())))
                }
                Outcome::Done(r) => {
                    let text = match cli.format {
                        Format::Text => {
                            let mut t = format!("dim {} family {} mode {} ({} graphs)\n", r.dim, r.family, r.mode, r.graphs.len());
                            if let Some(sol) = &r.solution {
                                t += &format!("solution: {}\n", solve_text(sol));
                            }
                            for (k, y) in r.kernel.iter().enumerate() {
                                t += &format!("kernel {}: {}\n", k + 1, solve_text(&Solve::Solution(y.clone())));
                            }
                            for (k, e) in r.expressions.iter().enumerate() {
                                t += &format!("hamiltonian expression {}: {}\n", k + 1, solve_text(e));
                            }
                            t
                        }
                        _ => pretty(&result_json(&r, &s.fx)),
                    };
                    emit(cli, "result.json", &text)?;
                    if let Some(dir) = &cli.out {
                        write_out(&dir.join("manifest.json"), &pretty(&man))?;
                    }
                    for e in s.cache_errors() {
                        eprintln!("warning: {e}");
                    }
                    let fails = fixture_failures(&cfg, &r, &s.fx);
                    if fails.is_empty() {
                        Ok(())
                    } else {
                        Err(Failure::Assertion(fails.join("; ")))
                    }
                }
            }
        }
        Cmd::Table { dim, budget } => {
            if !(3..=4).contains(dim) {
                return Err(Failure::Input("tables exist in dimension 3 and 4".into()));
            }
            let default = Duration::from_secs(if *dim == 3 { 3600 } else { 86_400 });
            let cell = budget_of(budget)?.unwrap_or(default);
            let mut cfg = RunConfig::new(*dim);
            cfg.cell_budget = Some(cell);
            cfg.cache_dir = cli.cache_dir.clone();
            let mut s = Session::new(*dim, cli.cache_dir.as_deref())?;
            let t = pair_table(&mut s, Some(cell), |r, c, st, el| {
                eprintln!("cell ({r},{c}): {} in {:.1}s", st.as_str(), el.as_secs_f64());
            })?;
            let text = match cli.format {
                Format::Csv => table_csv(&t),
                Format::Json => pretty(&table_json(*dim, &t)),
                Format::Text => table_text(&t),
            };
            let file = if cli.format == Format::Json { "table.json" } else { "table.csv" };
            emit(cli, file, &text)?;
            if let Some(dir) = &cli.out {
                write_out(&dir.join("manifest.json"), &pretty(&manifest(&cfg, &s.fx)))?;
            }
            let bad = table_mismatches(*dim, &t, &s.fx);
            if !bad.is_empty() {
                let cells: Vec<String> = bad.iter().map(|(r, c, st)| format!("({r},{c})={}", st.as_str())).collect();
                return Err(Failure::Assertion(format!("cells differ from the reference table: {}", cells.join(" "))));
            }
            if t.values().any(|st| *st == ngc_core::pipeline::CellStatus::Timeout) {
                return Err(Failure::Budget("some cells timed out".into()));
            }
            Ok(())
        }
        Cmd::Cache { action } => {
            let dir = cli.cache_dir.clone().ok_or_else(|| Failure::Input("no cache directory (--cache-dir or NGC_CACHE_DIR)".into()))?;
            match action {
                CacheAction::List | CacheAction::Verify { .. } if !dir.is_dir() => {
                    Err(Failure::Input(format!("cache directory {} does not exist", dir.display())))
                }
                CacheAction::List => {
                    let cache = DiskCache::open(&dir)?;
                    let text: String = cache.list()?.iter().map(|l| format!("{}\t{} terms\n", l.key, l.terms)).collect();
                    emit(cli, "cache.txt", &text)
                }
                CacheAction::Clear => {
                    let n = DiskCache::open(&dir)?.clear()?;
                    eprintln!("removed {n} entries");
                    Ok(())
                }
                CacheAction::Verify { sample } => {
                    let reports = DiskCache::open(&dir)?.verify(*sample)?;
                    let mut bad = 0;
                    let mut text = String::new();
                    for r in &reports {
                        let st = match &r.status {
                            VerifyStatus::Ok => "ok".to_string(),
                            VerifyStatus::Mismatch => {
                                bad += 1;
                                "MISMATCH".to_string()
                            }
                            VerifyStatus::Corrupt(why) => {
                                bad += 1;
                                format!("CORRUPT ({why})")
                            }
                        };
                        text += &format!("{}\t{st}\n", r.key);
                    }
                    emit(cli, "verify.txt", &text)?;
                    if bad > 0 {
                        Err(Failure::Assertion(format!("{bad} of {} entries failed verification", reports.len())))
                    } else {
                        Ok(())
                    }
                }
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code() as u8)
        }
    }
}
