//! Command-line front-end.
//!
//! Every subcommand prints a single JSON object on stdout (compact by
//! default, indented with `--pretty`) and diagnostics on stderr. Identical
//! inputs and seeds produce byte-identical output. Exit codes: 0 success,
//! 1 for an unknown SAT outcome or a non-converged iteration (the JSON is
//! still printed), 2 for input errors.

use crate::algebra::{registry_lookup, SemiringSpec};
use crate::bp::{run_loopy, run_tree, Init, LoopyOptions, Schedule};
use crate::exact::{evaluate_query, EvalOptions};
use crate::format::{digest_hex, parse_dimacs, parse_fg, render_fg, FgDocument};
use crate::graph::FactorGraph;
use crate::query::{classify, parse_query};
use crate::sat::{solve_sat, SatOptions, SolveOutcome};
use crate::sp::{
    enumerate_bp_fixed_points, fixed_point_frequencies, run_sp, sp_integral, MessageGrid, SpMode,
};
use crate::value::Value;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value as Json};
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "semifold",
    about = "Factor-graph inference over commutative semirings",
    version
)]
struct Cli {
    /// Indent the JSON output for human reading.
    #[arg(long, global = true)]
    pretty: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the expanded form at one full assignment.
    Eval {
        #[command(flatten)]
        graph: GraphArg,
        #[command(flatten)]
        semiring: SemiringArg,
        /// Comma-separated domain indices, one per variable.
        #[arg(short, long)]
        assignment: String,
    },
    /// Run an inference query by direct reduction.
    Query {
        #[command(flatten)]
        graph: GraphArg,
        #[command(flatten)]
        query: QueryArg,
    },
    /// Report the complexity tower of a query without running it.
    Classify {
        #[command(flatten)]
        query: QueryArg,
        /// Number of variables the query ranges over.
        #[arg(short, long, conflicts_with = "graph")]
        num_vars: Option<usize>,
        /// Factor-graph file supplying the variable count instead.
        #[arg(short, long)]
        graph: Option<PathBuf>,
    },
    /// Run belief propagation and report beliefs per variable.
    Bp {
        #[command(flatten)]
        graph: GraphArg,
        #[command(flatten)]
        semiring: SemiringArg,
        #[command(flatten)]
        iter: IterArgs,
        /// Message initialization for the iterative schedule.
        #[arg(long, value_enum, default_value_t = InitArg::Uniform)]
        init: InitArg,
        /// Two-pass exact run; the graph must be a tree.
        #[arg(long)]
        exact: bool,
    },
    /// Run survey propagation over the message grid.
    Sp {
        #[command(flatten)]
        graph: GraphArg,
        /// Semiring of the surveyed BP messages.
        #[arg(long, value_name = "NAME")]
        bp_semiring: String,
        #[arg(long, value_enum, default_value_t = ModeArg::Counting)]
        mode: ModeArg,
        /// Explicit grid file: one line per candidate, `var v1 .. vd`.
        #[arg(long, value_name = "FILE")]
        grid: Option<PathBuf>,
        #[command(flatten)]
        iter: IterArgs,
    },
    /// Enumerate all BP fixed points on the message grid.
    FixedPoints {
        #[command(flatten)]
        graph: GraphArg,
        /// Semiring of the enumerated BP messages.
        #[arg(long, value_name = "NAME")]
        bp_semiring: String,
        #[arg(long, value_name = "FILE")]
        grid: Option<PathBuf>,
        /// Upper bound on the product space that will be scanned.
        #[arg(long)]
        cap: Option<u128>,
    },
    /// Search for a satisfying assignment of a DIMACS CNF file.
    SolveSat {
        /// DIMACS CNF input.
        #[arg(short, long, value_name = "FILE")]
        cnf: PathBuf,
        #[arg(long, default_value_t = 4)]
        restarts: usize,
        #[arg(long, default_value_t = 1)]
        threads: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.01)]
        bias_threshold: f64,
        #[arg(long, default_value_t = 120)]
        max_iter: usize,
        #[arg(long, default_value_t = 0.3)]
        damping: f64,
        #[arg(long, default_value_t = 50_000)]
        walk_flips: usize,
    },
    /// Canonicalize a factor-graph file.
    Fmt {
        #[command(flatten)]
        graph: GraphArg,
    },
}

#[derive(Args)]
struct GraphArg {
    /// Factor-graph file (`FG 1` format).
    #[arg(short, long, value_name = "FILE")]
    graph: PathBuf,
}

#[derive(Args)]
struct SemiringArg {
    /// Semiring name; defaults to the file's SEMIRING line.
    #[arg(short, long, value_name = "NAME")]
    semiring: Option<String>,
}

#[derive(Args)]
struct QueryArg {
    /// Query text, e.g. `max@{0};sum!@{1,2}::prod`.
    #[arg(short, long)]
    query: String,
}

#[derive(Args)]
struct IterArgs {
    #[arg(long, default_value_t = 200)]
    max_iter: usize,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Weight on the old message in the damped update.
    #[arg(long, default_value_t = 0.0)]
    damping: f64,
    #[arg(long, value_enum, default_value_t = ScheduleArg::Synchronous)]
    schedule: ScheduleArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScheduleArg {
    Synchronous,
    Sequential,
}

#[derive(Clone, Copy, ValueEnum)]
enum InitArg {
    Uniform,
    Random,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Counting,
    Weighted,
}

impl IterArgs {
    fn options(&self, init: Init) -> LoopyOptions {
        LoopyOptions {
            max_iter: self.max_iter,
            tol: self.tol,
            damping: self.damping,
            schedule: match self.schedule {
                ScheduleArg::Synchronous => Schedule::Synchronous,
                ScheduleArg::Sequential => Schedule::Sequential,
            },
            init,
            seed: self.seed,
        }
    }
}

type CliError = Box<dyn std::error::Error>;

/// Parse arguments from the process environment, execute, and return the
/// exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version go to stdout with success; usage errors get
            // the grammar excerpt on stderr.
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli.command) {
        Ok((payload, code)) => {
            let text = if cli.pretty {
                serde_json::to_string_pretty(&payload)
            } else {
                serde_json::to_string(&payload)
            };
            match text {
                Ok(t) => println!("{t}"),
                Err(e) => {
                    eprintln!("error: {e}");
                    return 2;
                }
            }
            code
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn value_json(v: &Value) -> Json {
    let rendered = match v {
        Value::Float(f) => json!(f),
        Value::Bool(b) => json!(b),
        other => json!(other.to_string()),
    };
    json!({ "backend": v.carrier(), "value": rendered })
}

fn vec_json(vs: &[Value]) -> Json {
    Json::Array(vs.iter().map(value_json).collect())
}

fn load_graph(path: &Path) -> Result<(FgDocument, String), CliError> {
    let bytes = std::fs::read(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let digest = digest_hex(&bytes);
    let text = String::from_utf8(bytes).map_err(|_| format!("{}: not UTF-8", path.display()))?;
    let doc = parse_fg(&text)?;
    Ok((doc, digest))
}

fn pick_semiring(doc: &FgDocument, over: &Option<String>) -> Result<SemiringSpec, CliError> {
    let name = over.as_deref().unwrap_or(&doc.semiring);
    Ok(registry_lookup(name)?)
}

fn parse_assignment(text: &str) -> Result<Vec<usize>, CliError> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| format!("bad assignment entry `{}`", t.trim()).into())
        })
        .collect()
}

fn load_grid(
    fg: &FactorGraph,
    s: &SemiringSpec,
    path: &Option<PathBuf>,
) -> Result<MessageGrid, CliError> {
    let Some(path) = path else {
        return Ok(MessageGrid::auto(fg, s)?);
    };
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut per_var: Vec<Vec<Vec<Value>>> = vec![Vec::new(); fg.num_vars()];
    for (i, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let mut toks = trimmed.split_whitespace();
        let var: usize = toks
            .next()
            .expect("non-empty line has a token")
            .parse()
            .map_err(|_| format!("{}:{}: bad variable index", path.display(), i + 1))?;
        if var >= fg.num_vars() {
            return Err(format!("{}:{}: variable {var} out of range", path.display(), i + 1).into());
        }
        let mut cand = Vec::new();
        for tok in toks {
            cand.push(
                Value::parse(tok)
                    .map_err(|e| format!("{}:{}: {e}", path.display(), i + 1))?,
            );
        }
        per_var[var].push(cand);
    }
    Ok(MessageGrid::explicit(fg, per_var)?)
}

fn execute(cmd: &Command) -> Result<(Json, i32), CliError> {
    match cmd {
        Command::Eval {
            graph,
            semiring,
            assignment,
        } => {
            let (doc, digest) = load_graph(&graph.graph)?;
            let s = pick_semiring(&doc, &semiring.semiring)?;
            let z = parse_assignment(assignment)?;
            let value = doc.graph.evaluate(&s, &z)?;
            Ok((
                json!({
                    "command": "eval",
                    "input_digest": digest,
                    "semiring": s.name,
                    "assignment": z,
                    "value": value_json(&value),
                    "estimates_flagged": [],
                }),
                0,
            ))
        }
        Command::Query { graph, query } => {
            let (doc, digest) = load_graph(&graph.graph)?;
            let q = parse_query(&query.query, doc.graph.num_vars())?;
            let table = evaluate_query(&doc.graph, &q, &EvalOptions::default())?;
            // The operations come from the query text, so no single
            // semiring applies.
            let mut payload = json!({
                "command": "query",
                "input_digest": digest,
                "semiring": Json::Null,
                "query": query.query,
                "estimates_flagged": [],
            });
            let obj = payload.as_object_mut().expect("payload is an object");
            match table.as_scalar() {
                Some(v) => {
                    obj.insert("value".into(), value_json(v));
                }
                None => {
                    obj.insert(
                        "table".into(),
                        json!({ "vars": table.vars, "values": vec_json(&table.values) }),
                    );
                }
            }
            Ok((payload, 0))
        }
        Command::Classify {
            query,
            num_vars,
            graph,
        } => {
            let (n, digest) = match (num_vars, graph) {
                (Some(n), _) => (*n, digest_hex(query.query.as_bytes())),
                (None, Some(path)) => {
                    let (doc, digest) = load_graph(path)?;
                    (doc.graph.num_vars(), digest)
                }
                (None, None) => {
                    return Err("classify needs --num-vars or --graph".into());
                }
            };
            let q = parse_query(&query.query, n)?;
            let c = classify(&q)?;
            Ok((
                json!({
                    "command": "classify",
                    "input_digest": digest,
                    "semiring": Json::Null,
                    "query": query.query,
                    "family": c.family.to_string(),
                    "complexity": c.complexity(),
                    "tower": c.tower.iter().map(|t| t.to_string()).collect::<Vec<_>>(),
                    "levels": c.m,
                    "sum_set": c.sum_set,
                    "poly_set": c.poly_set,
                    "estimates_flagged": [],
                }),
                0,
            ))
        }
        Command::Bp {
            graph,
            semiring,
            iter,
            init,
            exact,
        } => {
            let (doc, digest) = load_graph(&graph.graph)?;
            let s = pick_semiring(&doc, &semiring.semiring)?;
            let fg = &doc.graph;
            let opts = iter.options(match init {
                InitArg::Uniform => Init::Uniform,
                InitArg::Random => Init::Random,
            });
            let (state, report) = if *exact {
                let state = run_tree(fg, &s)?;
                (state, None)
            } else {
                let (state, report) = run_loopy(fg, &s, &opts)?;
                (state, Some(report))
            };

            let mut marginals = Vec::with_capacity(fg.num_vars());
            for var in 0..fg.num_vars() {
                marginals.push(vec_json(&state.marginal_variable(var)?));
            }
            let decomposition = if s.invertible {
                Some(value_json(&state.integral_decomposition()?))
            } else {
                None
            };
            let decode = state.decode_choice()?;

            let mut flagged: Vec<&str> = Vec::new();
            if report.is_some() {
                flagged.push("marginals");
                if decomposition.is_some() {
                    flagged.push("decomposition");
                }
            }
            let converged = report.as_ref().map_or(true, |r| r.converged);
            let mut payload = json!({
                "command": "bp",
                "input_digest": digest,
                "semiring": s.name,
                "exact": exact,
                "marginals": marginals,
                "estimates_flagged": flagged,
            });
            let obj = payload.as_object_mut().expect("payload is an object");
            if let Some(r) = report {
                obj.insert("bp_report".into(), serde_json::to_value(&r)?);
            }
            if let Some(d) = decomposition {
                obj.insert("decomposition".into(), d);
            }
            if let Some(d) = decode {
                obj.insert("decode".into(), json!(d));
            }
            Ok((payload, if converged { 0 } else { 1 }))
        }
        Command::Sp {
            graph,
            bp_semiring,
            mode,
            grid,
            iter,
        } => {
            let (doc, digest) = load_graph(&graph.graph)?;
            let s = registry_lookup(bp_semiring)?;
            let fg = &doc.graph;
            let grid = load_grid(fg, &s, grid)?;
            let mode = match mode {
                ModeArg::Counting => SpMode::Counting,
                ModeArg::Weighted => SpMode::Weighted,
            };
            let opts = iter.options(Init::Uniform);
            let (state, report) = run_sp(fg, &s, &grid, mode, &opts)?;
            let integral = sp_integral(fg, &s, &grid, mode, &opts)?;

            let mut groups = Vec::with_capacity(fg.num_vars());
            for var in 0..fg.num_vars() {
                let entries: Vec<Json> = state
                    .marginal_over_marginals(var)?
                    .iter()
                    .map(|(belief, mass)| {
                        json!({ "belief": vec_json(belief), "mass": value_json(mass) })
                    })
                    .collect();
                groups.push(Json::Array(entries));
            }

            let mut flagged: Vec<&str> = Vec::new();
            if !fg.is_tree() {
                flagged.push("surveys");
            }
            if !integral.exact {
                flagged.push("sp_integral");
            }
            let grid_sizes: Vec<usize> = (0..fg.num_vars()).map(|v| grid.size(v)).collect();
            let mut payload = json!({
                "command": "sp",
                "input_digest": digest,
                "semiring": s.name,
                "mode": match mode { SpMode::Counting => "counting", SpMode::Weighted => "weighted" },
                "grid_sizes": grid_sizes,
                "sp_report": serde_json::to_value(&report)?,
                "groups": groups,
                "integral": {
                    "value": value_json(&integral.value),
                    "exact": integral.exact,
                },
                "estimates_flagged": flagged,
            });
            if let Some(r) = &integral.report {
                payload["integral"]
                    .as_object_mut()
                    .expect("integral is an object")
                    .insert("report".into(), serde_json::to_value(r)?);
            }
            Ok((payload, if report.converged { 0 } else { 1 }))
        }
        Command::FixedPoints {
            graph,
            bp_semiring,
            grid,
            cap,
        } => {
            let (doc, digest) = load_graph(&graph.graph)?;
            let s = registry_lookup(bp_semiring)?;
            let fg = &doc.graph;
            let grid = load_grid(fg, &s, grid)?;
            let points = enumerate_bp_fixed_points(fg, &s, &grid, *cap)?;
            let (v2f_freq, f2v_freq) = fixed_point_frequencies(fg, &grid, &points);
            let listed: Vec<Json> = points
                .iter()
                .take(64)
                .map(|p| json!({ "v2f": p.v2f, "f2v": p.f2v }))
                .collect();
            let grid_sizes: Vec<usize> = (0..fg.num_vars()).map(|v| grid.size(v)).collect();
            Ok((
                json!({
                    "command": "fixed-points",
                    "input_digest": digest,
                    "semiring": s.name,
                    "grid_sizes": grid_sizes,
                    "count": points.len(),
                    "points": listed,
                    "points_truncated": points.len() > 64,
                    "frequencies": {
                        "v2f": v2f_freq.iter().map(|f| vec_json(f)).collect::<Vec<_>>(),
                        "f2v": f2v_freq.iter().map(|f| vec_json(f)).collect::<Vec<_>>(),
                    },
                    "estimates_flagged": [],
                }),
                0,
            ))
        }
        Command::SolveSat {
            cnf,
            restarts,
            threads,
            seed,
            bias_threshold,
            max_iter,
            damping,
            walk_flips,
        } => {
            let bytes = std::fs::read(cnf).map_err(|e| format!("{}: {e}", cnf.display()))?;
            let digest = digest_hex(&bytes);
            let text =
                String::from_utf8(bytes).map_err(|_| format!("{}: not UTF-8", cnf.display()))?;
            let (formula, warnings) = parse_dimacs(&text)?;
            for w in &warnings {
                eprintln!("warning: {w}");
            }
            let opts = SatOptions {
                max_iter: *max_iter,
                damping: *damping,
                bias_threshold: *bias_threshold,
                restarts: *restarts,
                threads: *threads,
                walk_flips: *walk_flips,
                seed: *seed,
                ..SatOptions::default()
            };
            let outcome = solve_sat(&formula, &opts)?;
            let (payload, code) = match outcome {
                SolveOutcome::Sat { assignment } => (
                    json!({
                        "command": "solve-sat",
                        "input_digest": digest,
                        "semiring": "or-and",
                        "outcome": "sat",
                        "assignment": assignment,
                        "warnings": warnings,
                        "estimates_flagged": [],
                    }),
                    0,
                ),
                SolveOutcome::Unknown { conflict } => (
                    json!({
                        "command": "solve-sat",
                        "input_digest": digest,
                        "semiring": "or-and",
                        "outcome": "unknown",
                        "conflict": conflict,
                        "warnings": warnings,
                        "estimates_flagged": [],
                    }),
                    1,
                ),
            };
            Ok((payload, code))
        }
        Command::Fmt { graph } => {
            let (doc, digest) = load_graph(&graph.graph)?;
            Ok((
                json!({
                    "command": "fmt",
                    "input_digest": digest,
                    "semiring": doc.semiring,
                    "canonical": render_fg(&doc),
                    "estimates_flagged": [],
                }),
                0,
            ))
        }
    }
}

// Re-exported so integration tests can drive the parser without a process.
#[doc(hidden)]
pub fn execute_for_tests(args: &[&str]) -> Result<(Json, i32), CliError> {
    let cli = Cli::try_parse_from(args)?;
    execute(&cli.command)
}
