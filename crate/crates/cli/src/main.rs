//! `lpp`: serve a responder graph, query it, and run the accompanying
//! experiments.
//!
//! Exit codes: 0 on success, 2 when the query stops because `x` and `y` are
//! direct neighbours, 1 for everything else (usage errors included).

use std::fs;
use std::io::{self, Write};
use std::net::{TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use lpp_core::bench::{bench_sizes, BenchSizes, CSV_HEADER};
use lpp_core::graph::{ba_generate, k_sweep_experiment, load_edge_list, BaConfig, Graph};
use lpp_core::leakage::{leakage_curve, log10_possibilities, possibilities, LeakageQuery};
use lpp_core::protocol::{
    brute_force_cn, run_querier, run_responder, CnBreakdown, ProtocolError, QueryOutcome,
    QuerySpec, ResponderConfig,
};
use lpp_core::transport::SessionOutcome;
use lpp_core::{Mode, NodeId, ParamSet};
use rand::rngs::StdRng;
use rand::SeedableRng;
use serde_json::json;

const IO_TIMEOUT: Duration = Duration::from_secs(120);

#[derive(Parser)]
#[command(name = "lpp", version, about = "Privacy-preserving common-neighbour queries across two graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Serve a responder graph until interrupted.
    Serve(ServeArgs),
    /// Ask a responder for the common neighbours of two nodes.
    Query(QueryArgs),
    /// Generate a Barabási–Albert graph as an edge list.
    Gen(GenArgs),
    /// Plaintext common-neighbour breakdown with both graphs visible.
    Oracle(OracleArgs),
    /// How many neighbour sets a revealed intersection size leaves possible.
    Leakage(LeakageArgs),
    /// Average common neighbours of a BA graph and of its union with another.
    ExperimentUtility(UtilityArgs),
    /// Time loopback sessions on synthetic neighbourhoods.
    Bench(BenchArgs),
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, default_value = "127.0.0.1:7878")]
    listen: String,
    #[arg(long, env = "LPP_PARAMS", default_value = "toy")]
    params: ParamSet,
    /// Serve only this mode; both when omitted.
    #[arg(long)]
    mode: Option<Mode>,
    /// Exit after this many sessions.
    #[arg(long)]
    max_sessions: Option<usize>,
}

#[derive(Args)]
struct QueryArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    connect: String,
    #[arg(long)]
    x: String,
    #[arg(long)]
    y: String,
    #[arg(long, default_value = "psi")]
    mode: Mode,
    #[arg(long, env = "LPP_PARAMS", default_value = "toy")]
    params: ParamSet,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    nodes: usize,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    graph1: PathBuf,
    #[arg(long)]
    graph2: PathBuf,
    #[arg(long)]
    x: String,
    #[arg(long)]
    y: String,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct LeakageArgs {
    /// Candidate neighbours, endpoints already excluded.
    #[arg(long, required_unless_present = "nodes", conflicts_with = "nodes")]
    universe: Option<u64>,
    /// Graph node count; the universe is this minus the two endpoints.
    #[arg(long)]
    nodes: Option<u64>,
    /// Report a single intersection size instead of the whole curve.
    #[arg(long)]
    cardinality: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct UtilityArgs {
    #[arg(long)]
    nodes: usize,
    /// Attachment parameter of graph 1.
    #[arg(long)]
    k: usize,
    #[arg(long, value_delimiter = ',', required = true)]
    seeds: Vec<u64>,
    /// Attachment parameters of graph 2; defaults to `--k`.
    #[arg(long, value_delimiter = ',')]
    k_values: Vec<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated entries, each `N` (all four sets) or
    /// `nx1/ny1/nx2/ny2`.
    #[arg(long, value_delimiter = ',', required = true, value_parser = parse_sizes)]
    sizes: Vec<BenchSizes>,
    #[arg(long, env = "LPP_PARAMS", default_value = "toy")]
    params: ParamSet,
    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u32).range(1..))]
    reps: u32,
    #[arg(long, default_value = "psi")]
    mode: Mode,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_sizes(s: &str) -> Result<BenchSizes, String> {
    let parts = s
        .split('/')
        .map(|p| p.trim().parse::<usize>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    match parts[..] {
        [n] => Ok(BenchSizes::uniform(n)),
        [nx1, ny1, nx2, ny2] => Ok(BenchSizes { nx1, ny1, nx2, ny2 }),
        _ => Err(format!("{s:?}: expected N or nx1/ny1/nx2/ny2")),
    }
}

enum Failure {
    Usage(String),
    Halted(String),
    Other(String),
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Other(e.to_string())
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Serve(a) => serve(a),
        Command::Query(a) => query(a),
        Command::Gen(a) => gen(a),
        Command::Oracle(a) => oracle(a),
        Command::Leakage(a) => leakage(a),
        Command::ExperimentUtility(a) => utility(a),
        Command::Bench(a) => bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Halted(msg)) => {
            println!("{msg}");
            ExitCode::from(2)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Other(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn read_graph(path: &Path) -> Result<Graph, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Other(format!("{}: {e}", path.display())))?;
    load_edge_list(&text).map_err(|e| Failure::Other(format!("{}: {e}", path.display())))
}

fn emit(out: Option<&Path>, text: &str) -> CmdResult {
    match out {
        Some(path) => fs::write(path, text)?,
        None => io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn breakdown_json(b: &CnBreakdown) -> serde_json::Value {
    json!({
        "cn": b.cn,
        "local1": b.local1,
        "local2": b.local2,
        "cr1": b.crossover1,
        "cr2": b.crossover2,
        "overlap": b.overlap,
    })
}

fn serve(a: ServeArgs) -> CmdResult {
    let graph = Arc::new(read_graph(&a.graph)?);
    let listener = TcpListener::bind(&a.listen)
        .map_err(|e| Failure::Other(format!("bind {}: {e}", a.listen)))?;
    println!("listening on {}", listener.local_addr()?);
    io::stdout().flush()?;
    let config = ResponderConfig { params: a.params, mode: a.mode };
    let mut workers = Vec::new();
    for (i, stream) in listener.incoming().enumerate() {
        let stream = match stream {
            Ok(s) => s,
            Err(e) => {
                eprintln!("accept failed: {e}");
                continue;
            }
        };
        let graph = Arc::clone(&graph);
        workers.push(thread::spawn(move || serve_one(config, &graph, stream)));
        if a.max_sessions.is_some_and(|max| i + 1 >= max) {
            break;
        }
    }
    for w in workers {
        let _ = w.join();
    }
    Ok(())
}

fn serve_one(config: ResponderConfig, graph: &Graph, stream: TcpStream) {
    let peer = stream.peer_addr().map(|a| a.to_string()).unwrap_or_else(|_| "?".into());
    let _ = stream.set_nodelay(true);
    let _ = stream.set_read_timeout(Some(IO_TIMEOUT));
    let mut rng = StdRng::from_entropy();
    match run_responder(config, graph, stream, &mut rng) {
        Ok(t) => {
            let outcome = match t.outcome {
                SessionOutcome::Completed => "completed".to_string(),
                SessionOutcome::HaltedDirectNeighbour => "halted: direct neighbours".to_string(),
                SessionOutcome::Aborted(r) => format!("aborted: {r}"),
            };
            eprintln!("session {peer}: {outcome}");
        }
        Err(e) => eprintln!("session {peer}: failed: {e}"),
    }
}

fn query(a: QueryArgs) -> CmdResult {
    let spec = QuerySpec::new(a.x.as_str(), a.y.as_str(), a.mode, a.params).map_err(|e| match e {
        ProtocolError::SameEndpoints | ProtocolError::BadIdentifier(_) => Failure::Usage(e.to_string()),
        other => Failure::Other(other.to_string()),
    })?;
    let graph = read_graph(&a.graph)?;
    let halted = |json: bool, local: bool| {
        let msg = if json {
            json!({ "outcome": "halted-direct-neighbour", "local": local }).to_string()
        } else if local {
            "halted: x and y are direct neighbours in the local graph".to_string()
        } else {
            "halted: x and y are direct neighbours".to_string()
        };
        Failure::Halted(msg)
    };
    if graph.has_edge(&NodeId::from(a.x.as_str()), &NodeId::from(a.y.as_str())) {
        return Err(halted(a.json, true));
    }
    let stream = TcpStream::connect(&a.connect)
        .map_err(|e| Failure::Other(format!("connect {}: {e}", a.connect)))?;
    stream.set_nodelay(true)?;
    stream.set_read_timeout(Some(IO_TIMEOUT))?;
    let mut rng = StdRng::from_entropy();
    let report = run_querier(&spec, &graph, stream, &mut rng)?;
    let line = match report.outcome {
        QueryOutcome::Breakdown(b) if a.json => {
            let mut v = breakdown_json(&b);
            v["outcome"] = json!("completed");
            v["mode"] = json!("psi");
            v.to_string()
        }
        QueryOutcome::Breakdown(b) => b.to_string(),
        QueryOutcome::Cn(cn) if a.json => {
            json!({ "outcome": "completed", "mode": "he", "cn": cn }).to_string()
        }
        QueryOutcome::Cn(cn) => format!("cn={cn}"),
        QueryOutcome::HaltedDirectNeighbour => return Err(halted(a.json, false)),
        QueryOutcome::LocalDirectNeighbour => return Err(halted(a.json, true)),
    };
    println!("{line}");
    Ok(())
}

fn gen(a: GenArgs) -> CmdResult {
    let g = ba_generate(&BaConfig::new(a.nodes, a.k, a.seed).map_err(|e| Failure::Usage(e.to_string()))?)?;
    emit(a.out.as_deref(), &g.to_edge_list())
}

fn oracle(a: OracleArgs) -> CmdResult {
    if a.x == a.y {
        return Err(Failure::Usage("x and y must be different nodes".into()));
    }
    let (g1, g2) = (read_graph(&a.graph1)?, read_graph(&a.graph2)?);
    let b = brute_force_cn(&g1, &g2, &NodeId::from(a.x.as_str()), &NodeId::from(a.y.as_str()));
    if a.json {
        println!("{}", breakdown_json(&b));
    } else {
        println!("{b}");
    }
    Ok(())
}

fn leakage(a: LeakageArgs) -> CmdResult {
    let usage = |e: lpp_core::leakage::LeakageError| Failure::Usage(e.to_string());
    let universe = match (a.universe, a.nodes) {
        (Some(u), _) => u,
        (None, Some(n)) => LeakageQuery::from_node_count(n, 0).map_err(usage)?.universe,
        (None, None) => unreachable!("clap enforces the group"),
    };
    let mut csv = String::from("cardinality,possibilities,log10\n");
    let mut row = |k: u64, count: String| -> CmdResult {
        let log = log10_possibilities(LeakageQuery::new(universe, k).map_err(usage)?).map_err(usage)?;
        csv.push_str(&format!("{k},{count},{log:.6}\n"));
        Ok(())
    };
    match a.cardinality {
        Some(k) => {
            let q = LeakageQuery::new(universe, k).map_err(usage)?;
            row(k, possibilities(q).map_err(usage)?.to_string())?;
        }
        None => {
            for (k, count) in leakage_curve(universe) {
                row(k, count.to_string())?;
            }
        }
    }
    emit(a.out.as_deref(), &csv)
}

fn utility(a: UtilityArgs) -> CmdResult {
    let ks = if a.k_values.is_empty() { vec![a.k] } else { a.k_values };
    let rows = k_sweep_experiment(a.nodes, a.k, &ks, &a.seeds)
        .map_err(|e| Failure::Usage(e.to_string()))?;
    let mut csv = String::from("k,avg_union,avg_graph2,gain,ratio\n");
    for r in rows {
        csv.push_str(&format!(
            "{},{:.6},{:.6},{:.6},{:.6}\n",
            r.k,
            r.avg_union,
            r.avg_graph2,
            r.gain(),
            r.ratio()
        ));
    }
    emit(a.out.as_deref(), &csv)
}

fn bench(a: BenchArgs) -> CmdResult {
    let mut csv = format!("{CSV_HEADER}\n");
    for sizes in a.sizes {
        for row in bench_sizes(a.params, a.mode, sizes, a.reps as usize, a.seed)? {
            csv.push_str(&row.csv());
            csv.push('\n');
        }
    }
    emit(a.out.as_deref(), &csv)
}
