//! Command-line front end.
//!
//! Exit codes: 0 success, 1 result differs from `--expect` (or the
//! randomized rigidity test was inconclusive), 2 usage error, 3 I/O or parse
//! error. Errors go to standard error as one line, `error[<kind>]: <message>`.
//! `GEOSEP_THREADS` caps the worker pool.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::gennet::{InitScale, ModelError};
use crate::geomgraph::io::{read_graph, GraphFile, GraphIoError};
use crate::geomgraph::power_graph;
use crate::report::{canonical_json, write_atomic};
use crate::rigidity::{self, RigidityError, RigidityReport};
use crate::sephar::pairs::PairFile;
use crate::sephar::{
    self, auto_channels, random_connected_graph, render_table, HarnessError, ModelKind, ModelSpec, PairSpec, SeparationConfig, SweepConfig,
    SweepKind, Verdict,
};
use crate::{rng, Graph};

pub const EXIT_OK: i32 = 0;
pub const EXIT_MISMATCH: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "geosep", version, about = "Separation power of geometric graph networks, and rigidity analysis")]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Base seed; every random draw derives from it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Write the report here (atomically) instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Init {
    /// Widths shrink with each unit's fan-in.
    FanIn,
    /// Every parameter uniform on [-1, 1].
    Unit,
}

impl From<Init> for InitScale {
    fn from(i: Init) -> Self {
        match i {
            Init::FanIn => InitScale::FanIn,
            Init::Unit => InitScale::Unit,
        }
    }
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// Comma-separated list of models.
    #[arg(long, value_delimiter = ',', default_value = "gennet", value_parser = parse_model)]
    model: Vec<ModelKind>,
    /// Message-passing iterations T.
    #[arg(long)]
    depth: Option<usize>,
    /// GenNet channels / I-GGNN width; defaults to 2·n·d + 1.
    #[arg(long)]
    channels: Option<usize>,
    #[arg(long, value_enum, default_value_t = Init::FanIn)]
    init: Init,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Margin test of one or more pairs across random parameter draws.
    Separate {
        /// Builtin pair names (pair_a, pair_b, k_chain_<k>) or pair files.
        #[arg(value_name = "PAIR")]
        inputs: Vec<String>,
        #[arg(long = "pair", value_name = "PAIR")]
        pairs: Vec<String>,
        #[command(flatten)]
        model: ModelArgs,
        /// Comma-separated list of graph powers.
        #[arg(long, value_delimiter = ',', default_value = "1")]
        power: Vec<usize>,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        /// separated, not_separated or mixed; every run must match.
        #[arg(long)]
        expect: Option<String>,
        /// Include wall-clock time in the report (breaks byte-identical reruns).
        #[arg(long)]
        timing: bool,
    },
    /// Randomized generic rigidity and global rigidity of a graph's topology.
    Rigidity {
        #[arg(long, value_name = "FILE")]
        graph: Option<PathBuf>,
        #[arg(value_name = "FILE")]
        input: Option<PathBuf>,
        /// Ambient dimension; defaults to the file's.
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long, default_value_t = 1)]
        power: usize,
        #[arg(long, default_value_t = rigidity::DEFAULT_TRIALS)]
        trials: usize,
        /// globally_rigid, rigid (but not globally) or flexible.
        #[arg(long)]
        expect: Option<String>,
    },
    /// The k-th power graph of a graph file, as a graph file.
    Powergraph {
        #[arg(long, value_name = "FILE")]
        graph: Option<PathBuf>,
        #[arg(value_name = "FILE")]
        input: Option<PathBuf>,
        #[arg(long)]
        power: usize,
    },
    /// Writes builtin pairs as pair files.
    GenPairs {
        #[arg(value_name = "PAIR", default_values_t = ["pair_a".to_string(), "pair_b".to_string()])]
        names: Vec<String>,
        /// Write one <name>.json per pair into this directory.
        #[arg(long, value_name = "DIR")]
        out_dir: Option<PathBuf>,
    },
    /// Randomized permutation / rigid-motion checks of the models.
    Invariance {
        #[arg(long, value_name = "FILE")]
        graph: Option<PathBuf>,
        /// Use a random connected graph with this many nodes instead of a file.
        #[arg(long, value_name = "N")]
        random: Option<usize>,
        /// Dimension of the random graph.
        #[arg(long, default_value_t = 3)]
        dim: usize,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        /// pass or fail.
        #[arg(long)]
        expect: Option<String>,
    },
    /// Random pairs labeled by the isomorphism oracle.
    Sweep {
        #[arg(long, default_value = "random", value_parser = parse_sweep_kind)]
        kind: SweepKind,
        #[arg(long, default_value_t = 50)]
        count: usize,
        #[arg(long, default_value_t = 8)]
        nodes: usize,
        #[arg(long, default_value_t = 3)]
        dim: usize,
        #[command(flatten)]
        model: ModelArgs,
        /// separated, not_separated or mixed.
        #[arg(long)]
        expect: Option<String>,
    },
}

fn parse_model(s: &str) -> Result<ModelKind, String> {
    s.parse()
}

fn parse_sweep_kind(s: &str) -> Result<SweepKind, String> {
    s.parse()
}

/// Failure with its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub kind: &'static str,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, kind: "usage", message: message.into() }
    }

    fn io(message: impl Into<String>) -> Self {
        Self { code: EXIT_IO, kind: "io", message: message.into() }
    }

    fn mismatch(message: impl Into<String>) -> Self {
        Self { code: EXIT_MISMATCH, kind: "mismatch", message: message.into() }
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Io { .. } | HarnessError::Parse(_) | HarnessError::Schema(_) | HarnessError::InvariantViolation(_) => {
                CliError::io(e.to_string())
            }
            HarnessError::InvalidArgument(_) | HarnessError::Graph(_) | HarnessError::Model(_) => CliError::usage(e.to_string()),
        }
    }
}

impl From<GraphIoError> for CliError {
    fn from(e: GraphIoError) -> Self {
        CliError::io(e.to_string())
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::usage(e.to_string())
    }
}

impl From<RigidityError> for CliError {
    fn from(e: RigidityError) -> Self {
        match e {
            RigidityError::Inconclusive { .. } => Self { code: EXIT_MISMATCH, kind: "inconclusive", message: e.to_string() },
            other => CliError::usage(other.to_string()),
        }
    }
}

/// Parses `argv` (including the program name), runs the command and returns
/// the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match configure_threads().and_then(|_| dispatch(cli)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error[{}]: {}", e.kind, e.message.replace('\n', " "));
            e.code
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("GEOSEP_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&t| t >= 1)
        .ok_or_else(|| CliError::usage(format!("GEOSEP_THREADS must be a positive integer, got {value:?}")))?;
    // Fails only if a pool was already installed in this process; keep it.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    Ok(())
}

/// Report text plus the outcome of `--expect`.
struct Output {
    json: String,
    table: String,
    mismatch: Option<String>,
}

fn emit(common: &CommonArgs, out: Output) -> Result<i32, CliError> {
    let text = match common.format {
        Format::Json => out.json,
        Format::Table => out.table,
    };
    match &common.out {
        Some(path) => {
            write_atomic(path, text.as_bytes()).map_err(|e| CliError::io(format!("cannot write {}: {}", path.display(), e.kind())))?
        }
        None => print!("{text}"),
    }
    match out.mismatch {
        Some(m) => Err(CliError::mismatch(m)),
        None => Ok(EXIT_OK),
    }
}

fn to_json<S: Serialize>(value: &S) -> Result<String, CliError> {
    canonical_json(value).map_err(|e| CliError::io(format!("cannot serialize report: {e}")))
}

fn parse_expect<T: std::str::FromStr<Err = String>>(expect: &Option<String>) -> Result<Option<T>, CliError> {
    expect.as_deref().map(|s| s.parse::<T>().map_err(CliError::usage)).transpose()
}

fn kv_table(rows: &[(&str, String)]) -> String {
    let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    rows.iter().map(|(k, v)| format!("{k:<width$}  {v}\n")).collect()
}

fn resolve_pair(name: &str) -> Result<PairSpec, CliError> {
    if let Some(pair) = sephar::builtin_pair(name) {
        return Ok(pair);
    }
    let path = Path::new(name);
    if path.exists() {
        return Ok(sephar::load_pair(path)?);
    }
    Err(CliError::usage(format!("{name:?} is neither a builtin pair (pair_a, pair_b, k_chain_<k>) nor an existing file")))
}

fn one_graph_path(flag: Option<PathBuf>, positional: Option<PathBuf>) -> Result<PathBuf, CliError> {
    match (flag, positional) {
        (Some(p), None) | (None, Some(p)) => Ok(p),
        (None, None) => Err(CliError::usage("a graph file is required (--graph FILE)")),
        (Some(_), Some(_)) => Err(CliError::usage("give the graph file either positionally or with --graph, not both")),
    }
}

fn positive(name: &str, value: usize) -> Result<usize, CliError> {
    if value == 0 {
        return Err(CliError::usage(format!("--{name} must be at least 1")));
    }
    Ok(value)
}

fn dispatch(cli: Cli) -> Result<i32, CliError> {
    let common = cli.common;
    let out = match cli.command {
        Command::Separate { inputs, pairs, model, power, trials, expect, timing } => {
            separate(&common, inputs.into_iter().chain(pairs).collect(), model, power, trials, expect, timing)?
        }
        Command::Rigidity { graph, input, dim, power, trials, expect } => {
            rigidity_cmd(&common, one_graph_path(graph, input)?, dim, power, trials, expect)?
        }
        Command::Powergraph { graph, input, power } => {
            let g = read_graph(&one_graph_path(graph, input)?)?;
            let p = power_graph(&g, positive("power", power)?);
            let file = GraphFile::from_graph(&p);
            let table = kv_table(&[
                ("n", p.n().to_string()),
                ("d", p.d().to_string()),
                ("power", power.to_string()),
                ("edges", p.edges().iter().map(|(i, j)| format!("{i}-{j}")).collect::<Vec<_>>().join(" ")),
            ]);
            Output { json: to_json(&file)?, table, mismatch: None }
        }
        Command::GenPairs { names, out_dir } => return gen_pairs(&common, names, out_dir),
        Command::Invariance { graph, random, dim, model, trials, expect } => {
            invariance(&common, graph, random, dim, model, trials, expect)?
        }
        Command::Sweep { kind, count, nodes, dim, model, expect } => sweep(&common, kind, count, nodes, dim, model, expect)?,
    };
    emit(&common, out)
}

fn separate(
    common: &CommonArgs,
    names: Vec<String>,
    model: ModelArgs,
    powers: Vec<usize>,
    trials: usize,
    expect: Option<String>,
    timing: bool,
) -> Result<Output, CliError> {
    let expect = parse_expect::<Verdict>(&expect)?;
    if names.is_empty() {
        return Err(CliError::usage("no pair given (use --pair NAME or a positional pair)"));
    }
    positive("trials", trials)?;
    for &p in &powers {
        positive("power", p)?;
    }
    let pairs = names.iter().map(|n| resolve_pair(n)).collect::<Result<Vec<_>, _>>()?;
    let depth = positive("depth", model.depth.unwrap_or(3))?;
    let start = Instant::now();
    let mut results = Vec::new();
    for pair in &pairs {
        for &kind in &model.model {
            for &power in &powers {
                let mut cfg = SeparationConfig::new(kind, power, depth, trials, common.seed);
                cfg.channels = model.channels;
                cfg.init = model.init.into();
                results.push(sephar::run_separation(pair, &cfg)?);
            }
        }
    }
    let report = sephar::ExperimentReport {
        config: json!({
            "command": "separate",
            "pairs": names,
            "models": model.model,
            "powers": powers,
            "depth": depth,
            "channels": model.channels,
            "trials": trials,
            "init": InitScale::from(model.init),
            "seed": common.seed,
        }),
        seeds: (0..trials as u64).map(|t| rng::derive_seed(common.seed, t)).collect(),
        results,
        wall_clock_seconds: timing.then(|| start.elapsed().as_secs_f64()),
    };
    let mismatch = expect.and_then(|want| {
        let bad: Vec<String> = report
            .results
            .iter()
            .filter(|r| r.verdict != want)
            .map(|r| format!("{} {} power {}: {}", r.pair, r.model, r.power, r.verdict))
            .collect();
        (!bad.is_empty()).then(|| format!("expected {want}, got {}", bad.join("; ")))
    });
    Ok(Output { json: to_json(&report)?, table: render_table(&report.results), mismatch })
}

#[derive(Serialize)]
struct RigidityOutput {
    #[serde(flatten)]
    report: RigidityReport,
    power: usize,
    minimal_globally_rigid_power: Option<usize>,
}

fn rigidity_cmd(
    common: &CommonArgs,
    path: PathBuf,
    dim: Option<usize>,
    power: usize,
    trials: usize,
    expect: Option<String>,
) -> Result<Output, CliError> {
    let expect = match expect.as_deref() {
        None => None,
        Some(s @ ("globally_rigid" | "rigid" | "flexible")) => Some(s.to_string()),
        Some(other) => return Err(CliError::usage(format!("unknown rigidity expectation {other:?} (globally_rigid, rigid, flexible)"))),
    };
    let g = read_graph(&path)?;
    let d = positive("dim", dim.unwrap_or(g.d()))?;
    positive("trials", trials)?;
    let a = power_graph(&g, positive("power", power)?);
    let report = rigidity::is_generically_globally_rigid(&a, d, common.seed, trials)?;
    let minimal = match rigidity::minimal_globally_rigid_power(&g, d, common.seed) {
        Ok(k) => Some(k),
        Err(RigidityError::Disconnected) => None,
        Err(e) => return Err(e.into()),
    };
    let class = if report.generically_globally_rigid {
        "globally_rigid"
    } else if report.generically_rigid {
        "rigid"
    } else {
        "flexible"
    };
    let mismatch = expect.filter(|want| want != class).map(|want| format!("expected {want}, got {class}"));
    let opt = |x: Option<usize>| x.map_or("-".to_string(), |v| v.to_string());
    let table = kv_table(&[
        ("n", report.n.to_string()),
        ("d", report.d.to_string()),
        ("power", power.to_string()),
        ("rigidity_rank", format!("{} (expected {})", report.rigidity_rank, report.rigidity_rank_expected)),
        ("stress_rank", format!("{} (expected {})", opt(report.stress_rank), opt(report.stress_rank_expected))),
        ("generically_rigid", report.generically_rigid.to_string()),
        ("generically_globally_rigid", report.generically_globally_rigid.to_string()),
        ("minimal_globally_rigid_power", opt(minimal)),
        ("trials", report.trials.to_string()),
        ("seed", report.seed.to_string()),
    ]);
    let json = to_json(&RigidityOutput { report, power, minimal_globally_rigid_power: minimal })?;
    Ok(Output { json, table, mismatch })
}

fn gen_pairs(common: &CommonArgs, names: Vec<String>, out_dir: Option<PathBuf>) -> Result<i32, CliError> {
    let pairs = names
        .iter()
        .map(|n| sephar::builtin_pair(n).ok_or_else(|| CliError::usage(format!("unknown builtin pair {n:?}"))))
        .collect::<Result<Vec<_>, _>>()?;
    let files: Vec<PairFile> = pairs.iter().map(PairFile::from_pair).collect();
    let table: String = {
        let rows: Vec<(&str, String)> = pairs
            .iter()
            .map(|p| {
                (
                    p.name.as_str(),
                    format!("n={} d={} edges={} expected_isomorphic={}", p.g.n(), p.g.d(), p.g.edge_count(), p.expected_isomorphic),
                )
            })
            .collect();
        kv_table(&rows)
    };
    match out_dir {
        Some(dir) => {
            if common.out.is_some() {
                return Err(CliError::usage("--out and --out-dir are mutually exclusive"));
            }
            for file in &files {
                let path = dir.join(format!("{}.json", file.name));
                write_atomic(&path, to_json(file)?.as_bytes())
                    .map_err(|e| CliError::io(format!("cannot write {}: {}", path.display(), e.kind())))?;
            }
            if common.format == Format::Table {
                print!("{table}");
            }
            Ok(EXIT_OK)
        }
        None => {
            let [file] = files.as_slice() else {
                return Err(CliError::usage("several pairs need --out-dir DIR"));
            };
            emit(common, Output { json: to_json(file)?, table, mismatch: None })
        }
    }
}

fn invariance(
    common: &CommonArgs,
    graph: Option<PathBuf>,
    random: Option<usize>,
    dim: usize,
    model: ModelArgs,
    trials: usize,
    expect: Option<String>,
) -> Result<Output, CliError> {
    let expect = match expect.as_deref() {
        None => None,
        Some("pass") => Some(true),
        Some("fail") => Some(false),
        Some(other) => return Err(CliError::usage(format!("unknown invariance expectation {other:?} (pass, fail)"))),
    };
    positive("trials", trials)?;
    let g: Graph = match (graph, random) {
        (Some(path), None) => read_graph(&path)?,
        (None, Some(n)) => random_connected_graph(positive("random", n)?, positive("dim", dim)?, &mut rng::stream(common.seed, u64::MAX)),
        _ => return Err(CliError::usage("give exactly one of --graph FILE and --random N")),
    };
    let depth = positive("depth", model.depth.unwrap_or(4))?;
    let channels = positive("channels", model.channels.unwrap_or_else(|| auto_channels(g.n(), g.d())))?;
    let reports = model
        .model
        .iter()
        .map(|&kind| {
            let spec = ModelSpec { kind, depth, channels, dim: g.d(), init: model.init.into() };
            sephar::invariance_suite(&g, &spec, trials, common.seed)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let passed = reports.iter().all(|r| r.passed);
    let mismatch = expect
        .filter(|&want| want != passed)
        .map(|want| format!("expected {}, got {}", if want { "pass" } else { "fail" }, if passed { "pass" } else { "fail" }));
    let rows: Vec<(&str, String)> = reports
        .iter()
        .map(|r| {
            let name = match r.model {
                ModelKind::Gennet => "gennet",
                ModelKind::Iggnn => "iggnn",
            };
            let layer = r.max_layer_deviation.map_or("-".to_string(), |x| format!("{x:.3e}"));
            (name, format!("passed={} global={:.3e} layer={} trials={}", r.passed, r.max_global_deviation, layer, r.trials))
        })
        .collect();
    let json = to_json(&json!({"passed": passed, "reports": reports}))?;
    Ok(Output { json, table: kv_table(&rows), mismatch })
}

fn sweep(
    common: &CommonArgs,
    kind: SweepKind,
    count: usize,
    nodes: usize,
    dim: usize,
    model: ModelArgs,
    expect: Option<String>,
) -> Result<Output, CliError> {
    let expect = parse_expect::<Verdict>(&expect)?;
    let reports = model
        .model
        .iter()
        .map(|&m| {
            let mut cfg = SweepConfig::new(kind, count, nodes, dim, m, common.seed);
            cfg.depth = model.depth;
            cfg.channels = model.channels;
            cfg.init = model.init.into();
            sephar::generic_pair_sweep(&cfg)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mismatch = expect.and_then(|want| {
        let bad: Vec<String> = reports.iter().filter(|r| r.verdict != want).map(|r| format!("{}: {}", r.model, r.verdict)).collect();
        (!bad.is_empty()).then(|| format!("expected {want}, got {}", bad.join("; ")))
    });
    let rows: Vec<(&str, String)> = reports
        .iter()
        .map(|r| {
            let name = match r.model {
                ModelKind::Gennet => "gennet",
                ModelKind::Iggnn => "iggnn",
            };
            (
                name,
                format!(
                    "{} {} pairs (n={}, d={}, T={}, C={}): isomorphic={} separated_non_isomorphic={} separated_isomorphic={} equal={} ambiguous={}",
                    r.verdict, r.kind, r.n, r.d, r.depth, r.channels, r.isomorphic_pairs, r.separated_non_isomorphic,
                    r.separated_isomorphic, r.equal, r.ambiguous
                ),
            )
        })
        .collect();
    let json = to_json(&json!({"reports": reports}))?;
    Ok(Output { json, table: kv_table(&rows), mismatch })
}
