//! `revcone`: validate graphs, run Compass, render reports, generate
//! synthetic graphs and launch the API server.
//!
//! Exit codes: 0 success, 1 validation or domain failure, 2 usage error
//! (bad flags, unreadable input).

use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use revcone_core::ingest::{parse_document, synthetic::SyntheticProfile};
use revcone_core::report::graph_totals;
use revcone_core::{
    build_report, generate_synthetic, parse_graph, serialize_graph, validate_graph, CompassOptions,
    DependencyGraph, Profile, ReportFormat,
};
use revcone_service::{LoadedState, ServiceConfig, ServiceState};

#[derive(Parser)]
#[command(
    name = "revcone",
    version,
    about = "Review-cone analysis for proof dependency graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a graph document and list every structural violation.
    Validate {
        #[arg(long)]
        input: PathBuf,
    },
    /// Run Compass for target theorems and print per-target reductions.
    Compass(ReportArgs<CompassFormat>),
    /// Like `compass`, with markdown output available.
    Report(ReportArgs<ReportFormatArg>),
    /// Write a deterministic synthetic graph document.
    Generate(GenerateArgs),
    /// Serve the HTTP API for a graph and its metadata sidecar.
    Serve(ServeArgs),
}

#[derive(Args)]
struct TargetArgs {
    /// Comma-separated declaration names.
    #[arg(
        long,
        value_delimiter = ',',
        required_unless_present = "targets_file",
        conflicts_with = "targets_file"
    )]
    targets: Vec<String>,
    /// One name per line; `#` starts a comment.
    #[arg(long)]
    targets_file: Option<PathBuf>,
}

#[derive(Args)]
struct AxiomArgs {
    /// Keep every axiom in the graph (the default).
    #[arg(long, conflicts_with_all = ["cone_axioms", "no_axioms"])]
    all_axioms: bool,
    /// Keep only axioms inside the review cone.
    #[arg(long, conflicts_with = "no_axioms")]
    cone_axioms: bool,
    /// Keep no axioms beyond those reached by traversal.
    #[arg(long)]
    no_axioms: bool,
}

impl AxiomArgs {
    fn options(&self) -> CompassOptions {
        if self.cone_axioms {
            CompassOptions::cone_axioms()
        } else if self.no_axioms {
            CompassOptions::no_axioms()
        } else {
            CompassOptions::all_axioms()
        }
    }
}

#[derive(Args)]
struct ReportArgs<F: ValueEnum + Clone + Send + Sync + 'static> {
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    targets: TargetArgs,
    #[command(flatten)]
    axioms: AxiomArgs,
    #[arg(long)]
    format: Option<F>,
}

#[derive(Clone, Copy, ValueEnum)]
enum CompassFormat {
    Table,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormatArg {
    Table,
    Json,
    Markdown,
}

impl From<CompassFormat> for ReportFormat {
    fn from(f: CompassFormat) -> Self {
        match f {
            CompassFormat::Table => ReportFormat::Table,
            CompassFormat::Json => ReportFormat::Json,
        }
    }
}

impl From<ReportFormatArg> for ReportFormat {
    fn from(f: ReportFormatArg) -> Self {
        match f {
            ReportFormatArg::Table => ReportFormat::Table,
            ReportFormatArg::Json => ReportFormat::Json,
            ReportFormatArg::Markdown => ReportFormat::Markdown,
        }
    }
}

#[derive(Args)]
struct GenerateArgs {
    /// theoremHeavy, definitionHeavy or mixed.
    #[arg(long, value_parser = parse_profile)]
    profile: Profile,
    /// Non-axiom declarations to generate.
    #[arg(long)]
    nodes: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    mean_out_degree: Option<f64>,
    #[arg(long)]
    theorem_fraction: Option<f64>,
    #[arg(long)]
    axioms: Option<usize>,
    #[arg(long)]
    back_edge_rate: Option<f64>,
}

fn parse_profile(s: &str) -> Result<Profile, String> {
    s.parse()
        .map_err(|e: revcone_core::ingest::SyntheticError| e.to_string())
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, env = "REVCONE_GRAPH")]
    input: PathBuf,
    /// Sidecar file; created on the first metadata update if missing.
    #[arg(long, env = "REVCONE_METADATA")]
    metadata: PathBuf,
    #[arg(long, env = "REVCONE_LISTEN", default_value = "127.0.0.1:8080")]
    listen: SocketAddr,
    #[command(flatten)]
    axioms: AxiomArgs,
}

/// A failure carrying its exit code.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

fn usage(error: anyhow::Error) -> Failure {
    Failure { code: 2, error }
}

fn domain(error: anyhow::Error) -> Failure {
    Failure { code: 1, error }
}

type CmdResult = Result<ExitCode, Failure>;

fn read_input(path: &Path) -> Result<Vec<u8>, Failure> {
    std::fs::read(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(usage)
}

fn load_graph(path: &Path) -> Result<DependencyGraph, Failure> {
    let bytes = read_input(path)?;
    parse_graph(&bytes)
        .with_context(|| format!("{} is not a valid graph document", path.display()))
        .map_err(domain)
}

fn read_targets(args: &TargetArgs) -> Result<Vec<String>, Failure> {
    let mut out: Vec<String> = match &args.targets_file {
        Some(path) => {
            let text = String::from_utf8(read_input(path)?)
                .map_err(|_| usage(anyhow!("{} is not UTF-8", path.display())))?;
            text.lines()
                .map(|l| l.split('#').next().unwrap_or("").trim())
                .filter(|l| !l.is_empty())
                .map(String::from)
                .collect()
        }
        None => args
            .targets
            .iter()
            .map(|t| t.trim().to_string())
            .filter(|t| !t.is_empty())
            .collect(),
    };
    out.dedup();
    if out.is_empty() {
        return Err(domain(anyhow!("no targets given")));
    }
    Ok(out)
}

fn stdout_write(bytes: &[u8]) -> Result<(), Failure> {
    let mut out = std::io::stdout().lock();
    out.write_all(bytes)
        .and_then(|_| out.flush())
        .context("writing to stdout")
        .map_err(domain)
}

fn validate(input: &Path) -> CmdResult {
    let bytes = read_input(input)?;
    let doc = parse_document(&bytes)
        .with_context(|| format!("{} is not a graph document", input.display()))
        .map_err(domain)?;
    let report = validate_graph(&doc.declarations(), &doc.dep_edges());
    stdout_write(report.to_string().as_bytes())?;
    Ok(if report.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn report(
    input: &Path,
    targets: &TargetArgs,
    axioms: &AxiomArgs,
    format: ReportFormat,
) -> CmdResult {
    let graph = load_graph(input)?;
    let targets = read_targets(targets)?;
    let report = build_report(&graph, targets.iter().map(String::as_str), axioms.options())
        .map_err(|e| domain(e.into()))?;
    stdout_write(&report.render(format))?;
    Ok(ExitCode::SUCCESS)
}

fn generate(args: &GenerateArgs) -> CmdResult {
    let mut profile = SyntheticProfile::new(args.profile, args.nodes, args.seed);
    if let Some(d) = args.mean_out_degree {
        profile.mean_out_degree = d;
    }
    if let Some(f) = args.theorem_fraction {
        profile.theorem_fraction = f;
    }
    if let Some(a) = args.axioms {
        profile.axiom_count = a;
    }
    if let Some(b) = args.back_edge_rate {
        profile.back_edge_rate = b;
    }
    let graph = generate_synthetic(&profile).map_err(|e| usage(e.into()))?;
    std::fs::write(&args.out, serialize_graph(&graph))
        .with_context(|| format!("cannot write {}", args.out.display()))
        .map_err(domain)?;

    let totals = graph_totals(&graph);
    let mut summary = format!(
        "wrote {}: {} nodes, {} edges\n",
        args.out.display(),
        totals.node_count,
        totals.edge_count
    );
    for (kind, n) in &totals.nodes_by_kind {
        summary.push_str(&format!("  {:<16}{n:>8}\n", kind.as_str()));
    }
    for (kind, n) in &totals.edges_by_kind {
        summary.push_str(&format!("  {:<16}{n:>8}\n", kind.as_str()));
    }
    stdout_write(summary.as_bytes())?;
    Ok(ExitCode::SUCCESS)
}

async fn shutdown_signal() {
    let _ = tokio::signal::ctrl_c().await;
}

fn serve(args: &ServeArgs) -> CmdResult {
    let mut config = ServiceConfig::new(&args.input, &args.metadata);
    config.listen = args.listen;
    config.options = args.axioms.options();
    let loaded = LoadedState::load(&config).map_err(|e| domain(e.into()))?;
    let nodes = loaded.snapshot().graph.node_count();

    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .context("starting runtime")
        .map_err(domain)?;
    runtime.block_on(async move {
        let listener = revcone_service::bind(config.listen)
            .await
            .map_err(|e| domain(e.into()))?;
        let addr = listener
            .local_addr()
            .context("reading bound address")
            .map_err(domain)?;
        stdout_write(format!("listening on http://{addr} ({nodes} nodes)\n").as_bytes())?;
        revcone_service::serve(listener, ServiceState::with(loaded), shutdown_signal())
            .await
            .map_err(|e| domain(e.into()))?;
        Ok(ExitCode::SUCCESS)
    })
}

fn run(cli: Cli) -> CmdResult {
    match cli.command {
        Command::Validate { input } => validate(&input),
        Command::Compass(a) => report(
            &a.input,
            &a.targets,
            &a.axioms,
            a.format.unwrap_or(CompassFormat::Table).into(),
        ),
        Command::Report(a) => report(
            &a.input,
            &a.targets,
            &a.axioms,
            a.format.unwrap_or(ReportFormatArg::Markdown).into(),
        ),
        Command::Generate(a) => generate(&a),
        Command::Serve(a) => serve(&a),
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "warn".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(Failure { code, error }) => {
            eprintln!("error: {error:#}");
            ExitCode::from(code)
        }
    }
}
