//! Command-line front end: graph generation, profiles, curvature, partition
//! certificates, audit suites and scaling fits.
//!
//! Exit codes: 0 success, 1 usage or IO error, 2 a checked inequality
//! failed, 3 some computation exceeded its budget.

mod config;

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};
use thiserror::Error;
use tvprofile::experiments::{
    run_audit, run_curvature, run_partition, run_scaling, ExperimentError,
};
use tvprofile::graph::to_edge_list;
use tvprofile::{Graph, PairScope, ProfileTable};

use config::{resolve, Flags, Format, PairChoice, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Experiment(e) if e.is_budget() => 3,
            _ => 1,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "tvprofile", version, about = "Random-walk profiles and small-boundary certificates on finite graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write the edge list of a generated graph
    Gen(Flags),
    /// TV, displacement and entropy profiles (CSV: m,tv,dstar,hstar)
    Profile(Flags),
    /// Exact Ollivier-Ricci curvature of every edge
    Curvature(Flags),
    /// Search for a cell with boundary ratio <= 4 TV_n
    Partition(Flags),
    /// Run the inequality audit suite
    Audit(Flags),
    /// Log-log fit of a profile column over several horizons
    Scaling(Flags),
}

impl Command {
    fn split(self) -> (&'static str, Flags) {
        match self {
            Command::Gen(f) => ("gen", f),
            Command::Profile(f) => ("profile", f),
            Command::Curvature(f) => ("curvature", f),
            Command::Partition(f) => ("partition", f),
            Command::Audit(f) => ("audit", f),
            Command::Scaling(f) => ("scaling", f),
        }
    }
}

/// Writes through a temporary file in the target directory, then renames.
fn write_atomic(path: &Path, content: &str) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(content.as_bytes()).map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

fn emit(cfg: &RunConfig, content: &str) -> Result<(), CliError> {
    match &cfg.out {
        Some(path) => write_atomic(path, content),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(content.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::Io {
                    path: PathBuf::from("<stdout>"),
                    message: e.to_string(),
                })
        }
    }
}

fn with_header(cfg: &RunConfig, body: Value) -> String {
    let mut doc = json!({ "seed": cfg.seed, "graph": cfg.graph.to_string() });
    match body {
        Value::Object(map) => doc.as_object_mut().expect("object").extend(map),
        other => {
            doc["result"] = other;
        }
    }
    let mut s = serde_json::to_string_pretty(&doc).expect("serializable");
    s.push('\n');
    s
}

fn csv_header(cfg: &RunConfig) -> String {
    format!("# seed={} graph={}\n", cfg.seed, cfg.graph)
}

fn scope(cfg: &RunConfig, g: &Graph) -> Result<PairScope, CliError> {
    Ok(match &cfg.pairs {
        PairChoice::None => PairScope::AllNeighborPairs,
        PairChoice::Auto => PairScope::Hinted(cfg.graph.transitive_hint().ok_or_else(|| {
            CliError::Usage(format!("no automatic transitive pair for {}", cfg.graph))
        })?),
        PairChoice::Pairs(p) => {
            for &(a, b) in p {
                if a >= g.vertex_count() || b >= g.vertex_count() || !g.has_edge(a, b) {
                    return Err(CliError::Usage(format!("--transitive-pair {a},{b} is not an edge")));
                }
            }
            PairScope::Hinted(p.clone())
        }
    })
}

fn to_json<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

fn cmd_gen(cfg: &RunConfig, g: &Graph) -> Result<u8, CliError> {
    let text = format!(
        "{}# vertices={} edges={}\n{}",
        csv_header(cfg),
        g.vertex_count(),
        g.edge_count(),
        to_edge_list(g)
    );
    emit(cfg, &text)?;
    Ok(0)
}

fn cmd_profile(cfg: &RunConfig, g: &Graph) -> Result<u8, CliError> {
    let table = ProfileTable::compute(g, cfg.n, &scope(cfg, g)?).map_err(ExperimentError::from)?;
    let text = match cfg.format.unwrap_or(Format::Csv) {
        Format::Csv => csv_header(cfg) + &table.to_csv(),
        Format::Json => with_header(cfg, json!({ "n": cfg.n, "hinted": table.is_hinted(), "rows": table.rows })),
    };
    emit(cfg, &text)?;
    let last = table.at(cfg.n);
    eprintln!(
        "profile {} n={}: TV={} D*={} H*={}",
        cfg.graph, cfg.n, last.tv, last.dstar, last.hstar
    );
    Ok(0)
}

fn cmd_curvature(cfg: &RunConfig, g: &Graph) -> Result<u8, CliError> {
    let run = run_curvature(g, Some(cfg.n), &scope(cfg, g)?, cfg.budget)?;
    let text = match cfg.format.unwrap_or(Format::Json) {
        Format::Json => with_header(cfg, to_json(&run)),
        Format::Csv => {
            let mut s = csv_header(cfg) + "u,v,ric_num,ric_den,ric\n";
            for e in &run.curvature.edges {
                let _ = writeln!(s, "{},{},{},{},{}", e.u, e.v, e.ric_num, e.ric_den, e.ric);
            }
            s
        }
    };
    emit(cfg, &text)?;
    let sm = &run.curvature.summary;
    eprintln!("curvature {}: min={} mean={} nonneg={}", cfg.graph, sm.min, sm.mean, sm.nonneg);
    Ok(match run.tv_bound.and_then(|a| a.passed()) {
        Some(false) => 2,
        _ => 0,
    })
}

fn cmd_partition(cfg: &RunConfig, g: &Graph) -> Result<u8, CliError> {
    let cert = run_partition(g, cfg.n, &scope(cfg, g)?, cfg.calib_c, cfg.lambda, cfg.seeds, cfg.seed)?;
    emit(cfg, &with_header(cfg, to_json(&cert)))?;
    eprintln!(
        "partition {} n={}: lambda={} TV_n={} found={} pass={}{}",
        cfg.graph,
        cfg.n,
        cert.lambda,
        cert.tv_n,
        cert.found,
        cert.pass,
        if cert.vacuous { " (ratio bound >= 1, vacuous)" } else { "" }
    );
    Ok(if cert.pass { 0 } else { 2 })
}

fn cmd_audit(cfg: &RunConfig, g: &Graph) -> Result<u8, CliError> {
    let res = run_audit(g, &scope(cfg, g)?, &cfg.suite_params(), &cfg.audits)?;
    emit(cfg, &with_header(cfg, json!({ "n": cfg.n, "suite": res })))?;
    for a in &res.audits {
        let status = match &a.status {
            tvprofile::experiments::AuditStatus::Passed => "pass".to_string(),
            tvprofile::experiments::AuditStatus::Failed => "FAIL".to_string(),
            tvprofile::experiments::AuditStatus::Skipped { reason, .. } => format!("skip ({reason})"),
        };
        eprintln!("audit {}: {status}", a.id);
    }
    Ok(if !res.pass {
        2
    } else if res.budget_skips > 0 {
        3
    } else {
        0
    })
}

fn cmd_scaling(cfg: &RunConfig, g: &Graph) -> Result<u8, CliError> {
    let fit = run_scaling(g, &scope(cfg, g)?, cfg.quantity, &cfg.horizons)?;
    let text = match cfg.format.unwrap_or(Format::Json) {
        Format::Json => with_header(cfg, to_json(&fit)),
        Format::Csv => {
            let mut s = csv_header(cfg);
            let _ = writeln!(s, "# exponent={} residual={}", fit.exponent, fit.residual);
            s.push_str("n,value\n");
            for (n, v) in &fit.series {
                let _ = writeln!(s, "{n},{v}");
            }
            s
        }
    };
    emit(cfg, &text)?;
    eprintln!("scaling {} {}: exponent={}", cfg.graph, fit.quantity, fit.exponent);
    Ok(0)
}

fn run(command: Command) -> Result<u8, CliError> {
    let (name, flags) = command.split();
    let cfg = resolve(name, flags)?;
    let g = cfg.graph.build(cfg.seed)?;
    match name {
        "gen" => cmd_gen(&cfg, &g),
        "profile" => cmd_profile(&cfg, &g),
        "curvature" => cmd_curvature(&cfg, &g),
        "partition" => cmd_partition(&cfg, &g),
        "audit" => cmd_audit(&cfg, &g),
        "scaling" => cmd_scaling(&cfg, &g),
        _ => unreachable!("clap restricts subcommands"),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
