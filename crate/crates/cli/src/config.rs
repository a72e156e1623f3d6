//! Run settings from an INI file and command-line flags.
//!
//! Keys in the general part of the file (no section, or `[general]`) apply to
//! every subcommand; a section named after the subcommand overrides them, and
//! flags override both. Sections for other subcommands only have their keys checked.

use std::path::{Path, PathBuf};

use clap::Args;
use tvprofile::experiments::{default_audits, dyadic_horizons, GraphSpec, Quantity, SuiteParams};
use tvprofile::Vertex;

use crate::CliError;

pub const SUBCOMMANDS: [&str; 6] = ["gen", "profile", "curvature", "partition", "audit", "scaling"];

/// Flags shared by every subcommand. Each flag name is also a config key.
#[derive(Args, Clone, Debug, Default)]
pub struct Flags {
    /// INI config file
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// torus:a,b,.. | cycle:n | complete:n | hypercube:d | lamplighter:n | regular:n,d[,seed] | edges:PATH
    #[arg(long)]
    pub graph: Option<String>,
    /// walk horizon
    #[arg(long)]
    pub n: Option<String>,
    /// fixed lambda, overriding calibration
    #[arg(long)]
    pub lambda: Option<String>,
    /// calibration constant C in lambda = max(1, C log(1/TV_n))
    #[arg(long = "calib-c")]
    pub calib_c: Option<String>,
    /// number of coupling samples
    #[arg(long)]
    pub seeds: Option<String>,
    /// root seed for all randomness
    #[arg(long)]
    pub seed: Option<String>,
    /// output path (stdout when absent)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// csv or json
    #[arg(long)]
    pub format: Option<String>,
    /// neighbor pair "u,v" per edge orbit of a vertex-transitive graph, or "auto"
    #[arg(long = "transitive-pair")]
    pub transitive_pair: Vec<String>,
    /// cap on exact work (DP states, curvature edges, kernel entries)
    #[arg(long)]
    pub budget: Option<String>,
    /// comma-separated audit ids; empty runs nothing
    #[arg(long)]
    pub audits: Option<String>,
    /// comma-separated horizons, or "lo..hi" for powers of two in range
    #[arg(long)]
    pub horizons: Option<String>,
    /// tv, dstar or hstar
    #[arg(long)]
    pub quantity: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Debug)]
pub enum PairChoice {
    None,
    Auto,
    Pairs(Vec<(Vertex, Vertex)>),
}

/// Fully resolved settings for one run.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub graph: GraphSpec,
    pub n: usize,
    pub lambda: Option<f64>,
    pub calib_c: Option<f64>,
    pub seeds: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub pairs: PairChoice,
    pub budget: usize,
    pub audits: Vec<String>,
    pub horizons: Vec<usize>,
    pub quantity: Quantity,
}

impl RunConfig {
    pub fn suite_params(&self) -> SuiteParams {
        let mut p = SuiteParams::new(self.n, self.seed);
        p.seeds = self.seeds;
        p.calib_c = self.calib_c;
        p.lambda = self.lambda;
        p.budget = self.budget;
        p
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn set(flags: &mut Flags, key: &str, value: &str) -> Result<(), CliError> {
    let v = Some(value.to_string());
    match key {
        "graph" => flags.graph = v,
        "n" => flags.n = v,
        "lambda" => flags.lambda = v,
        "calib-c" | "calib_c" => flags.calib_c = v,
        "seeds" => flags.seeds = v,
        "seed" => flags.seed = v,
        "out" => flags.out = Some(PathBuf::from(value)),
        "format" => flags.format = v,
        "transitive-pair" | "transitive_pair" => {
            flags.transitive_pair = value.split_whitespace().map(str::to_string).collect()
        }
        "budget" => flags.budget = v,
        "audits" => flags.audits = v,
        "horizons" => flags.horizons = v,
        "quantity" => flags.quantity = v,
        other => return Err(usage(format!("unknown config key '{other}'"))),
    }
    Ok(())
}

fn load_file(path: &Path, command: &str) -> Result<Flags, CliError> {
    let ini = ini::Ini::load_from_file(path).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let mut flags = Flags::default();
    let general = |s: Option<&str>| s.is_none() || s == Some("general");
    for pass in [0, 1] {
        for (section, props) in ini.iter() {
            let applies = match pass {
                0 => general(section),
                _ => section == Some(command),
            };
            if !applies {
                if !general(section) && !section.is_some_and(|s| SUBCOMMANDS.contains(&s)) {
                    return Err(usage(format!("unknown config section '{}'", section.unwrap_or(""))));
                }
                // keys in other sections are still checked
                let mut scratch = Flags::default();
                for (k, v) in props.iter() {
                    set(&mut scratch, k, v)?;
                }
                continue;
            }
            for (k, v) in props.iter() {
                set(&mut flags, k, v)?;
            }
        }
    }
    Ok(flags)
}

fn overlay(base: Flags, top: Flags) -> Flags {
    Flags {
        config: top.config.or(base.config),
        graph: top.graph.or(base.graph),
        n: top.n.or(base.n),
        lambda: top.lambda.or(base.lambda),
        calib_c: top.calib_c.or(base.calib_c),
        seeds: top.seeds.or(base.seeds),
        seed: top.seed.or(base.seed),
        out: top.out.or(base.out),
        format: top.format.or(base.format),
        transitive_pair: if top.transitive_pair.is_empty() {
            base.transitive_pair
        } else {
            top.transitive_pair
        },
        budget: top.budget.or(base.budget),
        audits: top.audits.or(base.audits),
        horizons: top.horizons.or(base.horizons),
        quantity: top.quantity.or(base.quantity),
    }
}

fn num<T: std::str::FromStr>(key: &str, v: &Option<String>) -> Result<Option<T>, CliError> {
    v.as_deref()
        .map(|s| {
            s.trim()
                .parse::<T>()
                .map_err(|_| usage(format!("--{key}: cannot parse '{s}'")))
        })
        .transpose()
}

fn parse_pair(s: &str) -> Result<(Vertex, Vertex), CliError> {
    let bad = || usage(format!("--transitive-pair: expected u,v, got '{s}'"));
    let (a, b) = s.split_once(',').ok_or_else(bad)?;
    Ok((
        a.trim().parse().map_err(|_| bad())?,
        b.trim().parse().map_err(|_| bad())?,
    ))
}

fn parse_horizons(s: &str) -> Result<Vec<usize>, CliError> {
    if let Some((lo, hi)) = s.split_once("..") {
        let lo: usize = lo.trim().parse().map_err(|_| usage(format!("--horizons: bad range '{s}'")))?;
        let hi: usize = hi.trim().parse().map_err(|_| usage(format!("--horizons: bad range '{s}'")))?;
        return Ok(dyadic_horizons(lo, hi));
    }
    s.split(',')
        .map(|p| p.trim().parse().map_err(|_| usage(format!("--horizons: bad value '{p}'"))))
        .collect()
}

/// Merges file and flags for `command` and checks every value.
pub fn resolve(command: &str, flags: Flags) -> Result<RunConfig, CliError> {
    let merged = match &flags.config {
        Some(path) => overlay(load_file(path, command)?, flags),
        None => flags,
    };
    let graph: GraphSpec = merged
        .graph
        .as_deref()
        .ok_or_else(|| usage("--graph is required"))?
        .parse()
        .map_err(|e: tvprofile::experiments::ExperimentError| usage(e.to_string()))?;
    let n = num::<usize>("n", &merged.n)?.unwrap_or(10);
    let seeds = num::<usize>("seeds", &merged.seeds)?.unwrap_or(50);
    if seeds == 0 {
        return Err(usage("--seeds must be >= 1"));
    }
    let lambda = num::<f64>("lambda", &merged.lambda)?;
    if lambda.is_some_and(|l| !(l >= 1.0) || !l.is_finite()) {
        return Err(usage("--lambda must be a finite value >= 1"));
    }
    let calib_c = num::<f64>("calib-c", &merged.calib_c)?;
    if calib_c.is_some_and(|c| !(c >= 0.0)) {
        return Err(usage("--calib-c must be >= 0"));
    }
    let format = match merged.format.as_deref() {
        None => None,
        Some("csv") => Some(Format::Csv),
        Some("json") => Some(Format::Json),
        Some(other) => return Err(usage(format!("--format: expected csv or json, got '{other}'"))),
    };
    let pairs = match merged.transitive_pair.as_slice() {
        [] => PairChoice::None,
        [one] if one == "auto" => PairChoice::Auto,
        list => PairChoice::Pairs(list.iter().map(|s| parse_pair(s)).collect::<Result<_, _>>()?),
    };
    let audits = match merged.audits.as_deref() {
        None => default_audits(),
        Some(s) => s
            .split(',')
            .map(str::trim)
            .filter(|a| !a.is_empty())
            .map(str::to_string)
            .collect(),
    };
    tvprofile::experiments::validate_audit_ids(&audits).map_err(|e| usage(e.to_string()))?;
    let horizons = match merged.horizons.as_deref() {
        None => dyadic_horizons(4, 128),
        Some(s) => parse_horizons(s)?,
    };
    let quantity = match merged.quantity.as_deref() {
        None => Quantity::Tv,
        Some(s) => s.parse().map_err(|e: tvprofile::experiments::ExperimentError| usage(e.to_string()))?,
    };
    Ok(RunConfig {
        graph,
        n,
        lambda,
        calib_c,
        seeds,
        seed: num::<u64>("seed", &merged.seed)?.unwrap_or(0),
        out: merged.out,
        format,
        pairs,
        budget: num::<usize>("budget", &merged.budget)?.unwrap_or(1 << 24),
        audits,
        horizons,
        quantity,
    })
}
