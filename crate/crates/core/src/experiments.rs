//! Experiment plumbing: graph specifications, power-law fits, and the
//! runners behind each command-line subcommand.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rand::Rng;
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::coupling::{
    audit_tvtilde, certificate_report, choose_lambda, default_calibration, good_event_laws,
    mtp_average, simultaneous_coupling, partition_certificate, tv_conditioning_audit, Certificate,
    CertificateRequest, CouplingError, EventParams, SparseLaw,
};
use crate::curvature::{
    audit_curvature_isoperimetry, audit_ms_tv_bound, curvature_report, CurvatureError,
    CurvatureReport, PhiPoint, TvBoundAudit,
};
use crate::graph::{
    gen_complete, gen_cycle, gen_hypercube, gen_lamplighter_cycle, gen_random_regular, gen_torus,
    iso_profile_exhaustive, lamplighter_encode, load_edge_list, torus_encode, Graph, GraphError,
    Vertex, VertexSet, EXHAUSTIVE_VERTEX_LIMIT,
};
use crate::green::{
    audit_info_green_row, green_kernel, supermultiplicativity_excess, tail_info_record, GreenError,
};
use crate::report::{AuditRecord, AuditReport};
use crate::stats::{derive_seed, mean_and_stderr, stream_rng};
use crate::tail::{
    audit_expectation_median, audit_lemma_tail, audit_upper_tail, audit_triangle_lemma,
    MetricTable, TailError,
};
use crate::walk::{distribution, exact_distribution, PairScope, ProfileTable, WalkError};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("degenerate series: {0}")]
    DegenerateSeries(String),
    #[error("budget exceeded: {0}")]
    Budget(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Walk(#[from] WalkError),
    #[error(transparent)]
    Green(#[from] GreenError),
    #[error(transparent)]
    Curvature(#[from] CurvatureError),
    #[error(transparent)]
    Tail(#[from] TailError),
    #[error(transparent)]
    Coupling(#[from] CouplingError),
}

impl ExperimentError {
    /// True when the computation was refused for size rather than failing.
    pub fn is_budget(&self) -> bool {
        match self {
            ExperimentError::Budget(_) => true,
            ExperimentError::Graph(e) => graph_budget(e),
            ExperimentError::Walk(e) => walk_budget(e),
            ExperimentError::Green(GreenError::TooLarge(_)) => true,
            ExperimentError::Green(GreenError::Graph(e)) => graph_budget(e),
            ExperimentError::Curvature(CurvatureError::Budget { .. }) => true,
            ExperimentError::Curvature(CurvatureError::Graph(e)) => graph_budget(e),
            ExperimentError::Tail(TailError::StateBudget { .. }) => true,
            ExperimentError::Tail(TailError::Graph(e)) => graph_budget(e),
            ExperimentError::Coupling(CouplingError::ProposalCap { .. }) => true,
            ExperimentError::Coupling(CouplingError::Walk(e)) => walk_budget(e),
            ExperimentError::Coupling(CouplingError::Graph(e)) => graph_budget(e),
            _ => false,
        }
    }
}

fn graph_budget(e: &GraphError) -> bool {
    matches!(e, GraphError::BudgetExhausted { .. } | GraphError::TooLarge { .. })
}

fn walk_budget(e: &WalkError) -> bool {
    matches!(e, WalkError::RowBudget { .. } | WalkError::TooLargeForExact(_))
}

/// A generator with parameters, or an edge-list file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GraphSpec {
    Torus(Vec<usize>),
    Cycle(usize),
    Complete(usize),
    Hypercube(usize),
    Lamplighter(usize),
    /// `seed` defaults to the experiment seed.
    Regular { n: usize, d: usize, seed: Option<u64> },
    EdgeList(PathBuf),
}

fn parse_list(s: &str) -> Result<Vec<usize>, ExperimentError> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .map_err(|_| ExperimentError::Usage(format!("bad integer '{p}' in '{s}'")))
        })
        .collect()
}

impl FromStr for GraphSpec {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (kind, args) = s
            .split_once(':')
            .ok_or_else(|| ExperimentError::Usage(format!("graph spec '{s}' is not kind:params")))?;
        let one = |v: Vec<usize>| -> Result<usize, ExperimentError> {
            match v[..] {
                [a] => Ok(a),
                _ => Err(ExperimentError::Usage(format!("'{kind}' takes one parameter"))),
            }
        };
        match kind {
            "torus" => Ok(GraphSpec::Torus(parse_list(args)?)),
            "cycle" => Ok(GraphSpec::Cycle(one(parse_list(args)?)?)),
            "complete" => Ok(GraphSpec::Complete(one(parse_list(args)?)?)),
            "hypercube" => Ok(GraphSpec::Hypercube(one(parse_list(args)?)?)),
            "lamplighter" => Ok(GraphSpec::Lamplighter(one(parse_list(args)?)?)),
            "regular" => match parse_list(args)?[..] {
                [n, d] => Ok(GraphSpec::Regular { n, d, seed: None }),
                [n, d, seed] => Ok(GraphSpec::Regular {
                    n,
                    d,
                    seed: Some(seed as u64),
                }),
                _ => Err(ExperimentError::Usage("regular takes n,d[,seed]".into())),
            },
            "edges" => Ok(GraphSpec::EdgeList(PathBuf::from(args))),
            other => Err(ExperimentError::Usage(format!("unknown graph kind '{other}'"))),
        }
    }
}

impl fmt::Display for GraphSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
        match self {
            GraphSpec::Torus(s) => write!(f, "torus:{}", join(s)),
            GraphSpec::Cycle(n) => write!(f, "cycle:{n}"),
            GraphSpec::Complete(n) => write!(f, "complete:{n}"),
            GraphSpec::Hypercube(d) => write!(f, "hypercube:{d}"),
            GraphSpec::Lamplighter(n) => write!(f, "lamplighter:{n}"),
            GraphSpec::Regular { n, d, seed: None } => write!(f, "regular:{n},{d}"),
            GraphSpec::Regular { n, d, seed: Some(s) } => write!(f, "regular:{n},{d},{s}"),
            GraphSpec::EdgeList(p) => write!(f, "edges:{}", p.display()),
        }
    }
}

impl GraphSpec {
    pub fn build(&self, seed: u64) -> Result<Graph, ExperimentError> {
        Ok(match self {
            GraphSpec::Torus(sides) => gen_torus(sides)?,
            GraphSpec::Cycle(n) => gen_cycle(*n)?,
            GraphSpec::Complete(n) => gen_complete(*n)?,
            GraphSpec::Hypercube(d) => gen_hypercube(*d)?,
            GraphSpec::Lamplighter(n) => gen_lamplighter_cycle(*n)?,
            GraphSpec::Regular { n, d, seed: s } => gen_random_regular(*n, *d, s.unwrap_or(seed))?,
            GraphSpec::EdgeList(path) => {
                let text = std::fs::read_to_string(path).map_err(|source| ExperimentError::Io {
                    path: path.clone(),
                    source,
                })?;
                load_edge_list(&text)?
            }
        })
    }

    /// One edge per edge orbit of the translation (or group) action, for
    /// generators whose output is a Cayley graph.
    pub fn transitive_hint(&self) -> Option<Vec<(Vertex, Vertex)>> {
        match self {
            GraphSpec::Torus(sides) => Some(
                (0..sides.len())
                    .map(|i| {
                        let mut c = vec![0; sides.len()];
                        c[i] = 1;
                        (0, torus_encode(sides, &c))
                    })
                    .collect(),
            ),
            GraphSpec::Cycle(_) => Some(vec![(0, 1)]),
            GraphSpec::Hypercube(d) => Some((0..*d).map(|i| (0, 1 << i)).collect()),
            GraphSpec::Lamplighter(n) => Some(vec![
                (0, lamplighter_encode(*n, 1, 0)),
                (0, lamplighter_encode(*n, 0, 1)),
            ]),
            GraphSpec::Complete(_) => Some(vec![(0, 1)]),
            _ => None,
        }
    }
}

/// Least-squares fit of `log value = exponent · log n + intercept`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingFit {
    pub quantity: String,
    pub series: Vec<(usize, f64)>,
    pub exponent: f64,
    pub intercept: f64,
    /// Root-mean-square residual in log space.
    pub residual: f64,
    pub points_used: usize,
}

pub const MIN_FIT_POINTS: usize = 5;

pub fn fit_power_law(quantity: &str, series: &[(usize, f64)]) -> Result<ScalingFit, ExperimentError> {
    let pts: Vec<(f64, f64)> = series
        .iter()
        .filter(|&&(n, v)| n > 0 && v > 0.0 && v.is_finite())
        .map(|&(n, v)| ((n as f64).ln(), v.ln()))
        .collect();
    if pts.len() < MIN_FIT_POINTS {
        return Err(ExperimentError::DegenerateSeries(format!(
            "{} positive points, need {MIN_FIT_POINTS}",
            pts.len()
        )));
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(ExperimentError::DegenerateSeries("all horizons equal".into()));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let exponent = sxy / sxx;
    let intercept = my - exponent * mx;
    let residual = (pts
        .iter()
        .map(|p| (p.1 - exponent * p.0 - intercept).powi(2))
        .sum::<f64>()
        / k)
        .sqrt();
    if !exponent.is_finite() {
        return Err(ExperimentError::DegenerateSeries("non-finite exponent".into()));
    }
    Ok(ScalingFit {
        quantity: quantity.to_string(),
        series: series.to_vec(),
        exponent,
        intercept,
        residual,
        points_used: pts.len(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    Tv,
    Dstar,
    Hstar,
}

impl FromStr for Quantity {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tv" => Ok(Quantity::Tv),
            "dstar" => Ok(Quantity::Dstar),
            "hstar" => Ok(Quantity::Hstar),
            _ => Err(ExperimentError::Usage(format!("unknown quantity '{s}' (tv, dstar, hstar)"))),
        }
    }
}

impl Quantity {
    pub fn name(self) -> &'static str {
        match self {
            Quantity::Tv => "tv",
            Quantity::Dstar => "dstar",
            Quantity::Hstar => "hstar",
        }
    }
}

/// Profile up to the largest horizon, then a fit of `quantity` at `horizons`.
pub fn run_scaling(
    g: &Graph,
    scope: &PairScope,
    quantity: Quantity,
    horizons: &[usize],
) -> Result<ScalingFit, ExperimentError> {
    let top = horizons
        .iter()
        .copied()
        .max()
        .ok_or_else(|| ExperimentError::DegenerateSeries("no horizons".into()))?;
    let profile = ProfileTable::compute(g, top, scope)?;
    let series: Vec<(usize, f64)> = horizons
        .iter()
        .map(|&n| {
            let r = profile.at(n);
            let v = match quantity {
                Quantity::Tv => r.tv,
                Quantity::Dstar => r.dstar,
                Quantity::Hstar => r.hstar,
            };
            (n, v)
        })
        .collect();
    fit_power_law(quantity.name(), &series)
}

/// `2^a, 2^{a+1}, …, 2^b` restricted to `[lo, hi]`.
pub fn dyadic_horizons(lo: usize, hi: usize) -> Vec<usize> {
    (0..usize::BITS)
        .map(|k| 1usize << k)
        .filter(|&n| n >= lo && n <= hi)
        .collect()
}

/// Curvature plus, when every edge is nonnegatively curved, the TV-decay
/// audit over the horizon.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurvatureRun {
    pub curvature: CurvatureReport,
    pub tv_bound: Option<TvBoundAudit>,
}

pub fn run_curvature(
    g: &Graph,
    n: Option<usize>,
    scope: &PairScope,
    edge_budget: usize,
) -> Result<CurvatureRun, ExperimentError> {
    let curvature = curvature_report(g, edge_budget)?;
    let tv_bound = match n {
        Some(n) => {
            let profile = ProfileTable::compute(g, n, scope)?;
            Some(audit_ms_tv_bound(g, &curvature, &profile.tv_column()))
        }
        None => None,
    };
    Ok(CurvatureRun {
        curvature,
        tv_bound,
    })
}

/// Certificate search with the calibrated or overridden `λ`.
pub fn run_partition(
    g: &Graph,
    n: usize,
    scope: &PairScope,
    calib_c: Option<f64>,
    lambda: Option<f64>,
    seeds: usize,
    root_seed: u64,
) -> Result<Certificate, ExperimentError> {
    let profile = ProfileTable::compute(g, n, scope)?;
    let calib_c = match calib_c {
        Some(c) => c,
        None => default_calibration(g, &profile)?,
    };
    Ok(partition_certificate(
        g,
        &CertificateRequest {
            profile: &profile,
            calib_c,
            lambda,
            seeds,
            root_seed,
            f: None,
        },
    )?)
}

/// Identifiers of every audit in the default suite, in execution order.
pub const AUDIT_IDS: [&str; 16] = [
    "tv_monotone",
    "walk_bounds",
    "reversibility",
    "ms_tv_bound",
    "curvature_isoperimetry",
    "green_supermultiplicativity",
    "info_green",
    "info_vs_green_tail",
    "lemma_tail",
    "triangle_lemma",
    "expectation_median",
    "upper_tail",
    "tv_conditioning",
    "tvtilde",
    "mtp_ensemble",
    "certificate",
];

/// Parameters shared by the audit suite.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteParams {
    pub n: usize,
    pub seed: u64,
    pub seeds: usize,
    pub calib_c: Option<f64>,
    pub lambda: Option<f64>,
    /// Cap on exact work: DP states, curvature edges, kernel entries.
    pub budget: usize,
    pub green_ts: Vec<f64>,
    pub lemma_lambdas: Vec<f64>,
    pub radii: Vec<f64>,
    pub mus: Vec<f64>,
    pub tail_lambdas: Vec<f64>,
    pub conditioning_trials: usize,
}

impl SuiteParams {
    pub fn new(n: usize, seed: u64) -> Self {
        SuiteParams {
            n,
            seed,
            seeds: 50,
            calib_c: None,
            lambda: None,
            budget: 1 << 24,
            green_ts: vec![2.0, 4.0, 8.0],
            lemma_lambdas: vec![1.0, 3.0, 6.0, 10.0, 15.0],
            radii: vec![1.0, 2.0, 3.0],
            mus: vec![1.0, 2.0, 4.0],
            tail_lambdas: crate::coupling::CALIBRATION_LAMBDAS.to_vec(),
            conditioning_trials: 100,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum AuditStatus {
    Passed,
    Failed,
    /// Not applicable, or refused for size when `budget` is set.
    Skipped { reason: String, budget: bool },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuditOutcome {
    pub id: String,
    #[serde(flatten)]
    pub status: AuditStatus,
    pub records: Vec<AuditRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteResult {
    pub audits: Vec<AuditOutcome>,
    pub pass: bool,
    pub budget_skips: usize,
}

fn skip(reason: impl Into<String>) -> Result<AuditReport, ExperimentError> {
    Err(ExperimentError::Usage(format!("skip: {}", reason.into())))
}

fn check_size(what: &str, size: usize, budget: usize) -> Result<(), ExperimentError> {
    if size > budget {
        Err(ExperimentError::Budget(format!("{what}: {size} > {budget}")))
    } else {
        Ok(())
    }
}

struct SuiteCtx<'a> {
    g: &'a Graph,
    p: &'a SuiteParams,
    profile: ProfileTable,
}

impl SuiteCtx<'_> {
    fn tv_monotone(&self) -> Result<AuditReport, ExperimentError> {
        let tv = self.profile.tv_column();
        let (worst_m, worst) = tv
            .windows(2)
            .enumerate()
            .map(|(m, w)| (m, w[1] - w[0]))
            .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
        let mut r = AuditReport::default();
        r.push(AuditRecord::check(
            "tv_monotone",
            "TV_{m+1} <= TV_m",
            json!({ "n": self.p.n, "worst_m": worst_m }),
            worst.max(0.0),
            0.0,
            1e-12,
        ));
        Ok(r)
    }

    fn walk_bounds(&self) -> Result<AuditReport, ExperimentError> {
        let two_m = (2.0 * self.g.max_degree() as f64).ln();
        let mut r = AuditReport::default();
        let (mut d_excess, mut h_excess) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for row in &self.profile.rows {
            d_excess = d_excess.max(row.dstar - row.m as f64);
            h_excess = h_excess.max(row.hstar - row.m as f64 * two_m);
        }
        r.push(AuditRecord::check(
            "dstar_trivial",
            "D*_m <= m",
            json!({ "n": self.p.n }),
            d_excess,
            0.0,
            1e-12,
        ));
        r.push(AuditRecord::check(
            "hstar_trivial",
            "H*_m <= m log(2M)",
            json!({ "n": self.p.n }),
            h_excess,
            0.0,
            1e-12,
        ));
        r.push(AuditRecord::check(
            "tv_zero",
            "TV_0 = 1",
            json!({}),
            (self.profile.at(0).tv - 1.0).abs(),
            0.0,
            0.0,
        ));
        Ok(r)
    }

    fn reversibility(&self) -> Result<AuditReport, ExperimentError> {
        let v = self.g.vertex_count();
        let mut rng = stream_rng(self.p.seed, 1);
        let sources: Vec<Vertex> = (0..v.min(16)).map(|_| rng.random_range(0..v)).collect();
        let mut worst = 0.0f64;
        for &x in &sources {
            let y = rng.random_range(0..v);
            let m = rng.random_range(0..=self.p.n);
            let px = distribution(self.g, x, m).pop().expect("row").mass;
            let py = distribution(self.g, y, m).pop().expect("row").mass;
            let a = self.g.degree(x) as f64 * px[y];
            let b = self.g.degree(y) as f64 * py[x];
            worst = worst.max((a - b).abs());
        }
        let mut r = AuditReport::default();
        r.push(AuditRecord::check(
            "reversibility",
            "deg(x) P^m(x,y) = deg(y) P^m(y,x)",
            json!({ "pairs": sources.len() }),
            worst,
            0.0,
            1e-10,
        ));
        Ok(r)
    }

    fn curvature(&self) -> Result<CurvatureReport, ExperimentError> {
        Ok(curvature_report(self.g, self.p.budget)?)
    }

    fn ms_tv_bound(&self) -> Result<AuditReport, ExperimentError> {
        match audit_ms_tv_bound(self.g, &self.curvature()?, &self.profile.tv_column()) {
            TvBoundAudit::Skipped { reason } => skip(reason),
            TvBoundAudit::Checked { report } => Ok(report),
        }
    }

    fn curvature_isoperimetry(&self) -> Result<AuditReport, ExperimentError> {
        let curv = self.curvature()?;
        if !curv.nonnegative() {
            return skip("curvature is not nonnegative");
        }
        let mut points = vec![PhiPoint {
            volume: self.g.total_volume(),
            ratio: 0.0,
        }];
        if self.g.vertex_count() <= EXHAUSTIVE_VERTEX_LIMIT {
            let iso = iso_profile_exhaustive(self.g, self.g.total_volume())?;
            points.extend(iso.breakpoints().into_iter().map(|(v, r)| PhiPoint {
                volume: v,
                ratio: *r.numer() as f64 / *r.denom() as f64,
            }));
        }
        let a = audit_curvature_isoperimetry(self.g, &points);
        let mut r = AuditReport::default();
        r.push(AuditRecord::witness(
            "curvature_isoperimetry",
            "smallest C with Phi(v) <= C sqrt(M log M / log v) at every point",
            json!({ "points": a.realized.len(), "skipped": a.skipped.len() }),
            a.realized_constant,
            0.0,
            a.realized_constant,
        ));
        Ok(r)
    }

    fn green_sizes(&self) -> Result<(), ExperimentError> {
        let v = self.g.vertex_count();
        check_size("green kernel entries", v * v, self.p.budget)
    }

    fn green_supermultiplicativity(&self) -> Result<AuditReport, ExperimentError> {
        self.green_sizes()?;
        let v = self.g.vertex_count();
        check_size("triples", v * v * v, self.p.budget)?;
        let mut r = AuditReport::default();
        for &t in &self.p.green_ts {
            let k = green_kernel(self.g, t)?;
            let (a, b, c, excess) = supermultiplicativity_excess(&k);
            r.push(AuditRecord::check(
                "green_supermultiplicativity",
                "G_t(u,w) G_t(w,v) <= G_t(u,v)",
                json!({ "t": t, "worst": [a, b, c] }),
                excess.max(0.0),
                0.0,
                1e-10,
            ));
        }
        Ok(r)
    }

    fn info_green(&self) -> Result<AuditReport, ExperimentError> {
        self.green_sizes()?;
        let mut r = AuditReport::default();
        for &t in &self.p.green_ts {
            let k = green_kernel(self.g, t)?;
            for x in 0..self.g.vertex_count() {
                for (m, row) in distribution(self.g, x, self.p.n).iter().enumerate() {
                    r.extend(audit_info_green_row(&k, x, m, &row.mass));
                }
            }
        }
        Ok(r)
    }

    fn info_vs_green_tail(&self) -> Result<AuditReport, ExperimentError> {
        self.green_sizes()?;
        let n = self.p.n;
        if n == 0 {
            return skip("horizon 0");
        }
        let k = green_kernel(self.g, n as f64)?;
        let mut r = AuditReport::default();
        for x in 0..self.g.vertex_count() {
            for (m, row) in distribution(self.g, x, n).iter().enumerate() {
                for &mu in &self.p.mus {
                    r.push(tail_info_record(&k, x, m, n, mu, &row.mass));
                }
            }
        }
        Ok(r)
    }

    fn metrics(&self) -> Result<Vec<MetricTable>, ExperimentError> {
        self.green_sizes()?;
        Ok(vec![
            MetricTable::graph_distance(self.g),
            MetricTable::green(&green_kernel(self.g, 4.0)?, false)?,
        ])
    }

    fn lemma_tail(&self) -> Result<AuditReport, ExperimentError> {
        if self.p.n == 0 {
            return skip("horizon 0");
        }
        let mut r = AuditReport::default();
        for metric in self.metrics()? {
            r.extend(audit_lemma_tail(self.g, &metric, self.p.n, &self.p.lemma_lambdas, self.p.budget)?);
        }
        Ok(r)
    }

    fn triangle_lemma(&self) -> Result<AuditReport, ExperimentError> {
        let metric = MetricTable::graph_distance(self.g);
        Ok(audit_triangle_lemma(self.g, &metric, self.p.n, &self.p.radii, self.p.budget)?)
    }

    fn expectation_median(&self) -> Result<AuditReport, ExperimentError> {
        let mut r = AuditReport::default();
        for metric in self.metrics()? {
            r.extend(audit_expectation_median(self.g, &metric, self.p.n, self.p.budget)?);
        }
        Ok(r)
    }

    fn upper_tail(&self) -> Result<AuditReport, ExperimentError> {
        Ok(audit_upper_tail(self.g, &self.profile, 0, &self.p.tail_lambdas)?.report)
    }

    fn tv_conditioning(&self) -> Result<AuditReport, ExperimentError> {
        let v = self.g.vertex_count();
        if v > crate::walk::EXACT_VERTEX_LIMIT {
            return Err(ExperimentError::Budget(format!("exact rows on {v} vertices")));
        }
        let mut rng = stream_rng(self.p.seed, 2);
        let mut r = AuditReport::default();
        let mut trials = 0;
        while trials < self.p.conditioning_trials {
            let (x, y) = (rng.random_range(0..v), rng.random_range(0..v));
            let m = rng.random_range(0..=self.p.n.min(12));
            let p = exact_distribution(self.g, x, m)?.pop().expect("row");
            let q = exact_distribution(self.g, y, m)?.pop().expect("row");
            let a: Vec<bool> = (0..v).map(|_| rng.random_bool(0.6)).collect();
            let b: Vec<bool> = (0..v).map(|_| rng.random_bool(0.6)).collect();
            match tv_conditioning_audit(&p, &q, &a, &b) {
                Ok(rec) => {
                    r.push(rec);
                    trials += 1;
                }
                Err(CouplingError::ZeroConditioning) => continue,
                Err(e) => return Err(e.into()),
            }
        }
        Ok(r)
    }

    fn lambda(&self) -> Result<f64, ExperimentError> {
        if let Some(l) = self.p.lambda {
            return Ok(l);
        }
        let c = match self.p.calib_c {
            Some(c) => c,
            None => default_calibration(self.g, &self.profile)?,
        };
        Ok(choose_lambda(self.g, &self.profile, c)?)
    }

    fn coupling_size(&self) -> Result<(), ExperimentError> {
        let v = self.g.vertex_count();
        check_size("dense rows", v * v, self.p.budget)
    }

    fn tvtilde(&self) -> Result<AuditReport, ExperimentError> {
        self.coupling_size()?;
        let params = EventParams::new(&self.profile, self.lambda()?)?;
        let laws = good_event_laws(self.g, params)?;
        let mut r = AuditReport::default();
        r.push(audit_tvtilde(self.g, &laws, self.profile.at(self.p.n).tv));
        Ok(r)
    }

    fn mtp_ensemble(&self) -> Result<AuditReport, ExperimentError> {
        self.coupling_size()?;
        let params = EventParams::new(&self.profile, self.lambda()?)?;
        let laws = good_event_laws(self.g, params)?;
        let refs: Vec<&SparseLaw> = laws.iter().map(|l| &l.law).collect();
        let all = VertexSet::all(self.g);
        let values = (0..self.p.seeds)
            .map(|i| {
                let s = simultaneous_coupling(&refs, derive_seed(self.p.seed, i as u64))?;
                mtp_average(self.g, &s, &all)
            })
            .collect::<Result<Vec<f64>, _>>()?;
        let (mean, se) = mean_and_stderr(&values);
        let tilde = crate::coupling::tvtilde_exact(self.g, &laws);
        let mut r = AuditReport::default();
        r.push(AuditRecord::check(
            "mtp_ensemble",
            "mean MTP average <= TVtilde + |boundary F| / deg F + 3 SE",
            json!({ "seeds": self.p.seeds, "lambda": params.lambda, "stderr": se }),
            mean,
            tilde + 3.0 * se,
            1e-12,
        ));
        Ok(r)
    }

    fn certificate(&self) -> Result<AuditReport, ExperimentError> {
        self.coupling_size()?;
        let calib_c = match self.p.calib_c {
            Some(c) => c,
            None => default_calibration(self.g, &self.profile)?,
        };
        let cert = partition_certificate(
            self.g,
            &CertificateRequest {
                profile: &self.profile,
                calib_c,
                lambda: self.p.lambda,
                seeds: self.p.seeds,
                root_seed: self.p.seed,
                f: None,
            },
        )?;
        Ok(certificate_report(&cert))
    }

    fn run(&self, id: &str) -> Result<AuditReport, ExperimentError> {
        match id {
            "tv_monotone" => self.tv_monotone(),
            "walk_bounds" => self.walk_bounds(),
            "reversibility" => self.reversibility(),
            "ms_tv_bound" => self.ms_tv_bound(),
            "curvature_isoperimetry" => self.curvature_isoperimetry(),
            "green_supermultiplicativity" => self.green_supermultiplicativity(),
            "info_green" => self.info_green(),
            "info_vs_green_tail" => self.info_vs_green_tail(),
            "lemma_tail" => self.lemma_tail(),
            "triangle_lemma" => self.triangle_lemma(),
            "expectation_median" => self.expectation_median(),
            "upper_tail" => self.upper_tail(),
            "tv_conditioning" => self.tv_conditioning(),
            "tvtilde" => self.tvtilde(),
            "mtp_ensemble" => self.mtp_ensemble(),
            "certificate" => self.certificate(),
            other => Err(ExperimentError::Usage(format!("unknown audit '{other}'"))),
        }
    }
}

/// Checks audit ids before anything runs.
pub fn validate_audit_ids(ids: &[String]) -> Result<(), ExperimentError> {
    for id in ids {
        if !AUDIT_IDS.contains(&id.as_str()) {
            return Err(ExperimentError::Usage(format!(
                "unknown audit '{id}'; known: {}",
                AUDIT_IDS.join(", ")
            )));
        }
    }
    Ok(())
}

/// Runs the selected audits in the fixed order of [`AUDIT_IDS`].
pub fn run_audit(
    g: &Graph,
    scope: &PairScope,
    params: &SuiteParams,
    selected: &[String],
) -> Result<SuiteResult, ExperimentError> {
    validate_audit_ids(selected)?;
    let mut audits = Vec::new();
    if !selected.is_empty() {
        let ctx = SuiteCtx {
            g,
            p: params,
            profile: ProfileTable::compute(g, params.n, scope)?,
        };
        for id in AUDIT_IDS.iter().filter(|id| selected.iter().any(|s| s == *id)) {
            let outcome = match ctx.run(id) {
                Ok(report) => AuditOutcome {
                    id: id.to_string(),
                    status: if report.passed() {
                        AuditStatus::Passed
                    } else {
                        AuditStatus::Failed
                    },
                    records: report.records,
                },
                Err(ExperimentError::Usage(msg)) if msg.starts_with("skip: ") => AuditOutcome {
                    id: id.to_string(),
                    status: AuditStatus::Skipped {
                        reason: msg["skip: ".len()..].to_string(),
                        budget: false,
                    },
                    records: Vec::new(),
                },
                Err(e) if e.is_budget() => AuditOutcome {
                    id: id.to_string(),
                    status: AuditStatus::Skipped {
                        reason: e.to_string(),
                        budget: true,
                    },
                    records: Vec::new(),
                },
                Err(e) => return Err(e),
            };
            audits.push(outcome);
        }
    }
    let pass = !audits.iter().any(|a| a.status == AuditStatus::Failed);
    let budget_skips = audits
        .iter()
        .filter(|a| matches!(a.status, AuditStatus::Skipped { budget: true, .. }))
        .count();
    Ok(SuiteResult {
        audits,
        pass,
        budget_skips,
    })
}

/// Every audit id, as owned strings.
pub fn default_audits() -> Vec<String> {
    AUDIT_IDS.iter().map(|s| s.to_string()).collect()
}
