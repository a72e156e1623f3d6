//! Exact Wasserstein-1 distances between finitely supported measures on a
//! graph, and Ollivier-Ricci curvature of edges for the lazy walk.
//!
//! Everything here is exact rational arithmetic: one-step lazy rows have
//! denominators `2 deg`, distances are integers, and the transport solver
//! pivots exactly, so `Ric >= 0` is decided without tolerances.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::graph::{bfs_distances, Graph, GraphError, Vertex};
use crate::report::{AuditRecord, AuditReport};
use crate::transport::{solve_transport, verify_transport, TransportError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CurvatureError {
    #[error("measure masses must be positive")]
    NonPositiveMass,
    #[error("vertex {0} appears twice in a support")]
    DuplicateVertex(Vertex),
    #[error("measure masses sum to {0}, not 1")]
    NotNormalized(String),
    #[error("{{{0}, {1}}} is not an edge")]
    NotAnEdge(Vertex, Vertex),
    #[error("{edges} edges exceed the budget of {budget}")]
    Budget { edges: usize, budget: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Transport(#[from] TransportError),
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Probability measure with finite support and exact rational masses.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteMeasure {
    support: Vec<(Vertex, BigRational)>,
}

impl FiniteMeasure {
    pub fn new(mut support: Vec<(Vertex, BigRational)>) -> Result<Self, CurvatureError> {
        support.sort_by_key(|(v, _)| *v);
        for w in support.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(CurvatureError::DuplicateVertex(w[0].0));
            }
        }
        if support.iter().any(|(_, m)| !m.is_positive()) {
            return Err(CurvatureError::NonPositiveMass);
        }
        let total: BigRational = support.iter().map(|(_, m)| m).sum();
        if !total.is_one() {
            return Err(CurvatureError::NotNormalized(total.to_string()));
        }
        Ok(FiniteMeasure { support })
    }

    pub fn dirac(x: Vertex) -> Self {
        FiniteMeasure {
            support: vec![(x, BigRational::one())],
        }
    }

    /// One lazy step from `x`: `1/2` at `x`, `1/(2 deg x)` on each neighbor.
    pub fn lazy_step(g: &Graph, x: Vertex) -> Self {
        let per = ratio(1, 2 * g.degree(x) as i64);
        let mut support = vec![(x, ratio(1, 2))];
        support.extend(g.neighbors(x).iter().map(|&y| (y, per.clone())));
        support.sort_by_key(|(v, _)| *v);
        FiniteMeasure { support }
    }

    pub fn support(&self) -> &[(Vertex, BigRational)] {
        &self.support
    }

    pub fn mass(&self, v: Vertex) -> BigRational {
        self.support
            .binary_search_by_key(&v, |(w, _)| *w)
            .map_or_else(|_| BigRational::zero(), |i| self.support[i].1.clone())
    }
}

/// Optimal coupling together with its dual certificate.
#[derive(Clone, Debug, PartialEq)]
pub struct TransportPlan {
    /// `(u, v, mass)` with `u` from the first measure and `v` from the second.
    pub entries: Vec<(Vertex, Vertex, BigRational)>,
    pub cost: BigRational,
    /// Integer potentials `φ(u) + ψ(v) <= d(u, v)`, tight on the plan.
    pub source_potential: Vec<(Vertex, i64)>,
    pub target_potential: Vec<(Vertex, i64)>,
}

fn cost_matrix(g: &Graph, mu: &FiniteMeasure, nu: &FiniteMeasure) -> Vec<Vec<i64>> {
    mu.support
        .iter()
        .map(|&(u, _)| {
            let dist = bfs_distances(g, u);
            nu.support.iter().map(|&(v, _)| dist[v] as i64).collect()
        })
        .collect()
}

impl TransportPlan {
    /// Re-checks marginals, dual feasibility, slackness and objective
    /// equality against graph distances.
    pub fn verify(
        &self,
        g: &Graph,
        mu: &FiniteMeasure,
        nu: &FiniteMeasure,
    ) -> Result<(), CurvatureError> {
        let cost = cost_matrix(g, mu, nu);
        let supply: Vec<BigRational> = mu.support.iter().map(|(_, m)| m.clone()).collect();
        let demand: Vec<BigRational> = nu.support.iter().map(|(_, m)| m.clone()).collect();
        let row = |u: Vertex| mu.support.binary_search_by_key(&u, |(w, _)| *w).ok();
        let col = |v: Vertex| nu.support.binary_search_by_key(&v, |(w, _)| *w).ok();
        let mut flow = Vec::with_capacity(self.entries.len());
        for (u, v, m) in &self.entries {
            match (row(*u), col(*v)) {
                (Some(i), Some(j)) => flow.push((i, j, m.clone())),
                _ => {
                    return Err(TransportError::Certificate(format!(
                        "plan entry ({u}, {v}) outside the supports"
                    ))
                    .into())
                }
            }
        }
        let sol = crate::transport::TransportSolution {
            flow,
            cost: self.cost.clone(),
            row_potential: self.source_potential.iter().map(|&(_, p)| p).collect(),
            col_potential: self.target_potential.iter().map(|&(_, p)| p).collect(),
            pivots: 0,
        };
        verify_transport(&supply, &demand, &cost, &sol)?;
        Ok(())
    }
}

/// `W_1(μ, ν)` with graph-distance cost, plus an optimal certified plan.
pub fn w1(
    g: &Graph,
    mu: &FiniteMeasure,
    nu: &FiniteMeasure,
) -> Result<(BigRational, TransportPlan), CurvatureError> {
    for &(v, _) in mu.support.iter().chain(&nu.support) {
        g.check_vertex(v)?;
    }
    let cost = cost_matrix(g, mu, nu);
    let supply: Vec<BigRational> = mu.support.iter().map(|(_, m)| m.clone()).collect();
    let demand: Vec<BigRational> = nu.support.iter().map(|(_, m)| m.clone()).collect();
    let sol = solve_transport(&supply, &demand, &cost)?;
    let plan = TransportPlan {
        entries: sol
            .flow
            .iter()
            .map(|(i, j, m)| (mu.support[*i].0, nu.support[*j].0, m.clone()))
            .collect(),
        cost: sol.cost.clone(),
        source_potential: mu
            .support
            .iter()
            .zip(&sol.row_potential)
            .map(|((v, _), &p)| (*v, p))
            .collect(),
        target_potential: nu
            .support
            .iter()
            .zip(&sol.col_potential)
            .map(|((v, _), &p)| (*v, p))
            .collect(),
    };
    Ok((sol.cost, plan))
}

/// `Ric(x, y) = 1 − W_1(P(x,·), P(y,·))` for the lazy walk.
pub fn ricci_edge(g: &Graph, x: Vertex, y: Vertex) -> Result<BigRational, CurvatureError> {
    g.check_vertex(x)?;
    g.check_vertex(y)?;
    if !g.has_edge(x, y) {
        return Err(CurvatureError::NotAnEdge(x, y));
    }
    let (w, _) = w1(g, &FiniteMeasure::lazy_step(g, x), &FiniteMeasure::lazy_step(g, y))?;
    Ok(BigRational::one() - w)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EdgeCurvature {
    pub u: u64,
    pub v: u64,
    pub ric_num: String,
    pub ric_den: String,
    pub ric: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurvatureSummary {
    pub min: String,
    pub mean: String,
    pub min_f64: f64,
    pub mean_f64: f64,
    pub nonneg: bool,
    pub edges: usize,
    /// Distinct curvature values with their edge counts, ascending.
    pub histogram: Vec<(String, usize)>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurvatureReport {
    pub edges: Vec<EdgeCurvature>,
    pub summary: CurvatureSummary,
    #[serde(skip)]
    pub values: Vec<BigRational>,
}

impl CurvatureReport {
    pub fn min(&self) -> &BigRational {
        self.values.iter().min().expect("graph has edges")
    }

    pub fn nonnegative(&self) -> bool {
        self.summary.nonneg
    }
}

pub const DEFAULT_EDGE_BUDGET: usize = 200_000;

/// Curvature of every edge, computed in parallel.
pub fn curvature_report(g: &Graph, edge_budget: usize) -> Result<CurvatureReport, CurvatureError> {
    let edges: Vec<(Vertex, Vertex)> = g.edges().collect();
    if edges.len() > edge_budget {
        return Err(CurvatureError::Budget {
            edges: edges.len(),
            budget: edge_budget,
        });
    }
    let values = edges
        .par_iter()
        .map(|&(u, v)| ricci_edge(g, u, v))
        .collect::<Result<Vec<_>, _>>()?;
    let min = values.iter().min().cloned().expect("graph has edges");
    let total: BigRational = values.iter().sum();
    let mean = total / BigRational::from_integer(BigInt::from(values.len()));
    let mut histogram: BTreeMap<BigRational, usize> = BTreeMap::new();
    for v in &values {
        *histogram.entry(v.clone()).or_default() += 1;
    }
    let summary = CurvatureSummary {
        min: min.to_string(),
        mean: mean.to_string(),
        min_f64: rational_to_f64(&min),
        mean_f64: rational_to_f64(&mean),
        nonneg: !min.is_negative(),
        edges: values.len(),
        histogram: histogram.into_iter().map(|(k, c)| (k.to_string(), c)).collect(),
    };
    let edges = edges
        .iter()
        .zip(&values)
        .map(|(&(u, v), r)| EdgeCurvature {
            u: g.label(u),
            v: g.label(v),
            ric_num: r.numer().to_string(),
            ric_den: r.denom().to_string(),
            ric: rational_to_f64(r),
        })
        .collect();
    Ok(CurvatureReport {
        edges,
        summary,
        values,
    })
}

/// `√(20 M / (m + 1))`.
pub fn ms_tv_bound(max_degree: usize, m: usize) -> f64 {
    (20.0 * max_degree as f64 / (m as f64 + 1.0)).sqrt()
}

/// Outcome of the TV-decay audit; skipped unless curvature is nonnegative.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum TvBoundAudit {
    Skipped { reason: String },
    Checked { report: AuditReport },
}

impl TvBoundAudit {
    pub fn passed(&self) -> Option<bool> {
        match self {
            TvBoundAudit::Skipped { .. } => None,
            TvBoundAudit::Checked { report } => Some(report.passed()),
        }
    }
}

/// Checks `TV_m <= √(20M/(m+1))` for every `m` in the given TV column.
pub fn audit_ms_tv_bound(g: &Graph, curvature: &CurvatureReport, tv: &[f64]) -> TvBoundAudit {
    if !curvature.nonnegative() {
        return TvBoundAudit::Skipped {
            reason: format!("minimum curvature {} is negative", curvature.summary.min),
        };
    }
    let m_deg = g.max_degree();
    let mut report = AuditReport::default();
    for (m, &value) in tv.iter().enumerate() {
        report.push(AuditRecord::check(
            "ms_tv_bound",
            "TV_m <= sqrt(20 M / (m + 1))",
            json!({ "m": m, "max_degree": m_deg }),
            value,
            ms_tv_bound(m_deg, m),
            1e-9,
        ));
    }
    TvBoundAudit::Checked { report }
}

/// A certified upper bound on `Φ(volume)`: some set of that volume (or less)
/// has the given ratio.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PhiPoint {
    pub volume: u64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IsoperimetryAudit {
    pub max_degree: usize,
    /// Per point: `ratio / √(M log M / log volume)`.
    pub realized: Vec<(PhiPoint, f64)>,
    /// Smallest constant `C` with every point under `C √(M log M / log volume)`.
    pub realized_constant: f64,
    /// Points where the bound shape is undefined (`volume < 2` or `M log M = 0`).
    pub skipped: Vec<PhiPoint>,
}

/// Reports the smallest `C` making `Φ(v) <= C √(M log M / log v)` hold at
/// every supplied point. The constant is not explicit, so nothing is asserted.
pub fn audit_curvature_isoperimetry(g: &Graph, points: &[PhiPoint]) -> IsoperimetryAudit {
    let m = g.max_degree() as f64;
    let mut realized = Vec::new();
    let mut skipped = Vec::new();
    let mut constant = 0.0f64;
    for &p in points {
        let shape_sq = m * m.ln() / (p.volume as f64).ln();
        if p.volume < 2 || !(shape_sq > 0.0) || !shape_sq.is_finite() {
            skipped.push(p);
            continue;
        }
        let c = p.ratio / shape_sq.sqrt();
        constant = constant.max(c);
        realized.push((p, c));
    }
    IsoperimetryAudit {
        max_degree: g.max_degree(),
        realized,
        realized_constant: constant,
        skipped,
    }
}
