//! Upper tails of walk displacement under an arbitrary metric.
//!
//! The exact engine is a dynamic program over `(vertex, running max)`:
//! running-max values are drawn from the finite set `{d(x, v) : v ∈ V}`, so
//! there is no discretization error. A Monte Carlo estimator covers graphs
//! where the state space is too large.

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::graph::{all_pairs_distances, Graph, GraphError, Vertex};
use crate::green::{information_of, GreenKernel};
use crate::report::{AuditRecord, AuditReport};
use crate::stats::{ksum, stream_rng, wilson_interval, Z_99};
use crate::walk::{distribution, lazy_move, ProfileTable};

pub const DEFAULT_STATE_BUDGET: usize = 1 << 24;

/// Samples drawn from one random stream in [`mc_tail`].
const MC_CHUNK: usize = 4096;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TailError {
    #[error("{states} DP states exceed the budget of {budget}; use Monte Carlo")]
    StateBudget { states: usize, budget: usize },
    #[error("metric row for source {0} has a non-finite or negative entry")]
    BadMetric(Vertex),
    #[error("metric table has {rows} rows for a graph on {vertices} vertices")]
    Shape { rows: usize, vertices: usize },
    #[error("Monte Carlo needs at least 1000 samples, got {0}")]
    TooFewSamples(usize),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MetricProvenance {
    GraphDistance,
    GreenMetric { t: f64, symmetric: bool },
    Custom,
}

/// Source-indexed rows `d(x, ·)`.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricTable {
    pub provenance: MetricProvenance,
    rows: Vec<Vec<f64>>,
}

impl MetricTable {
    pub fn graph_distance(g: &Graph) -> Self {
        MetricTable {
            provenance: MetricProvenance::GraphDistance,
            rows: all_pairs_distances(g)
                .into_iter()
                .map(|r| r.into_iter().map(f64::from).collect())
                .collect(),
        }
    }

    /// `−log G_t`, or its symmetrization.
    pub fn green(kernel: &GreenKernel, symmetric: bool) -> Result<Self, TailError> {
        let rows: Vec<Vec<f64>> = (0..kernel.vertex_count())
            .map(|x| kernel.metric_row(x, symmetric))
            .collect();
        let table = MetricTable {
            provenance: MetricProvenance::GreenMetric {
                t: kernel.t,
                symmetric,
            },
            rows,
        };
        table.validate()?;
        Ok(table)
    }

    pub fn custom(rows: Vec<Vec<f64>>) -> Result<Self, TailError> {
        let table = MetricTable {
            provenance: MetricProvenance::Custom,
            rows,
        };
        table.validate()?;
        Ok(table)
    }

    fn validate(&self) -> Result<(), TailError> {
        for (x, row) in self.rows.iter().enumerate() {
            if row.len() != self.rows.len() || row.iter().any(|d| !d.is_finite() || *d < 0.0) {
                return Err(TailError::BadMetric(x));
            }
        }
        Ok(())
    }

    fn check(&self, g: &Graph) -> Result<(), TailError> {
        if self.rows.len() != g.vertex_count() {
            return Err(TailError::Shape {
                rows: self.rows.len(),
                vertices: g.vertex_count(),
            });
        }
        Ok(())
    }

    pub fn row(&self, x: Vertex) -> &[f64] {
        &self.rows[x]
    }

    pub fn get(&self, x: Vertex, y: Vertex) -> f64 {
        self.rows[x][y]
    }
}

/// `value >= threshold`, widened by a relative `1e-12` so that rounding in
/// real-valued metrics can only enlarge the counted event.
#[inline]
fn reaches(value: f64, threshold: f64) -> bool {
    value >= threshold - 1e-12 * threshold.abs().max(1.0)
}

/// Exact law of `(X_m, max_{s<=m} d(x, X_s))` for `m = 0..=n`.
#[derive(Clone, Debug, PartialEq)]
pub struct MaxDispDistribution {
    pub source: Vertex,
    pub horizon: usize,
    /// Sorted distinct values of `d(x, ·)`.
    pub levels: Vec<f64>,
    /// `P(X_m = v)`, per `m`.
    vertex_marginals: Vec<Vec<f64>>,
    /// `P(max_{s<=m} d = levels[l])`, per `m`.
    level_marginals: Vec<Vec<f64>>,
    /// Joint law at `m = n`, indexed `v * levels.len() + l`.
    pub joint: Vec<f64>,
}

impl MaxDispDistribution {
    pub fn vertex_marginal(&self, m: usize) -> &[f64] {
        &self.vertex_marginals[m]
    }

    pub fn level_marginal(&self, m: usize) -> &[f64] {
        &self.level_marginals[m]
    }

    /// `P(max_{s<=m} d(x, X_s) >= r)`, counting levels within rounding of `r`.
    pub fn tail(&self, m: usize, r: f64) -> f64 {
        ksum(
            self.levels
                .iter()
                .zip(&self.level_marginals[m])
                .filter(|(&lev, _)| reaches(lev, r))
                .map(|(_, &p)| p),
        )
        .min(1.0)
    }

    /// `E[max_{s<=m} d(x, X_s)]`.
    pub fn expected_max(&self, m: usize) -> f64 {
        ksum(self.levels.iter().zip(&self.level_marginals[m]).map(|(&l, &p)| l * p))
    }
}

pub fn max_disp_dp(
    g: &Graph,
    metric: &MetricTable,
    x: Vertex,
    n: usize,
    state_budget: usize,
) -> Result<MaxDispDistribution, TailError> {
    g.check_vertex(x)?;
    metric.check(g)?;
    let v = g.vertex_count();
    let row = metric.row(x);
    let mut levels: Vec<f64> = row.to_vec();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let nl = levels.len();
    if v.saturating_mul(nl) > state_budget {
        return Err(TailError::StateBudget {
            states: v * nl,
            budget: state_budget,
        });
    }
    let level_of: Vec<usize> = row
        .iter()
        .map(|d| levels.binary_search_by(|l| l.total_cmp(d)).expect("level present"))
        .collect();

    let mut cur = vec![0.0; v * nl];
    cur[x * nl + level_of[x]] = 1.0;
    let mut next = vec![0.0; v * nl];
    let mut vertex_marginals = Vec::with_capacity(n + 1);
    let mut level_marginals = Vec::with_capacity(n + 1);
    let marginals = |joint: &[f64]| {
        let mut vm = vec![0.0; v];
        let mut lm = vec![0.0; nl];
        for (i, &p) in joint.iter().enumerate() {
            vm[i / nl] += p;
            lm[i % nl] += p;
        }
        (vm, lm)
    };
    for m in 0..=n {
        let (vm, lm) = marginals(&cur);
        vertex_marginals.push(vm);
        level_marginals.push(lm);
        if m == n {
            break;
        }
        next.iter_mut().for_each(|p| *p = 0.0);
        for u in 0..v {
            let nbrs = g.neighbors(u);
            let move_share = 0.5 / nbrs.len() as f64;
            for l in 0..nl {
                let p = cur[u * nl + l];
                if p == 0.0 {
                    continue;
                }
                next[u * nl + l] += 0.5 * p;
                for &w in nbrs {
                    next[w * nl + l.max(level_of[w])] += move_share * p;
                }
            }
        }
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(MaxDispDistribution {
        source: x,
        horizon: n,
        levels,
        vertex_marginals,
        level_marginals,
        joint: cur,
    })
}

/// DP from every source, in parallel.
pub fn max_disp_all(
    g: &Graph,
    metric: &MetricTable,
    n: usize,
    state_budget: usize,
) -> Result<Vec<MaxDispDistribution>, TailError> {
    (0..g.vertex_count())
        .into_par_iter()
        .map(|x| max_disp_dp(g, metric, x, n, state_budget))
        .collect()
}

/// Degree bound used in the explicit tail constant: the statement assumes
/// degrees bounded by some `M >= 2`.
pub fn degree_bound(g: &Graph) -> usize {
    g.max_degree().max(2)
}

/// `exp(−⌊λ / (M + e)⌋)`.
pub fn lemma_tail_bound(m_bound: usize, lambda: f64) -> f64 {
    (-(lambda / (m_bound as f64 + std::f64::consts::E)).floor()).exp()
}

fn metric_label(metric: &MetricTable) -> serde_json::Value {
    serde_json::to_value(&metric.provenance).expect("serializable")
}

/// For each `λ`: `max_x P_x(max_{m<=n} d(X_0,X_m) >= λ S) <= exp(−⌊λ/(M+e)⌋)`
/// with `S = max_y E_y[max_{m<=n} d(X_0,X_m)]`, requiring `n >= 1`.
pub fn audit_lemma_tail(
    g: &Graph,
    metric: &MetricTable,
    n: usize,
    lambdas: &[f64],
    state_budget: usize,
) -> Result<AuditReport, TailError> {
    if n == 0 || lambdas.iter().any(|&l| !(l >= 1.0)) {
        return Err(GraphError::InvalidParameter("need n >= 1 and every lambda >= 1".into()).into());
    }
    let dps = max_disp_all(g, metric, n, state_budget)?;
    Ok(lemma_tail_from_dp(g, metric, n, lambdas, &dps))
}

fn lemma_tail_from_dp(
    g: &Graph,
    metric: &MetricTable,
    n: usize,
    lambdas: &[f64],
    dps: &[MaxDispDistribution],
) -> AuditReport {
    let s = dps.iter().map(|d| d.expected_max(n)).fold(0.0, f64::max);
    let m_bound = degree_bound(g);
    let mut report = AuditReport::default();
    for &lambda in lambdas {
        let (worst_x, worst) = dps
            .iter()
            .map(|d| (d.source, d.tail(n, lambda * s)))
            .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
        report.push(AuditRecord::check(
            "lemma_tail",
            "P_x(max_{m<=n} d(X_0,X_m) >= lambda S) <= exp(-floor(lambda / (M + e)))",
            json!({
                "n": n,
                "lambda": lambda,
                "S": s,
                "M": m_bound,
                "worst_x": worst_x,
                "metric": metric_label(metric),
            }),
            worst,
            lemma_tail_bound(m_bound, lambda),
            0.0,
        ));
    }
    report
}

/// For each `r`:
/// `½ max_x P_x(max_{m<=n} d >= 2r) <= max_x max_{m<=n} P_x(d(X_0,X_m) >= r)`.
pub fn audit_triangle_lemma(
    g: &Graph,
    metric: &MetricTable,
    n: usize,
    radii: &[f64],
    state_budget: usize,
) -> Result<AuditReport, TailError> {
    let dps = max_disp_all(g, metric, n, state_budget)?;
    let mut report = AuditReport::default();
    for &r in radii {
        let rhs = dps
            .iter()
            .map(|d| 0.5 * d.tail(n, 2.0 * r))
            .fold(0.0, f64::max);
        // the vertex marginals of the DP are the walk rows
        let lhs = dps
            .iter()
            .map(|d| {
                let row = metric.row(d.source);
                (0..=n)
                    .map(|m| {
                        ksum(
                            d.vertex_marginal(m)
                                .iter()
                                .zip(row)
                                .filter(|(_, &dist)| dist >= r)
                                .map(|(&p, _)| p),
                        )
                    })
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        report.push(AuditRecord::check(
            "triangle_lemma",
            "1/2 sup_x P_x(max_{m<=n} d(X_0,X_m) >= 2r) <= sup_x max_{m<=n} P_x(d(X_0,X_m) >= r)",
            json!({ "n": n, "r": r, "metric": metric_label(metric) }),
            rhs,
            lhs,
            1e-12,
        ));
    }
    Ok(report)
}

/// Ratio `ρ = sup_x max_{m<=n} E_x d(X_0,X_m) / sup_y E_y max_{m<=n} d(X_0,X_m)`,
/// asserted `<= 1`, plus the witness `ρ M log M` for the non-explicit constant.
pub fn audit_expectation_median(
    g: &Graph,
    metric: &MetricTable,
    n: usize,
    state_budget: usize,
) -> Result<AuditReport, TailError> {
    let dps = max_disp_all(g, metric, n, state_budget)?;
    let numer = dps
        .iter()
        .map(|d| {
            let row = metric.row(d.source);
            (0..=n)
                .map(|m| ksum(d.vertex_marginal(m).iter().zip(row).map(|(&p, &dist)| p * dist)))
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);
    let denom = dps.iter().map(|d| d.expected_max(n)).fold(0.0, f64::max);
    let rho = if denom == 0.0 { 1.0 } else { numer / denom };
    let m = degree_bound(g) as f64;
    let params = json!({ "n": n, "M": degree_bound(g), "metric": metric_label(metric) });
    let mut report = AuditReport::default();
    report.push(AuditRecord::check(
        "expectation_median_ratio",
        "sup_x max_{m<=n} E_x d(X_0,X_m) <= sup_y E_y max_{m<=n} d(X_0,X_m)",
        params.clone(),
        numer,
        denom,
        1e-12,
    ));
    report.push(AuditRecord::witness(
        "expectation_median_constant",
        "rho * M log M, a lower witness for the universal constant",
        params,
        rho,
        1.0,
        rho * m * m.ln(),
    ));
    Ok(report)
}

/// Exact endpoint tails from one source and a fitted decay rate.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UpperTailFit {
    pub lambdas: Vec<f64>,
    /// `P_x(d_G(X_0,X_n) >= λ D*_n)` per λ.
    pub displacement_tail: Vec<f64>,
    /// `P_x(−log P^n(X_0,X_n) >= λ (H*_n + log n))` per λ.
    pub information_tail: Vec<f64>,
    /// `min −log(tail)/λ` over positive tails; `+∞` when every tail vanishes.
    pub c_hat: f64,
    pub report: AuditReport,
}

/// Endpoint tails for the walk from `x` at the horizon of `profile`.
///
/// The decay constant is non-explicit, so `ĉ` is only reported. Hard checks:
/// both tails are non-increasing along the sorted λ grid, and both vanish at
/// a λ beyond the largest attainable value.
pub fn audit_upper_tail(
    g: &Graph,
    profile: &ProfileTable,
    x: Vertex,
    lambdas: &[f64],
) -> Result<UpperTailFit, TailError> {
    g.check_vertex(x)?;
    let n = profile.horizon();
    let mut lambdas = lambdas.to_vec();
    lambdas.sort_by(f64::total_cmp);
    let dstar = profile.at(n).dstar;
    let hstar = profile.at(n).hstar;
    let info_scale = hstar + (n as f64).ln().max(0.0);
    let row = distribution(g, x, n).pop().expect("row n").mass;
    let dist = crate::graph::bfs_distances(g, x);

    let disp_tail = |lambda: f64| {
        ksum(
            row.iter()
                .zip(&dist)
                .filter(|(&p, &d)| p > 0.0 && reaches(d as f64, lambda * dstar))
                .map(|(&p, _)| p),
        )
        .min(1.0)
    };
    let info_tail = |lambda: f64| {
        ksum(
            row.iter()
                .filter(|&&p| p > 0.0 && reaches(information_of(p), lambda * info_scale))
                .copied(),
        )
        .min(1.0)
    };
    let displacement_tail: Vec<f64> = lambdas.iter().map(|&l| disp_tail(l)).collect();
    let information_tail: Vec<f64> = lambdas.iter().map(|&l| info_tail(l)).collect();

    let mut c_hat = f64::INFINITY;
    for (i, &l) in lambdas.iter().enumerate() {
        for tail in [displacement_tail[i], information_tail[i]] {
            if tail > 0.0 {
                c_hat = c_hat.min(-tail.ln() / l);
            }
        }
    }

    let mut report = AuditReport::default();
    let params = json!({ "x": x, "n": n, "lambdas": lambdas, "dstar": dstar, "hstar": hstar });
    let worst_increase = |tails: &[f64]| {
        tails
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0f64, f64::max)
    };
    report.push(AuditRecord::check(
        "upper_tail_monotone_displacement",
        "P_x(d(X_0,X_n) >= lambda D*_n) is non-increasing in lambda",
        params.clone(),
        worst_increase(&displacement_tail),
        0.0,
        1e-12,
    ));
    report.push(AuditRecord::check(
        "upper_tail_monotone_information",
        "P_x(-log P^n(X_0,X_n) >= lambda (H*_n + log n)) is non-increasing in lambda",
        params.clone(),
        worst_increase(&information_tail),
        0.0,
        1e-12,
    ));
    // the walk moves at most n steps, and information is bounded on the support
    let max_info = row
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| information_of(p))
        .fold(0.0, f64::max);
    let lambda_far_disp = if dstar > 0.0 { (n as f64 + 1.0) / dstar } else { 1.0 };
    let lambda_far_info = if info_scale > 0.0 {
        (max_info + 1.0) / info_scale
    } else {
        f64::INFINITY
    };
    report.push(AuditRecord::check(
        "upper_tail_vanishes_displacement",
        "P_x(d(X_0,X_n) >= lambda D*_n) = 0 once lambda D*_n > n",
        json!({ "x": x, "n": n, "lambda": lambda_far_disp }),
        if dstar > 0.0 { disp_tail(lambda_far_disp) } else { 0.0 },
        0.0,
        0.0,
    ));
    if lambda_far_info.is_finite() {
        report.push(AuditRecord::check(
            "upper_tail_vanishes_information",
            "P_x(-log P^n(X_0,X_n) >= lambda (H*_n + log n)) = 0 beyond the largest information value",
            json!({ "x": x, "n": n, "lambda": lambda_far_info }),
            info_tail(lambda_far_info),
            0.0,
            0.0,
        ));
    }
    report.push(AuditRecord::witness(
        "upper_tail_rate",
        "c_hat = min over grid of -log(tail) / lambda",
        params,
        c_hat,
        0.0,
        c_hat,
    ));
    Ok(UpperTailFit {
        lambdas,
        displacement_tail,
        information_tail,
        c_hat,
        report,
    })
}

/// Monte Carlo tail estimate with a 99% Wilson interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct McEstimate {
    pub successes: u64,
    pub samples: u64,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl McEstimate {
    pub fn covers(&self, p: f64) -> bool {
        self.ci_low <= p && p <= self.ci_high
    }
}

/// Estimates `P_x(max_{m<=n} d(X_0, X_m) >= threshold)`.
///
/// Samples are split into fixed chunks with one random stream each, so the
/// result does not depend on thread scheduling.
pub fn mc_tail(
    g: &Graph,
    metric: &MetricTable,
    x: Vertex,
    n: usize,
    threshold: f64,
    samples: usize,
    seed: u64,
) -> Result<McEstimate, TailError> {
    g.check_vertex(x)?;
    metric.check(g)?;
    if samples < 1000 {
        return Err(TailError::TooFewSamples(samples));
    }
    let row = metric.row(x);
    let chunks = samples.div_ceil(MC_CHUNK);
    let successes: u64 = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream_rng(seed, c as u64);
            let count = MC_CHUNK.min(samples - c * MC_CHUNK);
            let mut hits = 0u64;
            for _ in 0..count {
                let mut cur = x;
                let mut hit = reaches(row[cur], threshold);
                for _ in 0..n {
                    if hit {
                        break;
                    }
                    cur = lazy_move(g, cur, &mut rng);
                    hit = reaches(row[cur], threshold);
                }
                hits += hit as u64;
            }
            hits
        })
        .sum();
    let (ci_low, ci_high) = wilson_interval(successes, samples as u64, Z_99);
    Ok(McEstimate {
        successes,
        samples: samples as u64,
        estimate: successes as f64 / samples as f64,
        ci_low,
        ci_high,
    })
}
