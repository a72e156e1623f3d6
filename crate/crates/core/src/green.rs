//! Massive Green kernel `G_t(u, v)`: the probability that the lazy walk from
//! `u` hits `v` before an independent geometric killing time, with survival
//! `q = 1 − 1/t` per step.
//!
//! `G_t(·, v)` is the unique bounded solution of `h(v) = 1`,
//! `h(u) = q Σ_z P(u, z) h(z)` for `u ≠ v`. Two solvers are provided: dense
//! LU on `I − qP` (then `G(u,v) = g(u,v)/g(v,v)` with `g = (I − qP)^{-1}`),
//! and a per-target fixed-point iteration.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::graph::{Graph, GraphError, Vertex};
use crate::report::{AuditRecord, AuditReport};
use crate::walk::{distribution, inverse_degrees, lazy_step_into};

/// Largest graph solved by dense elimination under [`GreenSolver::Auto`].
pub const DIRECT_VERTEX_LIMIT: usize = 200;

pub const FIXED_POINT_TOLERANCE: f64 = 1e-12;

/// Dense kernels beyond this many vertices are refused.
pub const KERNEL_VERTEX_LIMIT: usize = 4096;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GreenError {
    #[error("Green parameter t must be a finite real >= 1, got {0}")]
    BadParameter(f64),
    #[error("fixed-point solve for target {target} stalled at residual {residual:e} after {iterations} iterations")]
    NoConvergence {
        target: Vertex,
        residual: f64,
        iterations: usize,
    },
    #[error("I - qP is numerically singular")]
    Singular,
    #[error("dense kernel on {0} vertices exceeds the limit of {KERNEL_VERTEX_LIMIT}")]
    TooLarge(usize),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum GreenSolver {
    Direct,
    FixedPoint,
    /// Direct up to [`DIRECT_VERTEX_LIMIT`] vertices, fixed point beyond.
    #[default]
    Auto,
}

/// All values `G_t(u, v)`, row-major by `u`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GreenKernel {
    pub t: f64,
    pub survival: f64,
    n: usize,
    values: Vec<f64>,
}

impl GreenKernel {
    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn get(&self, u: Vertex, v: Vertex) -> f64 {
        self.values[u * self.n + v]
    }

    /// `−log G_t(u, v)`; `+∞` where the kernel vanishes (only when `t = 1`).
    pub fn metric(&self, u: Vertex, v: Vertex) -> f64 {
        -self.get(u, v).ln()
    }

    /// `max(−log G_t(u, v), −log G_t(v, u))`.
    pub fn symmetric_metric(&self, u: Vertex, v: Vertex) -> f64 {
        self.metric(u, v).max(self.metric(v, u))
    }

    /// Row `−log G_t(x, ·)`, optionally symmetrized.
    pub fn metric_row(&self, x: Vertex, symmetric: bool) -> Vec<f64> {
        (0..self.n)
            .map(|v| {
                if symmetric {
                    self.symmetric_metric(x, v)
                } else {
                    self.metric(x, v)
                }
            })
            .collect()
    }
}

/// `1 − 1/t`, validating `t >= 1`.
pub fn survival(t: f64) -> Result<f64, GreenError> {
    if !t.is_finite() || t < 1.0 {
        return Err(GreenError::BadParameter(t));
    }
    Ok(1.0 - 1.0 / t)
}

pub fn green_kernel(g: &Graph, t: f64) -> Result<GreenKernel, GreenError> {
    green_kernel_with(g, t, GreenSolver::Auto)
}

pub fn green_kernel_with(g: &Graph, t: f64, solver: GreenSolver) -> Result<GreenKernel, GreenError> {
    let q = survival(t)?;
    let n = g.vertex_count();
    if n > KERNEL_VERTEX_LIMIT {
        return Err(GreenError::TooLarge(n));
    }
    let direct = match solver {
        GreenSolver::Direct => true,
        GreenSolver::FixedPoint => false,
        GreenSolver::Auto => n <= DIRECT_VERTEX_LIMIT,
    };
    let values = if direct {
        solve_direct(g, q)?
    } else {
        solve_fixed_point(g, q)?
    };
    Ok(GreenKernel {
        t,
        survival: q,
        n,
        values,
    })
}

fn solve_direct(g: &Graph, q: f64) -> Result<Vec<f64>, GreenError> {
    let n = g.vertex_count();
    let mut a = DMatrix::<f64>::identity(n, n);
    for u in 0..n {
        a[(u, u)] -= q * 0.5;
        let w = q * 0.5 / g.degree(u) as f64;
        for &z in g.neighbors(u) {
            a[(u, z)] -= w;
        }
    }
    let inv = a.lu().try_inverse().ok_or(GreenError::Singular)?;
    let mut values = vec![0.0; n * n];
    for u in 0..n {
        for v in 0..n {
            values[u * n + v] = if u == v { 1.0 } else { inv[(u, v)] / inv[(v, v)] };
        }
    }
    Ok(values)
}

fn fixed_point_iteration_cap(q: f64) -> usize {
    if q == 0.0 {
        return 2;
    }
    // the iteration contracts by q per sweep
    let sweeps = (FIXED_POINT_TOLERANCE.ln() / q.ln()).ceil();
    (4.0 * sweeps).clamp(100.0, 50_000_000.0) as usize
}

/// `G_t(·, v)` by iterating `h ← qPh` with `h(v) = 1` pinned.
pub fn green_column_fixed_point(g: &Graph, q: f64, v: Vertex) -> Result<Vec<f64>, GreenError> {
    let n = g.vertex_count();
    let inv = inverse_degrees(g);
    let cap = fixed_point_iteration_cap(q);
    let mut h = vec![0.0; n];
    h[v] = 1.0;
    let mut next = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for _ in 0..cap {
        residual = 0.0;
        for u in 0..n {
            let val = if u == v {
                1.0
            } else {
                let nbr: f64 = g.neighbors(u).iter().map(|&z| h[z]).sum();
                q * (0.5 * h[u] + 0.5 * inv[u] * nbr)
            };
            residual = residual.max((val - h[u]).abs());
            next[u] = val;
        }
        std::mem::swap(&mut h, &mut next);
        if residual <= FIXED_POINT_TOLERANCE {
            return Ok(h);
        }
    }
    Err(GreenError::NoConvergence {
        target: v,
        residual,
        iterations: cap,
    })
}

fn solve_fixed_point(g: &Graph, q: f64) -> Result<Vec<f64>, GreenError> {
    let n = g.vertex_count();
    let columns = (0..n)
        .into_par_iter()
        .map(|v| green_column_fixed_point(g, q, v))
        .collect::<Result<Vec<_>, _>>()?;
    let mut values = vec![0.0; n * n];
    for (v, col) in columns.iter().enumerate() {
        for (u, &h) in col.iter().enumerate() {
            values[u * n + v] = h;
        }
    }
    Ok(values)
}

/// `−log P^m(x, y)`, `+∞` when `y` is unreachable in `m` steps.
pub fn information(g: &Graph, x: Vertex, y: Vertex, m: usize) -> Result<f64, GreenError> {
    g.check_vertex(x)?;
    g.check_vertex(y)?;
    let inv = inverse_degrees(g);
    let mut cur = vec![0.0; g.vertex_count()];
    cur[x] = 1.0;
    let mut next = vec![0.0; g.vertex_count()];
    let mut scratch = vec![0.0; g.vertex_count()];
    for _ in 0..m {
        lazy_step_into(g, &inv, &cur, &mut next, &mut scratch);
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(information_of(cur[y]))
}

/// `−log p` with `+∞` for zero mass.
pub fn information_of(p: f64) -> f64 {
    if p > 0.0 {
        -p.ln()
    } else {
        f64::INFINITY
    }
}

pub const GREEN_AUDIT_TOLERANCE: f64 = 1e-9;

/// Checks, for the walk from `x` at horizon `n`:
///
/// * `Σ_{y : P^n(x,y) > 0} G_t(x, y) <= t + 1` (the expectation of
///   `G_t / P^n` over the endpoint), and
/// * `G_t(x, y) >= q^n P^n(x, y)` for every `y`, reported at the worst `y`.
pub fn audit_info_green(
    g: &Graph,
    kernel: &GreenKernel,
    x: Vertex,
    n: usize,
) -> Result<AuditReport, GreenError> {
    g.check_vertex(x)?;
    let row = distribution(g, x, n).pop().expect("row n").mass;
    Ok(audit_info_green_row(kernel, x, n, &row))
}

pub(crate) fn audit_info_green_row(kernel: &GreenKernel, x: Vertex, n: usize, row: &[f64]) -> AuditReport {
    let t = kernel.t;
    let q = kernel.survival;
    let expectation: f64 = crate::stats::ksum(
        row.iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(y, _)| kernel.get(x, y)),
    );
    let qn = q.powi(n as i32);
    let (mut worst_y, mut worst_margin) = (x, f64::INFINITY);
    for (y, &p) in row.iter().enumerate() {
        let margin = kernel.get(x, y) - qn * p;
        if margin < worst_margin {
            worst_margin = margin;
            worst_y = y;
        }
    }
    let mut report = AuditReport::default();
    report.push(AuditRecord::check(
        "info_green_expectation",
        "E_x[G_t(X_0,X_n) / P^n(X_0,X_n)] <= t + 1",
        json!({ "x": x, "n": n, "t": t }),
        expectation,
        t + 1.0,
        GREEN_AUDIT_TOLERANCE,
    ));
    report.push(AuditRecord::check(
        "info_green_pointwise",
        "(1 - 1/t)^n P^n(x,y) <= G_t(x,y)",
        json!({ "x": x, "n": n, "t": t, "worst_y": worst_y }),
        qn * row[worst_y],
        kernel.get(x, worst_y),
        GREEN_AUDIT_TOLERANCE,
    ));
    report
}

/// Checks `P_x(−log P^m(X_0,X_m) >= −log G_n(X_0,X_m) + μ) <= (n+1) e^{−μ}`.
///
/// Endpoints within `1e-12` of the threshold are counted, so rounding can
/// only make the left side larger.
pub fn audit_tail_info_vs_green(
    g: &Graph,
    x: Vertex,
    m: usize,
    n: usize,
    mu: f64,
) -> Result<AuditRecord, GreenError> {
    if m > n || !(mu > 0.0) {
        return Err(GreenError::Graph(GraphError::InvalidParameter(format!(
            "need 0 <= m <= n and mu > 0, got m={m}, n={n}, mu={mu}"
        ))));
    }
    let kernel = green_kernel(g, n as f64)?;
    g.check_vertex(x)?;
    let row = distribution(g, x, m).pop().expect("row m").mass;
    Ok(tail_info_record(&kernel, x, m, n, mu, &row))
}

pub(crate) fn tail_info_record(
    kernel: &GreenKernel,
    x: Vertex,
    m: usize,
    n: usize,
    mu: f64,
    row: &[f64],
) -> AuditRecord {
    let prob: f64 = crate::stats::ksum(row.iter().enumerate().filter_map(|(y, &p)| {
        if p <= 0.0 {
            return None;
        }
        let gap = information_of(p) - kernel.metric(x, y);
        (gap >= mu - 1e-12).then_some(p)
    }));
    AuditRecord::check(
        "info_vs_green_tail",
        "P_x(-log P^m(X_0,X_m) >= -log G_n(X_0,X_m) + mu) <= (n+1) e^{-mu}",
        json!({ "x": x, "m": m, "n": n, "mu": mu }),
        prob.min(1.0),
        (n as f64 + 1.0) * (-mu).exp(),
        0.0,
    )
}

/// Worst violation of `G(u,w) G(w,v) <= G(u,v)` over all triples, as
/// `(u, w, v, excess)`; `excess <= 0` means supermultiplicativity holds.
pub fn supermultiplicativity_excess(kernel: &GreenKernel) -> (Vertex, Vertex, Vertex, f64) {
    let n = kernel.n;
    (0..n)
        .into_par_iter()
        .map(|u| {
            let mut best = (u, u, u, f64::NEG_INFINITY);
            for w in 0..n {
                let a = kernel.get(u, w);
                for v in 0..n {
                    let e = a * kernel.get(w, v) - kernel.get(u, v);
                    if e > best.3 {
                        best = (u, w, v, e);
                    }
                }
            }
            best
        })
        .reduce(
            || (0, 0, 0, f64::NEG_INFINITY),
            |a, b| if b.3 > a.3 || (b.3 == a.3 && (b.0, b.1, b.2) < (a.0, a.1, a.2)) { b } else { a },
        )
}
