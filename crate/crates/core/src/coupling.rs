//! Conditioned endpoint laws, a simultaneous coupling of all of them, the
//! random partition it induces, and the search for a small-boundary cell.
//!
//! The coupling uses shared rejection proposals: `(Z_k, U_k)` with `Z_k`
//! uniform on `V` and `U_k` uniform on `[0, c*]`, where `c*` is the largest
//! density. Law `x` takes the first proposal with `U_k <= f_x(Z_k)`. Two
//! vertices share a cell when they accepted the same proposal, so
//! `P(different cells) = 1 − Σ min(f_x, f_y) / Σ max(f_x, f_y)` exactly.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::curvature::rational_to_f64;
use crate::graph::{all_pairs_distances, bfs_distances, Graph, GraphError, Vertex, VertexSet};
use crate::report::{AuditRecord, AuditReport};
use crate::stats::{derive_seed, ksum, stream_rng};
use crate::tail::audit_upper_tail;
use crate::walk::{rows_at, ProfileTable, WalkError};

/// Hard cap on proposals drawn for one coupling sample.
pub const PROPOSAL_CAP: usize = 1 << 22;

/// Graphs up to this size get an all-pairs distance table for cell diameters.
const DISTANCE_TABLE_LIMIT: usize = 4096;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CouplingError {
    #[error("good event has zero mass for source {0}")]
    ZeroGoodMass(Vertex),
    #[error("lambda must be >= 1, got {0}")]
    BadLambda(f64),
    #[error("law {0} is not a probability vector")]
    BadLaw(usize),
    #[error("{pending} laws still unassigned after {cap} proposals")]
    ProposalCap { pending: usize, cap: usize },
    #[error("conditioning set has zero mass")]
    ZeroConditioning,
    #[error("empty set F")]
    EmptySet,
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Walk(#[from] WalkError),
}

/// Probability vector on `0..vertex_count` stored by its support.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SparseLaw {
    pub vertex_count: usize,
    /// `(vertex, mass)`, sorted by vertex, masses positive.
    pub support: Vec<(Vertex, f64)>,
}

impl SparseLaw {
    pub fn from_dense(mass: &[f64]) -> Self {
        SparseLaw {
            vertex_count: mass.len(),
            support: mass
                .iter()
                .enumerate()
                .filter(|(_, &p)| p > 0.0)
                .map(|(v, &p)| (v, p))
                .collect(),
        }
    }

    pub fn density(&self, v: Vertex) -> f64 {
        self.support
            .binary_search_by_key(&v, |&(w, _)| w)
            .map_or(0.0, |i| self.support[i].1)
    }

    pub fn max_density(&self) -> f64 {
        self.support.iter().map(|&(_, p)| p).fold(0.0, f64::max)
    }

    fn is_probability(&self) -> bool {
        let total = ksum(self.support.iter().map(|&(_, p)| p));
        (total - 1.0).abs() <= 1e-9
            && self.support.iter().all(|&(v, p)| p > 0.0 && v < self.vertex_count)
            && self.support.windows(2).all(|w| w[0].0 < w[1].0)
    }
}

/// Horizon, `λ`, and the profile values that define the good events.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EventParams {
    pub n: usize,
    pub lambda: f64,
    pub dstar: f64,
    pub hstar: f64,
}

impl EventParams {
    pub fn new(profile: &ProfileTable, lambda: f64) -> Result<Self, CouplingError> {
        if !(lambda >= 1.0) || !lambda.is_finite() {
            return Err(CouplingError::BadLambda(lambda));
        }
        let n = profile.horizon();
        Ok(EventParams {
            n,
            lambda,
            dstar: profile.at(n).dstar,
            hstar: profile.at(n).hstar,
        })
    }

    /// `λ D*_n`.
    pub fn radius(&self) -> f64 {
        self.lambda * self.dstar
    }

    /// `log N = λ (H*_n + log(n + 1))`.
    pub fn log_size_bound(&self) -> f64 {
        self.lambda * (self.hstar + (self.n as f64 + 1.0).ln())
    }
}

/// `P^n(x, ·)` restricted to the good event and renormalized.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GoodEventLaw {
    pub source: Vertex,
    pub params: EventParams,
    pub law: SparseLaw,
    /// `P_x(bad event)`.
    pub bad_mass: f64,
}

impl GoodEventLaw {
    /// Builds the law from the row `P^n(x, ·)` and distances `d(x, ·)`.
    pub fn from_row(
        x: Vertex,
        params: EventParams,
        row: &[f64],
        dist: &[u32],
    ) -> Result<Self, CouplingError> {
        let radius = params.radius();
        let log_n = params.log_size_bound();
        let kept: Vec<(Vertex, f64)> = row
            .iter()
            .zip(dist)
            .enumerate()
            .filter(|&(_, (&p, &d))| p > 0.0 && f64::from(d) <= radius && -p.ln() <= log_n)
            .map(|(y, (&p, _))| (y, p))
            .collect();
        let good = ksum(kept.iter().map(|&(_, p)| p));
        if kept.is_empty() || good <= 0.0 {
            return Err(CouplingError::ZeroGoodMass(x));
        }
        let total = ksum(row.iter().copied());
        Ok(GoodEventLaw {
            source: x,
            params,
            law: SparseLaw {
                vertex_count: row.len(),
                support: kept.into_iter().map(|(y, p)| (y, p / good)).collect(),
            },
            bad_mass: (total - good).max(0.0),
        })
    }
}

pub fn good_event_law(
    g: &Graph,
    x: Vertex,
    params: EventParams,
) -> Result<GoodEventLaw, CouplingError> {
    g.check_vertex(x)?;
    let row = rows_at(g, &[x], params.n)?.pop().expect("one row").mass;
    GoodEventLaw::from_row(x, params, &row, &bfs_distances(g, x))
}

/// Laws for every source, computed in parallel.
pub fn good_event_laws(g: &Graph, params: EventParams) -> Result<Vec<GoodEventLaw>, CouplingError> {
    let sources: Vec<Vertex> = (0..g.vertex_count()).collect();
    let rows = rows_at(g, &sources, params.n)?;
    rows.par_iter()
        .map(|r| GoodEventLaw::from_row(r.source, params, &r.mass, &bfs_distances(g, r.source)))
        .collect()
}

/// One joint draw of endpoints for a family of laws.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CouplingSample {
    pub seed: u64,
    /// Index of the proposal each law accepted.
    pub accepted: Vec<usize>,
    /// The endpoint `X_x = Z_{accepted[x]}`.
    pub endpoint: Vec<Vertex>,
}

impl CouplingSample {
    /// Cells as `(endpoint, members)`, members ascending, cells ordered by
    /// their smallest member.
    pub fn cells(&self) -> Vec<(Vertex, Vec<Vertex>)> {
        let mut by_key: BTreeMap<usize, (Vertex, Vec<Vertex>)> = BTreeMap::new();
        for (x, &k) in self.accepted.iter().enumerate() {
            by_key
                .entry(k)
                .or_insert_with(|| (self.endpoint[x], Vec::new()))
                .1
                .push(x);
        }
        let mut cells: Vec<_> = by_key.into_values().collect();
        cells.sort_by_key(|(_, m)| m[0]);
        cells
    }

    pub fn same_cell(&self, x: Vertex, y: Vertex) -> bool {
        self.accepted[x] == self.accepted[y]
    }
}

/// Draws proposals in rounds, appending to a shared buffer, until every law
/// has accepted one. The buffer depends only on the seed, so the result does
/// not depend on scheduling.
pub fn simultaneous_coupling(laws: &[&SparseLaw], seed: u64) -> Result<CouplingSample, CouplingError> {
    let v = laws.first().map_or(0, |l| l.vertex_count);
    for (i, l) in laws.iter().enumerate() {
        if l.vertex_count != v || !l.is_probability() {
            return Err(CouplingError::BadLaw(i));
        }
    }
    let envelope = laws.iter().map(|l| l.max_density()).fold(0.0, f64::max);
    let mut rng = stream_rng(seed, 0);
    let mut proposals: Vec<(Vertex, f64)> = Vec::new();
    let mut accepted: Vec<Option<usize>> = vec![None; laws.len()];
    let expected = (v as f64 * envelope).ceil() as usize;
    let mut target = (4 * expected + 16).min(PROPOSAL_CAP);
    let scan = |law: &SparseLaw, from: usize, proposals: &[(Vertex, f64)]| {
        proposals[from..]
            .iter()
            .position(|&(z, u)| u <= law.density(z))
            .map(|k| k + from)
    };
    loop {
        let from = proposals.len();
        proposals.extend((from..target).map(|_| {
            let z = rng.random_range(0..v);
            let u = rng.random::<f64>() * envelope;
            (z, u)
        }));
        if laws.len() >= 64 {
            accepted
                .par_iter_mut()
                .zip(laws.par_iter())
                .filter(|(a, _)| a.is_none())
                .for_each(|(a, law)| *a = scan(law, from, &proposals));
        } else {
            for (a, law) in accepted.iter_mut().zip(laws) {
                if a.is_none() {
                    *a = scan(law, from, &proposals);
                }
            }
        }
        let pending = accepted.iter().filter(|a| a.is_none()).count();
        if pending == 0 {
            break;
        }
        if target >= PROPOSAL_CAP {
            return Err(CouplingError::ProposalCap {
                pending,
                cap: PROPOSAL_CAP,
            });
        }
        target = (target * 2).min(PROPOSAL_CAP);
    }
    let accepted: Vec<usize> = accepted.into_iter().map(|a| a.expect("assigned")).collect();
    let endpoint = accepted.iter().map(|&k| proposals[k].0).collect();
    Ok(CouplingSample {
        seed,
        accepted,
        endpoint,
    })
}

/// `1 − Σ min(f, g) / Σ max(f, g)`: the disagreement probability of the
/// coupling above.
pub fn pairwise_disagreement(f: &SparseLaw, g: &SparseLaw) -> f64 {
    let (mut i, mut j) = (0, 0);
    let (mut mins, mut maxs) = (Vec::new(), Vec::new());
    while i < f.support.len() || j < g.support.len() {
        let a = f.support.get(i).copied();
        let b = g.support.get(j).copied();
        match (a, b) {
            (Some((va, pa)), Some((vb, pb))) if va == vb => {
                mins.push(pa.min(pb));
                maxs.push(pa.max(pb));
                i += 1;
                j += 1;
            }
            (Some((va, pa)), Some((vb, _))) if va < vb => {
                maxs.push(pa);
                i += 1;
            }
            (Some((_, pa)), None) => {
                maxs.push(pa);
                i += 1;
            }
            (_, Some((_, pb))) => {
                maxs.push(pb);
                j += 1;
            }
            (None, None) => unreachable!(),
        }
    }
    (1.0 - ksum(mins) / ksum(maxs)).clamp(0.0, 1.0)
}

/// Exact version of [`pairwise_disagreement`] on dense rational vectors.
pub fn coupling_pairwise_exact(f: &[BigRational], g: &[BigRational]) -> BigRational {
    let mut mins = BigRational::zero();
    let mut maxs = BigRational::zero();
    for (a, b) in f.iter().zip(g) {
        if a <= b {
            mins += a;
            maxs += b;
        } else {
            mins += b;
            maxs += a;
        }
    }
    BigRational::one() - mins / maxs
}

/// Exact `½ Σ |p − q|`.
pub fn tv_exact(p: &[BigRational], q: &[BigRational]) -> BigRational {
    let total: BigRational = p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum();
    total / BigRational::from_integer(BigInt::from(2))
}

fn condition(p: &[BigRational], set: &[bool]) -> Result<(Vec<BigRational>, BigRational), CouplingError> {
    let mass: BigRational = p.iter().zip(set).filter(|(_, &s)| s).map(|(a, _)| a).sum();
    if !mass.is_positive() {
        return Err(CouplingError::ZeroConditioning);
    }
    let cond = p
        .iter()
        .zip(set)
        .map(|(a, &s)| if s { a / &mass } else { BigRational::zero() })
        .collect();
    Ok((cond, mass))
}

/// Exact check of `‖p|_A − q|_B‖ <= ‖p − q‖ + p(Aᶜ) + q(Bᶜ)`.
pub fn tv_conditioning_audit(
    p: &[BigRational],
    q: &[BigRational],
    a: &[bool],
    b: &[bool],
) -> Result<AuditRecord, CouplingError> {
    let (pa, mass_a) = condition(p, a)?;
    let (qb, mass_b) = condition(q, b)?;
    let lhs = tv_exact(&pa, &qb);
    let rhs = tv_exact(p, q) + (BigRational::one() - mass_a) + (BigRational::one() - mass_b);
    let mut rec = AuditRecord::check(
        "tv_conditioning",
        "TV(p|A, q|B) <= TV(p, q) + p(A^c) + q(B^c)",
        json!({ "lhs_exact": lhs.to_string(), "rhs_exact": rhs.to_string() }),
        rational_to_f64(&lhs),
        rational_to_f64(&rhs),
        0.0,
    );
    rec.pass = Some(lhs <= rhs);
    Ok(rec)
}

/// `T̃V = max over edges of the pairwise disagreement`.
pub fn tvtilde_exact(g: &Graph, laws: &[GoodEventLaw]) -> f64 {
    let edges: Vec<(Vertex, Vertex)> = g.edges().collect();
    edges
        .par_iter()
        .map(|&(x, y)| pairwise_disagreement(&laws[x].law, &laws[y].law))
        .reduce(|| 0.0, f64::max)
}

/// `T̃V <= 2 TV_n + 2 max_x P_x(bad event)`.
pub fn audit_tvtilde(g: &Graph, laws: &[GoodEventLaw], tv_n: f64) -> AuditRecord {
    let tilde = tvtilde_exact(g, laws);
    let bad = laws.iter().map(|l| l.bad_mass).fold(0.0, f64::max);
    AuditRecord::check(
        "tvtilde_bound",
        "max_{x~y} P(X_x != X_y) <= 2 TV_n + 2 max_x P(bad event at x)",
        json!({ "tv_n": tv_n, "max_bad_mass": bad }),
        tilde,
        2.0 * tv_n + 2.0 * bad,
        1e-12,
    )
}

/// `(1/deg F) Σ_{x∈F} deg(x) |∂([x]∩F)| / deg([x]∩F)`, which telescopes to
/// the number of edge ends in `F` whose other end lies in a different piece
/// of `F` (or outside it), divided by `deg F`.
pub fn mtp_average(g: &Graph, sample: &CouplingSample, f: &VertexSet) -> Result<f64, CouplingError> {
    if f.is_empty() {
        return Err(CouplingError::EmptySet);
    }
    let key = |v: Vertex| f.contains(v).then(|| sample.accepted[v]);
    let crossing: u64 = f
        .members()
        .iter()
        .map(|&u| g.neighbors(u).iter().filter(|&&w| key(w) != key(u)).count() as u64)
        .sum();
    Ok(crossing as f64 / f.volume() as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellStats {
    pub endpoint: Vertex,
    pub members: Vec<Vertex>,
    pub diameter: u32,
    pub size: usize,
    pub volume: u64,
    pub boundary: u64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PartitionStats {
    pub cells: Vec<CellStats>,
    /// Index into `cells` of the smallest ratio (first on ties).
    pub best: usize,
    pub mtp_average: f64,
}

struct Distances<'a> {
    g: &'a Graph,
    table: Option<Vec<Vec<u32>>>,
}

impl<'a> Distances<'a> {
    fn new(g: &'a Graph) -> Self {
        let table = (g.vertex_count() <= DISTANCE_TABLE_LIMIT).then(|| all_pairs_distances(g));
        Distances { g, table }
    }

    fn diameter(&self, set: &[Vertex]) -> u32 {
        match &self.table {
            Some(t) => set
                .iter()
                .map(|&u| set.iter().map(|&v| t[u][v]).max().unwrap_or(0))
                .max()
                .unwrap_or(0),
            None => crate::graph::set_diameter(self.g, set),
        }
    }
}

fn partition_stats_with(
    g: &Graph,
    sample: &CouplingSample,
    f: &VertexSet,
    dist: &Distances,
) -> Result<PartitionStats, CouplingError> {
    let cells: Vec<CellStats> = sample
        .cells()
        .into_par_iter()
        .map(|(endpoint, members)| {
            let set = VertexSet::new(g, members.iter().copied()).expect("valid members");
            CellStats {
                endpoint,
                diameter: dist.diameter(&members),
                size: members.len(),
                volume: set.volume(),
                boundary: set.boundary(),
                ratio: set.boundary() as f64 / set.volume() as f64,
                members,
            }
        })
        .collect();
    let best = cells
        .iter()
        .enumerate()
        .fold(0, |b, (i, c)| if c.ratio < cells[b].ratio { i } else { b });
    Ok(PartitionStats {
        best,
        mtp_average: mtp_average(g, sample, f)?,
        cells,
    })
}

pub fn partition_stats(
    g: &Graph,
    sample: &CouplingSample,
    f: &VertexSet,
) -> Result<PartitionStats, CouplingError> {
    partition_stats_with(g, sample, f, &Distances::new(g))
}

/// Lambda grid used to fit the tail rate behind the default calibration.
pub const CALIBRATION_LAMBDAS: [f64; 7] = [1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0];

/// `3 / ĉ`, with `ĉ` the fitted tail rate from vertex 0.
pub fn default_calibration(g: &Graph, profile: &ProfileTable) -> Result<f64, CouplingError> {
    let fit = audit_upper_tail(g, profile, 0, &CALIBRATION_LAMBDAS).map_err(|e| {
        CouplingError::Graph(GraphError::InvalidParameter(e.to_string()))
    })?;
    Ok(if fit.c_hat.is_infinite() {
        0.0
    } else if fit.c_hat <= 0.0 {
        f64::INFINITY
    } else {
        3.0 / fit.c_hat
    })
}

/// Smallest `λ >= 1` at which every reachable endpoint from every source
/// satisfies both good-event constraints.
pub fn saturating_lambda(g: &Graph, profile: &ProfileTable) -> Result<f64, CouplingError> {
    let n = profile.horizon();
    let sources: Vec<Vertex> = (0..g.vertex_count()).collect();
    let rows = rows_at(g, &sources, n)?;
    let dstar = profile.at(n).dstar;
    let scale = profile.at(n).hstar + (n as f64 + 1.0).ln();
    let needed = rows
        .par_iter()
        .map(|r| {
            let dist = bfs_distances(g, r.source);
            r.mass
                .iter()
                .zip(&dist)
                .filter(|(&p, _)| p > 0.0)
                .map(|(&p, &d)| {
                    let by_dist = if dstar > 0.0 { f64::from(d) / dstar } else { 1.0 };
                    by_dist.max(-p.ln() / scale)
                })
                .fold(1.0, f64::max)
        })
        .reduce(|| 1.0, f64::max);
    // step just past the threshold so float rounding cannot exclude a point
    Ok(needed * (1.0 + 1e-9))
}

/// `λ = max(1, C log(1/TV_n))`, clamped to the saturating value when that
/// expression is infinite or undefined.
pub fn choose_lambda(g: &Graph, profile: &ProfileTable, calib_c: f64) -> Result<f64, CouplingError> {
    let tv = profile.at(profile.horizon()).tv;
    let raw = calib_c * (1.0 / tv).ln();
    if raw.is_finite() {
        Ok(raw.max(1.0))
    } else if calib_c == 0.0 && tv > 0.0 {
        Ok(1.0)
    } else {
        saturating_lambda(g, profile)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CertificateCell {
    pub vertices: Vec<u64>,
    pub diameter: u32,
    pub size: usize,
    pub volume: u64,
    pub boundary: u64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CertificateBounds {
    /// `min(2n, 2 λ D*_n)`.
    pub diam_bound: f64,
    /// `N (max deg / min deg)` with `N = exp(λ (H*_n + log(n+1)))`.
    pub size_bound: f64,
    pub log_size_bound: f64,
    /// `4 TV_n`.
    pub ratio_bound: f64,
}

/// Outcome of the cell search. Per-sample diameter and size checks run on
/// every cell of every sample examined.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Certificate {
    pub n: usize,
    pub lambda: f64,
    pub calib_c: f64,
    pub tv_n: f64,
    pub dstar: f64,
    pub hstar: f64,
    pub root_seed: u64,
    /// Seed of the sample holding `cell`, if one qualified.
    pub seed: Option<u64>,
    pub seeds_tried: usize,
    pub cell: Option<CertificateCell>,
    pub bounds: CertificateBounds,
    pub tvtilde: f64,
    pub max_bad_mass: f64,
    /// `4 TV_n >= 1`: every set meets the ratio bound.
    pub vacuous: bool,
    pub diameter_violations: usize,
    pub size_violations: usize,
    pub found: bool,
    pub pass: bool,
}

pub struct CertificateRequest<'a> {
    pub profile: &'a ProfileTable,
    pub calib_c: f64,
    /// Overrides the calibrated `λ` when set.
    pub lambda: Option<f64>,
    pub seeds: usize,
    pub root_seed: u64,
    /// Defaults to `V`.
    pub f: Option<VertexSet>,
}

pub fn partition_certificate(g: &Graph, req: &CertificateRequest) -> Result<Certificate, CouplingError> {
    let profile = req.profile;
    let n = profile.horizon();
    let tv_n = profile.at(n).tv;
    let lambda = match req.lambda {
        Some(l) => l,
        None => choose_lambda(g, profile, req.calib_c)?,
    };
    let params = EventParams::new(profile, lambda)?;
    let laws = good_event_laws(g, params)?;
    let law_refs: Vec<&SparseLaw> = laws.iter().map(|l| &l.law).collect();
    let f = req.f.clone().unwrap_or_else(|| VertexSet::all(g));
    let dist = Distances::new(g);

    let degree_spread = g.max_degree() as f64 / g.min_degree() as f64;
    let log_size_bound = params.log_size_bound();
    let bounds = CertificateBounds {
        diam_bound: (2.0 * n as f64).min(2.0 * params.radius()),
        size_bound: (log_size_bound + degree_spread.ln()).exp(),
        log_size_bound,
        ratio_bound: 4.0 * tv_n,
    };
    let mut cert = Certificate {
        n,
        lambda,
        calib_c: req.calib_c,
        tv_n,
        dstar: params.dstar,
        hstar: params.hstar,
        root_seed: req.root_seed,
        seed: None,
        seeds_tried: 0,
        cell: None,
        bounds: bounds.clone(),
        tvtilde: tvtilde_exact(g, &laws),
        max_bad_mass: laws.iter().map(|l| l.bad_mass).fold(0.0, f64::max),
        vacuous: 4.0 * tv_n >= 1.0,
        diameter_violations: 0,
        size_violations: 0,
        found: false,
        pass: false,
    };
    for i in 0..req.seeds {
        let seed = derive_seed(req.root_seed, i as u64);
        let sample = simultaneous_coupling(&law_refs, seed)?;
        let stats = partition_stats_with(g, &sample, &f, &dist)?;
        cert.seeds_tried += 1;
        for c in &stats.cells {
            if f64::from(c.diameter) > bounds.diam_bound {
                cert.diameter_violations += 1;
            }
            if (c.size as f64).ln() > log_size_bound + degree_spread.ln() + 1e-12 {
                cert.size_violations += 1;
            }
        }
        let best = &stats.cells[stats.best];
        if best.ratio <= bounds.ratio_bound {
            cert.seed = Some(seed);
            cert.cell = Some(CertificateCell {
                vertices: best.members.iter().map(|&v| g.label(v)).collect(),
                diameter: best.diameter,
                size: best.size,
                volume: best.volume,
                boundary: best.boundary,
                ratio: best.ratio,
            });
            cert.found = true;
            break;
        }
    }
    cert.pass = cert.found && cert.diameter_violations == 0 && cert.size_violations == 0;
    Ok(cert)
}

/// Hard checks behind a certificate, as audit records.
pub fn certificate_report(cert: &Certificate) -> AuditReport {
    let params = json!({ "n": cert.n, "lambda": cert.lambda, "seeds_tried": cert.seeds_tried });
    let mut report = AuditReport::default();
    let ratio = cert.cell.as_ref().map_or(f64::INFINITY, |c| c.ratio);
    report.push(AuditRecord::check(
        "certificate_ratio",
        "some cell has |boundary| / volume <= 4 TV_n",
        params.clone(),
        ratio,
        cert.bounds.ratio_bound,
        0.0,
    ));
    report.push(AuditRecord::check(
        "certificate_cell_diameter",
        "every cell has diameter <= min(2n, 2 lambda D*_n)",
        params.clone(),
        cert.diameter_violations as f64,
        0.0,
        0.0,
    ));
    report.push(AuditRecord::check(
        "certificate_cell_size",
        "every cell has size <= N (max deg / min deg)",
        params,
        cert.size_violations as f64,
        0.0,
        0.0,
    ));
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{gen_cycle, gen_hypercube, gen_torus};
    use crate::walk::PairScope;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn law(mass: &[f64]) -> SparseLaw {
        SparseLaw::from_dense(mass)
    }

    #[test]
    fn k2_good_event() {
        let k2 = gen_hypercube(1).unwrap();
        let p = ProfileTable::compute(&k2, 1, &PairScope::AllNeighborPairs).unwrap();
        let params = EventParams::new(&p, 1.0).unwrap();
        let l = good_event_law(&k2, 0, params).unwrap();
        assert_eq!(l.law.support, vec![(0, 1.0)]);
        assert_eq!(l.bad_mass, 0.5);
        let wide = EventParams::new(&p, 10.0).unwrap();
        let l = good_event_law(&k2, 0, wide).unwrap();
        assert_eq!(l.bad_mass, 0.0);
        assert!(EventParams::new(&p, 0.5).is_err());
    }

    #[test]
    fn disagreement_formula() {
        let f = law(&[1.0, 0.0]);
        let g = law(&[0.5, 0.5]);
        assert!((pairwise_disagreement(&f, &g) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(pairwise_disagreement(&f, &f), 0.0);
        assert_eq!(pairwise_disagreement(&law(&[1.0, 0.0]), &law(&[0.0, 1.0])), 1.0);
        let exact = coupling_pairwise_exact(&[r(1, 1), r(0, 1)], &[r(1, 2), r(1, 2)]);
        assert_eq!(exact, r(2, 3));
        let tv = tv_exact(&[r(1, 1), r(0, 1)], &[r(1, 2), r(1, 2)]);
        assert_eq!(exact, &tv * r(2, 1) / (r(1, 1) + &tv));
    }

    #[test]
    fn coupling_is_deterministic_and_consistent() {
        let a = law(&[0.2, 0.3, 0.5, 0.0]);
        let b = law(&[0.0, 0.3, 0.3, 0.4]);
        let s1 = simultaneous_coupling(&[&a, &b, &a], 17).unwrap();
        let s2 = simultaneous_coupling(&[&a, &b, &a], 17).unwrap();
        assert_eq!(s1, s2);
        assert_eq!(s1.accepted[0], s1.accepted[2]);
        assert!(a.density(s1.endpoint[0]) > 0.0);
        assert!(b.density(s1.endpoint[1]) > 0.0);
        assert!(simultaneous_coupling(&[&law(&[0.5, 0.4])], 1).is_err());
    }

    #[test]
    fn identical_laws_form_one_cell() {
        let a = law(&[0.25; 4]);
        let s = simultaneous_coupling(&[&a, &a, &a, &a], 3).unwrap();
        assert_eq!(s.cells().len(), 1);
    }

    #[test]
    fn conditioning_examples() {
        let p = vec![r(1, 2), r(1, 4), r(1, 4), r(0, 1)];
        let q = vec![r(1, 4), r(1, 4), r(1, 4), r(1, 4)];
        let all = vec![true; 4];
        let rec = tv_conditioning_audit(&p, &q, &all, &all).unwrap();
        assert_eq!(rec.pass, Some(true));
        assert_eq!(rec.lhs, rec.rhs);
        let some = vec![true, false, true, false];
        assert_eq!(tv_conditioning_audit(&p, &p, &some, &some).unwrap().lhs, 0.0);
        let none = vec![false; 4];
        assert_eq!(
            tv_conditioning_audit(&p, &q, &none, &all),
            Err(CouplingError::ZeroConditioning)
        );
    }

    #[test]
    fn mtp_extremes() {
        let g = gen_torus(&[4, 4]).unwrap();
        let all = VertexSet::all(&g);
        let one_cell = CouplingSample {
            seed: 0,
            accepted: vec![0; 16],
            endpoint: vec![0; 16],
        };
        assert_eq!(mtp_average(&g, &one_cell, &all).unwrap(), 0.0);
        let singletons = CouplingSample {
            seed: 0,
            accepted: (0..16).collect(),
            endpoint: (0..16).collect(),
        };
        assert_eq!(mtp_average(&g, &singletons, &all).unwrap(), 1.0);
        let stats = partition_stats(&g, &singletons, &all).unwrap();
        assert_eq!(stats.cells.iter().map(|c| c.volume).sum::<u64>(), g.total_volume());
    }

    #[test]
    fn k2_certificate() {
        let k2 = gen_hypercube(1).unwrap();
        let p = ProfileTable::compute(&k2, 1, &PairScope::AllNeighborPairs).unwrap();
        let cert = partition_certificate(
            &k2,
            &CertificateRequest {
                profile: &p,
                calib_c: 1.0,
                lambda: None,
                seeds: 5,
                root_seed: 1,
                f: None,
            },
        )
        .unwrap();
        assert!(cert.pass);
        assert_eq!(cert.cell.unwrap().ratio, 0.0);
        assert!(certificate_report(&cert_fixture()).passed());
    }

    fn cert_fixture() -> Certificate {
        let c12 = gen_cycle(12).unwrap();
        let p = ProfileTable::compute(&c12, 20, &PairScope::AllNeighborPairs).unwrap();
        let c = default_calibration(&c12, &p).unwrap();
        partition_certificate(
            &c12,
            &CertificateRequest {
                profile: &p,
                calib_c: c,
                lambda: None,
                seeds: 50,
                root_seed: 7,
                f: None,
            },
        )
        .unwrap()
    }

    #[test]
    fn c12_certificate_and_tvtilde() {
        let cert = cert_fixture();
        assert!(cert.pass, "{cert:?}");
        let c12 = gen_cycle(12).unwrap();
        let p = ProfileTable::compute(&c12, 20, &PairScope::AllNeighborPairs).unwrap();
        let laws = good_event_laws(&c12, EventParams::new(&p, cert.lambda).unwrap()).unwrap();
        assert_eq!(audit_tvtilde(&c12, &laws, p.at(20).tv).pass, Some(true));
    }
}
