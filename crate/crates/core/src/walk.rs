//! Lazy simple random walk: exact distribution rows and the profiles
//! `TV_m`, `D*_m` and `H*_m`.
//!
//! Rows are dense `f64` vectors stepped by the lazy kernel
//! `P(x,x) = 1/2`, `P(x,y) = 1/(2 deg x)` for `y ~ x`. An exact rational
//! engine is available for small graphs and serves as an oracle in tests.

use std::fmt::Write;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::graph::{bfs_distances, Graph, Vertex};
use crate::stats::ksum;

/// Upper bound on `sources × vertices` dense entries held at once.
pub const ROW_ENTRY_BUDGET: usize = 1 << 27;

/// Largest graph accepted by [`exact_distribution`].
pub const EXACT_VERTEX_LIMIT: usize = 64;

pub const MASS_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WalkError {
    #[error("{sources} rows of {vertices} entries exceed the dense row budget; pass a transitive hint")]
    RowBudget { sources: usize, vertices: usize },
    #[error("exact rows need <= {EXACT_VERTEX_LIMIT} vertices, graph has {0}")]
    TooLargeForExact(usize),
    #[error("invalid hint pair ({0}, {1}): not an edge")]
    BadHint(Vertex, Vertex),
    #[error("empty hint")]
    EmptyHint,
}

/// The law `P^m(source, ·)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DistributionRow {
    pub source: Vertex,
    pub step: usize,
    pub mass: Vec<f64>,
}

impl DistributionRow {
    pub fn point_mass(g: &Graph, x: Vertex) -> Self {
        let mut mass = vec![0.0; g.vertex_count()];
        mass[x] = 1.0;
        DistributionRow {
            source: x,
            step: 0,
            mass,
        }
    }

    pub fn total(&self) -> f64 {
        ksum(self.mass.iter().copied())
    }

    pub fn is_valid(&self) -> bool {
        self.mass.iter().all(|&p| p >= 0.0) && (self.total() - 1.0).abs() <= MASS_TOLERANCE
    }

    pub fn entropy(&self) -> f64 {
        entropy(&self.mass)
    }
}

pub(crate) fn inverse_degrees(g: &Graph) -> Vec<f64> {
    (0..g.vertex_count())
        .map(|x| 1.0 / g.degree(x) as f64)
        .collect()
}

/// `dst = src · P` for the lazy kernel. `scratch` must have one slot per vertex.
pub(crate) fn lazy_step_into(
    g: &Graph,
    inv_deg: &[f64],
    src: &[f64],
    dst: &mut [f64],
    scratch: &mut [f64],
) {
    for ((s, &p), &w) in scratch.iter_mut().zip(src).zip(inv_deg) {
        *s = p * w;
    }
    for (z, out) in dst.iter_mut().enumerate() {
        let inflow: f64 = g.neighbors(z).iter().map(|&w| scratch[w]).sum();
        *out = 0.5 * (src[z] + inflow);
    }
}

/// One lazy step: `out(z) = row(z)/2 + Σ_{w~z} row(w) / (2 deg w)`.
pub fn lazy_step(g: &Graph, row: &DistributionRow) -> DistributionRow {
    let inv = inverse_degrees(g);
    let mut out = vec![0.0; g.vertex_count()];
    let mut scratch = vec![0.0; g.vertex_count()];
    lazy_step_into(g, &inv, &row.mass, &mut out, &mut scratch);
    DistributionRow {
        source: row.source,
        step: row.step + 1,
        mass: out,
    }
}

/// Rows `P^0(x,·), …, P^n(x,·)`.
pub fn distribution(g: &Graph, x: Vertex, n: usize) -> Vec<DistributionRow> {
    let inv = inverse_degrees(g);
    let mut scratch = vec![0.0; g.vertex_count()];
    let mut rows = Vec::with_capacity(n + 1);
    rows.push(DistributionRow::point_mass(g, x));
    for m in 1..=n {
        let mut next = vec![0.0; g.vertex_count()];
        lazy_step_into(g, &inv, &rows[m - 1].mass, &mut next, &mut scratch);
        rows.push(DistributionRow {
            source: x,
            step: m,
            mass: next,
        });
    }
    rows
}

/// `P^n(x,·)` for every `x` in `sources`, computed in parallel.
pub fn rows_at(g: &Graph, sources: &[Vertex], n: usize) -> Result<Vec<DistributionRow>, WalkError> {
    check_budget(sources.len(), g.vertex_count())?;
    let inv = inverse_degrees(g);
    Ok(sources
        .par_iter()
        .map(|&x| {
            let mut cur = DistributionRow::point_mass(g, x).mass;
            let mut next = vec![0.0; g.vertex_count()];
            let mut scratch = vec![0.0; g.vertex_count()];
            for _ in 0..n {
                lazy_step_into(g, &inv, &cur, &mut next, &mut scratch);
                std::mem::swap(&mut cur, &mut next);
            }
            DistributionRow {
                source: x,
                step: n,
                mass: cur,
            }
        })
        .collect())
}

/// Exact rational rows `P^0(x,·), …, P^n(x,·)` on graphs with at most
/// [`EXACT_VERTEX_LIMIT`] vertices.
pub fn exact_distribution(
    g: &Graph,
    x: Vertex,
    n: usize,
) -> Result<Vec<Vec<BigRational>>, WalkError> {
    let v = g.vertex_count();
    if v > EXACT_VERTEX_LIMIT {
        return Err(WalkError::TooLargeForExact(v));
    }
    let half = BigRational::new(BigInt::from(1), BigInt::from(2));
    let mut rows = Vec::with_capacity(n + 1);
    let mut first = vec![BigRational::zero(); v];
    first[x] = BigRational::from_integer(BigInt::from(1));
    rows.push(first);
    for m in 1..=n {
        let prev = &rows[m - 1];
        let mut next = vec![BigRational::zero(); v];
        for w in 0..v {
            if prev[w].is_zero() {
                continue;
            }
            let share = &prev[w] * &half;
            next[w] += &share;
            let per = &share / BigRational::from_integer(BigInt::from(g.degree(w)));
            for &z in g.neighbors(w) {
                next[z] += &per;
            }
        }
        rows.push(next);
    }
    Ok(rows)
}

/// `½ Σ_z |p(z) − q(z)|`.
pub fn tv_distance(p: &[f64], q: &[f64]) -> f64 {
    debug_assert_eq!(p.len(), q.len());
    0.5 * ksum(p.iter().zip(q).map(|(a, b)| (a - b).abs()))
}

/// Shannon entropy in nats with `0 log 0 = 0`.
pub fn entropy(p: &[f64]) -> f64 {
    ksum(p.iter().filter(|&&v| v > 0.0).map(|&v| -v * v.ln()))
}

/// `Σ_z p(z) d(z)`.
pub fn expected_distance(p: &[f64], dist: &[u32]) -> f64 {
    ksum(p.iter().zip(dist).map(|(&v, &d)| v * d as f64))
}

/// Which neighbor pairs the TV column maximizes over.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PairScope {
    /// Every edge of the graph; displacement and entropy use every source.
    AllNeighborPairs,
    /// Caller-asserted orbit representatives on a vertex-transitive graph:
    /// one pair per edge orbit. Displacement and entropy use the pair
    /// endpoints as sources.
    Hinted(Vec<(Vertex, Vertex)>),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProfileRow {
    pub m: usize,
    pub tv: f64,
    pub dstar: f64,
    pub hstar: f64,
}

/// `TV_m`, `D*_m` and `H*_m` for `m = 0..=n`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProfileTable {
    pub rows: Vec<ProfileRow>,
    pub scope: PairScope,
}

fn check_budget(sources: usize, vertices: usize) -> Result<(), WalkError> {
    if sources.saturating_mul(vertices) > ROW_ENTRY_BUDGET {
        Err(WalkError::RowBudget { sources, vertices })
    } else {
        Ok(())
    }
}

impl ProfileTable {
    pub fn compute(g: &Graph, n: usize, scope: &PairScope) -> Result<Self, WalkError> {
        let v = g.vertex_count();
        let (sources, pairs): (Vec<Vertex>, Vec<(usize, usize)>) = match scope {
            PairScope::AllNeighborPairs => ((0..v).collect(), g.edges().collect()),
            PairScope::Hinted(hint) => {
                if hint.is_empty() {
                    return Err(WalkError::EmptyHint);
                }
                let mut sources: Vec<Vertex> = Vec::new();
                for &(a, b) in hint {
                    if a >= v || b >= v || !g.has_edge(a, b) {
                        return Err(WalkError::BadHint(a, b));
                    }
                    sources.push(a);
                    sources.push(b);
                }
                sources.sort_unstable();
                sources.dedup();
                let slot = |x: Vertex| sources.binary_search(&x).unwrap();
                let pairs = hint.iter().map(|&(a, b)| (slot(a), slot(b))).collect();
                (sources, pairs)
            }
        };
        check_budget(sources.len(), v)?;

        let inv = inverse_degrees(g);
        let dists: Vec<Vec<u32>> = sources.par_iter().map(|&x| bfs_distances(g, x)).collect();
        let mut rows: Vec<Vec<f64>> = sources
            .iter()
            .map(|&x| DistributionRow::point_mass(g, x).mass)
            .collect();
        let mut next: Vec<Vec<f64>> = vec![vec![0.0; v]; sources.len()];

        let mut table = Vec::with_capacity(n + 1);
        let (mut dstar, mut hstar) = (0.0f64, 0.0f64);
        for m in 0..=n {
            let (disp, ent): (Vec<f64>, Vec<f64>) = rows
                .par_iter()
                .zip(dists.par_iter())
                .map(|(row, dist)| (expected_distance(row, dist), entropy(row)))
                .unzip();
            dstar = disp.iter().copied().fold(dstar, f64::max);
            hstar = ent.iter().copied().fold(hstar, f64::max);
            let tv = pairs
                .par_iter()
                .map(|&(a, b)| tv_distance(&rows[a], &rows[b]))
                .reduce(|| 0.0, f64::max);
            table.push(ProfileRow {
                m,
                tv,
                dstar,
                hstar,
            });
            if m < n {
                rows.par_iter()
                    .zip(next.par_iter_mut())
                    .for_each_init(
                        || vec![0.0; v],
                        |scratch, (src, dst)| lazy_step_into(g, &inv, src, dst, scratch),
                    );
                std::mem::swap(&mut rows, &mut next);
            }
        }
        Ok(ProfileTable {
            rows: table,
            scope: scope.clone(),
        })
    }

    pub fn horizon(&self) -> usize {
        self.rows.len() - 1
    }

    pub fn at(&self, m: usize) -> &ProfileRow {
        &self.rows[m]
    }

    pub fn tv_column(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.tv).collect()
    }

    pub fn dstar_column(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.dstar).collect()
    }

    pub fn hstar_column(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.hstar).collect()
    }

    pub fn is_hinted(&self) -> bool {
        matches!(self.scope, PairScope::Hinted(_))
    }

    /// CSV with header `m,tv,dstar,hstar`; floats in shortest round-trip form.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("m,tv,dstar,hstar\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{},{}", r.m, r.tv, r.dstar, r.hstar);
        }
        out
    }
}

/// `TV_m` for `m = 0..=n`, over all edges or over the hinted pairs.
pub fn tv_profile(
    g: &Graph,
    n: usize,
    hint: Option<&[(Vertex, Vertex)]>,
) -> Result<Vec<f64>, WalkError> {
    let scope = match hint {
        Some(h) => PairScope::Hinted(h.to_vec()),
        None => PairScope::AllNeighborPairs,
    };
    Ok(ProfileTable::compute(g, n, &scope)?.tv_column())
}

/// `D*_m = max_x max_{k<=m} E_x d(X_0, X_k)` for `m = 0..=n`.
pub fn displacement_profile(g: &Graph, n: usize) -> Result<Vec<f64>, WalkError> {
    Ok(ProfileTable::compute(g, n, &PairScope::AllNeighborPairs)?.dstar_column())
}

/// `H*_m = max_x max_{k<=m} H(P^k(x,·))` for `m = 0..=n`.
pub fn entropy_profile(g: &Graph, n: usize) -> Result<Vec<f64>, WalkError> {
    Ok(ProfileTable::compute(g, n, &PairScope::AllNeighborPairs)?.hstar_column())
}

/// One lazy step from `x`.
#[inline]
pub fn lazy_move<R: Rng + ?Sized>(g: &Graph, x: Vertex, rng: &mut R) -> Vertex {
    let nbrs = g.neighbors(x);
    let r = rng.random_range(0..2 * nbrs.len());
    if r < nbrs.len() {
        nbrs[r]
    } else {
        x
    }
}

pub fn sample_path_with<R: Rng + ?Sized>(
    g: &Graph,
    x: Vertex,
    n: usize,
    rng: &mut R,
) -> Vec<Vertex> {
    let mut path = Vec::with_capacity(n + 1);
    let mut cur = x;
    path.push(cur);
    for _ in 0..n {
        cur = lazy_move(g, cur, rng);
        path.push(cur);
    }
    path
}

/// Lazy-walk trajectory of length `n + 1`, deterministic given `seed`.
pub fn sample_path(g: &Graph, x: Vertex, n: usize, seed: u64) -> Vec<Vertex> {
    sample_path_with(g, x, n, &mut ChaCha8Rng::seed_from_u64(seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{gen_complete, gen_cycle, gen_hypercube, gen_torus};

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12
    }

    #[test]
    fn one_step_rows() {
        let k2 = gen_hypercube(1).unwrap();
        let r = lazy_step(&k2, &DistributionRow::point_mass(&k2, 0));
        assert_eq!(r.mass, vec![0.5, 0.5]);
        let c4 = gen_cycle(4).unwrap();
        let r = lazy_step(&c4, &DistributionRow::point_mass(&c4, 0));
        assert_eq!(r.mass, vec![0.5, 0.25, 0.0, 0.25]);
        assert_eq!(r.step, 1);
    }

    #[test]
    fn stationary_row_is_fixed() {
        let g = crate::graph::load_edge_list("0 1\n1 2\n2 0\n2 3\n3 4").unwrap();
        let vol = g.total_volume() as f64;
        let pi = DistributionRow {
            source: 0,
            step: 0,
            mass: (0..5).map(|x| g.degree(x) as f64 / vol).collect(),
        };
        let next = lazy_step(&g, &pi);
        for (a, b) in pi.mass.iter().zip(&next.mass) {
            assert!(close(*a, *b));
        }
    }

    #[test]
    fn k2_rows() {
        let k2 = gen_hypercube(1).unwrap();
        let rows = distribution(&k2, 0, 2);
        assert_eq!(rows[0].mass, vec![1.0, 0.0]);
        assert_eq!(rows[1].mass, vec![0.5, 0.5]);
        assert_eq!(rows[2].mass, vec![0.5, 0.5]);
    }

    #[test]
    fn tv_examples() {
        let c4 = gen_cycle(4).unwrap();
        let a = distribution(&c4, 0, 1);
        let b = distribution(&c4, 1, 1);
        assert_eq!(tv_distance(&a[1].mass, &a[1].mass), 0.0);
        assert_eq!(tv_distance(&a[0].mass, &b[0].mass), 1.0);
        assert!(close(tv_distance(&a[1].mass, &b[1].mass), 0.5));
    }

    #[test]
    fn profile_examples() {
        let k2 = gen_hypercube(1).unwrap();
        let t = ProfileTable::compute(&k2, 4, &PairScope::AllNeighborPairs).unwrap();
        assert_eq!(t.at(0).tv, 1.0);
        assert!(t.rows[1..].iter().all(|r| r.tv == 0.0));
        assert_eq!(t.at(0).dstar, 0.0);
        assert_eq!(t.at(0).hstar, 0.0);
        assert!(close(t.at(1).dstar, 0.5));
        assert!(close(t.at(1).hstar, 2f64.ln()));

        let c4 = gen_cycle(4).unwrap();
        let t = ProfileTable::compute(&c4, 1, &PairScope::AllNeighborPairs).unwrap();
        assert!(close(t.at(1).tv, 0.5));
        assert!(close(t.at(1).dstar, 0.5));
    }

    #[test]
    fn complete_graph_entropy() {
        for m in [2usize, 3, 5] {
            let g = gen_complete(m + 1).unwrap();
            let h = entropy_profile(&g, 1).unwrap();
            let expected = 0.5 * 2f64.ln() + 0.5 * (2.0 * m as f64).ln();
            assert!(close(h[1], expected));
        }
    }

    #[test]
    fn hint_matches_all_pairs_on_small_torus() {
        let sides = [6, 6];
        let g = gen_torus(&sides).unwrap();
        let nb = crate::graph::torus_encode(&sides, &[1, 0]);
        let all = ProfileTable::compute(&g, 30, &PairScope::AllNeighborPairs).unwrap();
        let hinted = ProfileTable::compute(&g, 30, &PairScope::Hinted(vec![(0, nb)])).unwrap();
        for (a, b) in all.rows.iter().zip(&hinted.rows) {
            assert!((a.tv - b.tv).abs() <= 1e-12);
            assert!((a.dstar - b.dstar).abs() <= 1e-12);
            assert!((a.hstar - b.hstar).abs() <= 1e-12);
        }
    }

    #[test]
    fn bad_hint_rejected() {
        let c4 = gen_cycle(4).unwrap();
        assert_eq!(
            ProfileTable::compute(&c4, 2, &PairScope::Hinted(vec![(0, 2)])).unwrap_err(),
            WalkError::BadHint(0, 2)
        );
    }

    #[test]
    fn exact_rows_match_float_rows() {
        let g = gen_torus(&[3, 4]).unwrap();
        let exact = exact_distribution(&g, 5, 8).unwrap();
        let float = distribution(&g, 5, 8);
        for (e, f) in exact.iter().zip(&float) {
            for (a, b) in e.iter().zip(&f.mass) {
                let a = crate::curvature::rational_to_f64(a);
                assert!((a - b).abs() <= 1e-15);
            }
        }
    }

    #[test]
    fn csv_layout() {
        let k2 = gen_hypercube(1).unwrap();
        let t = ProfileTable::compute(&k2, 1, &PairScope::AllNeighborPairs).unwrap();
        let csv = t.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("m,tv,dstar,hstar"));
        assert_eq!(lines.next(), Some("0,1,0,0"));
        assert_eq!(csv.lines().count(), 3);
    }

    #[test]
    fn sample_path_basics() {
        let k2 = gen_hypercube(1).unwrap();
        assert_eq!(sample_path(&k2, 1, 0, 3), vec![1]);
        let p = sample_path(&k2, 0, 50, 9);
        assert_eq!(p, sample_path(&k2, 0, 50, 9));
        assert_eq!(p.len(), 51);
    }
}
