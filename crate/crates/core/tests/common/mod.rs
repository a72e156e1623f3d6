#![allow(dead_code)]

use std::collections::VecDeque;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rand::Rng;
use tvprofile::curvature::FiniteMeasure;
use tvprofile::{Graph, Vertex};

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Plain BFS, kept separate from the library's own.
pub fn hop_distances(g: &Graph, x: Vertex) -> Vec<i64> {
    let mut dist = vec![-1i64; g.vertex_count()];
    dist[x] = 0;
    let mut queue = VecDeque::from([x]);
    while let Some(u) = queue.pop_front() {
        for &w in g.neighbors(u) {
            if dist[w] < 0 {
                dist[w] = dist[u] + 1;
                queue.push_back(w);
            }
        }
    }
    dist
}

/// Minimum transport cost by enumerating every basis of the transportation
/// polytope: each spanning tree of the row/column bipartite graph fixes a
/// unique flow, and the optimum sits at one of the nonnegative ones.
pub fn transport_oracle(supply: &[BigRational], demand: &[BigRational], cost: &[Vec<i64>]) -> BigRational {
    let (r, c) = (supply.len(), demand.len());
    let cells: Vec<(usize, usize)> = (0..r).flat_map(|i| (0..c).map(move |j| (i, j))).collect();
    let k = r + c - 1;
    let mut best: Option<BigRational> = None;
    let mut chosen = Vec::with_capacity(k);
    enumerate(&cells, k, 0, &mut chosen, &mut |basis| {
        if let Some(flow) = tree_flow(r, c, basis, supply, demand) {
            let total: BigRational = basis
                .iter()
                .zip(&flow)
                .map(|(&(i, j), f)| f * BigRational::from_integer(cost[i][j].into()))
                .sum();
            if best.as_ref().is_none_or(|b| total < *b) {
                best = Some(total);
            }
        }
    });
    best.expect("the transportation polytope is nonempty")
}

fn enumerate(
    cells: &[(usize, usize)],
    k: usize,
    start: usize,
    chosen: &mut Vec<(usize, usize)>,
    visit: &mut dyn FnMut(&[(usize, usize)]),
) {
    if chosen.len() == k {
        visit(chosen);
        return;
    }
    for idx in start..cells.len() {
        if cells.len() - idx < k - chosen.len() {
            break;
        }
        chosen.push(cells[idx]);
        enumerate(cells, k, idx + 1, chosen, visit);
        chosen.pop();
    }
}

/// Flow on a spanning tree by leaf peeling; `None` if the cells contain a
/// cycle or the flow goes negative.
fn tree_flow(
    r: usize,
    c: usize,
    basis: &[(usize, usize)],
    supply: &[BigRational],
    demand: &[BigRational],
) -> Option<Vec<BigRational>> {
    let nodes = r + c;
    let mut parent: Vec<usize> = (0..nodes).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut x = x;
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for &(i, j) in basis {
        let (a, b) = (find(&mut parent, i), find(&mut parent, r + j));
        if a == b {
            return None;
        }
        parent[a] = b;
    }
    let mut residual: Vec<BigRational> = supply.iter().chain(demand).cloned().collect();
    let mut degree = vec![0usize; nodes];
    for &(i, j) in basis {
        degree[i] += 1;
        degree[r + j] += 1;
    }
    let mut flow: Vec<Option<BigRational>> = vec![None; basis.len()];
    for _ in 0..basis.len() {
        let (e, leaf) = basis
            .iter()
            .enumerate()
            .filter(|(e, _)| flow[*e].is_none())
            .find_map(|(e, &(i, j))| {
                if degree[i] == 1 {
                    Some((e, i))
                } else if degree[r + j] == 1 {
                    Some((e, r + j))
                } else {
                    None
                }
            })?;
        let (i, j) = basis[e];
        let other = if leaf == i { r + j } else { i };
        let f = residual[leaf].clone();
        if f.is_negative() {
            return None;
        }
        residual[other] -= &f;
        residual[leaf] = BigRational::zero();
        degree[i] -= 1;
        degree[r + j] -= 1;
        flow[e] = Some(f);
    }
    if residual.iter().any(|x| !x.is_zero()) {
        return None;
    }
    Some(flow.into_iter().map(|f| f.expect("assigned")).collect())
}

/// W1 between two finite measures on `g` through the oracle.
pub fn w1_oracle(g: &Graph, mu: &FiniteMeasure, nu: &FiniteMeasure) -> BigRational {
    let supply: Vec<BigRational> = mu.support().iter().map(|(_, m)| m.clone()).collect();
    let demand: Vec<BigRational> = nu.support().iter().map(|(_, m)| m.clone()).collect();
    let cost: Vec<Vec<i64>> = mu
        .support()
        .iter()
        .map(|&(u, _)| {
            let d = hop_distances(g, u);
            nu.support().iter().map(|&(v, _)| d[v]).collect()
        })
        .collect();
    transport_oracle(&supply, &demand, &cost)
}

/// Connected graph on `k` vertices: a random tree plus a few random chords.
pub fn random_connected_graph<R: Rng>(rng: &mut R, k: usize) -> Graph {
    let mut edges = Vec::new();
    for v in 1..k {
        edges.push((rng.random_range(0..v), v));
    }
    for _ in 0..rng.random_range(0..=k) {
        let (a, b) = (rng.random_range(0..k), rng.random_range(0..k));
        if a != b && !edges.contains(&(a, b)) && !edges.contains(&(b, a)) {
            edges.push((a, b));
        }
    }
    Graph::from_edges(k, edges).expect("connected by construction")
}

/// Probability measure on `size` distinct random vertices with random
/// rational masses.
pub fn random_measure<R: Rng>(rng: &mut R, vertices: usize, size: usize) -> FiniteMeasure {
    let mut support: Vec<Vertex> = Vec::new();
    while support.len() < size.min(vertices) {
        let v = rng.random_range(0..vertices);
        if !support.contains(&v) {
            support.push(v);
        }
    }
    let weights: Vec<i64> = support.iter().map(|_| rng.random_range(1..=12)).collect();
    let total: i64 = weights.iter().sum();
    FiniteMeasure::new(support.into_iter().zip(weights).map(|(v, w)| (v, rat(w, total))).collect())
        .expect("valid measure")
}
