//! Exact transportation simplex.
//!
//! Solves `min Σ c_ij f_ij` over couplings of a finite supply vector and
//! demand vector with rational masses and integer costs. The basis is a
//! spanning tree of the bipartite row/column graph; pivots use Bland's rule
//! (lowest-index entering cell, lowest-index leaving cell among ties), which
//! rules out cycling under degeneracy. Since costs are integers, the dual
//! potentials are integers too, and every solution carries them as an
//! optimality certificate.

use std::collections::VecDeque;

use num_rational::BigRational;
use num_traits::{Signed, Zero};
use thiserror::Error;

const PIVOT_CAP: usize = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TransportError {
    #[error("supply and demand totals differ")]
    Unbalanced,
    #[error("supply or demand is empty")]
    Empty,
    #[error("negative mass")]
    NegativeMass,
    #[error("cost matrix is {rows}x{cols}, expected {want_rows}x{want_cols}")]
    Shape {
        rows: usize,
        cols: usize,
        want_rows: usize,
        want_cols: usize,
    },
    #[error("pivot cap reached")]
    PivotCap,
    #[error("certificate check failed: {0}")]
    Certificate(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransportSolution {
    /// Positive-flow cells `(row, col, mass)` in row-major order.
    pub flow: Vec<(usize, usize, BigRational)>,
    pub cost: BigRational,
    /// Dual potentials with `u_i + v_j <= c_ij`, tight wherever flow is positive.
    pub row_potential: Vec<i64>,
    pub col_potential: Vec<i64>,
    pub pivots: usize,
}

fn validate(
    supply: &[BigRational],
    demand: &[BigRational],
    cost: &[Vec<i64>],
) -> Result<(), TransportError> {
    if supply.is_empty() || demand.is_empty() {
        return Err(TransportError::Empty);
    }
    if supply.iter().chain(demand).any(|m| m.is_negative()) {
        return Err(TransportError::NegativeMass);
    }
    let shape_ok = cost.len() == supply.len() && cost.iter().all(|r| r.len() == demand.len());
    if !shape_ok {
        return Err(TransportError::Shape {
            rows: cost.len(),
            cols: cost.first().map_or(0, Vec::len),
            want_rows: supply.len(),
            want_cols: demand.len(),
        });
    }
    let s: BigRational = supply.iter().sum();
    let d: BigRational = demand.iter().sum();
    if s != d {
        return Err(TransportError::Unbalanced);
    }
    Ok(())
}

struct Basis {
    rows: usize,
    cols: usize,
    basic: Vec<Vec<bool>>,
    flow: Vec<Vec<BigRational>>,
}

impl Basis {
    /// Northwest-corner start: exactly `rows + cols - 1` basic cells forming a
    /// spanning tree, some possibly at zero flow.
    fn northwest(supply: &[BigRational], demand: &[BigRational]) -> Self {
        let (rows, cols) = (supply.len(), demand.len());
        let mut basic = vec![vec![false; cols]; rows];
        let mut flow = vec![vec![BigRational::zero(); cols]; rows];
        let mut left_s = supply.to_vec();
        let mut left_d = demand.to_vec();
        let (mut i, mut j) = (0, 0);
        while i < rows && j < cols {
            let x = left_s[i].clone().min(left_d[j].clone());
            left_s[i] -= &x;
            left_d[j] -= &x;
            flow[i][j] = x;
            basic[i][j] = true;
            if left_s[i].is_zero() && i + 1 < rows {
                i += 1;
            } else {
                j += 1;
            }
        }
        Basis {
            rows,
            cols,
            basic,
            flow,
        }
    }

    /// Tree adjacency over nodes `0..rows` (rows) and `rows..rows+cols` (columns).
    fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.rows + self.cols];
        for i in 0..self.rows {
            for j in 0..self.cols {
                if self.basic[i][j] {
                    adj[i].push(self.rows + j);
                    adj[self.rows + j].push(i);
                }
            }
        }
        adj
    }

    fn potentials(&self, adj: &[Vec<usize>], cost: &[Vec<i64>]) -> (Vec<i64>, Vec<i64>) {
        let n = self.rows + self.cols;
        let mut pot: Vec<Option<i64>> = vec![None; n];
        pot[0] = Some(0);
        let mut queue = VecDeque::from([0usize]);
        while let Some(a) = queue.pop_front() {
            let pa = pot[a].unwrap();
            for &b in &adj[a] {
                if pot[b].is_none() {
                    let (i, j) = if a < self.rows { (a, b - self.rows) } else { (b, a - self.rows) };
                    pot[b] = Some(cost[i][j] - pa);
                    queue.push_back(b);
                }
            }
        }
        let pot: Vec<i64> = pot.into_iter().map(|p| p.expect("basis spans")).collect();
        (pot[..self.rows].to_vec(), pot[self.rows..].to_vec())
    }

    /// Tree path from node `from` to node `to`, inclusive.
    fn tree_path(adj: &[Vec<usize>], from: usize, to: usize) -> Vec<usize> {
        let mut parent = vec![usize::MAX; adj.len()];
        parent[from] = from;
        let mut queue = VecDeque::from([from]);
        while let Some(a) = queue.pop_front() {
            if a == to {
                break;
            }
            for &b in &adj[a] {
                if parent[b] == usize::MAX {
                    parent[b] = a;
                    queue.push_back(b);
                }
            }
        }
        let mut path = vec![to];
        let mut cur = to;
        while cur != from {
            cur = parent[cur];
            path.push(cur);
        }
        path.reverse();
        path
    }

    fn cell(&self, a: usize, b: usize) -> (usize, usize) {
        if a < self.rows {
            (a, b - self.rows)
        } else {
            (b, a - self.rows)
        }
    }
}

/// Solves the transportation problem exactly.
pub fn solve_transport(
    supply: &[BigRational],
    demand: &[BigRational],
    cost: &[Vec<i64>],
) -> Result<TransportSolution, TransportError> {
    validate(supply, demand, cost)?;
    let mut basis = Basis::northwest(supply, demand);
    let mut pivots = 0;
    loop {
        let adj = basis.adjacency();
        let (u, v) = basis.potentials(&adj, cost);
        let entering = (0..basis.rows)
            .flat_map(|i| (0..basis.cols).map(move |j| (i, j)))
            .find(|&(i, j)| !basis.basic[i][j] && cost[i][j] - u[i] - v[j] < 0);
        let Some((ei, ej)) = entering else {
            let flow = (0..basis.rows)
                .flat_map(|i| (0..basis.cols).map(move |j| (i, j)))
                .filter(|&(i, j)| basis.flow[i][j].is_positive())
                .map(|(i, j)| (i, j, basis.flow[i][j].clone()))
                .collect::<Vec<_>>();
            let total = flow
                .iter()
                .map(|(i, j, f)| f * BigRational::from_integer(cost[*i][*j].into()))
                .sum();
            return Ok(TransportSolution {
                flow,
                cost: total,
                row_potential: u,
                col_potential: v,
                pivots,
            });
        };
        if pivots == PIVOT_CAP {
            return Err(TransportError::PivotCap);
        }
        pivots += 1;

        // Cycle: entering cell (+), then tree path row ei -> column ej with
        // alternating signs starting at (-).
        let path = Basis::tree_path(&adj, ei, basis.rows + ej);
        let cells: Vec<(usize, usize)> = path.windows(2).map(|w| basis.cell(w[0], w[1])).collect();
        let minus: Vec<(usize, usize)> = cells.iter().copied().step_by(2).collect();
        let plus: Vec<(usize, usize)> = cells.iter().copied().skip(1).step_by(2).collect();
        let theta = minus
            .iter()
            .map(|&(i, j)| basis.flow[i][j].clone())
            .min()
            .expect("cycle has a minus cell");
        let leaving = *minus
            .iter()
            .filter(|&&(i, j)| basis.flow[i][j] == theta)
            .min()
            .unwrap();
        for &(i, j) in &minus {
            basis.flow[i][j] -= &theta;
        }
        for &(i, j) in &plus {
            basis.flow[i][j] += &theta;
        }
        basis.flow[ei][ej] = theta;
        basis.basic[ei][ej] = true;
        basis.basic[leaving.0][leaving.1] = false;
        debug_assert!(basis.flow[leaving.0][leaving.1].is_zero());
    }
}

/// Checks primal feasibility, dual feasibility, complementary slackness and
/// equality of primal and dual objectives, all exactly.
pub fn verify_transport(
    supply: &[BigRational],
    demand: &[BigRational],
    cost: &[Vec<i64>],
    sol: &TransportSolution,
) -> Result<(), TransportError> {
    validate(supply, demand, cost)?;
    let fail = |msg: String| Err(TransportError::Certificate(msg));
    let mut rows = vec![BigRational::zero(); supply.len()];
    let mut cols = vec![BigRational::zero(); demand.len()];
    let mut primal = BigRational::zero();
    for (i, j, f) in &sol.flow {
        if f.is_negative() {
            return fail(format!("negative flow at ({i}, {j})"));
        }
        if sol.row_potential[*i] + sol.col_potential[*j] != cost[*i][*j] && !f.is_zero() {
            return fail(format!("slackness violated at ({i}, {j})"));
        }
        rows[*i] += f;
        cols[*j] += f;
        primal += f * BigRational::from_integer(cost[*i][*j].into());
    }
    if rows != supply || cols != demand {
        return fail("marginals differ".into());
    }
    for (i, row) in cost.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            if sol.row_potential[i] + sol.col_potential[j] > c {
                return fail(format!("dual infeasible at ({i}, {j})"));
            }
        }
    }
    let dual: BigRational = supply
        .iter()
        .zip(&sol.row_potential)
        .map(|(s, &u)| s * BigRational::from_integer(u.into()))
        .chain(
            demand
                .iter()
                .zip(&sol.col_potential)
                .map(|(d, &v)| d * BigRational::from_integer(v.into())),
        )
        .sum();
    if primal != sol.cost || dual != sol.cost {
        return fail(format!("objectives differ: primal {primal}, dual {dual}, reported {}", sol.cost));
    }
    Ok(())
}
