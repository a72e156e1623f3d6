use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Graph, GraphError, Vertex};

/// Default upper bound on generated vertex counts.
pub const DEFAULT_VERTEX_CAP: usize = 1 << 22;

const REGULAR_ATTEMPTS: usize = 10_000;

fn check_cap(requested: u128, cap: usize) -> Result<usize, GraphError> {
    if requested > cap as u128 {
        Err(GraphError::TooLarge { requested, cap })
    } else {
        Ok(requested as usize)
    }
}

/// Mixed-radix index of a torus coordinate; the first coordinate varies fastest.
pub fn torus_encode(sides: &[usize], coords: &[usize]) -> Vertex {
    let mut id = 0;
    for (side, c) in sides.iter().zip(coords).rev() {
        id = id * side + c;
    }
    id
}

pub fn torus_decode(sides: &[usize], mut id: Vertex) -> Vec<usize> {
    sides
        .iter()
        .map(|side| {
            let c = id % side;
            id /= side;
            c
        })
        .collect()
}

/// The discrete torus `Z_{s1} × … × Z_{sd}`; every vertex has degree `2d`.
pub fn gen_torus(sides: &[usize]) -> Result<Graph, GraphError> {
    gen_torus_capped(sides, DEFAULT_VERTEX_CAP)
}

pub fn gen_torus_capped(sides: &[usize], cap: usize) -> Result<Graph, GraphError> {
    if sides.is_empty() {
        return Err(GraphError::InvalidParameter("torus needs at least one side".into()));
    }
    if let Some(bad) = sides.iter().find(|&&s| s < 3) {
        return Err(GraphError::InvalidParameter(format!(
            "torus side {bad} < 3"
        )));
    }
    let requested = sides
        .iter()
        .try_fold(1u128, |acc, &s| acc.checked_mul(s as u128))
        .unwrap_or(u128::MAX);
    let n = check_cap(requested, cap)?;
    let lists = (0..n)
        .map(|id| {
            let mut coords = torus_decode(sides, id);
            let mut nbrs = Vec::with_capacity(2 * sides.len());
            for axis in 0..sides.len() {
                let c = coords[axis];
                for shifted in [(c + 1) % sides[axis], (c + sides[axis] - 1) % sides[axis]] {
                    coords[axis] = shifted;
                    nbrs.push(torus_encode(sides, &coords));
                }
                coords[axis] = c;
            }
            nbrs
        })
        .collect();
    Graph::from_neighbor_lists(lists)
}

/// Cycle `C_n`, the one-dimensional torus.
pub fn gen_cycle(n: usize) -> Result<Graph, GraphError> {
    gen_torus(&[n])
}

/// Complete graph `K_n`, `n >= 2`.
pub fn gen_complete(n: usize) -> Result<Graph, GraphError> {
    if n < 2 {
        return Err(GraphError::InvalidParameter(format!("K_{n} has no edges")));
    }
    check_cap(n as u128, DEFAULT_VERTEX_CAP)?;
    let lists = (0..n)
        .map(|x| (0..n).filter(|&y| y != x).collect())
        .collect();
    Graph::from_neighbor_lists(lists)
}

/// Hypercube `{0,1}^d`, `1 <= d <= 20`.
pub fn gen_hypercube(d: usize) -> Result<Graph, GraphError> {
    if d == 0 || d > 20 {
        return Err(GraphError::InvalidParameter(format!(
            "hypercube dimension {d} outside 1..=20"
        )));
    }
    let n = 1usize << d;
    let lists = (0..n)
        .map(|x| (0..d).map(|bit| x ^ (1 << bit)).collect())
        .collect();
    Graph::from_neighbor_lists(lists)
}

/// Vertex id of lamplighter state `(lamps, position)` on the base cycle `Z_n`.
/// Lamp `i` is bit `i` of `lamps`.
pub fn lamplighter_encode(n: usize, lamps: u64, position: usize) -> Vertex {
    lamps as usize * n + position
}

pub fn lamplighter_decode(n: usize, id: Vertex) -> (u64, usize) {
    ((id / n) as u64, id % n)
}

/// Cayley graph of `Z_2 ≀ Z_n` with generators "toggle the lamp under the
/// lamplighter" and "step ±1"; degree 3 everywhere.
pub fn gen_lamplighter_cycle(n: usize) -> Result<Graph, GraphError> {
    gen_lamplighter_cycle_capped(n, DEFAULT_VERTEX_CAP)
}

pub fn gen_lamplighter_cycle_capped(n: usize, cap: usize) -> Result<Graph, GraphError> {
    if n < 3 {
        return Err(GraphError::InvalidParameter(format!(
            "lamplighter base {n} < 3"
        )));
    }
    if n >= 64 {
        return Err(GraphError::TooLarge {
            requested: u128::MAX,
            cap,
        });
    }
    let total = check_cap((n as u128) << n, cap)?;
    let lists = (0..total)
        .map(|id| {
            let (lamps, pos) = lamplighter_decode(n, id);
            vec![
                lamplighter_encode(n, lamps ^ (1 << pos), pos),
                lamplighter_encode(n, lamps, (pos + 1) % n),
                lamplighter_encode(n, lamps, (pos + n - 1) % n),
            ]
        })
        .collect();
    Graph::from_neighbor_lists(lists)
}

/// Uniform-ish simple connected `d`-regular graph from the configuration
/// model, resampled until simple and connected.
pub fn gen_random_regular(n: usize, d: usize, seed: u64) -> Result<Graph, GraphError> {
    if d == 0 || d >= n {
        return Err(GraphError::InvalidParameter(format!(
            "need 0 < d < n, got n={n}, d={d}"
        )));
    }
    if (n * d) % 2 == 1 {
        return Err(GraphError::InvalidParameter(format!(
            "n*d = {} is odd",
            n * d
        )));
    }
    check_cap(n as u128, DEFAULT_VERTEX_CAP)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stubs: Vec<Vertex> = (0..n).flat_map(|v| std::iter::repeat_n(v, d)).collect();
    'attempt: for _ in 0..REGULAR_ATTEMPTS {
        stubs.shuffle(&mut rng);
        let mut lists: Vec<Vec<Vertex>> = vec![Vec::with_capacity(d); n];
        for pair in stubs.chunks_exact(2) {
            let (u, v) = (pair[0], pair[1]);
            if u == v || lists[u].contains(&v) {
                continue 'attempt;
            }
            lists[u].push(v);
            lists[v].push(u);
        }
        match Graph::from_neighbor_lists(lists) {
            Ok(g) => return Ok(g),
            Err(GraphError::Disconnected { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(GraphError::GenerationFailed {
        attempts: REGULAR_ATTEMPTS,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_regular(g: &Graph, d: usize) {
        for x in 0..g.vertex_count() {
            assert_eq!(g.degree(x), d, "vertex {x}");
            for &y in g.neighbors(x) {
                assert!(g.has_edge(y, x));
            }
        }
    }

    #[test]
    fn torus_counts() {
        let c4 = gen_torus(&[4]).unwrap();
        assert_eq!(c4.vertex_count(), 4);
        assert_regular(&c4, 2);
        let t33 = gen_torus(&[3, 3]).unwrap();
        assert_eq!(t33.vertex_count(), 9);
        assert_regular(&t33, 4);
        let t16 = gen_torus(&[16, 16]).unwrap();
        assert_eq!(t16.vertex_count(), 256);
        assert_eq!(t16.edge_count(), 512);
    }

    #[test]
    fn torus_rejects_short_sides_and_cap() {
        assert!(gen_torus(&[2, 5]).is_err());
        assert!(matches!(
            gen_torus_capped(&[10, 10], 99),
            Err(GraphError::TooLarge { requested: 100, cap: 99 })
        ));
    }

    #[test]
    fn hypercubes() {
        let k2 = gen_hypercube(1).unwrap();
        assert_eq!((k2.vertex_count(), k2.edge_count()), (2, 1));
        let q2 = gen_hypercube(2).unwrap();
        assert_eq!((q2.vertex_count(), q2.edge_count()), (4, 4));
        assert_regular(&q2, 2);
        let q3 = gen_hypercube(3).unwrap();
        assert_eq!((q3.vertex_count(), q3.edge_count()), (8, 12));
        assert!(gen_hypercube(21).is_err());
    }

    #[test]
    fn lamplighter_base_three() {
        let g = gen_lamplighter_cycle(3).unwrap();
        assert_eq!(g.vertex_count(), 24);
        assert_regular(&g, 3);
        let origin = lamplighter_encode(3, 0b000, 0);
        let mut expected = vec![
            lamplighter_encode(3, 0b001, 0),
            lamplighter_encode(3, 0b000, 1),
            lamplighter_encode(3, 0b000, 2),
        ];
        expected.sort_unstable();
        assert_eq!(g.neighbors(origin), expected.as_slice());
    }

    #[test]
    fn lamplighter_cap() {
        assert!(matches!(
            gen_lamplighter_cycle(20),
            Err(GraphError::TooLarge { .. })
        ));
    }

    #[test]
    fn random_regular() {
        let k4 = gen_random_regular(4, 3, 7).unwrap();
        assert_eq!(k4.edge_count(), 6);
        let g = gen_random_regular(10, 3, 1).unwrap();
        assert_regular(&g, 3);
        assert!(gen_random_regular(5, 3, 1).is_err());
        let again = gen_random_regular(10, 3, 1).unwrap();
        assert_eq!(g.edges().collect::<Vec<_>>(), again.edges().collect::<Vec<_>>());
    }

    #[test]
    fn complete_graph() {
        let k5 = gen_complete(5).unwrap();
        assert_eq!(k5.edge_count(), 10);
        assert_regular(&k5, 4);
    }
}
