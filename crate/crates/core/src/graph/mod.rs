//! Finite simple graphs in compressed neighbor-list form.
//!
//! A [`Graph`] is validated once at construction (symmetric, loop-free,
//! no parallel edges, connected) and is immutable afterwards, so it can be
//! shared freely between threads.

mod generators;
mod isoperimetry;
mod parse;

use std::collections::VecDeque;

use num_rational::Ratio;
use rayon::prelude::*;
use thiserror::Error;

pub use generators::{
    gen_complete, gen_cycle, gen_hypercube, gen_lamplighter_cycle, gen_random_regular, gen_torus,
    lamplighter_decode, lamplighter_encode, torus_decode, torus_encode, DEFAULT_VERTEX_CAP,
};
pub use isoperimetry::{
    iso_profile_connected, iso_profile_exhaustive, isoperimetric_profile_bruteforce, IsoProfile,
    EXHAUSTIVE_VERTEX_LIMIT,
};
pub use parse::{load_edge_list, to_edge_list};

/// Vertex identifier; always in `0..graph.vertex_count()`.
pub type Vertex = usize;

/// Exact boundary-to-volume ratio `|∂W| / vol(W)`.
pub type BoundaryRatio = Ratio<u64>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("graph has no edges")]
    Empty,
    #[error("self-loop at vertex {0}")]
    SelfLoop(u64),
    #[error("duplicate edge {{{0}, {1}}}")]
    DuplicateEdge(u64, u64),
    #[error("vertex {vertex} out of range for {count} vertices")]
    VertexOutOfRange { vertex: usize, count: usize },
    #[error("graph is disconnected ({components} components)")]
    Disconnected { components: usize },
    #[error("graph would have {requested} vertices, cap is {cap}")]
    TooLarge { requested: u128, cap: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("generation failed after {attempts} attempts")]
    GenerationFailed { attempts: usize },
    #[error("vertex set is empty")]
    EmptySet,
    #[error("enumeration budget of {budget} sets exhausted")]
    BudgetExhausted { budget: u64 },
}

#[derive(Clone, Debug)]
pub struct Graph {
    offsets: Vec<usize>,
    adjacency: Vec<Vertex>,
    max_degree: usize,
    edge_count: usize,
    total_volume: u64,
    /// Original ids when the graph was loaded from an edge list.
    labels: Option<Vec<u64>>,
}

impl Graph {
    /// Builds a graph on `vertex_count` vertices from an undirected edge list.
    pub fn from_edges<I>(vertex_count: usize, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (Vertex, Vertex)>,
    {
        let mut lists: Vec<Vec<Vertex>> = vec![Vec::new(); vertex_count];
        for (u, v) in edges {
            for w in [u, v] {
                if w >= vertex_count {
                    return Err(GraphError::VertexOutOfRange {
                        vertex: w,
                        count: vertex_count,
                    });
                }
            }
            if u == v {
                return Err(GraphError::SelfLoop(u as u64));
            }
            lists[u].push(v);
            lists[v].push(u);
        }
        Self::from_neighbor_lists(lists)
    }

    /// Builds a graph from per-vertex neighbor lists, which must already be
    /// symmetric. Lists are sorted here.
    pub fn from_neighbor_lists(mut lists: Vec<Vec<Vertex>>) -> Result<Self, GraphError> {
        let n = lists.len();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut adjacency = Vec::new();
        offsets.push(0);
        for (x, list) in lists.iter_mut().enumerate() {
            list.sort_unstable();
            for pair in list.windows(2) {
                if pair[0] == pair[1] {
                    return Err(GraphError::DuplicateEdge(x as u64, pair[0] as u64));
                }
            }
            if let Some(&bad) = list.iter().find(|&&y| y >= n) {
                return Err(GraphError::VertexOutOfRange {
                    vertex: bad,
                    count: n,
                });
            }
            if list.binary_search(&x).is_ok() {
                return Err(GraphError::SelfLoop(x as u64));
            }
            adjacency.extend_from_slice(list);
            offsets.push(adjacency.len());
        }
        if adjacency.is_empty() {
            return Err(GraphError::Empty);
        }
        let mut graph = Graph {
            offsets,
            adjacency,
            max_degree: 0,
            edge_count: 0,
            total_volume: 0,
            labels: None,
        };
        for x in 0..n {
            for &y in graph.neighbors(x) {
                if !graph.has_edge(y, x) {
                    return Err(GraphError::InvalidParameter(format!(
                        "neighbor lists not symmetric at {{{x}, {y}}}"
                    )));
                }
            }
        }
        graph.max_degree = (0..n).map(|x| graph.degree(x)).max().unwrap_or(0);
        graph.total_volume = graph.adjacency.len() as u64;
        graph.edge_count = graph.adjacency.len() / 2;
        let components = graph.component_count();
        if components != 1 {
            return Err(GraphError::Disconnected { components });
        }
        Ok(graph)
    }

    pub(crate) fn with_labels(mut self, labels: Vec<u64>) -> Self {
        debug_assert_eq!(labels.len(), self.vertex_count());
        self.labels = Some(labels);
        self
    }

    #[inline]
    pub fn vertex_count(&self) -> usize {
        self.offsets.len() - 1
    }

    #[inline]
    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    #[inline]
    pub fn neighbors(&self, x: Vertex) -> &[Vertex] {
        &self.adjacency[self.offsets[x]..self.offsets[x + 1]]
    }

    #[inline]
    pub fn degree(&self, x: Vertex) -> usize {
        self.offsets[x + 1] - self.offsets[x]
    }

    /// Largest degree `M`.
    #[inline]
    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn min_degree(&self) -> usize {
        (0..self.vertex_count())
            .map(|x| self.degree(x))
            .min()
            .unwrap_or(0)
    }

    /// Sum of all degrees, `2|E|`.
    #[inline]
    pub fn total_volume(&self) -> u64 {
        self.total_volume
    }

    pub fn has_edge(&self, x: Vertex, y: Vertex) -> bool {
        self.neighbors(x).binary_search(&y).is_ok()
    }

    /// Each undirected edge once, as `(u, v)` with `u < v`, in sorted order.
    pub fn edges(&self) -> impl Iterator<Item = (Vertex, Vertex)> + '_ {
        (0..self.vertex_count()).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .copied()
                .filter(move |&v| u < v)
                .map(move |v| (u, v))
        })
    }

    /// Original label of `x` (its id in the source edge list, or `x` itself).
    pub fn label(&self, x: Vertex) -> u64 {
        self.labels.as_ref().map_or(x as u64, |l| l[x])
    }

    pub fn is_regular(&self) -> bool {
        self.min_degree() == self.max_degree
    }

    pub fn check_vertex(&self, x: Vertex) -> Result<(), GraphError> {
        if x < self.vertex_count() {
            Ok(())
        } else {
            Err(GraphError::VertexOutOfRange {
                vertex: x,
                count: self.vertex_count(),
            })
        }
    }

    fn component_count(&self) -> usize {
        let n = self.vertex_count();
        let mut seen = vec![false; n];
        let mut components = 0;
        let mut stack = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            components += 1;
            seen[start] = true;
            stack.push(start);
            while let Some(u) = stack.pop() {
                for &v in self.neighbors(u) {
                    if !seen[v] {
                        seen[v] = true;
                        stack.push(v);
                    }
                }
            }
        }
        components
    }
}

/// Graph distances from `x` to every vertex.
pub fn bfs_distances(g: &Graph, x: Vertex) -> Vec<u32> {
    let mut dist = vec![u32::MAX; g.vertex_count()];
    let mut queue = VecDeque::new();
    dist[x] = 0;
    queue.push_back(x);
    while let Some(u) = queue.pop_front() {
        let du = dist[u];
        for &v in g.neighbors(u) {
            if dist[v] == u32::MAX {
                dist[v] = du + 1;
                queue.push_back(v);
            }
        }
    }
    dist
}

/// Distance rows for every source, computed in parallel.
pub fn all_pairs_distances(g: &Graph) -> Vec<Vec<u32>> {
    (0..g.vertex_count())
        .into_par_iter()
        .map(|x| bfs_distances(g, x))
        .collect()
}

/// Largest pairwise graph distance between members of `set`.
pub fn set_diameter(g: &Graph, set: &[Vertex]) -> u32 {
    let mut best = 0;
    for &u in set {
        let dist = bfs_distances(g, u);
        for &v in set {
            best = best.max(dist[v]);
        }
    }
    best
}

/// A set of vertices with its volume and boundary size cached.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VertexSet {
    membership: Vec<bool>,
    members: Vec<Vertex>,
    volume: u64,
    boundary: u64,
}

impl VertexSet {
    pub fn new<I>(g: &Graph, vertices: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = Vertex>,
    {
        let mut membership = vec![false; g.vertex_count()];
        for v in vertices {
            g.check_vertex(v)?;
            membership[v] = true;
        }
        Ok(Self::from_membership(g, membership))
    }

    pub fn all(g: &Graph) -> Self {
        Self::from_membership(g, vec![true; g.vertex_count()])
    }

    pub fn from_membership(g: &Graph, membership: Vec<bool>) -> Self {
        assert_eq!(membership.len(), g.vertex_count());
        let members: Vec<Vertex> = (0..membership.len()).filter(|&v| membership[v]).collect();
        let volume = members.iter().map(|&v| g.degree(v) as u64).sum();
        let boundary = members
            .iter()
            .map(|&v| g.neighbors(v).iter().filter(|&&w| !membership[w]).count() as u64)
            .sum();
        VertexSet {
            membership,
            members,
            volume,
            boundary,
        }
    }

    #[inline]
    pub fn contains(&self, v: Vertex) -> bool {
        self.membership[v]
    }

    pub fn members(&self) -> &[Vertex] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// `Σ_{w∈W} deg(w)`.
    pub fn volume(&self) -> u64 {
        self.volume
    }

    /// `|∂W|`, the number of edges with exactly one endpoint in the set.
    pub fn boundary(&self) -> u64 {
        self.boundary
    }

    pub fn complement(&self, g: &Graph) -> Self {
        Self::from_membership(g, self.membership.iter().map(|&b| !b).collect())
    }
}

/// Exact `|∂W| / vol(W)`.
pub fn boundary_volume_ratio(w: &VertexSet) -> Result<BoundaryRatio, GraphError> {
    if w.is_empty() {
        return Err(GraphError::EmptySet);
    }
    Ok(Ratio::new(w.boundary(), w.volume()))
}
