use num_rational::Ratio;

use super::{BoundaryRatio, Graph, GraphError, Vertex};

/// Largest graph for which every subset is enumerated.
pub const EXHAUSTIVE_VERTEX_LIMIT: usize = 22;

/// Brute-force isoperimetric profile `Φ(v) = min{|∂W|/vol(W) : vol(W) <= v}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IsoProfile {
    /// Minimal ratio among sets of volume exactly `v`, indexed by `v`.
    exact: Vec<Option<BoundaryRatio>>,
    /// Running minimum of `exact`.
    phi: Vec<Option<BoundaryRatio>>,
}

impl IsoProfile {
    fn from_exact(exact: Vec<Option<BoundaryRatio>>) -> Self {
        let mut phi = Vec::with_capacity(exact.len());
        let mut running: Option<BoundaryRatio> = None;
        for r in &exact {
            running = match (running, r) {
                (Some(a), Some(b)) => Some(a.min(*b)),
                (a, b) => a.or(*b),
            };
            phi.push(running);
        }
        IsoProfile { exact, phi }
    }

    pub fn volume_cap(&self) -> u64 {
        self.phi.len() as u64 - 1
    }

    /// `Φ(volume)`, or `None` when no nonempty set fits (or `volume` exceeds the cap).
    pub fn phi(&self, volume: u64) -> Option<BoundaryRatio> {
        self.phi.get(volume as usize).copied().flatten()
    }

    /// Minimal ratio over sets of volume exactly `volume`.
    pub fn at_exact_volume(&self, volume: u64) -> Option<BoundaryRatio> {
        self.exact.get(volume as usize).copied().flatten()
    }

    /// Breakpoints `(v, Φ(v))` where the profile changes value.
    pub fn breakpoints(&self) -> Vec<(u64, BoundaryRatio)> {
        let mut out: Vec<(u64, BoundaryRatio)> = Vec::new();
        for (v, r) in self.phi.iter().enumerate() {
            if let Some(r) = r {
                if out.last().is_none_or(|&(_, prev)| prev != *r) {
                    out.push((v as u64, *r));
                }
            }
        }
        out
    }
}

struct Recorder {
    exact: Vec<Option<BoundaryRatio>>,
}

impl Recorder {
    fn new(cap: u64) -> Self {
        Recorder {
            exact: vec![None; cap as usize + 1],
        }
    }

    #[inline]
    fn record(&mut self, boundary: u64, volume: u64) {
        let slot = &mut self.exact[volume as usize];
        match slot {
            // cross-multiplied comparison avoids reducing every candidate
            Some(best) if best.numer() * volume <= boundary * best.denom() => {}
            _ => *slot = Some(Ratio::new(boundary, volume)),
        }
    }
}

/// Φ over every nonempty subset, via a Gray-code walk over `2^n` masks.
pub fn iso_profile_exhaustive(g: &Graph, volume_cap: u64) -> Result<IsoProfile, GraphError> {
    let n = g.vertex_count();
    if n > EXHAUSTIVE_VERTEX_LIMIT {
        return Err(GraphError::InvalidParameter(format!(
            "exhaustive enumeration needs <= {EXHAUSTIVE_VERTEX_LIMIT} vertices, got {n}"
        )));
    }
    let cap = volume_cap.min(g.total_volume());
    let nbr_masks: Vec<u32> = (0..n)
        .map(|v| g.neighbors(v).iter().fold(0u32, |m, &w| m | (1 << w)))
        .collect();
    let mut rec = Recorder::new(cap);
    let mut mask = 0u32;
    let mut volume = 0u64;
    let mut boundary = 0i64;
    for step in 1u64..(1u64 << n) {
        let v = step.trailing_zeros() as usize;
        let inside = (mask & nbr_masks[v]).count_ones() as i64;
        let deg = g.degree(v) as i64;
        if mask & (1 << v) == 0 {
            mask |= 1 << v;
            volume += deg as u64;
            boundary += deg - 2 * inside;
        } else {
            mask &= !(1 << v);
            volume -= deg as u64;
            boundary -= deg - 2 * inside;
        }
        if volume <= cap {
            rec.record(boundary as u64, volume);
        }
    }
    Ok(IsoProfile::from_exact(rec.exact))
}

struct ConnectedSearch<'a> {
    g: &'a Graph,
    cap: u64,
    budget: u64,
    visited: u64,
    /// `> 0` iff the vertex is in the current set or adjacent to it.
    near: Vec<u32>,
    in_set: Vec<bool>,
    rec: Recorder,
}

impl ConnectedSearch<'_> {
    fn add(&mut self, w: Vertex) {
        self.in_set[w] = true;
        self.near[w] += 1;
        for &u in self.g.neighbors(w) {
            self.near[u] += 1;
        }
    }

    fn remove(&mut self, w: Vertex) {
        self.in_set[w] = false;
        self.near[w] -= 1;
        for &u in self.g.neighbors(w) {
            self.near[u] -= 1;
        }
    }

    fn extend(
        &mut self,
        root: Vertex,
        mut ext: Vec<Vertex>,
        volume: u64,
        boundary: u64,
    ) -> Result<(), GraphError> {
        self.visited += 1;
        if self.visited > self.budget {
            return Err(GraphError::BudgetExhausted {
                budget: self.budget,
            });
        }
        self.rec.record(boundary, volume);
        while let Some(w) = ext.pop() {
            let deg = self.g.degree(w) as u64;
            if volume + deg > self.cap {
                continue;
            }
            let mut next = ext.clone();
            next.extend(
                self.g
                    .neighbors(w)
                    .iter()
                    .copied()
                    .filter(|&u| u > root && self.near[u] == 0),
            );
            let inside = self
                .g
                .neighbors(w)
                .iter()
                .filter(|&&u| self.in_set[u])
                .count() as u64;
            let new_boundary = boundary + deg - 2 * inside;
            self.add(w);
            let res = self.extend(root, next, volume + deg, new_boundary);
            self.remove(w);
            res?;
        }
        Ok(())
    }
}

/// Φ restricted to connected sets, enumerated once each (ESU ordering by
/// minimum vertex). Exact, since a disconnected set's ratio is a mediant of
/// its components' ratios.
pub fn iso_profile_connected(
    g: &Graph,
    volume_cap: u64,
    budget: u64,
) -> Result<IsoProfile, GraphError> {
    let cap = volume_cap.min(g.total_volume());
    let n = g.vertex_count();
    let mut search = ConnectedSearch {
        g,
        cap,
        budget,
        visited: 0,
        near: vec![0; n],
        in_set: vec![false; n],
        rec: Recorder::new(cap),
    };
    for root in 0..n {
        let deg = g.degree(root) as u64;
        if deg > cap {
            continue;
        }
        let ext: Vec<Vertex> = g.neighbors(root).iter().copied().filter(|&u| u > root).collect();
        search.add(root);
        let res = search.extend(root, ext, deg, deg);
        search.remove(root);
        res?;
    }
    Ok(IsoProfile::from_exact(search.rec.exact))
}

/// Connected enumeration within `budget`, falling back to the exhaustive
/// subset walk on small graphs when the budget runs out.
pub fn isoperimetric_profile_bruteforce(
    g: &Graph,
    volume_cap: u64,
    budget: u64,
) -> Result<IsoProfile, GraphError> {
    match iso_profile_connected(g, volume_cap, budget) {
        Err(GraphError::BudgetExhausted { .. }) if g.vertex_count() <= EXHAUSTIVE_VERTEX_LIMIT => {
            iso_profile_exhaustive(g, volume_cap)
        }
        other => other,
    }
}
