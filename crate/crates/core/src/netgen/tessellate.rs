//! Voronoi centerlines clipped to the unit cube and cleaned up.

use std::collections::{HashMap, HashSet};

use super::delaunay::{Delaunay, Point, VoronoiEdge};
use crate::error::{Error, Result};

/// Undirected candidate network in unit-cube coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidates {
    pub coords: Vec<Point>,
    pub edges: Vec<(usize, usize)>,
    /// Maximum admissible edge length used by the filter (infinite if none).
    pub length_cutoff: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterOptions {
    /// Endpoints closer than this are merged.
    pub merge_tolerance: f64,
    /// Edges longer than this multiple of the median length are dropped.
    pub long_edge_factor: f64,
}

impl Default for FilterOptions {
    fn default() -> Self {
        Self {
            merge_tolerance: 1e-4,
            long_edge_factor: 3.0,
        }
    }
}

pub(crate) fn dist(a: &Point, b: &Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Parameter interval of `a + t·d` inside the unit cube, intersected with
/// `[t0, t1]` (Liang–Barsky).
fn clip_interval(a: &Point, d: &Point, mut t0: f64, mut t1: f64) -> Option<(f64, f64)> {
    for k in 0..3 {
        if d[k] == 0.0 {
            if a[k] < 0.0 || a[k] > 1.0 {
                return None;
            }
            continue;
        }
        let mut lo = (0.0 - a[k]) / d[k];
        let mut hi = (1.0 - a[k]) / d[k];
        if lo > hi {
            std::mem::swap(&mut lo, &mut hi);
        }
        t0 = t0.max(lo);
        t1 = t1.min(hi);
        if t0 > t1 {
            return None;
        }
    }
    Some((t0, t1))
}

fn at(a: &Point, d: &Point, t: f64) -> Point {
    // Snap to the cube so clipped endpoints sit exactly on its faces.
    [0, 1, 2].map(|k| (a[k] + t * d[k]).clamp(0.0, 1.0))
}

fn clip(edge: &VoronoiEdge) -> Option<(Point, Point)> {
    match edge {
        VoronoiEdge::Segment(a, b) => {
            let d = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
            let (t0, t1) = clip_interval(a, &d, 0.0, 1.0)?;
            Some((at(a, &d, t0), at(a, &d, t1)))
        }
        VoronoiEdge::Ray(a, d) => {
            let (t0, t1) = clip_interval(a, d, 0.0, f64::INFINITY)?;
            t1.is_finite().then(|| (at(a, d, t0), at(a, d, t1)))
        }
    }
}

/// Greedy vertex merging on a hash grid.
struct VertexPool {
    tol: f64,
    coords: Vec<Point>,
    grid: HashMap<[i64; 3], Vec<usize>>,
}

impl VertexPool {
    fn new(tol: f64) -> Self {
        Self {
            tol,
            coords: Vec::new(),
            grid: HashMap::new(),
        }
    }

    fn cell(&self, p: &Point) -> [i64; 3] {
        p.map(|x| (x / self.tol).floor() as i64)
    }

    fn id(&mut self, p: Point) -> usize {
        let c = self.cell(&p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(list) = self.grid.get(&[c[0] + dx, c[1] + dy, c[2] + dz]) {
                        if let Some(&i) = list.iter().find(|&&i| dist(&self.coords[i], &p) <= self.tol) {
                            return i;
                        }
                    }
                }
            }
        }
        let i = self.coords.len();
        self.coords.push(p);
        self.grid.entry(c).or_default().push(i);
        i
    }
}

pub(crate) fn components(n: usize, edges: &[(usize, usize)]) -> Vec<usize> {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut label = vec![usize::MAX; n];
    let mut next = 0;
    for s in 0..n {
        if label[s] != usize::MAX {
            continue;
        }
        label[s] = next;
        let mut stack = vec![s];
        while let Some(u) = stack.pop() {
            for &w in &adj[u] {
                if label[w] == usize::MAX {
                    label[w] = next;
                    stack.push(w);
                }
            }
        }
        next += 1;
    }
    label
}

/// Keeps the nodes selected by `keep` and renumbers them in order.
pub(crate) fn restrict(coords: &[Point], edges: &[(usize, usize)], keep: &[bool]) -> Candidates {
    let mut map = vec![usize::MAX; coords.len()];
    let mut out = Vec::new();
    for (i, p) in coords.iter().enumerate() {
        if keep[i] {
            map[i] = out.len();
            out.push(*p);
        }
    }
    let edges = edges
        .iter()
        .filter(|(a, b)| keep[*a] && keep[*b])
        .map(|&(a, b)| (map[a], map[b]))
        .collect();
    Candidates {
        coords: out,
        edges,
        length_cutoff: f64::INFINITY,
    }
}

/// Restricts to the component with the most nodes (lowest label on ties).
pub(crate) fn largest_component(c: &Candidates) -> Candidates {
    let label = components(c.coords.len(), &c.edges);
    let count = label.iter().copied().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0usize; count];
    for &l in &label {
        sizes[l] += 1;
    }
    let best = (0..count).max_by_key(|&l| (sizes[l], std::cmp::Reverse(l))).unwrap_or(0);
    let keep: Vec<bool> = label.iter().map(|&l| l == best).collect();
    restrict(&c.coords, &c.edges, &keep)
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Voronoi centerlines of `points`, clipped to the unit cube, with merged
/// endpoints, long edges removed and only the largest component kept.
pub fn tessellate_and_filter(points: &[Point], options: FilterOptions) -> Result<Candidates> {
    if points.len() < 8 {
        return Err(Error::DegenerateTessellation(format!(
            "need at least 8 seed points, got {}",
            points.len()
        )));
    }
    if points.iter().flatten().any(|x| !(0.0..=1.0).contains(x)) {
        return Err(Error::DegenerateTessellation("seed points must lie in the unit cube".into()));
    }
    let dt = Delaunay::new(points)?;
    if dt.real_tets().is_empty() {
        return Err(Error::DegenerateTessellation("no tetrahedra spanned by the input".into()));
    }
    let mut pool = VertexPool::new(options.merge_tolerance);
    let mut seen = HashSet::new();
    let mut edges = Vec::new();
    for e in dt.voronoi_edges() {
        let Some((a, b)) = clip(&e) else { continue };
        let (i, j) = (pool.id(a), pool.id(b));
        if i != j && seen.insert((i.min(j), i.max(j))) {
            edges.push((i.min(j), i.max(j)));
        }
    }
    let coords = pool.coords;
    if edges.is_empty() {
        return Err(Error::DegenerateTessellation("no Voronoi edges inside the domain".into()));
    }
    let mut lengths: Vec<f64> = edges.iter().map(|&(a, b)| dist(&coords[a], &coords[b])).collect();
    let cutoff = options.long_edge_factor * median(&mut lengths);
    edges.retain(|&(a, b)| dist(&coords[a], &coords[b]) <= cutoff);
    let mut used = vec![false; coords.len()];
    for &(a, b) in &edges {
        used[a] = true;
        used[b] = true;
    }
    let trimmed = restrict(&coords, &edges, &used);
    Ok(Candidates {
        length_cutoff: cutoff,
        ..largest_component(&trimmed)
    })
}

/// Iteratively strips degree-≤1 nodes (the 2-core).
pub fn two_core(c: &Candidates) -> Candidates {
    let n = c.coords.len();
    let mut deg = vec![0usize; n];
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in &c.edges {
        deg[a] += 1;
        deg[b] += 1;
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut keep = vec![true; n];
    let mut stack: Vec<usize> = (0..n).filter(|&i| deg[i] <= 1).collect();
    while let Some(u) = stack.pop() {
        if !keep[u] {
            continue;
        }
        keep[u] = false;
        for &w in &adj[u] {
            if keep[w] {
                deg[w] -= 1;
                if deg[w] == 1 {
                    stack.push(w);
                }
            }
        }
    }
    Candidates {
        length_cutoff: c.length_cutoff,
        ..restrict(&c.coords, &c.edges, &keep)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cube_corners_give_symmetric_star() {
        let pts: Vec<Point> = (0..8)
            .map(|i| [(i & 1) as f64, ((i >> 1) & 1) as f64, ((i >> 2) & 1) as f64])
            .collect();
        let c = tessellate_and_filter(&pts, FilterOptions::default()).unwrap();
        assert_eq!(c.edges.len(), 6);
        let mut ends: Vec<Point> = Vec::new();
        let center = c
            .coords
            .iter()
            .position(|p| p.iter().all(|x| (x - 0.5).abs() < 1e-9))
            .expect("center vertex");
        for &(a, b) in &c.edges {
            assert!(a == center || b == center);
            ends.push(c.coords[if a == center { b } else { a }]);
        }
        for k in 0..3 {
            for side in [0.0, 1.0] {
                assert!(ends.iter().any(|p| (p[k] - side).abs() < 1e-9
                    && (0..3).filter(|&j| j != k).all(|j| (p[j] - 0.5).abs() < 1e-9)));
            }
        }
    }

    #[test]
    fn coplanar_seed_is_degenerate() {
        let pts: Vec<Point> = (0..12).map(|i| [(i % 4) as f64 / 4.0, (i / 4) as f64 / 3.0, 0.5]).collect();
        assert!(matches!(
            tessellate_and_filter(&pts, FilterOptions::default()),
            Err(Error::DegenerateTessellation(_))
        ));
    }

    #[test]
    fn two_core_strips_trees() {
        let c = Candidates {
            coords: vec![[0.0; 3]; 5],
            edges: vec![(0, 1), (1, 2), (2, 0), (2, 3), (3, 4)],
            length_cutoff: f64::INFINITY,
        };
        let core = two_core(&c);
        assert_eq!(core.coords.len(), 3);
        assert_eq!(core.edges.len(), 3);
    }
}
