//! Oriented vascular graph and its incidence algebra.

use std::collections::HashSet;

use crate::error::{Error, Result};

/// Oriented vessel segment between two node indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Edge {
    pub source: usize,
    pub target: usize,
}

impl Edge {
    pub fn new(source: usize, target: usize) -> Self {
        Self { source, target }
    }

    /// The endpoint of this edge that is not `node`.
    pub fn other(&self, node: usize) -> usize {
        if self.source == node {
            self.target
        } else {
            self.source
        }
    }
}

/// Immutable oriented graph with node coordinates and per-edge geometry.
///
/// Coordinates, diameters and lengths are in µm. Construction validates the
/// index, geometry and (unless explicitly relaxed) connectivity invariants.
#[derive(Debug, Clone)]
pub struct VascularGraph {
    coords: Vec<[f64; 3]>,
    edges: Vec<Edge>,
    diameters: Vec<f64>,
    lengths: Vec<f64>,
    // CSR node -> incident edge ids
    offsets: Vec<usize>,
    incident: Vec<usize>,
    connected: bool,
}

impl PartialEq for VascularGraph {
    fn eq(&self, other: &Self) -> bool {
        self.coords == other.coords
            && self.edges == other.edges
            && self.diameters == other.diameters
            && self.lengths == other.lengths
    }
}

impl VascularGraph {
    /// Builds a graph and rejects it unless it is weakly connected.
    pub fn new(
        coords: Vec<[f64; 3]>,
        edges: Vec<Edge>,
        diameters: Vec<f64>,
        lengths: Vec<f64>,
    ) -> Result<Self> {
        let graph = Self::new_relaxed(coords, edges, diameters, lengths)?;
        if !graph.connected {
            return Err(Error::InvalidGraph(format!(
                "graph is not weakly connected ({} components)",
                graph.component_count()
            )));
        }
        Ok(graph)
    }

    /// Like [`VascularGraph::new`] but accepts disconnected graphs; check
    /// [`VascularGraph::is_weakly_connected`] afterwards. Used for imports.
    pub fn new_relaxed(
        coords: Vec<[f64; 3]>,
        edges: Vec<Edge>,
        diameters: Vec<f64>,
        lengths: Vec<f64>,
    ) -> Result<Self> {
        let n = coords.len();
        let m = edges.len();
        if n == 0 {
            return Err(Error::InvalidGraph("graph has no nodes".into()));
        }
        if m == 0 {
            return Err(Error::InvalidGraph("graph has no edges".into()));
        }
        if diameters.len() != m || lengths.len() != m {
            return Err(Error::InvalidGraph(format!(
                "{m} edges but {} diameters and {} lengths",
                diameters.len(),
                lengths.len()
            )));
        }
        for (j, c) in coords.iter().enumerate() {
            if c.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidGraph(format!("node {j} has non-finite coordinates")));
            }
        }
        let mut seen = HashSet::with_capacity(m);
        for (i, e) in edges.iter().enumerate() {
            if e.source >= n || e.target >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge {i} references node {} but the graph has {n} nodes",
                    e.source.max(e.target)
                )));
            }
            if e.source == e.target {
                return Err(Error::InvalidGraph(format!("edge {i} is a self-loop at node {}", e.source)));
            }
            if !seen.insert((e.source, e.target)) {
                return Err(Error::InvalidGraph(format!(
                    "edge {i} duplicates ({}, {})",
                    e.source, e.target
                )));
            }
            if !(diameters[i].is_finite() && diameters[i] > 0.0) {
                return Err(Error::InvalidGraph(format!("edge {i} has diameter {}", diameters[i])));
            }
            if !(lengths[i].is_finite() && lengths[i] > 0.0) {
                return Err(Error::InvalidGraph(format!("edge {i} has length {}", lengths[i])));
            }
        }

        let mut degree = vec![0usize; n];
        for e in &edges {
            degree[e.source] += 1;
            degree[e.target] += 1;
        }
        let mut offsets = vec![0usize; n + 1];
        for j in 0..n {
            offsets[j + 1] = offsets[j] + degree[j];
        }
        let mut fill = offsets.clone();
        let mut incident = vec![0usize; 2 * m];
        for (i, e) in edges.iter().enumerate() {
            incident[fill[e.source]] = i;
            fill[e.source] += 1;
            incident[fill[e.target]] = i;
            fill[e.target] += 1;
        }

        let mut graph = Self {
            coords,
            edges,
            diameters,
            lengths,
            offsets,
            incident,
            connected: false,
        };
        graph.connected = graph.component_count() == 1;
        Ok(graph)
    }

    pub fn node_count(&self) -> usize {
        self.coords.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn coords(&self) -> &[[f64; 3]] {
        &self.coords
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn diameters(&self) -> &[f64] {
        &self.diameters
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn is_weakly_connected(&self) -> bool {
        self.connected
    }

    /// Edge ids touching `node`, in insertion order.
    pub fn incident_edges(&self, node: usize) -> &[usize] {
        &self.incident[self.offsets[node]..self.offsets[node + 1]]
    }

    pub fn degree(&self, node: usize) -> usize {
        self.offsets[node + 1] - self.offsets[node]
    }

    pub fn max_degree(&self) -> usize {
        (0..self.node_count()).map(|j| self.degree(j)).max().unwrap_or(0)
    }

    /// Weak-component label per node, labels dense from 0.
    pub fn component_labels(&self) -> Vec<usize> {
        let n = self.node_count();
        let mut label = vec![usize::MAX; n];
        let mut next = 0;
        let mut stack = Vec::new();
        for start in 0..n {
            if label[start] != usize::MAX {
                continue;
            }
            label[start] = next;
            stack.push(start);
            while let Some(u) = stack.pop() {
                for &e in self.incident_edges(u) {
                    let w = self.edges[e].other(u);
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

    pub fn component_count(&self) -> usize {
        self.component_labels().into_iter().max().map_or(0, |c| c + 1)
    }

    /// New graph with replaced diameters; all other fields are shared.
    pub fn with_diameters(&self, diameters: Vec<f64>) -> Result<Self> {
        Self::rebuild(self, self.coords.clone(), diameters, self.lengths.clone())
    }

    /// New graph with replaced coordinates and lengths.
    pub fn with_geometry(&self, coords: Vec<[f64; 3]>, lengths: Vec<f64>) -> Result<Self> {
        Self::rebuild(self, coords, self.diameters.clone(), lengths)
    }

    fn rebuild(&self, coords: Vec<[f64; 3]>, diameters: Vec<f64>, lengths: Vec<f64>) -> Result<Self> {
        if self.connected {
            Self::new(coords, self.edges.clone(), diameters, lengths)
        } else {
            Self::new_relaxed(coords, self.edges.clone(), diameters, lengths)
        }
    }

    /// Total lateral vessel surface Σ π D L (µm²).
    pub fn lateral_surface(&self) -> f64 {
        self.diameters
            .iter()
            .zip(&self.lengths)
            .map(|(d, l)| std::f64::consts::PI * d * l)
            .sum()
    }
}

/// Signed m×n edge-node incidence matrix: −1 at the source, +1 at the target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IncidenceMatrix {
    node_count: usize,
    // (column of −1, column of +1) per row
    rows: Vec<(usize, usize)>,
}

pub fn build_incidence(graph: &VascularGraph) -> IncidenceMatrix {
    IncidenceMatrix {
        node_count: graph.node_count(),
        rows: graph.edges().iter().map(|e| (e.source, e.target)).collect(),
    }
}

impl IncidenceMatrix {
    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.node_count
    }

    pub fn get(&self, row: usize, col: usize) -> i8 {
        let (minus, plus) = self.rows[row];
        if col == plus {
            1
        } else if col == minus {
            -1
        } else {
            0
        }
    }

    /// The two nonzeros of a row as `[(col, -1), (col, +1)]`.
    pub fn row_entries(&self, row: usize) -> [(usize, i8); 2] {
        let (minus, plus) = self.rows[row];
        [(minus, -1), (plus, 1)]
    }

    /// `C x` for a nodal vector: `x[target] − x[source]` per edge.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.node_count);
        self.rows.iter().map(|&(s, t)| x[t] - x[s]).collect()
    }

    /// `Cᵀ y` for an edge vector: net signed inflow per node.
    pub fn apply_transpose(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.rows.len());
        let mut out = vec![0.0; self.node_count];
        for (&(s, t), &v) in self.rows.iter().zip(y) {
            out[s] -= v;
            out[t] += v;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn straight(n: usize) -> VascularGraph {
        let coords = (0..n).map(|i| [i as f64, 0.0, 0.0]).collect();
        let edges = (0..n - 1).map(|i| Edge::new(i, i + 1)).collect();
        VascularGraph::new(coords, edges, vec![5.0; n - 1], vec![1.0; n - 1]).unwrap()
    }

    #[test]
    fn single_edge_incidence_row() {
        let c = build_incidence(&straight(2));
        assert_eq!((c.get(0, 0), c.get(0, 1)), (-1, 1));
    }

    #[test]
    fn path_incidence_rows() {
        let c = build_incidence(&straight(3));
        let dense: Vec<Vec<i8>> = (0..2).map(|i| (0..3).map(|j| c.get(i, j)).collect()).collect();
        assert_eq!(dense, vec![vec![-1, 1, 0], vec![0, -1, 1]]);
    }

    #[test]
    fn rejects_invalid_structure() {
        let c = vec![[0.0; 3]; 2];
        assert!(VascularGraph::new(c.clone(), vec![Edge::new(0, 2)], vec![1.0], vec![1.0]).is_err());
        assert!(VascularGraph::new(c.clone(), vec![Edge::new(1, 1)], vec![1.0], vec![1.0]).is_err());
        assert!(VascularGraph::new(c.clone(), vec![Edge::new(0, 1)], vec![0.0], vec![1.0]).is_err());
        assert!(VascularGraph::new(c.clone(), vec![Edge::new(0, 1)], vec![1.0], vec![-1.0]).is_err());
        assert!(VascularGraph::new(
            c,
            vec![Edge::new(0, 1), Edge::new(0, 1)],
            vec![1.0; 2],
            vec![1.0; 2]
        )
        .is_err());
    }

    #[test]
    fn connectivity_is_enforced_unless_relaxed() {
        let c = vec![[0.0; 3]; 4];
        let e = vec![Edge::new(0, 1), Edge::new(2, 3)];
        assert!(VascularGraph::new(c.clone(), e.clone(), vec![1.0; 2], vec![1.0; 2]).is_err());
        let g = VascularGraph::new_relaxed(c, e, vec![1.0; 2], vec![1.0; 2]).unwrap();
        assert!(!g.is_weakly_connected());
        assert_eq!(g.component_count(), 2);
    }

    #[test]
    fn transpose_is_adjoint() {
        let g = straight(5);
        let c = build_incidence(&g);
        let x = [1.0, -2.0, 0.5, 4.0, 3.0];
        let y = [0.3, 1.1, -0.7, 2.0];
        let lhs: f64 = c.apply(&x).iter().zip(&y).map(|(a, b)| a * b).sum();
        let rhs: f64 = c.apply_transpose(&y).iter().zip(&x).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-12);
    }
}
