//! Dirichlet boundary sets, node classification and diameter-driven
//! boundary detection for imported networks.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::VascularGraph;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryNode {
    pub node: usize,
    #[serde(rename = "pressure_mmHg")]
    pub pressure: f64,
}

/// Inlet/outlet pressures (mmHg) and the inlet hematocrit.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryConditions {
    inlets: Vec<BoundaryNode>,
    outlets: Vec<BoundaryNode>,
    inlet_hematocrit: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeClass {
    Interior,
    Inlet,
    Outlet,
}

impl BoundaryConditions {
    pub fn new(inlets: Vec<BoundaryNode>, outlets: Vec<BoundaryNode>, inlet_hematocrit: f64) -> Result<Self> {
        if inlets.is_empty() || outlets.is_empty() {
            return Err(Error::InvalidBoundary("inlet and outlet sets must be nonempty".into()));
        }
        let max_index = inlets.iter().chain(&outlets).map(|b| b.node).max().unwrap_or(0);
        let in_idx: Vec<usize> = inlets.iter().map(|b| b.node).collect();
        let out_idx: Vec<usize> = outlets.iter().map(|b| b.node).collect();
        classify_indices(max_index + 1, &in_idx, &out_idx)?;

        if let Some(b) = inlets.iter().chain(&outlets).find(|b| !b.pressure.is_finite()) {
            return Err(Error::InvalidBoundary(format!("node {} has pressure {}", b.node, b.pressure)));
        }
        let min_in = inlets.iter().map(|b| b.pressure).fold(f64::INFINITY, f64::min);
        let max_out = outlets.iter().map(|b| b.pressure).fold(f64::NEG_INFINITY, f64::max);
        if min_in <= max_out {
            return Err(Error::InvalidBoundary(format!(
                "lowest inlet pressure {min_in} does not exceed highest outlet pressure {max_out}"
            )));
        }
        if !(inlet_hematocrit > 0.0 && inlet_hematocrit < 1.0) {
            return Err(Error::InvalidBoundary(format!(
                "inlet hematocrit {inlet_hematocrit} outside (0, 1)"
            )));
        }
        Ok(Self {
            inlets,
            outlets,
            inlet_hematocrit,
        })
    }

    pub fn inlets(&self) -> &[BoundaryNode] {
        &self.inlets
    }

    pub fn outlets(&self) -> &[BoundaryNode] {
        &self.outlets
    }

    pub fn inlet_hematocrit(&self) -> f64 {
        self.inlet_hematocrit
    }

    pub fn max_inlet_pressure(&self) -> f64 {
        self.inlets.iter().map(|b| b.pressure).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_outlet_pressure(&self) -> f64 {
        self.outlets.iter().map(|b| b.pressure).fold(f64::INFINITY, f64::min)
    }

    /// Checks indices against `graph`; returns warnings for boundary nodes
    /// that are not terminal stubs (degree ≠ 1).
    pub fn check_against(&self, graph: &VascularGraph) -> Result<Vec<String>> {
        let n = graph.node_count();
        let mut warnings = Vec::new();
        for b in self.inlets.iter().chain(&self.outlets) {
            if b.node >= n {
                return Err(Error::InvalidBoundary(format!(
                    "boundary node {} out of range for {n} nodes",
                    b.node
                )));
            }
            let d = graph.degree(b.node);
            if d != 1 {
                warnings.push(format!("boundary node {} has degree {d}", b.node));
            }
        }
        Ok(warnings)
    }

    /// Nodal vector P̄: prescribed pressure on boundary nodes, 0 elsewhere.
    pub fn pressure_vector(&self, node_count: usize) -> Vec<f64> {
        let mut p = vec![0.0; node_count];
        for b in self.inlets.iter().chain(&self.outlets) {
            p[b.node] = b.pressure;
        }
        p
    }

    pub fn classes(&self, node_count: usize) -> Vec<NodeClass> {
        let mut c = vec![NodeClass::Interior; node_count];
        for b in &self.inlets {
            c[b.node] = NodeClass::Inlet;
        }
        for b in &self.outlets {
            c[b.node] = NodeClass::Outlet;
        }
        c
    }
}

/// Labels every node as interior, inlet or outlet.
pub fn classify_nodes(graph: &VascularGraph, bc: &BoundaryConditions) -> Result<Vec<NodeClass>> {
    bc.check_against(graph)?;
    let inlets: Vec<usize> = bc.inlets().iter().map(|b| b.node).collect();
    let outlets: Vec<usize> = bc.outlets().iter().map(|b| b.node).collect();
    classify_indices(graph.node_count(), &inlets, &outlets)
}

/// Index-level classification; rejects overlapping, duplicated or
/// out-of-range boundary indices.
pub fn classify_indices(node_count: usize, inlets: &[usize], outlets: &[usize]) -> Result<Vec<NodeClass>> {
    let mut classes = vec![NodeClass::Interior; node_count];
    for &j in inlets {
        if j >= node_count {
            return Err(Error::InvalidBoundary(format!("inlet {j} out of range")));
        }
        if classes[j] != NodeClass::Interior {
            return Err(Error::InvalidBoundary(format!("inlet {j} listed twice")));
        }
        classes[j] = NodeClass::Inlet;
    }
    for &j in outlets {
        if j >= node_count {
            return Err(Error::InvalidBoundary(format!("outlet {j} out of range")));
        }
        match classes[j] {
            NodeClass::Inlet => return Err(Error::OverlappingBoundary(j)),
            NodeClass::Outlet => return Err(Error::InvalidBoundary(format!("outlet {j} listed twice"))),
            NodeClass::Interior => classes[j] = NodeClass::Outlet,
        }
    }
    Ok(classes)
}

/// Boundary index sets without pressures.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundarySets {
    pub inlets: Vec<usize>,
    pub outlets: Vec<usize>,
}

impl BoundarySets {
    /// Attaches uniform inlet/outlet pressures.
    pub fn with_pressures(&self, inlet_pressure: f64, outlet_pressure: f64, inlet_hematocrit: f64) -> Result<BoundaryConditions> {
        BoundaryConditions::new(
            self.inlets
                .iter()
                .map(|&node| BoundaryNode { node, pressure: inlet_pressure })
                .collect(),
            self.outlets
                .iter()
                .map(|&node| BoundaryNode { node, pressure: outlet_pressure })
                .collect(),
            inlet_hematocrit,
        )
    }
}

/// Nodes reached from `root` by walking (in either direction) only through
/// edges with diameter strictly above `threshold`. The root itself is not
/// included. Sorted ascending.
pub fn large_vessel_region(graph: &VascularGraph, root: usize, threshold: f64) -> Vec<usize> {
    let n = graph.node_count();
    let mut seen = vec![false; n];
    seen[root] = true;
    let mut queue = VecDeque::from([root]);
    let mut out = Vec::new();
    while let Some(u) = queue.pop_front() {
        for &e in graph.incident_edges(u) {
            if graph.diameters()[e] <= threshold {
                continue;
            }
            let w = graph.edges()[e].other(u);
            if !seen[w] {
                seen[w] = true;
                out.push(w);
                queue.push_back(w);
            }
        }
    }
    out.sort_unstable();
    out
}

/// Inlets are the large-vessel region of the arterial root, outlets the one of
/// the venous root (diameter strictly above `threshold`, µm).
pub fn detect_boundaries_by_diameter(
    graph: &VascularGraph,
    arterial_root: usize,
    venous_root: usize,
    threshold: f64,
) -> Result<BoundarySets> {
    let n = graph.node_count();
    if arterial_root >= n || venous_root >= n {
        return Err(Error::InvalidBoundary(format!(
            "roots ({arterial_root}, {venous_root}) out of range for {n} nodes"
        )));
    }
    if !(threshold > 0.0) {
        return Err(Error::InvalidBoundary(format!("threshold {threshold} must be positive")));
    }
    let inlets = large_vessel_region(graph, arterial_root, threshold);
    if inlets.is_empty() {
        return Err(Error::EmptyBoundary("inlet"));
    }
    let outlets = large_vessel_region(graph, venous_root, threshold);
    if outlets.is_empty() {
        return Err(Error::EmptyBoundary("outlet"));
    }
    classify_indices(n, &inlets, &outlets)?;
    Ok(BoundarySets { inlets, outlets })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Edge;

    fn graph(n: usize, edges: &[(usize, usize)], diameters: &[f64]) -> VascularGraph {
        VascularGraph::new(
            (0..n).map(|i| [i as f64, 0.0, 0.0]).collect(),
            edges.iter().map(|&(s, t)| Edge::new(s, t)).collect(),
            diameters.to_vec(),
            vec![10.0; edges.len()],
        )
        .unwrap()
    }

    fn bn(node: usize, pressure: f64) -> BoundaryNode {
        BoundaryNode { node, pressure }
    }

    #[test]
    fn interior_nodes_of_a_chain() {
        let g = graph(4, &[(0, 1), (1, 2), (2, 3)], &[5.0; 3]);
        let bc = BoundaryConditions::new(vec![bn(0, 30.0)], vec![bn(3, 10.0)], 0.45).unwrap();
        let classes = classify_nodes(&g, &bc).unwrap();
        let interior: Vec<usize> = (0..4).filter(|&j| classes[j] == NodeClass::Interior).collect();
        assert_eq!(interior, vec![1, 2]);
    }

    #[test]
    fn overlapping_sets_are_rejected() {
        assert!(matches!(classify_indices(4, &[0], &[0]), Err(Error::OverlappingBoundary(0))));
        assert!(matches!(
            BoundaryConditions::new(vec![bn(0, 30.0)], vec![bn(0, 10.0)], 0.45),
            Err(Error::OverlappingBoundary(0))
        ));
    }

    #[test]
    fn pressure_ordering_is_enforced() {
        assert!(BoundaryConditions::new(vec![bn(0, 10.0)], vec![bn(3, 10.0)], 0.45).is_err());
        assert!(BoundaryConditions::new(vec![bn(0, f64::NAN)], vec![bn(3, 10.0)], 0.45).is_err());
        assert!(BoundaryConditions::new(vec![bn(0, 30.0)], vec![bn(3, 10.0)], 1.0).is_err());
        assert!(BoundaryConditions::new(vec![], vec![bn(3, 10.0)], 0.4).is_err());
    }

    #[test]
    fn small_chain_yields_empty_boundary() {
        let g = graph(4, &[(0, 1), (1, 2), (2, 3)], &[5.0; 3]);
        assert!(matches!(
            detect_boundaries_by_diameter(&g, 0, 3, 12.0),
            Err(Error::EmptyBoundary("inlet"))
        ));
    }

    #[test]
    fn star_spokes_above_threshold_become_inlets() {
        // root 0 with spokes 1, 2, 3; venous side 3 -> 4 -> 5 (large)
        let g = graph(
            6,
            &[(0, 1), (0, 2), (0, 3), (3, 4), (4, 5)],
            &[15.0, 15.0, 5.0, 5.0, 20.0],
        );
        let sets = detect_boundaries_by_diameter(&g, 0, 5, 12.0).unwrap();
        assert_eq!(sets.inlets, vec![1, 2]);
        assert_eq!(sets.outlets, vec![4]);
    }

    #[test]
    fn non_stub_boundary_nodes_produce_warnings() {
        let g = graph(4, &[(0, 1), (1, 2), (2, 3)], &[5.0; 3]);
        let bc = BoundaryConditions::new(vec![bn(1, 30.0)], vec![bn(3, 10.0)], 0.45).unwrap();
        assert_eq!(bc.check_against(&g).unwrap().len(), 1);
    }
}
