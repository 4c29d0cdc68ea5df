//! JSON graph and solution files.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::boundary::{BoundaryConditions, BoundaryNode};
use crate::error::{Error, Result};
use crate::graph::{Edge, VascularGraph};
use crate::solution::{FlowSolution, Residuals, Rheology, SolveMeta};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeRecord {
    pub source: usize,
    pub target: usize,
    pub diameter_um: f64,
    pub length_um: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryRecord {
    pub inlets: Vec<BoundaryNode>,
    pub outlets: Vec<BoundaryNode>,
    pub inlet_hematocrit: f64,
}

/// On-disk layout of a graph file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphFile {
    pub format_version: u32,
    pub nodes: Vec<[f64; 3]>,
    pub edges: Vec<EdgeRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary: Option<BoundaryRecord>,
}

impl GraphFile {
    pub fn from_parts(graph: &VascularGraph, bc: Option<&BoundaryConditions>) -> Self {
        let edges = graph
            .edges()
            .iter()
            .zip(graph.diameters())
            .zip(graph.lengths())
            .map(|((e, &d), &l)| EdgeRecord {
                source: e.source,
                target: e.target,
                diameter_um: d,
                length_um: l,
            })
            .collect();
        Self {
            format_version: FORMAT_VERSION,
            nodes: graph.coords().to_vec(),
            edges,
            boundary: bc.map(|b| BoundaryRecord {
                inlets: b.inlets().to_vec(),
                outlets: b.outlets().to_vec(),
                inlet_hematocrit: b.inlet_hematocrit(),
            }),
        }
    }

    fn check_version(&self) -> Result<()> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::schema(
                "format_version",
                format!("unsupported version {} (expected {FORMAT_VERSION})", self.format_version),
            ));
        }
        Ok(())
    }

    fn check_indices(&self) -> Result<()> {
        let n = self.nodes.len();
        for (i, e) in self.edges.iter().enumerate() {
            if e.source >= n {
                return Err(Error::schema(format!("edges[{i}].source"), format!("index {} ≥ node count {n}", e.source)));
            }
            if e.target >= n {
                return Err(Error::schema(format!("edges[{i}].target"), format!("index {} ≥ node count {n}", e.target)));
            }
        }
        if let Some(b) = &self.boundary {
            for (kind, list) in [("inlets", &b.inlets), ("outlets", &b.outlets)] {
                for (k, node) in list.iter().enumerate() {
                    if node.node >= n {
                        return Err(Error::schema(
                            format!("boundary.{kind}[{k}].node"),
                            format!("index {} ≥ node count {n}", node.node),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    fn split(self, relaxed: bool) -> Result<(VascularGraph, Option<BoundaryConditions>)> {
        self.check_version()?;
        self.check_indices()?;
        let mut edges = Vec::with_capacity(self.edges.len());
        let mut diameters = Vec::with_capacity(self.edges.len());
        let mut lengths = Vec::with_capacity(self.edges.len());
        for e in &self.edges {
            edges.push(Edge::new(e.source, e.target));
            diameters.push(e.diameter_um);
            lengths.push(e.length_um);
        }
        let graph = if relaxed {
            VascularGraph::new_relaxed(self.nodes, edges, diameters, lengths)?
        } else {
            VascularGraph::new(self.nodes, edges, diameters, lengths)?
        };
        let bc = self
            .boundary
            .map(|b| BoundaryConditions::new(b.inlets, b.outlets, b.inlet_hematocrit))
            .transpose()?;
        Ok((graph, bc))
    }

    /// Strict conversion: connected graph and boundary section required.
    pub fn into_parts(self) -> Result<(VascularGraph, BoundaryConditions)> {
        let (graph, bc) = self.split(false)?;
        let bc = bc.ok_or_else(|| Error::schema("boundary", "missing field"))?;
        bc.check_against(&graph)?;
        Ok((graph, bc))
    }

    /// Lenient conversion for imported networks: boundary optional,
    /// disconnected graphs accepted.
    pub fn into_parts_lenient(self) -> Result<(VascularGraph, Option<BoundaryConditions>)> {
        let (graph, bc) = self.split(true)?;
        if let Some(b) = &bc {
            b.check_against(&graph)?;
        }
        Ok((graph, bc))
    }
}

/// Parses JSON into `T`, reporting the field path plus line and column on failure.
pub fn from_json_str<T: DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        Error::schema(
            format!("{path} (line {}, column {})", inner.line(), inner.column()),
            inner.to_string(),
        )
    })
}

pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| Error::schema("<root>", e.to_string()))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    from_json_str(&fs::read_to_string(path)?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, to_json_string(value)?)?;
    Ok(())
}

pub fn graph_to_string(graph: &VascularGraph, bc: &BoundaryConditions) -> Result<String> {
    to_json_string(&GraphFile::from_parts(graph, Some(bc)))
}

pub fn graph_from_str(text: &str) -> Result<(VascularGraph, BoundaryConditions)> {
    from_json_str::<GraphFile>(text)?.into_parts()
}

pub fn write_graph(path: &Path, graph: &VascularGraph, bc: &BoundaryConditions) -> Result<()> {
    write_json(path, &GraphFile::from_parts(graph, Some(bc)))
}

pub fn read_graph(path: &Path) -> Result<(VascularGraph, BoundaryConditions)> {
    read_json::<GraphFile>(path)?.into_parts()
}

/// Reads a graph file whose boundary section may be missing.
pub fn read_graph_lenient(path: &Path) -> Result<(VascularGraph, Option<BoundaryConditions>)> {
    read_json::<GraphFile>(path)?.into_parts_lenient()
}

/// On-disk layout of a solution, shared by full-order and surrogate outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionFile {
    pub format_version: u32,
    pub source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rheology: Option<Rheology>,
    pub pressures: Vec<f64>,
    pub flows: Vec<f64>,
    pub velocities: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hematocrits: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node_potentials: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residuals: Option<Residuals>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub converged: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clamp_count: Option<usize>,
}

impl SolutionFile {
    pub fn from_solution(sol: &FlowSolution) -> Self {
        let nonlinear = sol.meta.rheology == Rheology::Nonlinear;
        Self {
            format_version: FORMAT_VERSION,
            source: "fom".into(),
            variant: None,
            rheology: Some(sol.meta.rheology),
            pressures: sol.pressures.clone(),
            flows: sol.flows.clone(),
            velocities: sol.velocities.clone(),
            hematocrits: sol.hematocrits.clone(),
            node_potentials: sol.node_potentials.clone(),
            residuals: Some(sol.meta.residuals),
            iterations: nonlinear.then_some(sol.meta.iterations),
            converged: Some(sol.meta.converged),
            clamp_count: nonlinear.then_some(sol.meta.clamp_count),
        }
    }

    /// Inverse of [`SolutionFile::from_solution`] for full-order files.
    pub fn into_solution(self) -> Result<FlowSolution> {
        let rheology = self
            .rheology
            .ok_or_else(|| Error::schema("rheology", "missing for a full-order solution"))?;
        if self.flows.len() != self.velocities.len() {
            return Err(Error::schema("velocities", "length differs from flows"));
        }
        Ok(FlowSolution {
            pressures: self.pressures,
            flows: self.flows,
            velocities: self.velocities,
            hematocrits: self.hematocrits,
            node_potentials: self.node_potentials,
            meta: SolveMeta {
                rheology,
                iterations: self.iterations.unwrap_or(1),
                converged: self.converged.unwrap_or(true),
                residuals: self.residuals.unwrap_or_default(),
                clamp_count: self.clamp_count.unwrap_or(0),
                last_change: None,
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> (VascularGraph, BoundaryConditions) {
        let g = VascularGraph::new(
            vec![[0.0, 0.0, 0.0], [0.1 + 0.2, 1.0 / 3.0, 1e-300]],
            vec![Edge::new(0, 1)],
            vec![std::f64::consts::PI],
            vec![42.000000000000014],
        )
        .unwrap();
        let bc = BoundaryConditions::new(
            vec![BoundaryNode { node: 0, pressure: 33.3 }],
            vec![BoundaryNode { node: 1, pressure: 10.1 }],
            0.45,
        )
        .unwrap();
        (g, bc)
    }

    #[test]
    fn two_node_round_trip() {
        let (g, bc) = tiny();
        let text = graph_to_string(&g, &bc).unwrap();
        let (g2, bc2) = graph_from_str(&text).unwrap();
        assert_eq!(g, g2);
        assert_eq!(bc, bc2);
    }

    #[test]
    fn out_of_range_edge_is_a_schema_error() {
        let (g, bc) = tiny();
        let mut file = GraphFile::from_parts(&g, Some(&bc));
        file.edges[0].target = 2;
        let text = to_json_string(&file).unwrap();
        match graph_from_str(&text) {
            Err(Error::Schema { location, .. }) => assert_eq!(location, "edges[0].target"),
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_field_reports_path_and_line() {
        let text = r#"{"format_version": 1, "nodes": [[0,0,0]], "edges": [{"source": 0, "target": "x", "diameter_um": 1, "length_um": 1}]}"#;
        match from_json_str::<GraphFile>(text) {
            Err(Error::Schema { location, .. }) => {
                assert!(location.starts_with("edges[0].target"), "{location}");
                assert!(location.contains("line 1"));
            }
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn wrong_version_is_rejected() {
        let (g, bc) = tiny();
        let mut file = GraphFile::from_parts(&g, Some(&bc));
        file.format_version = 2;
        assert!(matches!(file.into_parts(), Err(Error::Schema { .. })));
    }
}
