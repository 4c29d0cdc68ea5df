//! Input features, physics context and training targets for one graph.

use std::sync::Arc;

use capillary_core::boundary::NodeClass;
use capillary_core::linear::{constant_resistances, edge_resistance};
use capillary_core::{BoundaryConditions, FlowSolution, RheologyParams, VascularGraph};
use capillary_nn::{Index, Tensor};

use crate::config::{FeatureScales, GnnConfig, Variant};
use crate::error::{GnnError, Result};
use crate::transform::velocity_transform;

pub const NODE_FEATURES: usize = 6;

/// Normalised inputs on the symmetrised graph. Rows `0..m` of the edge
/// arrays are the physical edges in stored orientation, rows `m..2m` their
/// reversed companions.
#[derive(Debug, Clone)]
pub struct GraphInputs {
    pub node_count: usize,
    pub edge_count: usize,
    /// `[P_in or 0, P_out or 0, max P_in, min P_out, inlet flag, outlet flag]`.
    pub node_features: Tensor,
    /// `[D, L]` or `[D, L, H_in]`, duplicated for both directions.
    pub edge_features: Tensor,
    pub senders: Index,
    pub receivers: Index,
}

pub fn build_features(graph: &VascularGraph, bc: &BoundaryConditions, variant: Variant, scales: FeatureScales) -> GraphInputs {
    let n = graph.node_count();
    let m = graph.edge_count();
    let p_max = bc.max_inlet_pressure() / scales.pressure;
    let p_min = bc.min_outlet_pressure() / scales.pressure;
    let mut nodes = vec![0.0; n * NODE_FEATURES];
    for row in nodes.chunks_mut(NODE_FEATURES) {
        row[2] = p_max;
        row[3] = p_min;
    }
    for b in bc.inlets() {
        nodes[b.node * NODE_FEATURES] = b.pressure / scales.pressure;
        nodes[b.node * NODE_FEATURES + 4] = 1.0;
    }
    for b in bc.outlets() {
        nodes[b.node * NODE_FEATURES + 1] = b.pressure / scales.pressure;
        nodes[b.node * NODE_FEATURES + 5] = 1.0;
    }

    let width = variant.edge_feature_dim();
    let mut edge_rows = Vec::with_capacity(m * width);
    for (&d, &l) in graph.diameters().iter().zip(graph.lengths()) {
        edge_rows.push(d / scales.diameter);
        edge_rows.push(l / scales.length);
        if width == 3 {
            edge_rows.push(bc.inlet_hematocrit());
        }
    }
    let mut edges = edge_rows.clone();
    edges.extend_from_slice(&edge_rows);

    let mut senders = Vec::with_capacity(2 * m);
    let mut receivers = Vec::with_capacity(2 * m);
    for e in graph.edges() {
        senders.push(e.source);
        receivers.push(e.target);
    }
    for e in graph.edges() {
        senders.push(e.target);
        receivers.push(e.source);
    }

    GraphInputs {
        node_count: n,
        edge_count: m,
        node_features: Tensor::new(n, NODE_FEATURES, nodes).expect("node feature shape"),
        edge_features: Tensor::new(2 * m, width, edges).expect("edge feature shape"),
        senders: Arc::from(senders),
        receivers: Arc::from(receivers),
    }
}

/// Graph quantities needed by the physics residuals.
#[derive(Debug, Clone)]
pub struct PhysicsContext {
    pub node_count: usize,
    pub sources: Index,
    pub targets: Index,
    /// Nodes that are neither inlets nor outlets.
    pub interior: Index,
    pub diameters: Vec<f64>,
    /// Constant-viscosity resistances (mmHg·s/µm³).
    pub linear_resistance: Vec<f64>,
    /// `128 L / (π D⁴)` in resistance units per cP.
    pub geometric_resistance: Vec<f64>,
    pub plasma_viscosity: f64,
    /// Hematocrit clamp applied before the viscosity law.
    pub max_hematocrit: f64,
}

impl PhysicsContext {
    pub fn new(graph: &VascularGraph, bc: &BoundaryConditions, params: &RheologyParams) -> Self {
        let n = graph.node_count();
        let classes = bc.classes(n);
        let interior: Vec<usize> = (0..n).filter(|&i| classes[i] == NodeClass::Interior).collect();
        Self {
            node_count: n,
            sources: graph.edges().iter().map(|e| e.source).collect(),
            targets: graph.edges().iter().map(|e| e.target).collect(),
            interior: Arc::from(interior),
            diameters: graph.diameters().to_vec(),
            linear_resistance: constant_resistances(graph, params.viscosity),
            geometric_resistance: graph
                .diameters()
                .iter()
                .zip(graph.lengths())
                .map(|(&d, &l)| edge_resistance(d, l, 1.0))
                .collect(),
            plasma_viscosity: params.plasma_viscosity,
            max_hematocrit: 0.95,
        }
    }

    pub fn edge_count(&self) -> usize {
        self.sources.len()
    }
}

/// Full-order targets in model units: `P / pressure scale`, `T_v(Q)` and `H`.
#[derive(Debug, Clone)]
pub struct Targets {
    pub pressure: Tensor,
    pub velocity: Option<Tensor>,
    pub hematocrit: Option<Tensor>,
}

impl Targets {
    pub fn from_solution(sol: &FlowSolution, graph: &VascularGraph, config: &GnnConfig) -> Result<Self> {
        let s = config.scales.pressure;
        let pressure = Tensor::column(sol.pressures.iter().map(|p| p / s).collect());
        let velocity = Tensor::column(
            sol.flows
                .iter()
                .zip(graph.diameters())
                .map(|(&q, &d)| velocity_transform(q, d, config.k_v))
                .collect(),
        );
        let hematocrit = match (&sol.hematocrits, config.variant.predicts_hematocrit()) {
            (Some(h), _) => Some(Tensor::column(h.clone())),
            (None, true) => return Err(GnnError::MissingTarget("hematocrit")),
            (None, false) => None,
        };
        Ok(Self {
            pressure,
            velocity: Some(velocity),
            hematocrit,
        })
    }
}

/// Everything one training or evaluation step needs for a graph.
#[derive(Debug, Clone)]
pub struct Sample {
    pub inputs: GraphInputs,
    pub physics: PhysicsContext,
    pub targets: Option<Targets>,
}

impl Sample {
    pub fn new(
        graph: &VascularGraph,
        bc: &BoundaryConditions,
        solution: Option<&FlowSolution>,
        config: &GnnConfig,
        params: &RheologyParams,
    ) -> Result<Self> {
        Ok(Self {
            inputs: build_features(graph, bc, config.variant, config.scales),
            physics: PhysicsContext::new(graph, bc, params),
            targets: solution.map(|s| Targets::from_solution(s, graph, config)).transpose()?,
        })
    }
}
