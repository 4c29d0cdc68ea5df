#![allow(dead_code)]

use capillary_core::{
    solve_linear, solve_nonlinear, BoundaryConditions, BoundaryNode, Edge, FixedPointConfig, FlowSolution, RheologyParams,
    VascularGraph,
};
use capillary_gnn::{GnnConfig, Variant};

/// Ten nodes: one inlet feeding two loops that drain to two outlets.
pub fn ten_node_network() -> (VascularGraph, BoundaryConditions) {
    let pairs = [(0, 1), (1, 2), (1, 3), (2, 4), (3, 4), (4, 5), (5, 6), (5, 7), (6, 8), (7, 9)];
    let coords: Vec<[f64; 3]> = (0..10).map(|i| [i as f64 * 10.0, (i % 3) as f64 * 7.0, (i % 2) as f64]).collect();
    let edges = pairs.iter().map(|&(a, b)| Edge::new(a, b)).collect();
    let diameters = vec![11.0, 8.0, 6.5, 7.0, 5.0, 9.0, 6.0, 7.5, 5.5, 4.5];
    let lengths = vec![40.0, 55.0, 35.0, 60.0, 45.0, 30.0, 70.0, 50.0, 25.0, 65.0];
    let graph = VascularGraph::new(coords, edges, diameters, lengths).unwrap();
    let bc = BoundaryConditions::new(
        vec![BoundaryNode { node: 0, pressure: 33.0 }],
        vec![BoundaryNode { node: 8, pressure: 12.0 }, BoundaryNode { node: 9, pressure: 14.5 }],
        0.45,
    )
    .unwrap();
    (graph, bc)
}

pub fn solve_for(variant: Variant, graph: &VascularGraph, bc: &BoundaryConditions) -> FlowSolution {
    let params = RheologyParams::default();
    match variant {
        Variant::Model4 => solve_nonlinear(graph, bc, &params, &FixedPointConfig::default()).unwrap(),
        _ => solve_linear(graph, bc, &params).unwrap(),
    }
}

/// A reduced architecture so finite differences over every weight stay cheap.
pub fn small_config(variant: Variant, seed: u64) -> GnnConfig {
    GnnConfig {
        variant,
        latent: 4,
        steps: 3,
        skip: 2,
        update_hidden_layers: 2,
        message_hidden_layers: 1,
        codec_hidden_layers: 1,
        seed,
        ..GnnConfig::default()
    }
}
