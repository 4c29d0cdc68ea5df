//! Uniform spatial rescaling to a prescribed surface-to-volume ratio.

use crate::graph::VascularGraph;

/// Lateral vessel surface over domain volume (µm⁻¹ for µm inputs).
pub fn surface_to_volume(graph: &VascularGraph, domain_side: f64) -> f64 {
    graph.lateral_surface() / domain_side.powi(3)
}

#[derive(Debug, Clone)]
pub struct Rescaled {
    pub graph: VascularGraph,
    pub domain_side: f64,
    pub factor: f64,
}

/// Scales coordinates, lengths and the cubic domain by
/// `k = sqrt((S/V) / target)`; diameters are untouched. Since `S ∝ k` and
/// `V ∝ k³`, the result has `S/V = target`.
pub fn rescale_to_sv(graph: &VascularGraph, domain_side: f64, target: f64) -> Rescaled {
    let k = (surface_to_volume(graph, domain_side) / target).sqrt();
    let coords = graph.coords().iter().map(|p| p.map(|x| x * k)).collect();
    let lengths = graph.lengths().iter().map(|l| l * k).collect();
    Rescaled {
        graph: graph.with_geometry(coords, lengths).expect("positive scaling keeps geometry valid"),
        domain_side: domain_side * k,
        factor: k,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Edge;

    fn tube(len: f64) -> VascularGraph {
        VascularGraph::new(vec![[0.0; 3], [len, 0.0, 0.0]], vec![Edge::new(0, 1)], vec![6.0], vec![len]).unwrap()
    }

    #[test]
    fn target_already_met_gives_unit_factor() {
        let g = tube(50.0);
        let sv = surface_to_volume(&g, 100.0);
        let r = rescale_to_sv(&g, 100.0, sv);
        assert!((r.factor - 1.0).abs() < 1e-12);
    }

    #[test]
    fn doubling_lengths_quarters_ratio_and_rescale_restores_it() {
        let g = tube(50.0);
        let target = surface_to_volume(&g, 100.0);
        let doubled = rescale_to_sv(&g, 100.0, target / 4.0);
        assert!((doubled.factor - 2.0).abs() < 1e-12);
        let sv2 = surface_to_volume(&doubled.graph, doubled.domain_side);
        assert!((sv2 / target - 0.25).abs() < 1e-12);
        let back = rescale_to_sv(&doubled.graph, doubled.domain_side, target);
        assert!((surface_to_volume(&back.graph, back.domain_side) / target - 1.0).abs() < 1e-12);
    }
}
