//! Synthetic capillary networks: layered seeding, Voronoi centerlines,
//! boundary stubs, shortest-path selection, trifurcation removal, Murray
//! diameters and surface-to-volume rescaling.

pub mod delaunay;
pub mod diameters;
pub mod rescale;
pub mod tessellate;
pub mod topology;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::boundary::{BoundaryConditions, BoundaryNode};
use crate::error::{Error, Result};
use crate::graph::{Edge, VascularGraph};
use crate::units::UM_INV_PER_M_INV;

pub use delaunay::Point;
pub use diameters::{assign_diameters, murray_daughter, murray_parent};
pub use rescale::{rescale_to_sv, surface_to_volume, Rescaled};
pub use tessellate::{tessellate_and_filter, two_core, Candidates, FilterOptions};
pub use topology::{attach_stubs, orient_by_flow, remove_trifurcations, select_paths, StubbedNetwork};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub seed: u64,
    /// Relative seed densities of the bottom, middle and top layers.
    pub layer_densities: [f64; 3],
    pub inlet_count_range: [usize; 2],
    /// Outlets per inlet.
    pub outlet_ratio: f64,
    /// Seed points per inlet; controls network size.
    pub points_per_inlet: f64,
    /// `[D_min, D_max]` in µm.
    pub diameter_bounds: [f64; 2],
    /// Target surface-to-volume ratio in m⁻¹.
    pub target_sv: f64,
    pub inlet_pressure_range: [f64; 2],
    pub outlet_pressure_range: [f64; 2],
    pub inlet_hematocrit: f64,
    pub merge_tolerance: f64,
    pub long_edge_factor: f64,
    pub max_attempts: usize,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            layer_densities: [1.0, 1.5, 1.0],
            inlet_count_range: [10, 15],
            outlet_ratio: 2.0,
            points_per_inlet: 2.5,
            diameter_bounds: [4.0, 12.0],
            target_sv: 7000.0,
            inlet_pressure_range: [30.0, 35.0],
            outlet_pressure_range: [10.0, 15.0],
            inlet_hematocrit: 0.45,
            merge_tolerance: 1e-4,
            long_edge_factor: 3.0,
            max_attempts: 10,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.layer_densities.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
            return bad(format!("layer densities must be positive: {:?}", self.layer_densities));
        }
        let [lo, hi] = self.inlet_count_range;
        if lo == 0 || lo > hi {
            return bad(format!("invalid inlet count range {lo}..={hi}"));
        }
        let [dmin, dmax] = self.diameter_bounds;
        if !(dmin > 0.0 && dmin < dmax && dmax.is_finite()) {
            return bad(format!("need 0 < D_min ({dmin}) < D_max ({dmax})"));
        }
        let [pil, pih] = self.inlet_pressure_range;
        let [pol, poh] = self.outlet_pressure_range;
        if !(pil <= pih && pol <= poh && pil > poh && pol.is_finite() && pih.is_finite()) {
            return bad(format!(
                "pressure ranges must be ordered with inlet low {pil} above outlet high {poh}"
            ));
        }
        for (name, v) in [
            ("target_sv", self.target_sv),
            ("outlet_ratio", self.outlet_ratio),
            ("points_per_inlet", self.points_per_inlet),
            ("merge_tolerance", self.merge_tolerance),
            ("long_edge_factor", self.long_edge_factor),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.inlet_hematocrit > 0.0 && self.inlet_hematocrit < 1.0) {
            return bad(format!("inlet hematocrit {} outside (0, 1)", self.inlet_hematocrit));
        }
        if self.max_attempts == 0 {
            return bad("max_attempts must be at least 1".into());
        }
        Ok(())
    }
}

/// A generated network with its boundary conditions and cubic domain edge (µm).
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedNetwork {
    pub graph: VascularGraph,
    pub bc: BoundaryConditions,
    pub domain_side: f64,
}

/// Uniform points in three horizontal slabs of the unit cube, with counts
/// proportional to the slab densities.
pub fn seed_points<R: Rng>(count: usize, densities: [f64; 3], rng: &mut R) -> Vec<Point> {
    let total: f64 = densities.iter().sum();
    let mut counts = densities.map(|d| (count as f64 * d / total).round() as usize);
    let assigned: usize = counts.iter().sum();
    if assigned < count {
        counts[1] += count - assigned;
    }
    let mut pts = Vec::with_capacity(count);
    for (layer, &c) in counts.iter().enumerate() {
        let z0 = layer as f64 / 3.0;
        for _ in 0..c {
            pts.push([rng.gen::<f64>(), rng.gen::<f64>(), z0 + rng.gen::<f64>() / 3.0]);
        }
    }
    pts
}

struct StageError(&'static str, Error);

fn stage<T>(name: &'static str, r: Result<T>) -> std::result::Result<T, StageError> {
    r.map_err(|e| StageError(name, e))
}

fn attempt(config: &GeneratorConfig, rng: &mut ChaCha8Rng) -> std::result::Result<GeneratedNetwork, StageError> {
    let [lo, hi] = config.inlet_count_range;
    let n_in = rng.gen_range(lo..=hi);
    let n_out = ((n_in as f64 * config.outlet_ratio).round() as usize).max(1);
    let n_points = ((config.points_per_inlet * n_in as f64).round() as usize).max(8);
    let points = seed_points(n_points, config.layer_densities, rng);

    let candidates = stage(
        "tessellation",
        tessellate_and_filter(&points, FilterOptions {
            merge_tolerance: config.merge_tolerance,
            long_edge_factor: config.long_edge_factor,
        }),
    )?;
    let core = two_core(&candidates);
    let stubbed = attach_stubs(&core, n_in, n_out, 10.0 * config.merge_tolerance).ok_or_else(|| {
        StageError(
            "stubs",
            Error::InvalidConfig(format!("{} core vertices cannot host {n_in}+{n_out} stubs", core.coords.len())),
        )
    })?;
    let selected = select_paths(&stubbed);

    let net = &selected.network;
    let edges: Vec<Edge> = net.edges.iter().map(|&(a, b)| Edge::new(a, b)).collect();
    let lengths: Vec<f64> = net.edges.iter().map(|&(a, b)| tessellate::dist(&net.coords[a], &net.coords[b])).collect();
    let [d_min, d_max] = config.diameter_bounds;
    let graph = stage(
        "selection",
        VascularGraph::new(net.coords.clone(), edges, vec![d_max; lengths.len()], lengths),
    )?;
    let graph = remove_trifurcations(&graph);

    let [pil, pih] = config.inlet_pressure_range;
    let [pol, poh] = config.outlet_pressure_range;
    let mut sample = |lo: f64, hi: f64| if lo < hi { rng.gen_range(lo..=hi) } else { lo };
    let inlets: Vec<BoundaryNode> = selected
        .inlets
        .iter()
        .map(|&node| BoundaryNode { node, pressure: sample(pil, pih) })
        .collect();
    let outlets: Vec<BoundaryNode> = selected
        .outlets
        .iter()
        .map(|&node| BoundaryNode { node, pressure: sample(pol, poh) })
        .collect();
    let bc = stage("boundary", BoundaryConditions::new(inlets, outlets, config.inlet_hematocrit))?;

    let provisional: Vec<f64> = (0..graph.edge_count()).map(|_| rng.gen_range(d_min..=d_max)).collect();
    let oriented = stage("orientation", orient_by_flow(&graph, &bc, provisional))?;
    let diameters = assign_diameters(&oriented.graph, &oriented.order, &bc, config.diameter_bounds, rng);
    let graph = stage("diameters", oriented.graph.with_diameters(diameters))?;

    let scaled = rescale_to_sv(&graph, 1.0, config.target_sv * UM_INV_PER_M_INV);
    Ok(GeneratedNetwork {
        graph: scaled.graph,
        bc,
        domain_side: scaled.domain_side,
    })
}

/// Generates one network. Each attempt draws from its own ChaCha stream of
/// `config.seed`, so the result is a pure function of the configuration.
pub fn generate_network(config: &GeneratorConfig) -> Result<GeneratedNetwork> {
    config.validate()?;
    let mut last = "none";
    for k in 0..config.max_attempts {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(k as u64);
        match attempt(config, &mut rng) {
            Ok(net) => return Ok(net),
            Err(StageError(name, err)) => {
                log::debug!("generation attempt {k} failed at {name}: {err}");
                last = name;
            }
        }
    }
    Err(Error::GenerationFailed {
        stage: last.into(),
        attempts: config.max_attempts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeding_respects_layers() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pts = seed_points(70, [1.0, 1.5, 1.0], &mut rng);
        assert_eq!(pts.len(), 70);
        let middle = pts.iter().filter(|p| p[2] >= 1.0 / 3.0 && p[2] < 2.0 / 3.0).count();
        assert_eq!(middle, 30);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut c = GeneratorConfig::default();
        c.diameter_bounds = [12.0, 4.0];
        assert!(c.validate().is_err());
        let mut c = GeneratorConfig::default();
        c.outlet_pressure_range = [10.0, 31.0];
        assert!(c.validate().is_err());
    }
}
