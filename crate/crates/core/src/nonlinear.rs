//! Hematocrit-dependent rheology: Pries viscosity, kinematic plasma skimming
//! through virtual node potentials, and the fixed-point coupling loop.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::boundary::{BoundaryConditions, NodeClass};
use crate::error::{Error, Result};
use crate::graph::VascularGraph;
use crate::linear::{
    assemble_with_resistances, check_solvable, constant_resistances, edge_resistance, residuals, solve_system,
    velocity_from_flow, RheologyParams,
};
use crate::solution::{FlowSolution, Rheology, SolveMeta};
use crate::sparse::SparseMatrix;

/// Reference discharge hematocrit of the viscosity law.
pub const REFERENCE_HEMATOCRIT: f64 = 0.45;

/// Relative apparent viscosity at H = 0.45 for diameter `d` (µm).
pub fn mu_045(d: f64) -> f64 {
    220.0 * (-1.3 * d).exp() + 3.2 - 2.44 * (-0.06 * d.powf(0.645)).exp()
}

/// Shape exponent of the hematocrit dependence for diameter `d` (µm).
pub fn pries_exponent(d: f64) -> f64 {
    let s = 1.0 / (1.0 + 1e-11 * d.powi(12));
    (0.8 + (-0.075 * d).exp()) * (-1.0 + s) + s
}

/// `((1−h)^c − 1) / ((1−0.45)^c − 1)`, stable through c → 0.
pub(crate) fn hematocrit_fraction(h: f64, c: f64) -> f64 {
    let a = (1.0 - h).ln();
    let b = (1.0 - REFERENCE_HEMATOCRIT).ln();
    if c == 0.0 {
        return a / b;
    }
    (c * a).exp_m1() / (c * b).exp_m1()
}

/// Apparent blood viscosity (cP) in a vessel of diameter `d` (µm) at
/// discharge hematocrit `h`.
pub fn pries_viscosity(d: f64, h: f64, mu_plasma: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&h) {
        return Err(Error::Domain(format!("hematocrit {h} outside [0, 1)")));
    }
    if !(d > 0.0) {
        return Err(Error::Domain(format!("diameter {d} must be positive")));
    }
    let c = pries_exponent(d);
    Ok(mu_plasma * (1.0 + (mu_045(d) - 1.0) * hematocrit_fraction(h, c)))
}

/// Derivative of [`pries_viscosity`] with respect to the hematocrit.
pub fn pries_viscosity_dh(d: f64, h: f64, mu_plasma: f64) -> Result<f64> {
    pries_viscosity(d, h, mu_plasma)?;
    let c = pries_exponent(d);
    let b = (1.0 - REFERENCE_HEMATOCRIT).ln();
    let da = -1.0 / (1.0 - h);
    let dfrac = if c == 0.0 {
        da / b
    } else {
        c * (c * (1.0 - h).ln()).exp() * da / (c * b).exp_m1()
    };
    Ok(mu_plasma * (mu_045(d) - 1.0) * dfrac)
}

/// Per-edge flow direction after virtual reversal of negative flows.
#[derive(Debug, Clone)]
pub struct FlowOrientation {
    pub upstream: Vec<usize>,
    pub downstream: Vec<usize>,
    /// `|Q|`, zero on edges below the threshold.
    pub magnitude: Vec<f64>,
    pub active: Vec<bool>,
}

impl FlowOrientation {
    /// Edges with `|Q| < epsilon` are inactive and keep their stored orientation.
    pub fn new(graph: &VascularGraph, flows: &[f64], epsilon: f64) -> Self {
        let m = graph.edge_count();
        let mut upstream = Vec::with_capacity(m);
        let mut downstream = Vec::with_capacity(m);
        let mut magnitude = Vec::with_capacity(m);
        let mut active = Vec::with_capacity(m);
        for (e, &q) in graph.edges().iter().zip(flows) {
            let on = q.abs() >= epsilon && q != 0.0;
            if q < 0.0 && on {
                upstream.push(e.target);
                downstream.push(e.source);
            } else {
                upstream.push(e.source);
                downstream.push(e.target);
            }
            magnitude.push(if on { q.abs() } else { 0.0 });
            active.push(on);
        }
        Self {
            upstream,
            downstream,
            magnitude,
            active,
        }
    }

    fn in_out(&self, graph: &VascularGraph, node: usize) -> (Vec<usize>, Vec<usize>) {
        let mut ins = Vec::new();
        let mut outs = Vec::new();
        for &i in graph.incident_edges(node) {
            if !self.active[i] {
                continue;
            }
            if self.downstream[i] == node {
                ins.push(i);
            } else {
                outs.push(i);
            }
        }
        (ins, outs)
    }

    /// Kahn order over active edges, or `None` if they contain a directed cycle.
    pub fn topological_order(&self, node_count: usize) -> Option<Vec<usize>> {
        let mut indeg = vec![0usize; node_count];
        let mut succ: Vec<Vec<usize>> = vec![Vec::new(); node_count];
        for i in 0..self.active.len() {
            if self.active[i] {
                indeg[self.downstream[i]] += 1;
                succ[self.upstream[i]].push(self.downstream[i]);
            }
        }
        let mut queue: VecDeque<usize> = (0..node_count).filter(|&j| indeg[j] == 0).collect();
        let mut order = Vec::with_capacity(node_count);
        while let Some(u) = queue.pop_front() {
            order.push(u);
            for &w in &succ[u] {
                indeg[w] -= 1;
                if indeg[w] == 0 {
                    queue.push_back(w);
                }
            }
        }
        (order.len() == node_count).then_some(order)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkimmingOptions {
    /// Absolute flow threshold below which an edge is treated as stagnant.
    pub epsilon: f64,
    /// Fail with [`Error::AmbiguousOrientation`] instead of skipping
    /// stagnant edges.
    pub strict: bool,
}

/// Kinematic skimming coefficient λ per edge.
///
/// A node is a bifurcation iff it has exactly one inflow edge and at least
/// two outflow edges; its daughters get `(D_i / D_parent)^(2 / M_d)`. Every
/// other outflow edge, and every edge touching an inlet, gets λ = 1.
pub fn skimming_coefficients(
    graph: &VascularGraph,
    flows: &[f64],
    bc: &BoundaryConditions,
    drift: f64,
    options: SkimmingOptions,
) -> Result<Vec<f64>> {
    if !(drift > 0.0) {
        return Err(Error::Domain(format!("drift parameter {drift} must be positive")));
    }
    let orientation = FlowOrientation::new(graph, flows, options.epsilon);
    if options.strict {
        if let Some(i) = orientation.active.iter().position(|a| !a) {
            return Err(Error::AmbiguousOrientation { edge: i, flow: flows[i] });
        }
    }
    Ok(skimming_from_orientation(graph, &orientation, bc, drift))
}

fn skimming_from_orientation(
    graph: &VascularGraph,
    orientation: &FlowOrientation,
    bc: &BoundaryConditions,
    drift: f64,
) -> Vec<f64> {
    let mut lambda = vec![1.0; graph.edge_count()];
    let classes = bc.classes(graph.node_count());
    let d = graph.diameters();
    for j in 0..graph.node_count() {
        if classes[j] == NodeClass::Inlet {
            continue;
        }
        let (ins, outs) = orientation.in_out(graph, j);
        if ins.len() == 1 && outs.len() >= 2 {
            let parent = d[ins[0]];
            for &i in &outs {
                lambda[i] = (d[i] / parent).powf(2.0 / drift);
            }
        }
    }
    lambda
}

/// `N H* = N_in H̄` in sparse form together with a flow-topological order
/// (absent when the active flow orientation is cyclic).
#[derive(Debug, Clone)]
pub struct ConvectionSystem {
    pub matrix: SparseMatrix,
    /// Diagonal of `N_in`.
    pub inlet_diagonal: Vec<f64>,
    pub order: Option<Vec<usize>>,
    // per node: (upstream node, pseudo-flux) pairs and the diagonal of N
    incoming: Vec<Vec<(usize, f64)>>,
    diagonal: Vec<f64>,
}

impl ConvectionSystem {
    pub fn require_acyclic(&self) -> Result<&[usize]> {
        self.order.as_deref().ok_or(Error::CyclicFlow)
    }

    /// Solves for node potentials given the inlet hematocrit.
    pub fn solve(&self, inlet_hematocrit: f64) -> Result<Vec<f64>> {
        let n = self.diagonal.len();
        let rhs: Vec<f64> = self.inlet_diagonal.iter().map(|d| d * inlet_hematocrit).collect();
        match &self.order {
            Some(order) => {
                let mut h = vec![0.0; n];
                for &j in order {
                    let upstream: f64 = self.incoming[j].iter().map(|&(u, q)| q * h[u]).sum();
                    h[j] = (rhs[j] - upstream) / self.diagonal[j];
                }
                Ok(h)
            }
            None => self.matrix.solve(&rhs),
        }
    }
}

/// Assembles the upwind convection operator for signed pseudo-fluxes
/// `Q* = λ Q`.
///
/// Interior rows: `Σ_in q*_i H*_up(i) − H*_j Σ_out q*_i = 0`. Outlet rows add
/// `−(Cᵀ Q*)_j` on the diagonal so the node takes the flux-weighted mix of
/// its inflows. Inlet rows, and nodes without any inflow, pin `H*_j = H̄`.
pub fn assemble_convection(
    graph: &VascularGraph,
    pseudo_fluxes: &[f64],
    bc: &BoundaryConditions,
    epsilon: f64,
) -> Result<ConvectionSystem> {
    let orientation = FlowOrientation::new(graph, pseudo_fluxes, epsilon);
    Ok(convection_from_orientation(graph, &orientation, bc))
}

fn convection_from_orientation(
    graph: &VascularGraph,
    orientation: &FlowOrientation,
    bc: &BoundaryConditions,
) -> ConvectionSystem {
    let n = graph.node_count();
    let classes = bc.classes(n);
    let mut incoming: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut diagonal = vec![0.0; n];
    let mut inlet_diagonal = vec![0.0; n];
    for j in 0..n {
        let (ins, outs) = orientation.in_out(graph, j);
        let q_in: f64 = ins.iter().map(|&i| orientation.magnitude[i]).sum();
        let q_out: f64 = outs.iter().map(|&i| orientation.magnitude[i]).sum();
        let pinned = classes[j] == NodeClass::Inlet || q_in == 0.0;
        if pinned {
            let s = if q_out > 0.0 { q_out } else { 1.0 };
            diagonal[j] = -s;
            inlet_diagonal[j] = -s;
            continue;
        }
        incoming[j] = ins.iter().map(|&i| (orientation.upstream[i], orientation.magnitude[i])).collect();
        diagonal[j] = if classes[j] == NodeClass::Outlet || q_out == 0.0 {
            -q_in
        } else {
            -q_out
        };
    }
    let mut matrix = SparseMatrix::with_capacity(n, n + orientation.active.len());
    for j in 0..n {
        matrix.push(j, j, diagonal[j]);
        for &(u, q) in &incoming[j] {
            matrix.push(j, u, q);
        }
    }
    ConvectionSystem {
        matrix,
        inlet_diagonal,
        order: orientation.topological_order(n),
        incoming,
        diagonal,
    }
}

/// `H_i = λ_i H*(upstream(i))`, clamped to `[0, h_max]`. Returns the
/// hematocrits and the number of clamped edges.
pub fn recover_edge_hematocrit(
    lambda: &[f64],
    orientation: &FlowOrientation,
    potentials: &[f64],
    h_max: f64,
) -> (Vec<f64>, usize) {
    let mut clamps = 0;
    let h = lambda
        .iter()
        .zip(&orientation.upstream)
        .map(|(&l, &u)| {
            let raw = l * potentials[u];
            let c = raw.clamp(0.0, h_max);
            if c != raw {
                clamps += 1;
            }
            c
        })
        .collect();
    (h, clamps)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "lowercase")]
pub enum ViscosityLaw {
    /// Hematocrit- and diameter-dependent apparent viscosity.
    Pries,
    /// Constant viscosity (cP); reduces the scheme to the linear model.
    Constant { viscosity: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FixedPointConfig {
    pub initial_hematocrit: f64,
    /// Stop when ‖ΔH‖∞ / max(‖H‖∞, H0) drops below this.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub hematocrit_clamp: f64,
    /// Stagnation threshold relative to max |Q|.
    pub orientation_epsilon: f64,
    /// Under-relaxation of the hematocrit update (1 = plain fixed point).
    pub relaxation: f64,
    pub viscosity_law: ViscosityLaw,
}

impl Default for FixedPointConfig {
    fn default() -> Self {
        Self {
            initial_hematocrit: 0.4,
            tolerance: 1e-6,
            max_iterations: 50,
            hematocrit_clamp: 0.95,
            orientation_epsilon: 1e-14,
            relaxation: 1.0,
            viscosity_law: ViscosityLaw::Pries,
        }
    }
}

impl FixedPointConfig {
    pub fn validate(&self) -> Result<()> {
        let h0 = self.initial_hematocrit;
        let hmax = self.hematocrit_clamp;
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidConfig("tolerance must be positive".into()));
        }
        if !(0.0 < h0 && h0 < hmax && hmax < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "need 0 < H0 ({h0}) < H_max ({hmax}) < 1"
            )));
        }
        if !(self.relaxation > 0.0 && self.relaxation <= 1.0) {
            return Err(Error::InvalidConfig("relaxation must lie in (0, 1]".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

/// Edge resistances for a hematocrit field under the configured law.
pub fn hematocrit_resistances(
    graph: &VascularGraph,
    hematocrits: &[f64],
    params: &RheologyParams,
    law: ViscosityLaw,
) -> Result<Vec<f64>> {
    match law {
        ViscosityLaw::Constant { viscosity } => Ok(constant_resistances(graph, viscosity)),
        ViscosityLaw::Pries => graph
            .diameters()
            .iter()
            .zip(graph.lengths())
            .zip(hematocrits)
            .map(|((&d, &l), &h)| Ok(edge_resistance(d, l, pries_viscosity(d, h, params.plasma_viscosity)?)))
            .collect(),
    }
}

/// Result of one skimming sweep for a given flow field.
#[derive(Debug, Clone)]
pub struct HematocritSweep {
    pub hematocrits: Vec<f64>,
    pub potentials: Vec<f64>,
    pub lambda: Vec<f64>,
    pub clamp_count: usize,
}

/// Step (ii) of the fixed point: skimming coefficients, convection solve and
/// edge recovery for flows `q`.
pub fn hematocrit_sweep(
    graph: &VascularGraph,
    bc: &BoundaryConditions,
    params: &RheologyParams,
    config: &FixedPointConfig,
    flows: &[f64],
) -> Result<HematocritSweep> {
    let qmax = flows.iter().fold(0.0f64, |a, q| a.max(q.abs()));
    let orientation = FlowOrientation::new(graph, flows, config.orientation_epsilon * qmax);
    let lambda = skimming_from_orientation(graph, &orientation, bc, params.drift);
    let pseudo = FlowOrientation {
        magnitude: orientation
            .magnitude
            .iter()
            .zip(&lambda)
            .map(|(q, l)| q * l)
            .collect(),
        ..orientation.clone()
    };
    let system = convection_from_orientation(graph, &pseudo, bc);
    let potentials = system.solve(bc.inlet_hematocrit())?;
    let (hematocrits, clamp_count) =
        recover_edge_hematocrit(&lambda, &orientation, &potentials, config.hematocrit_clamp);
    Ok(HematocritSweep {
        hematocrits,
        potentials,
        lambda,
        clamp_count,
    })
}

fn relative_change(new: &[f64], old: &[f64], h0: f64) -> f64 {
    let diff = new.iter().zip(old).fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
    let scale = old.iter().fold(0.0f64, |a, x| a.max(x.abs())).max(h0);
    diff / scale
}

/// Fixed-point coupling of the flow problem with hematocrit-dependent
/// resistances and the skimming/convection update.
pub fn solve_nonlinear(
    graph: &VascularGraph,
    bc: &BoundaryConditions,
    params: &RheologyParams,
    config: &FixedPointConfig,
) -> Result<FlowSolution> {
    params.validate()?;
    config.validate()?;
    check_solvable(graph, bc)?;
    let m = graph.edge_count();
    let mut h = vec![config.initial_hematocrit; m];
    let mut last = None;
    for iteration in 1..=config.max_iterations {
        let resistances = hematocrit_resistances(graph, &h, params, config.viscosity_law)?;
        let system = assemble_with_resistances(graph, bc, resistances)?;
        let (pressures, flows) = solve_system(graph, &system)?;
        let sweep = hematocrit_sweep(graph, bc, params, config, &flows)?;
        let next: Vec<f64> = if config.relaxation == 1.0 {
            sweep.hematocrits
        } else {
            h.iter()
                .zip(&sweep.hematocrits)
                .map(|(old, new)| old + config.relaxation * (new - old))
                .collect()
        };
        let change = relative_change(&next, &h, config.initial_hematocrit);
        let res = residuals(graph, bc, &system.resistances, &pressures, &flows);
        let velocities = flows
            .iter()
            .zip(graph.diameters())
            .map(|(&q, &d)| velocity_from_flow(q, d))
            .collect();
        let converged = change < config.tolerance;
        let solution = FlowSolution {
            pressures,
            flows,
            velocities,
            hematocrits: Some(next.clone()),
            node_potentials: Some(sweep.potentials),
            meta: SolveMeta {
                rheology: Rheology::Nonlinear,
                iterations: iteration,
                converged,
                residuals: res,
                clamp_count: sweep.clamp_count,
                last_change: Some(change),
            },
        };
        if converged {
            return Ok(solution);
        }
        h = next;
        last = Some((solution, change));
    }
    let (last, last_change) = last.expect("at least one iteration");
    Err(Error::NotConverged {
        iterations: config.max_iterations,
        last_change,
        last: Box::new(last),
    })
}
