//! Poiseuille flow with Dirichlet pressure boundaries.
//!
//! Unknowns are ordered `[P (n nodes); Q (m edges)]`. Rows `0..m` encode the
//! constitutive law `P_s − P_t − R Q = 0` per edge; rows `m..m+n` encode
//! either a Dirichlet pressure (boundary nodes) or `(Cᵀ Q)_j = 0`.

use serde::{Deserialize, Serialize};

use crate::boundary::{BoundaryConditions, NodeClass};
use crate::error::{Error, Result};
use crate::graph::{build_incidence, VascularGraph};
use crate::solution::{FlowSolution, Residuals, Rheology, SolveMeta};
use crate::sparse::SparseMatrix;
use crate::units::CP_PER_UM3_TO_MMHG_S_PER_UM3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RheologyParams {
    /// Constant blood viscosity for the linear model (cP).
    pub viscosity: f64,
    /// Plasma viscosity used by the hematocrit-dependent law (cP).
    pub plasma_viscosity: f64,
    /// Drift parameter of the plasma-skimming law.
    pub drift: f64,
}

impl Default for RheologyParams {
    fn default() -> Self {
        Self {
            viscosity: 3.0,
            plasma_viscosity: 1.0,
            drift: 5.25,
        }
    }
}

impl RheologyParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("viscosity", self.viscosity),
            ("plasma_viscosity", self.plasma_viscosity),
            ("drift", self.drift),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Poiseuille resistance `128 µ L / (π D⁴)` in mmHg·s·µm⁻³ (D, L in µm, µ in cP).
pub fn edge_resistance(diameter: f64, length: f64, viscosity: f64) -> f64 {
    128.0 * viscosity * length / (std::f64::consts::PI * diameter.powi(4)) * CP_PER_UM3_TO_MMHG_S_PER_UM3
}

/// Mean axial velocity (µm/s) for flow `q` (µm³/s) through diameter `d` (µm).
pub fn velocity_from_flow(q: f64, diameter: f64) -> f64 {
    q / (std::f64::consts::PI * diameter * diameter / 4.0)
}

#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub matrix: SparseMatrix,
    pub rhs: Vec<f64>,
    /// Edge resistances in mmHg·s·µm⁻³.
    pub resistances: Vec<f64>,
}

pub fn constant_resistances(graph: &VascularGraph, viscosity: f64) -> Vec<f64> {
    graph
        .diameters()
        .iter()
        .zip(graph.lengths())
        .map(|(&d, &l)| edge_resistance(d, l, viscosity))
        .collect()
}

pub fn assemble_linear(graph: &VascularGraph, bc: &BoundaryConditions, params: &RheologyParams) -> Result<LinearSystem> {
    params.validate()?;
    assemble_with_resistances(graph, bc, constant_resistances(graph, params.viscosity))
}

/// Mixed pressure/flow system for arbitrary positive edge resistances.
pub fn assemble_with_resistances(
    graph: &VascularGraph,
    bc: &BoundaryConditions,
    resistances: Vec<f64>,
) -> Result<LinearSystem> {
    bc.check_against(graph)?;
    let n = graph.node_count();
    let m = graph.edge_count();
    assert_eq!(resistances.len(), m);
    let classes = bc.classes(n);
    let pbar = bc.pressure_vector(n);

    let mut a = SparseMatrix::with_capacity(n + m, 5 * m + n);
    let mut rhs = vec![0.0; n + m];
    for (i, e) in graph.edges().iter().enumerate() {
        a.push(i, e.source, 1.0);
        a.push(i, e.target, -1.0);
        a.push(i, n + i, -resistances[i]);
    }
    for j in 0..n {
        let row = m + j;
        match classes[j] {
            NodeClass::Inlet | NodeClass::Outlet => {
                a.push(row, j, 1.0);
                rhs[row] = pbar[j];
            }
            NodeClass::Interior => {
                for &i in graph.incident_edges(j) {
                    let sign = if graph.edges()[i].target == j { 1.0 } else { -1.0 };
                    a.push(row, n + i, sign);
                }
            }
        }
    }
    Ok(LinearSystem {
        matrix: a,
        rhs,
        resistances,
    })
}

/// Every weak component must touch a Dirichlet node or the system is singular.
pub(crate) fn check_solvable(graph: &VascularGraph, bc: &BoundaryConditions) -> Result<()> {
    if graph.is_weakly_connected() {
        return Ok(());
    }
    let labels = graph.component_labels();
    let count = labels.iter().max().map_or(0, |c| c + 1);
    let mut anchored = vec![false; count];
    for b in bc.inlets().iter().chain(bc.outlets()) {
        anchored[labels[b.node]] = true;
    }
    if let Some(c) = anchored.iter().position(|a| !a) {
        return Err(Error::SingularSystem(format!(
            "component {c} contains no boundary node"
        )));
    }
    Ok(())
}

/// Solves the assembled system and splits the result into (P, Q).
pub fn solve_system(graph: &VascularGraph, system: &LinearSystem) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = graph.node_count();
    let x = system.matrix.solve(&system.rhs)?;
    let (p, q) = x.split_at(n);
    Ok((p.to_vec(), q.to_vec()))
}

/// ∞-norm residuals of the constitutive law and interior mass balance.
pub fn residuals(
    graph: &VascularGraph,
    bc: &BoundaryConditions,
    resistances: &[f64],
    pressures: &[f64],
    flows: &[f64],
) -> Residuals {
    let constitutive = graph
        .edges()
        .iter()
        .enumerate()
        .map(|(i, e)| (pressures[e.source] - pressures[e.target] - resistances[i] * flows[i]).abs())
        .fold(0.0, f64::max);
    let net = build_incidence(graph).apply_transpose(flows);
    let classes = bc.classes(graph.node_count());
    let mass = net
        .iter()
        .zip(&classes)
        .filter(|(_, c)| **c == NodeClass::Interior)
        .map(|(v, _)| v.abs())
        .fold(0.0, f64::max);
    Residuals { constitutive, mass }
}

pub fn solve_linear(graph: &VascularGraph, bc: &BoundaryConditions, params: &RheologyParams) -> Result<FlowSolution> {
    check_solvable(graph, bc)?;
    let system = assemble_linear(graph, bc, params)?;
    let (pressures, flows) = solve_system(graph, &system)?;
    let res = residuals(graph, bc, &system.resistances, &pressures, &flows);
    let velocities = flows
        .iter()
        .zip(graph.diameters())
        .map(|(&q, &d)| velocity_from_flow(q, d))
        .collect();
    Ok(FlowSolution {
        pressures,
        flows,
        velocities,
        hematocrits: None,
        node_potentials: None,
        meta: SolveMeta {
            rheology: Rheology::Linear,
            iterations: 1,
            converged: true,
            residuals: res,
            clamp_count: 0,
            last_change: None,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::BoundaryNode;
    use crate::graph::Edge;
    use std::f64::consts::PI;

    fn bn(node: usize, pressure: f64) -> BoundaryNode {
        BoundaryNode { node, pressure }
    }

    fn line(n: usize, d: f64, l: f64) -> VascularGraph {
        VascularGraph::new(
            (0..n).map(|i| [i as f64, 0.0, 0.0]).collect(),
            (0..n - 1).map(|i| Edge::new(i, i + 1)).collect(),
            vec![d; n - 1],
            vec![l; n - 1],
        )
        .unwrap()
    }

    #[test]
    fn resistance_scaling_laws() {
        let r = edge_resistance(10.0, 50.0, 3.0);
        assert_eq!(edge_resistance(20.0, 50.0, 3.0), r / 16.0);
        assert_eq!(edge_resistance(10.0, 100.0, 3.0), 2.0 * r);
    }

    #[test]
    fn resistance_closed_form() {
        let expected = 128.0 * 3.0 * 50.0 / (PI * 1.0e4) * (1e-3 / 133.322387415);
        let r = edge_resistance(10.0, 50.0, 3.0);
        assert!((r - expected).abs() <= 1e-12 * expected);
    }

    #[test]
    fn single_tube_is_poiseuille() {
        let g = line(2, 8.0, 40.0);
        let bc = BoundaryConditions::new(vec![bn(0, 30.0)], vec![bn(1, 10.0)], 0.45).unwrap();
        let params = RheologyParams::default();
        let sys = assemble_linear(&g, &bc, &params).unwrap();
        assert_eq!(sys.matrix.dim(), 3);
        let sol = solve_linear(&g, &bc, &params).unwrap();
        let expected = 20.0 / edge_resistance(8.0, 40.0, 3.0);
        assert!((sol.flows[0] - expected).abs() <= 1e-12 * expected);
    }

    #[test]
    fn series_midpoint_pressure() {
        let g = line(3, 8.0, 40.0);
        let bc = BoundaryConditions::new(vec![bn(0, 32.0)], vec![bn(2, 12.0)], 0.45).unwrap();
        let sol = solve_linear(&g, &bc, &RheologyParams::default()).unwrap();
        assert!((sol.pressures[1] - 22.0).abs() < 1e-12);
    }

    #[test]
    fn equal_boundary_pressures_give_no_flow() {
        // The type forbids equal inlet/outlet pressures, so assemble directly.
        let g = line(3, 8.0, 40.0);
        let bc = BoundaryConditions::new(vec![bn(0, 20.0)], vec![bn(2, 10.0)], 0.45).unwrap();
        let mut sys = assemble_linear(&g, &bc, &RheologyParams::default()).unwrap();
        let m = g.edge_count();
        sys.rhs[m + 2] = 20.0;
        let (p, q) = solve_system(&g, &sys).unwrap();
        assert!(q.iter().all(|v| v.abs() < 1e-9));
        assert!(p.iter().all(|v| (v - 20.0).abs() < 1e-12));
    }

    #[test]
    fn disconnected_component_without_boundary_is_singular() {
        let g = VascularGraph::new_relaxed(
            vec![[0.0; 3]; 4],
            vec![Edge::new(0, 1), Edge::new(2, 3)],
            vec![8.0; 2],
            vec![10.0; 2],
        )
        .unwrap();
        let bc = BoundaryConditions::new(vec![bn(0, 30.0)], vec![bn(1, 10.0)], 0.45).unwrap();
        assert!(matches!(
            solve_linear(&g, &bc, &RheologyParams::default()),
            Err(Error::SingularSystem(_))
        ));
    }

    #[test]
    fn velocity_definition() {
        assert_eq!(velocity_from_flow(0.0, 7.0), 0.0);
        let d = 6.0;
        assert!((velocity_from_flow(PI * d * d / 4.0, d) - 1.0).abs() < 1e-15);
        assert!(velocity_from_flow(-3.0, d) < 0.0);
    }
}
