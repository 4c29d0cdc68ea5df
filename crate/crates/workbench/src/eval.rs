//! Relative errors of surrogate predictions against full-order solutions.

use std::fmt::Write as _;
use std::time::Instant;

use capillary_core::{FixedPointConfig, FlowSolution, RheologyParams, VascularGraph};
use capillary_gnn::{relative_error, velocity_transform, GnnModel, LossWeights, Norm, Prediction, Sample};
use serde::{Deserialize, Serialize};

use crate::dataset::{solve, GraphCase};
use crate::error::Result;
use crate::train::sample_loss;

/// Percent errors in the L1 and L2 norms.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorPair {
    pub l1: f64,
    pub l2: f64,
}

impl ErrorPair {
    pub fn of(pred: &[f64], truth: &[f64]) -> Self {
        Self {
            l1: relative_error(pred, truth, Norm::L1),
            l2: relative_error(pred, truth, Norm::L2),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct QuantityErrors {
    pub pressure: ErrorPair,
    /// Transformed velocities.
    pub velocity: Option<ErrorPair>,
    pub hematocrit: Option<ErrorPair>,
}

/// Compared quantities: pressures in mmHg, transformed velocities, hematocrits.
#[derive(Debug, Clone, PartialEq)]
pub struct Fields {
    pub pressure: Vec<f64>,
    pub velocity: Option<Vec<f64>>,
    pub hematocrit: Option<Vec<f64>>,
}

impl Fields {
    pub fn from_solution(sol: &FlowSolution, graph: &VascularGraph, k_v: f64) -> Self {
        Self {
            pressure: sol.pressures.clone(),
            velocity: Some(
                sol.flows
                    .iter()
                    .zip(graph.diameters())
                    .map(|(&q, &d)| velocity_transform(q, d, k_v))
                    .collect(),
            ),
            hematocrit: sol.hematocrits.clone(),
        }
    }

    pub fn from_prediction(pred: &Prediction) -> Self {
        Self {
            pressure: pred.pressures.clone(),
            velocity: pred.transformed_velocities.clone(),
            hematocrit: pred.hematocrits.clone(),
        }
    }
}

/// Errors of every quantity present in both field sets.
pub fn field_errors(pred: &Fields, truth: &Fields) -> QuantityErrors {
    let pair = |p: &Option<Vec<f64>>, t: &Option<Vec<f64>>| match (p, t) {
        (Some(p), Some(t)) => Some(ErrorPair::of(p, t)),
        _ => None,
    };
    QuantityErrors {
        pressure: ErrorPair::of(&pred.pressure, &truth.pressure),
        velocity: pair(&pred.velocity, &truth.velocity),
        hematocrit: pair(&pred.hematocrit, &truth.hematocrit),
    }
}

/// Physics loss terms evaluated at the prediction (normalised units).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PhysicsResiduals {
    pub constitutive: f64,
    pub mass: f64,
    pub mass_hematocrit: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphReport {
    pub id: usize,
    pub nodes: usize,
    pub edges: usize,
    pub inlets: usize,
    pub errors: QuantityErrors,
    pub physics: Option<PhysicsResiduals>,
    pub solver_seconds: f64,
    pub surrogate_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub variant: u8,
    pub per_graph: Vec<GraphReport>,
    /// Mean over graphs of the per-graph errors.
    pub mean: QuantityErrors,
    pub physics: Option<PhysicsResiduals>,
    pub solver_seconds: f64,
    pub surrogate_seconds: f64,
}

fn mean_of(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

fn mean_pair(pairs: &[ErrorPair]) -> ErrorPair {
    ErrorPair {
        l1: mean_of(pairs.iter().map(|p| p.l1)),
        l2: mean_of(pairs.iter().map(|p| p.l2)),
    }
}

pub fn mean_errors(reports: &[QuantityErrors]) -> QuantityErrors {
    let collect = |f: fn(&QuantityErrors) -> Option<ErrorPair>| -> Option<ErrorPair> {
        let v: Vec<ErrorPair> = reports.iter().filter_map(f).collect();
        (!v.is_empty() && v.len() == reports.len()).then(|| mean_pair(&v))
    };
    QuantityErrors {
        pressure: mean_pair(&reports.iter().map(|r| r.pressure).collect::<Vec<_>>()),
        velocity: collect(|r| r.velocity),
        hematocrit: collect(|r| r.hematocrit),
    }
}

/// Evaluates `model` on `cases`, timing one full-order solve and one
/// surrogate prediction per graph.
pub fn evaluate(
    model: &GnnModel,
    cases: &[GraphCase],
    params: &RheologyParams,
    fixed_point: &FixedPointConfig,
) -> Result<EvalReport> {
    let variant = model.variant();
    let weights = LossWeights::for_variant(variant);
    let mut per_graph = Vec::with_capacity(cases.len());
    for case in cases {
        let t0 = Instant::now();
        let pred = model.predict_as(&case.graph, &case.bc, variant)?;
        let surrogate_seconds = t0.elapsed().as_secs_f64();
        let t1 = Instant::now();
        solve(&case.graph, &case.bc, variant.rheology(), params, fixed_point)?;
        let solver_seconds = t1.elapsed().as_secs_f64();

        let truth = Fields::from_solution(&case.solution, &case.graph, model.config.k_v);
        let errors = field_errors(&Fields::from_prediction(&pred), &truth);
        let physics = if variant.uses_physics() {
            let sample = Sample::new(&case.graph, &case.bc, Some(&case.solution), &model.config, params)?;
            let terms = sample_loss(model, &weights, &sample)?;
            Some(PhysicsResiduals {
                constitutive: terms.constitutive.unwrap_or(f64::NAN),
                mass: terms.mass.unwrap_or(f64::NAN),
                mass_hematocrit: terms.mass_hematocrit,
            })
        } else {
            None
        };
        per_graph.push(GraphReport {
            id: case.id,
            nodes: case.graph.node_count(),
            edges: case.graph.edge_count(),
            inlets: case.bc.inlets().len(),
            errors,
            physics,
            solver_seconds,
            surrogate_seconds,
        });
    }
    Ok(summarize(variant.id(), per_graph))
}

pub fn summarize(variant: u8, per_graph: Vec<GraphReport>) -> EvalReport {
    let errors: Vec<QuantityErrors> = per_graph.iter().map(|g| g.errors).collect();
    let phys: Vec<PhysicsResiduals> = per_graph.iter().filter_map(|g| g.physics).collect();
    let physics = (!phys.is_empty()).then(|| PhysicsResiduals {
        constitutive: mean_of(phys.iter().map(|p| p.constitutive)),
        mass: mean_of(phys.iter().map(|p| p.mass)),
        mass_hematocrit: phys
            .iter()
            .all(|p| p.mass_hematocrit.is_some())
            .then(|| mean_of(phys.iter().filter_map(|p| p.mass_hematocrit))),
    });
    EvalReport {
        variant,
        mean: mean_errors(&errors),
        physics,
        solver_seconds: mean_of(per_graph.iter().map(|g| g.solver_seconds)),
        surrogate_seconds: mean_of(per_graph.iter().map(|g| g.surrogate_seconds)),
        per_graph,
    }
}

/// Flat per-graph row for CSV export.
#[derive(Debug, Clone, Serialize)]
pub struct GraphRow {
    pub id: usize,
    pub nodes: usize,
    pub edges: usize,
    pub inlets: usize,
    pub pressure_l1: f64,
    pub pressure_l2: f64,
    pub velocity_l1: Option<f64>,
    pub velocity_l2: Option<f64>,
    pub hematocrit_l1: Option<f64>,
    pub hematocrit_l2: Option<f64>,
    pub constitutive: Option<f64>,
    pub mass: Option<f64>,
    pub mass_hematocrit: Option<f64>,
    pub solver_seconds: f64,
    pub surrogate_seconds: f64,
}

impl EvalReport {
    pub fn rows(&self) -> Vec<GraphRow> {
        self.per_graph
            .iter()
            .map(|g| GraphRow {
                id: g.id,
                nodes: g.nodes,
                edges: g.edges,
                inlets: g.inlets,
                pressure_l1: g.errors.pressure.l1,
                pressure_l2: g.errors.pressure.l2,
                velocity_l1: g.errors.velocity.map(|p| p.l1),
                velocity_l2: g.errors.velocity.map(|p| p.l2),
                hematocrit_l1: g.errors.hematocrit.map(|p| p.l1),
                hematocrit_l2: g.errors.hematocrit.map(|p| p.l2),
                constitutive: g.physics.map(|p| p.constitutive),
                mass: g.physics.map(|p| p.mass),
                mass_hematocrit: g.physics.and_then(|p| p.mass_hematocrit),
                solver_seconds: g.solver_seconds,
                surrogate_seconds: g.surrogate_seconds,
            })
            .collect()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "model {} on {} graph(s)", self.variant, self.per_graph.len());
        let mut line = |name: &str, p: Option<ErrorPair>| {
            if let Some(p) = p {
                let _ = writeln!(s, "  {name:<11} L1 {:>8.3}%  L2 {:>8.3}%", p.l1, p.l2);
            }
        };
        line("pressure", Some(self.mean.pressure));
        line("velocity", self.mean.velocity);
        line("hematocrit", self.mean.hematocrit);
        if let Some(p) = self.physics {
            let _ = writeln!(s, "  constitutive residual {:.3e}", p.constitutive);
            let _ = writeln!(s, "  mass residual {:.3e}", p.mass);
            if let Some(m) = p.mass_hematocrit {
                let _ = writeln!(s, "  red-cell mass residual {m:.3e}");
            }
        }
        let _ = writeln!(
            s,
            "  mean time: solver {:.3e} s, surrogate {:.3e} s",
            self.solver_seconds, self.surrogate_seconds
        );
        s
    }
}
