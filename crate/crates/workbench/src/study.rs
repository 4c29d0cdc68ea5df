//! Error as a function of network size (inlet count).

use std::fmt::Write as _;

use capillary_core::{generate_network, FixedPointConfig, GeneratorConfig, RheologyParams};
use capillary_gnn::GnnModel;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{graph_seed, solve, GraphCase};
use crate::error::{Result, WorkbenchError};
use crate::eval::{evaluate, EvalReport, PhysicsResiduals, QuantityErrors};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    pub inlet_counts: Vec<usize>,
    pub graphs_per_count: usize,
    /// Template; its seed and inlet range are overridden per row.
    pub generator: GeneratorConfig,
    pub seed: u64,
    pub rheology_params: RheologyParams,
    pub fixed_point: FixedPointConfig,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            inlet_counts: vec![5, 10, 15, 20, 25, 30],
            graphs_per_count: 5,
            generator: GeneratorConfig::default(),
            seed: 7,
            rheology_params: RheologyParams::default(),
            fixed_point: FixedPointConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub inlets: usize,
    pub graphs: usize,
    pub mean_nodes: f64,
    pub errors: QuantityErrors,
    pub physics: Option<PhysicsResiduals>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyTable {
    pub variant: u8,
    pub rows: Vec<StudyRow>,
}

/// Graphs with exactly `inlets` inlets, solved with the rheology of `model`.
pub fn study_cases(model: &GnnModel, config: &StudyConfig, inlets: usize) -> Result<Vec<GraphCase>> {
    (0..config.graphs_per_count)
        .into_par_iter()
        .map(|k| {
            let id = inlets * 10_000 + k;
            let gen = GeneratorConfig {
                seed: graph_seed(config.seed, id),
                inlet_count_range: [inlets, inlets],
                ..config.generator.clone()
            };
            let err = |source| WorkbenchError::Graph { id, source };
            let net = generate_network(&gen).map_err(err)?;
            let solution = solve(
                &net.graph,
                &net.bc,
                model.variant().rheology(),
                &config.rheology_params,
                &config.fixed_point,
            )
            .map_err(err)?;
            Ok(GraphCase {
                id,
                graph: net.graph,
                bc: net.bc,
                solution,
            })
        })
        .collect()
}

pub fn row_from_report(inlets: usize, report: &EvalReport) -> StudyRow {
    let n = report.per_graph.len();
    StudyRow {
        inlets,
        graphs: n,
        mean_nodes: report.per_graph.iter().map(|g| g.nodes as f64).sum::<f64>() / n.max(1) as f64,
        errors: report.mean,
        physics: report.physics,
    }
}

/// One row per requested inlet count, in the order given.
pub fn generalization_study(model: &GnnModel, config: &StudyConfig) -> Result<StudyTable> {
    if config.graphs_per_count == 0 {
        return Err(WorkbenchError::Config("graphs_per_count must be at least 1".into()));
    }
    let mut rows = Vec::with_capacity(config.inlet_counts.len());
    for &inlets in &config.inlet_counts {
        let cases = study_cases(model, config, inlets)?;
        let report = evaluate(model, &cases, &config.rheology_params, &config.fixed_point)?;
        log::info!("{inlets} inlets: pressure L2 {:.3}%", report.mean.pressure.l2);
        rows.push(row_from_report(inlets, &report));
    }
    Ok(StudyTable {
        variant: model.variant().id(),
        rows,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct StudyCsvRow {
    pub inlets: usize,
    pub graphs: usize,
    pub mean_nodes: f64,
    pub pressure_l1: f64,
    pub pressure_l2: f64,
    pub velocity_l1: Option<f64>,
    pub velocity_l2: Option<f64>,
    pub hematocrit_l1: Option<f64>,
    pub hematocrit_l2: Option<f64>,
    pub constitutive: Option<f64>,
    pub mass: Option<f64>,
    pub mass_hematocrit: Option<f64>,
}

impl StudyTable {
    pub fn csv_rows(&self) -> Vec<StudyCsvRow> {
        self.rows
            .iter()
            .map(|r| StudyCsvRow {
                inlets: r.inlets,
                graphs: r.graphs,
                mean_nodes: r.mean_nodes,
                pressure_l1: r.errors.pressure.l1,
                pressure_l2: r.errors.pressure.l2,
                velocity_l1: r.errors.velocity.map(|p| p.l1),
                velocity_l2: r.errors.velocity.map(|p| p.l2),
                hematocrit_l1: r.errors.hematocrit.map(|p| p.l1),
                hematocrit_l2: r.errors.hematocrit.map(|p| p.l2),
                constitutive: r.physics.map(|p| p.constitutive),
                mass: r.physics.map(|p| p.mass),
                mass_hematocrit: r.physics.and_then(|p| p.mass_hematocrit),
            })
            .collect()
    }

    pub fn row(&self, inlets: usize) -> Option<&StudyRow> {
        self.rows.iter().find(|r| r.inlets == inlets)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "model {} generalization", self.variant);
        let _ = writeln!(s, "  inlets  graphs  nodes    P L2 %   P L1 %");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "  {:>6}  {:>6}  {:>5.0}  {:>8.3}  {:>8.3}",
                r.inlets, r.graphs, r.mean_nodes, r.errors.pressure.l2, r.errors.pressure.l1
            );
        }
        s
    }
}
