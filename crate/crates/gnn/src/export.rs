use capillary_core::io::{SolutionFile, FORMAT_VERSION};

use crate::model::Prediction;

/// Surrogate output in the solution file layout, tagged `source: gnn`.
pub fn prediction_file(pred: &Prediction) -> SolutionFile {
    SolutionFile {
        format_version: FORMAT_VERSION,
        source: "gnn".into(),
        variant: Some(pred.variant.id()),
        rheology: Some(pred.variant.rheology()),
        pressures: pred.pressures.clone(),
        flows: pred.flows.clone().unwrap_or_default(),
        velocities: pred.velocities.clone().unwrap_or_default(),
        hematocrits: pred.hematocrits.clone(),
        node_potentials: None,
        residuals: None,
        iterations: None,
        converged: None,
        clamp_count: None,
    }
}
