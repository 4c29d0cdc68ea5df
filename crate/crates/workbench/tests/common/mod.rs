#![allow(dead_code)]

use std::path::Path;

use capillary_core::{GeneratorConfig, Rheology};
use capillary_gnn::{GnnConfig, Variant};
use capillary_workbench::{build_dataset, DatasetManifest, DatasetSpec};

pub fn small_spec(count: usize, rheologies: Vec<Rheology>) -> DatasetSpec {
    DatasetSpec {
        generator: GeneratorConfig {
            seed: 11,
            inlet_count_range: [4, 6],
            ..GeneratorConfig::default()
        },
        count,
        rheologies,
        ..DatasetSpec::default()
    }
}

pub fn small_dataset(root: &Path, count: usize) -> DatasetManifest {
    build_dataset(root, &small_spec(count, vec![Rheology::Linear, Rheology::Nonlinear])).unwrap()
}

pub fn tiny_gnn(variant: Variant) -> GnnConfig {
    GnnConfig {
        variant,
        latent: 6,
        steps: 4,
        skip: 2,
        update_hidden_layers: 2,
        ..GnnConfig::default()
    }
}
