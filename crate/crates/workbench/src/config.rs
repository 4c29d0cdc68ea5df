//! Settings file accepted by `--config`; every section is optional.

use std::path::Path;

use capillary_core::io::read_json;
use capillary_gnn::GnnConfig;
use serde::{Deserialize, Serialize};

use crate::bench::BenchProtocol;
use crate::dataset::DatasetSpec;
use crate::error::Result;
use crate::study::StudyConfig;
use crate::train::TrainConfig;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorkbenchConfig {
    pub dataset: DatasetSpec,
    /// The variant is taken from the command line.
    pub gnn: GnnConfig,
    pub train: TrainConfig,
    pub study: StudyConfig,
    pub bench: BenchProtocol,
}

impl WorkbenchConfig {
    pub fn load(path: &Path) -> Result<Self> {
        Ok(read_json(path)?)
    }

    /// Desk scale: 250 graphs of 10–15 inlets (~100 nodes), 200 for training.
    pub fn desk() -> Self {
        Self::default()
    }

    /// 1200 graphs of roughly 300 nodes split 960/120/120.
    pub fn full_scale() -> Self {
        let mut c = Self::default();
        c.dataset.count = 1200;
        c.dataset.generator.inlet_count_range = [35, 40];
        c.study.inlet_counts = (2..=10).map(|k| 10 * k).collect();
        c
    }

    /// Applies one seed to generation, initialisation and shuffling.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.dataset.generator.seed = seed;
        self.gnn.seed = seed;
        self.train.seed = seed;
        self.study.seed = seed;
        self
    }
}
