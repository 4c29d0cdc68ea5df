//! Dataset lifecycle, training, evaluation, generalization studies,
//! benchmarking and the `capillary` command-line tool.

pub mod bench;
pub mod cli;
pub mod config;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod report;
pub mod study;
pub mod train;

pub use bench::{bench_graph, time_runs, BenchProtocol, BenchReport, BenchRow, Timing};
pub use config::WorkbenchConfig;
pub use dataset::{build_dataset, DatasetManifest, DatasetSpec, GraphCase, GraphSample, ManifestEntry, Split};
pub use error::{Result, WorkbenchError};
pub use eval::{evaluate, field_errors, EvalReport, ErrorPair, Fields, QuantityErrors};
pub use study::{generalization_study, StudyConfig, StudyTable};
pub use train::{train, StopReason, TrainConfig, TrainLog, TrainOutcome};
