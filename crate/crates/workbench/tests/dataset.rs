mod common;

use std::fs;

use capillary_core::{FixedPointConfig, Rheology};
use capillary_gnn::Variant;
use capillary_workbench::dataset::{DatasetSpec, MANIFEST_FILE};
use capillary_workbench::{build_dataset, DatasetManifest, Split, WorkbenchError};
use common::{small_dataset, small_spec, tiny_gnn};

#[test]
fn split_sizes_follow_fractions() {
    let sizes = |count| DatasetSpec { count, ..DatasetSpec::default() }.split_sizes();
    assert_eq!(sizes(10), [8, 1, 1]);
    assert_eq!(sizes(1200), [960, 120, 120]);
    assert_eq!(sizes(250), [200, 25, 25]);
    assert_eq!(sizes(0), [0, 0, 0]);
}

#[test]
fn bad_fractions_are_rejected() {
    let spec = DatasetSpec {
        fractions: [0.8, 0.1, 0.2],
        ..DatasetSpec::default()
    };
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(build_dataset(dir.path(), &spec), Err(WorkbenchError::Config(_))));
}

#[test]
fn ten_graphs_split_eight_one_one_and_load() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = small_dataset(dir.path(), 10);
    assert_eq!(manifest.split_counts(), [8, 1, 1]);
    let ids: std::collections::HashSet<usize> = manifest.entries.iter().map(|e| e.id).collect();
    assert_eq!(ids.len(), 10);

    let (loaded, root) = DatasetManifest::load(dir.path()).unwrap();
    assert_eq!(loaded, manifest);
    loaded.verify(&root, Rheology::Linear).unwrap();
    loaded.verify(&root, Rheology::Nonlinear).unwrap();
    let samples = loaded.load_samples(&root, Split::Train, &tiny_gnn(Variant::Model4)).unwrap();
    assert_eq!(samples.len(), 8);
    assert!(samples.iter().all(|s| s.sample.targets.as_ref().unwrap().hematocrit.is_some()));
}

#[test]
fn rebuilding_is_byte_identical_and_resumes_missing_files() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    small_dataset(a.path(), 6);
    small_dataset(b.path(), 6);
    let read = |d: &std::path::Path, f: &str| fs::read(d.join(f)).unwrap();
    assert_eq!(read(a.path(), MANIFEST_FILE), read(b.path(), MANIFEST_FILE));
    assert_eq!(read(a.path(), "graphs/g00003.json"), read(b.path(), "graphs/g00003.json"));

    let solution = "solutions/nonlinear/g00002.json";
    let before = read(a.path(), solution);
    fs::remove_file(a.path().join(solution)).unwrap();
    fs::write(a.path().join("solutions/linear/g00004.json"), "{ not json").unwrap();
    small_dataset(a.path(), 6);
    assert_eq!(read(a.path(), solution), before);
    assert_eq!(read(a.path(), MANIFEST_FILE), read(b.path(), MANIFEST_FILE));
    assert_eq!(
        read(a.path(), "solutions/linear/g00004.json"),
        read(b.path(), "solutions/linear/g00004.json")
    );
}

#[test]
fn verify_reports_missing_files() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = small_dataset(dir.path(), 3);
    fs::remove_file(dir.path().join("graphs/g00001.json")).unwrap();
    assert!(manifest.verify(dir.path(), Rheology::Linear).is_err());
}

#[test]
fn different_generator_settings_are_refused() {
    let dir = tempfile::tempdir().unwrap();
    small_dataset(dir.path(), 2);
    let mut spec = small_spec(2, vec![Rheology::Linear]);
    spec.generator.seed += 1;
    assert!(matches!(build_dataset(dir.path(), &spec), Err(WorkbenchError::Manifest { .. })));
}

#[test]
fn solver_failures_carry_the_graph_id() {
    let dir = tempfile::tempdir().unwrap();
    let spec = DatasetSpec {
        fixed_point: FixedPointConfig {
            max_iterations: 1,
            tolerance: 1e-15,
            ..FixedPointConfig::default()
        },
        ..small_spec(2, vec![Rheology::Nonlinear])
    };
    match build_dataset(dir.path(), &spec) {
        Err(e @ WorkbenchError::Graph { .. }) => {
            assert!(e.is_numerical());
            assert!(e.to_string().starts_with("graph "));
        }
        other => panic!("expected a graph error, got {other:?}"),
    }
}
