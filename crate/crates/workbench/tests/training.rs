mod common;

use capillary_gnn::{GnnModel, Variant};
use capillary_workbench::train::{Schedule, TrainConfig};
use capillary_workbench::{train, DatasetManifest, GraphSample, Split, StopReason, WorkbenchError};
use common::{small_dataset, tiny_gnn};

fn samples(variant: Variant) -> (Vec<GraphSample>, Vec<GraphSample>) {
    let dir = tempfile::tempdir().unwrap();
    small_dataset(dir.path(), 10);
    let (m, root) = DatasetManifest::load(dir.path()).unwrap();
    let gnn = tiny_gnn(variant);
    (
        m.load_samples(&root, Split::Train, &gnn).unwrap(),
        m.load_samples(&root, Split::Val, &gnn).unwrap(),
    )
}

#[test]
fn zero_epochs_returns_the_initial_model() {
    let (tr, va) = samples(Variant::Model1);
    let gnn = tiny_gnn(Variant::Model1);
    let out = train(&gnn, &TrainConfig { max_epochs: 0, ..TrainConfig::default() }, &tr, &va).unwrap();
    assert_eq!(out.model, GnnModel::new(gnn).unwrap());
    assert_eq!(out.log.stop_reason, StopReason::NoTraining);
    assert!(out.log.epochs.is_empty());
}

#[test]
fn schedule_decays_after_ten_flat_epochs_and_stops_after_twenty_five() {
    let mut s = Schedule::new(&TrainConfig::default());
    let mut rates = vec![];
    let mut stopped_at = None;
    for epoch in 1..=40 {
        rates.push((epoch, s.learning_rate()));
        if s.observe(1.0).stop {
            stopped_at = Some(epoch);
            break;
        }
    }
    assert_eq!(stopped_at, Some(26));
    let rate = |e: usize| rates[e - 1].1;
    assert_eq!(rate(11), 1e-3);
    assert!((rate(12) - 1e-4).abs() < 1e-18);
    assert!((rate(21) - 1e-4).abs() < 1e-18);
    assert!((rate(22) - 1e-5).abs() < 1e-19);
}

#[test]
fn improvements_reset_the_plateau_counters() {
    let mut s = Schedule::new(&TrainConfig::default());
    for k in 0..9 {
        s.observe(if k == 0 { 1.0 } else { 2.0 });
    }
    assert!(s.observe(0.5).improved);
    for _ in 0..9 {
        assert_eq!(s.observe(0.5).decayed_to, None);
    }
    assert!(s.observe(0.5).decayed_to.is_some());
    assert_eq!(s.best(), 0.5);
}

#[test]
fn frozen_loss_stops_after_exactly_twenty_five_stagnant_epochs() {
    let (tr, va) = samples(Variant::Model1);
    let tc = TrainConfig {
        learning_rate: 0.0,
        ..TrainConfig::default()
    };
    let out = train(&tiny_gnn(Variant::Model1), &tc, &tr, &va).unwrap();
    let log = &out.log;
    assert_eq!(log.stop_reason, StopReason::EarlyStop);
    assert_eq!(log.epochs.len(), 26);
    assert_eq!(log.best_epoch, 1);
    assert!(log.epochs.iter().all(|e| e.val_loss == log.epochs[0].val_loss));
    assert_eq!(log.rate_changes.iter().map(|c| c.epoch).collect::<Vec<_>>(), vec![12, 22]);
}

#[test]
fn training_lowers_the_loss_and_is_bitwise_reproducible() {
    let (tr, va) = samples(Variant::Model3);
    let gnn = tiny_gnn(Variant::Model3);
    let tc = TrainConfig {
        max_epochs: 8,
        learning_rate: 3e-3,
        ..TrainConfig::default()
    };
    let a = train(&gnn, &tc, &tr, &va).unwrap();
    let b = train(&gnn, &tc, &tr, &va).unwrap();
    assert_eq!(a.log.loss_trajectory(), b.log.loss_trajectory());
    assert_eq!(a.model.store, b.model.store);
    let first = a.log.epochs.first().unwrap().train_loss;
    let last = a.log.epochs.last().unwrap().train_loss;
    assert!(last < first, "{first} -> {last}");
    assert_eq!(a.log.best_val_loss, a.log.epochs[a.log.best_epoch - 1].val_loss);
}

#[test]
fn non_finite_loss_names_the_graph() {
    let (mut tr, va) = samples(Variant::Model1);
    let bad = tr[3].id;
    tr[3].sample.targets.as_mut().unwrap().pressure.data_mut()[0] = f64::NAN;
    let tc = TrainConfig {
        max_epochs: 1,
        ..TrainConfig::default()
    };
    match train(&tiny_gnn(Variant::Model1), &tc, &tr, &va) {
        Err(e @ WorkbenchError::NonFiniteLoss { .. }) => {
            assert!(e.is_numerical());
            assert!(matches!(e, WorkbenchError::NonFiniteLoss { epoch: 1, graph } if graph == bad));
        }
        other => panic!("expected NonFiniteLoss, got {:?}", other.map(|o| o.log)),
    }
}

#[test]
fn trained_checkpoint_round_trips() {
    let (tr, va) = samples(Variant::Model2);
    let tc = TrainConfig {
        max_epochs: 2,
        ..TrainConfig::default()
    };
    let out = train(&tiny_gnn(Variant::Model2), &tc, &tr, &va).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    out.model.save(&path, serde_json::to_value(&tc).unwrap()).unwrap();
    let back = GnnModel::load(&path).unwrap();
    let inputs = &va[0].sample.inputs;
    assert_eq!(back.infer(inputs).unwrap().pressure, out.model.infer(inputs).unwrap().pressure);
}
