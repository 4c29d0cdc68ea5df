mod common;

use capillary_core::{generate_network, FixedPointConfig, GeneratorConfig, Rheology, RheologyParams};
use capillary_gnn::{GnnModel, Variant};
use capillary_workbench::bench::{bench_graph, time_runs, BenchProtocol, Timing};
use capillary_workbench::study::{generalization_study, row_from_report, study_cases, StudyConfig};
use capillary_workbench::{evaluate, field_errors, DatasetManifest, Fields, Split};
use common::{small_dataset, tiny_gnn};

#[test]
fn full_order_solution_against_itself_is_exact() {
    let net = generate_network(&GeneratorConfig::default()).unwrap();
    let sol = capillary_core::solve_nonlinear(&net.graph, &net.bc, &RheologyParams::default(), &FixedPointConfig::default())
        .unwrap();
    let f = Fields::from_solution(&sol, &net.graph, 5.0);
    let e = field_errors(&f, &f);
    assert_eq!((e.pressure.l1, e.pressure.l2), (0.0, 0.0));
    assert_eq!(e.velocity.unwrap().l2, 0.0);
    assert_eq!(e.hematocrit.unwrap().l1, 0.0);
}

#[test]
fn ten_percent_scaling_gives_ten_percent_error() {
    let truth = Fields {
        pressure: vec![30.0, 21.5, 17.25, 12.0],
        velocity: Some(vec![0.5, -1.25, 2.0]),
        hematocrit: None,
    };
    let scale = |v: &[f64]| v.iter().map(|x| 1.1 * x).collect::<Vec<_>>();
    let pred = Fields {
        pressure: scale(&truth.pressure),
        velocity: truth.velocity.as_deref().map(scale),
        hematocrit: None,
    };
    let e = field_errors(&pred, &truth);
    for x in [e.pressure.l1, e.pressure.l2, e.velocity.unwrap().l1, e.velocity.unwrap().l2] {
        assert!((x - 10.0).abs() < 1e-12, "{x}");
    }
    assert!(e.hematocrit.is_none());
}

#[test]
fn evaluation_reports_every_graph_and_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    small_dataset(dir.path(), 10);
    let (m, root) = DatasetManifest::load(dir.path()).unwrap();
    for variant in [Variant::Model1, Variant::Model3, Variant::Model4] {
        let model = GnnModel::new(tiny_gnn(variant)).unwrap();
        let cases = m.load_cases(&root, Split::Train, variant.rheology()).unwrap();
        let params = &m.spec.rheology_params;
        let a = evaluate(&model, &cases, params, &m.spec.fixed_point).unwrap();
        let b = evaluate(&model, &cases, params, &m.spec.fixed_point).unwrap();
        assert_eq!(a.per_graph.len(), 8);
        assert_eq!(a.mean, b.mean);
        assert_eq!(a.physics, b.physics);
        assert_eq!(a.physics.is_some(), variant.uses_physics());
        assert_eq!(a.mean.hematocrit.is_some(), variant == Variant::Model4);
        assert!(a.per_graph.iter().all(|g| g.solver_seconds > 0.0 && g.surrogate_seconds > 0.0));
        assert!(a.mean.pressure.l2 >= 0.0);
        assert_eq!(a.rows().len(), 8);
        assert!(a.to_text().contains("pressure"));
    }
}

#[test]
fn study_has_one_row_per_count_and_matches_evaluate() {
    let model = GnnModel::new(tiny_gnn(Variant::Model1)).unwrap();
    let config = StudyConfig {
        inlet_counts: vec![8, 4, 6],
        graphs_per_count: 2,
        ..StudyConfig::default()
    };
    let table = generalization_study(&model, &config).unwrap();
    assert_eq!(table.rows.iter().map(|r| r.inlets).collect::<Vec<_>>(), vec![8, 4, 6]);
    assert!(table.rows.iter().all(|r| r.graphs == 2));
    assert!(table.row(8).unwrap().mean_nodes > table.row(4).unwrap().mean_nodes);

    let cases = study_cases(&model, &config, 6).unwrap();
    let report = evaluate(&model, &cases, &config.rheology_params, &config.fixed_point).unwrap();
    assert_eq!(row_from_report(6, &report).errors, table.row(6).unwrap().errors);
    assert_eq!(table.csv_rows().len(), 3);
}

#[test]
fn timing_median_and_protocol() {
    let t = Timing::from_samples(vec![3.0, 1.0, 2.0, 10.0, 4.0]);
    assert_eq!((t.median, t.min, t.max), (3.0, 1.0, 10.0));
    assert_eq!(Timing::from_samples(vec![4.0, 1.0]).median, 2.5);
    let mut calls = 0;
    let t = time_runs(BenchProtocol::default(), || -> Result<(), ()> {
        calls += 1;
        Ok(())
    })
    .unwrap();
    assert_eq!(calls, 6);
    assert!(t.min <= t.median && t.median <= t.max);
}

#[test]
fn nonlinear_solver_is_slower_and_surrogate_cost_ignores_rheology() {
    let net = generate_network(&GeneratorConfig {
        inlet_count_range: [25, 25],
        ..GeneratorConfig::default()
    })
    .unwrap();
    let params = RheologyParams::default();
    let fp = FixedPointConfig::default();
    let protocol = BenchProtocol { warmup: 1, runs: 7 };
    let m1 = GnnModel::new(tiny_gnn(Variant::Model1)).unwrap();
    let m4 = GnnModel::new(tiny_gnn(Variant::Model4)).unwrap();
    let r1 = bench_graph(&net.graph, &net.bc, &m1, &params, &fp, true, protocol).unwrap();
    let r4 = bench_graph(&net.graph, &net.bc, &m4, &params, &fp, false, protocol).unwrap();
    assert!(r1.nonlinear_solver.unwrap().median > r1.linear_solver.median);
    assert!(r1.speedup_linear > 0.0 && r1.speedup_nonlinear.unwrap() > 0.0);
    assert!((r1.speedup_linear - r1.linear_solver.median / r1.surrogate.median).abs() < 1e-12);
    let ratio = r4.surrogate.median / r1.surrogate.median;
    assert!((0.5..2.0).contains(&ratio), "surrogate time ratio {ratio}");
    assert_eq!(Variant::Model4.rheology(), Rheology::Nonlinear);
}
