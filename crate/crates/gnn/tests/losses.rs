mod common;

use capillary_core::{generate_network, GeneratorConfig, RheologyParams};
use capillary_gnn::loss::{constitutive_residual, mass_residual, recover_flows};
use capillary_gnn::{variant_loss, GnnConfig, GnnModel, LossTerms, LossWeights, Outputs, Sample, Variant};
use capillary_nn::{gradient_check, Backend, Eager, ParamStore, Tensor};
use common::{small_config, solve_for, ten_node_network};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sample_for(variant: Variant) -> (Sample, GnnConfig) {
    let (g, bc) = ten_node_network();
    let sol = solve_for(variant, &g, &bc);
    let config = small_config(variant, 0);
    let s = Sample::new(&g, &bc, Some(&sol), &config, &RheologyParams::default()).unwrap();
    (s, config)
}

/// Outputs equal to the targets, optionally perturbed.
fn target_outputs(s: &Sample, variant: Variant, f: impl Fn(&Tensor) -> Tensor) -> Outputs<Tensor> {
    let t = s.targets.as_ref().unwrap();
    Outputs {
        pressure: f(&t.pressure),
        velocity: variant.predicts_velocity().then(|| f(t.velocity.as_ref().unwrap())),
        hematocrit: variant.predicts_hematocrit().then(|| f(t.hematocrit.as_ref().unwrap())),
    }
}

fn eval(variant: Variant, w: &LossWeights, out: &Outputs<Tensor>, s: &Sample) -> LossTerms {
    let store = ParamStore::new();
    variant_loss(&mut Eager::new(&store), variant, w, out, s, 5.0, 35.0).unwrap().1
}

fn shifted(c: f64) -> impl Fn(&Tensor) -> Tensor {
    move |t| Tensor::column(t.data().iter().map(|x| x + c).collect())
}

#[test]
fn supervised_losses_at_and_near_truth() {
    let (s, _) = sample_for(Variant::Model1);
    let w = LossWeights::for_variant(Variant::Model1);
    assert_eq!(eval(Variant::Model1, &w, &target_outputs(&s, Variant::Model1, Tensor::clone), &s).total, 0.0);
    let off = eval(Variant::Model1, &w, &target_outputs(&s, Variant::Model1, shifted(0.125)), &s);
    assert!((off.total - 0.125f64.powi(2)).abs() < 1e-15);

    let (s2, _) = sample_for(Variant::Model2);
    let w2 = LossWeights::for_variant(Variant::Model2);
    assert_eq!(eval(Variant::Model2, &w2, &target_outputs(&s2, Variant::Model2, Tensor::clone), &s2).total, 0.0);
}

#[test]
fn random_pressure_loss_matches_recomputation() {
    let (s, _) = sample_for(Variant::Model1);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let truth = s.targets.as_ref().unwrap().pressure.data().to_vec();
    let pred: Vec<f64> = truth.iter().map(|_| rng.gen_range(0.0..1.0)).collect();
    let out = Outputs {
        pressure: Tensor::column(pred.clone()),
        velocity: None,
        hematocrit: None,
    };
    let got = eval(Variant::Model1, &LossWeights::default(), &out, &s).total;
    let expected = pred.iter().zip(&truth).map(|(p, t)| (t - p) * (t - p)).sum::<f64>() / truth.len() as f64;
    assert!((got - expected).abs() <= 1e-12 * expected);
}

#[test]
fn mixing_weights_reduce_correctly() {
    let (s, _) = sample_for(Variant::Model3);
    let t = s.targets.as_ref().unwrap();
    // Pressure off by 0.1 everywhere, velocity off by 0.2.
    let out = Outputs {
        pressure: shifted(0.1)(&t.pressure),
        velocity: Some(shifted(0.2)(t.velocity.as_ref().unwrap())),
        hematocrit: None,
    };
    let pure_pressure = eval(Variant::Model1, &LossWeights::default(), &out, &s).total;
    let m2_unit = eval(Variant::Model2, &LossWeights { gamma_d: 1.0, ..LossWeights::default() }, &out, &s).total;
    assert_eq!(m2_unit, pure_pressure);
    let half = eval(Variant::Model2, &LossWeights { gamma_d: 0.5, ..LossWeights::default() }, &out, &s).total;
    assert!((half - (0.5 * 0.01 + 0.5 * 0.04)).abs() < 1e-14, "{half}");

    let w3 = LossWeights {
        delta: 1.0,
        ..LossWeights::for_variant(Variant::Model3)
    };
    let m3 = eval(Variant::Model3, &w3, &out, &s).total;
    let m2 = eval(Variant::Model2, &w3, &out, &s).total;
    assert_eq!(m3, m2);
}

#[test]
fn nonlinear_data_part_reduces_to_pressure() {
    let (s, _) = sample_for(Variant::Model4);
    let t = s.targets.as_ref().unwrap();
    let out = Outputs {
        pressure: shifted(0.1)(&t.pressure),
        velocity: Some(shifted(0.3)(t.velocity.as_ref().unwrap())),
        hematocrit: Some(shifted(0.05)(t.hematocrit.as_ref().unwrap())),
    };
    let w = LossWeights {
        delta: 1.0,
        gamma_d1: 1.0,
        gamma_d2: 1.0,
        ..LossWeights::default()
    };
    let terms = eval(Variant::Model4, &w, &out, &s);
    assert!((terms.total - terms.pressure).abs() < 1e-15);
    assert!((terms.pressure - 0.01).abs() < 1e-14);
}

#[test]
fn physics_terms_vanish_at_full_order_solutions() {
    for variant in [Variant::Model3, Variant::Model4] {
        let (s, _) = sample_for(variant);
        let terms = eval(variant, &LossWeights::for_variant(variant), &target_outputs(&s, variant, Tensor::clone), &s);
        assert!(terms.constitutive.unwrap() < 1e-12, "{variant}: {terms:?}");
        assert!(terms.mass.unwrap() < 1e-12, "{variant}: {terms:?}");
        if variant == Variant::Model4 {
            assert!(terms.mass_hematocrit.unwrap() < 1e-12, "{terms:?}");
        }
    }
}

#[test]
fn doubling_velocities_increases_mass_residual() {
    for seed in 0..5 {
        let net = generate_network(&GeneratorConfig { seed, ..GeneratorConfig::default() }).unwrap();
        let sol = capillary_core::solve_linear(&net.graph, &net.bc, &RheologyParams::default()).unwrap();
        let config = GnnConfig::for_variant(Variant::Model3);
        let s = Sample::new(&net.graph, &net.bc, Some(&sol), &config, &RheologyParams::default()).unwrap();
        let store = ParamStore::new();
        let mut b = Eager::new(&store);
        let v = s.targets.as_ref().unwrap().velocity.clone().unwrap();
        let mass_of = |b: &mut Eager, v: &Tensor| {
            let q = recover_flows(b, v, &s.physics, config.k_v).unwrap();
            mass_residual(b, &q, &s.physics).unwrap().item()
        };
        let base = mass_of(&mut b, &v);
        let doubled = Tensor::column(v.data().iter().map(|x| 2.0 * x).collect());
        assert!(mass_of(&mut b, &doubled) > base);

        // Pressure-only changes do not touch the mass term but do move the constitutive one.
        let p = s.targets.as_ref().unwrap().pressure.clone();
        let q = recover_flows(&mut b, &v, &s.physics, config.k_v).unwrap();
        let r = Tensor::column(s.physics.linear_resistance.clone());
        let at_truth = constitutive_residual(&mut b, &p, &q, &r, &s.physics, 35.0).unwrap().item();
        let p2 = Tensor::column(p.data().iter().map(|x| x * 1.01).collect());
        assert!(constitutive_residual(&mut b, &p2, &q, &r, &s.physics, 35.0).unwrap().item() > at_truth);
    }
}

/// Loss of a model for parameter values in `store`.
fn model_loss<B: Backend>(b: &mut B, model: &GnnModel, s: &Sample) -> B::Value {
    let v = model.variant();
    let out = model.forward(b, &s.inputs).unwrap();
    let (loss, _) = variant_loss(b, v, &LossWeights::for_variant(v), &out, s, model.config.k_v, 35.0).unwrap();
    loss
}

fn worst_gradient_error(model: &GnnModel, s: &Sample) -> f64 {
    gradient_check(
        &model.store,
        1e-5,
        1e-8,
        |tape| Ok(model_loss(tape, model, s)),
        |store| Ok(model_loss(&mut Eager::new(store), model, s).item()),
    )
    .unwrap()
    .worst
}

#[test]
fn every_variant_passes_the_gradient_check() {
    for variant in Variant::ALL {
        for seed in 0..2 {
            let (s, config) = sample_for(variant);
            let mut model = GnnModel::new(GnnConfig { seed, ..config }).unwrap();
            if variant == Variant::Model4 {
                // Start hematocrit predictions inside the clamp interval.
                let bias = model.layout.edge_decoder.as_ref().unwrap().layers.last().unwrap().bias;
                model.store.get_mut(bias).data_mut()[1] = 0.4;
            }
            let worst = worst_gradient_error(&model, &s);
            assert!(worst < 1e-4, "model {variant} seed {seed}: {worst:e}");
        }
    }
}
