use capillary_workbench::train::Schedule;
use capillary_workbench::{DatasetSpec, Timing, TrainConfig};
use proptest::prelude::*;

proptest! {
    #[test]
    fn split_sizes_partition_the_count(count in 0usize..5000, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let (val, test) = (a * (1.0 - b) / 2.0, b / 2.0);
        let spec = DatasetSpec { count, fractions: [1.0 - val - test, val, test], ..DatasetSpec::default() };
        let [tr, va, te] = spec.split_sizes();
        prop_assert_eq!(tr + va + te, count);
        prop_assert!((va as f64 - count as f64 * val).abs() <= 0.5 + 1e-9);
        prop_assert!((te as f64 - count as f64 * test).abs() <= 0.5 + 1e-9);
    }

    #[test]
    fn timing_orders_min_median_max(samples in prop::collection::vec(0.0f64..10.0, 1..20)) {
        let t = Timing::from_samples(samples.clone());
        prop_assert!(t.min <= t.median && t.median <= t.max);
        let below = samples.iter().filter(|&&x| x < t.median).count();
        let above = samples.iter().filter(|&&x| x > t.median).count();
        prop_assert!(below <= samples.len() / 2 && above <= samples.len() / 2);
    }

    #[test]
    fn schedule_rate_only_decays_and_best_is_a_running_minimum(
        losses in prop::collection::vec(1e-6f64..1.0, 1..120),
    ) {
        let config = TrainConfig::default();
        let mut s = Schedule::new(&config);
        let mut min = f64::INFINITY;
        let mut stagnant = 0;
        for &l in &losses {
            let before = s.learning_rate();
            let step = s.observe(l);
            prop_assert!(s.learning_rate() <= before);
            if step.improved {
                stagnant = 0;
                prop_assert!(l < min);
            } else {
                stagnant += 1;
            }
            min = min.min(l);
            prop_assert!(s.best() >= min);
            prop_assert_eq!(step.stop, stagnant >= config.early_stop_patience);
            if step.stop {
                break;
            }
        }
    }
}
