use feasible_bai::env::RngStream;
use feasible_bai::harness::{generate_eoo_instance, generate_random_instance};
use feasible_bai::instance::is_alternative;
use feasible_bai::learners::{sample_constrained_posterior, AdaHedge, RidgePosterior, DEFAULT_MAX_REJECTS};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn adahedge_weights_stay_on_the_simplex(
        losses in proptest::collection::vec(proptest::collection::vec(-50.0f64..50.0, 4), 1..60),
    ) {
        let mut hedge = AdaHedge::new(4);
        for l in &losses {
            let delta = hedge.update(l);
            prop_assert!(delta >= 0.0);
            let w = hedge.weights();
            prop_assert!(w.iter().all(|x| *x >= 0.0 && x.is_finite()));
            prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn adahedge_regret_bound_holds_for_scaled_losses(seed in 0u64..10_000, scale in 0.01f64..100.0, k in 2usize..8) {
        let mut rng = RngStream::new(seed);
        let horizon = 300;
        let mut hedge = AdaHedge::new(k);
        let mut learner = 0.0;
        let mut cum = vec![0.0; k];
        for _ in 0..horizon {
            // A drifting adversary: one arm is penalized per round.
            let bad = rng.index(k);
            let loss: Vec<f64> = (0..k).map(|i| scale * (rng.uniform() * 0.5 + if i == bad { 0.5 } else { 0.0 })).collect();
            learner += hedge.weights().iter().zip(&loss).map(|(w, l)| w * l).sum::<f64>();
            for (c, l) in cum.iter_mut().zip(&loss) {
                *c += l;
            }
            hedge.update(&loss);
        }
        let best = cum.iter().cloned().fold(f64::INFINITY, f64::min);
        let ln_k = (k as f64).ln();
        let bound = 2.0 * scale * (horizon as f64 * ln_k).sqrt() + scale * (16.0 / 3.0 * ln_k + 2.0);
        prop_assert!(learner - best <= bound, "regret {} > {}", learner - best, bound);
    }

    #[test]
    fn ridge_updates_match_batch_solve(
        rows in proptest::collection::vec((proptest::collection::vec(-1.0f64..1.0, 3), -5.0f64..5.0, -5.0f64..5.0), 1..700),
    ) {
        let mut post = RidgePosterior::new(3);
        let mut v = DMatrix::<f64>::identity(3, 3);
        let mut s = DVector::<f64>::zeros(3);
        for (x, yr, yc) in &rows {
            let x = DVector::from_vec(x.clone());
            post.update(&x, *yr, *yc);
            v += &x * x.transpose();
            s += &x * *yr;
            let _ = yc;
        }
        let theta = v.clone().try_inverse().unwrap() * s;
        prop_assert!((post.theta_hat_r() - &theta).norm() < 1e-8 * (1.0 + theta.norm()));
        prop_assert!((post.v() - &v).norm() < 1e-9 * v.norm());
        prop_assert_eq!(post.count(), rows.len());
    }

    #[test]
    fn constrained_samples_lie_in_the_alternative_set(seed in 0u64..10_000, pulls in 0usize..400) {
        let inst = generate_random_instance(2, 5, seed % 50).unwrap();
        let mut rng = RngStream::new(seed);
        let mut noise = rng.fork("noise");
        let mut post = RidgePosterior::new(2);
        for _ in 0..pulls {
            let x = rng.index(inst.train().len());
            let (yr, yc) = feasible_bai::env::pull(&inst, x, &mut noise);
            post.update(&inst.train()[x], yr, yc);
        }
        let excluded = rng.index(inst.test().len());
        for _ in 0..20 {
            let s = sample_constrained_posterior(&post, excluded, inst.test(), inst.tau(), 50.0, 50.0, &mut rng, DEFAULT_MAX_REJECTS);
            prop_assert!(is_alternative(&s.theta1, &s.theta2, excluded, inst.test(), inst.tau()));
            prop_assert!(s.draws <= DEFAULT_MAX_REJECTS + 1);
        }
    }
}

#[test]
fn concentrated_posterior_falls_back_to_projection() {
    let inst = generate_eoo_instance(0.1).unwrap();
    let mut post = RidgePosterior::new(2);
    let mut rng = RngStream::new(1);
    for _ in 0..5000 {
        for x in inst.train().iter() {
            post.update(x, inst.theta_r().dot(x), inst.theta_c().dot(x));
        }
    }
    let s = sample_constrained_posterior(&post, inst.best(), inst.test(), inst.tau(), 1e6, 1e6, &mut rng, 8);
    assert!(!s.accepted);
    assert!(is_alternative(&s.theta1, &s.theta2, inst.best(), inst.test(), inst.tau()));
}
