mod common;

use proptest::prelude::*;
use rand::Rng;
use tsreprogram::metrics::{evaluate_pairs, mae, mse, r2, smape};
use tsreprogram::Error;

/// Pairs with night-like exact zeros mixed in, to exercise the SMAPE rule.
fn seeded_pairs(seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = common::rng(seed);
    let n = rng.random_range(2..200);
    let mut y = Vec::with_capacity(n);
    let mut p = Vec::with_capacity(n);
    for _ in 0..n {
        let night = rng.random_bool(0.3);
        y.push(if night { 0.0 } else { rng.random_range(0.0..1.0) });
        p.push(if night && rng.random_bool(0.5) { 0.0 } else { rng.random_range(-0.1..1.1) });
    }
    if y.iter().all(|v| *v == y[0]) {
        y[0] += 0.5;
    }
    (y, p)
}

#[test]
fn library_matches_loop_oracle_on_100_pairs() {
    for seed in 0..100 {
        let (y, p) = seeded_pairs(seed);
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12;
        assert!(close(mae(&y, &p).unwrap(), common::loop_mae(&y, &p)), "mae, seed {seed}");
        assert!(close(mse(&y, &p).unwrap(), common::loop_mse(&y, &p)), "mse, seed {seed}");
        assert!(close(r2(&y, &p).unwrap().0, common::loop_r2(&y, &p)), "r2, seed {seed}");
        assert!(close(smape(&y, &p).unwrap(), common::loop_smape(&y, &p)), "smape, seed {seed}");
    }
}

#[test]
fn hand_fixtures() {
    assert_eq!(smape(&[1.0], &[3.0]).unwrap(), 100.0);
    let y = [0.2, 0.4, 0.9];
    let mean = (0.2 + 0.4 + 0.9) / 3.0;
    assert_eq!(r2(&y, &[mean; 3]).unwrap().0, 0.0);
    assert_eq!(r2(&y, &y).unwrap(), (1.0, 1.0));
    assert_eq!(smape(&[0.0, 0.0], &[0.0, 0.0]).unwrap(), 0.0);
    assert_eq!(smape(&[0.0], &[0.5]).unwrap(), 200.0);
}

#[test]
fn degenerate_truth() {
    assert!(matches!(r2(&[0.3; 5], &[0.3; 5]), Err(Error::Degenerate(_))));
    assert!(matches!(r2(&[0.3], &[0.3]), Err(Error::Shape(_))));
}

proptest! {
    #[test]
    fn report_invariants(pairs in prop::collection::vec((0.0f64..1.0, -0.5f64..1.5), 2..100)) {
        let (mut y, p): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        if y.iter().all(|v| *v == y[0]) {
            y[0] += 0.25;
        }
        let r = evaluate_pairs(&y, &p).unwrap();
        prop_assert!(r.mse >= 0.0 && r.mae >= 0.0);
        prop_assert!((0.0..=200.0).contains(&r.smape));
        prop_assert!(r.r2_raw <= 1.0);
        prop_assert!((0.0..=1.0).contains(&r.r2_reported));
        prop_assert_eq!(r.r2_reported, r.r2_raw.max(0.0));
        prop_assert!(r.mae * r.mae <= r.mse + 1e-12);
    }
}
