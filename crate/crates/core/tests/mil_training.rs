use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tilemil::mil::{train, Bag, BagOrigin, MilDims, TrainConfig};
use tilemil::Error;

/// Negative bags hold background noise; positive bags additionally carry
/// one marker instance with a shifted first feature.
fn toy_bags(n: usize, seed: u64) -> Vec<Bag> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let label = (i % 2) as u8;
            let k = rng.random_range(3..8);
            let mut x = Array2::from_shape_simple_fn((k, 6), || rng.random_range(-0.5..0.5));
            if label == 1 {
                let m = rng.random_range(0..k);
                x[[m, 0]] = 3.0;
            }
            Bag {
                bag_id: format!("b{i}"),
                instances: x,
                label,
                weight: 1.0,
                origin: BagOrigin::Patient { patient_id: format!("p{i}") },
            }
        })
        .collect()
}

fn small_cfg(epochs: usize) -> TrainConfig {
    TrainConfig { epochs, seed: 17, ..Default::default() }
}

const DIMS: MilDims = MilDims { d: 6, h1: 32, h2: 32, attn: 16, gated: false };

#[test]
fn separable_toy_converges() {
    let bags = toy_bags(40, 1);
    let out = train(&bags, &[], DIMS, &small_cfg(50)).unwrap();
    let last = out.log.epochs.last().unwrap().train_loss;
    let first = out.log.epochs[0].train_loss;
    assert!(last < 0.1, "final training loss {last}");
    assert!(last < first);
}

#[test]
fn training_is_deterministic() {
    let bags = toy_bags(20, 2);
    let val = toy_bags(6, 3);
    let a = train(&bags, &val, DIMS, &small_cfg(5)).unwrap();
    let b = train(&bags, &val, DIMS, &small_cfg(5)).unwrap();
    assert_eq!(a.params, b.params);
    assert_eq!(a.log, b.log);
}

#[test]
fn selects_lowest_validation_epoch() {
    let bags = toy_bags(20, 4);
    let val = toy_bags(8, 5);
    let out = train(&bags, &val, DIMS, &small_cfg(8)).unwrap();
    let best = out
        .log
        .epochs
        .iter()
        .min_by(|a, b| a.validation_loss.unwrap().total_cmp(&b.validation_loss.unwrap()))
        .unwrap();
    assert_eq!(out.log.best_epoch, best.epoch);
    let recomputed = tilemil::mil::mean_loss(&val, &out.params, &Default::default()).unwrap();
    assert!((recomputed - best.validation_loss.unwrap()).abs() < 1e-12);
}

#[test]
fn single_class_rejected() {
    let mut bags = toy_bags(6, 6);
    bags.iter_mut().for_each(|b| b.label = 1);
    assert!(matches!(train(&bags, &[], DIMS, &small_cfg(1)), Err(Error::SingleClassTraining)));
}

#[test]
fn lr_schedule_logged() {
    let bags = toy_bags(10, 7);
    let cfg = TrainConfig { cycle_steps: Some(10), ..small_cfg(2) };
    let out = train(&bags, &[], DIMS, &cfg).unwrap();
    // last step of each epoch is step 9 and 19 of a 10-step cycle
    let expect = tilemil::mil::cyclic_lr(9, 1e-5, 1e-3, 10);
    assert_eq!(out.log.epochs[0].lr, expect);
    assert_eq!(out.log.epochs[1].lr, expect);
}
