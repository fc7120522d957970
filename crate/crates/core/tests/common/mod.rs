#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use usmo::data::Dataset;
use usmo::kernel::KernelSpec;
use usmo::solver::DualState;

/// Positives around `+sep/2 e1`; unlabeled a 50/50 mix of both blobs.
pub fn random_instance(seed: u64, p: usize, n: usize, d: usize, sep: f64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let point = |shift: f64, rng: &mut ChaCha8Rng| -> Vec<f64> {
        let mut x: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        x[0] += shift;
        x
    };
    let pos: Vec<Vec<f64>> = (0..p).map(|_| point(0.5 * sep, &mut rng)).collect();
    let unl: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let s = if rng.random_bool(0.5) { 0.5 * sep } else { -0.5 * sep };
            point(s, &mut rng)
        })
        .collect();
    Dataset::new(&pos, &unl).unwrap()
}

/// Bias-free decision values recomputed from scratch.
pub fn scratch_values(data: &Dataset, kernel: KernelSpec, sigma: &[f64], c1: f64) -> Vec<f64> {
    let p = data.p();
    (0..data.n())
        .map(|u| {
            let xu = data.unlabeled(u);
            let pos: f64 = (0..p).map(|i| kernel.eval_unchecked(xu, data.positive(i))).sum();
            let unl: f64 = sigma
                .iter()
                .enumerate()
                .map(|(v, s)| s * kernel.eval_unchecked(xu, data.unlabeled(v)))
                .sum();
            c1 * pos - unl
        })
        .collect()
}

/// T1: one positive at 1, unlabeled at 1 and -1.
pub fn t1() -> Dataset {
    Dataset::new(&[vec![1.0]], &[vec![1.0], vec![-1.0]]).unwrap()
}

pub fn t1_start() -> DualState {
    DualState::new(vec![1.0, 0.0], vec![0.0, 0.0])
}
