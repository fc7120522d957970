mod common;

use common::{random_instance, scratch_values};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use usmo::kernel::KernelSpec;
use usmo::oracle::{prox_capped_simplex, reduce_delta, DenseProblem};
use usmo::solver::{derive_constants, Hyperparams};

fn random_feasible(rng: &mut ChaCha8Rng, n: usize, c2: f64, target: f64) -> Vec<f64> {
    let v: Vec<f64> = (0..n).map(|_| rng.random_range(-c2..2.0 * c2)).collect();
    prox_capped_simplex(&v, 0.0, c2, target)
}

#[test]
fn reduced_objective_equals_full_objective() {
    let data = random_instance(2, 6, 15, 3, 1.0);
    let kernel = KernelSpec::Gaussian { scale: 1.2 };
    let h = Hyperparams::new(0.35, 0.05, kernel);
    let c = derive_constants(&h, 6, 15).unwrap();
    let prob = DenseProblem::new(&data, &c, kernel).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..20 {
        let sigma = random_feasible(&mut rng, 15, c.c2, c.target_sum);
        let delta = reduce_delta(&sigma, c.c2).unwrap();
        // F = -1/2 sum sigma (b + f) - 1/2 sum delta, with f from scratch
        let f = scratch_values(&data, kernel, &sigma, c.c1);
        let full: f64 =
            -0.5 * (0..15).map(|u| sigma[u] * (prob.b[u] + f[u])).sum::<f64>() - 0.5 * delta.iter().sum::<f64>();
        assert!((prob.objective(&sigma) - full).abs() < 1e-10);
    }
}

#[test]
fn reduced_objective_is_convex() {
    let data = random_instance(5, 4, 12, 2, 1.0);
    let kernel = KernelSpec::Linear;
    let h = Hyperparams::new(0.5, 0.02, kernel);
    let c = derive_constants(&h, 4, 12).unwrap();
    let prob = DenseProblem::new(&data, &c, kernel).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..200 {
        let a = random_feasible(&mut rng, 12, c.c2, c.target_sum);
        let b = random_feasible(&mut rng, 12, c.c2, c.target_sum);
        let t: f64 = rng.random_range(0.0..1.0);
        let mix: Vec<f64> = a.iter().zip(&b).map(|(x, y)| t * x + (1.0 - t) * y).collect();
        let lhs = prob.objective(&mix);
        let rhs = t * prob.objective(&a) + (1.0 - t) * prob.objective(&b);
        assert!(lhs <= rhs + 1e-9, "{lhs} > {rhs}");
    }
}

#[test]
fn dense_limit_enforced() {
    let data = random_instance(0, 1, 2001, 1, 1.0);
    let h = Hyperparams::new(0.5, 0.1, KernelSpec::Linear);
    let c = derive_constants(&h, 1, 2001).unwrap();
    assert!(DenseProblem::new(&data, &c, KernelSpec::Linear).is_err());
}
