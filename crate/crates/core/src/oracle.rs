//! Dense reference solvers for small instances.
//!
//! `delta` is eliminated analytically: for fixed `sigma` the best choice is
//! `min(2 sigma, 2 (c2 - sigma))`, which leaves the convex problem
//!
//! ```text
//! min G(s) = 1/2 s'Qs - b's - sum_u min(s_u, c2 - s_u)
//! s.t. sum(s) = target_sum, 0 <= s <= c2
//! ```
//!
//! [`solve_dense`] minimizes it with accelerated proximal gradient, the prox
//! of the piecewise-linear term plus the capped simplex being exact.
//! [`enumerate_tiny`] grid-searches it for `n <= 4` with a certified gap.

use crate::data::Dataset;
use crate::error::{Result, UsmoError};
use crate::kernel::KernelSpec;
use crate::solver::DerivedConstants;

/// Largest `p + n` for which a dense Gram matrix is built.
pub const DENSE_LIMIT: usize = 2000;
/// Largest `n` accepted by [`enumerate_tiny`].
pub const ENUMERATE_LIMIT: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleMethod {
    ProximalGradient,
    GridEnumeration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    pub sigma: Vec<f64>,
    pub delta: Vec<f64>,
    pub objective: f64,
    pub method: OracleMethod,
    /// Upper bound on `objective - optimum`; zero when not certified.
    pub certified_gap: f64,
    pub iterations: usize,
}

/// `min(2 sigma, 2 (c2 - sigma), c2)` for each coordinate.
pub fn reduce_delta(sigma: &[f64], c2: f64) -> Result<Vec<f64>> {
    sigma
        .iter()
        .enumerate()
        .map(|(u, &s)| {
            if !(0.0..=c2).contains(&s) {
                return Err(UsmoError::input(format!("sigma[{u}]={s} outside [0, {c2}]")));
            }
            Ok((2.0 * s).min(2.0 * (c2 - s)).min(c2))
        })
        .collect()
}

/// Dense form of the reduced problem.
#[derive(Debug, Clone)]
pub struct DenseProblem {
    /// Row-major `n x n` unlabeled Gram block.
    pub q: Vec<f64>,
    /// `c1 sum_p k(x_u, x_p)`.
    pub b: Vec<f64>,
    pub c: DerivedConstants,
}

impl DenseProblem {
    pub fn new(data: &Dataset, c: &DerivedConstants, kernel: KernelSpec) -> Result<Self> {
        if data.len() > DENSE_LIMIT {
            return Err(UsmoError::input(format!(
                "dense oracle limited to {DENSE_LIMIT} samples, got {}",
                data.len()
            )));
        }
        if data.p() != c.p || data.n() != c.n {
            return Err(UsmoError::input("constants do not match the dataset"));
        }
        kernel.validate()?;
        let (p, n) = (c.p, c.n);
        let mut q = vec![0.0; n * n];
        for u in 0..n {
            for v in u..n {
                let k = kernel.eval_unchecked(data.unlabeled(u), data.unlabeled(v));
                q[u * n + v] = k;
                q[v * n + u] = k;
            }
        }
        let b = (0..n)
            .map(|u| {
                c.c1 * (0..p)
                    .map(|i| kernel.eval_unchecked(data.unlabeled(u), data.positive(i)))
                    .sum::<f64>()
            })
            .collect();
        Ok(DenseProblem { q, b, c: *c })
    }

    pub fn n(&self) -> usize {
        self.b.len()
    }

    fn q_times(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n();
        (0..n)
            .map(|u| self.q[u * n..(u + 1) * n].iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `G(sigma)`; equals the dual objective at `(sigma, reduce_delta(sigma))`.
    pub fn objective(&self, sigma: &[f64]) -> f64 {
        let c2 = self.c.c2;
        let qs = self.q_times(sigma);
        let quad: f64 = sigma.iter().zip(&qs).map(|(s, v)| s * v).sum();
        let lin: f64 = sigma.iter().zip(&self.b).map(|(s, b)| s * b).sum();
        let kink: f64 = sigma.iter().map(|&s| (2.0 * s).min(2.0 * (c2 - s)).min(c2)).sum();
        0.5 * quad - lin - 0.5 * kink
    }

    /// Bound on the norm of any subgradient of `G` over the box.
    pub fn lipschitz_bound(&self) -> f64 {
        let n = self.n();
        let c2 = self.c.c2;
        (0..n)
            .map(|u| {
                let row: f64 = self.q[u * n..(u + 1) * n].iter().map(|v| v.abs()).sum();
                let g = row * c2 + self.b[u].abs() + 1.0;
                g * g
            })
            .sum::<f64>()
            .sqrt()
    }

    fn largest_eigenvalue(&self) -> f64 {
        let n = self.n();
        let mut x = vec![1.0 / (n as f64).sqrt(); n];
        let mut lambda = 0.0;
        for _ in 0..200 {
            let y = self.q_times(&x);
            let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm == 0.0 {
                return 0.0;
            }
            lambda = norm;
            x = y.into_iter().map(|v| v / norm).collect();
        }
        lambda
    }
}

/// Solves `min_x 1/2 |x - v|^2 + gamma h(x)` over the capped simplex, where
/// `h(x) = -sum min(x_u, c2 - x_u)`.
pub fn prox_capped_simplex(v: &[f64], gamma: f64, c2: f64, target: f64) -> Vec<f64> {
    let h = 0.5 * c2;
    let coord = |w: f64| -> f64 {
        let x = if w + gamma < h {
            w + gamma
        } else if w - gamma > h {
            w - gamma
        } else {
            h
        };
        x.clamp(0.0, c2)
    };
    let total = |mu: f64| v.iter().map(|&vi| coord(vi + mu)).sum::<f64>();
    let vmax = v.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let vmin = v.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    let (mut lo, mut hi) = (-vmax - gamma - c2 - 1.0, -vmin + gamma + c2 + 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if total(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-16 * (1.0 + hi.abs()) {
            break;
        }
    }
    let mut x: Vec<f64> = v.iter().map(|&vi| coord(vi + hi)).collect();
    // absorb the last bisection residue into a coordinate with room
    let mut r = target - x.iter().sum::<f64>();
    for xi in x.iter_mut() {
        if r == 0.0 {
            break;
        }
        let new = (*xi + r).clamp(0.0, c2);
        r -= new - *xi;
        *xi = new;
    }
    x
}

/// Maximum number of proximal-gradient iterations.
pub const DENSE_MAX_ITERS: usize = 100_000;

/// Minimizes the reduced dual with restarted FISTA.
pub fn solve_dense(data: &Dataset, c: &DerivedConstants, kernel: KernelSpec) -> Result<OracleSolution> {
    crate::solver::check_feasible_target(c)?;
    let prob = DenseProblem::new(data, c, kernel)?;
    Ok(solve_dense_problem(&prob))
}

pub fn solve_dense_problem(prob: &DenseProblem) -> OracleSolution {
    let c = prob.c;
    let n = prob.n();
    let (c2, target) = (c.c2, c.target_sum);
    let start = vec![target / n as f64; n];
    if n == 1 {
        return finish(prob, start, OracleMethod::ProximalGradient, 0.0, 0);
    }
    let l = prob.largest_eigenvalue() * 1.05 + 1e-12;
    let gamma = 1.0 / l;

    let mut x = start.clone();
    let mut y = start;
    let mut t = 1.0f64;
    let mut fx = prob.objective(&x);
    let mut best = (x.clone(), fx);
    let mut iters = 0;
    while iters < DENSE_MAX_ITERS {
        iters += 1;
        let qy = prob.q_times(&y);
        let v: Vec<f64> = (0..n).map(|u| y[u] - gamma * (qy[u] - prob.b[u])).collect();
        let x_new = prox_capped_simplex(&v, gamma, c2, target);
        let f_new = prob.objective(&x_new);
        let step: f64 = x_new.iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let scale = x_new.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);

        if f_new > fx {
            // adaptive restart: drop momentum, retry from x
            if t == 1.0 || step <= 1e-15 * scale {
                break;
            }
            t = 1.0;
            y = x.clone();
            continue;
        }
        let t_new = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let beta = (t - 1.0) / t_new;
        y = (0..n).map(|u| x_new[u] + beta * (x_new[u] - x[u])).collect();
        t = t_new;
        x = x_new;
        fx = f_new;
        if fx < best.1 {
            best = (x.clone(), fx);
        }
        if step <= 1e-14 * scale {
            break;
        }
    }
    finish(prob, best.0, OracleMethod::ProximalGradient, 0.0, iters)
}

fn finish(prob: &DenseProblem, sigma: Vec<f64>, method: OracleMethod, gap: f64, iterations: usize) -> OracleSolution {
    let c2 = prob.c.c2;
    let sigma: Vec<f64> = sigma.into_iter().map(|s| s.clamp(0.0, c2)).collect();
    let delta = reduce_delta(&sigma, c2).expect("clamped into the box");
    OracleSolution {
        objective: prob.objective(&sigma),
        sigma,
        delta,
        method,
        certified_gap: gap,
        iterations,
    }
}

/// Exhaustive grid over the feasible set for `n <= 4`.
///
/// Coordinates `1..n-1` take `steps` points over their feasible range given
/// the earlier ones; the last coordinate absorbs the remainder. The gap is
/// `L * D`, with `L` a subgradient bound of `G` and `D` a bound on the
/// distance from the optimum to the nearest grid point.
pub fn enumerate_tiny(
    data: &Dataset,
    c: &DerivedConstants,
    kernel: KernelSpec,
    steps: usize,
) -> Result<OracleSolution> {
    if c.n > ENUMERATE_LIMIT {
        return Err(UsmoError::input(format!(
            "grid enumeration limited to n <= {ENUMERATE_LIMIT}, got n = {}",
            c.n
        )));
    }
    if steps < 2 {
        return Err(UsmoError::config("enumeration needs at least 2 steps"));
    }
    crate::solver::check_feasible_target(c)?;
    let prob = DenseProblem::new(data, c, kernel)?;
    Ok(enumerate_problem(&prob, steps))
}

pub fn enumerate_problem(prob: &DenseProblem, steps: usize) -> OracleSolution {
    let c = prob.c;
    let n = prob.n();
    let c2 = c.c2;
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut sigma = vec![0.0; n];
    recurse(prob, &mut sigma, 0, c.target_sum, steps, &mut best);
    let (sigma, _) = best.expect("feasible target always yields a grid point");

    let h = c2 / (steps - 1) as f64;
    let mut errs = Vec::with_capacity(n);
    let mut carried = 0.0;
    for _ in 0..n.saturating_sub(1) {
        let e = 0.5 * h + carried;
        errs.push(e);
        carried += e;
    }
    errs.push(carried);
    let dist = errs.iter().map(|e| e * e).sum::<f64>().sqrt();
    finish(
        prob,
        sigma,
        OracleMethod::GridEnumeration,
        prob.lipschitz_bound() * dist,
        0,
    )
}

fn recurse(
    prob: &DenseProblem,
    sigma: &mut [f64],
    k: usize,
    remaining: f64,
    steps: usize,
    best: &mut Option<(Vec<f64>, f64)>,
) {
    let n = sigma.len();
    let c2 = prob.c.c2;
    if k == n - 1 {
        sigma[k] = remaining.clamp(0.0, c2);
        let g = prob.objective(sigma);
        if best.as_ref().is_none_or(|b| g < b.1) {
            *best = Some((sigma.to_vec(), g));
        }
        return;
    }
    let rest = (n - k - 1) as f64 * c2;
    let lo = (remaining - rest).max(0.0);
    let hi = remaining.min(c2);
    if lo > hi {
        return;
    }
    for i in 0..steps {
        let s = lo + (hi - lo) * i as f64 / (steps - 1) as f64;
        sigma[k] = s;
        recurse(prob, sigma, k + 1, remaining - s, steps, best);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t1() -> (Dataset, DerivedConstants) {
        let data = Dataset::new(&[vec![1.0]], &[vec![1.0], vec![-1.0]]).unwrap();
        let c = DerivedConstants {
            c1: 1.0,
            c2: 1.0,
            target_sum: 1.0,
            p: 1,
            n: 2,
        };
        (data, c)
    }

    #[test]
    fn reduce_delta_examples() {
        let d = reduce_delta(&[0.3, 0.5, 0.9], 1.0).unwrap();
        assert!((d[0] - 0.6).abs() < 1e-15 && d[1] == 1.0 && (d[2] - 0.2).abs() < 1e-15);
        assert!(reduce_delta(&[1.5], 1.0).is_err());
    }

    #[test]
    fn dense_on_tiny_instance() {
        let (data, c) = t1();
        let sol = solve_dense(&data, &c, KernelSpec::Linear).unwrap();
        assert!((sol.objective + 1.0).abs() < 1e-9, "{}", sol.objective);
        assert!((sol.sigma[0] - 0.5).abs() < 1e-6 && (sol.sigma[1] - 0.5).abs() < 1e-6);
    }

    #[test]
    fn enumeration_on_tiny_instance() {
        let (data, c) = t1();
        let sol = enumerate_tiny(&data, &c, KernelSpec::Linear, 10_001).unwrap();
        assert!((sol.objective + 1.0).abs() < 1e-6);
        let coarse = enumerate_tiny(&data, &c, KernelSpec::Linear, 2).unwrap();
        // endpoints: (1, 0) gives -1/2, (0, 1) gives 3/2
        assert_eq!(coarse.objective, -0.5);
        assert!(coarse.certified_gap > sol.certified_gap);
    }

    #[test]
    fn enumeration_rejects_large_n() {
        let data = Dataset::new(&[vec![1.0]], &vec![vec![0.0]; 5]).unwrap();
        let c = DerivedConstants {
            c1: 1.0,
            c2: 0.5,
            target_sum: 1.0,
            p: 1,
            n: 5,
        };
        assert!(matches!(
            enumerate_tiny(&data, &c, KernelSpec::Linear, 3),
            Err(UsmoError::Input(_))
        ));
    }

    #[test]
    fn single_coordinate_is_forced() {
        let data = Dataset::new(&[vec![1.0]], &[vec![2.0]]).unwrap();
        let c = DerivedConstants {
            c1: 0.5,
            c2: 1.0,
            target_sum: 0.5,
            p: 1,
            n: 1,
        };
        let sol = solve_dense(&data, &c, KernelSpec::Linear).unwrap();
        assert_eq!(sol.sigma, vec![0.5]);
        // 1/2 * 4 * 0.25 - 0.5 * 2 * 0.5 - 0.5 * 1
        assert!((sol.objective - (0.5 - 0.5 - 0.5)).abs() < 1e-15);
    }

    #[test]
    fn prox_output_is_feasible() {
        let v = [0.9, -0.3, 0.2, 0.45, 1.7];
        let x = prox_capped_simplex(&v, 0.05, 1.0, 2.0);
        assert!((x.iter().sum::<f64>() - 2.0).abs() < 1e-12);
        assert!(x.iter().all(|&xi| (0.0..=1.0).contains(&xi)));
    }

    #[test]
    fn dense_agrees_with_enumeration_on_random_small_instances() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for trial in 0..10 {
            let n = 2 + trial % 3;
            let pos: Vec<Vec<f64>> = (0..3)
                .map(|_| vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
                .collect();
            let unl: Vec<Vec<f64>> = (0..n)
                .map(|_| vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
                .collect();
            let data = Dataset::new(&pos, &unl).unwrap();
            let h = crate::solver::Hyperparams::new(0.4, 0.3, KernelSpec::Gaussian { scale: 0.8 });
            let c = crate::solver::derive_constants(&h, 3, n).unwrap();
            let dense = solve_dense(&data, &c, h.kernel).unwrap();
            let grid = enumerate_tiny(&data, &c, h.kernel, if n == 4 { 121 } else { 801 }).unwrap();
            assert!(
                dense.objective <= grid.objective + 1e-12,
                "{} vs {}",
                dense.objective,
                grid.objective
            );
            assert!(grid.objective - dense.objective <= grid.certified_gap);
        }
    }
}
