//! Feasible starting points.
//!
//! Unlabeled samples are ranked by how much they look like the positives and
//! split into five groups: `sigma = 0`, `sigma2` on the lower branch, the kink
//! `c2/2`, `sigma4` on the upper branch and `c2`. Group proportions come from
//! a small least-squares problem that makes the equality constraint nearly
//! hold; a repair pass then makes it hold exactly.

use crate::data::Dataset;
use crate::error::{Result, UsmoError};
use crate::kernel::KernelSpec;
use crate::solver::{DerivedConstants, DualState};

/// How to build the starting point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitMode {
    #[default]
    Ranked,
    Uniform,
}

impl std::str::FromStr for InitMode {
    type Err = UsmoError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ranked" => Ok(InitMode::Ranked),
            "uniform" => Ok(InitMode::Uniform),
            _ => Err(UsmoError::config(format!(
                "unknown init mode '{s}' (expected ranked or uniform)"
            ))),
        }
    }
}

/// Group proportions and levels of the five-group start.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitPlan {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub sigma2: f64,
    pub sigma4: f64,
    /// Group sizes `n1..n5`, lowest rank first.
    pub sizes: [usize; 5],
    /// Squared equality residual at `(a, b, c, sigma2, sigma4)`.
    pub residual: f64,
    /// True when the box was empty and every sample gets `target_sum / n`.
    pub uniform: bool,
}

/// Kernel mean score `(1/p) sum_p k(x_u, x_p)` of every unlabeled sample.
pub fn kernel_mean_scores(data: &Dataset, kernel: KernelSpec) -> Vec<f64> {
    let p = data.p();
    (0..data.n())
        .map(|u| {
            let xu = data.unlabeled(u);
            (0..p).map(|q| kernel.eval_unchecked(xu, data.positive(q))).sum::<f64>() / p as f64
        })
        .collect()
}

/// Unlabeled indices sorted by ascending kernel mean score.
pub fn rank_unlabeled(data: &Dataset, kernel: KernelSpec) -> Vec<usize> {
    rank_by_scores(&kernel_mean_scores(data, kernel))
}

/// Indices sorted by ascending score, ties by index. Any scorer plugs in here.
pub fn rank_by_scores(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&x, &y| scores[x].total_cmp(&scores[y]).then(x.cmp(&y)));
    order
}

/// The box of the group-size problem for a given `n` and prior.
#[derive(Debug, Clone, Copy)]
struct PlanBox {
    a_lo: f64,
    a_hi: f64,
    bc_lo: f64,
    bc_hi: f64,
    sum_hi: f64,
    c2: f64,
}

impl PlanBox {
    fn new(pi: f64, n: usize, c2: f64) -> Option<Self> {
        let nf = n as f64;
        let bc_lo = 1.0 / nf;
        let bc_hi = nf.ln() / nf;
        let sum_hi = 1.0 - 1.0 / nf;
        let a_lo = (1.0 / (pi * nf)).max(1.0 / ((1.0 - pi) * nf));
        let a_hi = (1.0 / (1.0 - pi)).min(1.0 / pi).min(sum_hi - 2.0 * bc_lo);
        (a_lo <= a_hi && bc_lo <= bc_hi).then_some(PlanBox {
            a_lo,
            a_hi,
            bc_lo,
            bc_hi,
            sum_hi,
            c2,
        })
    }

    fn contains(&self, x: &[f64; 5]) -> bool {
        let [a, b, c, s2, s4] = *x;
        let h = 0.5 * self.c2;
        (self.a_lo..=self.a_hi).contains(&a)
            && (self.bc_lo..=self.bc_hi).contains(&b)
            && (self.bc_lo..=self.bc_hi).contains(&c)
            && a + b + c <= self.sum_hi
            && s2 > 0.0
            && s2 < h
            && s4 > h
            && s4 < self.c2
    }
}

fn plan_residual(x: &[f64; 5], target: f64, pi: f64, n: usize, c2: f64) -> f64 {
    let [a, b, c, s2, s4] = *x;
    let nf = n as f64;
    let r = target - b * nf * s2 - c * nf * s4 - c2 * nf * (pi * a + 0.5 * (1.0 - a - b - c));
    r * r
}

fn linspace(lo: f64, hi: f64, k: usize, i: usize) -> f64 {
    if k == 1 {
        lo
    } else {
        lo + (hi - lo) * i as f64 / (k - 1) as f64
    }
}

/// Number of grid points per variable.
pub const PLAN_GRID: usize = 20;

/// Solves the group-size problem by grid search plus pattern-search refinement.
pub fn plan_groups(c: &DerivedConstants, pi: f64, n: usize) -> InitPlan {
    plan_groups_with_grid(c, pi, n, PLAN_GRID)
}

pub fn plan_groups_with_grid(c: &DerivedConstants, pi: f64, n: usize, grid: usize) -> InitPlan {
    let c2 = c.c2;
    let Some(bx) = PlanBox::new(pi, n, c2) else {
        return uniform_plan(c, n);
    };
    let target = c.target_sum;
    let f = |x: &[f64; 5]| plan_residual(x, target, pi, n, c2);
    let g = grid.max(2);
    let h = 0.5 * c2;
    let interior = |lo: f64, i: usize| lo + h * (i + 1) as f64 / (g + 1) as f64;

    let mut best: Option<([f64; 5], f64)> = None;
    for ia in 0..g {
        let a = linspace(bx.a_lo, bx.a_hi, g, ia);
        for ib in 0..g {
            let b = linspace(bx.bc_lo, bx.bc_hi, g, ib);
            for ic in 0..g {
                let cc = linspace(bx.bc_lo, bx.bc_hi, g, ic);
                if a + b + cc > bx.sum_hi {
                    continue;
                }
                for i2 in 0..g {
                    for i4 in 0..g {
                        let x = [a, b, cc, interior(0.0, i2), interior(h, i4)];
                        let r = f(&x);
                        if best.is_none_or(|(_, br)| r < br) {
                            best = Some((x, r));
                        }
                    }
                }
            }
        }
    }
    let Some((mut x, mut r)) = best else {
        return uniform_plan(c, n);
    };

    let mut step = [
        (bx.a_hi - bx.a_lo) / g as f64,
        (bx.bc_hi - bx.bc_lo) / g as f64,
        (bx.bc_hi - bx.bc_lo) / g as f64,
        h / g as f64,
        h / g as f64,
    ];
    for _ in 0..200 {
        if r == 0.0 {
            break;
        }
        let mut improved = false;
        for k in 0..5 {
            for dir in [-1.0, 1.0] {
                let mut y = x;
                y[k] += dir * step[k];
                if bx.contains(&y) {
                    let ry = f(&y);
                    if ry < r {
                        (x, r, improved) = (y, ry, true);
                    }
                }
            }
        }
        if !improved {
            step.iter_mut().for_each(|s| *s *= 0.5);
        }
    }

    let [a, b, cc, sigma2, sigma4] = x;
    InitPlan {
        a,
        b,
        c: cc,
        sigma2,
        sigma4,
        sizes: round_sizes(a, b, cc, pi, n),
        residual: r,
        uniform: false,
    }
}

fn round_sizes(a: f64, b: f64, c: f64, pi: f64, n: usize) -> [usize; 5] {
    let nf = n as f64;
    let mut s = [
        ((1.0 - pi) * a * nf).round() as usize,
        (b * nf).round() as usize,
        0,
        (c * nf).round() as usize,
        (pi * a * nf).round() as usize,
    ];
    // trim the outer groups first if rounding overshot n
    for k in [0, 4, 1, 3] {
        let total: usize = s.iter().sum();
        if total > n {
            s[k] -= s[k].min(total - n);
        }
    }
    s[2] = n - s.iter().sum::<usize>();
    s
}

fn uniform_plan(c: &DerivedConstants, n: usize) -> InitPlan {
    InitPlan {
        a: 0.0,
        b: 0.0,
        c: 0.0,
        // the common level, for reference
        sigma2: c.target_sum / n.max(1) as f64,
        sigma4: 0.0,
        sizes: [0, 0, n, 0, 0],
        residual: 0.0,
        uniform: true,
    }
}

/// `delta = min(2 sigma, 2 (c2 - sigma))`, the largest delta allowed for `sigma`.
fn best_delta(sigma: f64, c2: f64) -> f64 {
    (2.0 * sigma).min(2.0 * (c2 - sigma)).clamp(0.0, c2)
}

/// Assigns group levels along `order` (ascending rank) and repairs the
/// equality constraint.
pub fn assign_initial(plan: &InitPlan, order: &[usize], c: &DerivedConstants) -> Result<DualState> {
    let n = c.n;
    if order.len() != n || plan.sizes.iter().sum::<usize>() != n {
        return Err(UsmoError::input(format!(
            "plan covers {} samples and ranking {}, expected {n}",
            plan.sizes.iter().sum::<usize>(),
            order.len()
        )));
    }
    let c2 = c.c2;
    let mut sigma = vec![0.0; n];
    if plan.uniform {
        sigma.iter_mut().for_each(|s| *s = c.target_sum / n as f64);
    } else {
        let levels = [0.0, plan.sigma2, 0.5 * c2, plan.sigma4, c2];
        let mut pos = 0;
        for (g, &size) in plan.sizes.iter().enumerate() {
            for &u in &order[pos..pos + size] {
                sigma[u] = levels[g];
            }
            pos += size;
        }
        repair(&mut sigma, plan, order, c)?;
    }
    let delta = sigma.iter().map(|&s| best_delta(s, c2)).collect();
    Ok(DualState::new(sigma, delta))
}

/// Moves `sigma` toward `sum = target_sum`, preferring groups 2 and 4, then
/// the group-1 / group-5 samples nearest the middle, then anything.
fn repair(sigma: &mut [f64], plan: &InitPlan, order: &[usize], c: &DerivedConstants) -> Result<()> {
    let c2 = c.c2;
    let [n1, n2, n3, n4, _] = plan.sizes;
    let g1 = &order[..n1];
    let g2 = &order[n1..n1 + n2];
    let g3 = &order[n1 + n2..n1 + n2 + n3];
    let g4 = &order[n1 + n2 + n3..n1 + n2 + n3 + n4];
    let g5 = &order[n1 + n2 + n3 + n4..];
    let mut r = c.target_sum - sigma.iter().sum::<f64>();

    let spread = |sigma: &mut [f64], group: &[usize], r: &mut f64, lo: f64, hi: f64| {
        if group.is_empty() || *r == 0.0 {
            return;
        }
        let m = group.len() as f64;
        let per = *r / m;
        for &u in group {
            let new = (sigma[u] + per).clamp(lo, hi);
            *r -= new - sigma[u];
            sigma[u] = new;
        }
    };
    let single = |sigma: &mut [f64], idx: &mut dyn Iterator<Item = &usize>, r: &mut f64| {
        for &u in idx {
            if *r == 0.0 {
                break;
            }
            let new = (sigma[u] + *r).clamp(0.0, c2);
            *r -= new - sigma[u];
            sigma[u] = new;
        }
    };

    if r > 0.0 {
        spread(sigma, g2, &mut r, 0.0, 0.5 * c2);
        spread(sigma, g4, &mut r, 0.5 * c2, c2);
        single(sigma, &mut g1.iter().rev(), &mut r);
    } else if r < 0.0 {
        spread(sigma, g4, &mut r, 0.5 * c2, c2);
        spread(sigma, g2, &mut r, 0.0, 0.5 * c2);
        single(sigma, &mut g5.iter(), &mut r);
    }
    let everything: Vec<usize> = g3.iter().chain(g2).chain(g4).chain(g1).chain(g5).copied().collect();
    single(sigma, &mut everything.iter(), &mut r);

    let err = c.target_sum - sigma.iter().sum::<f64>();
    if err.abs() > crate::solver::state::equality_tolerance(c.target_sum) {
        return Err(UsmoError::config(format!(
            "cannot place mass {} into {} samples with cap {c2}",
            c.target_sum, c.n
        )));
    }
    Ok(())
}

/// A feasible start for `data` in the given mode.
pub fn initial_state(data: &Dataset, kernel: KernelSpec, c: &DerivedConstants, mode: InitMode) -> Result<DualState> {
    let n = c.n;
    let order: Vec<usize>;
    let plan = match mode {
        InitMode::Uniform => {
            order = (0..n).collect();
            uniform_plan(c, n)
        }
        InitMode::Ranked => {
            order = rank_unlabeled(data, kernel);
            let pi = c.target_sum / (n as f64 * c.c2);
            plan_groups(c, pi, n)
        }
    };
    assign_initial(&plan, &order, c)
}
