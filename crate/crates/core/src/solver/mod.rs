//! Decomposition solver for the double-hinge PU dual problem.
//!
//! The dual lives on the unlabeled samples only:
//!
//! ```text
//! min  1/2 s'Qs - b's - 1/2 sum(delta)
//! s.t. sum(s) = c1 p,  s + delta/2 <= c2,  s - delta/2 >= 0,  0 <= delta <= c2
//! ```
//!
//! with `Q` the unlabeled block of the Gram matrix and `b_u = c1 sum_p k(x_u, x_p)`.
//! Each iteration picks a violating pair, solves its two-variable problem
//! analytically and updates a cache of bias-free decision values.

mod engine;
pub mod pairs;
pub mod state;
pub mod subproblem;
pub mod trace;

pub use engine::{compute_bias, run, run_observed, train, Solution, StepReport};
pub use pairs::{check_tau_optimality, is_violating_pair, pair_margin, ViolationRule};
pub use state::{classify_membership, recover_alpha, DualState, Membership, MostCriticalValues};
pub use subproblem::{solve_subproblem, Case, SubproblemInputs, SubproblemSolution};
pub use trace::{Scope, SolverTrace, TraceRow, TRACE_HEADER};

use crate::error::{Result, UsmoError};
use crate::kernel::KernelSpec;

/// Training hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparams {
    /// Class prior, in (0, 1).
    pub pi: f64,
    /// Regularization strength, > 0.
    pub lambda: f64,
    /// Optimality tolerance, > 0.
    pub tau: f64,
    pub kernel: KernelSpec,
    /// Membership tolerance relative to `c2`.
    pub set_eps: f64,
    pub max_full_scans: usize,
    pub rule: ViolationRule,
    /// Fixed kernel-row cache capacity; `None` sizes it from the non-bound set.
    pub cache_rows: Option<usize>,
}

impl Hyperparams {
    pub fn new(pi: f64, lambda: f64, kernel: KernelSpec) -> Self {
        Hyperparams {
            pi,
            lambda,
            tau: 1e-3,
            kernel,
            set_eps: 1e-9,
            max_full_scans: 1000,
            rule: ViolationRule::Complete,
            cache_rows: None,
        }
    }

    pub fn with_tau(mut self, tau: f64) -> Self {
        self.tau = tau;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.pi > 0.0 && self.pi < 1.0) {
            return Err(UsmoError::config(format!("pi must lie in (0, 1), got {}", self.pi)));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(UsmoError::config(format!(
                "lambda must be positive, got {}",
                self.lambda
            )));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(UsmoError::config(format!("tau must be positive, got {}", self.tau)));
        }
        if !(self.set_eps >= 0.0 && self.set_eps.is_finite()) {
            return Err(UsmoError::config(format!(
                "set_eps must be non-negative, got {}",
                self.set_eps
            )));
        }
        if self.max_full_scans == 0 {
            return Err(UsmoError::config("max_full_scans must be at least 1"));
        }
        if self.cache_rows == Some(0) {
            return Err(UsmoError::config("cache capacity must be at least one row"));
        }
        self.kernel.validate()
    }
}

/// Constants of the dual problem for a given dataset size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedConstants {
    /// `pi / (2 lambda p)`: coefficient of every labeled positive.
    pub c1: f64,
    /// `1 / (2 lambda n)`: box size of each unlabeled coordinate.
    pub c2: f64,
    /// Right side of the equality constraint, `c1 p`.
    pub target_sum: f64,
    pub p: usize,
    pub n: usize,
}

/// Computes `c1`, `c2` and the equality target, rejecting infeasible setups.
pub fn derive_constants(h: &Hyperparams, p: usize, n: usize) -> Result<DerivedConstants> {
    h.validate()?;
    if p == 0 || n == 0 {
        return Err(UsmoError::input(format!(
            "need at least one positive and one unlabeled sample (p={p}, n={n})"
        )));
    }
    let c1 = h.pi / (2.0 * h.lambda * p as f64);
    let c2 = 1.0 / (2.0 * h.lambda * n as f64);
    let c = DerivedConstants {
        c1,
        c2,
        target_sum: c1 * p as f64,
        p,
        n,
    };
    check_feasible_target(&c).map_err(|_| {
        UsmoError::config(format!(
            "pi={} and lambda={} give target {} above the capacity n*c2={}",
            h.pi,
            h.lambda,
            c.target_sum,
            n as f64 * c2
        ))
    })?;
    Ok(c)
}

/// The equality constraint is satisfiable iff `0 <= target_sum <= n c2`.
pub fn check_feasible_target(c: &DerivedConstants) -> Result<()> {
    let cap = c.n as f64 * c.c2;
    if c.target_sum < 0.0 || c.target_sum > cap * (1.0 + 1e-12) {
        return Err(UsmoError::config(format!(
            "equality target {} outside [0, {cap}]",
            c.target_sum
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_examples() {
        let h = Hyperparams::new(0.5, 0.25, KernelSpec::Linear);
        let c = derive_constants(&h, 1, 2).unwrap();
        assert_eq!((c.c1, c.c2, c.target_sum), (1.0, 1.0, 1.0));

        let h = Hyperparams::new(0.3, 0.01, KernelSpec::Linear);
        let c = derive_constants(&h, 100, 1000).unwrap();
        assert!((c.c1 - 0.15).abs() < 1e-15);
        assert!((c.c2 - 0.05).abs() < 1e-15);
        assert!((c.target_sum - 15.0).abs() < 1e-12);
    }

    #[test]
    fn target_never_exceeds_capacity_for_valid_prior() {
        // target = pi / (2 lambda) and n c2 = 1 / (2 lambda), so any pi < 1 fits.
        let h = Hyperparams::new(0.9, 0.001, KernelSpec::Linear);
        let c = derive_constants(&h, 10, 10).unwrap();
        assert!((c.target_sum - 450.0).abs() < 1e-9);
        assert!((c.n as f64 * c.c2 - 500.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_target_rejected() {
        let c = DerivedConstants {
            c1: 0.45,
            c2: 0.05,
            target_sum: 4.5,
            p: 10,
            n: 10,
        };
        assert!(matches!(check_feasible_target(&c), Err(UsmoError::Config(_))));
    }

    #[test]
    fn invalid_hyperparams() {
        for (pi, lambda) in [(0.0, 0.1), (1.0, 0.1), (0.5, 0.0), (0.5, -1.0), (0.5, f64::NAN)] {
            let h = Hyperparams::new(pi, lambda, KernelSpec::Linear);
            assert!(
                matches!(derive_constants(&h, 1, 2), Err(UsmoError::Config(_))),
                "{pi} {lambda}"
            );
        }
        let h = Hyperparams::new(0.5, 0.1, KernelSpec::Linear).with_tau(0.0);
        assert!(h.validate().is_err());
        let h = Hyperparams::new(0.5, 0.1, KernelSpec::Gaussian { scale: 0.0 });
        assert!(h.validate().is_err());
    }
}
