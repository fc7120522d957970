//! Analytic solution of the two-variable subproblem.
//!
//! With `sigma_i + sigma_j = a` fixed, every optimum has each coordinate on
//! one of the two branches (`sigma = delta/2` or
//! `sigma = c2 - delta/2`). That leaves four one-dimensional quadratics in
//! `sigma_j`; each is minimized in closed form, clipped to its feasible
//! interval, and the best of the four is kept.

use crate::error::{Result, UsmoError};

/// Curvature below which the line objective is treated as linear.
pub const ETA_FLOOR: f64 = 1e-12;

/// Everything the subproblem needs about the pair `(i, j)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubproblemInputs {
    pub i: usize,
    pub j: usize,
    /// `e = K_{S,rest} sigma_rest - c1 K_{S,P} 1`, equivalently `-f_S - K_SS sigma_S`.
    pub e: [f64; 2],
    pub k_ii: f64,
    pub k_jj: f64,
    pub k_ij: f64,
    /// `k_ii + k_jj - 2 k_ij`.
    pub eta: f64,
    /// Mass shared by the pair: `target_sum - sum of sigma outside the pair`.
    pub a: f64,
    /// Current `(sigma_i, sigma_j)` and `(delta_i, delta_j)`.
    pub sigma_old: [f64; 2],
    pub delta_old: [f64; 2],
}

impl SubproblemInputs {
    /// Builds the inputs from bias-free decision values of the pair.
    #[allow(clippy::too_many_arguments)]
    pub fn from_decision_values(
        i: usize,
        j: usize,
        f: [f64; 2],
        k_ii: f64,
        k_jj: f64,
        k_ij: f64,
        sigma_old: [f64; 2],
        delta_old: [f64; 2],
    ) -> Self {
        let e = [
            -f[0] - (k_ii * sigma_old[0] + k_ij * sigma_old[1]),
            -f[1] - (k_ij * sigma_old[0] + k_jj * sigma_old[1]),
        ];
        SubproblemInputs {
            i,
            j,
            e,
            k_ii,
            k_jj,
            k_ij,
            eta: k_ii + k_jj - 2.0 * k_ij,
            a: sigma_old[0] + sigma_old[1],
            sigma_old,
            delta_old,
        }
    }

    /// Subproblem objective `1/2 s'K s + e's - 1/2 (delta_i + delta_j)`.
    pub fn objective(&self, sigma: [f64; 2], delta: [f64; 2]) -> f64 {
        let [si, sj] = sigma;
        0.5 * (self.k_ii * si * si + 2.0 * self.k_ij * si * sj + self.k_jj * sj * sj) + self.e[0] * si + self.e[1] * sj
            - 0.5 * (delta[0] + delta[1])
    }
}

/// The branch pattern of a candidate:
/// 1 = both upper, 2 = i upper / j lower, 3 = i lower / j upper, 4 = both lower.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Case {
    BothUpper = 1,
    UpperLower = 2,
    LowerUpper = 3,
    BothLower = 4,
}

impl Case {
    pub const ALL: [Case; 4] = [Case::BothUpper, Case::UpperLower, Case::LowerUpper, Case::BothLower];

    fn i_upper(self) -> bool {
        matches!(self, Case::BothUpper | Case::UpperLower)
    }

    fn j_upper(self) -> bool {
        matches!(self, Case::BothUpper | Case::LowerUpper)
    }

    /// Constant added to the numerator of the stationary point.
    fn shift(self) -> f64 {
        match self {
            Case::BothUpper | Case::BothLower => 0.0,
            Case::UpperLower => 2.0,
            Case::LowerUpper => -2.0,
        }
    }

    /// Feasible interval for `sigma_j`; may be empty (`lo > hi`).
    pub fn interval(self, a: f64, c2: f64) -> (f64, f64) {
        let h = 0.5 * c2;
        match self {
            Case::BothUpper => ((h).max(a - c2), c2.min(a - h)),
            Case::UpperLower => (0f64.max(a - c2), h.min(a - h)),
            Case::LowerUpper => (h.max(a - h), c2.min(a)),
            Case::BothLower => (0f64.max(a - h), h.min(a)),
        }
    }
}

/// Result of one subproblem solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubproblemSolution {
    pub sigma: [f64; 2],
    pub delta: [f64; 2],
    pub case: Case,
    /// Subproblem objective at the new point minus at the old point; this is
    /// also the change of the full dual objective.
    pub objective_delta: f64,
}

fn branch_delta(sigma: f64, upper: bool, c2: f64) -> f64 {
    let d = if upper { 2.0 * (c2 - sigma) } else { 2.0 * sigma };
    d.clamp(0.0, c2)
}

fn point(s: &SubproblemInputs, case: Case, sigma_j: f64, c2: f64) -> ([f64; 2], [f64; 2]) {
    let sj = sigma_j.clamp(0.0, c2);
    let si = (s.a - sj).clamp(0.0, c2);
    let sigma = [si, sj];
    let delta = [
        branch_delta(si, case.i_upper(), c2),
        branch_delta(sj, case.j_upper(), c2),
    ];
    (sigma, delta)
}

/// Solves the pair subproblem exactly.
pub fn solve_subproblem(s: &SubproblemInputs, c2: f64) -> Result<SubproblemSolution> {
    if !(s.a.is_finite() && s.e.iter().all(|v| v.is_finite()) && s.eta.is_finite()) {
        return Err(UsmoError::InternalState("non-finite subproblem inputs".into()));
    }
    let tol = 1e-15 * c2.max(1.0);
    let base = s.a * (s.k_ii - s.k_ij) + s.e[0] - s.e[1];
    let mut best: Option<([f64; 2], [f64; 2], Case, f64)> = None;

    for case in Case::ALL {
        let (lo, hi) = case.interval(s.a, c2);
        if lo > hi + tol {
            continue;
        }
        let hi = hi.max(lo);
        let mut candidates = [f64::NAN; 2];
        if s.eta > ETA_FLOOR {
            candidates[0] = ((base + case.shift()) / s.eta).clamp(lo, hi);
        } else {
            candidates = [lo, hi];
        }
        for sj in candidates.into_iter().filter(|v| !v.is_nan()) {
            let (sigma, delta) = point(s, case, sj, c2);
            let obj = s.objective(sigma, delta);
            if best.is_none_or(|b| obj < b.3) {
                best = Some((sigma, delta, case, obj));
            }
        }
    }

    let (sigma, delta, case, obj) = best
        .ok_or_else(|| UsmoError::InternalState(format!("all four case intervals are empty for a={} c2={c2}", s.a)))?;
    Ok(SubproblemSolution {
        sigma,
        delta,
        case,
        objective_delta: obj - s.objective(s.sigma_old, s.delta_old),
    })
}
