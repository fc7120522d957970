//! Violating-pair conditions, tau-optimality and working-set candidates.
//!
//! All conditions compare differences of bias-free decision values, so the
//! bias never has to be known while the solver runs.

use super::state::{Membership, MostCriticalValues};

/// Which pair conditions count as a violation.
///
/// `SixConditions` checks the six membership conditions only. `Complete` adds the
/// D3/D3 condition `|f_i - f_j| > 2 + tau`: a non-bound sample on the upper
/// branch (`sigma > c2/2`) whose value exceeds a lower-branch sample's value
/// by more than 2 can still trade mass with it, and without this condition
/// the solver may stop short of the optimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ViolationRule {
    SixConditions,
    #[default]
    Complete,
}

/// True iff `(i, j)` breaks one of the pair conditions at tolerance `tau`.
pub fn is_violating_pair(mi: Membership, fi: f64, mj: Membership, fj: f64, tau: f64, rule: ViolationRule) -> bool {
    let d = fi - fj;
    (mi.d1 && mj.d3 && d > tau)
        || (mi.d3 && mj.d1 && d < -tau)
        || (mi.d2 && mj.d3 && d < -tau)
        || (mi.d3 && mj.d2 && d > tau)
        || (mi.d1 && mj.d2 && d + 2.0 > tau)
        || (mi.d2 && mj.d1 && d - 2.0 < -tau)
        || (rule == ViolationRule::Complete && mi.d3 && mj.d3 && d.abs() - 2.0 > tau)
}

/// Largest first-order gain of moving mass between `i` and `j`, in either
/// direction; positive values mean the pair violates at tolerance 0.
pub fn pair_margin(mi: Membership, fi: f64, mj: Membership, fj: f64) -> f64 {
    let one_way = |ma: Membership, fa: f64, mb: Membership, fb: f64| match (ma.up_value(fa), mb.down_value(fb)) {
        (Some(up), Some(down)) => up - down,
        _ => f64::NEG_INFINITY,
    };
    one_way(mi, fi, mj, fj).max(one_way(mj, fj, mi, fi))
}

/// Checks tau-optimality from the most critical values. Terms involving an
/// empty set evaluate to minus infinity and so always pass.
pub fn check_tau_optimality(mcv: &MostCriticalValues, tau: f64, rule: ViolationRule) -> bool {
    mcv.m1_max - mcv.m3_min <= tau
        && mcv.m3_max - mcv.m2_min <= tau
        && mcv.m1_max - mcv.m2_min + 2.0 <= tau
        && (rule == ViolationRule::SixConditions || mcv.m3_max - mcv.m3_min - 2.0 <= tau)
}

/// A candidate working pair: mass moves from `down` into `up`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub up: usize,
    pub down: usize,
    pub margin: f64,
}

fn better(best: Option<Candidate>, up: Option<usize>, down: Option<usize>, margin: f64) -> Option<Candidate> {
    match (up, down) {
        (Some(up), Some(down)) if up != down && margin.is_finite() => match best {
            Some(b) if b.margin >= margin => best,
            _ => Some(Candidate { up, down, margin }),
        },
        _ => best,
    }
}

/// Maximal violating pair among the extremes in `mcv`, if its margin exceeds `tau`.
pub fn maximal_violating_pair(mcv: &MostCriticalValues, tau: f64, rule: ViolationRule) -> Option<Candidate> {
    let mut best = None;
    best = better(best, mcv.m1_arg, mcv.m3_min_arg, mcv.m1_max - mcv.m3_min);
    best = better(best, mcv.m3_max_arg, mcv.m2_arg, mcv.m3_max - mcv.m2_min);
    best = better(best, mcv.m1_arg, mcv.m2_arg, mcv.m1_max - mcv.m2_min + 2.0);
    if rule == ViolationRule::Complete {
        best = better(best, mcv.m3_max_arg, mcv.m3_min_arg, mcv.m3_max - mcv.m3_min - 2.0);
    }
    best.filter(|c| c.margin > tau)
}

/// Best partner for sample `u` among the extremes in `mcv`, if violating.
pub fn best_partner(
    u: usize,
    m: Membership,
    f: f64,
    mcv: &MostCriticalValues,
    tau: f64,
    rule: ViolationRule,
) -> Option<Candidate> {
    let mut best = None;
    if m.d1 {
        best = better(best, Some(u), mcv.m3_min_arg, f - mcv.m3_min);
        best = better(best, Some(u), mcv.m2_arg, f - mcv.m2_min + 2.0);
    }
    if m.d2 {
        best = better(best, mcv.m3_max_arg, Some(u), mcv.m3_max - f);
        best = better(best, mcv.m1_arg, Some(u), mcv.m1_max - f + 2.0);
    }
    if m.d3 {
        best = better(best, Some(u), mcv.m2_arg, f - mcv.m2_min);
        best = better(best, mcv.m1_arg, Some(u), mcv.m1_max - f);
        if rule == ViolationRule::Complete {
            best = better(best, Some(u), mcv.m3_min_arg, f - mcv.m3_min - 2.0);
            best = better(best, mcv.m3_max_arg, Some(u), mcv.m3_max - f - 2.0);
        }
    }
    best.filter(|c| c.margin > tau)
}
