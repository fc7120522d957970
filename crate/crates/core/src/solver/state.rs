//! Dual iterate, set memberships and the most critical values.

use crate::error::{Result, UsmoError};

use super::DerivedConstants;

/// Which of the sets D1, D2, D3 an unlabeled sample belongs to.
///
/// * D1: `0 <= delta < c2` and `sigma = delta/2` (can move up, slope `-f-1`)
/// * D2: `0 <= delta < c2` and `sigma = c2 - delta/2` (can move down, slope `-f+1`)
/// * D3: `0 < delta <= c2` in either form
///
/// Memberships overlap: D1 ∩ D3 and D2 ∩ D3 form the non-bound set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Membership {
    pub d1: bool,
    pub d2: bool,
    pub d3: bool,
}

impl Membership {
    /// `eps < delta < c2 - eps`.
    pub fn is_non_bound(self) -> bool {
        self.d3 && (self.d1 || self.d2)
    }

    /// Negated right derivative of the reduced objective in `sigma_u`, i.e.
    /// how strongly the sample wants to grow. `None` if it cannot grow.
    #[inline]
    pub fn up_value(self, f: f64) -> Option<f64> {
        if self.d1 {
            Some(f + 1.0)
        } else if self.d3 {
            Some(f - 1.0)
        } else {
            None
        }
    }

    /// Negated left derivative: the sample can shrink profitably when this is
    /// below another sample's [`up_value`](Self::up_value).
    #[inline]
    pub fn down_value(self, f: f64) -> Option<f64> {
        if self.d2 {
            Some(f - 1.0)
        } else if self.d3 {
            Some(f + 1.0)
        } else {
            None
        }
    }
}

/// Classifies `(sigma_u, delta_u)` into D1/D2/D3 with absolute tolerance `eps`.
///
/// A point matching both forms (`sigma = c2/2`, `delta = c2`) is the kink
/// and belongs to D3 only.
pub fn classify_membership(sigma: f64, delta: f64, c: &DerivedConstants, eps: f64) -> Result<Membership> {
    let c2 = c.c2;
    let low = (sigma - 0.5 * delta).abs() <= eps;
    let high = (sigma - (c2 - 0.5 * delta)).abs() <= eps;
    if !low && !high {
        return Err(UsmoError::InternalState(format!(
            "point (sigma={sigma}, delta={delta}) is on neither branch (c2={c2})"
        )));
    }
    let below_cap = delta < c2 - eps;
    let positive = delta > eps;
    if low && high {
        return Ok(Membership {
            d1: false,
            d2: false,
            d3: positive,
        });
    }
    Ok(Membership {
        d1: below_cap && low,
        d2: below_cap && high,
        d3: positive,
    })
}

/// The solver's mutable iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct DualState {
    pub sigma: Vec<f64>,
    pub delta: Vec<f64>,
    /// Bias-free decision values `sum_j alpha_j k(x_u, x_j)`, valid where `tracked[u]`.
    pub fcache: Vec<f64>,
    pub tracked: Vec<bool>,
    pub membership: Vec<Membership>,
    /// Current dual objective F(sigma, delta).
    pub objective: f64,
    pub iteration: usize,
}

impl DualState {
    /// A state with the given coordinates and nothing cached yet.
    pub fn new(sigma: Vec<f64>, delta: Vec<f64>) -> Self {
        let n = sigma.len();
        DualState {
            sigma,
            delta,
            fcache: vec![0.0; n],
            tracked: vec![false; n],
            membership: vec![Membership::default(); n],
            objective: f64::NAN,
            iteration: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.sigma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma.is_empty()
    }

    /// Recomputes every membership; fails on a point off both branches.
    pub fn classify_all(&mut self, c: &DerivedConstants, eps: f64) -> Result<()> {
        for u in 0..self.len() {
            self.membership[u] = classify_membership(self.sigma[u], self.delta[u], c, eps)?;
        }
        Ok(())
    }

    pub fn non_bound_count(&self) -> usize {
        self.membership.iter().filter(|m| m.is_non_bound()).count()
    }

    /// Checks box, equality and branch feasibility. `eps` is the absolute
    /// membership tolerance; the box is checked with `box_tol`.
    pub fn check_feasible(&self, c: &DerivedConstants, eps: f64, box_tol: f64) -> Result<()> {
        if self.sigma.len() != c.n || self.delta.len() != c.n {
            return Err(UsmoError::input(format!(
                "state has {} coordinates, expected {}",
                self.sigma.len(),
                c.n
            )));
        }
        let c2 = c.c2;
        for (u, (&s, &d)) in self.sigma.iter().zip(&self.delta).enumerate() {
            if !s.is_finite() || !d.is_finite() {
                return Err(UsmoError::input(format!("coordinate {u} is not finite")));
            }
            let ok = s >= -box_tol
                && s <= c2 + box_tol
                && d >= -box_tol
                && d <= c2 + box_tol
                && s + 0.5 * d <= c2 + eps.max(box_tol)
                && s - 0.5 * d >= -eps.max(box_tol);
            if !ok {
                return Err(UsmoError::input(format!(
                    "coordinate {u} (sigma={s}, delta={d}) violates the box constraints for c2={c2}"
                )));
            }
            classify_membership(s, d, c, eps).map_err(|e| UsmoError::input(format!("coordinate {u}: {e}")))?;
        }
        let sum: f64 = self.sigma.iter().sum();
        if (sum - c.target_sum).abs() > equality_tolerance(c.target_sum) {
            return Err(UsmoError::input(format!(
                "sum of sigma is {sum}, equality constraint requires {}",
                c.target_sum
            )));
        }
        Ok(())
    }
}

/// Allowed deviation of `sum(sigma)` from its target.
pub fn equality_tolerance(target: f64) -> f64 {
    1e-10 * target.max(1.0)
}

/// Extremes of the decision values over D1, D2 and D3.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MostCriticalValues {
    pub m1_max: f64,
    pub m1_arg: Option<usize>,
    pub m2_min: f64,
    pub m2_arg: Option<usize>,
    pub m3_min: f64,
    pub m3_min_arg: Option<usize>,
    pub m3_max: f64,
    pub m3_max_arg: Option<usize>,
}

impl Default for MostCriticalValues {
    fn default() -> Self {
        MostCriticalValues {
            m1_max: f64::NEG_INFINITY,
            m1_arg: None,
            m2_min: f64::INFINITY,
            m2_arg: None,
            m3_min: f64::INFINITY,
            m3_min_arg: None,
            m3_max: f64::NEG_INFINITY,
            m3_max_arg: None,
        }
    }
}

impl MostCriticalValues {
    /// Folds one sample into the extremes. Ties keep the earlier index.
    pub fn add(&mut self, u: usize, m: Membership, f: f64) {
        if m.d1 && f > self.m1_max {
            self.m1_max = f;
            self.m1_arg = Some(u);
        }
        if m.d2 && f < self.m2_min {
            self.m2_min = f;
            self.m2_arg = Some(u);
        }
        if m.d3 {
            if f < self.m3_min {
                self.m3_min = f;
                self.m3_min_arg = Some(u);
            }
            if f > self.m3_max {
                self.m3_max = f;
                self.m3_max_arg = Some(u);
            }
        }
    }

    /// Extremes over the given samples, reading `membership` and `f` by index.
    pub fn scan<I>(indices: I, membership: &[Membership], f: &[f64]) -> Self
    where
        I: IntoIterator<Item = usize>,
    {
        let mut mcv = MostCriticalValues::default();
        for u in indices {
            mcv.add(u, membership[u], f[u]);
        }
        mcv
    }
}

/// `alpha = c1` on the positives followed by `-sigma` on the unlabeled samples.
pub fn recover_alpha(sigma: &[f64], c: &DerivedConstants) -> Vec<f64> {
    let mut alpha = Vec::with_capacity(c.p + sigma.len());
    alpha.extend(std::iter::repeat_n(c.c1, c.p));
    alpha.extend(sigma.iter().map(|s| -s));
    alpha
}

#[cfg(test)]
mod tests {
    use super::*;

    fn consts(c2: f64) -> DerivedConstants {
        DerivedConstants {
            c1: 1.0,
            c2,
            target_sum: 1.0,
            p: 1,
            n: 2,
        }
    }

    #[test]
    fn membership_examples() {
        let c = consts(1.0);
        let eps = 1e-9;
        let m = classify_membership(0.0, 0.0, &c, eps).unwrap();
        assert_eq!(
            m,
            Membership {
                d1: true,
                d2: false,
                d3: false
            }
        );

        let m = classify_membership(0.5, 1.0, &c, eps).unwrap();
        assert_eq!(
            m,
            Membership {
                d1: false,
                d2: false,
                d3: true
            }
        );
        assert!(!m.is_non_bound());

        let m = classify_membership(0.3, 0.6, &c, eps).unwrap();
        assert_eq!(
            m,
            Membership {
                d1: true,
                d2: false,
                d3: true
            }
        );
        assert!(m.is_non_bound());

        let m = classify_membership(0.8, 0.4, &c, eps).unwrap();
        assert_eq!(
            m,
            Membership {
                d1: false,
                d2: true,
                d3: true
            }
        );

        let m = classify_membership(1.0, 0.0, &c, eps).unwrap();
        assert_eq!(
            m,
            Membership {
                d1: false,
                d2: true,
                d3: false
            }
        );
    }

    #[test]
    fn membership_rejects_off_branch_point() {
        let c = consts(1.0);
        assert!(matches!(
            classify_membership(0.3, 0.2, &c, 1e-9),
            Err(UsmoError::InternalState(_))
        ));
    }

    #[test]
    fn up_down_values() {
        let d1 = Membership {
            d1: true,
            d2: false,
            d3: false,
        };
        assert_eq!(d1.up_value(0.0), Some(1.0));
        assert_eq!(d1.down_value(0.0), None);
        let kink = Membership {
            d1: false,
            d2: false,
            d3: true,
        };
        assert_eq!(kink.up_value(0.0), Some(-1.0));
        assert_eq!(kink.down_value(0.0), Some(1.0));
        let nb2 = Membership {
            d1: false,
            d2: true,
            d3: true,
        };
        assert_eq!(nb2.up_value(0.0), Some(-1.0));
        assert_eq!(nb2.down_value(0.0), Some(-1.0));
    }

    #[test]
    fn alpha_recovery() {
        let c = consts(1.0);
        assert_eq!(recover_alpha(&[0.5, 0.5], &c), vec![1.0, -0.5, -0.5]);
        let c3 = DerivedConstants { p: 3, ..consts(1.0) };
        assert_eq!(recover_alpha(&[0.0, 0.0], &c3), vec![1.0, 1.0, 1.0, 0.0, 0.0]);
        let sigma = [0.1, 0.25, 0.65];
        let c = DerivedConstants { n: 3, ..consts(1.0) };
        let a = recover_alpha(&sigma, &c);
        let unl: f64 = a[c.p..].iter().sum();
        assert_eq!(unl, -sigma.iter().sum::<f64>());
    }

    #[test]
    fn mcv_scan_matches_definition() {
        let mem = [
            Membership {
                d1: true,
                d2: false,
                d3: false,
            },
            Membership {
                d1: true,
                d2: false,
                d3: true,
            },
            Membership {
                d1: false,
                d2: true,
                d3: false,
            },
            Membership {
                d1: false,
                d2: false,
                d3: true,
            },
        ];
        let f = [-3.0, -1.0, 2.0, 0.5];
        let mcv = MostCriticalValues::scan(0..4, &mem, &f);
        assert_eq!((mcv.m1_max, mcv.m1_arg), (-1.0, Some(1)));
        assert_eq!((mcv.m2_min, mcv.m2_arg), (2.0, Some(2)));
        assert_eq!((mcv.m3_min, mcv.m3_min_arg), (-1.0, Some(1)));
        assert_eq!((mcv.m3_max, mcv.m3_max_arg), (0.5, Some(3)));
        let empty = MostCriticalValues::scan(std::iter::empty(), &mem, &f);
        assert_eq!(empty.m1_arg, None);
        assert_eq!(empty.m2_min, f64::INFINITY);
    }
}
