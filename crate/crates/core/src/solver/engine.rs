//! The decomposition loop.
//!
//! Alternates between two ways of choosing working pairs. The non-bound loop
//! keeps decision values only for non-bound samples and repeatedly steps on
//! the maximal violating pair among them. A full scan refreshes every
//! decision value, then walks all samples and steps on each one that has a
//! violating partner. Training stops after a full scan that takes no step.

use crate::data::Dataset;
use crate::error::{Result, UsmoError};
use crate::initializer::{initial_state, InitMode};
use crate::kernel::{GramCache, KernelRow};
use crate::model::Model;

use super::pairs::{best_partner, is_violating_pair, maximal_violating_pair, pair_margin, Candidate};
use super::state::{classify_membership, recover_alpha, DualState, MostCriticalValues};
use super::subproblem::{solve_subproblem, Case, SubproblemInputs};
use super::trace::{Scope, SolverTrace, Stopwatch, TraceRow};
use super::{derive_constants, DerivedConstants, Hyperparams};

/// Result of a successful training run.
#[derive(Debug, Clone)]
pub struct Solution {
    pub model: Model,
    pub trace: SolverTrace,
    pub state: DualState,
    pub constants: DerivedConstants,
}

/// What one iteration did, passed to the observer of [`run_observed`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    pub iteration: usize,
    pub scope: Scope,
    pub i: usize,
    pub j: usize,
    pub case: Case,
    /// Violation margin of the pair before the step.
    pub margin_before: f64,
    /// Margin after the step; not violating iff at most `tau`.
    pub margin_after: f64,
    pub violating_after: bool,
    pub objective_before: f64,
    pub objective_after: f64,
    pub sigma_before: [f64; 2],
    pub sigma_after: [f64; 2],
}

/// Initializes and trains in one call.
pub fn train(data: &Dataset, h: &Hyperparams, init: InitMode) -> Result<Solution> {
    let c = derive_constants(h, data.p(), data.n())?;
    let state = initial_state(data, h.kernel, &c, init)?;
    run(data, h, state)
}

/// Runs the solver from a feasible starting point.
pub fn run(data: &Dataset, h: &Hyperparams, init: DualState) -> Result<Solution> {
    Engine::new(data, h, init, None)?.solve()
}

/// Like [`run`], calling `observer` after every iteration.
pub fn run_observed(
    data: &Dataset,
    h: &Hyperparams,
    init: DualState,
    observer: &mut dyn FnMut(&StepReport, &DualState),
) -> Result<Solution> {
    Engine::new(data, h, init, Some(observer))?.solve()
}

type Observer<'o> = &'o mut dyn FnMut(&StepReport, &DualState);

struct Engine<'a, 'o> {
    data: &'a Dataset,
    h: &'a Hyperparams,
    c: DerivedConstants,
    eps: f64,
    cache: GramCache,
    /// `c1 sum_p k(x_u, x_p)`, fixed for the whole run.
    pos_term: Vec<f64>,
    st: DualState,
    tracked_list: Vec<usize>,
    /// Position of each tracked sample in `tracked_list`.
    slot: Vec<usize>,
    trace: SolverTrace,
    clock: Stopwatch,
    observer: Option<Observer<'o>>,
}

fn map_range<F>(n: usize, f: F) -> Vec<f64>
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

impl<'a, 'o> Engine<'a, 'o> {
    fn new(data: &'a Dataset, h: &'a Hyperparams, init: DualState, observer: Option<Observer<'o>>) -> Result<Self> {
        let c = derive_constants(h, data.p(), data.n())?;
        let eps = h.set_eps * c.c2;
        init.check_feasible(&c, eps, 1e-12 * c.c2.max(1.0))?;
        let mut st = init;
        st.classify_all(&c, eps)?;
        st.iteration = 0;
        let n = c.n;
        let capacity = h
            .cache_rows
            .unwrap_or_else(|| Self::auto_capacity(st.non_bound_count()));
        let mut eng = Engine {
            data,
            h,
            c,
            eps,
            cache: GramCache::new(h.kernel, capacity),
            pos_term: Vec::new(),
            st,
            tracked_list: Vec::with_capacity(n),
            slot: vec![usize::MAX; n],
            trace: SolverTrace {
                row_len: data.len(),
                ..SolverTrace::default()
            },
            clock: Stopwatch::start(),
            observer,
        };
        eng.st.tracked.iter_mut().for_each(|t| *t = false);
        eng.pos_term = eng.compute_pos_term();
        Ok(eng)
    }

    fn auto_capacity(non_bound: usize) -> usize {
        (2 * non_bound).max(64)
    }

    fn compute_pos_term(&mut self) -> Vec<f64> {
        let (data, kernel, p, c1) = (self.data, self.h.kernel, self.c.p, self.c.c1);
        let out = map_range(self.c.n, |u| {
            let xu = data.sample(p + u);
            c1 * (0..p).map(|q| kernel.eval_unchecked(xu, data.sample(q))).sum::<f64>()
        });
        // one row-equivalent per unlabeled sample, p evaluations each
        self.cache.record_transient(self.c.n as u64, (self.c.n * p) as u64);
        out
    }

    /// Decision values recomputed from scratch for the listed samples.
    fn fresh_values(&mut self, us: &[usize]) -> Vec<f64> {
        let p = self.c.p;
        let support: Vec<(usize, f64)> = self
            .st
            .sigma
            .iter()
            .enumerate()
            .filter(|(_, &s)| s != 0.0)
            .map(|(v, &s)| (p + v, s))
            .collect();
        let cached: Vec<Option<KernelRow>> = us.iter().map(|&u| self.cache.peek(p + u).cloned()).collect();
        let misses = cached.iter().filter(|r| r.is_none()).count() as u64;
        let (data, kernel, pos_term) = (self.data, self.h.kernel, &self.pos_term);
        let support = &support;
        let cached = &cached;
        let out = map_range(us.len(), |k| {
            let u = us[k];
            let dot = match &cached[k] {
                Some(row) => support.iter().map(|&(g, s)| s * row[g]).sum::<f64>(),
                None => {
                    let xu = data.sample(p + u);
                    support
                        .iter()
                        .map(|&(g, s)| s * kernel.eval_unchecked(xu, data.sample(g)))
                        .sum::<f64>()
                }
            };
            pos_term[u] - dot
        });
        self.cache.record_transient(misses, misses * support.len() as u64);
        out
    }

    fn untrack(&mut self, u: usize) {
        if self.st.tracked[u] {
            self.st.tracked[u] = false;
            let pos = self.slot[u];
            self.tracked_list.swap_remove(pos);
            if let Some(&moved) = self.tracked_list.get(pos) {
                self.slot[moved] = pos;
            }
            self.slot[u] = usize::MAX;
        }
    }

    fn note_tracked(&mut self) {
        self.trace.peak_tracked = self.trace.peak_tracked.max(self.tracked_list.len());
    }

    /// Recomputes every decision value and re-anchors the objective.
    fn refresh_all(&mut self) {
        let all: Vec<usize> = (0..self.c.n).collect();
        let f = self.fresh_values(&all);
        self.st.fcache = f;
        self.tracked_list.clear();
        for u in 0..self.c.n {
            self.st.tracked[u] = true;
            self.slot[u] = u;
            self.tracked_list.push(u);
        }
        self.note_tracked();
        let exact = self.objective_from_scratch();
        if self.st.objective.is_finite() {
            let drift = (exact - self.st.objective).abs();
            self.trace.max_objective_drift = self.trace.max_objective_drift.max(drift);
        }
        self.st.objective = exact;
    }

    /// `F = -1/2 sum sigma_u (b_u + f_u) - 1/2 sum delta_u`; needs every f.
    fn objective_from_scratch(&self) -> f64 {
        let quad: f64 = (0..self.c.n)
            .map(|u| self.st.sigma[u] * (self.pos_term[u] + self.st.fcache[u]))
            .sum();
        -0.5 * quad - 0.5 * self.st.delta.iter().sum::<f64>()
    }

    /// Restricts the tracked set to the non-bound samples.
    fn track_non_bound(&mut self) {
        for u in 0..self.c.n {
            if !self.st.membership[u].is_non_bound() {
                self.untrack(u);
            }
        }
    }

    fn row(&mut self, u: usize) -> Result<KernelRow> {
        self.cache.row(self.data, self.c.p + u)
    }

    /// Solves the pair subproblem and applies it. Returns false when the
    /// step would not decrease the objective.
    fn step(&mut self, cand: Candidate, scope: Scope) -> Result<bool> {
        let (i, j) = (cand.up, cand.down);
        let p = self.c.p;
        let c2 = self.c.c2;
        let ri = self.row(i)?;
        let rj = self.row(j)?;
        let st = &self.st;
        let inputs = SubproblemInputs::from_decision_values(
            i,
            j,
            [st.fcache[i], st.fcache[j]],
            ri[p + i],
            rj[p + j],
            ri[p + j],
            [st.sigma[i], st.sigma[j]],
            [st.delta[i], st.delta[j]],
        );
        let sol = solve_subproblem(&inputs, c2)?;
        if sol.objective_delta.is_nan() || sol.objective_delta >= 0.0 {
            return Ok(false);
        }
        let sigma_before = inputs.sigma_old;
        let objective_before = self.st.objective;
        let dai = -(sol.sigma[0] - sigma_before[0]);
        let daj = -(sol.sigma[1] - sigma_before[1]);

        for (k, u) in [i, j].into_iter().enumerate() {
            self.st.sigma[u] = sol.sigma[k];
            self.st.delta[u] = sol.delta[k];
            self.st.membership[u] = classify_membership(sol.sigma[k], sol.delta[k], &self.c, self.eps)?;
        }
        let fc = &mut self.st.fcache;
        for &u in &self.tracked_list {
            fc[u] += dai * ri[p + u] + daj * rj[p + u];
        }
        self.st.objective += sol.objective_delta;
        self.st.iteration += 1;

        self.trace.rows.push(TraceRow {
            iter: self.st.iteration,
            scope,
            i,
            j,
            objective: self.st.objective,
            violation: cand.margin,
            kernel_evals: self.cache.stats().evaluations,
            ms: self.clock.elapsed_ms(),
        });

        if let Some(obs) = self.observer.as_mut() {
            let (mi, mj) = (self.st.membership[i], self.st.membership[j]);
            let (fi, fj) = (self.st.fcache[i], self.st.fcache[j]);
            let report = StepReport {
                iteration: self.st.iteration,
                scope,
                i,
                j,
                case: sol.case,
                margin_before: cand.margin,
                margin_after: pair_margin(mi, fi, mj, fj),
                violating_after: is_violating_pair(mi, fi, mj, fj, self.h.tau, self.h.rule),
                objective_before,
                objective_after: self.st.objective,
                sigma_before,
                sigma_after: sol.sigma,
            };
            obs(&report, &self.st);
        }
        Ok(true)
    }

    fn non_bound_loop(&mut self) -> Result<()> {
        self.track_non_bound();
        self.note_tracked();
        loop {
            let mcv = MostCriticalValues::scan(self.tracked_list.iter().copied(), &self.st.membership, &self.st.fcache);
            let Some(cand) = maximal_violating_pair(&mcv, self.h.tau, self.h.rule) else {
                return Ok(());
            };
            if !self.step(cand, Scope::NonBound)? {
                return Ok(());
            }
            for u in [cand.up, cand.down] {
                if !self.st.membership[u].is_non_bound() {
                    self.untrack(u);
                }
            }
        }
    }

    /// One pass over all samples; returns the number of steps taken.
    fn full_scan(&mut self) -> Result<usize> {
        self.refresh_all();
        let (tau, rule) = (self.h.tau, self.h.rule);
        let n = self.c.n;
        let mut mcv = self.examined_extremes(0);
        let mut steps = 0;
        for u in 0..n {
            mcv.add(u, self.st.membership[u], self.st.fcache[u]);
            let Some(cand) = best_partner(u, self.st.membership[u], self.st.fcache[u], &mcv, tau, rule) else {
                continue;
            };
            if self.step(cand, Scope::Full)? {
                steps += 1;
                mcv = self.examined_extremes(u + 1);
            }
        }
        Ok(steps)
    }

    /// Extremes over the non-bound samples and all samples before `upto`.
    fn examined_extremes(&self, upto: usize) -> MostCriticalValues {
        let m = &self.st.membership;
        MostCriticalValues::scan(
            (0..self.c.n).filter(|&v| v < upto || m[v].is_non_bound()),
            m,
            &self.st.fcache,
        )
    }

    fn solve(mut self) -> Result<Solution> {
        self.refresh_all();
        loop {
            if self.h.cache_rows.is_none() {
                let cap = Self::auto_capacity(self.st.non_bound_count());
                self.cache.set_capacity(cap);
            }
            self.non_bound_loop()?;
            self.trace.full_scans += 1;
            let steps = self.full_scan()?;
            if steps == 0 {
                break;
            }
            if self.trace.full_scans >= self.h.max_full_scans {
                // make the returned iterate consistent before handing it out
                self.refresh_all();
                self.finish_trace();
                return Err(UsmoError::Budget {
                    full_scans: self.trace.full_scans,
                    iterations: self.st.iteration,
                    best: Box::new(self.st),
                });
            }
        }
        self.finish_trace();
        let bias = compute_bias(&self.st);
        let alpha = recover_alpha(&self.st.sigma, &self.c);
        let model = Model::from_dual(self.data, self.h.kernel, &alpha, bias)?;
        Ok(Solution {
            model,
            trace: self.trace,
            state: self.st,
            constants: self.c,
        })
    }

    fn finish_trace(&mut self) {
        self.trace.cache = self.cache.stats();
        self.trace.elapsed_ms = self.clock.elapsed_ms();
    }
}

/// Bias from the KKT conditions at a converged state.
///
/// Averages `-1 - f_u` over non-bound samples on the lower branch and
/// `1 - f_u` over those on the upper branch. Without non-bound samples it
/// takes the midpoint of the interval allowed by the kink samples
/// (`delta = c2`, where `-1 - f <= b <= 1 - f`), or failing that by the
/// one-sided bounds of the remaining samples.
pub fn compute_bias(state: &DualState) -> f64 {
    let (mut sum, mut count) = (0.0, 0usize);
    for u in 0..state.len() {
        let m = state.membership[u];
        if !state.tracked[u] || !m.is_non_bound() {
            continue;
        }
        let f = state.fcache[u];
        sum += if m.d1 { -1.0 - f } else { 1.0 - f };
        count += 1;
    }
    if count > 0 {
        return sum / count as f64;
    }

    let tracked = || (0..state.len()).filter(|&u| state.tracked[u]);
    let kinks: Vec<usize> = tracked()
        .filter(|&u| {
            let m = state.membership[u];
            m.d3 && !m.d1 && !m.d2
        })
        .collect();
    let (lo, hi, ends) = if kinks.is_empty() {
        // D1 samples need b <= -1 - f, D2 samples need b >= 1 - f.
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        let mut ends = Vec::new();
        for u in tracked() {
            let (m, f) = (state.membership[u], state.fcache[u]);
            if m.d1 {
                hi = hi.min(-1.0 - f);
                ends.push(-1.0 - f);
            } else if m.d2 {
                lo = lo.max(1.0 - f);
                ends.push(1.0 - f);
            }
        }
        (lo, hi, ends)
    } else {
        let mut ends = Vec::with_capacity(2 * kinks.len());
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for &u in &kinks {
            let f = state.fcache[u];
            lo = lo.max(-1.0 - f);
            hi = hi.min(1.0 - f);
            ends.extend([-1.0 - f, 1.0 - f]);
        }
        (lo, hi, ends)
    };
    match (lo.is_finite(), hi.is_finite()) {
        (true, true) if lo <= hi => 0.5 * (lo + hi),
        (true, false) => lo,
        (false, true) => hi,
        (false, false) => 0.0,
        _ => median(ends),
    }
}

/// Median of the endpoints, which minimizes the total interval violation.
fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}
