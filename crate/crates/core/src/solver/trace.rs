//! Per-iteration solver log, exportable as CSV.

use std::fmt;
use std::io::Write;

use crate::error::Result;
use crate::kernel::CacheStats;

/// Header of the exported trace.
pub const TRACE_HEADER: &str = "iter,scope,i,j,objective,violation,kernel_evals,ms";

/// Which candidate set produced a working pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope {
    NonBound,
    Full,
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scope::NonBound => "nonbound",
            Scope::Full => "full",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    pub scope: Scope,
    pub i: usize,
    pub j: usize,
    /// Dual objective after the step.
    pub objective: f64,
    /// Violation margin of the pair before the step.
    pub violation: f64,
    /// Cumulative kernel evaluations.
    pub kernel_evals: u64,
    /// Wall time since the solver started.
    pub ms: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolverTrace {
    pub rows: Vec<TraceRow>,
    pub full_scans: usize,
    pub cache: CacheStats,
    /// Length of one cached kernel row (`p + n`).
    pub row_len: usize,
    /// Largest tracked function-cache set seen.
    pub peak_tracked: usize,
    /// Largest gap between the incremental objective and its recomputation.
    pub max_objective_drift: f64,
    pub elapsed_ms: f64,
}

impl SolverTrace {
    pub fn iterations(&self) -> usize {
        self.rows.len()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{TRACE_HEADER}")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{:.3}",
                r.iter, r.scope, r.i, r.j, r.objective, r.violation, r.kernel_evals, r.ms
            )?;
        }
        Ok(())
    }

    /// Upper bound on floats held by the kernel row cache.
    pub fn peak_cached_floats(&self) -> usize {
        self.cache.peak_rows * self.row_len
    }
}

/// Wall clock that reads zero where no monotonic clock exists.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Stopwatch {
    #[cfg(not(target_arch = "wasm32"))]
    start: std::time::Instant,
}

impl Stopwatch {
    pub(crate) fn start() -> Self {
        Stopwatch {
            #[cfg(not(target_arch = "wasm32"))]
            start: std::time::Instant::now(),
        }
    }

    pub(crate) fn elapsed_ms(&self) -> f64 {
        #[cfg(not(target_arch = "wasm32"))]
        {
            self.start.elapsed().as_secs_f64() * 1e3
        }
        #[cfg(target_arch = "wasm32")]
        {
            0.0
        }
    }
}
