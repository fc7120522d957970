//! Kernel functions and a bounded LRU cache of Gram-matrix rows.
//!
//! The full `(p+n) x (p+n)` Gram matrix is never formed. The solver asks for
//! whole rows on demand; at most `capacity` of them are alive in the cache.

use std::num::NonZeroUsize;
use std::sync::Arc;

use lru::LruCache;

use crate::data::Dataset;
use crate::error::{Result, UsmoError};

/// Kernel choice. The Gaussian kernel is `exp(-|x-y|^2 / (2 scale^2))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelSpec {
    Linear,
    Gaussian { scale: f64 },
}

impl KernelSpec {
    pub fn gaussian(scale: f64) -> Result<Self> {
        let k = KernelSpec::Gaussian { scale };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Gaussian { scale } if !(scale > 0.0 && scale.is_finite()) => Err(UsmoError::config(format!(
                "gaussian kernel scale must be positive and finite, got {scale}"
            ))),
            _ => Ok(()),
        }
    }

    /// Kernel value without a dimension check.
    #[inline]
    pub fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        match *self {
            KernelSpec::Linear => x.iter().zip(y).map(|(a, b)| a * b).sum(),
            KernelSpec::Gaussian { scale } => {
                let d2: f64 = x
                    .iter()
                    .zip(y)
                    .map(|(a, b)| {
                        let t = a - b;
                        t * t
                    })
                    .sum();
                (-d2 / (2.0 * scale * scale)).exp()
            }
        }
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        if x.len() != y.len() || x.is_empty() {
            return Err(UsmoError::input(format!(
                "kernel arguments have dimensions {} and {}",
                x.len(),
                y.len()
            )));
        }
        Ok(self.eval_unchecked(x, y))
    }
}

/// One row of the Gram matrix, `[k(x_i, x_j)]` over all `p + n` samples.
pub type KernelRow = Arc<[f64]>;

/// Counters describing the work done through a [`GramCache`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CacheStats {
    /// Individual kernel evaluations.
    pub evaluations: u64,
    /// Row computations (cached or row-equivalent transient work).
    pub misses: u64,
    pub hits: u64,
    /// Largest number of rows held at once.
    pub peak_rows: usize,
    /// Largest capacity the cache was ever given.
    pub peak_capacity: usize,
}

/// LRU cache of whole kernel rows.
pub struct GramCache {
    kernel: KernelSpec,
    rows: LruCache<usize, KernelRow>,
    stats: CacheStats,
}

impl GramCache {
    pub fn new(kernel: KernelSpec, capacity: usize) -> Self {
        let cap = NonZeroUsize::new(capacity.max(1)).unwrap();
        GramCache {
            kernel,
            rows: LruCache::new(cap),
            stats: CacheStats {
                peak_capacity: cap.get(),
                ..CacheStats::default()
            },
        }
    }

    pub fn kernel(&self) -> KernelSpec {
        self.kernel
    }

    pub fn capacity(&self) -> usize {
        self.rows.cap().get()
    }

    /// Changes the capacity, evicting least-recently-used rows if it shrinks.
    pub fn set_capacity(&mut self, capacity: usize) {
        let cap = NonZeroUsize::new(capacity.max(1)).unwrap();
        if cap != self.rows.cap() {
            self.rows.resize(cap);
        }
        self.stats.peak_capacity = self.stats.peak_capacity.max(cap.get());
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn stats(&self) -> CacheStats {
        self.stats
    }

    /// Row `i` of the Gram matrix, computed on a miss and cached.
    pub fn row(&mut self, data: &Dataset, i: usize) -> Result<KernelRow> {
        if i >= data.len() {
            return Err(UsmoError::input(format!(
                "sample index {i} out of range for {} samples",
                data.len()
            )));
        }
        if let Some(row) = self.rows.get(&i) {
            self.stats.hits += 1;
            return Ok(Arc::clone(row));
        }
        let xi = data.sample(i);
        let row: KernelRow = (0..data.len())
            .map(|j| self.kernel.eval_unchecked(xi, data.sample(j)))
            .collect();
        self.stats.misses += 1;
        self.stats.evaluations += data.len() as u64;
        self.rows.put(i, Arc::clone(&row));
        self.stats.peak_rows = self.stats.peak_rows.max(self.rows.len());
        Ok(row)
    }

    /// Cached row if present, without touching recency or counters.
    pub fn peek(&self, i: usize) -> Option<&KernelRow> {
        self.rows.peek(&i)
    }

    /// Accounts for kernel work done outside the cache. Each of the `rows`
    /// row-equivalent computations must evaluate at most `p + n` entries.
    pub fn record_transient(&mut self, rows: u64, evaluations: u64) {
        self.stats.misses += rows;
        self.stats.evaluations += evaluations;
    }
}
