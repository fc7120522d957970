//! Positive-unlabeled learning with the double-hinge loss.
//!
//! Training solves the kernel dual with a two-variable decomposition method
//! ([`solver`]) from a feasible start ([`initializer`]). A dense reference
//! solver ([`oracle`]) validates results on small instances.
//!
//! ```
//! use usmo::{data, solver, initializer::InitMode, kernel::KernelSpec};
//!
//! let (x, y) = data::two_blobs(40, 40, 2, 4.0, 7);
//! let split = data::make_pu_split(&x, &y, 0.3, 1).unwrap();
//! let h = solver::Hyperparams::new(split.prior, 0.05, KernelSpec::gaussian(1.0).unwrap());
//! let fit = solver::train(&split.dataset, &h, InitMode::Ranked).unwrap();
//! let score = fit.model.predict_score(&[2.0, 0.0]).unwrap();
//! assert!(score > 0.0);
//! ```

#[cfg(feature = "cli")]
pub mod cli;
pub mod data;
pub mod error;
pub mod initializer;
pub mod kernel;
pub mod model;
pub mod oracle;
pub mod solver;

pub use data::{Dataset, Label};
pub use error::{Result, UsmoError};
pub use kernel::KernelSpec;
pub use model::Model;
pub use solver::{Hyperparams, Solution};
