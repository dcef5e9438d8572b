//! Robustness certificates for Gaussian randomized smoothing.
//!
//! Given a hard base classifier `f` and smoothing noise `ε ~ N(0, σ²I)`, the
//! smoothed value `p(x) = E[f(x+ε)]` is `1/σ`-Lipschitz in quantile space,
//! which gives the classic first-order radius `σΦ⁻¹(p)`. This crate adds:
//!
//! - the tight second-order certificate from `p` and `‖∇p‖₂`,
//! - the dipole certificate from antithetic pairs `(f(x+ε), f(x-ε))`,
//! - the estimators that turn Monte-Carlo samples into high-probability
//!   evidence for each of them, and
//! - a deterministic, worker-count-independent sampling engine.
//!
//! ```
//! use smoothcert::{certificates::*, normal::Probability};
//!
//! let params = SmoothingParams::new(1.0).unwrap();
//! let p = Probability::new(0.8).unwrap();
//! let first = first_order_radius(p, params);
//! let second = second_order_radius(SecondOrderEvidence::new(p, 0.0), params);
//! assert!(second > first);
//! ```

pub mod certificates;
pub mod classifiers;
pub mod engine;
pub mod error;
pub mod estimation;
pub mod normal;
mod roots;

pub use error::{Error, Result};
