//! Lasso and total-variation estimation with correlation-aware tuning,
//! certified compatibility factors, and a Monte Carlo harness that checks
//! finite-sample risk bounds at desk scale.
//!
//! The pieces fit together like this:
//!
//! - [`linalg`]: design matrices under the `||x^j||^2 <= n` convention,
//!   projectors onto column spans, the correlation measure `rho_T`, the
//!   column weights, and the l1-restricted gain `nu_T`.
//! - [`lasso`]: cyclic coordinate descent with a KKT certificate on every
//!   accepted fit.
//! - [`tv`]: one-dimensional total-variation denoising through the
//!   triangular-design reduction to the Lasso.
//! - [`compat`]: interval certification of plain and weighted compatibility
//!   factors by bisection over orthant-restricted convex programs, plus the
//!   analytic TV bounds and the quantile witness.
//! - [`bounds`]: closed-form tuning rules and every risk-bound right-hand
//!   side as a pure function.
//! - [`designs`]: reproducible generators for the designs, signal classes,
//!   and noise laws the scenarios exercise, and the isotonic projection.
//! - [`experiments`]: the Monte Carlo scenarios and their serializable
//!   reports.
//!
//! The `corrlasso` binary exposes the same functionality as subcommands
//! (`fit-lasso`, `fit-tv`, `compat`, `bound`, `tune`, `generate`,
//! `simulate`); see the book under `book/` for a guided tour.

pub mod bounds;
pub mod compat;
pub mod designs;
pub mod error;
pub mod experiments;
pub mod io;
pub mod lasso;
pub mod linalg;
mod orthant;
pub mod tv;

pub use error::{Error, Result};

// The book chapters double as doc-tests so the guide cannot drift from the
// API.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/model-and-lasso.md")]
    mod model_and_lasso {}
    #[doc = include_str!("../../../book/src/tv-denoising.md")]
    mod tv_denoising {}
    #[doc = include_str!("../../../book/src/geometry.md")]
    mod geometry {}
    #[doc = include_str!("../../../book/src/compatibility.md")]
    mod compatibility {}
    #[doc = include_str!("../../../book/src/tuning-and-bounds.md")]
    mod tuning_and_bounds {}
    #[doc = include_str!("../../../book/src/scenarios.md")]
    mod scenarios {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
