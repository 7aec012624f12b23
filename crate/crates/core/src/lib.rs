//! Geometry-aware Bayesian optimization.
//!
//! The crate is organized bottom-up:
//!
//! - [`manifold`]: points, geodesics, exponential/log maps and sampling on
//!   spheres, tori, SO(3), SPD matrices, hyperbolic space and ℝ^d.
//! - [`spectral`]: Gegenbauer polynomials, sphere eigen-levels, torus lattices
//!   and SO(3) characters.
//! - [`quadrature`]: adaptive Gauss–Kronrod and a double-exponential rule on
//!   the half line.
//! - [`kernel`]: Riemannian Matérn and squared-exponential (heat) kernels,
//!   plus the Euclidean, naive-geodesic, Cholesky and product baselines.
//! - [`gp`]: Gaussian-process regression with marginal-likelihood fitting.
//! - [`optimize`]: Riemannian trust-region minimization with truncated CG.
//! - [`bo`]: the expected-improvement Bayesian optimization loop.
//! - [`bench`]: projected benchmark objectives and the suite runner.

pub mod bench;
pub mod bo;
mod error;
pub mod gp;
pub mod kernel;
pub mod linalg;
pub mod manifold;
pub mod optimize;
pub mod quadrature;
pub mod rng;
pub mod spectral;

pub use error::{Error, Result};
pub use manifold::{Manifold, ManifoldPoint, TangentVector};
