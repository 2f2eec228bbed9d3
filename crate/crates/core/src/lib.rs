//! Solvers for distributionally robust two-stage stochastic convex programs with
//! finitely many scenarios.
//!
//! The problem solved is
//!
//! ```text
//! min_{x in [0, U]}  c.x + max_{p in P} sum_k p_k g_k(T_k x)
//! ```
//!
//! where each `g_k` is a piecewise-linear recourse cost and `P` is an ambiguity set
//! (the whole simplex, an AVaR set, a modified chi-square ball, or a Kantorovich ball).
//! Two first-order methods are provided: [`sd`] (sequential dual) and [`ssl`]
//! (sequential smoothing level), together with [`baselines`] and a benchmark
//! [`harness`].

pub mod baselines;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod linalg;
pub mod model;
pub mod oracles;
pub mod projections;
pub mod qplp;
pub mod sd;
pub mod smoothing;
pub mod ssl;

pub use error::{DroError, Result};
pub use geometry::Geometry;
pub use model::{AmbiguitySpec, DroInstance, Recourse, ScenarioBlock};
