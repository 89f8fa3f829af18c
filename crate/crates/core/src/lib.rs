//! Simulation and estimation toolkit for `(L, beta, k)`-superdiffusions.
//!
//! A superdiffusion is driven by a diffusion generator `L`, a mass
//! creation/annihilation potential `beta` and a branching intensity `k >= 0`;
//! its log-Laplace functional solves `u_t = Lu + beta u - k u^2`. The crate
//! provides three independent routes to the same quantities:
//!
//! * [`particle`]: a branching-particle approximation of the measure-valued process,
//! * [`cumulant`]: a deterministic solver for the log-Laplace equation,
//! * [`fk`]: Monte Carlo Feynman-Kac estimators built on [`diffusion`] paths.

pub mod cumulant;
pub mod diffusion;
pub mod error;
pub mod fk;
pub mod model;
pub mod particle;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
