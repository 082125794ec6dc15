//! Lumped-parameter multibody structural dynamics for monopile-supported
//! offshore wind turbines.
//!
//! The tower and monopile are discretized into hollow-frustum rigid bodies
//! joined by rotational spring-dampers. Nonlinear p-y soil springs with
//! secant-stiffness dashpots and relative-form Morison strip loads act on the
//! chain. Solvers cover static equilibrium, linearized eigenanalysis and
//! nonlinear time integration; the `modal` module turns the resulting
//! channels into Welch spectra and frequency-domain-decomposition estimates.

pub mod csvio;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod hydro;
pub mod modal;
pub mod soil;

pub use error::{Error, Result};
