//! etalab: spectral invariants of the model operator D = γ(∂_x + A) on the
//! half-line and cut circle, under the interpolating family of APS-type
//! boundary conditions.
//!
//! The crate computes operator heat kernels in closed form, small-time
//! heat-trace and eta-density expansions through Mellin/residue calculus,
//! regularized eta/xi/tau invariants with phase-shifted-lattice tails, exact
//! interval spectra via transfer matrices, spectral flow, the Maslov index,
//! and the gluing-law verdict — all on finite-dimensional desk-scale models.

pub mod error;
pub mod linalg;
pub mod quad;
pub mod specfn;

pub mod model;

pub mod heat;
pub mod mellin;

pub mod eta;
pub mod interval;

pub mod config;
pub mod run;

pub use error::{Error, Result};
