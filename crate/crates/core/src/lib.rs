//! Ground states of the nonlinear Schrödinger equation on a strip with a
//! transverse delta defect on the line x = 0.
//!
//! The crate provides, on the truncated normalized strip [-X, X] x [0, 1]:
//!
//! - grids, trapezoid quadrature and the discrete defect operators ([`grid`]),
//! - the action/Nehari/energy/mass functionals with exact discrete gradients
//!   and identity-based diagnostics ([`functionals`]),
//! - closed-form 1D solitons as analytic oracles ([`soliton`]),
//! - constrained minimization engines for action ground states on the Nehari
//!   manifold and energy ground states at fixed mass ([`minimize`]),
//! - the spectral Green's function of the defect operator ([`greens`]),
//! - width sweeps locating the dimensional-reduction thresholds and the
//!   repulsive coupling threshold ([`shrink`]),
//! - snapshot/CSV persistence and a CLI runner ([`snapshot`], [`config`],
//!   [`runner`]).

pub mod config;
pub mod error;
pub mod functionals;
pub mod greens;
pub mod grid;
pub mod minimize;
pub mod params;
pub mod runner;
pub mod shrink;
pub mod snapshot;
pub mod soliton;

pub use error::{Error, Result};
pub use functionals::FunctionalReport;
pub use grid::{Field, StripGrid};
pub use params::ProblemParams;
