//! Mean curvature flow of complete noncompact surfaces in 3-space,
//! simulated on two overlapping finite-difference grids.
//!
//! The surface is represented twice: near the tip as a graph `z(x, y)` on a
//! Cartesian square centered on the rotation axis, and away from the tip as a
//! graph `r(z, theta)` on a periodic cylindrical grid. Each grid's boundary
//! lies in the interior of the other, and boundary values are refreshed every
//! step by interpolation plus one-dimensional root finding ("overlap" or
//! chimera coupling). The flow is advanced by forward Euler under a CFL bound
//! that includes the metric factor `(r dtheta)^2`.
//!
//! Module map:
//! - [`grids`]: the two patch types, sampling, cross-patch root finding,
//!   boundary exchange, overlap-mismatch measurement, and regridding.
//! - [`stencils`]: second-order centered difference kernels.
//! - [`flow`]: the evolution equations, CFL time step, Euler stepper, and the
//!   run loop with stop criteria.
//! - [`initial_data`]: construction constants, the translating-soliton core,
//!   the analytic tail, and the near/far perturbation classes.
//! - [`diagnostics`]: curvature fields, neck scanning, angular mode
//!   amplitudes, power-law blowup fits, and singularity classification.
//! - [`config`], [`snapshot`], [`driver`]: run configuration, CSV
//!   serialization, and the pipeline behind the `mcf` binary.

pub mod config;
pub mod diagnostics;
pub mod driver;
pub mod error;
pub mod flow;
pub mod grids;
pub mod initial_data;
pub mod snapshot;
pub mod stencils;

pub use error::{Error, Result};
