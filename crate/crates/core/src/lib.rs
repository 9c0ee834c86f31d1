//! Solvers for two-dimensional steady hydrostatic Euler flows in infinitely
//! long nozzles.
//!
//! The flow is reduced to a stream function on the flattened strip, where
//! every vertical slice satisfies a two-point boundary value problem
//! `phi'' = s^2(y1) f(phi)`. Three independent slice solvers are provided
//! (Green's-kernel fixed-point iteration, a shooting oracle, and the direct
//! quadrature route through the height-map transform), together with physical
//! velocity/pressure reconstruction, far-field states, streamline kinematics,
//! and residual/invariant verification.

pub mod analysis;
pub mod error;
pub mod export;
pub mod field;
pub mod geometry;
pub mod kinematics;
pub mod lagrange;
pub mod numerics;
pub mod profiles;
pub mod slice;

pub use error::{Error, Result};
