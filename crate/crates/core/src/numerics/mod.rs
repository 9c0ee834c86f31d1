//! Shared numerical kernels: quadrature, root finding, interpolation, and
//! a small fixed-step integrator.

pub mod interpolate;
pub mod ode;
pub mod quadrature;
pub mod rootfind;

pub use interpolate::{cubic4_uniform, locate_cell, BicubicHermite, MonotoneCubic};
pub use ode::rk4_step;
pub use quadrature::{
    cumulative_simpson_fn, cumulative_simpson_table, partial_cell_simpson, simpson_fn,
    simpson_fn_checked, simpson_table,
};
pub use rootfind::{brent, Root};
