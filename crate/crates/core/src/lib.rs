//! Viscous surface waves over a flat bottom, solved in flattened coordinates.
//!
//! The moving fluid domain is pulled back to a fixed slab `Σ × (-b, 0)` by a
//! Poisson-extension flattening map. The unknowns are the velocity `u`, the
//! pressure `p` and the surface height `η`; the geometric equations are
//! written as a flat Stokes problem plus nonlinear forcing, which is what the
//! time stepper and the diagnostics work with.
//!
//! Module map:
//! - [`discretization`]: Fourier × Chebyshev grids, fields, transforms, norms
//! - [`geometry`]: flattening map, Jacobian quantities, time layers
//! - [`forms`]: nonlinear forcing, commutators, good unknowns, temporal forcing
//! - [`stokes`]: per-mode linear solvers, linear decay quadrature
//! - [`evolve`]: IMEX time stepping, initial data, checkpoints
//! - [`diagnostics`]: energy functionals, decay fits, interpolation probes

pub mod config;
pub mod diagnostics;
pub mod discretization;
pub mod error;
pub mod evolve;
pub mod forms;
pub mod geometry;
mod parallel;
pub mod random;
pub mod stokes;

pub use discretization::{BulkField, Grid, SurfaceFunction};
pub use error::{Error, Result};
