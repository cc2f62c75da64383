//! Per-mode linear Stokes problems and the linearized surface-wave evolution.
//!
//! After a horizontal Fourier transform every linear problem splits into
//! independent boundary-value problems in `z`, one per wavevector. The
//! [`ModeOperator`] assembles and factorizes one of them; the time steppers
//! and the line-domain decay quadrature are built on it.

pub mod linear;
pub mod manufactured;
pub mod mode;
pub mod quadrature;
pub mod vertical;

pub use linear::{linear_mode_evolve, LinearModeState, Scheme};
pub use mode::{
    solve_stokes_dirichlet, solve_stokes_stress, surface_traction, Boundary, ModeData, ModeOperator, ModeResiduals,
    ModeSolution, Wavenumber,
};
pub use quadrature::{line_decay_quadrature, DecayTable, Profile};
pub use vertical::Vertical;
