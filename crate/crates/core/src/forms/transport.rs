//! Transport of `𝒥^s η`, where `𝒥^s` is the Fourier multiplier `(1 + |k|²)^{s/2}`.
//!
//! Applying `𝒥^s` to the kinematic condition `∂_t η + u_h·Dη = u_d` gives
//! `∂_t 𝒥^s η + u_h·D 𝒥^s η = 𝒥^s u_d − [𝒥^s, u_h]·Dη`.

use crate::discretization::{BulkField, SurfaceFunction};
use num_complex::Complex64;

/// `𝒥^s f`.
pub fn bessel_potential(f: &SurfaceFunction, s: f64) -> SurfaceFunction {
    let g = f.grid().clone();
    f.apply_symbol(|ih| {
        let k = g.wavenumber(ih);
        Complex64::new((1.0 + k * k).powf(0.5 * s), 0.0)
    })
}

/// `[𝒥^s, f] g = 𝒥^s(fg) − f 𝒥^s g`.
pub fn bessel_commutator(f: &SurfaceFunction, g: &SurfaceFunction, s: f64) -> SurfaceFunction {
    bessel_potential(&(f * g), s) - f * &bessel_potential(g, s)
}

/// Right side `𝒥^s u_d − [𝒥^s, u_h]·Dη` of the transport equation.
pub fn f_transport_rhs(eta: &SurfaceFunction, u: &[BulkField], s: f64) -> SurfaceFunction {
    let h = u.len() - 1;
    let deta = eta.gradient();
    let mut rhs = bessel_potential(&u[h].trace(), s);
    for j in 0..h {
        rhs -= bessel_commutator(&u[j].trace(), &deta[j], s);
    }
    rhs
}

fn l2(f: &SurfaceFunction) -> f64 {
    (f * f).integral().sqrt()
}

/// `‖[𝒥^s,f]g‖ / (‖∇f‖_∞ ‖𝒥^{s−1}g‖ + ‖𝒥^s f‖ ‖g‖_∞)`, all norms on `Σ`.
pub fn commutator_estimate_ratio(f: &SurfaceFunction, g: &SurfaceFunction, s: f64) -> f64 {
    let lhs = l2(&bessel_commutator(f, g, s));
    let grad_sup = f.gradient().iter().map(SurfaceFunction::sup).fold(0.0, f64::max);
    let rhs = grad_sup * l2(&bessel_potential(g, s - 1.0)) + l2(&bessel_potential(f, s)) * g.sup();
    if rhs == 0.0 {
        0.0
    } else {
        lhs / rhs
    }
}
