//! Manufactured mode solutions for the Stokes solvers.
//!
//! Velocity profiles `û_c(z) = (z + b) e^{a_c z}` vanish on the bottom, the
//! pressure is `p̂(z) = cos(ωz) + z² + p₀`. Forcing, divergence and surface
//! data are computed from closed-form derivatives.

use std::sync::Arc;

use num_complex::Complex64 as C;

use super::mode::{Boundary, ModeData, ModeOperator, Wavenumber};
use super::vertical::Vertical;
use crate::error::Result;

/// Exponent and frequency parameters of a manufactured case.
#[derive(Clone, Debug)]
pub struct Manufactured {
    pub exponents: Vec<C>,
    pub omega: f64,
    pub pressure_shift: f64,
}

impl Manufactured {
    /// Default case for `dim` components; the exponents are large enough that
    /// `n_z = 17` is visibly under-resolved.
    pub fn new(dim: usize) -> Self {
        let all = [C::new(2.5, 4.0), C::new(-1.5, 3.5), C::new(1.0, -4.5)];
        let mut exponents = all[..dim - 1].to_vec();
        exponents.push(all[2]);
        Self { exponents, omega: 5.0, pressure_shift: 0.0 }
    }

    fn u(&self, comp: usize, z: f64, b: f64, order: usize) -> C {
        let a = self.exponents[comp];
        let e = (a * z).exp();
        match order {
            0 => e * (z + b),
            1 => e * (a * (z + b) + 1.0),
            2 => e * (a * a * (z + b) + a * 2.0),
            _ => unreachable!(),
        }
    }

    fn p(&self, z: f64, order: usize) -> C {
        let w = self.omega;
        C::new(
            match order {
                0 => (w * z).cos() + z * z + self.pressure_shift,
                1 => -w * (w * z).sin() + 2.0 * z,
                _ => unreachable!(),
            },
            0.0,
        )
    }

    /// Exact profiles on the nodes of `v`.
    pub fn exact(&self, v: &Vertical) -> (Vec<Vec<C>>, Vec<C>) {
        let b = v.depth();
        let u = (0..self.exponents.len()).map(|c| v.z().iter().map(|&z| self.u(c, z, b, 0)).collect()).collect();
        let p = v.z().iter().map(|&z| self.p(z, 0)).collect();
        (u, p)
    }

    /// Data `(f, h, surface)` for the given problem type.
    pub fn data(&self, v: &Vertical, wave: &Wavenumber, boundary: Boundary) -> ModeData {
        let dim = self.exponents.len();
        let h = dim - 1;
        let b = v.depth();
        let mut data = ModeData::zeros(dim, v.len());
        for (i, &z) in v.z().iter().enumerate() {
            for comp in 0..dim {
                let grad = if comp < h { wave.ik[comp] * self.p(z, 0) } else { self.p(z, 1) };
                data.f[comp][i] = self.u(comp, z, b, 0) * wave.ksq - self.u(comp, z, b, 2) + grad;
            }
            data.h[i] = (0..h).map(|c| wave.ik[c] * self.u(c, z, b, 0)).sum::<C>() + self.u(h, z, b, 1);
        }
        for comp in 0..dim {
            data.top[comp] = match boundary {
                Boundary::Dirichlet => self.u(comp, 0.0, b, 0),
                Boundary::Stress if comp < h => -(self.u(comp, 0.0, b, 1) + wave.ik[comp] * self.u(h, 0.0, b, 0)),
                Boundary::Stress => self.p(0.0, 0) - self.u(h, 0.0, b, 1) * 2.0,
            };
        }
        data
    }

    /// Max nodal error of the discrete solution. For the Dirichlet zero mode
    /// the pressures are compared after removing their means.
    pub fn error(&self, v: &Arc<Vertical>, wave: Wavenumber, boundary: Boundary) -> Result<f64> {
        let dim = self.exponents.len();
        let op = ModeOperator::elliptic(v.clone(), dim, wave, boundary)?;
        let sol = op.solve(&self.data(v, &wave, boundary))?;
        let (u, mut p) = self.exact(v);
        let mut ph = sol.p.clone();
        if boundary == Boundary::Dirichlet && wave.is_zero() {
            let (m1, m2) = (v.integrate(&p) / v.depth(), v.integrate(&ph) / v.depth());
            p.iter_mut().for_each(|x| *x -= m1);
            ph.iter_mut().for_each(|x| *x -= m2);
        }
        let mut err = 0.0f64;
        for comp in 0..dim {
            for (a, e) in sol.u[comp].iter().zip(&u[comp]) {
                err = err.max((a - e).norm());
            }
        }
        for (a, e) in ph.iter().zip(&p) {
            err = err.max((a - e).norm());
        }
        Ok(err)
    }
}

/// One row of the convergence study.
#[derive(Clone, Copy, Debug)]
pub struct ConvergenceRow {
    pub nz: usize,
    pub stress: f64,
    pub dirichlet: f64,
}

/// Manufactured errors for both problems over a list of vertical resolutions,
/// maximised over a fixed set of 2D and 3D wavevectors including `k = 0`.
pub fn convergence_study(nzs: &[usize], depth: f64) -> Result<Vec<ConvergenceRow>> {
    let waves: [(usize, [f64; 2]); 5] =
        [(2, [0.0, 0.0]), (2, [0.7, 0.0]), (2, [3.0, 0.0]), (3, [0.5, -1.2]), (3, [0.0, 0.0])];
    nzs.iter()
        .map(|&nz| {
            let v = Arc::new(Vertical::new(nz, depth));
            let mut row = ConvergenceRow { nz, stress: 0.0, dirichlet: 0.0 };
            for &(dim, k) in &waves {
                let case = Manufactured::new(dim);
                let w = Wavenumber::from_vector(k);
                row.stress = row.stress.max(case.error(&v, w, Boundary::Stress)?);
                row.dirichlet = row.dirichlet.max(case.error(&v, w, Boundary::Dirichlet)?);
            }
            Ok(row)
        })
        .collect()
}
