//! Flat mixed Poisson problem `Δq = f`, `q = g` on `Σ`, `∂_z q = h` on the
//! bottom, solved mode by mode.
//!
//! The operator is built from composed first derivatives (`D_z·D_z`, and the
//! square of the first-derivative symbol horizontally) so that it agrees with
//! the way the geometric Laplacian is discretized.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, LU};
use num_complex::Complex64 as C;

use crate::discretization::{BulkField, Grid, SurfaceFunction};
use crate::error::{Error, Result};

pub struct MixedPoisson {
    grid: Arc<Grid>,
    lus: Vec<LU<f64, nalgebra::Dyn, nalgebra::Dyn>>,
}

impl std::fmt::Debug for MixedPoisson {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MixedPoisson").field("modes", &self.lus.len()).finish()
    }
}

/// `Σ_j ∂_j ∂_j f` with every second derivative composed from first ones.
pub fn composed_laplacian(f: &BulkField) -> BulkField {
    let d = f.grid().dim();
    let mut acc = f.d(0).d(0);
    for j in 1..d {
        acc += f.d(j).d(j);
    }
    acc
}

impl MixedPoisson {
    pub fn new(grid: &Arc<Grid>) -> Result<Self> {
        let n = grid.nz();
        let d1 = grid.dz_matrix(1);
        let mut dd = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                dd[(i, j)] = (0..n).map(|m| d1[i * n + m] * d1[m * n + j]).sum();
            }
        }
        let mut lus = Vec::with_capacity(grid.nh());
        for ih in 0..grid.nh() {
            let ksq: f64 = (0..grid.horizontal_dims())
                .map(|a| {
                    let mut b = [0, 0];
                    b[a] = 1;
                    grid.derivative_symbol(ih, b).norm_sqr()
                })
                .sum();
            let mut m = DMatrix::<f64>::zeros(n, n);
            m[(0, 0)] = 1.0;
            for i in 1..n - 1 {
                for j in 0..n {
                    m[(i, j)] = dd[(i, j)];
                }
                m[(i, i)] -= ksq;
            }
            for j in 0..n {
                m[(n - 1, j)] = d1[(n - 1) * n + j];
            }
            let lu = m.lu();
            if !lu.is_invertible() {
                return Err(Error::SingularMode { k: ksq.sqrt() });
            }
            lus.push(lu);
        }
        Ok(Self { grid: grid.clone(), lus })
    }

    /// Solve with interior source `f`, surface value `top` and bottom slope `flux`.
    pub fn solve(&self, f: &BulkField, top: &SurfaceFunction, flux: &SurfaceFunction) -> BulkField {
        let g = &self.grid;
        let (n, nh) = (g.nz(), g.nh());
        let fc = f.coefficients();
        let (tc, bc) = (top.coefficients(), flux.coefficients());
        let mut out = vec![C::new(0.0, 0.0); n * nh];
        for ih in 0..nh {
            let mut re = DVector::<f64>::zeros(n);
            let mut im = DVector::<f64>::zeros(n);
            for iz in 1..n - 1 {
                re[iz] = fc[iz * nh + ih].re;
                im[iz] = fc[iz * nh + ih].im;
            }
            re[0] = tc[ih].re;
            im[0] = tc[ih].im;
            re[n - 1] = bc[ih].re;
            im[n - 1] = bc[ih].im;
            let (xr, xi) = (self.lus[ih].solve(&re).expect("invertible"), self.lus[ih].solve(&im).expect("invertible"));
            for iz in 0..n {
                out[iz * nh + ih] = C::new(xr[iz], xi[iz]);
            }
        }
        BulkField::from_coefficients(g, &out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_a_smooth_solution() {
        let g = Grid::new_2d(16, 2.0 * std::f64::consts::PI, 17, 1.0).unwrap();
        let exact = BulkField::from_fn(&g, |x| (2.0 * x[0]).cos() * (x[1] * 1.3).exp() + x[1] * x[1]);
        let f = composed_laplacian(&exact);
        let solver = MixedPoisson::new(&g).unwrap();
        let q = solver.solve(&f, &exact.trace(), &exact.dz().bottom_trace());
        assert!((&q - &exact).sup() < 1e-11, "{}", (&q - &exact).sup());
    }
}
