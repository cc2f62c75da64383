//! Monolithic per-mode Stokes operator.
//!
//! For a horizontal wavevector `k` the unknowns are the velocity profiles
//! `û_c(z)` on all nodes and the pressure on the interior nodes. Rows:
//!
//! - interior momentum: `(σ + |k|²) û_c − û_c'' + (∇p̂)_c = f_c`
//! - interior divergence: `i k·û_h + û_d' = h`
//! - surface, stress type: `−(û_c' + i k_c û_d) = ψ_c` and `p̂ − 2 û_d' − γ û_d = ψ_d`
//! - surface, Dirichlet type: `û = φ`
//! - bottom: `û = 0`
//!
//! `σ` and `γ` are zero for the elliptic problems; the time steppers use
//! them for the mass term and for gravity acting through `η^{n+1}`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C;

use super::vertical::Vertical;
use crate::discretization::Grid;
use crate::error::{Error, Result};

/// Horizontal wavevector as seen by the derivative symbols.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Wavenumber {
    /// multiplier of `∂_{x_c}`
    pub ik: [C; 2],
    /// multiplier of `−Δ_h`
    pub ksq: f64,
}

impl Wavenumber {
    pub fn from_vector(k: [f64; 2]) -> Self {
        Self { ik: [C::new(0.0, k[0]), C::new(0.0, k[1])], ksq: k[0] * k[0] + k[1] * k[1] }
    }

    /// Mode `ih` of a grid, with the grid's Nyquist convention.
    pub fn from_grid(grid: &Grid, ih: usize) -> Self {
        let ik = [grid.derivative_symbol(ih, [1, 0]), grid.derivative_symbol(ih, [0, 1])];
        let ksq = -(grid.derivative_symbol(ih, [2, 0]) + grid.derivative_symbol(ih, [0, 2])).re;
        Self { ik, ksq }
    }

    pub fn magnitude(&self) -> f64 {
        self.ksq.sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.ksq == 0.0 && self.ik.iter().all(|c| c.norm() == 0.0)
    }
}

/// Surface condition type.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Boundary {
    Stress,
    Dirichlet,
}

/// Right-hand side of one mode problem.
#[derive(Clone, Debug)]
pub struct ModeData {
    /// momentum forcing, `dim` profiles (only interior nodes are used)
    pub f: Vec<Vec<C>>,
    /// divergence data (interior nodes used)
    pub h: Vec<C>,
    /// surface data: traction `ψ` or velocity `φ`, `dim` components
    pub top: Vec<C>,
}

impl ModeData {
    pub fn zeros(dim: usize, n: usize) -> Self {
        Self { f: vec![vec![C::new(0.0, 0.0); n]; dim], h: vec![C::new(0.0, 0.0); n], top: vec![C::new(0.0, 0.0); dim] }
    }

    fn scale(&self) -> f64 {
        let s = self.f.iter().flatten().chain(&self.h).chain(&self.top).fold(0.0f64, |a, c| a.max(c.norm()));
        s.max(f64::MIN_POSITIVE)
    }
}

/// Velocity profiles and pressure of one mode.
#[derive(Clone, Debug)]
pub struct ModeSolution {
    pub u: Vec<Vec<C>>,
    /// pressure on the interior nodes
    pub q: Vec<C>,
    /// pressure interpolated to all nodes
    pub p: Vec<C>,
}

/// Maximum residual of each equation family.
#[derive(Clone, Copy, Debug, Default)]
pub struct ModeResiduals {
    pub momentum: f64,
    pub divergence: f64,
    pub surface: f64,
    pub bottom: f64,
}

impl ModeResiduals {
    pub fn max(&self) -> f64 {
        self.momentum.max(self.divergence).max(self.surface).max(self.bottom)
    }
}

/// Factorized mode system.
pub struct ModeOperator {
    vertical: Arc<Vertical>,
    dim: usize,
    wave: Wavenumber,
    boundary: Boundary,
    sigma: f64,
    gamma: f64,
    gauge: bool,
    matrix: DMatrix<C>,
    lu: nalgebra::LU<C, nalgebra::Dyn, nalgebra::Dyn>,
}

impl std::fmt::Debug for ModeOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ModeOperator")
            .field("dim", &self.dim)
            .field("wave", &self.wave)
            .field("boundary", &self.boundary)
            .field("sigma", &self.sigma)
            .field("gamma", &self.gamma)
            .finish()
    }
}

fn c(v: f64) -> C {
    C::new(v, 0.0)
}

impl ModeOperator {
    /// Elliptic operator (`σ = γ = 0`).
    pub fn elliptic(vertical: Arc<Vertical>, dim: usize, wave: Wavenumber, boundary: Boundary) -> Result<Self> {
        Self::new(vertical, dim, wave, boundary, 0.0, 0.0)
    }

    pub fn new(
        vertical: Arc<Vertical>,
        dim: usize,
        wave: Wavenumber,
        boundary: Boundary,
        sigma: f64,
        gamma: f64,
    ) -> Result<Self> {
        if !(dim == 2 || dim == 3) {
            return Err(Error::IncompatibleData(format!("mode operator needs dim 2 or 3, got {dim}")));
        }
        let n = vertical.len();
        let h = dim - 1;
        let m = n - 2;
        let size = dim * n + m;
        let qo = dim * n;
        let gauge = boundary == Boundary::Dirichlet && wave.is_zero();
        let mut a = DMatrix::<C>::zeros(size, size);

        for comp in 0..dim {
            let row0 = comp * n;
            // surface row
            match boundary {
                Boundary::Stress => {
                    if comp < h {
                        for j in 0..n {
                            a[(row0, comp * n + j)] -= c(vertical.d1(0, j));
                        }
                        a[(row0, h * n)] -= wave.ik[comp];
                    } else {
                        for j in 0..m {
                            a[(row0, qo + j)] += c(vertical.p_interp(0, j));
                        }
                        for j in 0..n {
                            a[(row0, h * n + j)] -= c(2.0 * vertical.d1(0, j));
                        }
                        a[(row0, h * n)] -= c(gamma);
                    }
                }
                Boundary::Dirichlet => a[(row0, row0)] = c(1.0),
            }
            // bottom row
            a[(row0 + n - 1, row0 + n - 1)] = c(1.0);
            // interior momentum
            for i in 1..n - 1 {
                let r = row0 + i;
                a[(r, row0 + i)] += c(sigma + wave.ksq);
                for j in 0..n {
                    a[(r, row0 + j)] -= c(vertical.d2(i, j));
                }
                for j in 0..m {
                    let g = if comp < h { wave.ik[comp] * vertical.p_interp(i, j) } else { c(vertical.p_deriv(i, j)) };
                    a[(r, qo + j)] += g;
                }
            }
        }
        // interior divergence
        for i in 1..n - 1 {
            let r = qo + i - 1;
            for comp in 0..h {
                a[(r, comp * n + i)] += wave.ik[comp];
            }
            for j in 0..n {
                a[(r, h * n + j)] += c(vertical.d1(i, j));
            }
        }
        let a = if gauge { Self::bordered(&a, &vertical, qo) } else { a };
        let size = a.nrows();
        let lu = a.clone().lu();
        let u = lu.u();
        let diag: Vec<f64> = (0..size).map(|i| u[(i, i)].norm()).collect();
        let (lo, hi) = diag.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &v| (l.min(v), h.max(v)));
        if !(lo > 1e-14 * hi) {
            return Err(Error::SingularMode { k: wave.magnitude() });
        }
        Ok(Self { vertical, dim, wave, boundary, sigma, gamma, gauge, matrix: a, lu })
    }

    /// Zero-mode Dirichlet system `[A y; gᵀ 0]`: constant pressures span the
    /// kernel of `A`, `g` fixes their mean and the left null vector `y`
    /// absorbs the incompatible part of the data. Which equation carries the
    /// compatibility condition depends on the parity of `n`, so `y` is
    /// computed rather than assumed.
    fn bordered(a: &DMatrix<C>, vertical: &Vertical, qo: usize) -> DMatrix<C> {
        let size = a.nrows();
        let n = vertical.len();
        let svd = a.clone().svd(true, false);
        let imin = (0..size)
            .min_by(|&i, &j| svd.singular_values[i].partial_cmp(&svd.singular_values[j]).unwrap_or(std::cmp::Ordering::Equal))
            .expect("nonempty");
        let y = svd.u.as_ref().expect("requested").column(imin).into_owned();
        let mut b = DMatrix::<C>::zeros(size + 1, size + 1);
        b.view_mut((0, 0), (size, size)).copy_from(a);
        b.view_mut((0, size), (size, 1)).copy_from(&y);
        for j in 0..n - 2 {
            let w: f64 = (0..n).map(|i| vertical.weights()[i] * vertical.p_interp(i, j)).sum();
            b[(size, qo + j)] = c(w);
        }
        b
    }

    pub fn vertical(&self) -> &Arc<Vertical> {
        &self.vertical
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn wave(&self) -> Wavenumber {
        self.wave
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    /// Number of unknowns `(û, q)`.
    pub fn size(&self) -> usize {
        let n = self.vertical.len();
        self.dim * n + n - 2
    }

    /// `max |P⁻¹LU − M|` relative to `max |M|`.
    pub fn factorization_residual(&self) -> f64 {
        let mut prod = self.lu.l() * self.lu.u();
        self.lu.p().inv_permute_rows(&mut prod);
        let diff = (&prod - &self.matrix).iter().fold(0.0f64, |a, v| a.max(v.norm()));
        diff / self.matrix.iter().fold(0.0f64, |a, v| a.max(v.norm()))
    }

    fn rhs(&self, data: &ModeData) -> DVector<C> {
        let n = self.vertical.len();
        let mut b = DVector::<C>::zeros(self.matrix.nrows());
        for comp in 0..self.dim {
            b[comp * n] = data.top[comp];
            for i in 1..n - 1 {
                b[comp * n + i] = data.f[comp][i];
            }
        }
        for i in 1..n - 1 {
            b[self.dim * n + i - 1] = data.h[i];
        }
        b
    }

    fn unpack(&self, x: &DVector<C>) -> ModeSolution {
        let n = self.vertical.len();
        let u: Vec<Vec<C>> = (0..self.dim).map(|comp| (0..n).map(|i| x[comp * n + i]).collect()).collect();
        let q: Vec<C> = (0..n - 2).map(|j| x[self.dim * n + j]).collect();
        let p = self.vertical.pressure_values(&q);
        ModeSolution { u, q, p }
    }

    /// Solve for `(û, p̂)`.
    pub fn solve(&self, data: &ModeData) -> Result<ModeSolution> {
        let n = self.vertical.len();
        if data.f.len() != self.dim || data.top.len() != self.dim || data.h.len() != n || data.f.iter().any(|f| f.len() != n) {
            return Err(Error::IncompatibleData("mode data does not match the operator".into()));
        }
        let x = self.lu.solve(&self.rhs(data)).ok_or(Error::SingularMode { k: self.wave.magnitude() })?;
        if x.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::SingularMode { k: self.wave.magnitude() });
        }
        if self.gauge {
            // multiplier of the left null vector: the incompatible part of the data
            let lambda = x[self.size()].norm();
            if lambda > 1e-8 * data.scale() {
                return Err(Error::IncompatibleData(format!(
                    "zero-mode data violate ∫h dz = surface normal velocity (defect {lambda:.3e})"
                )));
            }
        }
        Ok(self.unpack(&x))
    }

    /// Residuals of every equation evaluated from the solution profiles,
    /// relative to the data scale.
    pub fn residuals(&self, sol: &ModeSolution, data: &ModeData) -> ModeResiduals {
        let v = &self.vertical;
        let n = v.len();
        let h = self.dim - 1;
        let du: Vec<Vec<C>> = sol.u.iter().map(|u| v.apply(1, u)).collect();
        let d2u: Vec<Vec<C>> = sol.u.iter().map(|u| v.apply(2, u)).collect();
        let dp: Vec<C> = (0..n).map(|i| (0..n - 2).map(|j| sol.q[j] * v.p_deriv(i, j)).sum()).collect();
        let mut r = ModeResiduals::default();
        for i in 1..n - 1 {
            for comp in 0..self.dim {
                let grad = if comp < h { self.wave.ik[comp] * sol.p[i] } else { dp[i] };
                let lhs = sol.u[comp][i] * (self.sigma + self.wave.ksq) - d2u[comp][i] + grad;
                r.momentum = r.momentum.max((lhs - data.f[comp][i]).norm());
            }
            let div: C = (0..h).map(|comp| self.wave.ik[comp] * sol.u[comp][i]).sum::<C>() + du[h][i];
            r.divergence = r.divergence.max((div - data.h[i]).norm());
        }
        for comp in 0..self.dim {
            let top = match self.boundary {
                Boundary::Dirichlet => sol.u[comp][0],
                Boundary::Stress if comp < h => -(du[comp][0] + self.wave.ik[comp] * sol.u[h][0]),
                Boundary::Stress => sol.p[0] - du[h][0] * 2.0 - sol.u[h][0] * self.gamma,
            };
            r.surface = r.surface.max((top - data.top[comp]).norm());
            r.bottom = r.bottom.max(sol.u[comp][n - 1].norm());
        }
        let s = data.scale();
        r.momentum /= s;
        r.divergence /= s;
        r.surface /= s;
        r.bottom /= s;
        r
    }
}

/// Surface traction `−(pI − Du)e_d` components of a profile, in the sign
/// convention of the stress rows: `(−(û_c' + i k_c û_d), p̂ − 2û_d')`.
pub fn surface_traction(vertical: &Vertical, wave: &Wavenumber, u: &[Vec<C>], p0: C) -> Vec<C> {
    let dim = u.len();
    let h = dim - 1;
    let d1_top = |f: &[C]| -> C { (0..vertical.len()).map(|j| f[j] * vertical.d1(0, j)).sum() };
    let mut out: Vec<C> = (0..h).map(|comp| -(d1_top(&u[comp]) + wave.ik[comp] * u[h][0])).collect();
    out.push(p0 - d1_top(&u[h]) * 2.0);
    out
}

/// Solve the stress problem: `−Δu + ∇p = f`, `div u = h`, `(pI − Du)e_d = ψ`
/// on the surface, `u = 0` on the bottom, for one mode.
pub fn solve_stokes_stress(vertical: &Arc<Vertical>, wave: Wavenumber, data: &ModeData) -> Result<ModeSolution> {
    ModeOperator::elliptic(vertical.clone(), data.f.len(), wave, Boundary::Stress)?.solve(data)
}

/// Solve the Dirichlet problem `u = φ` on the surface for one mode. At
/// `k = 0` the pressure is returned with zero vertical mean.
pub fn solve_stokes_dirichlet(vertical: &Arc<Vertical>, wave: Wavenumber, data: &ModeData) -> Result<ModeSolution> {
    ModeOperator::elliptic(vertical.clone(), data.f.len(), wave, Boundary::Dirichlet)?.solve(data)
}
