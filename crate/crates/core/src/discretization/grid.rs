use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::chebyshev::Chebyshev;
use crate::error::{Error, Result};

/// Tensor grid: periodic Fourier directions times a Chebyshev vertical.
///
/// Horizontal points are `x_j = j L / n`, the vertical coordinate is
/// `z = b (s - 1) / 2` on Gauss–Lobatto nodes, so level 0 is the surface and
/// level `nz - 1` the bottom. Bulk data is stored level-major:
/// `data[iz * nh + ih]` with `ih = ix * ny + iy`.
pub struct Grid {
    dim: usize,
    n: [usize; 2],
    len: [f64; 2],
    nz: usize,
    depth: f64,
    dealias: f64,
    cheb: Chebyshev,
    z: Vec<f64>,
    wz: Vec<f64>,
    dz: Vec<Vec<f64>>,
    k: [Vec<f64>; 2],
    nyquist: [Option<usize>; 2],
    fft: [Arc<dyn Fft<f64>>; 2],
    ifft: [Arc<dyn Fft<f64>>; 2],
}

impl std::fmt::Debug for Grid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Grid")
            .field("dim", &self.dim)
            .field("n", &self.n)
            .field("len", &self.len)
            .field("nz", &self.nz)
            .field("depth", &self.depth)
            .finish()
    }
}

const MAX_VERTICAL_ORDER: usize = 8;

impl Grid {
    /// Two-dimensional fluid: one periodic direction of length `lx`.
    pub fn new_2d(nx: usize, lx: f64, nz: usize, depth: f64) -> Result<Arc<Self>> {
        Self::build(2, [nx, 1], [lx, 1.0], nz, depth)
    }

    /// Three-dimensional fluid on an `lx × ly` periodic box.
    pub fn new_3d(nx: usize, ny: usize, lx: f64, ly: f64, nz: usize, depth: f64) -> Result<Arc<Self>> {
        Self::build(3, [nx, ny], [lx, ly], nz, depth)
    }

    fn build(dim: usize, n: [usize; 2], len: [f64; 2], nz: usize, depth: f64) -> Result<Arc<Self>> {
        let horiz = dim - 1;
        for a in 0..horiz {
            if n[a] < 4 || n[a] % 2 != 0 {
                return Err(Error::InvalidGrid(format!("horizontal size {} must be even and >= 4", n[a])));
            }
            if !(len[a] > 0.0 && len[a].is_finite()) {
                return Err(Error::InvalidGrid(format!("period {} must be positive", len[a])));
            }
        }
        if nz < 5 {
            return Err(Error::InvalidGrid(format!("nz = {nz} is below the minimum of 5")));
        }
        if !(depth > 0.0 && depth.is_finite()) {
            return Err(Error::InvalidGrid(format!("depth {depth} must be positive")));
        }

        let cheb = Chebyshev::new(nz);
        let z: Vec<f64> = cheb.nodes().iter().map(|s| 0.5 * depth * (s - 1.0)).collect();
        let wz: Vec<f64> = cheb.weights().iter().map(|w| 0.5 * depth * w).collect();
        let scale = 2.0 / depth;
        let dz: Vec<Vec<f64>> = (0..=MAX_VERTICAL_ORDER)
            .map(|m| {
                let f = scale.powi(m as i32);
                cheb.diff_matrix(m).into_iter().map(|v| v * f).collect()
            })
            .collect();

        let mut planner = FftPlanner::new();
        let mut k: [Vec<f64>; 2] = [vec![0.0], vec![0.0]];
        let mut nyquist = [None, None];
        for a in 0..horiz {
            let na = n[a];
            k[a] = (0..na)
                .map(|m| {
                    let signed = if m <= na / 2 { m as f64 } else { m as f64 - na as f64 };
                    2.0 * PI * signed / len[a]
                })
                .collect();
            nyquist[a] = Some(na / 2);
        }
        let fft = [planner.plan_fft_forward(n[0]), planner.plan_fft_forward(n[1])];
        let ifft = [planner.plan_fft_inverse(n[0]), planner.plan_fft_inverse(n[1])];

        Ok(Arc::new(Self { dim, n, len, nz, depth, dealias: 2.0 / 3.0, cheb, z, wz, dz, k, nyquist, fft, ifft }))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of horizontal directions, `d - 1`.
    pub fn horizontal_dims(&self) -> usize {
        self.dim - 1
    }

    pub fn nx(&self) -> usize {
        self.n[0]
    }

    pub fn ny(&self) -> usize {
        self.n[1]
    }

    pub fn nh(&self) -> usize {
        self.n[0] * self.n[1]
    }

    pub fn nz(&self) -> usize {
        self.nz
    }

    pub fn depth(&self) -> f64 {
        self.depth
    }

    pub fn period(&self, axis: usize) -> f64 {
        self.len[axis]
    }

    /// Measure of the periodic cross-section `Σ`.
    pub fn box_area(&self) -> f64 {
        (0..self.horizontal_dims()).map(|a| self.len[a]).product()
    }

    pub fn dealias_fraction(&self) -> f64 {
        self.dealias
    }

    pub fn chebyshev(&self) -> &Chebyshev {
        &self.cheb
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    /// Quadrature weights for `∫_{-b}^0 dz`.
    pub fn z_weights(&self) -> &[f64] {
        &self.wz
    }

    /// Dense `∂_z^order` collocation matrix, row-major `nz × nz`.
    pub fn dz_matrix(&self, order: usize) -> &[f64] {
        &self.dz[order]
    }

    pub fn max_vertical_order(&self) -> usize {
        MAX_VERTICAL_ORDER
    }

    /// Horizontal coordinates of point `ih`, padded with zero.
    pub fn xh(&self, ih: usize) -> [f64; 2] {
        let (ix, iy) = (ih / self.n[1], ih % self.n[1]);
        [
            ix as f64 * self.len[0] / self.n[0] as f64,
            if self.dim == 3 { iy as f64 * self.len[1] / self.n[1] as f64 } else { 0.0 },
        ]
    }

    /// Wavevector of horizontal mode `ih` (second entry zero in 2D).
    pub fn wavevector(&self, ih: usize) -> [f64; 2] {
        let (ix, iy) = (ih / self.n[1], ih % self.n[1]);
        [self.k[0][ix], if self.dim == 3 { self.k[1][iy] } else { 0.0 }]
    }

    pub fn wavenumber(&self, ih: usize) -> f64 {
        let k = self.wavevector(ih);
        (k[0] * k[0] + k[1] * k[1]).sqrt()
    }

    /// True if mode `ih` sits on the Nyquist line of some direction.
    pub fn is_nyquist(&self, ih: usize) -> bool {
        let (ix, iy) = (ih / self.n[1], ih % self.n[1]);
        self.nyquist[0] == Some(ix) || (self.dim == 3 && self.nyquist[1] == Some(iy))
    }

    /// Mode index of `-k`.
    pub fn conjugate_index(&self, ih: usize) -> usize {
        let (ix, iy) = (ih / self.n[1], ih % self.n[1]);
        let cx = (self.n[0] - ix) % self.n[0];
        let cy = (self.n[1] - iy) % self.n[1];
        cx * self.n[1] + cy
    }

    /// Multiplier of `∂^β` for horizontal multi-index `beta`.
    ///
    /// Odd derivatives of the Nyquist mode are set to zero so real data stays real.
    pub fn derivative_symbol(&self, ih: usize, beta: [usize; 2]) -> Complex64 {
        let (ix, iy) = (ih / self.n[1], ih % self.n[1]);
        let idx = [ix, iy];
        if (self.horizontal_dims()..2).any(|a| beta[a] > 0) {
            // derivative along an axis the grid does not have
            return Complex64::new(0.0, 0.0);
        }
        let mut out = Complex64::new(1.0, 0.0);
        for a in 0..self.horizontal_dims() {
            if beta[a] == 0 {
                continue;
            }
            if beta[a] % 2 == 1 && self.nyquist[a] == Some(idx[a]) {
                return Complex64::new(0.0, 0.0);
            }
            out *= Complex64::new(0.0, self.k[a][idx[a]]).powu(beta[a] as u32);
        }
        out
    }

    /// True if the mode survives the dealiasing truncation.
    pub fn in_dealias_band(&self, ih: usize) -> bool {
        let (ix, iy) = (ih / self.n[1], ih % self.n[1]);
        let keep = |m: usize, n: usize| {
            let s = if m <= n / 2 { m } else { n - m };
            (s as f64) <= self.dealias * n as f64 / 2.0
        };
        keep(ix, self.n[0]) && (self.dim == 2 || keep(iy, self.n[1]))
    }

    /// Normalised forward transform: `c_k = (1/nh) Σ f(x) e^{-ik·x}`.
    pub fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut buf, &self.fft);
        let s = 1.0 / self.nh() as f64;
        buf.iter_mut().for_each(|c| *c *= s);
        buf
    }

    /// Inverse of [`Grid::forward`], keeping the real part.
    pub fn inverse(&self, coefs: &[Complex64]) -> Vec<f64> {
        let mut buf = coefs.to_vec();
        self.transform(&mut buf, &self.ifft);
        buf.into_iter().map(|c| c.re).collect()
    }

    /// Inverse transform keeping the full complex result.
    pub fn inverse_complex(&self, coefs: &[Complex64]) -> Vec<Complex64> {
        let mut buf = coefs.to_vec();
        self.transform(&mut buf, &self.ifft);
        buf
    }

    fn transform(&self, buf: &mut [Complex64], plans: &[Arc<dyn Fft<f64>>; 2]) {
        let (nx, ny) = (self.n[0], self.n[1]);
        if ny > 1 {
            for row in buf.chunks_mut(ny) {
                plans[1].process(row);
            }
        }
        if ny == 1 {
            plans[0].process(buf);
        } else {
            let mut col = vec![Complex64::new(0.0, 0.0); nx];
            for iy in 0..ny {
                for ix in 0..nx {
                    col[ix] = buf[ix * ny + iy];
                }
                plans[0].process(&mut col);
                for ix in 0..nx {
                    buf[ix * ny + iy] = col[ix];
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_sizes() {
        assert!(Grid::new_2d(6, 1.0, 4, 1.0).is_err());
        assert!(Grid::new_2d(7, 1.0, 9, 1.0).is_err());
        assert!(Grid::new_2d(8, -1.0, 9, 1.0).is_err());
        assert!(Grid::new_2d(8, 1.0, 9, 0.0).is_err());
    }

    #[test]
    fn cosine_has_two_half_coefficients() {
        let g = Grid::new_2d(16, 2.0 * PI, 5, 1.0).unwrap();
        let f: Vec<f64> = (0..16).map(|i| (3.0 * g.xh(i)[0]).cos()).collect();
        let c = g.forward(&f);
        assert!((c[3].re - 0.5).abs() < 1e-15 && (c[13].re - 0.5).abs() < 1e-15);
        let back = g.inverse(&c);
        for (a, b) in f.iter().zip(&back) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn two_dimensional_transform_round_trip() {
        let g = Grid::new_3d(8, 6, 2.0 * PI, 3.0, 5, 1.0).unwrap();
        let f: Vec<f64> = (0..g.nh())
            .map(|ih| {
                let x = g.xh(ih);
                (x[0]).sin() * (2.0 * PI * x[1] / 3.0).cos()
            })
            .collect();
        let c = g.forward(&f);
        let back = g.inverse(&c);
        for (a, b) in f.iter().zip(&back) {
            assert!((a - b).abs() < 1e-14);
        }
        let ih = 1 * 6 + 1;
        assert!((c[ih].norm() - 0.25).abs() < 1e-14);
        assert_eq!(g.conjugate_index(ih), 7 * 6 + 5);
    }

    #[test]
    fn vertical_grid_orientation() {
        let g = Grid::new_2d(8, 1.0, 9, 2.0).unwrap();
        assert_eq!(g.z()[0], 0.0);
        assert!((g.z()[8] + 2.0).abs() < 1e-15);
        let total: f64 = g.z_weights().iter().sum();
        assert!((total - 2.0).abs() < 1e-14);
    }
}
