//! Sobolev and supremum norms on `Σ` and on the slab.
//!
//! All `*_sq` functions return squared norms. Bulk norms are evaluated in
//! Fourier × Chebyshev coefficient space; Chebyshev coefficients below
//! [`NORM_FILTER`] times the largest one are treated as round-off and dropped
//! before differentiating, otherwise sixth vertical derivatives turn the
//! `1e-16` floor into visible noise.

use num_complex::Complex64;

use super::chebyshev::Chebyshev;
use super::field::{BulkField, SurfaceFunction};

pub const NORM_FILTER: f64 = 1e-13;

/// `|f|_s² = |Σ| Σ_k (1 + |k|²)^s |c_k|²`, any real `s`.
pub fn surface_norm_sq(f: &SurfaceFunction, s: f64) -> f64 {
    let g = f.grid();
    let c = f.coefficients();
    let sum: f64 = c
        .iter()
        .enumerate()
        .map(|(ih, c)| {
            let k = g.wavenumber(ih);
            (1.0 + k * k).powf(s) * c.norm_sqr()
        })
        .sum();
    g.box_area() * sum
}

pub fn surface_norm(f: &SurfaceFunction, s: f64) -> f64 {
    surface_norm_sq(f, s).sqrt()
}

/// Sum of squared surface norms of the components of a vector.
pub fn surface_vector_norm_sq(f: &[SurfaceFunction], s: f64) -> f64 {
    f.iter().map(|c| surface_norm_sq(c, s)).sum()
}

/// `|Df|_s²` summed over horizontal directions.
pub fn surface_gradient_norm_sq(f: &SurfaceFunction, s: f64) -> f64 {
    surface_vector_norm_sq(&f.gradient(), s)
}

/// Multi-indices `β ∈ N^d` with `|β| = order`.
pub fn multi_indices(d: usize, order: usize) -> Vec<Vec<usize>> {
    if d == 1 {
        return vec![vec![order]];
    }
    let mut out = Vec::new();
    for first in (0..=order).rev() {
        for mut rest in multi_indices(d - 1, order - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// `‖f‖_k² = Σ_{|β| ≤ k} ‖∂^β f‖²_{L²(Ω)}` for integer `k ≥ 0`.
pub fn bulk_norm_sq(f: &BulkField, k: usize) -> f64 {
    BulkSpectrum::new(f).norm_sq(k)
}

pub fn bulk_norm(f: &BulkField, k: usize) -> f64 {
    bulk_norm_sq(f, k).sqrt()
}

/// Sum of `‖·‖_k²` over the components of a vector field.
pub fn bulk_vector_norm_sq(f: &[BulkField], k: usize) -> f64 {
    f.iter().map(|c| bulk_norm_sq(c, k)).sum()
}

/// Fourier × Chebyshev coefficients of a bulk field, filtered for differentiation.
pub struct BulkSpectrum<'a> {
    field: &'a BulkField,
    cheb: Vec<Vec<Complex64>>,
}

impl<'a> BulkSpectrum<'a> {
    pub fn new(f: &'a BulkField) -> Self {
        let g = f.grid();
        let (nz, nh) = (g.nz(), g.nh());
        let c = f.coefficients();
        let ch = g.chebyshev();
        let mut cheb = Vec::with_capacity(nh);
        let mut peak: f64 = 0.0;
        for ih in 0..nh {
            let re: Vec<f64> = (0..nz).map(|iz| c[iz * nh + ih].re).collect();
            let im: Vec<f64> = (0..nz).map(|iz| c[iz * nh + ih].im).collect();
            let (cr, ci) = (ch.coefficients(&re), ch.coefficients(&im));
            let col: Vec<Complex64> = cr.iter().zip(&ci).map(|(&a, &b)| Complex64::new(a, b)).collect();
            peak = col.iter().fold(peak, |m, v| m.max(v.norm()));
            cheb.push(col);
        }
        let cut = NORM_FILTER * peak;
        for col in cheb.iter_mut() {
            for v in col.iter_mut() {
                if v.norm() < cut {
                    *v = Complex64::new(0.0, 0.0);
                }
            }
        }
        Self { field: f, cheb }
    }

    /// `∫_{-b}^0 |∂_z^m \hat f_k|² dz` for every horizontal mode, exact for the series.
    pub fn vertical_integrals(&self, m: usize) -> Vec<f64> {
        let g = self.field.grid();
        let nz = g.nz();
        let fine = Chebyshev::new(2 * nz);
        let scale = (2.0 / g.depth()).powi(2 * m as i32) * 0.5 * g.depth();
        self.cheb
            .iter()
            .map(|col| {
                let mut re: Vec<f64> = col.iter().map(|c| c.re).collect();
                let mut im: Vec<f64> = col.iter().map(|c| c.im).collect();
                for _ in 0..m {
                    re = Chebyshev::derivative_coefficients(&re);
                    im = Chebyshev::derivative_coefficients(&im);
                }
                if re.iter().chain(&im).all(|&v| v == 0.0) {
                    return 0.0;
                }
                fine.nodes()
                    .iter()
                    .zip(fine.weights())
                    .map(|(&s, w)| {
                        let a = Chebyshev::evaluate(&re, s);
                        let b = Chebyshev::evaluate(&im, s);
                        w * (a * a + b * b)
                    })
                    .sum::<f64>()
                    * scale
            })
            .collect()
    }

    /// `‖∂^β f‖²` for a single multi-index.
    pub fn derivative_sq(&self, beta: &[usize]) -> f64 {
        let g = self.field.grid();
        let h = g.horizontal_dims();
        let mut bh = [0, 0];
        bh[..h].copy_from_slice(&beta[..h]);
        let iz = self.vertical_integrals(beta[h]);
        let sum: f64 = iz
            .iter()
            .enumerate()
            .map(|(ih, v)| g.derivative_symbol(ih, bh).norm_sqr() * v)
            .sum();
        g.box_area() * sum
    }

    pub fn norm_sq(&self, k: usize) -> f64 {
        let g = self.field.grid();
        let h = g.horizontal_dims();
        let mut total = 0.0;
        for m in 0..=k {
            let iz = self.vertical_integrals(m);
            // Σ over horizontal multi-indices of order <= k - m
            let mut weight = vec![0.0; g.nh()];
            for order in 0..=(k - m) {
                for bh in multi_indices(h, order) {
                    let mut b = [0, 0];
                    b[..h].copy_from_slice(&bh);
                    for (ih, w) in weight.iter_mut().enumerate() {
                        *w += g.derivative_symbol(ih, b).norm_sqr();
                    }
                }
            }
            total += iz.iter().zip(&weight).map(|(a, b)| a * b).sum::<f64>();
        }
        g.box_area() * total
    }
}

/// Pointwise `|∇^j f|` for `j = 0..=order`, where the tensor norm runs over
/// all components and all multi-indices of length `j`.
pub fn derivative_magnitudes(f: &[BulkField], order: usize) -> Vec<BulkField> {
    let g = f[0].grid();
    let d = g.dim();
    (0..=order)
        .map(|j| {
            let mut acc = BulkField::zeros(g);
            for beta in multi_indices(d, j) {
                for c in f {
                    let df = c.deriv(&beta);
                    acc += &df * &df;
                }
            }
            acc.map(f64::sqrt)
        })
        .collect()
}

/// Pointwise `|D∇f|` on the slab: second derivatives with a horizontal index.
pub fn horizontal_second_magnitude(f: &[BulkField]) -> BulkField {
    let g = f[0].grid();
    let d = g.dim();
    let mut acc = BulkField::zeros(g);
    for beta in multi_indices(d, 2) {
        if beta[d - 1] == 2 {
            continue;
        }
        for c in f {
            let df = c.deriv(&beta);
            acc += &df * &df;
        }
    }
    acc.map(f64::sqrt)
}

/// `‖f‖_{C^k(Ω̄)} = Σ_{j ≤ k} sup_Ω |∇^j f|`.
pub fn ck_norm(f: &[BulkField], k: usize) -> f64 {
    derivative_magnitudes(f, k).iter().map(BulkField::sup).sum()
}

/// `|f|_{C^k(Σ)}` using full gradients restricted to the surface.
pub fn ck_norm_surface(f: &[BulkField], k: usize) -> f64 {
    derivative_magnitudes(f, k).iter().map(|m| m.trace().sup()).sum()
}

/// Squared `L²(Ω)` norm.
pub fn l2_sq(f: &BulkField) -> f64 {
    (f * f).integral()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::Grid;
    use std::f64::consts::PI;

    #[test]
    fn surface_norm_of_cosine() {
        let g = Grid::new_2d(16, 2.0 * PI, 5, 1.0).unwrap();
        let f = SurfaceFunction::from_fn(&g, |x| (2.0 * x[0]).cos());
        // |Σ| · 2 · (1/2)² · (1 + 4)^s
        for s in [-1.0, 0.0, 0.5, 3.0] {
            let expect = 2.0 * PI * 0.5 * 5f64.powf(s);
            assert!((surface_norm_sq(&f, s) - expect).abs() < 1e-12 * expect);
        }
    }

    #[test]
    fn multi_index_counts() {
        assert_eq!(multi_indices(2, 3).len(), 4);
        assert_eq!(multi_indices(3, 2).len(), 6);
        assert!(multi_indices(3, 2).iter().all(|b| b.iter().sum::<usize>() == 2));
    }

    #[test]
    fn bulk_norm_against_closed_form() {
        // f = cos(x) z²  on (0,2π) × (-1,0)
        let g = Grid::new_2d(16, 2.0 * PI, 9, 1.0).unwrap();
        let f = BulkField::from_fn(&g, |x| x[0].cos() * x[1] * x[1]);
        // ∫ cos² = π; ∫ z⁴ = 1/5, ∫ (2z)² = 4/3, ∫ 2² = 4
        let base = PI * (0.2);
        let dz1 = PI * (4.0 / 3.0);
        let dz2 = PI * 4.0;
        let k0 = base;
        let k1 = base + base + dz1;
        let k2 = k1 + base + dz1 + dz2;
        assert!((bulk_norm_sq(&f, 0) - k0).abs() < 1e-12);
        assert!((bulk_norm_sq(&f, 1) - k1).abs() < 1e-12);
        assert!((bulk_norm_sq(&f, 2) - k2).abs() < 1e-11);
        assert!((l2_sq(&f) - k0).abs() < 1e-12);
    }

    #[test]
    fn high_vertical_derivatives_stay_clean() {
        let g = Grid::new_2d(16, 2.0 * PI, 33, 1.0).unwrap();
        let f = BulkField::from_fn(&g, |x| x[0].sin() * (x[1] + 0.5).powi(3));
        // ∂_z^4 vanishes, so ‖f‖_6 only sees β_z <= 3
        let spec = BulkSpectrum::new(&f);
        assert!(spec.derivative_sq(&[0, 4]) < 1e-20);
        assert!(spec.derivative_sq(&[2, 6]) < 1e-20);
        let exact = PI * 36.0;
        assert!((spec.derivative_sq(&[0, 3]) - exact).abs() < 1e-9);
    }

    #[test]
    fn sup_chain_on_surface() {
        let g = Grid::new_2d(16, 2.0 * PI, 9, 1.0).unwrap();
        let u = vec![BulkField::from_fn(&g, |x| x[0].sin() * (1.0 + x[1]))];
        let d = derivative_magnitudes(&u, 2);
        assert!((d[0].sup() - 1.0).abs() < 1e-12);
        let mixed = horizontal_second_magnitude(&u);
        assert!(mixed.sup() <= d[2].sup() + 1e-15);
    }
}
