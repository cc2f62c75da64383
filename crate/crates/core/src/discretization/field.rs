use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::sync::Arc;

use num_complex::Complex64;

use super::grid::Grid;

/// A real function on the periodic cross-section `Σ`, stored at grid points.
#[derive(Clone, Debug)]
pub struct SurfaceFunction {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

/// A real scalar function on the slab, stored level-major at collocation points.
#[derive(Clone, Debug)]
pub struct BulkField {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl SurfaceFunction {
    pub fn zeros(grid: &Arc<Grid>) -> Self {
        Self { grid: grid.clone(), values: vec![0.0; grid.nh()] }
    }

    pub fn constant(grid: &Arc<Grid>, c: f64) -> Self {
        Self { grid: grid.clone(), values: vec![c; grid.nh()] }
    }

    pub fn from_values(grid: &Arc<Grid>, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.nh());
        Self { grid: grid.clone(), values }
    }

    /// Sample `f(x)` where `x` holds the horizontal coordinates.
    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(&[f64]) -> f64) -> Self {
        let h = grid.horizontal_dims();
        let values = (0..grid.nh()).map(|ih| f(&grid.xh(ih)[..h])).collect();
        Self { grid: grid.clone(), values }
    }

    /// Build from normalised Fourier coefficients (assumed Hermitian).
    pub fn from_coefficients(grid: &Arc<Grid>, coefs: &[Complex64]) -> Self {
        Self { grid: grid.clone(), values: grid.inverse(coefs) }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn coefficients(&self) -> Vec<Complex64> {
        self.grid.forward(&self.values)
    }

    /// Apply a Fourier multiplier `m(ih)`.
    pub fn apply_symbol(&self, m: impl Fn(usize) -> Complex64) -> Self {
        let mut c = self.coefficients();
        for (ih, v) in c.iter_mut().enumerate() {
            *v *= m(ih);
        }
        Self::from_coefficients(&self.grid, &c)
    }

    /// `∂^β` for a horizontal multi-index.
    pub fn deriv(&self, beta: [usize; 2]) -> Self {
        if beta == [0, 0] {
            return self.clone();
        }
        let g = self.grid.clone();
        self.apply_symbol(|ih| g.derivative_symbol(ih, beta))
    }

    /// First derivative along horizontal axis `axis`.
    pub fn dh(&self, axis: usize) -> Self {
        let mut b = [0, 0];
        b[axis] = 1;
        self.deriv(b)
    }

    pub fn gradient(&self) -> Vec<Self> {
        (0..self.grid.horizontal_dims()).map(|a| self.dh(a)).collect()
    }

    pub fn laplacian(&self) -> Self {
        let g = self.grid.clone();
        self.apply_symbol(|ih| {
            let k = g.wavenumber(ih);
            Complex64::new(-k * k, 0.0)
        })
    }

    /// Zero the modes outside the dealiasing band.
    pub fn dealiased(&self) -> Self {
        let g = self.grid.clone();
        self.apply_symbol(|ih| Complex64::new(if g.in_dealias_band(ih) { 1.0 } else { 0.0 }, 0.0))
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// `∫_Σ f`.
    pub fn integral(&self) -> f64 {
        self.mean() * self.grid.box_area()
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { grid: self.grid.clone(), values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    pub fn axpy(&mut self, a: f64, x: &Self) {
        for (y, v) in self.values.iter_mut().zip(&x.values) {
            *y += a * v;
        }
    }

    /// Lift to a bulk field that is constant in `z`.
    pub fn extend_constant(&self) -> BulkField {
        let mut values = Vec::with_capacity(self.grid.nz() * self.grid.nh());
        for _ in 0..self.grid.nz() {
            values.extend_from_slice(&self.values);
        }
        BulkField { grid: self.grid.clone(), values }
    }
}

impl BulkField {
    pub fn zeros(grid: &Arc<Grid>) -> Self {
        Self { grid: grid.clone(), values: vec![0.0; grid.nz() * grid.nh()] }
    }

    pub fn constant(grid: &Arc<Grid>, c: f64) -> Self {
        Self { grid: grid.clone(), values: vec![c; grid.nz() * grid.nh()] }
    }

    pub fn from_values(grid: &Arc<Grid>, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.nz() * grid.nh());
        Self { grid: grid.clone(), values }
    }

    /// Sample `f(x)`; `x` holds the horizontal coordinates then `z`.
    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(&[f64]) -> f64) -> Self {
        let h = grid.horizontal_dims();
        let nh = grid.nh();
        let mut values = Vec::with_capacity(grid.nz() * nh);
        let mut x = vec![0.0; h + 1];
        for iz in 0..grid.nz() {
            x[h] = grid.z()[iz];
            for ih in 0..nh {
                x[..h].copy_from_slice(&grid.xh(ih)[..h]);
                values.push(f(&x));
            }
        }
        Self { grid: grid.clone(), values }
    }

    /// Build from per-level Fourier coefficients, `coefs[iz * nh + ih]`.
    pub fn from_coefficients(grid: &Arc<Grid>, coefs: &[Complex64]) -> Self {
        let nh = grid.nh();
        let mut values = Vec::with_capacity(coefs.len());
        for level in coefs.chunks(nh) {
            values.extend(grid.inverse(level));
        }
        Self { grid: grid.clone(), values }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn level(&self, iz: usize) -> &[f64] {
        let nh = self.grid.nh();
        &self.values[iz * nh..(iz + 1) * nh]
    }

    pub fn level_mut(&mut self, iz: usize) -> &mut [f64] {
        let nh = self.grid.nh();
        &mut self.values[iz * nh..(iz + 1) * nh]
    }

    /// Per-level Fourier coefficients, same layout as the values.
    pub fn coefficients(&self) -> Vec<Complex64> {
        let nh = self.grid.nh();
        let mut out = Vec::with_capacity(self.values.len());
        for level in self.values.chunks(nh) {
            out.extend(self.grid.forward(level));
        }
        out
    }

    /// Restriction to the surface level `z = 0`.
    pub fn trace(&self) -> SurfaceFunction {
        SurfaceFunction { grid: self.grid.clone(), values: self.level(0).to_vec() }
    }

    /// Restriction to the bottom level `z = -b`.
    pub fn bottom_trace(&self) -> SurfaceFunction {
        SurfaceFunction { grid: self.grid.clone(), values: self.level(self.grid.nz() - 1).to_vec() }
    }

    pub fn apply_symbol(&self, m: impl Fn(usize) -> Complex64) -> Self {
        let nh = self.grid.nh();
        let mut c = self.coefficients();
        for level in c.chunks_mut(nh) {
            for (ih, v) in level.iter_mut().enumerate() {
                *v *= m(ih);
            }
        }
        Self::from_coefficients(&self.grid, &c)
    }

    /// `∂_z^order` by collocation.
    pub fn dz_n(&self, order: usize) -> Self {
        if order == 0 {
            return self.clone();
        }
        let (nz, nh) = (self.grid.nz(), self.grid.nh());
        let d = self.grid.dz_matrix(order);
        let mut out = vec![0.0; nz * nh];
        for i in 0..nz {
            let row = &mut out[i * nh..(i + 1) * nh];
            for j in 0..nz {
                let a = d[i * nz + j];
                if a == 0.0 {
                    continue;
                }
                for (o, v) in row.iter_mut().zip(&self.values[j * nh..(j + 1) * nh]) {
                    *o += a * v;
                }
            }
        }
        Self { grid: self.grid.clone(), values: out }
    }

    pub fn dz(&self) -> Self {
        self.dz_n(1)
    }

    /// Horizontal derivative `∂^β` for a horizontal multi-index.
    pub fn deriv_h(&self, beta: [usize; 2]) -> Self {
        if beta == [0, 0] {
            return self.clone();
        }
        let g = self.grid.clone();
        self.apply_symbol(|ih| g.derivative_symbol(ih, beta))
    }

    pub fn dh(&self, axis: usize) -> Self {
        let mut b = [0, 0];
        b[axis] = 1;
        self.deriv_h(b)
    }

    /// First derivative along axis `axis` of `0..d`; the last axis is vertical.
    pub fn d(&self, axis: usize) -> Self {
        if axis == self.grid.dim() - 1 {
            self.dz()
        } else {
            self.dh(axis)
        }
    }

    /// `∂^β` for a full multi-index of length `d` (last entry vertical).
    pub fn deriv(&self, beta: &[usize]) -> Self {
        let h = self.grid.horizontal_dims();
        let mut bh = [0, 0];
        bh[..h].copy_from_slice(&beta[..h]);
        self.deriv_h(bh).dz_n(beta[h])
    }

    pub fn gradient(&self) -> Vec<Self> {
        (0..self.grid.dim()).map(|a| self.d(a)).collect()
    }

    pub fn dealiased(&self) -> Self {
        let g = self.grid.clone();
        self.apply_symbol(|ih| Complex64::new(if g.in_dealias_band(ih) { 1.0 } else { 0.0 }, 0.0))
    }

    /// `∫_Ω f` over the slab.
    pub fn integral(&self) -> f64 {
        let nh = self.grid.nh() as f64;
        let area = self.grid.box_area();
        self.grid
            .z_weights()
            .iter()
            .enumerate()
            .map(|(iz, w)| w * self.level(iz).iter().sum::<f64>())
            .sum::<f64>()
            * area
            / nh
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { grid: self.grid.clone(), values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    pub fn axpy(&mut self, a: f64, x: &Self) {
        for (y, v) in self.values.iter_mut().zip(&x.values) {
            *y += a * v;
        }
    }

    pub fn recip(&self) -> Self {
        self.map(|v| 1.0 / v)
    }

    /// Multiply each level by the surface function `s`.
    pub fn mul_surface(&self, s: &SurfaceFunction) -> Self {
        let nh = self.grid.nh();
        let mut out = self.clone();
        for level in out.values.chunks_mut(nh) {
            for (v, w) in level.iter_mut().zip(&s.values) {
                *v *= w;
            }
        }
        out
    }
}

macro_rules! field_ops {
    ($t:ident) => {
        impl Add<&$t> for &$t {
            type Output = $t;
            fn add(self, rhs: &$t) -> $t {
                self.zip(rhs, |a, b| a + b)
            }
        }
        impl Sub<&$t> for &$t {
            type Output = $t;
            fn sub(self, rhs: &$t) -> $t {
                self.zip(rhs, |a, b| a - b)
            }
        }
        impl Mul<&$t> for &$t {
            type Output = $t;
            fn mul(self, rhs: &$t) -> $t {
                self.zip(rhs, |a, b| a * b)
            }
        }
        impl Add<$t> for $t {
            type Output = $t;
            fn add(mut self, rhs: $t) -> $t {
                self += &rhs;
                self
            }
        }
        impl Sub<$t> for $t {
            type Output = $t;
            fn sub(mut self, rhs: $t) -> $t {
                self -= &rhs;
                self
            }
        }
        impl Mul<$t> for $t {
            type Output = $t;
            fn mul(mut self, rhs: $t) -> $t {
                self.values.iter_mut().zip(&rhs.values).for_each(|(a, b)| *a *= b);
                self
            }
        }
        impl Add<&$t> for $t {
            type Output = $t;
            fn add(mut self, rhs: &$t) -> $t {
                self += rhs;
                self
            }
        }
        impl Sub<&$t> for $t {
            type Output = $t;
            fn sub(mut self, rhs: &$t) -> $t {
                self -= rhs;
                self
            }
        }
        impl Mul<&$t> for $t {
            type Output = $t;
            fn mul(mut self, rhs: &$t) -> $t {
                self.values.iter_mut().zip(&rhs.values).for_each(|(a, b)| *a *= b);
                self
            }
        }
        impl Add<$t> for &$t {
            type Output = $t;
            fn add(self, rhs: $t) -> $t {
                rhs + self
            }
        }
        impl Sub<$t> for &$t {
            type Output = $t;
            fn sub(self, mut rhs: $t) -> $t {
                rhs.values.iter_mut().zip(&self.values).for_each(|(b, a)| *b = a - *b);
                rhs
            }
        }
        impl Mul<$t> for &$t {
            type Output = $t;
            fn mul(self, rhs: $t) -> $t {
                rhs * self
            }
        }
        impl Mul<f64> for &$t {
            type Output = $t;
            fn mul(self, c: f64) -> $t {
                self.scale(c)
            }
        }
        impl Mul<f64> for $t {
            type Output = $t;
            fn mul(mut self, c: f64) -> $t {
                self.values.iter_mut().for_each(|a| *a *= c);
                self
            }
        }
        impl Mul<&$t> for f64 {
            type Output = $t;
            fn mul(self, f: &$t) -> $t {
                f.scale(self)
            }
        }
        impl Mul<$t> for f64 {
            type Output = $t;
            fn mul(self, f: $t) -> $t {
                f * self
            }
        }
        impl Add<f64> for &$t {
            type Output = $t;
            fn add(self, c: f64) -> $t {
                self.map(|v| v + c)
            }
        }
        impl Add<f64> for $t {
            type Output = $t;
            fn add(mut self, c: f64) -> $t {
                self.values.iter_mut().for_each(|a| *a += c);
                self
            }
        }
        impl Sub<f64> for $t {
            type Output = $t;
            fn sub(mut self, c: f64) -> $t {
                self.values.iter_mut().for_each(|a| *a -= c);
                self
            }
        }
        impl Sub<f64> for &$t {
            type Output = $t;
            fn sub(self, c: f64) -> $t {
                self.map(|v| v - c)
            }
        }
        impl Sub<&$t> for f64 {
            type Output = $t;
            fn sub(self, f: &$t) -> $t {
                f.map(|v| self - v)
            }
        }
        impl Sub<$t> for f64 {
            type Output = $t;
            fn sub(self, mut f: $t) -> $t {
                f.values.iter_mut().for_each(|a| *a = self - *a);
                f
            }
        }
        impl Neg for &$t {
            type Output = $t;
            fn neg(self) -> $t {
                self.map(|v| -v)
            }
        }
        impl Neg for $t {
            type Output = $t;
            fn neg(mut self) -> $t {
                self.values.iter_mut().for_each(|a| *a = -*a);
                self
            }
        }
        impl AddAssign<&$t> for $t {
            fn add_assign(&mut self, rhs: &$t) {
                self.values.iter_mut().zip(&rhs.values).for_each(|(a, b)| *a += b);
            }
        }
        impl SubAssign<&$t> for $t {
            fn sub_assign(&mut self, rhs: &$t) {
                self.values.iter_mut().zip(&rhs.values).for_each(|(a, b)| *a -= b);
            }
        }
        impl AddAssign<$t> for $t {
            fn add_assign(&mut self, rhs: $t) {
                *self += &rhs;
            }
        }
        impl SubAssign<$t> for $t {
            fn sub_assign(&mut self, rhs: $t) {
                *self -= &rhs;
            }
        }
    };
}

field_ops!(SurfaceFunction);
field_ops!(BulkField);

/// Pointwise dot product of two vector fields.
pub fn dot(a: &[BulkField], b: &[BulkField]) -> BulkField {
    let mut out = &a[0] * &b[0];
    for (x, y) in a.iter().zip(b).skip(1) {
        out += x * y;
    }
    out
}

/// Pointwise dot product of two surface vector fields.
pub fn dot_surface(a: &[SurfaceFunction], b: &[SurfaceFunction]) -> SurfaceFunction {
    let mut out = &a[0] * &b[0];
    for (x, y) in a.iter().zip(b).skip(1) {
        out += x * y;
    }
    out
}

/// Trace of each component.
pub fn traces(v: &[BulkField]) -> Vec<SurfaceFunction> {
    v.iter().map(BulkField::trace).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn spectral_derivatives_of_trig_products() {
        let g = Grid::new_2d(32, 2.0 * PI, 11, 1.0).unwrap();
        let f = BulkField::from_fn(&g, |x| (2.0 * x[0]).sin() * (x[1] * x[1] + x[1]));
        let fx = f.dh(0);
        let fz = f.dz();
        let fxz2 = f.deriv(&[1, 2]);
        let ex = BulkField::from_fn(&g, |x| 2.0 * (2.0 * x[0]).cos() * (x[1] * x[1] + x[1]));
        let ez = BulkField::from_fn(&g, |x| (2.0 * x[0]).sin() * (2.0 * x[1] + 1.0));
        let exz2 = BulkField::from_fn(&g, |x| 4.0 * (2.0 * x[0]).cos());
        assert!((&fx - &ex).sup() < 1e-12);
        assert!((&fz - &ez).sup() < 1e-12);
        assert!((&fxz2 - &exz2).sup() < 1e-10);
    }

    #[test]
    fn slab_integral() {
        let g = Grid::new_3d(8, 8, 2.0, 3.0, 9, 2.0).unwrap();
        let f = BulkField::from_fn(&g, |x| x[2] * x[2] + (PI * x[0]).cos());
        assert!((f.integral() - 6.0 * 8.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn operators_compose() {
        let g = Grid::new_2d(8, 1.0, 5, 1.0).unwrap();
        let a = BulkField::constant(&g, 2.0);
        let b = BulkField::constant(&g, 3.0);
        let c = &a * &b - &a + 1.0;
        assert!(c.values().iter().all(|&v| v == 5.0));
        let s = SurfaceFunction::constant(&g, 4.0);
        assert!(a.mul_surface(&s).values().iter().all(|&v| v == 8.0));
        assert!(s.extend_constant().trace().values().iter().all(|&v| v == 4.0));
    }
}
