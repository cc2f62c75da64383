//! Flattening map `Φ(x, t) = (x_h, x_d + φ(x, t))` and the derived geometry.
//!
//! `φ = b̃ η̄` with `b̃ = 1 + x_d / b` and `η̄ = Pη` the half-space Poisson
//! extension, `J = 1 + ∂_d φ`, `K = 1/J`, and `A` is the pulled-back gradient
//! matrix: identity in the horizontal block, `A_{id} = -∂_iφ K`, `A_{dd} = K`.
//! `N = (-Dη, 1)` is the non-unit outward normal on `Σ`.
//!
//! A [`Geometry`] carries a stack of time layers: layer `j` holds `∂_t^j` of
//! every quantity, built from `∂_t^j η`. Products such as `K` and `A` are
//! differentiated in time by Leibniz recursion.

use std::sync::Arc;

use num_complex::Complex64;

use crate::discretization::{BulkField, Grid, SurfaceFunction};
use crate::error::{Error, Result};

/// Minimum Jacobian accepted before the chart is declared degenerate.
pub const J_FLOOR: f64 = 0.1;

/// `∂^{β_h} ∂_z^m (Pη)`, evaluated per mode from `c_k (ik)^{β_h} |k|^m e^{|k| z}`.
pub fn poisson_derivative(eta: &SurfaceFunction, beta_h: [usize; 2], m: usize) -> BulkField {
    let g = eta.grid();
    let (nz, nh) = (g.nz(), g.nh());
    let c = eta.coefficients();
    let mut coefs = vec![Complex64::new(0.0, 0.0); nz * nh];
    for ih in 0..nh {
        if c[ih] == Complex64::new(0.0, 0.0) {
            continue;
        }
        let k = g.wavenumber(ih);
        let base = c[ih] * g.derivative_symbol(ih, beta_h) * k.powi(m as i32);
        if m > 0 && k == 0.0 {
            continue;
        }
        for iz in 0..nz {
            coefs[iz * nh + ih] = base * (k * g.z()[iz]).exp();
        }
    }
    BulkField::from_coefficients(g, &coefs)
}

/// Harmonic extension `Pη` into the slab.
pub fn poisson_extend(eta: &SurfaceFunction) -> BulkField {
    poisson_derivative(eta, [0, 0], 0)
}

/// `∂^β φ` for `φ = b̃ Pη` and a full multi-index `β` (last entry vertical).
///
/// Uses `∂_z^m (b̃ g) = b̃ ∂_z^m g + (m / b) ∂_z^{m-1} g`.
pub fn phi_derivative(eta: &SurfaceFunction, beta: &[usize]) -> BulkField {
    let g = eta.grid();
    let h = g.horizontal_dims();
    let b = g.depth();
    let mut bh = [0, 0];
    bh[..h].copy_from_slice(&beta[..h]);
    let m = beta[h];
    let btilde = BulkField::from_fn(g, |x| 1.0 + x[h] / b);
    let mut out = &btilde * &poisson_derivative(eta, bh, m);
    if m > 0 {
        out.axpy(m as f64 / b, &poisson_derivative(eta, bh, m - 1));
    }
    out
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// One time layer `∂_t^j` of the geometry.
#[derive(Clone, Debug)]
pub struct Layer {
    pub eta: SurfaceFunction,
    pub phi: BulkField,
    /// Full gradient of `∂_t^j φ`; the last entry is `∂_d`.
    pub dphi: Vec<BulkField>,
    pub j: BulkField,
    pub k: BulkField,
    /// `a[i][m]` is `∂_t^j A_{im}`.
    pub a: Vec<Vec<BulkField>>,
    /// `∂_t^j N` on `Σ`.
    pub n: Vec<SurfaceFunction>,
}

/// Geometry of the flattening map with its time-derivative stack.
#[derive(Clone, Debug)]
pub struct Geometry {
    grid: Arc<Grid>,
    layers: Vec<Layer>,
}

impl Geometry {
    /// Build the geometry of `η`; fails if `min J ≤` [`J_FLOOR`].
    pub fn new(eta: &SurfaceFunction) -> Result<Self> {
        Self::with_layers(std::slice::from_ref(eta))
    }

    /// Build from `[η, ∂_t η, ∂_t² η, ...]`.
    pub fn with_layers(etas: &[SurfaceFunction]) -> Result<Self> {
        let grid = etas[0].grid().clone();
        let mut geo = Self { grid, layers: Vec::with_capacity(etas.len()) };
        for e in etas {
            geo.push_layer(e);
        }
        let min_j = geo.layers[0].j.min();
        if !(min_j > J_FLOOR) {
            return Err(Error::DegenerateMapping { min_j });
        }
        Ok(geo)
    }

    /// Append the next time layer from `∂_t^j η`.
    pub fn push_layer(&mut self, eta_j: &SurfaceFunction) {
        let g = self.grid.clone();
        let d = g.dim();
        let h = d - 1;
        let order = self.layers.len();
        let phi = phi_derivative(eta_j, &vec![0; d]);
        let dphi: Vec<BulkField> = (0..d)
            .map(|a| {
                let mut beta = vec![0; d];
                beta[a] = 1;
                phi_derivative(eta_j, &beta)
            })
            .collect();
        let jac = if order == 0 { &dphi[h] + 1.0 } else { dphi[h].clone() };

        // K J = 1 differentiated j times
        let k = if order == 0 {
            jac.recip()
        } else {
            let k0 = &self.layers[0].k;
            let mut acc = k0 * &jac;
            for i in 1..order {
                acc += binomial(order, i) * (&self.layers[i].k * &self.layers[order - i].j);
            }
            -(k0 * &acc)
        };

        let zero = BulkField::zeros(&g);
        let mut a = vec![vec![zero.clone(); d]; d];
        for i in 0..h {
            if order == 0 {
                a[i][i] = BulkField::constant(&g, 1.0);
            }
            // A_{id} = -∂_iφ K, Leibniz in time
            let mut acc = &dphi[i] * self.k_layer_or(&k, 0, order);
            for l in 0..order {
                acc += binomial(order, l) * (&self.layers[l].dphi[i] * self.k_layer_or(&k, order - l, order));
            }
            a[i][h] = -acc;
        }
        a[h][h] = k.clone();

        let mut n: Vec<SurfaceFunction> = eta_j.gradient().into_iter().map(|f| -f).collect();
        n.push(SurfaceFunction::constant(&g, if order == 0 { 1.0 } else { 0.0 }));

        self.layers.push(Layer { eta: eta_j.clone(), phi, dphi, j: jac, k, a, n });
    }

    // K layer `idx`, where layer `current` is still under construction.
    fn k_layer_or<'a>(&'a self, k_new: &'a BulkField, idx: usize, current: usize) -> &'a BulkField {
        if idx == current {
            k_new
        } else {
            &self.layers[idx].k
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    /// Number of stored time layers.
    pub fn time_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn layer(&self, j: usize) -> &Layer {
        &self.layers[j]
    }

    pub fn eta(&self) -> &SurfaceFunction {
        &self.layers[0].eta
    }

    pub fn phi(&self) -> &BulkField {
        &self.layers[0].phi
    }

    pub fn dphi(&self, axis: usize) -> &BulkField {
        &self.layers[0].dphi[axis]
    }

    pub fn jac(&self) -> &BulkField {
        &self.layers[0].j
    }

    pub fn k(&self) -> &BulkField {
        &self.layers[0].k
    }

    pub fn a(&self, i: usize, m: usize) -> &BulkField {
        &self.layers[0].a[i][m]
    }

    pub fn normal(&self) -> &[SurfaceFunction] {
        &self.layers[0].n
    }

    /// `∂_t φ`, if a first time layer is present.
    pub fn phi_t(&self) -> Option<&BulkField> {
        self.layers.get(1).map(|l| &l.phi)
    }

    /// `∂^β` of `∂_t^layer φ`, analytic in the Fourier variable.
    pub fn phi_deriv(&self, layer: usize, beta: &[usize]) -> BulkField {
        phi_derivative(&self.layers[layer].eta, beta)
    }

    /// `∂^A_i f = A_{im} ∂_m f`.
    pub fn partial_a(&self, f: &BulkField, i: usize) -> BulkField {
        self.partial_a_from(&f.gradient(), i)
    }

    /// `∂^A_i` given a precomputed flat gradient.
    pub fn partial_a_from(&self, grad: &[BulkField], i: usize) -> BulkField {
        let d = self.dim();
        let h = d - 1;
        if i < h {
            &grad[i] + &(&self.layers[0].a[i][h] * &grad[h])
        } else {
            self.k() * &grad[h]
        }
    }

    pub fn grad_a(&self, f: &BulkField) -> Vec<BulkField> {
        let grad = f.gradient();
        (0..self.dim()).map(|i| self.partial_a_from(&grad, i)).collect()
    }

    /// `div_A u = A_{im} ∂_m u_i`.
    pub fn div_a(&self, u: &[BulkField]) -> BulkField {
        let mut out = self.partial_a(&u[0], 0);
        for (i, ui) in u.iter().enumerate().skip(1) {
            out += self.partial_a(ui, i);
        }
        out
    }

    /// `(∇_A u)_{ij} = ∂^A_j u_i`.
    pub fn grad_a_vector(&self, u: &[BulkField]) -> Vec<Vec<BulkField>> {
        u.iter().map(|ui| self.grad_a(ui)).collect()
    }

    /// `(D_A u)_{ij} = ∂^A_j u_i + ∂^A_i u_j`.
    pub fn sym_grad_a(&self, u: &[BulkField]) -> Vec<Vec<BulkField>> {
        let g = self.grad_a_vector(u);
        let d = self.dim();
        (0..d).map(|i| (0..d).map(|j| &g[i][j] + &g[j][i]).collect()).collect()
    }

    /// `S_A(p, u) = p I - D_A u`.
    pub fn stress_a(&self, p: &BulkField, u: &[BulkField]) -> Vec<Vec<BulkField>> {
        let mut s = self.sym_grad_a(u);
        for (i, row) in s.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                *e = if i == j { p - &*e } else { -&*e };
            }
        }
        s
    }

    /// `(div_A S)_i = ∂^A_j S_{ij}`.
    pub fn div_a_tensor(&self, s: &[Vec<BulkField>]) -> Vec<BulkField> {
        s.iter()
            .map(|row| {
                let mut acc = self.partial_a(&row[0], 0);
                for (j, e) in row.iter().enumerate().skip(1) {
                    acc += self.partial_a(e, j);
                }
                acc
            })
            .collect()
    }

    /// `Δ_A f = div_A ∇_A f`.
    pub fn lap_a(&self, f: &BulkField) -> BulkField {
        self.div_a(&self.grad_a(f))
    }

    /// `det ∇Φ` computed from the full matrix.
    pub fn jacobian_determinant(&self) -> BulkField {
        let d = self.dim();
        let h = d - 1;
        let l = &self.layers[0];
        // ∇Φ has identity rows for x_h and last row (Dφ, 1 + ∂_dφ)
        let row_d: Vec<BulkField> = (0..d).map(|j| if j == h { &l.dphi[h] + 1.0 } else { l.dphi[j].clone() }).collect();
        let one = BulkField::constant(&self.grid, 1.0);
        let zero = BulkField::zeros(&self.grid);
        let m = |i: usize, j: usize| -> BulkField {
            if i == h {
                row_d[j].clone()
            } else if i == j {
                one.clone()
            } else {
                zero.clone()
            }
        };
        if d == 2 {
            &m(0, 0) * &m(1, 1) - &m(0, 1) * &m(1, 0)
        } else {
            let det2 = |a: usize, b: usize, c: usize, e: usize| &m(1, a) * &m(2, b) - &m(1, c) * &m(2, e);
            &m(0, 0) * &det2(1, 2, 2, 1) - &m(0, 1) * &det2(0, 2, 2, 0) + &m(0, 2) * &det2(0, 1, 1, 0)
        }
    }

    /// Largest `|∂_j (J A_{ij})|` over `i` and the grid.
    pub fn piola_residual(&self) -> f64 {
        let d = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..d {
            let mut acc = BulkField::zeros(&self.grid);
            for j in 0..d {
                acc += (self.jac() * self.a(i, j)).d(j);
            }
            worst = worst.max(acc.sup());
        }
        worst
    }

    /// Pull back a function on the moving domain: `f(x) = F(x_h, x_d + φ(x))`.
    pub fn pullback(&self, f: impl Fn(&[f64]) -> f64) -> BulkField {
        let g = &self.grid;
        let h = g.horizontal_dims();
        let phi = self.phi().values();
        let nh = g.nh();
        let mut values = Vec::with_capacity(phi.len());
        let mut y = vec![0.0; h + 1];
        for iz in 0..g.nz() {
            for ih in 0..nh {
                y[..h].copy_from_slice(&g.xh(ih)[..h]);
                y[h] = g.z()[iz] + phi[iz * nh + ih];
                values.push(f(&y));
            }
        }
        BulkField::from_values(g, values)
    }
}
