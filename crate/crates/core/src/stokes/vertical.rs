//! Vertical collocation used by the mode solvers.
//!
//! Velocity lives on all `n` Gauss–Lobatto nodes, pressure on the `n − 2`
//! interior nodes as a polynomial of degree `n − 3`. This staggering removes
//! the spurious pressure modes of equal-order collocation.

use crate::discretization::Chebyshev;

/// Collocation matrices on `[-b, 0]`, node 0 at the surface.
#[derive(Debug, Clone)]
pub struct Vertical {
    n: usize,
    depth: f64,
    z: Vec<f64>,
    weights: Vec<f64>,
    d1: Vec<f64>,
    d2: Vec<f64>,
    /// interior pressure values → values at all nodes, `n × (n−2)`
    p_interp: Vec<f64>,
    /// interior pressure values → `∂_z p` at all nodes, `n × (n−2)`
    p_deriv: Vec<f64>,
}

impl Vertical {
    pub fn new(n: usize, depth: f64) -> Self {
        assert!(n >= 5, "mode solver needs at least five vertical nodes");
        let cheb = Chebyshev::new(n);
        let scale = 2.0 / depth;
        let z: Vec<f64> = cheb.nodes().iter().map(|s| 0.5 * depth * (s - 1.0)).collect();
        let weights: Vec<f64> = cheb.weights().iter().map(|w| 0.5 * depth * w).collect();
        let d1: Vec<f64> = cheb.diff_matrix(1).into_iter().map(|v| v * scale).collect();
        let d2: Vec<f64> = cheb.diff_matrix(2).into_iter().map(|v| v * scale * scale).collect();

        let m = n - 2;
        let xi: Vec<f64> = z[1..n - 1].to_vec();
        let bw = barycentric_weights(&xi);
        let mut p_interp = vec![0.0; n * m];
        for (i, &x) in z.iter().enumerate() {
            p_interp[i * m..(i + 1) * m].copy_from_slice(&lagrange_row(&xi, &bw, x));
        }
        // derivative on the interior nodes, then lift to all nodes
        let mut dint = vec![0.0; m * m];
        for i in 0..m {
            let mut diag = 0.0;
            for j in 0..m {
                if i != j {
                    let v = (bw[j] / bw[i]) / (xi[i] - xi[j]);
                    dint[i * m + j] = v;
                    diag -= v;
                }
            }
            dint[i * m + i] = diag;
        }
        let mut p_deriv = vec![0.0; n * m];
        for i in 0..n {
            for j in 0..m {
                p_deriv[i * m + j] = (0..m).map(|l| p_interp[i * m + l] * dint[l * m + j]).sum();
            }
        }
        Self { n, depth, z, weights, d1, d2, p_interp, p_deriv }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn depth(&self) -> f64 {
        self.depth
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    /// Clenshaw–Curtis weights for `∫_{-b}^0 dz`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn d1(&self, i: usize, j: usize) -> f64 {
        self.d1[i * self.n + j]
    }

    pub fn d2(&self, i: usize, j: usize) -> f64 {
        self.d2[i * self.n + j]
    }

    /// Weight of interior pressure value `j` in `p(z_i)`.
    pub fn p_interp(&self, i: usize, j: usize) -> f64 {
        self.p_interp[i * (self.n - 2) + j]
    }

    /// Weight of interior pressure value `j` in `∂_z p(z_i)`.
    pub fn p_deriv(&self, i: usize, j: usize) -> f64 {
        self.p_deriv[i * (self.n - 2) + j]
    }

    /// Apply `∂_z^order` (order 1 or 2) to nodal values.
    pub fn apply<T>(&self, order: usize, v: &[T]) -> Vec<T>
    where
        T: Copy + std::ops::Mul<f64, Output = T> + std::iter::Sum<T>,
    {
        let m = match order {
            1 => &self.d1,
            2 => &self.d2,
            _ => panic!("vertical derivative order {order} not tabulated"),
        };
        (0..self.n).map(|i| (0..self.n).map(|j| v[j] * m[i * self.n + j]).sum()).collect()
    }

    /// Pressure at all nodes from its interior values.
    pub fn pressure_values<T>(&self, q: &[T]) -> Vec<T>
    where
        T: Copy + std::ops::Mul<f64, Output = T> + std::iter::Sum<T>,
    {
        let m = self.n - 2;
        (0..self.n).map(|i| (0..m).map(|j| q[j] * self.p_interp[i * m + j]).sum()).collect()
    }

    pub fn integrate<T>(&self, v: &[T]) -> T
    where
        T: Copy + std::ops::Mul<f64, Output = T> + std::iter::Sum<T>,
    {
        v.iter().zip(&self.weights).map(|(&a, &w)| a * w).sum()
    }
}

fn barycentric_weights(x: &[f64]) -> Vec<f64> {
    let m = x.len();
    let mut w: Vec<f64> = (0..m)
        .map(|j| 1.0 / (0..m).filter(|&l| l != j).map(|l| x[j] - x[l]).product::<f64>())
        .collect();
    let s = w.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    w.iter_mut().for_each(|v| *v /= s);
    w
}

fn lagrange_row(x: &[f64], w: &[f64], t: f64) -> Vec<f64> {
    if let Some(j) = x.iter().position(|&xj| (t - xj).abs() < 1e-14) {
        let mut r = vec![0.0; x.len()];
        r[j] = 1.0;
        return r;
    }
    let terms: Vec<f64> = x.iter().zip(w).map(|(&xj, &wj)| wj / (t - xj)).collect();
    let s: f64 = terms.iter().sum();
    terms.into_iter().map(|v| v / s).collect()
}
