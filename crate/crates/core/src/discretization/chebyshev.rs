//! Chebyshev–Gauss–Lobatto collocation on `[-1, 1]`.
//!
//! Nodes are ordered `s_j = cos(πj/(n-1))`, so index 0 is `s = 1`.

/// Collocation data for one vertical resolution.
#[derive(Debug, Clone)]
pub struct Chebyshev {
    n: usize,
    nodes: Vec<f64>,
    to_coef: Vec<f64>,
    from_coef: Vec<f64>,
    weights: Vec<f64>,
}

impl Chebyshev {
    pub fn new(n: usize) -> Self {
        assert!(n >= 3, "need at least three Chebyshev nodes");
        let m = (n - 1) as f64;
        let nodes: Vec<f64> = (0..n)
            .map(|j| (std::f64::consts::PI * j as f64 / m).cos())
            .collect();

        let mut from_coef = vec![0.0; n * n];
        for j in 0..n {
            for k in 0..n {
                from_coef[j * n + k] =
                    (std::f64::consts::PI * (j * k) as f64 / m).cos();
            }
        }
        let edge = |i: usize| if i == 0 || i == n - 1 { 2.0 } else { 1.0 };
        let mut to_coef = vec![0.0; n * n];
        for k in 0..n {
            for j in 0..n {
                to_coef[k * n + j] = 2.0 / (m * edge(k) * edge(j)) * from_coef[j * n + k];
            }
        }

        // integrate the interpolant exactly
        let mut weights = vec![0.0; n];
        for k in (0..n).step_by(2) {
            let int_tk = 2.0 / (1.0 - (k * k) as f64);
            for j in 0..n {
                weights[j] += to_coef[k * n + j] * int_tk;
            }
        }

        Self { n, nodes, to_coef, from_coef, weights }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Clenshaw–Curtis weights on `[-1, 1]`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn coefficients(&self, values: &[f64]) -> Vec<f64> {
        matvec(&self.to_coef, values, self.n)
    }

    pub fn values(&self, coefs: &[f64]) -> Vec<f64> {
        matvec(&self.from_coef, coefs, self.n)
    }

    /// Coefficients of `d/ds` of the series with coefficients `c`.
    pub fn derivative_coefficients(c: &[f64]) -> Vec<f64> {
        let n = c.len();
        let mut d = vec![0.0; n + 1];
        for k in (1..n).rev() {
            d[k - 1] = d[k + 1] + 2.0 * k as f64 * c[k];
        }
        d[0] *= 0.5;
        d.truncate(n);
        d
    }

    /// Evaluate a Chebyshev series at `s` by Clenshaw recurrence.
    pub fn evaluate(c: &[f64], s: f64) -> f64 {
        let (mut b1, mut b2) = (0.0, 0.0);
        for &ck in c.iter().skip(1).rev() {
            let b0 = ck + 2.0 * s * b1 - b2;
            b2 = b1;
            b1 = b0;
        }
        c.first().copied().unwrap_or(0.0) + s * b1 - b2
    }

    /// Dense matrix of `d^order/ds^order` acting on nodal values, row-major.
    pub fn diff_matrix(&self, order: usize) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n * n];
        for col in 0..n {
            let mut c: Vec<f64> = (0..n).map(|k| self.to_coef[k * n + col]).collect();
            for _ in 0..order {
                c = Self::derivative_coefficients(&c);
            }
            let v = self.values(&c);
            for row in 0..n {
                out[row * n + col] = v[row];
            }
        }
        if order > 0 {
            // constants differentiate to exactly zero
            for row in 0..n {
                let off: f64 = (0..n).filter(|&c| c != row).map(|c| out[row * n + c]).sum();
                out[row * n + row] = -off;
            }
        }
        out
    }
}

fn matvec(a: &[f64], x: &[f64], n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| a[i * n..(i + 1) * n].iter().zip(x).map(|(a, b)| a * b).sum())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_values_coefficients() {
        let ch = Chebyshev::new(17);
        let f: Vec<f64> = ch.nodes().iter().map(|&s| (2.0 * s).exp()).collect();
        let back = ch.values(&ch.coefficients(&f));
        for (a, b) in f.iter().zip(&back) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn derivative_exact_on_polynomials() {
        let ch = Chebyshev::new(9);
        let d1 = ch.diff_matrix(1);
        let d2 = ch.diff_matrix(2);
        let f: Vec<f64> = ch.nodes().iter().map(|&s| s.powi(8) - 3.0 * s.powi(3)).collect();
        let n = ch.len();
        for (i, &s) in ch.nodes().iter().enumerate() {
            let g1: f64 = (0..n).map(|j| d1[i * n + j] * f[j]).sum();
            let g2: f64 = (0..n).map(|j| d2[i * n + j] * f[j]).sum();
            assert!((g1 - (8.0 * s.powi(7) - 9.0 * s * s)).abs() < 1e-11);
            assert!((g2 - (56.0 * s.powi(6) - 18.0 * s)).abs() < 1e-10);
        }
    }

    #[test]
    fn clenshaw_curtis_weights() {
        let ch = Chebyshev::new(11);
        let total: f64 = ch.weights().iter().sum();
        assert!((total - 2.0).abs() < 1e-14);
        let x4: f64 = ch.weights().iter().zip(ch.nodes()).map(|(w, s)| w * s.powi(4)).sum();
        assert!((x4 - 0.4).abs() < 1e-14);
    }

    #[test]
    fn clenshaw_matches_nodal_values() {
        let ch = Chebyshev::new(13);
        let f: Vec<f64> = ch.nodes().iter().map(|&s| (s + 0.3).sin()).collect();
        let c = ch.coefficients(&f);
        assert!((Chebyshev::evaluate(&c, 0.123) - (0.423f64).sin()).abs() < 1e-12);
    }
}
