//! Pointwise functionals `𝔎`, `𝔎̄`, `𝒦` of a velocity field.
//!
//! `C^k` norms are the largest of the sups of `|∇^j f|`, `j ≤ k`. On `Σ` the
//! derivatives in `C^k(Σ)` are tangential, i.e. horizontal. Tensor
//! magnitudes sum each multi-index once. With these conventions
//! `𝔎̄ ≤ 𝒦 ≤ 𝔎` holds exactly.

use serde::Serialize;

use crate::discretization::norms::multi_indices;
use crate::discretization::BulkField;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Pointwise {
    /// `‖u‖²_{C¹(Ω̄)} + |∇²u|²_{C¹(Σ)}`
    pub k_frak: f64,
    /// `|∇u|²_{C¹(Σ)}`
    pub k_bar: f64,
    /// `‖u‖²_{C¹(Ω̄)} + |D∇u|²_{C(Σ)}`
    pub k_cal: f64,
    pub sup_u: f64,
    pub sup_grad_u: f64,
}

/// `|∂^γ ∇^j u|` summed over components and the multi-indices of order `j`
/// accepted by `keep`, with `γ` horizontal of order `extra`.
fn magnitude(u: &[BulkField], j: usize, extra: usize, keep: impl Fn(&[usize]) -> bool) -> BulkField {
    let g = u[0].grid();
    let d = g.dim();
    let mut acc = BulkField::zeros(g);
    let outer: Vec<Vec<usize>> = multi_indices(d - 1, extra)
        .into_iter()
        .map(|mut a| {
            a.push(0);
            a
        })
        .collect();
    for gamma in &outer {
        for beta in multi_indices(d, j) {
            if !keep(&beta) {
                continue;
            }
            let total: Vec<usize> = gamma.iter().zip(&beta).map(|(a, b)| a + b).collect();
            for c in u {
                let df = c.deriv(&total);
                acc += &df * &df;
            }
        }
    }
    acc.map(f64::sqrt)
}

pub fn pointwise_functionals(u: &[BulkField]) -> Pointwise {
    let d = u[0].grid().dim();
    let any = |_: &[usize]| true;
    let sup_u = magnitude(u, 0, 0, any).sup();
    let grad = magnitude(u, 1, 0, any);
    let sup_grad_u = grad.sup();
    let c1 = sup_u.max(sup_grad_u);

    let s_grad = grad.trace().sup();
    // |D∇u| keeps the second-order indices with a horizontal part
    let s_dgrad = magnitude(u, 2, 0, |b| b[d - 1] < 2).trace().sup();
    let s_hess = magnitude(u, 2, 0, any).trace().sup();
    let s_dhess = magnitude(u, 2, 1, any).trace().sup();

    let k_bar = s_grad.max(s_dgrad).powi(2);
    let k_cal = c1 * c1 + s_dgrad * s_dgrad;
    let k_frak = c1 * c1 + s_hess.max(s_dhess).powi(2);
    Pointwise { k_frak, k_bar, k_cal, sup_u, sup_grad_u }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::Grid;

    #[test]
    fn zero_field_gives_zero() {
        let g = Grid::new_2d(8, 6.0, 7, 1.0).unwrap();
        let p = pointwise_functionals(&[BulkField::zeros(&g), BulkField::zeros(&g)]);
        assert_eq!((p.k_frak, p.k_bar, p.k_cal), (0.0, 0.0, 0.0));
    }

    #[test]
    fn shear_flow_values() {
        // u = (z², 0): ∇u = 2z, ∇²u = 2, third derivatives vanish
        let g = Grid::new_2d(8, 6.0, 9, 1.0).unwrap();
        let u = [BulkField::from_fn(&g, |x| x[1] * x[1]), BulkField::zeros(&g)];
        let p = pointwise_functionals(&u);
        assert!((p.sup_u - 1.0).abs() < 1e-12);
        assert!((p.sup_grad_u - 2.0).abs() < 1e-11);
        // on Σ: |∇u| = 0, |D∇u| = 0, |∇²u| = 2
        assert!(p.k_bar < 1e-20);
        assert!((p.k_cal - 4.0).abs() < 1e-10);
        assert!((p.k_frak - 8.0).abs() < 1e-9);
    }
}
