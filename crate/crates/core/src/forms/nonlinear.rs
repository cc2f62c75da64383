//! The nonlinear terms `G¹..G⁴` that turn the geometric system into a
//! perturbation of the flat Stokes problem:
//!
//! ```text
//! ∂_t u + ∇p − Δu = G¹,   div u = G²,
//! (pI − Du)e_d = η e_d + G³  on Σ,   ∂_t η = u_d + G⁴.
//! ```

use crate::discretization::{BulkField, SurfaceFunction};
use crate::error::{Error, Result};
use crate::geometry::Geometry;

#[derive(Clone, Debug)]
pub struct NonlinearTerms {
    pub g1: Vec<BulkField>,
    /// `G^{1,1}..G^{1,5}` separately; they sum to `g1`.
    pub g1_parts: Vec<Vec<BulkField>>,
    pub g2: BulkField,
    pub g3: Vec<SurfaceFunction>,
    pub g4: SurfaceFunction,
}

impl NonlinearTerms {
    /// Largest sup norm over all components of each of the nine pieces
    /// `G^{1,1..5}, G², G³, G⁴` in that order.
    pub fn sup_terms(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self
            .g1_parts
            .iter()
            .map(|part| part.iter().map(BulkField::sup).fold(0.0, f64::max))
            .collect();
        out.push(self.g2.sup());
        out.push(self.g3.iter().map(SurfaceFunction::sup).fold(0.0, f64::max));
        out.push(self.g4.sup());
        out
    }
}

fn check_dims(geo: &Geometry, u: &[BulkField]) -> Result<()> {
    if u.len() != geo.dim() {
        return Err(Error::IncompatibleData(format!(
            "velocity has {} components, geometry is {}D",
            u.len(),
            geo.dim()
        )));
    }
    Ok(())
}

/// Assemble all nonlinear terms. Needs the `∂_t φ` layer for `G^{1,5}`.
pub fn assemble_g(geo: &Geometry, u: &[BulkField], p: &BulkField) -> Result<NonlinearTerms> {
    check_dims(geo, u)?;
    let phi_t = geo
        .phi_t()
        .ok_or_else(|| Error::InsufficientData("G^{1,5} needs the ∂_t η layer".into()))?;
    let d = geo.dim();
    let h = d - 1;
    let grads: Vec<Vec<BulkField>> = u.iter().map(BulkField::gradient).collect();
    let dz: Vec<BulkField> = grads.iter().map(|g| g[h].clone()).collect();

    let g11 = g11(geo, p);
    let g12 = g12(geo, u, &grads);
    let (g13, g14) = g13_g14(geo, u, &dz);
    let kphit = geo.k() * phi_t;
    let g15: Vec<BulkField> = dz.iter().map(|f| &kphit * f).collect();

    let g1 = (0..d)
        .map(|i| &(&(&g11[i] + &g12[i]) + &(&g13[i] + &g14[i])) + &g15[i])
        .collect();
    Ok(NonlinearTerms {
        g1,
        g1_parts: vec![g11, g12, g13, g14, g15],
        g2: g2(geo, &dz),
        g3: g3(geo, u, p)?,
        g4: g4(geo, u),
    })
}

/// `G^{1,1}_i = (δ_ij − A_ij) ∂_j p`; only the `j = d` column differs from `I`.
pub fn g11(geo: &Geometry, p: &BulkField) -> Vec<BulkField> {
    let d = geo.dim();
    let h = d - 1;
    let pz = p.dz();
    (0..d)
        .map(|i| {
            if i < h {
                -(geo.a(i, h) * &pz)
            } else {
                &(1.0 - geo.k()) * &pz
            }
        })
        .collect()
}

/// `G^{1,2}_i = −u_j A_jk ∂_k u_i`.
pub fn g12(geo: &Geometry, u: &[BulkField], grads: &[Vec<BulkField>]) -> Vec<BulkField> {
    let d = geo.dim();
    // transport velocity w_k = u_j A_jk
    let w: Vec<BulkField> = (0..d)
        .map(|k| {
            let mut acc = BulkField::zeros(geo.grid());
            for (j, uj) in u.iter().enumerate() {
                acc += uj * geo.a(j, k);
            }
            acc
        })
        .collect();
    grads
        .iter()
        .map(|gi| {
            let mut acc = BulkField::zeros(geo.grid());
            for (k, wk) in w.iter().enumerate() {
                acc -= wk * &gi[k];
            }
            acc
        })
        .collect()
}

/// `G^{1,3}` (second-order) and `G^{1,4}` (first-order) parts of `Δ_A − Δ`.
pub fn g13_g14(geo: &Geometry, u: &[BulkField], dz: &[BulkField]) -> (Vec<BulkField>, Vec<BulkField>) {
    let d = geo.dim();
    let h = d - 1;
    let k = geo.k();
    let unit = |axes: &[usize]| {
        let mut b = vec![0; d];
        for &a in axes {
            b[a] += 1;
        }
        b
    };
    let mut grad_sq = BulkField::constant(geo.grid(), 1.0);
    let mut lap_h = BulkField::zeros(geo.grid());
    let mut mixed = BulkField::zeros(geo.grid());
    for j in 0..h {
        let aj = geo.dphi(j);
        grad_sq += aj * aj;
        lap_h += geo.phi_deriv(0, &unit(&[j, j]));
        mixed += aj * &geo.phi_deriv(0, &unit(&[j, h]));
    }
    let k2 = k * k;
    let c3 = &(&k2 * &grad_sq) - 1.0;
    let djj = geo.phi_deriv(0, &unit(&[h, h]));
    let c4 = &(&(-(k * &lap_h)) + &(2.0 * (&k2 * &mixed))) - &(&(&k2 * k) * &(&grad_sq * &djj));

    let mut g13 = Vec::with_capacity(d);
    let mut g14 = Vec::with_capacity(d);
    for (ui, uz) in u.iter().zip(dz) {
        let mut t = &c3 * &uz.dz();
        for j in 0..h {
            let cross = ui.deriv(&unit(&[j, h]));
            t -= 2.0 * (&(k * geo.dphi(j)) * &cross);
        }
        g13.push(t);
        g14.push(&c4 * uz);
    }
    (g13, g14)
}

/// `G² = K Dφ·∂_d u_h + (1 − K) ∂_d u_d`.
pub fn g2(geo: &Geometry, dz: &[BulkField]) -> BulkField {
    let h = geo.dim() - 1;
    let k = geo.k();
    let mut acc = &(1.0 - k) * &dz[h];
    for j in 0..h {
        acc += &(k * geo.dphi(j)) * &dz[j];
    }
    acc
}

/// `G⁴ = −Dη·u_h` on `Σ`.
pub fn g4(geo: &Geometry, u: &[BulkField]) -> SurfaceFunction {
    let h = geo.dim() - 1;
    let deta = geo.eta().gradient();
    let mut acc = SurfaceFunction::zeros(geo.grid());
    for j in 0..h {
        acc -= &deta[j] * &u[j].trace();
    }
    acc
}

/// `G³` with the formula matched to the dimension.
pub fn g3(geo: &Geometry, u: &[BulkField], p: &BulkField) -> Result<Vec<SurfaceFunction>> {
    check_dims(geo, u)?;
    // du[i][m] = ∂_m u_i on Σ
    let du: Vec<Vec<SurfaceFunction>> = u
        .iter()
        .map(|ui| ui.gradient().iter().map(BulkField::trace).collect())
        .collect();
    let pe = &p.trace() - geo.eta();
    let k = geo.k().trace();
    let deta = geo.eta().gradient();
    match geo.dim() {
        2 => Ok(g3_two_d(&deta[0], &k, &pe, &du)),
        3 => Ok(g3_three_d(&deta[0], &deta[1], &k, &pe, &du)),
        d => Err(Error::IncompatibleData(format!("unsupported dimension {d}"))),
    }
}

type S = SurfaceFunction;

fn g3_two_d(a: &S, k: &S, pe: &S, du: &[Vec<S>]) -> Vec<S> {
    let ak = a * k;
    let km1 = k - 1.0;
    let c1 = a * &(pe - &(2.0 * (&du[0][0] - &(&ak * &du[0][1])))) + &km1 * &du[0][1] - &ak * &du[1][1];
    let c2 = a * &(&(-&du[1][0] - &(k * &du[0][1])) + &(&ak * &du[1][1])) + 2.0 * (&km1 * &du[1][1]);
    vec![c1, c2]
}

fn g3_three_d(a: &S, b: &S, k: &S, pe: &S, du: &[Vec<S>]) -> Vec<S> {
    let (ak, bk) = (a * k, b * k);
    let km1 = k - 1.0;
    let shear = &(&(-&du[0][1] - &du[1][0]) + &(&bk * &du[0][2])) + &(&ak * &du[1][2]);
    let c1 = a * &(pe - &(2.0 * (&du[0][0] - &(&ak * &du[0][2]))))
        + b * &shear
        + &km1 * &du[0][2]
        - &ak * &du[2][2];
    let c2 = a * &shear + b * &(pe - &(2.0 * (&du[1][1] - &(&bk * &du[1][2])))) + &km1 * &du[1][2]
        - &bk * &du[2][2];
    let c3 = a * &(&(-&du[2][0] - &(k * &du[0][2])) + &(&ak * &du[2][2]))
        + b * &(&(-&du[2][1] - &(k * &du[1][2])) + &(&bk * &du[2][2]))
        + 2.0 * (&km1 * &du[2][2]);
    vec![c1, c2, c3]
}

/// Divergence form `−D·((J−1)u_h) + ∂_d(Dφ·u_h)`.
///
/// By the Piola identity this equals `div u − J div_A u`, which reduces to
/// `G²` once `div_A u = 0`.
pub fn g2_flux_divergence(geo: &Geometry, u: &[BulkField]) -> BulkField {
    let h = geo.dim() - 1;
    let jm1 = geo.jac() - 1.0;
    let mut flux_d = BulkField::zeros(geo.grid());
    let mut out = BulkField::zeros(geo.grid());
    for j in 0..h {
        out -= (&jm1 * &u[j]).dh(j);
        flux_d += geo.dphi(j) * &u[j];
    }
    out + flux_d.dz()
}

/// Horizontal and vertical fluxes whose divergence is [`g2_flux_divergence`].
pub fn g2_flux_form(geo: &Geometry, u: &[BulkField]) -> (Vec<BulkField>, BulkField) {
    let h = geo.dim() - 1;
    let jm1 = geo.jac() - 1.0;
    let mut vertical = BulkField::zeros(geo.grid());
    let horizontal = (0..h)
        .map(|j| {
            vertical += geo.dphi(j) * &u[j];
            -(&jm1 * &u[j])
        })
        .collect();
    (horizontal, vertical)
}

/// `sup_Σ |(p − η) − (2 ∂_d u_d + G³_d)|`; small exactly when the normal
/// stress condition holds.
pub fn g3_vertical_residual(geo: &Geometry, u: &[BulkField], p: &BulkField) -> Result<f64> {
    let h = geo.dim() - 1;
    let g3 = g3(geo, u, p)?;
    let lhs = &p.trace() - geo.eta();
    let rhs = &(2.0 * u[h].dz().trace()) + &g3[h];
    Ok((&lhs - &rhs).sup())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::Grid;
    use std::f64::consts::PI;

    fn sample_state(d: usize) -> (Geometry, Vec<BulkField>, BulkField) {
        let g = if d == 2 {
            Grid::new_2d(32, 2.0 * PI, 17, 1.0).unwrap()
        } else {
            Grid::new_3d(16, 16, 2.0 * PI, 2.0 * PI, 13, 1.0).unwrap()
        };
        let eta = SurfaceFunction::from_fn(&g, |x| 0.1 * x[0].cos() + 0.05 * x[d - 2].sin());
        let eta_t = SurfaceFunction::from_fn(&g, |x| 0.03 * (2.0 * x[0]).sin());
        let geo = Geometry::with_layers(&[eta, eta_t]).unwrap();
        let u: Vec<BulkField> = (0..d)
            .map(|i| BulkField::from_fn(&g, move |x| ((i + 1) as f64 * x[0]).sin() * (1.0 + x[d - 1]) * x[d - 1].exp()))
            .collect();
        let p = BulkField::from_fn(&g, |x| x[0].cos() * x[d - 1] * x[d - 1]);
        (geo, u, p)
    }

    #[test]
    fn flat_geometry_leaves_only_convection() {
        let g = Grid::new_2d(16, 2.0 * PI, 9, 1.0).unwrap();
        let zero = SurfaceFunction::zeros(&g);
        let geo = Geometry::with_layers(&[zero.clone(), zero]).unwrap();
        let u = vec![BulkField::from_fn(&g, |x| x[0].sin() * x[1]), BulkField::from_fn(&g, |x| x[0].cos())];
        let p = BulkField::from_fn(&g, |x| x[0].cos() * x[1]);
        let nl = assemble_g(&geo, &u, &p).unwrap();
        for (n, part) in nl.g1_parts.iter().enumerate() {
            if n != 1 {
                assert!(part.iter().all(|f| f.sup() < 1e-14));
            }
        }
        for i in 0..2 {
            let expect = -(&(&u[0] * &u[i].dh(0)) + &(&u[1] * &u[i].dz()));
            assert!((&nl.g1_parts[1][i] - &expect).sup() < 1e-13);
        }
        assert!(nl.g2.sup() < 1e-14 && nl.g4.sup() < 1e-14);
        assert!(nl.g3.iter().all(|f| f.sup() < 1e-14));
    }

    #[test]
    fn mass_equivalence() {
        for d in [2, 3] {
            let (geo, u, _) = sample_state(d);
            let div: BulkField = (0..d).fold(BulkField::zeros(geo.grid()), |acc, i| acc + u[i].d(i));
            let dz: Vec<BulkField> = u.iter().map(BulkField::dz).collect();
            let res = &geo.div_a(&u) - &(&div - &g2(&geo, &dz));
            assert!(res.sup() < 1e-10, "d={d}: {}", res.sup());
        }
    }

    #[test]
    fn stress_equivalence_both_dimensions() {
        for d in [2, 3] {
            let (geo, u, p) = sample_state(d);
            let s = geo.stress_a(&p, &u);
            let n = geo.normal();
            let g3 = g3(&geo, &u, &p).unwrap();
            for i in 0..d {
                let mut lhs = SurfaceFunction::zeros(geo.grid());
                for j in 0..d {
                    lhs += &s[i][j].trace() * &n[j];
                }
                lhs -= geo.eta() * &n[i];
                // flat form (pI − Du)e_d − η e_d − G³
                let mut flat = -(&u[i].dz().trace() + &u[d - 1].d(i).trace());
                if i == d - 1 {
                    flat += &p.trace() - geo.eta();
                }
                flat -= &g3[i];
                assert!((&lhs - &flat).sup() < 1e-9, "d={d} i={i}: {}", (&lhs - &flat).sup());
            }
        }
    }

    #[test]
    fn flux_form_is_div_minus_weighted_div_a() {
        let (geo, u, _) = sample_state(2);
        let div = &u[0].dh(0) + &u[1].dz();
        let expect = &div - &(geo.jac() * &geo.div_a(&u));
        assert!((&g2_flux_divergence(&geo, &u) - &expect).sup() < 1e-9);
        let (hz, vt) = g2_flux_form(&geo, &u);
        assert!((&(&hz[0].dh(0) + &vt.dz()) - &g2_flux_divergence(&geo, &u)).sup() < 1e-12);
    }

    #[test]
    fn vertical_residual_is_large_off_constraint() {
        let (geo, u, p) = sample_state(2);
        assert!(g3_vertical_residual(&geo, &u, &p).unwrap() > 1e-2);
    }

    #[test]
    fn missing_time_layer_is_reported() {
        let (geo, u, p) = sample_state(2);
        let single = Geometry::new(geo.eta()).unwrap();
        assert!(matches!(assemble_g(&single, &u, &p), Err(Error::InsufficientData(_))));
        assert!(matches!(assemble_g(&geo, &u[..1], &p), Err(Error::IncompatibleData(_))));
    }
}
