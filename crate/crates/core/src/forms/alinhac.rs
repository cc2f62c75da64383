//! Alinhac good unknowns for horizontal derivatives.
//!
//! Differentiating `∂^A_i f` loses the top-order term `∂^A_d f ∂^α φ`. The
//! good unknown `∂^α f − ∂^A_d f ∂^α φ` absorbs it and leaves the commutator
//! `C^α_i(f)`, which only involves lower derivatives of `φ`:
//!
//! ```text
//! ∂^α ∂^A_i f = ∂^A_i(∂^α f − ∂^A_d f ∂^α φ) + ∂^A_d ∂^A_i f ∂^α φ + C^α_i(f).
//! ```

use crate::discretization::{dot_surface, BulkField, SurfaceFunction};
use crate::error::{Error, Result};
use crate::geometry::Geometry;

use super::{commutator, first_unit, minus, order, sym_commutator, HIndex};

/// Highest horizontal order accepted for the commutator calculus.
pub const MAX_ALPHA: usize = 6;

fn full_index(d: usize, alpha: HIndex, vertical: usize) -> Vec<usize> {
    let mut b = vec![0; d];
    b[..d - 1].copy_from_slice(&alpha[..d - 1]);
    b[d - 1] = vertical;
    b
}

/// Precomputed pieces of `C^α_i` that do not depend on the differentiated field.
pub struct Alinhac<'g> {
    geo: &'g Geometry,
    alpha: HIndex,
    /// `∂^α φ` and `∂_d ∂^α φ`.
    phi_alpha: BulkField,
    /// `[∂^{α−α'}, K²] ∂^{α'} J`.
    k_sq_term: BulkField,
    /// `[∂^α, ∂_iφ, K]` for horizontal `i`.
    phi_k: Vec<BulkField>,
    /// `∂_iφ K`.
    g: Vec<BulkField>,
}

impl<'g> Alinhac<'g> {
    pub fn new(geo: &'g Geometry, alpha: HIndex) -> Result<Self> {
        let d = geo.dim();
        let n = order(alpha);
        if n == 0 || n > MAX_ALPHA || (d == 2 && alpha[1] != 0) {
            return Err(Error::IncompatibleData(format!("unsupported horizontal multi-index {alpha:?}")));
        }
        let k = geo.k();
        let a1 = first_unit(alpha);
        let j_a1 = geo.phi_deriv(0, &full_index(d, a1, 1));
        let k_sq_term = commutator(minus(alpha, a1), &(k * k), &j_a1);
        let phi_k = (0..d - 1).map(|i| sym_commutator(alpha, geo.dphi(i), k)).collect();
        let g = (0..d - 1).map(|i| geo.dphi(i) * k).collect();
        Ok(Self { geo, alpha, phi_alpha: geo.phi_deriv(0, &full_index(d, alpha, 0)), k_sq_term, phi_k, g })
    }

    pub fn alpha(&self) -> HIndex {
        self.alpha
    }

    pub fn phi_alpha(&self) -> &BulkField {
        &self.phi_alpha
    }

    /// `C^α_i(f)`.
    pub fn commutator(&self, f: &BulkField, i: usize) -> BulkField {
        let h = self.geo.dim() - 1;
        let fz = f.dz();
        if i < h {
            let mut c = -sym_commutator(self.alpha, &self.g[i], &fz);
            c -= &fz * &self.phi_k[i];
            c += &(&fz * self.geo.dphi(i)) * &self.k_sq_term;
            c
        } else {
            sym_commutator(self.alpha, self.geo.k(), &fz) - &fz * &self.k_sq_term
        }
    }

    /// `∂^α f − ∂^A_d f ∂^α φ`.
    pub fn good(&self, f: &BulkField) -> BulkField {
        f.deriv_h(self.alpha) - &(self.geo.k() * &f.dz()) * &self.phi_alpha
    }
}

/// `C^α_i(f)`; `i = d` uses the vertical form.
pub fn alinhac_commutator(geo: &Geometry, f: &BulkField, alpha: HIndex, i: usize) -> Result<BulkField> {
    Ok(Alinhac::new(geo, alpha)?.commutator(f, i))
}

/// Residual of the commutation identity and the largest term magnitude.
pub fn com122_residual(geo: &Geometry, f: &BulkField, alpha: HIndex, i: usize) -> Result<(f64, f64)> {
    let al = Alinhac::new(geo, alpha)?;
    let h = geo.dim() - 1;
    let lhs = geo.partial_a(f, i).deriv_h(alpha);
    let t1 = geo.partial_a(&al.good(f), i);
    let t2 = &geo.partial_a(&geo.partial_a(f, i), h) * al.phi_alpha();
    let t3 = al.commutator(f, i);
    let scale = [lhs.sup(), t1.sup(), t2.sup(), t3.sup()].into_iter().fold(0.0, f64::max);
    Ok(((&lhs - &(&(&t1 + &t2) + &t3)).sup(), scale))
}

/// `∂^α ∂^A_i f − ∂^A_i ∂^α f`, which keeps a top-order `∂^α φ` term.
pub fn naive_commutator(geo: &Geometry, f: &BulkField, alpha: HIndex, i: usize) -> BulkField {
    geo.partial_a(f, i).deriv_h(alpha) - geo.partial_a(&f.deriv_h(alpha), i)
}

/// Good unknowns and the boundary/divergence remainders for one `α`.
#[derive(Clone, Debug)]
pub struct GoodUnknowns {
    pub alpha: HIndex,
    pub u: Vec<BulkField>,
    pub p: BulkField,
    /// `−Σ_i C^α_i(u_i)`.
    pub q2: BulkField,
    pub q3: Vec<SurfaceFunction>,
    pub q4: SurfaceFunction,
    /// `E_ij = C^α_i(u_j) + C^α_j(u_i)`.
    pub e: Vec<Vec<BulkField>>,
    /// `Π = I − N⊗N` with the non-unit normal.
    pub projector: Vec<Vec<SurfaceFunction>>,
}

/// Good unknowns `U^α, P^α` with `Q², Q³, Q⁴`.
///
/// `Q³` is defined so that `S_A(P,U)N − ∂^αη N = Q³` whenever
/// `S_A(p,u)N = ηN`, and `Q⁴` so that `∂^α(u·N) = U·N + Q⁴`.
pub fn good_unknowns(geo: &Geometry, u: &[BulkField], p: &BulkField, alpha: HIndex) -> Result<GoodUnknowns> {
    let al = Alinhac::new(geo, alpha)?;
    let d = geo.dim();
    let h = d - 1;
    let grid = geo.grid();
    let gu: Vec<BulkField> = u.iter().map(|f| al.good(f)).collect();
    let gp = al.good(p);

    let mut q2 = BulkField::zeros(grid);
    for (i, ui) in u.iter().enumerate() {
        q2 -= al.commutator(ui, i);
    }
    // C^α_i(u_j) for all pairs
    let c: Vec<Vec<BulkField>> = (0..d).map(|i| (0..d).map(|j| al.commutator(&u[j], i)).collect()).collect();
    let e: Vec<Vec<BulkField>> = (0..d).map(|i| (0..d).map(|j| &c[i][j] + &c[j][i]).collect()).collect();

    let n = geo.normal();
    let eta_a = geo.eta().deriv(alpha);
    let n_a: Vec<SurfaceFunction> = (0..d)
        .map(|j| if j < h { -geo.eta().dh(j).deriv(alpha) } else { SurfaceFunction::zeros(grid) })
        .collect();

    // M = D_A u − (p − η) I on Σ
    let da = geo.sym_grad_a(u);
    let pe = &p.trace() - geo.eta();
    let m: Vec<Vec<SurfaceFunction>> = (0..d)
        .map(|i| {
            (0..d)
                .map(|j| {
                    let t = da[i][j].trace();
                    if i == j {
                        &t - &pe
                    } else {
                        t
                    }
                })
                .collect()
        })
        .collect();
    let dda: Vec<Vec<SurfaceFunction>> =
        da.iter().map(|row| row.iter().map(|e| geo.partial_a(e, h).trace()).collect()).collect();
    let pd = geo.partial_a(p, h).trace();
    let q3 = (0..d)
        .map(|i| {
            let mut acc = &(-&pd * &eta_a) * &n[i];
            for j in 0..d {
                acc += &(&dda[i][j] * &n[j]) * &eta_a;
                acc += &e[i][j].trace() * &n[j];
                acc += &m[i][j] * &n_a[j];
                acc += sym_commutator(alpha, &m[i][j], &n[j]);
            }
            acc
        })
        .collect();

    let ut = crate::discretization::traces(u);
    let ud: Vec<SurfaceFunction> = u.iter().map(|f| geo.partial_a(f, h).trace()).collect();
    let mut q4 = &dot_surface(&ud, n) * &eta_a;
    for j in 0..h {
        q4 -= &ut[j] * &eta_a.dh(j);
        q4 -= sym_commutator(alpha, &ut[j], &geo.eta().dh(j));
    }

    let projector = (0..d)
        .map(|i| {
            (0..d)
                .map(|j| {
                    let nn = &n[i] * &n[j];
                    if i == j {
                        1.0 - &nn
                    } else {
                        -nn
                    }
                })
                .collect()
        })
        .collect();

    Ok(GoodUnknowns { alpha, u: gu, p: gp, q2, q3, q4, e, projector })
}

/// Residual of `∂^α(div_A u) = div_A U + ∂^A_d(div_A u) ∂^α φ − Q²`.
pub fn div1_residual(geo: &Geometry, u: &[BulkField], p: &BulkField, alpha: HIndex) -> Result<(f64, f64)> {
    let gu = good_unknowns(geo, u, p, alpha)?;
    let h = geo.dim() - 1;
    let diva = geo.div_a(u);
    let lhs = diva.deriv_h(alpha);
    let t1 = geo.div_a(&gu.u);
    let t2 = &geo.partial_a(&diva, h) * &geo.phi_deriv(0, &full_index(geo.dim(), alpha, 0));
    let scale = [lhs.sup(), t1.sup(), t2.sup(), gu.q2.sup()].into_iter().fold(0.0, f64::max);
    Ok(((&lhs - &(&(&t1 + &t2) - &gu.q2)).sup(), scale))
}

/// Residual of `∂^α(M N) = −(S_A(P,U)N − ∂^αη N) + Q³` with
/// `M = D_A u − (p − η)I`, valid for any state.
pub fn boundary_residual(geo: &Geometry, u: &[BulkField], p: &BulkField, alpha: HIndex) -> Result<(f64, f64)> {
    let gu = good_unknowns(geo, u, p, alpha)?;
    let d = geo.dim();
    let n = geo.normal();
    let da = geo.sym_grad_a(u);
    let s_good = geo.stress_a(&gu.p, &gu.u);
    let pe = &p.trace() - geo.eta();
    let eta_a = geo.eta().deriv(alpha);
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for i in 0..d {
        let mut mn = -(&pe * &n[i]);
        let mut sn = -(&eta_a * &n[i]);
        for j in 0..d {
            mn += &da[i][j].trace() * &n[j];
            sn += &s_good[i][j].trace() * &n[j];
        }
        let lhs = mn.deriv(alpha);
        let rhs = &gu.q3[i] - &sn;
        worst = worst.max((&lhs - &rhs).sup());
        scale = scale.max(lhs.sup()).max(sn.sup()).max(gu.q3[i].sup());
    }
    Ok((worst, scale))
}

/// Residual of `∂^α(u·N) = U·N + Q⁴` on `Σ`.
pub fn kinematic_residual(geo: &Geometry, u: &[BulkField], p: &BulkField, alpha: HIndex) -> Result<(f64, f64)> {
    let gu = good_unknowns(geo, u, p, alpha)?;
    let n = geo.normal();
    let un = dot_surface(&crate::discretization::traces(u), n);
    let lhs = un.deriv(alpha);
    let un_good = dot_surface(&crate::discretization::traces(&gu.u), n);
    let scale = lhs.sup().max(un_good.sup()).max(gu.q4.sup());
    Ok(((&lhs - &(&un_good + &gu.q4)).sup(), scale))
}

/// Momentum remainder `Q¹`, needing the `∂_t η` geometry layer.
///
/// With `T = ∂^A_t + u·∇_A` and `R = T u + ∇_A p − div_A D_A u`,
/// `∂^α R − ∂^A_d R ∂^α φ = T U + ∇_A P − div_A D_A U − Q¹`.
pub fn q1_term(geo: &Geometry, u: &[BulkField], p: &BulkField, alpha: HIndex) -> Result<Vec<BulkField>> {
    let al = Alinhac::new(geo, alpha)?;
    let d = geo.dim();
    let h = d - 1;
    let grid = geo.grid();
    let phi_t = geo
        .phi_t()
        .ok_or_else(|| Error::InsufficientData("Q¹ needs the ∂_t η layer".into()))?;
    let k = geo.k();
    let phi_a = al.phi_alpha();

    // W = u·N − φ_t with N = (−Dφ, 1) in the bulk, U_d = K W
    let mut w = &u[h] - phi_t;
    for j in 0..h {
        w -= &u[j] * geo.dphi(j);
    }
    let ud = k * &w;

    let grads: Vec<Vec<BulkField>> = u.iter().map(BulkField::gradient).collect();
    let da = geo.sym_grad_a(u);
    let mut q1 = Vec::with_capacity(d);
    for i in 0..d {
        let uz = &grads[i][h];
        // C(T)
        let mut ct = BulkField::zeros(grid);
        for j in 0..h {
            ct += commutator(alpha, &u[j], &grads[i][j]);
        }
        ct += sym_commutator(alpha, &ud, uz);
        ct += &sym_commutator(alpha, &w, k) * uz;
        let mut un_comm = commutator(alpha, &u[h], &BulkField::constant(grid, 1.0));
        for j in 0..h {
            un_comm -= commutator(alpha, &u[j], geo.dphi(j));
        }
        ct += &(k * uz) * &un_comm;
        ct -= &(&w * uz) * &al.k_sq_term;

        // (∂^A_d u · ∇_A) u_i ∂^α φ
        let mut conv = BulkField::zeros(grid);
        for j in 0..d {
            conv += &geo.partial_a(&u[j], h) * &geo.partial_a_from(&grads[i], j);
        }

        let mut q = &conv * phi_a - &ct - al.commutator(p, i);
        for j in 0..d {
            q += al.commutator(&da[i][j], j);
            let e_ij = &al.commutator(&u[j], i) + &al.commutator(&u[i], j);
            q += geo.partial_a(&e_ij, j);
        }
        q1.push(q);
    }
    Ok(q1)
}

/// Geometric momentum residual `∂_t u − Kφ_t ∂_d u + u·∇_A u + ∇_A p − div_A D_A u`.
pub fn momentum_residual(geo: &Geometry, u: &[BulkField], u_t: &[BulkField], p: &BulkField) -> Result<Vec<BulkField>> {
    let phi_t = geo
        .phi_t()
        .ok_or_else(|| Error::InsufficientData("momentum residual needs the ∂_t η layer".into()))?;
    let d = geo.dim();
    let kphit = geo.k() * phi_t;
    let visc = geo.div_a_tensor(&geo.sym_grad_a(u));
    let gp = geo.grad_a(p);
    Ok((0..d)
        .map(|i| {
            let ga = geo.grad_a(&u[i]);
            let mut r = &u_t[i] - &(&kphit * &u[i].dz());
            for j in 0..d {
                r += &u[j] * &ga[j];
            }
            &(r + &gp[i]) - &visc[i]
        })
        .collect())
}

/// Residual of the differentiated momentum identity and its scale.
pub fn q1_residual(geo: &Geometry, u: &[BulkField], u_t: &[BulkField], p: &BulkField, alpha: HIndex) -> Result<(f64, f64)> {
    let al = Alinhac::new(geo, alpha)?;
    let d = geo.dim();
    let h = d - 1;
    let k = geo.k();
    let phi_t = geo.phi_t().ok_or_else(|| Error::InsufficientData("needs the ∂_t η layer".into()))?;
    let k_t = &geo.layer(1).k;
    let phi_a = al.phi_alpha();
    let phi_a_t = geo.phi_deriv(1, &full_index(d, alpha, 0));
    let r = momentum_residual(geo, u, u_t, p)?;
    let q1 = q1_term(geo, u, p, alpha)?;
    let gu: Vec<BulkField> = u.iter().map(|f| al.good(f)).collect();
    let gp = al.good(p);
    let kphit = k * phi_t;
    let visc = geo.div_a_tensor(&geo.sym_grad_a(&gu));
    let grad_p = geo.grad_a(&gp);
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for i in 0..d {
        let uz = u[i].dz();
        // ∂_t U
        let du_t = &(&u_t[i].deriv_h(alpha) - &(&(&(k_t * &uz) + &(k * &u_t[i].dz())) * phi_a)) - &(&(k * &uz) * &phi_a_t);
        let ga = geo.grad_a(&gu[i]);
        let mut lhs = &du_t - &(&kphit * &gu[i].dz());
        for j in 0..d {
            lhs += &u[j] * &ga[j];
        }
        lhs = &(&(lhs + &grad_p[i]) - &visc[i]) - &q1[i];
        let rhs = &r[i].deriv_h(alpha) - &(&geo.partial_a(&r[i], h) * phi_a);
        worst = worst.max((&lhs - &rhs).sup());
        scale = scale.max(q1[i].sup()).max(visc[i].sup()).max(du_t.sup());
    }
    Ok((worst, scale))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::Grid;
    use std::f64::consts::PI;

    fn state() -> (Geometry, Vec<BulkField>, Vec<BulkField>, BulkField) {
        let g = Grid::new_2d(64, 2.0 * PI, 21, 1.0).unwrap();
        let eta = SurfaceFunction::from_fn(&g, |x| 0.1 * x[0].cos() + 0.04 * (2.0 * x[0]).sin());
        let eta_t = SurfaceFunction::from_fn(&g, |x| 0.05 * (3.0 * x[0]).cos());
        let geo = Geometry::with_layers(&[eta, eta_t]).unwrap();
        let u = vec![
            BulkField::from_fn(&g, |x| (x[0]).sin() * (1.0 + x[1]) * (0.5 * x[1]).exp()),
            BulkField::from_fn(&g, |x| (2.0 * x[0]).cos() * (1.0 + x[1]).powi(2)),
        ];
        let u_t = vec![
            BulkField::from_fn(&g, |x| (2.0 * x[0]).cos() * (1.0 + x[1]) * x[1]),
            BulkField::from_fn(&g, |x| (x[0]).sin() * (1.0 + x[1])),
        ];
        let p = BulkField::from_fn(&g, |x| (x[0]).cos() * (x[1] + 0.3).powi(2));
        (geo, u, u_t, p)
    }

    #[test]
    fn flat_commutator_vanishes() {
        let g = Grid::new_2d(16, 2.0 * PI, 9, 1.0).unwrap();
        let geo = Geometry::new(&SurfaceFunction::zeros(&g)).unwrap();
        let f = BulkField::from_fn(&g, |x| x[0].sin() * x[1]);
        for i in 0..2 {
            assert!(alinhac_commutator(&geo, &f, [2, 0], i).unwrap().sup() < 1e-13);
        }
    }

    #[test]
    fn first_order_matches_leibniz() {
        // |α| = 1: ∂(A_ij ∂_j f) = A_ij ∂_j ∂f + ∂A_ij ∂_j f; compare with the good-unknown split
        let (geo, u, _, _) = state();
        let f = &u[0];
        let al = Alinhac::new(&geo, [1, 0]).unwrap();
        for i in 0..2 {
            let brute = {
                let mut acc = BulkField::zeros(geo.grid());
                for j in 0..2 {
                    acc += &geo.a(i, j).dh(0) * &f.d(j);
                }
                acc
            };
            // ∂A_ij ∂_j f = C_i(f) − [∂^A_i(∂^A_d f ∂φ) − ∂^A_d ∂^A_i f ∂φ] with ∂ = ∂_1
            let phi_a = al.phi_alpha();
            let kfz = geo.partial_a(f, 1);
            let alt = &al.commutator(f, i) - &(&geo.partial_a(&(&kfz * phi_a), i) - &(&geo.partial_a(&geo.partial_a(f, i), 1) * phi_a));
            assert!((&brute - &alt).sup() < 1e-9, "i={i}: {}", (&brute - &alt).sup());
        }
    }

    #[test]
    fn com122_holds_for_each_order() {
        let (geo, u, _, _) = state();
        for n in 1..=4 {
            for i in 0..2 {
                let (r, s) = com122_residual(&geo, &u[1], [n, 0], i).unwrap();
                assert!(r <= 1e-7 * s.max(1.0), "n={n} i={i}: {r} vs {s}");
            }
        }
    }

    #[test]
    fn naive_commutator_keeps_top_order_term() {
        let (geo, u, _, _) = state();
        let naive = naive_commutator(&geo, &u[0], [4, 0], 0).sup();
        let c = alinhac_commutator(&geo, &u[0], [4, 0], 0).unwrap().sup();
        assert!(naive > c);
    }

    #[test]
    fn div_boundary_and_kinematic_identities() {
        let (geo, u, _, p) = state();
        for n in 1..=3 {
            let (r, s) = div1_residual(&geo, &u, &p, [n, 0]).unwrap();
            assert!(r <= 1e-8 * s.max(1.0), "div n={n}: {r}");
            let (r, s) = boundary_residual(&geo, &u, &p, [n, 0]).unwrap();
            assert!(r <= 1e-8 * s.max(1.0), "bord n={n}: {r}");
            let (r, s) = kinematic_residual(&geo, &u, &p, [n, 0]).unwrap();
            assert!(r <= 1e-8 * s.max(1.0), "kin n={n}: {r}");
        }
    }

    #[test]
    fn momentum_identity() {
        let (geo, u, u_t, p) = state();
        for n in 1..=2 {
            let (r, s) = q1_residual(&geo, &u, &u_t, &p, [n, 0]).unwrap();
            assert!(r <= 1e-8 * s.max(1.0), "n={n}: {r} vs {s}");
        }
    }

    #[test]
    fn good_unknowns_vanish_at_bottom() {
        let (geo, u, _, p) = state();
        let gu = good_unknowns(&geo, &u, &p, [2, 0]).unwrap();
        for c in &gu.u {
            assert!(c.bottom_trace().sup() < 1e-10);
        }
    }

    #[test]
    fn rejects_unsupported_alpha() {
        let (geo, u, _, _) = state();
        assert!(alinhac_commutator(&geo, &u[0], [0, 0], 0).is_err());
        assert!(alinhac_commutator(&geo, &u[0], [7, 0], 0).is_err());
        assert!(alinhac_commutator(&geo, &u[0], [0, 1], 0).is_err());
    }
}
