//! Forcing terms of the geometric system after `∂_t^{α₀}`.
//!
//! Applying `∂_t^{α₀}` and freezing the coefficients at the current time gives
//!
//! ```text
//! ∂^A_t v + u·∇_A v + div_A S_A(q, v) = F¹,   div_A v = F²,
//! S_A(q, v)N = ∂^α η N + F³,   ∂_t ∂^α η = v·N + F⁴,
//! ```
//!
//! with `v = ∂_t^{α₀} u` and `q = ∂_t^{α₀} p`. Each `F` is a Leibniz sum over
//! `0 < β ≤ α₀` of products of time layers.

use crate::discretization::{dot_surface, BulkField, SurfaceFunction};
use crate::error::{Error, Result};
use crate::geometry::Geometry;

use super::binomial;

#[derive(Clone, Debug)]
pub struct TemporalForcing {
    pub order: usize,
    pub f1: Vec<BulkField>,
    pub f2: BulkField,
    pub f3: Vec<SurfaceFunction>,
    pub f4: SurfaceFunction,
}

/// Assemble `F¹..F⁴` for `∂_t^{α₀}`.
///
/// `u[j]` and `p[j]` are `∂_t^j u` and `∂_t^j p`. Needs geometry layers
/// `0..=α₀+1`, velocity layers `0..=α₀` and pressure layers `0..α₀`.
pub fn assemble_f(geo: &Geometry, u: &[Vec<BulkField>], p: &[BulkField], alpha0: usize) -> Result<TemporalForcing> {
    if alpha0 == 0 {
        return Err(Error::IncompatibleData("temporal order must be positive".into()));
    }
    if geo.time_layers() < alpha0 + 2 || u.len() < alpha0 + 1 || p.len() < alpha0 {
        return Err(Error::InsufficientData(format!(
            "∂_t^{alpha0} forcing needs {} geometry, {} velocity and {} pressure layers",
            alpha0 + 2,
            alpha0 + 1,
            alpha0
        )));
    }
    let d = geo.dim();
    let h = d - 1;
    let grid = geo.grid();
    let a = |l: usize, i: usize, m: usize| &geo.layer(l).a[i][m];
    let grads: Vec<Vec<Vec<BulkField>>> =
        u.iter().take(alpha0 + 1).map(|layer| layer.iter().map(BulkField::gradient).collect()).collect();

    // ∂_t^n (A_im ∂_m u_j), the row-i column-j entry of ∇_A u transposed
    let grad_a_layer = |n: usize, i: usize, j: usize| {
        let mut acc = BulkField::zeros(grid);
        for g in 0..=n {
            let c = binomial(n, g);
            for m in 0..d {
                acc += c * (a(g, i, m) * &grads[n - g][j][m]);
            }
        }
        acc
    };
    // ∂_t^n (D_A u)_ij
    let sym_layer = |n: usize, i: usize, j: usize| &grad_a_layer(n, i, j) + &grad_a_layer(n, j, i);
    // ∂_t^β (K ∂_t φ)
    let kphit_layer = |b: usize| {
        let mut acc = BulkField::zeros(grid);
        for g in 0..=b {
            acc += binomial(b, g) * (&geo.layer(g).k * &geo.layer(b - g + 1).phi);
        }
        acc
    };
    // ∂_t^β (u_j A_jk)
    let transport_layer = |b: usize, k: usize| {
        let mut acc = BulkField::zeros(grid);
        for g in 0..=b {
            for j in 0..d {
                acc += binomial(b, g) * (&u[g][j] * a(b - g, j, k));
            }
        }
        acc
    };

    let mut f1 = vec![BulkField::zeros(grid); d];
    for b in 1..=alpha0 {
        let c = binomial(alpha0, b);
        let r = alpha0 - b;
        let kphit = kphit_layer(b);
        let transport: Vec<BulkField> = (0..d).map(|k| transport_layer(b, k)).collect();
        for (i, f1i) in f1.iter_mut().enumerate() {
            let mut t = &kphit * &grads[r][i][h];
            for j in 0..d {
                // A_jk ∂_k (∂^β A_il ∂^{α−β} ∂_l u_j + ∂^β A_jl ∂^{α−β} ∂_l u_i)
                let mut inner = BulkField::zeros(grid);
                for l in 0..d {
                    inner += a(b, i, l) * &grads[r][j][l];
                    inner += a(b, j, l) * &grads[r][i][l];
                }
                t += geo.partial_a(&inner, j);
                // ∂^β A_jl ∂^{α−β} ∂_l (D_A u)_ij
                let s = sym_layer(r, i, j).gradient();
                for (l, sl) in s.iter().enumerate() {
                    t += a(b, j, l) * sl;
                }
            }
            for k in 0..d {
                t -= &transport[k] * &grads[r][i][k];
                t -= a(b, i, k) * &p[r].d(k);
            }
            *f1i += c * t;
        }
    }
    let f2 = divergence_forcing(geo, u, alpha0)?;

    // boundary terms on Σ
    let trace_a = |l: usize, i: usize, m: usize| a(l, i, m).trace();
    let mut f3 = vec![SurfaceFunction::zeros(grid); d];
    let mut f4 = SurfaceFunction::zeros(grid);
    for b in 1..=alpha0 {
        let c = binomial(alpha0, b);
        let r = alpha0 - b;
        let n_b = &geo.layer(b).n;
        let ep = geo.layer(r).eta.clone() - p[r].trace();
        let du: Vec<Vec<SurfaceFunction>> =
            grads[r].iter().map(|row| row.iter().map(BulkField::trace).collect()).collect();
        // ∂^β (N_j A_im) and ∂^β (N_j A_jm) by Leibniz
        let na = |i: usize, j: usize, m: usize| {
            let mut acc = SurfaceFunction::zeros(grid);
            for g in 0..=b {
                acc += binomial(b, g) * (&geo.layer(g).n[j] * &trace_a(b - g, i, m));
            }
            acc
        };
        for (i, f3i) in f3.iter_mut().enumerate() {
            let mut t = &n_b[i] * &ep;
            for j in 0..d {
                for m in 0..d {
                    t += &na(i, j, m) * &du[j][m];
                    t += &na(j, j, m) * &du[i][m];
                }
            }
            *f3i += c * t;
        }
        let deta_b = geo.layer(b).eta.gradient();
        let uh: Vec<SurfaceFunction> = (0..h).map(|j| u[r][j].trace()).collect();
        f4 -= c * dot_surface(&deta_b[..h], &uh);
    }
    Ok(TemporalForcing { order: alpha0, f1, f2, f3, f4 })
}

/// `F² = −Σ_{0<β≤α₀} C(α₀,β) ∂_t^β A_ij ∂_t^{α₀−β} ∂_j u_i`.
///
/// Only velocity layers below `α₀` and geometry layers up to `α₀` enter, so
/// this is available before `∂_t^{α₀} u` is known.
pub fn divergence_forcing(geo: &Geometry, u: &[Vec<BulkField>], alpha0: usize) -> Result<BulkField> {
    if alpha0 == 0 || geo.time_layers() < alpha0 + 1 || u.len() < alpha0 {
        return Err(Error::InsufficientData(format!(
            "∂_t^{alpha0} divergence forcing needs {} geometry and {alpha0} velocity layers",
            alpha0 + 1
        )));
    }
    let d = geo.dim();
    let mut f2 = BulkField::zeros(geo.grid());
    for b in 1..=alpha0 {
        let c = binomial(alpha0, b);
        let grads: Vec<Vec<BulkField>> = u[alpha0 - b].iter().map(BulkField::gradient).collect();
        for (i, gi) in grads.iter().enumerate() {
            for (j, gij) in gi.iter().enumerate().take(d) {
                f2 -= c * (&geo.layer(b).a[i][j] * gij);
            }
        }
    }
    Ok(f2)
}

/// Eighth-order central difference weights on the stencil `-4..=4`.
pub fn central_weights(order: usize) -> [f64; 9] {
    match order {
        1 => [1.0 / 280.0, -4.0 / 105.0, 0.2, -0.8, 0.0, 0.8, -0.2, 4.0 / 105.0, -1.0 / 280.0],
        2 => [
            -1.0 / 560.0,
            8.0 / 315.0,
            -0.2,
            1.6,
            -205.0 / 72.0,
            1.6,
            -0.2,
            8.0 / 315.0,
            -1.0 / 560.0,
        ],
        _ => panic!("central differences implemented for orders 1 and 2"),
    }
}

/// A state whose every field is a polynomial in time, given by its Taylor
/// coefficients at `t = 0` (`field[n]` is the `n`-th time derivative).
#[derive(Clone, Debug)]
pub struct PolynomialTrajectory {
    pub eta: Vec<SurfaceFunction>,
    pub u: Vec<Vec<BulkField>>,
    pub p: Vec<BulkField>,
}

fn taylor<T>(coefs: &[T], t: f64, m: usize, zero: T) -> T
where
    T: Clone + std::ops::AddAssign,
    for<'a> f64: std::ops::Mul<&'a T, Output = T>,
{
    let mut acc = zero;
    let mut fact = 1.0;
    for (n, c) in coefs.iter().enumerate().skip(m) {
        if n > m {
            fact *= (n - m) as f64;
        }
        acc += (t.powi((n - m) as i32) / fact) * c;
    }
    acc
}

impl PolynomialTrajectory {
    pub fn eta_at(&self, t: f64, m: usize) -> SurfaceFunction {
        taylor(&self.eta, t, m, SurfaceFunction::zeros(self.eta[0].grid()))
    }

    pub fn u_at(&self, t: f64, m: usize) -> Vec<BulkField> {
        let d = self.u[0].len();
        let g = self.u[0][0].grid();
        (0..d)
            .map(|i| {
                let comp: Vec<BulkField> = self.u.iter().map(|layer| layer[i].clone()).collect();
                taylor(&comp, t, m, BulkField::zeros(g))
            })
            .collect()
    }

    pub fn p_at(&self, t: f64, m: usize) -> BulkField {
        taylor(&self.p, t, m, BulkField::zeros(self.p[0].grid()))
    }

    /// Geometry at time `t` with `layers` time layers.
    pub fn geometry_at(&self, t: f64, layers: usize) -> Result<Geometry> {
        let etas: Vec<SurfaceFunction> = (0..layers).map(|m| self.eta_at(t, m)).collect();
        Geometry::with_layers(&etas)
    }
}

/// Residuals of the four differentiated equations at `t = 0`, each paired
/// with its scale. The left side is assembled with [`assemble_f`], the right
/// side by finite differences in time of the undifferentiated residuals.
pub fn temporal_residuals(traj: &PolynomialTrajectory, alpha0: usize, dt: f64) -> Result<[(f64, f64); 4]> {
    let geo = traj.geometry_at(0.0, alpha0 + 2)?;
    let d = geo.dim();
    let u_layers: Vec<Vec<BulkField>> = (0..=alpha0 + 1).map(|m| traj.u_at(0.0, m)).collect();
    let p_layers: Vec<BulkField> = (0..=alpha0).map(|m| traj.p_at(0.0, m)).collect();
    let f = assemble_f(&geo, &u_layers, &p_layers, alpha0)?;
    let v = &u_layers[alpha0];
    let q = &p_layers[alpha0];

    // finite differences of the undifferentiated residuals
    let w = central_weights(alpha0);
    let scale_t = dt.powi(alpha0 as i32);
    let mut mom = vec![BulkField::zeros(geo.grid()); d];
    let mut div = BulkField::zeros(geo.grid());
    let mut bc = vec![SurfaceFunction::zeros(geo.grid()); d];
    let mut kin = SurfaceFunction::zeros(geo.grid());
    for (s, &ws) in w.iter().enumerate() {
        if ws == 0.0 {
            continue;
        }
        let t = (s as f64 - 4.0) * dt;
        let g = traj.geometry_at(t, 2)?;
        let (u, ut, p) = (traj.u_at(t, 0), traj.u_at(t, 1), traj.p_at(t, 0));
        let c = ws / scale_t;
        let r = super::alinhac::momentum_residual(&g, &u, &ut, &p)?;
        for (m, ri) in mom.iter_mut().zip(&r) {
            m.axpy(c, ri);
        }
        div.axpy(c, &g.div_a(&u));
        let sn = stress_normal(&g, &p, &u);
        for (b, si) in bc.iter_mut().zip(&sn) {
            b.axpy(c, si);
        }
        let un = dot_surface(&crate::discretization::traces(&u), g.normal());
        kin.axpy(c, &(&traj.eta_at(t, 1) - &un));
    }

    // frozen-coefficient operators applied to the differentiated fields
    let phi_t = geo.phi_t().expect("layer present");
    let kphit = geo.k() * phi_t;
    let v_t = &u_layers[alpha0 + 1];
    let visc = geo.div_a_tensor(&geo.sym_grad_a(v));
    let gq = geo.grad_a(q);
    let mut out = [(0.0, 0.0); 4];
    for i in 0..d {
        let ga = geo.grad_a(&v[i]);
        let mut lhs = &v_t[i] - &(&kphit * &v[i].dz());
        for j in 0..d {
            lhs += &u_layers[0][j] * &ga[j];
        }
        lhs = &(&(lhs + &gq[i]) - &visc[i]) - &f.f1[i];
        let res = (&lhs - &mom[i]).sup();
        out[0].0 = f64::max(out[0].0, res);
        out[0].1 = f64::max(out[0].1, mom[i].sup().max(f.f1[i].sup()).max(visc[i].sup()));
    }
    let div_lhs = &geo.div_a(v) - &f.f2;
    out[1] = ((&div_lhs - &div).sup(), div.sup().max(f.f2.sup()).max(geo.div_a(v).sup()));

    // S_A(q,v)N − ∂^αη N − F³ against ∂^α(S_A(p,u)N − ηN)
    let s_qv = geo.stress_a(q, v);
    let n = geo.normal();
    let eta_a = traj.eta_at(0.0, alpha0);
    for i in 0..d {
        let mut sn = SurfaceFunction::zeros(geo.grid());
        for j in 0..d {
            sn += &s_qv[i][j].trace() * &n[j];
        }
        let lhs = &(&sn - &(&eta_a * &n[i])) - &f.f3[i];
        let res = (&lhs - &bc[i]).sup();
        out[2].0 = f64::max(out[2].0, res);
        out[2].1 = f64::max(out[2].1, bc[i].sup().max(f.f3[i].sup()).max(sn.sup()));
    }
    let vn = dot_surface(&crate::discretization::traces(v), n);
    let kin_lhs = &(&traj.eta_at(0.0, alpha0 + 1) - &vn) - &f.f4;
    out[3] = ((&kin_lhs - &kin).sup(), kin.sup().max(f.f4.sup()).max(vn.sup()));
    Ok(out)
}

/// `S_A(p,u)N − ηN` on `Σ`.
fn stress_normal(geo: &Geometry, p: &BulkField, u: &[BulkField]) -> Vec<SurfaceFunction> {
    let s = geo.stress_a(p, u);
    let n = geo.normal();
    let d = geo.dim();
    (0..d)
        .map(|i| {
            let mut acc = -(geo.eta() * &n[i]);
            for j in 0..d {
                acc += &s[i][j].trace() * &n[j];
            }
            acc
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::Grid;
    use std::f64::consts::PI;

    pub(crate) fn trajectory(d: usize) -> PolynomialTrajectory {
        let g = if d == 2 {
            Grid::new_2d(32, 2.0 * PI, 17, 1.0).unwrap()
        } else {
            Grid::new_3d(16, 16, 2.0 * PI, 2.0 * PI, 11, 1.0).unwrap()
        };
        let z = d - 1;
        let eta = (0..4)
            .map(|n| {
                let a = 0.1 / (n + 1) as f64;
                SurfaceFunction::from_fn(&g, move |x| a * ((n + 1) as f64 * x[0] + 0.3 * n as f64).cos() + 0.02 * x[d - 2].sin())
            })
            .collect();
        let u = (0..4)
            .map(|n| {
                (0..d)
                    .map(|i| {
                        let s = 0.5 / (n + 1) as f64;
                        BulkField::from_fn(&g, move |x| {
                            s * ((i + n + 1) as f64 * x[0]).sin() * (1.0 + x[z]) * ((i as f64 + 0.5) * x[z]).exp()
                        })
                    })
                    .collect()
            })
            .collect();
        let p = (0..3)
            .map(|n| BulkField::from_fn(&g, move |x| ((n + 1) as f64 * x[0]).cos() * (x[z] + 0.5).powi(2) / (n + 1) as f64))
            .collect();
        PolynomialTrajectory { eta, u, p }
    }

    #[test]
    fn vanishes_without_time_dependence() {
        let mut traj = trajectory(2);
        for n in 1..4 {
            traj.eta[n] = SurfaceFunction::zeros(traj.eta[0].grid());
            for c in traj.u[n].iter_mut() {
                *c = BulkField::zeros(c.grid());
            }
        }
        traj.p[1] = BulkField::zeros(traj.p[0].grid());
        let geo = traj.geometry_at(0.0, 3).unwrap();
        let u: Vec<_> = (0..2).map(|m| traj.u_at(0.0, m)).collect();
        let p = vec![traj.p_at(0.0, 0)];
        let f = assemble_f(&geo, &u, &p, 1).unwrap();
        assert!(f.f1.iter().all(|c| c.sup() < 1e-14));
        assert!(f.f2.sup() < 1e-14 && f.f4.sup() < 1e-14);
        assert!(f.f3.iter().all(|c| c.sup() < 1e-14));
    }

    #[test]
    fn first_order_divergence_is_product_rule() {
        let traj = trajectory(2);
        let geo = traj.geometry_at(0.0, 3).unwrap();
        let u: Vec<_> = (0..2).map(|m| traj.u_at(0.0, m)).collect();
        let f = assemble_f(&geo, &u, &[traj.p_at(0.0, 0)], 1).unwrap();
        // ∂_t(div_A u) = div_A(∂_t u) − F²
        let w = central_weights(1);
        let dt = 0.05;
        let mut fd = BulkField::zeros(geo.grid());
        for (s, &ws) in w.iter().enumerate() {
            let t = (s as f64 - 4.0) * dt;
            fd.axpy(ws / dt, &traj.geometry_at(t, 1).unwrap().div_a(&traj.u_at(t, 0)));
        }
        let expect = &geo.div_a(&u[1]) - &f.f2;
        assert!((&fd - &expect).sup() < 1e-8, "{}", (&fd - &expect).sup());
    }

    #[test]
    fn differentiated_system_matches_finite_differences() {
        for d in [2, 3] {
            let traj = trajectory(d);
            for alpha0 in [1, 2] {
                let res = temporal_residuals(&traj, alpha0, 0.05).unwrap();
                for (k, (r, s)) in res.iter().enumerate() {
                    assert!(*r <= 1e-7 * s.max(1.0), "d={d} α₀={alpha0} eq={k}: {r} (scale {s})");
                }
            }
        }
    }

    #[test]
    fn missing_layers_are_reported() {
        let traj = trajectory(2);
        let geo = traj.geometry_at(0.0, 2).unwrap();
        let u: Vec<_> = (0..3).map(|m| traj.u_at(0.0, m)).collect();
        assert!(assemble_f(&geo, &u, &[traj.p_at(0.0, 0), traj.p_at(0.0, 1)], 2).is_err());
    }
}
