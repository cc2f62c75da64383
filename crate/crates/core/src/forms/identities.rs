//! Residual battery over seeded random states.
//!
//! Every check compares two independent assemblies of the same quantity and
//! reports the sup-norm residual next to the largest term it involves.

use serde::Serialize;

use crate::discretization::{dot_surface, traces, BulkField, Grid, SurfaceFunction};
use crate::error::Result;
use crate::geometry::Geometry;
use crate::random::{random_bulk, random_surface, random_velocity, rng, Spectrum};

use super::alinhac::{boundary_residual, com122_residual, div1_residual, kinematic_residual, momentum_residual, q1_residual};
use super::nonlinear::{assemble_g, g3};
use super::temporal::{temporal_residuals, PolynomialTrajectory};

#[derive(Clone, Debug, Serialize)]
pub struct IdentityCheck {
    pub name: String,
    pub residual: f64,
    pub scale: f64,
    /// Relative tolerance: the check passes if `residual ≤ tolerance · max(scale, 1)`.
    pub tolerance: f64,
    pub passed: bool,
}

impl IdentityCheck {
    pub fn new(name: impl Into<String>, residual: f64, scale: f64, tolerance: f64) -> Self {
        let passed = residual.is_finite() && residual <= tolerance * scale.max(1.0);
        Self { name: name.into(), residual, scale, tolerance, passed }
    }
}

#[derive(Clone, Debug)]
pub struct IdentityConfig {
    pub nx: usize,
    pub nz: usize,
    pub length: f64,
    pub depth: f64,
    pub amplitude: f64,
    pub seed: u64,
    pub spectrum: Spectrum,
    /// Flip one sign inside `G³` to confirm the battery can fail.
    pub break_g3: bool,
    /// Also run the three-dimensional stress branch on a small grid.
    pub include_3d: bool,
    /// Also run the temporal-forcing checks on a small grid.
    pub include_temporal: bool,
}

impl Default for IdentityConfig {
    fn default() -> Self {
        Self {
            nx: 128,
            nz: 33,
            length: 20.0,
            depth: 1.0,
            amplitude: 0.1,
            seed: 20240601,
            spectrum: Spectrum::default(),
            break_g3: false,
            include_3d: true,
            include_temporal: true,
        }
    }
}

/// Terms of the energy balance with `∂_t u` taken from the momentum equation.
///
/// `rate + dissipation = constraint` holds for every smooth state, where
/// `constraint` collects the divergence, stress and kinematic defects and
/// vanishes on solutions.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct EnergyBalance {
    /// `d/dt [½∫J|u|² + ½∫_Σ η²]`.
    pub rate: f64,
    /// `½∫J|D_A u|²`.
    pub dissipation: f64,
    pub constraint: f64,
}

/// `∂_t u = Kφ_t ∂_d u − u·∇_A u − ∇_A p + div_A D_A u`.
pub fn momentum_rhs(geo: &Geometry, u: &[BulkField], p: &BulkField) -> Result<Vec<BulkField>> {
    let zero: Vec<BulkField> = u.iter().map(|c| BulkField::zeros(c.grid())).collect();
    // the residual with ∂_t u = 0 is exactly −rhs
    Ok(momentum_residual(geo, u, &zero, p)?.into_iter().map(|r| -r).collect())
}

/// Energy balance of a state; `∂_t η` is read from the geometry's first layer.
pub fn energy_balance(geo: &Geometry, u: &[BulkField], p: &BulkField) -> Result<EnergyBalance> {
    let u_t = momentum_rhs(geo, u, p)?;
    let eta_t = &geo.layer(1).eta;
    let j = geo.jac();
    let j_t = &geo.layer(1).j;
    let u_sq = crate::discretization::dot(u, u);
    let rate = (j * &crate::discretization::dot(u, &u_t)).integral()
        + 0.5 * (j_t * &u_sq).integral()
        + (geo.eta() * eta_t).integral();
    let da = geo.sym_grad_a(u);
    let mut da_sq = BulkField::zeros(geo.grid());
    for row in &da {
        for e in row {
            da_sq += e * e;
        }
    }
    let dissipation = 0.5 * (j * &da_sq).integral();

    let n = geo.normal();
    let ut = traces(u);
    let kin = eta_t - &dot_surface(&ut, n);
    let div = geo.div_a(u);
    let s = geo.stress_a(p, u);
    let d = geo.dim();
    let mut stress_work = SurfaceFunction::zeros(geo.grid());
    for i in 0..d {
        let mut sn = -(geo.eta() * &n[i]);
        for jj in 0..d {
            sn += &s[i][jj].trace() * &n[jj];
        }
        stress_work += &ut[i] * &sn;
    }
    let constraint = 0.5 * (&kin * &u_sq.trace()).integral()
        + 0.5 * (&(j * &div) * &u_sq).integral()
        + (&(j * p) * &div).integral()
        - stress_work.integral()
        + (geo.eta() * &kin).integral();
    Ok(EnergyBalance { rate, dissipation, constraint })
}

fn corrupt_g3(g: &mut [SurfaceFunction], eta: &SurfaceFunction, k: &SurfaceFunction, du_dd: &SurfaceFunction) {
    // flip the sign of the −AK∂_d u_d coupling in the first component
    let a = eta.dh(0);
    g[0] += 2.0 * (&(&a * k) * du_dd);
}

/// Run the full battery on one seeded random state.
pub fn run_identity_battery(cfg: &IdentityConfig) -> Result<Vec<IdentityCheck>> {
    let grid = Grid::new_2d(cfg.nx, cfg.length, cfg.nz, cfg.depth)?;
    let mut r = rng(cfg.seed);
    let spec = &cfg.spectrum;
    let eta = random_surface(&grid, &mut r, spec, cfg.amplitude);
    let eta_t = random_surface(&grid, &mut r, spec, cfg.amplitude);
    let geo = Geometry::with_layers(&[eta, eta_t])?;
    let u = random_velocity(&grid, &mut r, spec, 1.0);
    let u_t = random_velocity(&grid, &mut r, spec, 1.0);
    let p = random_bulk(&grid, &mut r, spec, 1.0, false);

    let mut out = Vec::new();
    out.push(IdentityCheck::new("piola", geo.piola_residual(), 1.0, 1e-8));
    let det = geo.jacobian_determinant();
    out.push(IdentityCheck::new("jacobian determinant", (&det - geo.jac()).sup(), geo.jac().sup(), 1e-12));

    out.extend(equivalence_checks(&geo, &u, &u_t, &p, cfg.break_g3)?);
    if cfg.include_3d {
        out.extend(stress_3d_check(cfg)?);
    }

    for n in 1..=4 {
        let mut worst = (0.0f64, 0.0f64);
        for i in 0..2 {
            for f in [&u[0], &u[1], &p] {
                let (res, sc) = com122_residual(&geo, f, [n, 0], i)?;
                worst = (worst.0.max(res), worst.1.max(sc));
            }
        }
        out.push(IdentityCheck::new(format!("alinhac commutation |α|={n}"), worst.0, worst.1, 1e-7));
    }
    for n in 1..=3 {
        let (res, sc) = div1_residual(&geo, &u, &p, [n, 0])?;
        out.push(IdentityCheck::new(format!("good-unknown divergence |α|={n}"), res, sc, 1e-8));
        let (res, sc) = boundary_residual(&geo, &u, &p, [n, 0])?;
        out.push(IdentityCheck::new(format!("good-unknown boundary |α|={n}"), res, sc, 1e-8));
    }
    let (res, sc) = kinematic_residual(&geo, &u, &p, [2, 0])?;
    out.push(IdentityCheck::new("good-unknown kinematic |α|=2", res, sc, 1e-8));
    for n in 1..=2 {
        let (res, sc) = q1_residual(&geo, &u, &u_t, &p, [n, 0])?;
        out.push(IdentityCheck::new(format!("good-unknown momentum |α|={n}"), res, sc, 1e-7));
    }

    let bal = energy_balance(&geo, &u, &p)?;
    let h1 = crate::discretization::norms::bulk_vector_norm_sq(&u, 1);
    out.push(IdentityCheck::new(
        "energy identity",
        (bal.rate + bal.dissipation - bal.constraint).abs() / h1.max(f64::MIN_POSITIVE),
        1.0,
        1e-8,
    ));

    if cfg.include_temporal {
        out.extend(temporal_checks(cfg)?);
    }
    Ok(out)
}

fn equivalence_checks(
    geo: &Geometry,
    u: &[BulkField],
    u_t: &[BulkField],
    p: &BulkField,
    break_g3: bool,
) -> Result<Vec<IdentityCheck>> {
    let d = geo.dim();
    let h = d - 1;
    let nl = assemble_g(geo, u, p)?;
    let mut out = Vec::new();

    // momentum: geometric residual with Δ_A versus ∂_t u − Δu + ∇p − G¹
    let phi_t = geo.phi_t().expect("layer present");
    let kphit = geo.k() * phi_t;
    let (mut res, mut scale) = (0.0f64, 0.0f64);
    for i in 0..d {
        let ga = geo.grad_a(&u[i]);
        let mut geom = &(&u_t[i] - &(&kphit * &u[i].dz())) - &geo.lap_a(&u[i]);
        for j in 0..d {
            geom += &u[j] * &ga[j];
        }
        geom += geo.partial_a(p, i);
        // composed first derivatives, matching the discretization inside lap_a
        let lap: BulkField = (0..d).fold(BulkField::zeros(geo.grid()), |acc, j| acc + u[i].d(j).d(j));
        let flat = &(&(&u_t[i] - &lap) + &p.d(i)) - &nl.g1[i];
        res = res.max((&geom - &flat).sup());
        scale = scale.max(geom.sup()).max(nl.g1[i].sup());
    }
    out.push(IdentityCheck::new("momentum equivalence (G1)", res, scale, 1e-8));

    let div: BulkField = (0..d).fold(BulkField::zeros(geo.grid()), |acc, i| acc + u[i].d(i));
    let diva = geo.div_a(u);
    out.push(IdentityCheck::new(
        "mass equivalence (G2)",
        (&diva - &(&div - &nl.g2)).sup(),
        div.sup().max(nl.g2.sup()),
        1e-8,
    ));

    let mut g3v = nl.g3.clone();
    if break_g3 {
        let k = geo.k().trace();
        corrupt_g3(&mut g3v, geo.eta(), &k, &u[h].dz().trace());
    }
    let (res, scale) = stress_equivalence(geo, u, p, &g3v);
    out.push(IdentityCheck::new(format!("stress equivalence (G3, d={d})"), res, scale, 1e-8));

    let un = dot_surface(&traces(u), geo.normal());
    let kin = &un - &(&u[h].trace() + &nl.g4);
    out.push(IdentityCheck::new("kinematic equivalence (G4)", kin.sup(), un.sup(), 1e-8));
    Ok(out)
}

/// `(S_A(p,u)N − ηN) − ((pI − Du)e_d − ηe_d − G³)` on `Σ`.
fn stress_equivalence(geo: &Geometry, u: &[BulkField], p: &BulkField, g3v: &[SurfaceFunction]) -> (f64, f64) {
    let d = geo.dim();
    let s = geo.stress_a(p, u);
    let n = geo.normal();
    let (mut res, mut scale) = (0.0f64, 0.0f64);
    for i in 0..d {
        let mut lhs = -(geo.eta() * &n[i]);
        for j in 0..d {
            lhs += &s[i][j].trace() * &n[j];
        }
        let mut flat = -(&u[i].dz().trace() + &u[d - 1].d(i).trace());
        if i == d - 1 {
            flat += &p.trace() - geo.eta();
        }
        flat -= &g3v[i];
        res = res.max((&lhs - &flat).sup());
        scale = scale.max(lhs.sup()).max(g3v[i].sup());
    }
    (res, scale)
}

fn stress_3d_check(cfg: &IdentityConfig) -> Result<Vec<IdentityCheck>> {
    let grid = Grid::new_3d(24, 24, cfg.length, cfg.length, 13, cfg.depth)?;
    let mut r = rng(cfg.seed ^ 0x3d);
    let spec = Spectrum { max_mode: 4, ..cfg.spectrum };
    let geo = Geometry::new(&random_surface(&grid, &mut r, &spec, cfg.amplitude))?;
    let u = random_velocity(&grid, &mut r, &spec, 1.0);
    let p = random_bulk(&grid, &mut r, &spec, 1.0, false);
    let mut g3v = g3(&geo, &u, &p)?;
    if cfg.break_g3 {
        let k = geo.k().trace();
        corrupt_g3(&mut g3v, geo.eta(), &k, &u[2].dz().trace());
    }
    let (res, scale) = stress_equivalence(&geo, &u, &p, &g3v);
    Ok(vec![IdentityCheck::new("stress equivalence (G3, d=3)", res, scale, 1e-8)])
}

fn temporal_checks(cfg: &IdentityConfig) -> Result<Vec<IdentityCheck>> {
    let grid = Grid::new_2d(32, cfg.length, 17, cfg.depth)?;
    let mut r = rng(cfg.seed ^ 0x7e);
    let spec = Spectrum { max_mode: 4, ..cfg.spectrum };
    let eta = (0..4).map(|n| random_surface(&grid, &mut r, &spec, cfg.amplitude / (n + 1) as f64)).collect();
    let u = (0..4).map(|_| random_velocity(&grid, &mut r, &spec, 0.5)).collect();
    let p = (0..3).map(|_| random_bulk(&grid, &mut r, &spec, 0.5, false)).collect();
    let traj = PolynomialTrajectory { eta, u, p };
    let names = ["momentum", "divergence", "stress", "kinematic"];
    let mut out = Vec::new();
    for alpha0 in [1, 2] {
        let res = temporal_residuals(&traj, alpha0, 0.05)?;
        for (name, (rv, sc)) in names.iter().zip(res) {
            out.push(IdentityCheck::new(format!("temporal forcing ∂_t^{alpha0} {name}"), rv, sc, 1e-7));
        }
    }
    Ok(out)
}
