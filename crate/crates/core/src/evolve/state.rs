//! Flow state, conserved quantities and the checkpoint container.

use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use crate::discretization::norms::{bulk_vector_norm_sq, l2_sq};
use crate::discretization::{dot, dot_surface, traces, BulkField, Grid, SurfaceFunction};
use crate::error::{Error, Result};
use crate::geometry::Geometry;

const MAGIC: &[u8; 4] = b"FWCK";
const VERSION: u32 = 1;

/// `(u, p, η)` at time `t` with the geometry of `η` cached.
///
/// The cached geometry carries the `∂_t η = u·N` layer so that the nonlinear
/// terms can be assembled directly. `p` is the pressure returned by the last
/// implicit solve (for Crank–Nicolson it sits at the half step).
#[derive(Clone, Debug)]
pub struct FlowState {
    pub u: Vec<BulkField>,
    pub p: BulkField,
    pub eta: SurfaceFunction,
    pub t: f64,
    geometry: Arc<Geometry>,
}

/// `∂_t η = u·N` on `Σ`.
pub fn kinematic_rate(eta: &SurfaceFunction, u: &[BulkField]) -> SurfaceFunction {
    let mut n: Vec<SurfaceFunction> = eta.gradient().into_iter().map(|f| -f).collect();
    n.push(SurfaceFunction::constant(eta.grid(), 1.0));
    dot_surface(&traces(u), &n)
}

impl FlowState {
    pub fn new(u: Vec<BulkField>, p: BulkField, eta: SurfaceFunction, t: f64) -> Result<Self> {
        let d = eta.grid().dim();
        if u.len() != d {
            return Err(Error::IncompatibleData(format!("{} velocity components on a {d}D grid", u.len())));
        }
        let eta_t = kinematic_rate(&eta, &u);
        let geometry = Arc::new(Geometry::with_layers(&[eta.clone(), eta_t])?);
        Ok(Self { u, p, eta, t, geometry })
    }

    /// Quiescent fluid `u = 0`, `p = 0` under the surface `η`.
    pub fn still(eta: SurfaceFunction) -> Result<Self> {
        let g = eta.grid().clone();
        let zero = BulkField::zeros(&g);
        Self::new(vec![zero.clone(); g.dim()], zero, eta, 0.0)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.eta.grid()
    }

    pub fn dim(&self) -> usize {
        self.u.len()
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    /// `½∫J|u|² + ½∫_Σ η²`.
    pub fn energy(&self) -> f64 {
        0.5 * (self.geometry.jac() * &dot(&self.u, &self.u)).integral() + 0.5 * (&self.eta * &self.eta).integral()
    }

    pub fn min_jacobian(&self) -> f64 {
        self.geometry.jac().min()
    }

    /// `‖div_A u‖₀`.
    pub fn divergence_residual(&self) -> f64 {
        l2_sq(&self.geometry.div_a(&self.u)).max(0.0).sqrt()
    }

    /// `‖u‖₁`.
    pub fn velocity_h1(&self) -> f64 {
        bulk_vector_norm_sq(&self.u, 1).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.eta.values().iter().chain(self.p.values()).all(|v| v.is_finite())
            && self.u.iter().all(|c| c.values().iter().all(|v| v.is_finite()))
    }

    /// Serialize: tag, version, grid metadata, time, then nodal values of
    /// `η`, `u` and `p` as little-endian `f64`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let g = self.grid();
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        for v in [g.dim(), g.nx(), g.ny(), g.nz()] {
            out.extend_from_slice(&(v as u32).to_le_bytes());
        }
        let ly = if g.dim() == 3 { g.period(1) } else { 0.0 };
        for v in [g.period(0), ly, g.depth(), self.t] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        let fields = std::iter::once(self.eta.values())
            .chain(self.u.iter().map(BulkField::values))
            .chain(std::iter::once(self.p.values()));
        for f in fields {
            for v in f {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::Checkpoint("not a checkpoint file (bad tag)".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::Checkpoint(format!("unsupported checkpoint version {version}")));
        }
        let (dim, nx, ny, nz) = (r.u32()? as usize, r.u32()? as usize, r.u32()? as usize, r.u32()? as usize);
        let (lx, ly, depth, t) = (r.f64()?, r.f64()?, r.f64()?, r.f64()?);
        let grid = match dim {
            2 => Grid::new_2d(nx, lx, nz, depth)?,
            3 => Grid::new_3d(nx, ny, lx, ly, nz, depth)?,
            _ => return Err(Error::Checkpoint(format!("bad dimension {dim}"))),
        };
        let nh = grid.nh();
        let eta = SurfaceFunction::from_values(&grid, r.f64s(nh)?);
        let mut u = Vec::with_capacity(dim);
        for _ in 0..dim {
            u.push(BulkField::from_values(&grid, r.f64s(nz * nh)?));
        }
        let p = BulkField::from_values(&grid, r.f64s(nz * nh)?);
        if r.pos != bytes.len() {
            return Err(Error::Checkpoint(format!("{} trailing bytes", bytes.len() - r.pos)));
        }
        Self::new(u, p, eta, t)
    }

    pub fn write_checkpoint(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn read_checkpoint(path: &Path) -> Result<Self> {
        let mut buf = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut buf)?;
        Self::from_bytes(&buf)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos + n;
        if end > self.bytes.len() {
            return Err(Error::Checkpoint("truncated checkpoint".into()));
        }
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        (0..n).map(|_| self.f64()).collect()
    }
}
