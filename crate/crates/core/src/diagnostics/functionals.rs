//! Energy and dissipation functionals of a state, evaluated term by term.
//!
//! Every functional is a sum of squared Sobolev norms of `u`, `p`, `η` and
//! their time derivatives. The derivative counts scale with `N_diag`; time
//! derivatives beyond what [`TimeLayers`] provides are left out and listed
//! in [`EnergyReport::omitted`].

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::pointwise::{pointwise_functionals, Pointwise};
use crate::discretization::norms::{multi_indices, BulkSpectrum};
use crate::discretization::{BulkField, Grid, SurfaceFunction};
use crate::error::{Error, Result};
use crate::evolve::TimeLayers;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionalParams {
    pub n_diag: usize,
    pub theta: f64,
    pub kappa: f64,
    /// Surface order of `F`; `4 N_diag + 1/2` when unset.
    #[serde(default)]
    pub s_f: Option<f64>,
}

impl FunctionalParams {
    pub fn for_dim(dim: usize) -> Self {
        Self { n_diag: 1, theta: 0.1, kappa: if dim == 2 { 0.5 } else { 0.1 }, s_f: None }
    }

    pub fn s_f(&self) -> f64 {
        self.s_f.unwrap_or(4.0 * self.n_diag as f64 + 0.5)
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.n_diag == 0 {
            return Err(Error::Config("N_diag must be at least 1".into()));
        }
        if !(self.theta > 0.0) {
            return Err(Error::Config(format!("theta must be positive, got {}", self.theta)));
        }
        if dim == 2 && self.kappa != 0.5 {
            return Err(Error::Config(format!("kappa is fixed to 1/2 in 2D, got {}", self.kappa)));
        }
        if !(self.kappa > 0.0) {
            return Err(Error::Config(format!("kappa must be positive, got {}", self.kappa)));
        }
        Ok(())
    }
}

/// All functionals of one state. JSON keys are the field names.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[allow(non_snake_case)]
pub struct EnergyReport {
    pub t: f64,
    pub E_high: f64,
    pub D_high: f64,
    pub E_bar: f64,
    pub D_bar: f64,
    pub E_bar_low: f64,
    pub D_bar_low: f64,
    pub E_min: f64,
    pub D_min: f64,
    pub E_plus: f64,
    pub D_plus: f64,
    pub F: f64,
    pub K_frak: f64,
    pub K_bar: f64,
    pub K_cal: f64,
    pub params: FunctionalParams,
    /// Value of every term, grouped by functional.
    pub terms: BTreeMap<String, BTreeMap<String, f64>>,
    /// Terms that need time derivatives beyond the available layers.
    pub omitted: BTreeMap<String, Vec<String>>,
}

impl EnergyReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// `(name, value)` of the scalar functionals in a fixed order.
    pub fn scalars(&self) -> [(&'static str, f64); 14] {
        [
            ("E_high", self.E_high),
            ("D_high", self.D_high),
            ("E_bar", self.E_bar),
            ("D_bar", self.D_bar),
            ("E_bar_low", self.E_bar_low),
            ("D_bar_low", self.D_bar_low),
            ("E_min", self.E_min),
            ("D_min", self.D_min),
            ("E_plus", self.E_plus),
            ("D_plus", self.D_plus),
            ("F", self.F),
            ("K_frak", self.K_frak),
            ("K_bar", self.K_bar),
            ("K_cal", self.K_cal),
        ]
    }
}

type Index = Vec<usize>;

/// Horizontal multi-indices of order `j`, padded with a zero vertical entry.
fn horiz(d: usize, j: usize) -> Vec<Index> {
    multi_indices(d - 1, j)
        .into_iter()
        .map(|mut a| {
            a.push(0);
            a
        })
        .collect()
}

fn horiz_upto(d: usize, lo: usize, hi: usize) -> Vec<Index> {
    (lo..=hi).flat_map(|j| horiz(d, j)).collect()
}

fn full(d: usize, j: usize) -> Vec<Index> {
    multi_indices(d, j)
}

fn vert(d: usize, m: usize) -> Vec<Index> {
    let mut a = vec![0; d];
    a[d - 1] = m;
    vec![a]
}

/// `D ∂_d`: one horizontal and one vertical derivative.
fn horiz_vert(d: usize) -> Vec<Index> {
    horiz(d, 1)
        .into_iter()
        .map(|mut a| {
            a[d - 1] = 1;
            a
        })
        .collect()
}

/// Squared-norm sums of one bulk field with cached vertical integrals.
struct Sums<'a> {
    spec: BulkSpectrum<'a>,
    grid: Arc<Grid>,
    cache: HashMap<usize, Vec<f64>>,
}

impl<'a> Sums<'a> {
    fn new(f: &'a BulkField) -> Self {
        Self { spec: BulkSpectrum::new(f), grid: f.grid().clone(), cache: HashMap::new() }
    }

    /// `Σ_{γ ∈ outer} Σ_{|β| ≤ k} ‖∂^{γ+β} f‖²`.
    fn nested(&mut self, outer: &[Index], k: usize) -> f64 {
        let g = self.grid.clone();
        let d = g.dim();
        let h = d - 1;
        let nh = g.nh();
        let mut weights: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        for gamma in outer {
            for order in 0..=k {
                for beta in multi_indices(d, order) {
                    let m = gamma[h] + beta[h];
                    let mut bh = [0, 0];
                    for a in 0..h {
                        bh[a] = gamma[a] + beta[a];
                    }
                    let w = weights.entry(m).or_insert_with(|| vec![0.0; nh]);
                    for (ih, wi) in w.iter_mut().enumerate() {
                        *wi += g.derivative_symbol(ih, bh).norm_sqr();
                    }
                }
            }
        }
        let mut total = 0.0;
        for (m, w) in weights {
            let spec = &self.spec;
            let v = self.cache.entry(m).or_insert_with(|| spec.vertical_integrals(m));
            total += w.iter().zip(v.iter()).map(|(a, b)| a * b).sum::<f64>();
        }
        g.box_area() * total
    }
}

/// `Σ_{α ∈ outer} |∂^α f|_s²` on `Σ`.
fn surf_nested(f: &SurfaceFunction, outer: &[Index], s: f64) -> f64 {
    let g = f.grid();
    let h = g.horizontal_dims();
    let c = f.coefficients();
    let mut sum = 0.0;
    for (ih, ck) in c.iter().enumerate() {
        let w: f64 = outer
            .iter()
            .map(|a| {
                let mut bh = [0, 0];
                bh[..h].copy_from_slice(&a[..h]);
                g.derivative_symbol(ih, bh).norm_sqr()
            })
            .sum();
        let k = g.wavenumber(ih);
        sum += w * (1.0 + k * k).powf(s) * ck.norm_sqr();
    }
    g.box_area() * sum
}

/// Accumulates terms for one functional, recording omissions.
struct Acc<'r> {
    name: &'static str,
    total: f64,
    terms: BTreeMap<String, f64>,
    omitted: Vec<String>,
    sink: &'r mut Sink,
}

#[derive(Default)]
struct Sink {
    terms: BTreeMap<String, BTreeMap<String, f64>>,
    omitted: BTreeMap<String, Vec<String>>,
}

impl Sink {
    fn acc(&mut self, name: &'static str) -> Acc<'_> {
        Acc { name, total: 0.0, terms: BTreeMap::new(), omitted: Vec::new(), sink: self }
    }
}

impl Acc<'_> {
    fn add(&mut self, label: String, v: Option<f64>) {
        match v {
            Some(v) => {
                self.total += v;
                *self.terms.entry(label).or_insert(0.0) += v;
            }
            None => self.omitted.push(label),
        }
    }

    fn finish(self) -> f64 {
        self.sink.terms.insert(self.name.to_string(), self.terms);
        if !self.omitted.is_empty() {
            self.sink.omitted.insert(self.name.to_string(), self.omitted);
        }
        self.total
    }
}

/// Spectral sums of every layer of `u` and `p`.
struct Fields<'a> {
    dim: usize,
    u: Vec<Vec<Sums<'a>>>,
    p: Vec<Sums<'a>>,
    eta: Vec<&'a SurfaceFunction>,
}

impl<'a> Fields<'a> {
    fn new(l: &'a TimeLayers) -> Self {
        let (_, _, ne) = l.available();
        Self {
            dim: l.dim(),
            u: l.u.iter().map(|layer| layer.iter().map(Sums::new).collect()).collect(),
            p: l.p.iter().map(Sums::new).collect(),
            eta: (0..=ne).map(|j| l.eta(j)).collect(),
        }
    }

    /// `Σ_c ‖∂^γ u_c‖_k²` over components `comps` of layer `j`.
    fn u(&mut self, j: usize, comps: std::ops::Range<usize>, outer: &[Index], k: i64) -> Option<f64> {
        if k < 0 {
            return None;
        }
        let layer = self.u.get_mut(j)?;
        Some(comps.map(|c| layer[c].nested(outer, k as usize)).sum())
    }

    fn p(&mut self, j: usize, outer: &[Index], k: i64) -> Option<f64> {
        if k < 0 {
            return None;
        }
        Some(self.p.get_mut(j)?.nested(outer, k as usize))
    }

    fn eta(&self, j: usize, outer: &[Index], s: f64) -> Option<f64> {
        Some(surf_nested(self.eta.get(j)?, outer, s))
    }

    fn id(&self) -> Vec<Index> {
        vec![vec![0; self.dim]]
    }
}

fn lbl(field: &str, j: usize, extra: &str, order: impl std::fmt::Display) -> String {
    let base = if j == 0 { field.to_string() } else { format!("dt{j} {field}") };
    if extra.is_empty() {
        format!("{base} [{order}]")
    } else {
        format!("{extra} {base} [{order}]")
    }
}

/// Evaluate every functional on a state given with its time layers.
pub fn evaluate_functionals(layers: &TimeLayers, params: &FunctionalParams) -> Result<EnergyReport> {
    let d = layers.dim();
    params.validate(d)?;
    let h = d - 1;
    let n = params.n_diag as i64;
    let nf = n as f64;
    let m = n + 2;
    let mf = m as f64;
    let mut f = Fields::new(layers);
    let id = f.id();
    let all = 0..d;
    let mut sink = Sink::default();

    let e_high = {
        let mut a = sink.acc("E_high");
        for j in 0..=(2 * n) as usize {
            let k = 4 * n - 2 * j as i64;
            a.add(lbl("u", j, "", k), f.u(j, all.clone(), &id, k));
        }
        for j in 0..(2 * n) as usize {
            let k = 4 * n - 2 * j as i64 - 1;
            a.add(lbl("p", j, "", k), f.p(j, &id, k));
        }
        a.add(lbl("eta", 0, "", 4 * n - 1), f.eta(0, &id, 4.0 * nf - 1.0));
        for j in 1..=(2 * n) as usize {
            let s = 4.0 * nf - 2.0 * j as f64;
            a.add(lbl("eta", j, "", s), f.eta(j, &id, s));
        }
        a.finish()
    };

    let d_high = {
        let mut a = sink.acc("D_high");
        a.add(lbl("u", 0, "", 4 * n), f.u(0, all.clone(), &id, 4 * n));
        for j in 1..=(2 * n) as usize {
            let k = 4 * n - 2 * j as i64 + 1;
            a.add(lbl("u", j, "", k), f.u(j, all.clone(), &id, k));
        }
        a.add(lbl("p", 0, "grad", 4 * n - 2), f.p(0, &full(d, 1), 4 * n - 2));
        for j in 1..(2 * n) as usize {
            let k = 4 * n - 2 * j as i64;
            a.add(lbl("p", j, "", k), f.p(j, &id, k));
        }
        a.add(lbl("eta", 0, "D", 4.0 * nf - 2.5), f.eta(0, &horiz(d, 1), 4.0 * nf - 2.5));
        a.add(lbl("eta", 1, "", 4.0 * nf - 1.5), f.eta(1, &id, 4.0 * nf - 1.5));
        for j in 2..=(2 * n + 1) as usize {
            let s = 4.0 * nf - 2.0 * j as f64 + 2.5;
            a.add(lbl("eta", j, "", s), f.eta(j, &id, s));
        }
        a.finish()
    };

    let e_plus = {
        let mut a = sink.acc("E_plus");
        a.add(lbl("eta", 0, "", 4.0 * nf), f.eta(0, &id, 4.0 * nf));
        a.finish()
    };

    let d_plus = {
        let mut a = sink.acc("D_plus");
        a.add(lbl("u", 0, "", 4 * n + 1), f.u(0, all.clone(), &id, 4 * n + 1));
        a.add(lbl("p", 0, "grad", 4 * n - 1), f.p(0, &full(d, 1), 4 * n - 1));
        a.add(lbl("eta", 0, "D", 4.0 * nf - 1.5), f.eta(0, &horiz(d, 1), 4.0 * nf - 1.5));
        a.add(lbl("eta", 1, "", 4.0 * nf - 0.5), f.eta(1, &id, 4.0 * nf - 0.5));
        a.finish()
    };

    let f_fun = {
        let mut a = sink.acc("F");
        a.add(lbl("eta", 0, "", params.s_f()), f.eta(0, &id, params.s_f()));
        a.finish()
    };

    let e_min = {
        let mut a = sink.acc("E_min");
        a.add(lbl("u_h", 0, "D", 2 * m - 1), f.u(0, 0..h, &horiz(d, 1), 2 * m - 1));
        a.add(lbl("u_d", 0, "", 2 * m), f.u(0, h..d, &id, 2 * m));
        a.add(lbl("u", 0, "grad3", 2 * m - 3), f.u(0, all.clone(), &full(d, 3), 2 * m - 3));
        for j in 1..=m as usize {
            let k = 2 * m - 2 * j as i64;
            a.add(lbl("u", j, "", k), f.u(j, all.clone(), &id, k));
        }
        a.add(lbl("p", 0, "grad2", 2 * m - 3), f.p(0, &full(d, 2), 2 * m - 3));
        a.add(lbl("p", 0, "dd", 2 * m - 2), f.p(0, &vert(d, 1), 2 * m - 2));
        for j in 1..=(m - 1) as usize {
            let k = 2 * m - 2 * j as i64 - 1;
            a.add(lbl("p", j, "", k), f.p(j, &id, k));
        }
        a.add(lbl("eta", 0, "D2", 2.0 * mf - 2.0), f.eta(0, &horiz(d, 2), 2.0 * mf - 2.0));
        for j in 1..=m as usize {
            let s = 2.0 * mf - 2.0 * j as f64;
            a.add(lbl("eta", j, "", s), f.eta(j, &id, s));
        }
        a.finish()
    };

    let d_min = {
        let mut a = sink.acc("D_min");
        a.add(lbl("u_h", 0, "D2", 2 * m - 1), f.u(0, 0..h, &horiz(d, 2), 2 * m - 1));
        a.add(lbl("u_d", 0, "D", 2 * m), f.u(0, h..d, &horiz(d, 1), 2 * m));
        a.add(lbl("u", 0, "grad4", 2 * m - 3), f.u(0, all.clone(), &full(d, 4), 2 * m - 3));
        for j in 1..=m as usize {
            let k = 2 * m - 2 * j as i64 + 1;
            a.add(lbl("u", j, "", k), f.u(j, all.clone(), &id, k));
        }
        a.add(lbl("p", 0, "grad3", 2 * m - 3), f.p(0, &full(d, 3), 2 * m - 3));
        a.add(lbl("p", 0, "D dd", 2 * m - 2), f.p(0, &horiz_vert(d), 2 * m - 2));
        a.add(lbl("p", 1, "grad", 2 * m - 3), f.p(1, &full(d, 1), 2 * m - 3));
        for j in 2..=(m - 1) as usize {
            let k = 2 * m - 2 * j as i64;
            a.add(lbl("p", j, "", k), f.p(j, &id, k));
        }
        a.add(lbl("eta", 0, "D3", 2.0 * mf - 3.5), f.eta(0, &horiz(d, 3), 2.0 * mf - 3.5));
        a.add(lbl("eta", 1, "D", 2.0 * mf - 1.5), f.eta(1, &horiz(d, 1), 2.0 * mf - 1.5));
        for j in 2..=(m + 1) as usize {
            let s = 2.0 * mf - 2.0 * j as f64 + 2.5;
            a.add(lbl("eta", j, "", s), f.eta(j, &id, s));
        }
        a.finish()
    };

    // tangential functionals: horizontal and time derivatives, the time
    // derivative counting twice
    let spacetime_u = |f: &mut Fields, a: &mut Acc, lo: i64, hi: i64, shift: usize, k: i64| {
        for a0 in 0..=(hi / 2) {
            let hlo = (lo - 2 * a0).max(0) as usize;
            let hhi = hi - 2 * a0;
            if hhi < 0 || (hlo as i64) > hhi {
                continue;
            }
            let j = a0 as usize + shift;
            let o = horiz_upto(d, hlo, hhi as usize);
            a.add(lbl("u", j, &format!("D^{hlo}..{hhi}"), k), f.u(j, 0..d, &o, k));
        }
    };
    let spacetime_eta = |f: &Fields, a: &mut Acc, lo: i64, hi: i64, shift: usize| {
        for a0 in 0..=(hi / 2) {
            let hlo = (lo - 2 * a0).max(0) as usize;
            let hhi = hi - 2 * a0;
            if hhi < 0 || (hlo as i64) > hhi {
                continue;
            }
            let j = a0 as usize + shift;
            let o = horiz_upto(d, hlo, hhi as usize);
            a.add(lbl("eta", j, &format!("D^{hlo}..{hhi}"), 0), f.eta(j, &o, 0.0));
        }
    };

    let e_bar = {
        let mut a = sink.acc("E_bar");
        let o = horiz_upto(d, 0, (4 * n - 1) as usize);
        a.add(lbl("u", 0, &format!("D^0..{}", 4 * n - 1), 0), f.u(0, 0..d, &o, 0));
        spacetime_u(&mut f, &mut a, 0, 4 * n - 2, 1, 0);
        a.add(lbl("eta", 0, &format!("D^0..{}", 4 * n - 1), 0), f.eta(0, &o, 0.0));
        spacetime_eta(&f, &mut a, 0, 4 * n - 2, 1);
        a.finish()
    };
    let d_bar = {
        let mut a = sink.acc("D_bar");
        let o = horiz_upto(d, 0, (4 * n - 1) as usize);
        a.add(lbl("u", 0, &format!("D^0..{}", 4 * n - 1), 1), f.u(0, 0..d, &o, 1));
        spacetime_u(&mut f, &mut a, 0, 4 * n - 2, 1, 1);
        a.finish()
    };
    let e_bar_low = {
        let mut a = sink.acc("E_bar_low");
        spacetime_u(&mut f, &mut a, 2, 2 * m, 0, 0);
        spacetime_eta(&f, &mut a, 2, 2 * m, 0);
        a.finish()
    };
    let d_bar_low = {
        let mut a = sink.acc("D_bar_low");
        spacetime_u(&mut f, &mut a, 2, 2 * m, 0, 1);
        a.finish()
    };

    let Pointwise { k_frak, k_bar, k_cal, .. } = pointwise_functionals(&layers.u[0]);
    Ok(EnergyReport {
        t: layers.t,
        E_high: e_high,
        D_high: d_high,
        E_bar: e_bar,
        D_bar: d_bar,
        E_bar_low: e_bar_low,
        D_bar_low: d_bar_low,
        E_min: e_min,
        D_min: d_min,
        E_plus: e_plus,
        D_plus: d_plus,
        F: f_fun,
        K_frak: k_frak,
        K_bar: k_bar,
        K_cal: k_cal,
        params: *params,
        terms: sink.terms,
        omitted: sink.omitted,
    })
}
