//! Seeded, band-limited random states for identity checks and ensembles.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::discretization::{BulkField, Grid, SurfaceFunction};

/// Named spectrum: Fourier modes up to `max_mode` in each horizontal
/// direction with amplitudes `e^{−decay |m|}`, Chebyshev degree up to
/// `vertical_degree` in `z`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Spectrum {
    pub max_mode: usize,
    pub decay: f64,
    pub vertical_degree: usize,
}

impl Default for Spectrum {
    fn default() -> Self {
        Self { max_mode: 4, decay: 0.3, vertical_degree: 5 }
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

struct Mode {
    k: [f64; 2],
    cos: f64,
    sin: f64,
}

fn modes(grid: &Grid, rng: &mut ChaCha8Rng, spec: &Spectrum, with_mean: bool) -> Vec<Mode> {
    let two = grid.horizontal_dims() == 2;
    let m2max = if two { spec.max_mode as i64 } else { 0 };
    let mut out = Vec::new();
    for m1 in 0..=spec.max_mode as i64 {
        for m2 in -m2max..=m2max {
            if m1 == 0 && m2 < 0 {
                continue;
            }
            if m1 == 0 && m2 == 0 && !with_mean {
                continue;
            }
            let norm = ((m1 * m1 + m2 * m2) as f64).sqrt();
            let w = (-spec.decay * norm).exp();
            let k = [2.0 * PI * m1 as f64 / grid.period(0), if two { 2.0 * PI * m2 as f64 / grid.period(1) } else { 0.0 }];
            out.push(Mode { k, cos: w * rng.gen_range(-1.0..1.0), sin: w * rng.gen_range(-1.0..1.0) });
        }
    }
    out
}

fn eval_modes(modes: &[Mode], x: &[f64], two: bool) -> f64 {
    modes
        .iter()
        .map(|m| {
            let ph = m.k[0] * x[0] + if two { m.k[1] * x[1] } else { 0.0 };
            m.cos * ph.cos() + m.sin * ph.sin()
        })
        .sum()
}

/// Zero-mean random surface function scaled so `sup|η| = amplitude`.
pub fn random_surface(grid: &Arc<Grid>, rng: &mut ChaCha8Rng, spec: &Spectrum, amplitude: f64) -> SurfaceFunction {
    let ms = modes(grid, rng, spec, false);
    let two = grid.horizontal_dims() == 2;
    let f = SurfaceFunction::from_fn(grid, |x| eval_modes(&ms, x, two));
    let s = f.sup();
    if s == 0.0 || amplitude == 0.0 {
        SurfaceFunction::zeros(grid)
    } else {
        f.scale(amplitude / s)
    }
}

/// Random bulk field: a sum of horizontal modes, each with its own random
/// vertical polynomial. With `vanish_at_bottom` the field is multiplied by
/// `1 + z/b` so it is zero on `Σ_b`. Scaled to `sup = amplitude`.
pub fn random_bulk(
    grid: &Arc<Grid>,
    rng: &mut ChaCha8Rng,
    spec: &Spectrum,
    amplitude: f64,
    vanish_at_bottom: bool,
) -> BulkField {
    let two = grid.horizontal_dims() == 2;
    let h = grid.horizontal_dims();
    let b = grid.depth();
    let nvert = spec.vertical_degree + 1;
    // one mode set per vertical Chebyshev degree
    let per_degree: Vec<Vec<Mode>> = (0..nvert)
        .map(|n| {
            let mut ms = modes(grid, rng, spec, true);
            let damp = 0.5f64.powi(n as i32);
            for m in ms.iter_mut() {
                m.cos *= damp;
                m.sin *= damp;
            }
            ms
        })
        .collect();
    let f = BulkField::from_fn(grid, |x| {
        let s = 1.0 + 2.0 * x[h] / b;
        // T_n(s) by recurrence
        let (mut t0, mut t1) = (1.0, s);
        let mut acc = 0.0;
        for (n, ms) in per_degree.iter().enumerate() {
            let tn = match n {
                0 => 1.0,
                1 => s,
                _ => {
                    let t2 = 2.0 * s * t1 - t0;
                    t0 = t1;
                    t1 = t2;
                    t2
                }
            };
            acc += tn * eval_modes(ms, x, two);
        }
        if vanish_at_bottom {
            acc * (1.0 + x[h] / b)
        } else {
            acc
        }
    });
    let s = f.sup();
    if s == 0.0 || amplitude == 0.0 {
        BulkField::zeros(grid)
    } else {
        f.scale(amplitude / s)
    }
}

/// A random velocity field that vanishes on the bottom.
pub fn random_velocity(grid: &Arc<Grid>, rng: &mut ChaCha8Rng, spec: &Spectrum, amplitude: f64) -> Vec<BulkField> {
    (0..grid.dim()).map(|_| random_bulk(grid, rng, spec, amplitude, true)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproducible_and_normalized() {
        let g = Grid::new_2d(32, 10.0, 9, 1.0).unwrap();
        let spec = Spectrum::default();
        let a = random_surface(&g, &mut rng(7), &spec, 0.1);
        let b = random_surface(&g, &mut rng(7), &spec, 0.1);
        assert_eq!(a.values(), b.values());
        assert!((a.sup() - 0.1).abs() < 1e-15);
        assert!(a.mean().abs() < 1e-15);
        let u = random_bulk(&g, &mut rng(3), &spec, 1.0, true);
        assert!(u.bottom_trace().sup() < 1e-14);
    }

    #[test]
    fn three_dimensional_states() {
        let g = Grid::new_3d(16, 16, 5.0, 5.0, 7, 1.0).unwrap();
        let u = random_velocity(&g, &mut rng(1), &Spectrum { max_mode: 3, ..Default::default() }, 0.5);
        assert_eq!(u.len(), 3);
        assert!(u.iter().all(|c| (c.sup() - 0.5).abs() < 1e-14));
    }
}
