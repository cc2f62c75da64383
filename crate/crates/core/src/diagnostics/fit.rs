//! Least-squares power-law fits on log–log data.

use serde::Serialize;

use crate::error::{Error, Result};

/// OLS slope of `ln y` against `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    Ok(ols(&logs(x, "abscissa")?, &logs(y, "value")?)?.0)
}

fn logs(v: &[f64], what: &str) -> Result<Vec<f64>> {
    v.iter()
        .map(|&a| {
            if a > 0.0 && a.is_finite() {
                Ok(a.ln())
            } else {
                Err(Error::NonPositiveData(format!("{what} {a} cannot be fitted on a log scale")))
            }
        })
        .collect()
}

/// `(slope, intercept, slope standard error)`.
fn ols(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64)> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return Err(Error::InsufficientData(format!("need at least two points to fit, got {n}")));
    }
    let nf = n as f64;
    let (mx, my) = (x.iter().sum::<f64>() / nf, y.iter().sum::<f64>() / nf);
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("abscissae are all equal".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let stderr = if n > 2 {
        let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
        (rss / (nf - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok((slope, intercept, stderr))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DecayFit {
    /// Exponent `s` in `value ≈ c (1+t)^s`.
    pub slope: f64,
    pub stderr: f64,
    pub prefactor: f64,
    pub points: usize,
    /// Half-window slopes differ by less than 10% of the slope (at least 0.1).
    pub power_law: bool,
    /// Slope on the first and second half of the window.
    pub half_slopes: (f64, f64),
}

/// Fit `ln value` against `ln(1+t)` over samples with `t` in `window`.
pub fn fit_decay(series: &[(f64, f64)], window: (f64, f64)) -> Result<DecayFit> {
    let pts: Vec<(f64, f64)> =
        series.iter().copied().filter(|&(t, _)| t >= window.0 && t <= window.1).collect();
    if pts.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "{} samples in the window [{}, {}]",
            pts.len(),
            window.0,
            window.1
        )));
    }
    let x: Vec<f64> = pts.iter().map(|&(t, _)| (1.0 + t).ln()).collect();
    let y = logs(&pts.iter().map(|&(_, v)| v).collect::<Vec<_>>(), "value")?;
    let (slope, intercept, stderr) = ols(&x, &y)?;
    // split at the midpoint in log time
    let mid = 0.5 * (x[0] + x[x.len() - 1]);
    let half = |keep: &dyn Fn(f64) -> bool| -> f64 {
        let (hx, hy): (Vec<f64>, Vec<f64>) = x.iter().zip(&y).filter(|(a, _)| keep(**a)).map(|(a, b)| (*a, *b)).unzip();
        ols(&hx, &hy).map_or(slope, |r| r.0)
    };
    let half_slopes = (half(&|a| a <= mid), half(&|a| a >= mid));
    let drift = (half_slopes.0 - half_slopes.1).abs();
    Ok(DecayFit {
        slope,
        stderr,
        prefactor: intercept.exp(),
        points: pts.len(),
        power_law: drift <= 0.1 * slope.abs().max(1.0),
        half_slopes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(f: impl Fn(f64) -> f64) -> Vec<(f64, f64)> {
        (0..200).map(|i| {
            let t = 10.0 + i as f64;
            (t, f(t))
        })
        .collect()
    }

    #[test]
    fn recovers_exact_power_law() {
        let fit = fit_decay(&sample(|t| 3.0 * (1.0 + t).powf(-2.0)), (10.0, 200.0)).unwrap();
        assert!((fit.slope + 2.0).abs() < 1e-6);
        assert!((fit.prefactor - 3.0).abs() < 1e-6);
        assert!(fit.power_law);
    }

    #[test]
    fn exponential_is_flagged() {
        let fit = fit_decay(&sample(|t| (-0.05 * t).exp()), (10.0, 200.0)).unwrap();
        assert!(!fit.power_law);
        assert!(fit.stderr > 0.05, "{fit:?}");
    }

    #[test]
    fn rejects_non_positive_values() {
        let mut s = sample(|t| 1.0 / t);
        s[5].1 = 0.0;
        assert!(matches!(fit_decay(&s, (0.0, 1e3)), Err(Error::NonPositiveData(_))));
    }

    #[test]
    fn log_log_slope_of_monomial() {
        let x = [0.1, 0.05, 0.025];
        let y: Vec<f64> = x.iter().map(|v| 7.0 * v * v).collect();
        assert!((log_log_slope(&x, &y).unwrap() - 2.0).abs() < 1e-12);
    }
}
