//! Monte Carlo summaries and log-log rate fits.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub sd: f64,
    /// Standard error of the mean.
    pub se: f64,
}

impl Summary {
    pub fn of(xs: &[f64]) -> Summary {
        let m = xs.len();
        let mean = xs.iter().sum::<f64>() / m as f64;
        let var = if m > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1) as f64 } else { 0.0 };
        let sd = var.sqrt();
        Summary { count: m, mean, sd, se: sd / (m as f64).sqrt() }
    }

    /// `|mean - target| <= k * se`.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.se
    }
}

/// Estimate of `||X||_q = E[|X|^q]^(1/q)` with a delta-method standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormEstimate {
    pub q: f64,
    pub value: f64,
    pub se: f64,
    /// Standard error of `ln value`.
    pub log_se: f64,
}

pub fn lq_norm(xs: &[f64], q: f64) -> NormEstimate {
    let powers: Vec<f64> = xs.iter().map(|x| x.abs().powf(q)).collect();
    let s = Summary::of(&powers);
    let value = s.mean.powf(1.0 / q);
    let log_se = if s.mean > 0.0 { s.se / (q * s.mean) } else { 0.0 };
    NormEstimate { q, value, se: value * log_se, log_se }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Propagated from the per-point standard errors of `y`.
    pub slope_se: f64,
    /// From the scatter of the residuals around the line.
    pub residual_slope_se: f64,
}

/// Ordinary least squares of `y` on `x`.
pub fn ols(x: &[f64], y: &[f64], y_se: &[f64]) -> Result<LineFit> {
    let n = x.len();
    if n < 3 {
        return Err(Error::domain(format!("rate fit needs at least 3 points, got {n}")));
    }
    if y.len() != n || y_se.len() != n {
        return Err(Error::shape("fit inputs have different lengths"));
    }
    let xm = x.iter().sum::<f64>() / n as f64;
    let ym = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|a| (a - xm).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::domain("rate fit needs distinct abscissae"));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - xm) * (b - ym)).sum();
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let var: f64 = x.iter().zip(y_se).map(|(a, s)| ((a - xm) / sxx).powi(2) * s * s).sum();
    let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    Ok(LineFit {
        slope,
        intercept,
        slope_se: var.sqrt(),
        residual_slope_se: (rss / (n - 2) as f64 / sxx).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_and_norm() {
        let s = Summary::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        assert!((s.sd - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        let n = lq_norm(&[3.0, -3.0], 2.0);
        assert_eq!(n.value, 3.0);
        assert_eq!(n.se, 0.0);
    }

    #[test]
    fn exact_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, -1.0, -3.0, -5.0];
        let f = ols(&x, &y, &[0.1; 4]).unwrap();
        assert!((f.slope + 2.0).abs() < 1e-14 && (f.intercept - 1.0).abs() < 1e-14);
        assert!((f.slope_se - 0.1 / 5f64.sqrt()).abs() < 1e-15);
        assert!(ols(&x[..2], &y[..2], &[0.1; 2]).is_err());
    }
}
