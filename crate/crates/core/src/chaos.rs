//! Centered level-2 sums, weighted second-chaos sums and rate studies.

use serde::Serialize;

use crate::controlled::{FunctionSpec, Potential};
use crate::covariance::{CovarianceGrid, CovarianceModel};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::grid::GridFunction1D;
use crate::roughlift::{lift_level2, RoughLift};
use crate::simulate::{PathSampler, Sampler};
use crate::stats::{lq_norm, ols};

/// `F^{ij}_{t_k} = sum_{l<k} (x2^{ij}_l - E x2^{ij}_l)`, with `F_0 = 0`.
#[derive(Debug, Clone)]
pub struct FProcess {
    pub dim: usize,
    pub n: usize,
    /// `values[i * dim + j][k]`
    pub values: Vec<Vec<f64>>,
}

impl FProcess {
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[i * self.dim + j][k]
    }

    /// `F_{t_b} - F_{t_a}`.
    pub fn delta(&self, i: usize, j: usize, a: usize, b: usize) -> f64 {
        self.get(i, j, b) - self.get(i, j, a)
    }
}

pub fn f_process(lift: &RoughLift, means: &[Vec<f64>]) -> Result<FProcess> {
    let n = lift.n();
    let d = lift.dim;
    if means.len() != n || means.iter().any(|m| m.len() != d * d) {
        return Err(Error::shape("level-2 means do not match the lift"));
    }
    let mut values = vec![vec![0.0; n + 1]; d * d];
    for (c, v) in values.iter_mut().enumerate() {
        for k in 0..n {
            v[k + 1] = v[k] + (lift.x2[k][c] - means[k][c]);
        }
    }
    Ok(FProcess { dim: d, n, values })
}

/// `sum_{a <= k < b} f(t_k) (F^{ij}_{t_{k+1}} - F^{ij}_{t_k})`.
pub fn weighted_sum(f: &GridFunction1D, big_f: &FProcess, i: usize, j: usize, a: usize, b: usize) -> Result<f64> {
    if f.grid.n != big_f.n || b > big_f.n || a > b || i >= big_f.dim || j >= big_f.dim {
        return Err(Error::shape("weight, F process and range do not match"));
    }
    Ok((a..b).map(|k| f.values[k] * big_f.delta(i, j, k, k + 1)).sum())
}

/// Exact `E[(delta F^{ii}_{t_a t_b})^2] = (1/2) sum_{k,l} (R^{t_k t_{k+1}}_{t_l t_{l+1}})^2`.
pub fn chaos_second_moment(cg: &CovarianceGrid, a: usize, b: usize) -> f64 {
    0.25 * squared_cell_moment(cg, a, b)
}

/// `2 sum_{k,l} (R^{t_k t_{k+1}}_{t_l t_{l+1}})^2`, the second moment of
/// `sum_k [(x_{t_{k+1}} - x_{t_k})^2 - E(x_{t_{k+1}} - x_{t_k})^2]`.
pub fn squared_cell_moment(cg: &CovarianceGrid, a: usize, b: usize) -> f64 {
    let mut s = 0.0;
    for k in a..b {
        for l in a..b {
            s += cg.cell(k, l).powi(2);
        }
    }
    2.0 * s
}

#[derive(Debug, Clone, Copy)]
pub struct RateOptions {
    pub kappa: usize,
    pub dim: usize,
    pub pair: (usize, usize),
    pub exec: Exec,
}

impl Default for RateOptions {
    fn default() -> Self {
        Self { kappa: 1, dim: 1, pair: (0, 0), exec: Exec::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateRow {
    pub n: usize,
    pub i: usize,
    pub j: usize,
    pub q: f64,
    pub norm_estimate: f64,
    #[serde(rename = "SE")]
    pub se: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RateStudy {
    pub rows: Vec<RateRow>,
    pub slope: f64,
    #[serde(rename = "slope_SE")]
    pub slope_se: f64,
    pub predicted_slope: f64,
    pub intercept: f64,
}

/// Predicted exponent of `n` in `||delta F_{0T}||_q`.
pub fn predicted_slope(rho: f64, diagonal: bool) -> f64 {
    let beta = if diagonal { (1.0 / (1.02 * rho)).min(1.0) } else { (1.0 / rho).min(1.0) };
    -(beta - 0.5)
}

/// Fits `ln ||delta F^{ij}_{0T}||_q` (or of the weighted sum with weight
/// `d_{ij} f(x)` when `weight` is given) against `ln n`.
pub fn rate_study(
    model: &CovarianceModel,
    n_list: &[usize],
    count: usize,
    q: f64,
    weight: Option<&FunctionSpec>,
    seed: u64,
    opts: RateOptions,
) -> Result<RateStudy> {
    if n_list.len() < 3 {
        return Err(Error::domain(format!("rate fit needs at least 3 values of n, got {}", n_list.len())));
    }
    if n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::domain("n values must be increasing"));
    }
    let ratio = n_list[1] as f64 / n_list[0] as f64;
    if n_list.windows(2).any(|w| ((w[1] as f64 / w[0] as f64) - ratio).abs() > 1e-9 * ratio) {
        return Err(Error::domain("n values must form a geometric sequence"));
    }
    if count < 100 {
        return Err(Error::domain(format!("rate study needs M >= 100, got {count}")));
    }
    if q != 2.0 && q != 4.0 {
        return Err(Error::domain(format!("moment order must be 2 or 4, got {q}")));
    }
    let (i, j) = opts.pair;
    if i >= opts.dim || j >= opts.dim || opts.kappa == 0 {
        return Err(Error::domain("component pair outside the driver dimension"));
    }
    if let Some(w) = weight {
        if opts.dim < w.min_dim() {
            return Err(Error::domain(format!("weight `{w}` needs d >= {}", w.min_dim())));
        }
    }
    let rho = model.rho()?;
    let mut rows = Vec::with_capacity(n_list.len());
    let mut logs = Vec::new();
    let mut log_se = Vec::new();
    for &n in n_list {
        let sampler = PathSampler::new(model, n * opts.kappa, Sampler::Auto)?;
        let means = crate::roughlift::level2_mean(model, sampler.grid().coarsen(opts.kappa)?, opts.dim)?;
        let values = opts.exec.try_map(count, |m| -> Result<f64> {
            let fine = sampler.path(seed, m, opts.dim);
            let lift = lift_level2(&fine, n)?;
            let big_f = f_process(&lift, &means)?;
            match weight {
                None => Ok(big_f.delta(i, j, 0, n)),
                Some(w) => {
                    let coarse = fine.coarsen(opts.kappa)?;
                    let vals = (0..=n).map(|k| w.hessian(&coarse.at(k))[i * opts.dim + j]).collect();
                    let g = GridFunction1D::new(coarse.grid, vals)?;
                    weighted_sum(&g, &big_f, i, j, 0, n)
                }
            }
        })?;
        let est = lq_norm(&values, q);
        rows.push(RateRow { n, i, j, q, norm_estimate: est.value, se: est.se });
        logs.push(est.value.ln());
        log_se.push(est.log_se);
    }
    let x: Vec<f64> = n_list.iter().map(|&n| (n as f64).ln()).collect();
    let fit = ols(&x, &logs, &log_se)?;
    Ok(RateStudy {
        rows,
        slope: fit.slope,
        slope_se: fit.slope_se,
        predicted_slope: predicted_slope(rho, i == j),
        intercept: fit.intercept,
    })
}
