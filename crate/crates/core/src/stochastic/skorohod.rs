//! Discrete Skorohod integrals and the duality with the Malliavin derivative.

use serde::Serialize;

use crate::controlled::{range_indices, ControlledPath, FunctionSpec, Potential};
use crate::covariance::{CovarianceGrid, CovarianceModel};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::grid::GridFunction1D;
use crate::quadrature::Interval;
use crate::simulate::{GridPath, PathSampler, Sampler};
use crate::stats::Summary;

use super::malliavin::MalliavinField;

/// `sum_{l<k} R^{t_l t_{l+1}}_{t_k t_{k+1}}` for each `k`, i.e.
/// `<1_{[0,t_k]}, 1_{[t_k,t_{k+1}]}>`.
pub(crate) fn lower_sums(cg: &CovarianceGrid) -> Vec<f64> {
    let n = cg.grid.n;
    (0..n).map(|k| (0..k).map(|l| cg.cell(l, k)).sum()).collect()
}

/// `<D^i y^i_{t_k} 1_{[0,t_k]}, 1_{[t_k,t_{k+1}]}>` summed over `i`.
pub(crate) fn correction_inner(d_field: &MalliavinField, cg: &CovarianceGrid, lower: &[f64], k: usize) -> f64 {
    let dim = d_field.dim();
    match d_field {
        MalliavinField::Gradient { hess, .. } => (0..dim).map(|i| hess[k][i * dim + i]).sum::<f64>() * lower[k],
        MalliavinField::Dense { .. } => {
            let mut s = 0.0;
            for i in 0..dim {
                for l in 0..k {
                    s += d_field.get(i, i, l, k) * cg.cell(l, k);
                }
            }
            s
        }
    }
}

pub(crate) fn check_shapes(y: &ControlledPath, d_field: &MalliavinField, path: &GridPath) -> Result<()> {
    if d_field.n() != y.grid.n || d_field.dim() != y.dim || path.grid != y.grid || path.dim() != y.dim {
        return Err(Error::shape("integrand, Malliavin field and path are on different grids"));
    }
    Ok(())
}

/// `sum_i sum_k [y^i_{t_k} x^i_{t_k t_{k+1}} - <D^i y^i_{t_k} 1_{[0,t_k]}, 1_{[t_k,t_{k+1}]}>]`
/// over the cells of `range`.
pub fn skorohod_discrete(
    y: &ControlledPath,
    d_field: &MalliavinField,
    path: &GridPath,
    model: &CovarianceModel,
    range: Interval,
) -> Result<f64> {
    check_shapes(y, d_field, path)?;
    let (a, b) = range_indices(&y.grid, range)?;
    let cg = CovarianceGrid::new(model, y.grid)?;
    let lower = lower_sums(&cg);
    Ok(skorohod_indexed(y, d_field, path, &cg, &lower, a, b))
}

pub(crate) fn skorohod_indexed(
    y: &ControlledPath,
    d_field: &MalliavinField,
    path: &GridPath,
    cg: &CovarianceGrid,
    lower: &[f64],
    a: usize,
    b: usize,
) -> f64 {
    let mut s = 0.0;
    for k in a..b {
        for i in 0..y.dim {
            s += y.y[k][i] * (path.values[i][k + 1] - path.values[i][k]);
        }
        s -= correction_inner(d_field, cg, lower, k);
    }
    s
}

#[derive(Debug, Clone, Serialize)]
pub struct DualityResult {
    /// `F delta(h)`
    pub lhs: Summary,
    /// `<DF, h>`
    pub rhs: Summary,
    pub diff: Summary,
}

/// Monte Carlo check of `E[F delta(h)] = E[<DF, h>]` for `F = f(x_T)` with a
/// one-dimensional driver and a deterministic step function `h`.
pub fn duality_check(
    model: &CovarianceModel,
    f: &FunctionSpec,
    h: &GridFunction1D,
    count: usize,
    seed: u64,
    exec: Exec,
) -> Result<DualityResult> {
    let grid = h.grid;
    let n = grid.n;
    let cg = CovarianceGrid::new(model, grid)?;
    // <1_{[0,T]}, h>
    let pairing: f64 = (0..n).map(|k| h.values[k] * (cg.r(n, k + 1) - cg.r(n, k))).sum();
    let sampler = PathSampler::new(model, n, Sampler::Auto)?;
    let rows = exec.map(count, |m| {
        let x = sampler.component(seed, m, 0);
        let delta: f64 = (0..n).map(|k| h.values[k] * (x[k + 1] - x[k])).sum();
        let xt = [x[n]];
        let lhs = f.value(&xt) * delta;
        let rhs = f.gradient(&xt)[0] * pairing;
        (lhs, rhs)
    });
    let lhs: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let rhs: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let diff: Vec<f64> = rows.iter().map(|r| r.0 - r.1).collect();
    Ok(DualityResult { lhs: Summary::of(&lhs), rhs: Summary::of(&rhs), diff: Summary::of(&diff) })
}
