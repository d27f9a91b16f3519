//! Convergence of the step-function discretization `y^pi` of an integrand.

use serde::Serialize;

use crate::controlled::{FunctionSpec, Potential};
use crate::covariance::CovarianceModel;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::grid::GridFunction2D;
use crate::quadrature::{sum_4d, Iteration};
use crate::simulate::{PathSampler, Sampler};
use crate::stats::Summary;

#[derive(Debug, Clone, Copy)]
pub struct DpiOptions {
    /// Fine grid is `kappa * max(n_list)`.
    pub kappa: usize,
    pub dim: usize,
    /// Also estimate `E ||D y^pi - D y||^2` (cubic cost in the fine grid).
    pub with_malliavin: bool,
    pub exec: Exec,
}

impl Default for DpiOptions {
    fn default() -> Self {
        Self { kappa: 4, dim: 1, with_malliavin: false, exec: Exec::default() }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DpiRow {
    pub n: usize,
    pub y_norm2: Summary,
    pub d_norm2: Option<Summary>,
}

/// Monte Carlo estimates of `E ||y^pi - y||^2_H` (and optionally of the
/// Malliavin counterpart) for `y = grad f(x)` and each `n` in `n_list`. All
/// `n` share the same fine paths.
pub fn dpi_convergence(
    spec: &FunctionSpec,
    model: &CovarianceModel,
    n_list: &[usize],
    count: usize,
    seed: u64,
    opts: DpiOptions,
) -> Result<Vec<DpiRow>> {
    let n_max = *n_list.iter().max().ok_or_else(|| Error::domain("empty n list"))?;
    if opts.kappa == 0 || opts.dim < spec.min_dim() || count == 0 {
        return Err(Error::domain("dpi_convergence needs kappa >= 1, M >= 1 and a valid dimension"));
    }
    let big_n = opts.kappa * n_max;
    if let Some(&bad) = n_list.iter().find(|&&n| n == 0 || big_n % n != 0) {
        return Err(Error::shape(format!("n = {bad} does not divide the fine grid of {big_n} steps")));
    }
    let d = opts.dim;
    let sampler = PathSampler::new(model, big_n, Sampler::Auto)?;
    let cg = model.on_grid(big_n)?;
    let cells = cg.cell_matrix();
    let per_path = opts.exec.try_map(count, |m| -> Result<Vec<(f64, f64)>> {
        let path = sampler.path(seed, m, d);
        let pts: Vec<Vec<f64>> = (0..=big_n).map(|a| path.at(a)).collect();
        let grads: Vec<Vec<f64>> = pts.iter().map(|x| spec.gradient(x)).collect();
        let hess: Vec<Vec<f64>> = if opts.with_malliavin { pts.iter().map(|x| spec.hessian(x)).collect() } else { Vec::new() };
        let mut out = Vec::with_capacity(n_list.len());
        for &n in n_list {
            let step = big_n / n;
            let proj = |a: usize| (a / step) * step;
            let mut ynorm = 0.0;
            let mut g = vec![0.0; big_n];
            for i in 0..d {
                for (a, v) in g.iter_mut().enumerate() {
                    *v = grads[proj(a)][i] - grads[a][i];
                }
                for a in 0..big_n {
                    if g[a] != 0.0 {
                        let row = &cells[a * big_n..(a + 1) * big_n];
                        ynorm += g[a] * row.iter().zip(&g).map(|(r, b)| r * b).sum::<f64>();
                    }
                }
            }
            let mut dnorm = 0.0;
            if opts.with_malliavin {
                let fine = cg.grid;
                for i in 0..d {
                    for j in 0..d {
                        let mut vals = vec![0.0; (big_n + 1) * (big_n + 1)];
                        for u in 0..=big_n {
                            for s in 0..=big_n {
                                let p = proj(s);
                                let a = if u <= p { hess[p][i * d + j] } else { 0.0 };
                                let b = if u <= s { hess[s][i * d + j] } else { 0.0 };
                                vals[u * (big_n + 1) + s] = a - b;
                            }
                        }
                        let gf = GridFunction2D::new(fine, fine, vals)?;
                        let cell = |a: usize, b: usize| cells[a * big_n + b];
                        let full = (0, big_n);
                        dnorm += sum_4d(&gf, &gf, &cell, [full; 4], Iteration::InnerFirst);
                    }
                }
            }
            out.push((ynorm, dnorm));
        }
        Ok(out)
    })?;
    Ok(n_list
        .iter()
        .enumerate()
        .map(|(c, &n)| {
            let ys: Vec<f64> = per_path.iter().map(|p| p[c].0).collect();
            let ds: Vec<f64> = per_path.iter().map(|p| p[c].1).collect();
            DpiRow { n, y_norm2: Summary::of(&ys), d_norm2: opts.with_malliavin.then(|| Summary::of(&ds)) }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_integrand_is_exact() {
        let m = CovarianceModel::fbm(0.45, 1.0).unwrap();
        let opts = DpiOptions { kappa: 2, dim: 1, with_malliavin: true, exec: Exec::Sequential };
        let rows = dpi_convergence(&FunctionSpec::Linear, &m, &[4, 8], 5, 1, opts).unwrap();
        for r in rows {
            assert_eq!(r.y_norm2.mean, 0.0);
            assert_eq!(r.d_norm2.unwrap().mean, 0.0);
        }
    }

    #[test]
    fn finer_steps_are_closer() {
        let m = CovarianceModel::fbm(0.45, 1.0).unwrap();
        let opts = DpiOptions { kappa: 2, dim: 1, with_malliavin: true, exec: Exec::Sequential };
        let rows = dpi_convergence(&FunctionSpec::Quadratic, &m, &[4, 16], 20, 2, opts).unwrap();
        assert!(rows[1].y_norm2.mean < rows[0].y_norm2.mean);
        assert!(rows[1].d_norm2.unwrap().mean < rows[0].d_norm2.unwrap().mean);
        assert!(rows.iter().all(|r| r.y_norm2.mean >= 0.0));
    }
}
