//! Trace and simplex corrections between the rough and the Skorohod integral.

use serde::Serialize;

use crate::controlled::{from_gradient, range_indices, rough_integral_indexed, ControlledPath, FunctionSpec};
use crate::covariance::{CovarianceGrid, CovarianceModel};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::quadrature::Interval;
use crate::roughlift::lift_level2;
use crate::simulate::{PathSampler, Sampler};
use crate::stats::{lq_norm, Summary};

use super::malliavin::{malliavin_of_gradient, MalliavinField};
use super::skorohod::{lower_sums, skorohod_indexed};

/// The four pieces of the identity for one path, and the residual
/// `strat - sko - trace_term - simplex_term`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrectionReport {
    pub path_id: usize,
    pub seed: u64,
    pub n: usize,
    pub kappa: usize,
    pub strat: f64,
    pub sko: f64,
    pub trace_term: f64,
    pub simplex_term: f64,
    pub residual: f64,
    /// Centered second-chaos part `sum_k yx_k (x2_k - E x2_k)`.
    pub chaos_sum: f64,
    /// `residual - chaos_sum`: pure quadrature and rounding discrepancy.
    pub quadrature_gap: f64,
}

fn require_second_order<'a>(y: &ControlledPath, d_field: Option<&'a MalliavinField>) -> Result<&'a MalliavinField> {
    if y.yxx.is_none() {
        return Err(Error::Contract("correction terms need a second-order controlled integrand".into()));
    }
    d_field.ok_or_else(|| Error::Contract("correction terms need the Malliavin derivative of the integrand".into()))
}

/// `(trace_term, simplex_term)` on `[0, t]`.
pub fn correction_terms(
    y: &ControlledPath,
    d_field: Option<&MalliavinField>,
    model: &CovarianceModel,
    t: f64,
) -> Result<(f64, f64)> {
    let d_field = require_second_order(y, d_field)?;
    if d_field.n() != y.grid.n || d_field.dim() != y.dim {
        return Err(Error::shape("integrand and Malliavin field are on different grids"));
    }
    let (_, b) = range_indices(&y.grid, Interval::new(0.0, t))?;
    let cg = CovarianceGrid::new(model, y.grid)?;
    let lower = lower_sums(&cg);
    Ok(terms_indexed(y, d_field, &cg, &lower, b))
}

pub(crate) fn terms_indexed(
    y: &ControlledPath,
    d_field: &MalliavinField,
    cg: &CovarianceGrid,
    lower: &[f64],
    b: usize,
) -> (f64, f64) {
    let dim = y.dim;
    let mut trace = 0.0;
    let mut simplex = 0.0;
    for k in 0..b {
        let dr = cg.diag(k + 1) - cg.diag(k);
        for i in 0..dim {
            trace += y.yx(k, i, i) * dr;
        }
        match d_field {
            MalliavinField::Gradient { hess, .. } => {
                let g: f64 = (0..dim).map(|i| hess[k][i * dim + i] - y.yx(k, i, i)).sum();
                simplex += g * lower[k];
            }
            MalliavinField::Dense { .. } => {
                for l in 0..k {
                    let r = cg.cell(l, k);
                    for i in 0..dim {
                        simplex += (d_field.get(i, i, l, k) - y.yx(k, i, i)) * r;
                    }
                }
            }
        }
    }
    (0.5 * trace, simplex)
}

/// Shared setup for repeated identity checks on one model and grid.
#[derive(Debug)]
pub struct IdentityExperiment {
    pub spec: FunctionSpec,
    pub model: CovarianceModel,
    pub n: usize,
    pub kappa: usize,
    pub dim: usize,
    sampler: PathSampler,
    cov: CovarianceGrid,
    lower: Vec<f64>,
}

impl IdentityExperiment {
    pub fn new(spec: FunctionSpec, model: &CovarianceModel, n: usize, kappa: usize, dim: usize) -> Result<Self> {
        Self::with_sampler(spec, model, n, kappa, dim, Sampler::Auto)
    }

    pub fn with_sampler(
        spec: FunctionSpec,
        model: &CovarianceModel,
        n: usize,
        kappa: usize,
        dim: usize,
        sampler: Sampler,
    ) -> Result<Self> {
        model.require_rho_below(1.5)?;
        if n < 2 || kappa < 1 || dim < spec.min_dim() {
            return Err(Error::domain(format!(
                "need n >= 2, kappa >= 1, d >= {}; got n={n}, kappa={kappa}, d={dim}",
                spec.min_dim()
            )));
        }
        let sampler = PathSampler::new(model, n * kappa, sampler)?;
        let cov = model.on_grid(n)?;
        let lower = lower_sums(&cov);
        Ok(Self { spec, model: model.clone(), n, kappa, dim, sampler, cov, lower })
    }

    pub fn run_path(&self, seed: u64, path_id: usize) -> Result<CorrectionReport> {
        let fine = self.sampler.path(seed, path_id, self.dim);
        let coarse = fine.coarsen(self.kappa)?;
        let lift = lift_level2(&fine, self.n)?;
        let y = from_gradient(&self.spec, &coarse)?;
        let dm = malliavin_of_gradient(&self.spec, &coarse)?;
        let strat = rough_integral_indexed(&y, &lift, 0, self.n);
        let sko = skorohod_indexed(&y, &dm, &coarse, &self.cov, &self.lower, 0, self.n);
        let (trace_term, simplex_term) = terms_indexed(&y, &dm, &self.cov, &self.lower, self.n);
        let residual = strat - sko - trace_term - simplex_term;
        let d = self.dim;
        let mut chaos_sum = 0.0;
        for k in 0..self.n {
            let mean = 0.5 * self.cov.cell(k, k);
            for i in 0..d {
                for j in 0..d {
                    let centered = lift.x2(k, j, i) - if i == j { mean } else { 0.0 };
                    chaos_sum += y.yx(k, i, j) * centered;
                }
            }
        }
        if !residual.is_finite() {
            return Err(Error::Numeric { what: "identity residual".into(), location: format!("path {path_id}") });
        }
        Ok(CorrectionReport {
            path_id,
            seed,
            n: self.n,
            kappa: self.kappa,
            strat,
            sko,
            trace_term,
            simplex_term,
            residual,
            chaos_sum,
            quadrature_gap: residual - chaos_sum,
        })
    }

    pub fn run(&self, seed: u64, count: usize, exec: Exec) -> Result<Vec<CorrectionReport>> {
        exec.try_map(count, |m| self.run_path(seed, m))
    }
}

/// One path of the identity check with the smallest dimension `spec` allows.
pub fn verify_identity(
    spec: &FunctionSpec,
    model: &CovarianceModel,
    n: usize,
    kappa: usize,
    seed: u64,
) -> Result<CorrectionReport> {
    IdentityExperiment::new(spec.clone(), model, n, kappa, spec.min_dim())?.run_path(seed, 0)
}

/// Aggregate of many per-path reports.
#[derive(Debug, Clone, Serialize)]
pub struct IdentitySummary {
    pub count: usize,
    pub residual_rms: f64,
    pub residual_rms_log_se: f64,
    pub residual_max: f64,
    pub sko: Summary,
    pub strat: Summary,
    pub trace_term: Summary,
    pub simplex_max: f64,
    pub quadrature_gap_max: f64,
}

pub fn summarize(reports: &[CorrectionReport]) -> IdentitySummary {
    let col = |f: fn(&CorrectionReport) -> f64| reports.iter().map(f).collect::<Vec<_>>();
    let res = col(|r| r.residual);
    let rms = lq_norm(&res, 2.0);
    let amax = |v: Vec<f64>| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    IdentitySummary {
        count: reports.len(),
        residual_rms: rms.value,
        residual_rms_log_se: rms.log_se,
        residual_max: amax(res),
        sko: Summary::of(&col(|r| r.sko)),
        strat: Summary::of(&col(|r| r.strat)),
        trace_term: Summary::of(&col(|r| r.trace_term)),
        simplex_max: amax(col(|r| r.simplex_term)),
        quadrature_gap_max: amax(col(|r| r.quadrature_gap)),
    }
}
