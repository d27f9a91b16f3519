//! Experiment dispatch.

use std::path::PathBuf;

use serde::Serialize;

use crate::chaos::{rate_study, RateOptions};
use crate::error::{Error, Result};
use crate::grid::IndexRect;
use crate::roughlift::lift_level2;
use crate::simulate::sample_paths_with;
use crate::simulate::Sampler;
use crate::stochastic::correction::{summarize, IdentityExperiment, IdentitySummary};
use crate::stochastic::dpi::{dpi_convergence, DpiOptions};
use crate::variation::{controlled_rho_var_2d, hyp_var_constant, rho_var_2d};

use super::config::{Experiment, ExperimentConfig};
use super::output::{num, write_csv, write_json, write_manifest};

/// Largest grid used for the variation constant, whose cost grows like `n^4`.
pub const HYP_CONSTANT_MAX_N: usize = 128;

/// Run one experiment; returns the files written, manifest last.
pub fn run(config: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let experiment = config.experiment()?;
    let dir = config.out();
    std::fs::create_dir_all(&dir)?;
    let mut files = match experiment {
        Experiment::Simulate => simulate(config)?,
        Experiment::VerifyCorrection => verify(config)?,
        Experiment::RateStudy => rates(config)?,
        Experiment::VariationReport => variation(config)?,
        Experiment::DpiConvergence => dpi(config)?,
    };
    let manifest = write_manifest(&dir, config, &files)?;
    files.push(manifest);
    Ok(files)
}

fn simulate(c: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let model = c.build_model()?;
    let (n, d, m) = (c.n(), c.d(), c.paths());
    let paths = sample_paths_with(&model, n, d, m, c.seed(), Sampler::Auto, c.exec())?;
    let dir = c.out();
    let file = dir.join("paths.csv");
    let mut header = vec!["t".to_string()];
    header.extend((1..=d).map(|j| format!("x{j}")));
    header.push("path_id".into());
    let hdr: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = paths.iter().flat_map(|p| {
        (0..=n).map(move |k| {
            let mut r = vec![num(p.grid.time(k))];
            r.extend(p.values.iter().map(|c| num(c[k])));
            r.push(p.path_id.to_string());
            r
        })
    });
    write_csv(&file, &hdr, rows)?;
    let mut files = vec![file];
    if let Some(ln) = c.lift_n {
        let lifts = paths.iter().map(|p| lift_level2(p, ln)).collect::<Result<Vec<_>>>()?;
        let file = dir.join("lift.csv");
        let rows = lifts.iter().enumerate().flat_map(|(m, l)| {
            (0..l.n()).flat_map(move |k| {
                (0..l.dim).flat_map(move |i| {
                    (0..l.dim).map(move |j| {
                        vec![k.to_string(), i.to_string(), j.to_string(), num(l.x1[k][i]), num(l.x2(k, i, j)), m.to_string()]
                    })
                })
            })
        });
        write_csv(&file, &["k", "i", "j", "x1_i", "x2_ij", "path_id"], rows)?;
        files.push(file);
    }
    Ok(files)
}

#[derive(Serialize)]
struct VerifyReport {
    experiment: &'static str,
    model: crate::covariance::CovarianceConfig,
    f: String,
    n: usize,
    kappa: usize,
    d: usize,
    paths: usize,
    seed: u64,
    summary: IdentitySummary,
}

fn verify(c: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let model = c.build_model()?;
    let spec = c.function()?;
    let d = c.d.unwrap_or(spec.min_dim());
    let exp = IdentityExperiment::new(spec.clone(), &model, c.n(), c.kappa(), d)?;
    let reports = exp.run(c.seed(), c.paths(), c.exec())?;
    let dir = c.out();
    let csv_file = dir.join("paths.csv");
    let rows = reports.iter().map(|r| {
        vec![r.path_id.to_string(), num(r.strat), num(r.sko), num(r.trace_term), num(r.simplex_term), num(r.residual)]
    });
    write_csv(&csv_file, &["path_id", "strat", "sko", "trace", "simplex", "residual"], rows)?;
    let report = VerifyReport {
        experiment: "verify-correction",
        model: c.covariance(),
        f: spec.to_string(),
        n: c.n(),
        kappa: c.kappa(),
        d,
        paths: c.paths(),
        seed: c.seed(),
        summary: summarize(&reports),
    };
    let json = dir.join("report.json");
    write_json(&json, &report)?;
    Ok(vec![json, csv_file])
}

#[derive(Serialize)]
struct RateSummary {
    slope: f64,
    #[serde(rename = "slope_SE")]
    slope_se: f64,
    predicted_slope: f64,
    intercept: f64,
    q: f64,
    pair: [usize; 2],
    weight: Option<String>,
}

fn rates(c: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let model = c.build_model()?;
    let weight = c.weight_spec()?;
    let (i, j) = c.pair()?;
    let d = c.d.unwrap_or((i.max(j) + 1).max(weight.as_ref().map_or(1, |w| w.min_dim())));
    let kappa = c.kappa.unwrap_or(if i == j { 1 } else { 8 });
    let opts = RateOptions { kappa, dim: d, pair: (i, j), exec: c.exec() };
    let study = rate_study(&model, &c.n_list(), c.paths(), c.q(), weight.as_ref(), c.seed(), opts)?;
    let dir = c.out();
    let csv_file = dir.join("rate.csv");
    let rows = study.rows.iter().map(|r| {
        vec![r.n.to_string(), r.i.to_string(), r.j.to_string(), num(r.q), num(r.norm_estimate), num(r.se)]
    });
    write_csv(&csv_file, &["n", "i", "j", "q", "norm_estimate", "SE"], rows)?;
    let json = dir.join("rate.json");
    let summary = RateSummary {
        slope: study.slope,
        slope_se: study.slope_se,
        predicted_slope: study.predicted_slope,
        intercept: study.intercept,
        q: c.q(),
        pair: [i, j],
        weight: weight.map(|w| w.to_string()),
    };
    write_json(&json, &summary)?;
    Ok(vec![json, csv_file])
}

fn variation(c: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let model = c.build_model()?;
    let rho = match c.rho {
        Some(r) => r,
        None => model.rho()?,
    };
    let n = c.n();
    let cg = model.on_grid(n)?;
    let g = cg.as_grid_function();
    let t = model.horizon();
    let mut rows = Vec::new();
    for (label, rect) in [
        (format!("[0,{t}]x[0,{t}]"), IndexRect::square(0, n)),
        (format!("[0,{}]x[0,{}]", t / 2.0, t / 2.0), IndexRect::square(0, n / 2)),
    ] {
        let a = rho_var_2d(g, rho, rect)?;
        rows.push(vec!["rho_var_2d".into(), num(rho), label.clone(), num(a.value), a.method.label().into()]);
        let b = controlled_rho_var_2d(g, rho, rect)?;
        rows.push(vec!["controlled_rho_var_2d".into(), num(rho), label, num(b.value), b.method.label().into()]);
    }
    let nh = n.min(HYP_CONSTANT_MAX_N);
    let h = hyp_var_constant(&model, rho, nh)?;
    rows.push(vec!["hyp_var_constant".into(), num(rho), format!("grid n={nh}"), num(h), "EXACT_DP".into()]);
    let file = c.out().join("variation.csv");
    write_csv(&file, &["norm_kind", "exponent", "rect", "value", "method"], rows)?;
    Ok(vec![file])
}

fn dpi(c: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let model = c.build_model()?;
    let spec = c.function()?;
    let d = c.d.unwrap_or(spec.min_dim());
    let opts = DpiOptions {
        kappa: c.kappa.unwrap_or(4),
        dim: d,
        with_malliavin: c.with_malliavin.unwrap_or(false),
        exec: c.exec(),
    };
    let n_list = c.n_list.clone().unwrap_or_else(|| vec![8, 16, 32, 64]);
    if n_list.is_empty() {
        return Err(Error::domain("empty n list"));
    }
    let table = dpi_convergence(&spec, &model, &n_list, c.paths(), c.seed(), opts)?;
    let file = c.out().join("dpi.csv");
    let rows = table.iter().map(|r| {
        let (dm, ds) = r.d_norm2.map_or((String::new(), String::new()), |s| (num(s.mean), num(s.se)));
        vec![r.n.to_string(), num(r.y_norm2.mean), num(r.y_norm2.se), dm, ds]
    });
    write_csv(&file, &["n", "y_norm2", "y_SE", "d_norm2", "d_SE"], rows)?;
    Ok(vec![file])
}
