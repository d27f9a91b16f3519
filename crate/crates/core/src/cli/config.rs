//! Experiment configuration: JSON file merged with command line overrides.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::controlled::FunctionSpec;
use crate::covariance::{CovarianceConfig, CovarianceModel, ModelKind};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Simulate,
    VerifyCorrection,
    RateStudy,
    VariationReport,
    DpiConvergence,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Simulate => "simulate",
            Experiment::VerifyCorrection => "verify-correction",
            Experiment::RateStudy => "rate-study",
            Experiment::VariationReport => "variation-report",
            Experiment::DpiConvergence => "dpi-convergence",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ModelArg {
    Fbm,
    Bm,
    Tabulated,
}

/// Covariance section of a config file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<ModelArg>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hurst: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_file: Option<PathBuf>,
}

/// Every configurable key. Absent keys take the documented defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<Experiment>,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_list: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paths: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lift_n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub with_malliavin: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sequential: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

/// Command line overrides, one flag per config key.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// JSON config file; flags given on the command line take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Covariance model [key: model.kind, default fbm].
    #[arg(long, value_enum)]
    pub model: Option<ModelArg>,
    /// Hurst index of fBm, in (1/4, 1] [key: model.hurst, default 0.45].
    #[arg(long)]
    pub hurst: Option<f64>,
    /// Time horizon T [key: model.horizon, default 1].
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Square CSV of R(t_i, t_j) for the tabulated model [key: model.grid_file].
    #[arg(long)]
    pub grid_file: Option<PathBuf>,
    /// Number of grid intervals [key: n, default 256].
    #[arg(long)]
    pub n: Option<usize>,
    /// Comma separated grid sizes for rate and convergence studies [key: n_list, default 64,128,256,512].
    #[arg(long, value_delimiter = ',')]
    pub n_list: Option<Vec<usize>>,
    /// Fine steps per coarse interval for the level-2 lift [key: kappa, default 8].
    #[arg(long)]
    pub kappa: Option<usize>,
    /// Dimension of the driver [key: d, default 1].
    #[arg(long)]
    pub d: Option<usize>,
    /// Number of Monte Carlo paths M [key: paths, default 100].
    #[arg(long)]
    pub paths: Option<usize>,
    /// Moment order for rate studies, 2 or 4 [key: q, default 2].
    #[arg(long)]
    pub q: Option<f64>,
    /// Potential f: linear | quad | poly:c0,c1,... | trig | product [key: f, default quad].
    #[arg(long)]
    pub f: Option<String>,
    /// Potential whose Hessian weights the rate-study sum [key: weight, default none].
    #[arg(long)]
    pub weight: Option<String>,
    /// Component pair i,j for rate studies [key: pair, default 0,0].
    #[arg(long, value_delimiter = ',')]
    pub pair: Option<Vec<usize>>,
    /// Variation exponent; required for tabulated models [key: rho, default from the model].
    #[arg(long)]
    pub rho: Option<f64>,
    /// Also export the level-2 lift on this many coarse intervals [key: lift_n].
    #[arg(long)]
    pub lift_n: Option<usize>,
    /// Include the Malliavin part in the convergence study [key: with_malliavin, default false].
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub with_malliavin: Option<bool>,
    /// Run Monte Carlo loops on one thread [key: sequential, default false].
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub sequential: Option<bool>,
    /// Master seed of all randomness [key: seed, default 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory [key: out, default out].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Load the file named in `o` (if any) and apply the flag overrides.
    pub fn resolve(o: &Overrides, experiment: Option<Experiment>) -> Result<Self> {
        let mut c = match &o.config {
            Some(p) => Self::from_file(p)?,
            None => Self::default(),
        };
        if let Some(e) = experiment {
            match c.experiment {
                Some(found) if found != e => {
                    return Err(Error::Config(format!(
                        "config file is for `{}` but `{}` was requested",
                        found.name(),
                        e.name()
                    )))
                }
                _ => c.experiment = Some(e),
            }
        }
        macro_rules! set {
            ($($field:ident),*) => { $( if o.$field.is_some() { c.$field = o.$field.clone(); } )* };
        }
        set!(n, n_list, kappa, d, paths, q, f, weight, pair, rho, lift_n, with_malliavin, sequential, seed, out);
        if o.model.is_some() {
            c.model.kind = o.model;
        }
        if o.hurst.is_some() {
            c.model.hurst = o.hurst;
        }
        if o.horizon.is_some() {
            c.model.horizon = o.horizon;
        }
        if o.grid_file.is_some() {
            c.model.grid_file = o.grid_file.clone();
        }
        Ok(c)
    }

    pub fn experiment(&self) -> Result<Experiment> {
        self.experiment.ok_or_else(|| Error::Config("config does not name an experiment".into()))
    }

    pub fn covariance(&self) -> CovarianceConfig {
        let kind = match self.model.kind.unwrap_or(ModelArg::Fbm) {
            ModelArg::Fbm => ModelKind::Fbm,
            ModelArg::Bm => ModelKind::Bm,
            ModelArg::Tabulated => ModelKind::Tabulated,
        };
        let hurst = match kind {
            ModelKind::Fbm => Some(self.model.hurst.unwrap_or(0.45)),
            _ => self.model.hurst,
        };
        CovarianceConfig {
            kind,
            hurst,
            horizon: self.model.horizon.unwrap_or(1.0),
            grid_file: self.model.grid_file.clone(),
        }
    }

    pub fn build_model(&self) -> Result<CovarianceModel> {
        self.covariance().build()
    }

    pub fn n(&self) -> usize {
        self.n.unwrap_or(256)
    }

    pub fn n_list(&self) -> Vec<usize> {
        self.n_list.clone().unwrap_or_else(|| vec![64, 128, 256, 512])
    }

    pub fn kappa(&self) -> usize {
        self.kappa.unwrap_or(8)
    }

    pub fn d(&self) -> usize {
        self.d.unwrap_or(1)
    }

    pub fn paths(&self) -> usize {
        self.paths.unwrap_or(100)
    }

    pub fn q(&self) -> f64 {
        self.q.unwrap_or(2.0)
    }

    pub fn function(&self) -> Result<FunctionSpec> {
        self.f.as_deref().unwrap_or("quad").parse()
    }

    pub fn weight_spec(&self) -> Result<Option<FunctionSpec>> {
        self.weight.as_deref().map(str::parse).transpose()
    }

    pub fn pair(&self) -> Result<(usize, usize)> {
        match self.pair.as_deref() {
            None => Ok((0, 0)),
            Some([i, j]) => Ok((*i, *j)),
            Some(other) => Err(Error::Config(format!("pair needs two indices, got {other:?}"))),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn out(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn exec(&self) -> crate::exec::Exec {
        if self.sequential.unwrap_or(false) {
            crate::exec::Exec::Sequential
        } else {
            crate::exec::Exec::Parallel
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = r#"{"experiment":"simulate","paths":3,"bogus":1}"#;
        assert!(serde_json::from_str::<ExperimentConfig>(bad).is_err());
        let bad_model = r#"{"model":{"kind":"fbm","h":0.4}}"#;
        assert!(serde_json::from_str::<ExperimentConfig>(bad_model).is_err());
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        std::fs::write(&p, r#"{"experiment":"simulate","n":64,"model":{"kind":"bm"},"seed":4}"#).unwrap();
        let o = Overrides { config: Some(p.clone()), n: Some(32), ..Default::default() };
        let c = ExperimentConfig::resolve(&o, Some(Experiment::Simulate)).unwrap();
        assert_eq!(c.n(), 32);
        assert_eq!(c.seed(), 4);
        assert_eq!(c.covariance().kind, ModelKind::Bm);
        assert!(ExperimentConfig::resolve(&o, Some(Experiment::RateStudy)).is_err());
    }
}
