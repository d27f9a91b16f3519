//! Covariance functions of the Gaussian driver.
//!
//! Components of the driver are i.i.d., so a single scalar covariance
//! `R(s, t) = E[x_s x_t]` describes the whole process. All models vanish on the
//! axes (`x_0 = 0`).

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{read_numeric_csv, GridFunction2D, IndexRect, UniformGrid};

/// Smallest Hurst index accepted for fractional Brownian motion. At and below
/// it the 2d-variation exponent `1/(2H)` leaves `[1, 2)`.
pub const MIN_HURST: f64 = 0.25;

#[derive(Debug, Clone, PartialEq)]
pub enum CovarianceKind {
    Fbm { hurst: f64 },
    Bm,
    /// `R(t_i, t_j)` on a uniform grid of `[0, T]`, bilinear in between.
    Tabulated { grid: Arc<GridFunction2D> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceModel {
    kind: CovarianceKind,
    horizon: f64,
}

impl CovarianceModel {
    pub fn fbm(hurst: f64, horizon: f64) -> Result<Self> {
        if !(hurst > MIN_HURST && hurst <= 1.0) {
            return Err(Error::domain(format!(
                "Hurst index must lie in (1/4, 1], got {hurst}"
            )));
        }
        check_horizon(horizon)?;
        Ok(Self { kind: CovarianceKind::Fbm { hurst }, horizon })
    }

    pub fn bm(horizon: f64) -> Result<Self> {
        check_horizon(horizon)?;
        Ok(Self { kind: CovarianceKind::Bm, horizon })
    }

    /// Tabulated covariance. The table must be square, symmetric and vanish on
    /// its first row and column.
    pub fn tabulated(table: GridFunction2D) -> Result<Self> {
        let (nr, nc) = table.shape();
        if nr != nc || table.rows != table.cols {
            return Err(Error::shape("tabulated covariance must be square on a single grid"));
        }
        let scale = table.values().iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        for i in 0..nr {
            if table.get(0, i).abs() > 1e-14 * scale || table.get(i, 0).abs() > 1e-14 * scale {
                return Err(Error::domain("tabulated covariance must vanish at time 0"));
            }
            for j in 0..i {
                if (table.get(i, j) - table.get(j, i)).abs() > 1e-12 * scale {
                    return Err(Error::domain(format!("tabulated covariance not symmetric at ({i}, {j})")));
                }
            }
        }
        let horizon = table.rows.horizon;
        Ok(Self { kind: CovarianceKind::Tabulated { grid: Arc::new(table) }, horizon })
    }

    /// Tabulate any model on a uniform grid.
    pub fn tabulate(&self, grid: UniformGrid) -> Result<Self> {
        if (grid.horizon - self.horizon).abs() > 1e-12 * self.horizon {
            return Err(Error::domain("tabulation grid must cover the model horizon"));
        }
        let table = GridFunction2D::square(grid, |s, t| self.eval_unchecked(s, t))?;
        Self::tabulated(table)
    }

    /// Reads a square CSV where row `i` holds `R(t_i, t_j)` for all `j`.
    pub fn tabulated_from_csv(path: impl AsRef<Path>, horizon: f64) -> Result<Self> {
        let rows = read_numeric_csv(path)?;
        let m = rows.len();
        if m < 2 || rows.iter().any(|r| r.len() != m) {
            return Err(Error::shape("tabulated covariance CSV must be a square matrix"));
        }
        let grid = UniformGrid::new(m - 1, horizon)?;
        let values = rows.into_iter().flatten().collect();
        Self::tabulated(GridFunction2D::new(grid, grid, values)?)
    }

    pub fn kind(&self) -> &CovarianceKind {
        &self.kind
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn hurst(&self) -> Option<f64> {
        match self.kind {
            CovarianceKind::Fbm { hurst } => Some(hurst),
            CovarianceKind::Bm => Some(0.5),
            CovarianceKind::Tabulated { .. } => None,
        }
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !(0.0..=self.horizon).contains(&t) {
            return Err(Error::domain(format!("time {t} outside [0, {}]", self.horizon)));
        }
        Ok(())
    }

    /// `R(s, t)`.
    pub fn cov(&self, s: f64, t: f64) -> Result<f64> {
        self.check_time(s)?;
        self.check_time(t)?;
        Ok(self.eval_unchecked(s, t))
    }

    /// Evaluation without range checks. Arguments are put in canonical order
    /// so the result is exactly symmetric.
    #[inline]
    pub(crate) fn eval_unchecked(&self, s: f64, t: f64) -> f64 {
        let (a, b) = if s <= t { (s, t) } else { (t, s) };
        match &self.kind {
            CovarianceKind::Bm => a,
            CovarianceKind::Fbm { hurst } => {
                let e = 2.0 * hurst;
                0.5 * (a.powf(e) + b.powf(e) - (b - a).powf(e))
            }
            CovarianceKind::Tabulated { grid } => bilinear(grid, a, b),
        }
    }

    /// `R(t,v) - R(t,u) - R(s,v) + R(s,u) = E[(x_t - x_s)(x_v - x_u)]`.
    pub fn rect_increment(&self, s: f64, t: f64, u: f64, v: f64) -> Result<f64> {
        for x in [s, t, u, v] {
            self.check_time(x)?;
        }
        if s > t || u > v {
            return Err(Error::domain(format!("reversed interval in [{s},{t}]x[{u},{v}]")));
        }
        Ok(self.eval_unchecked(t, v) - self.eval_unchecked(t, u) - self.eval_unchecked(s, v)
            + self.eval_unchecked(s, u))
    }

    /// Exponent `rho` of finite 2d rho-variation. For fBm with `H > 1/2` the
    /// covariance has bounded variation and `rho = 1`.
    pub fn rho(&self) -> Result<f64> {
        match self.kind {
            CovarianceKind::Bm => Ok(1.0),
            CovarianceKind::Fbm { hurst } => {
                let rho = (1.0 / (2.0 * hurst)).max(1.0);
                if rho >= 2.0 {
                    return Err(Error::domain(format!("rho = {rho} is not below 2")));
                }
                Ok(rho)
            }
            CovarianceKind::Tabulated { .. } => Err(Error::UnknownRho),
        }
    }

    /// `rho` if strictly below `bound`, a domain error otherwise.
    pub fn require_rho_below(&self, bound: f64) -> Result<f64> {
        let rho = self.rho()?;
        if rho >= bound {
            return Err(Error::domain(format!("operation requires rho < {bound}, model has rho = {rho}")));
        }
        Ok(rho)
    }

    /// Precompute `R(t_i, t_j)` on a uniform grid of the model horizon.
    pub fn on_grid(&self, n: usize) -> Result<CovarianceGrid> {
        CovarianceGrid::new(self, UniformGrid::new(n, self.horizon)?)
    }

    pub fn to_config(&self) -> CovarianceConfig {
        match &self.kind {
            CovarianceKind::Fbm { hurst } => CovarianceConfig {
                kind: ModelKind::Fbm,
                hurst: Some(*hurst),
                horizon: self.horizon,
                grid_file: None,
            },
            CovarianceKind::Bm => CovarianceConfig {
                kind: ModelKind::Bm,
                hurst: None,
                horizon: self.horizon,
                grid_file: None,
            },
            CovarianceKind::Tabulated { .. } => CovarianceConfig {
                kind: ModelKind::Tabulated,
                hurst: None,
                horizon: self.horizon,
                grid_file: None,
            },
        }
    }
}

/// `rho_of` on a model.
pub fn rho_of(model: &CovarianceModel) -> Result<f64> {
    model.rho()
}

fn check_horizon(horizon: f64) -> Result<()> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::domain(format!("horizon must be positive, got {horizon}")));
    }
    Ok(())
}

fn bilinear(table: &GridFunction2D, s: f64, t: f64) -> f64 {
    let g = table.rows;
    let locate = |x: f64| {
        let u = (x / g.step()).clamp(0.0, g.n as f64);
        let i = (u.floor() as usize).min(g.n - 1);
        (i, u - i as f64)
    };
    let (i, a) = locate(s);
    let (j, b) = locate(t);
    let f00 = table.get(i, j);
    let f01 = table.get(i, j + 1);
    let f10 = table.get(i + 1, j);
    let f11 = table.get(i + 1, j + 1);
    (1.0 - a) * ((1.0 - b) * f00 + b * f01) + a * ((1.0 - b) * f10 + b * f11)
}

/// `R(t_i, t_j)` on a uniform grid, with cell increments.
#[derive(Debug, Clone)]
pub struct CovarianceGrid {
    pub grid: UniformGrid,
    values: GridFunction2D,
}

impl CovarianceGrid {
    pub fn new(model: &CovarianceModel, grid: UniformGrid) -> Result<Self> {
        if (grid.horizon - model.horizon).abs() > 1e-12 * model.horizon {
            return Err(Error::domain("covariance grid must cover the model horizon"));
        }
        let values = GridFunction2D::square(grid, |s, t| model.eval_unchecked(s, t))?;
        Ok(Self { grid, values })
    }

    #[inline]
    pub fn r(&self, i: usize, j: usize) -> f64 {
        self.values.get(i, j)
    }

    /// `R_{t_k}` = `R(t_k, t_k)`.
    #[inline]
    pub fn diag(&self, k: usize) -> f64 {
        self.values.get(k, k)
    }

    /// Increment of `R` over cell `[t_k, t_{k+1}] x [t_l, t_{l+1}]`.
    #[inline]
    pub fn cell(&self, k: usize, l: usize) -> f64 {
        self.values.get(k + 1, l + 1) - self.values.get(k + 1, l) - self.values.get(k, l + 1)
            + self.values.get(k, l)
    }

    #[inline]
    pub fn rect(&self, r: IndexRect) -> f64 {
        self.values.rect_increment(r)
    }

    pub fn as_grid_function(&self) -> &GridFunction2D {
        &self.values
    }

    /// Dense matrix of all cell increments, row-major `n x n`.
    pub fn cell_matrix(&self) -> Vec<f64> {
        let n = self.grid.n;
        let mut out = vec![0.0; n * n];
        for k in 0..n {
            for l in 0..n {
                out[k * n + l] = self.cell(k, l);
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Fbm,
    Bm,
    Tabulated,
}

/// Serialized form of a covariance model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CovarianceConfig {
    pub kind: ModelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hurst: Option<f64>,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_file: Option<PathBuf>,
}

fn default_horizon() -> f64 {
    1.0
}

impl CovarianceConfig {
    pub fn build(&self) -> Result<CovarianceModel> {
        match self.kind {
            ModelKind::Fbm => {
                let h = self.hurst.ok_or_else(|| Error::Config("fbm model needs a hurst value".into()))?;
                CovarianceModel::fbm(h, self.horizon)
            }
            ModelKind::Bm => match self.hurst {
                Some(h) if h != 0.5 => Err(Error::Config(format!("bm model has hurst 0.5, got {h}"))),
                _ => CovarianceModel::bm(self.horizon),
            },
            ModelKind::Tabulated => {
                if self.hurst.is_some() {
                    return Err(Error::Config("tabulated model takes no hurst value".into()));
                }
                let path = self
                    .grid_file
                    .as_ref()
                    .ok_or_else(|| Error::Config("tabulated model needs grid_file".into()))?;
                CovarianceModel::tabulated_from_csv(path, self.horizon)
            }
        }
    }
}
