//! Exact sampling of Gaussian paths on a uniform grid.
//!
//! Every component of every path draws from its own ChaCha stream keyed by
//! `(seed, path, component)`, so results do not depend on how paths are
//! scheduled across threads.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::covariance::{CovarianceKind, CovarianceModel};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::grid::UniformGrid;

/// A `d`-dimensional sample path on a uniform grid.
#[derive(Debug, Clone)]
pub struct GridPath {
    pub grid: UniformGrid,
    /// `values[j][k]` is component `j` at `t_k`.
    pub values: Vec<Vec<f64>>,
    pub model: CovarianceModel,
    pub seed: u64,
    pub path_id: usize,
}

impl GridPath {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `x_{t_k}` as a vector.
    pub fn at(&self, k: usize) -> Vec<f64> {
        self.values.iter().map(|c| c[k]).collect()
    }

    /// Keep every `factor`-th grid point.
    pub fn coarsen(&self, factor: usize) -> Result<GridPath> {
        let grid = self.grid.coarsen(factor)?;
        let values = self.values.iter().map(|c| c.iter().step_by(factor).copied().collect()).collect();
        Ok(GridPath { grid, values, model: self.model.clone(), seed: self.seed, path_id: self.path_id })
    }
}

/// Factorization used to draw Gaussian vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Sampler {
    /// Lower-triangular factor of `[R(t_i, t_j)]_{i,j >= 1}`; works for every model.
    Cholesky,
    /// Circulant embedding of the stationary increment covariance; fBm and BM only.
    Circulant,
    /// Cholesky up to [`CIRCULANT_THRESHOLD`] steps, circulant above for fBm and BM.
    #[default]
    Auto,
}

/// Grid size above which [`Sampler::Auto`] switches to circulant embedding.
pub const CIRCULANT_THRESHOLD: usize = 1024;

enum Prepared {
    /// Packed lower triangle, row `i` at offset `i (i + 1) / 2`.
    Cholesky(Vec<f64>),
    Circulant { sqrt_eig: Vec<f64>, fft: Arc<dyn Fft<f64>> },
}

/// Factorized sampler for one model and grid, shared read-only across paths.
pub struct PathSampler {
    model: CovarianceModel,
    grid: UniformGrid,
    prepared: Prepared,
}

impl std::fmt::Debug for PathSampler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let kind = match self.prepared {
            Prepared::Cholesky(_) => "cholesky",
            Prepared::Circulant { .. } => "circulant",
        };
        f.debug_struct("PathSampler").field("grid", &self.grid).field("method", &kind).finish()
    }
}

impl PathSampler {
    pub fn new(model: &CovarianceModel, n: usize, sampler: Sampler) -> Result<Self> {
        let grid = UniformGrid::new(n, model.horizon())?;
        let stationary = model.hurst().is_some();
        let prepared = match sampler {
            Sampler::Cholesky => Prepared::Cholesky(cholesky_of(model, grid)?),
            Sampler::Circulant => {
                if !stationary {
                    return Err(Error::domain("circulant embedding needs stationary increments (fBm or BM)"));
                }
                circulant_of(model, grid)?
            }
            Sampler::Auto => {
                if stationary && n > CIRCULANT_THRESHOLD {
                    circulant_of(model, grid)?
                } else {
                    Prepared::Cholesky(cholesky_of(model, grid)?)
                }
            }
        };
        Ok(Self { model: model.clone(), grid, prepared })
    }

    pub fn grid(&self) -> UniformGrid {
        self.grid
    }

    /// One component, `n + 1` values starting at 0.
    pub fn component(&self, seed: u64, path: usize, component: usize) -> Vec<f64> {
        let mut rng = stream(seed, path as u64, component as u64);
        let n = self.grid.n;
        let mut out = vec![0.0; n + 1];
        match &self.prepared {
            Prepared::Cholesky(l) => {
                let z: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
                for i in 0..n {
                    let row = &l[i * (i + 1) / 2..i * (i + 1) / 2 + i + 1];
                    out[i + 1] = row.iter().zip(&z).map(|(a, b)| a * b).sum();
                }
            }
            Prepared::Circulant { sqrt_eig, fft } => {
                let mut w: Vec<Complex64> = sqrt_eig
                    .iter()
                    .map(|s| {
                        let a: f64 = rng.sample(StandardNormal);
                        let b: f64 = rng.sample(StandardNormal);
                        Complex64::new(s * a, s * b)
                    })
                    .collect();
                fft.process(&mut w);
                let mut acc = 0.0;
                for k in 0..n {
                    acc += w[k].re;
                    out[k + 1] = acc;
                }
            }
        }
        out
    }

    pub fn path(&self, seed: u64, path: usize, d: usize) -> GridPath {
        let values = (0..d).map(|j| self.component(seed, path, j)).collect();
        GridPath { grid: self.grid, values, model: self.model.clone(), seed, path_id: path }
    }

    pub fn paths(&self, seed: u64, d: usize, count: usize, exec: Exec) -> Vec<GridPath> {
        exec.map(count, |m| self.path(seed, m, d))
    }
}

/// Independent stream for `(seed, path, component)`.
pub fn stream(seed: u64, path: u64, component: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&path.to_le_bytes());
    key[16..24].copy_from_slice(&component.to_le_bytes());
    key[24..].copy_from_slice(b"gridpath");
    ChaCha8Rng::from_seed(key)
}

fn cholesky_of(model: &CovarianceModel, grid: UniformGrid) -> Result<Vec<f64>> {
    let n = grid.n;
    let mut a = vec![0.0; n * (n + 1) / 2];
    let mut trace = 0.0;
    for i in 0..n {
        for j in 0..=i {
            a[i * (i + 1) / 2 + j] = model.eval_unchecked(grid.time(i + 1), grid.time(j + 1));
        }
        trace += a[i * (i + 1) / 2 + i];
    }
    match cholesky_packed(&a, n, 0.0) {
        Ok(l) => Ok(l),
        Err(_) => {
            let jitter = 1e-12 * trace / n as f64;
            cholesky_packed(&a, n, jitter).map_err(|row| Error::CovarianceNotPsd { row, jitter })
        }
    }
}

/// Cholesky factor of a packed symmetric matrix with `jitter` added on the
/// diagonal. Returns the failing row on breakdown.
pub(crate) fn cholesky_packed(a: &[f64], n: usize, jitter: f64) -> std::result::Result<Vec<f64>, usize> {
    let mut l = vec![0.0; a.len()];
    for i in 0..n {
        let ri = i * (i + 1) / 2;
        for j in 0..=i {
            let rj = j * (j + 1) / 2;
            let dot: f64 = l[ri..ri + j].iter().zip(&l[rj..rj + j]).map(|(x, y)| x * y).sum();
            let v = a[ri + j] - dot;
            if i == j {
                let d = v + jitter;
                if !(d > 0.0) {
                    return Err(i);
                }
                l[ri + i] = d.sqrt();
            } else {
                l[ri + j] = v / l[rj + j];
            }
        }
    }
    Ok(l)
}

/// Autocovariance of unit-lag increments `x_{t_{k+1}} - x_{t_k}` at lag `k`.
fn increment_autocov(hurst: f64, step: f64, k: usize) -> f64 {
    let e = 2.0 * hurst;
    let k = k as f64;
    let m = if k == 0.0 { 1.0 } else { (k - 1.0).abs().powf(e) };
    0.5 * step.powf(e) * ((k + 1.0).powf(e) - 2.0 * k.powf(e) + m)
}

fn circulant_of(model: &CovarianceModel, grid: UniformGrid) -> Result<Prepared> {
    let hurst = match model.kind() {
        CovarianceKind::Fbm { hurst } => *hurst,
        CovarianceKind::Bm => 0.5,
        CovarianceKind::Tabulated { .. } => unreachable!("checked by caller"),
    };
    let n = grid.n;
    let m = 2 * n;
    let h = grid.step();
    let mut c = vec![Complex64::new(0.0, 0.0); m];
    for k in 0..=n {
        c[k].re = increment_autocov(hurst, h, k);
    }
    for k in n + 1..m {
        c[k].re = c[m - k].re;
    }
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(m);
    fft.process(&mut c);
    let scale = c.iter().fold(0.0f64, |a, z| a.max(z.re.abs()));
    let mut sqrt_eig = Vec::with_capacity(m);
    for (k, z) in c.iter().enumerate() {
        let lam = z.re;
        if lam < -1e-10 * scale {
            return Err(Error::CovarianceNotPsd { row: k, jitter: 0.0 });
        }
        sqrt_eig.push((lam.max(0.0) / m as f64).sqrt());
    }
    Ok(Prepared::Circulant { sqrt_eig, fft })
}

/// `count` independent `d`-dimensional paths on `n` steps.
pub fn sample_paths(model: &CovarianceModel, n: usize, d: usize, count: usize, seed: u64) -> Result<Vec<GridPath>> {
    sample_paths_with(model, n, d, count, seed, Sampler::Auto, Exec::default())
}

pub fn sample_paths_with(
    model: &CovarianceModel,
    n: usize,
    d: usize,
    count: usize,
    seed: u64,
    sampler: Sampler,
    exec: Exec,
) -> Result<Vec<GridPath>> {
    if n < 2 || d < 1 || count < 1 {
        return Err(Error::domain(format!("need n >= 2, d >= 1, M >= 1; got n={n}, d={d}, M={count}")));
    }
    let s = PathSampler::new(model, n, sampler)?;
    Ok(s.paths(seed, d, count, exec))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn starts_at_zero_and_is_reproducible() {
        let m = CovarianceModel::fbm(0.45, 1.0).unwrap();
        let a = sample_paths(&m, 16, 2, 3, 7).unwrap();
        let b = sample_paths_with(&m, 16, 2, 3, 7, Sampler::Auto, Exec::Sequential).unwrap();
        for (p, q) in a.iter().zip(&b) {
            assert_eq!(p.values, q.values);
            assert!(p.values.iter().all(|c| c[0] == 0.0));
        }
        assert_ne!(a[0].values[0], a[0].values[1]);
        assert_ne!(a[0].values[0], a[1].values[0]);
    }

    #[test]
    fn bad_arguments() {
        let m = CovarianceModel::bm(1.0).unwrap();
        assert!(sample_paths(&m, 1, 1, 1, 0).is_err());
        assert!(sample_paths(&m, 4, 0, 1, 0).is_err());
        let tab = m.tabulate(UniformGrid::new(4, 1.0).unwrap()).unwrap();
        assert!(PathSampler::new(&tab, 4, Sampler::Circulant).is_err());
    }

    #[test]
    fn cholesky_reproduces_matrix() {
        let m = CovarianceModel::fbm(0.3, 2.0).unwrap();
        let g = UniformGrid::new(6, 2.0).unwrap();
        let l = cholesky_of(&m, g).unwrap();
        for i in 0..6 {
            for j in 0..=i {
                let s: f64 = (0..=j).map(|k| l[i * (i + 1) / 2 + k] * l[j * (j + 1) / 2 + k]).sum();
                let r = m.cov(g.time(i + 1), g.time(j + 1)).unwrap();
                assert!((s - r).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn not_psd_is_reported() {
        let a = vec![1.0, 2.0, 1.0];
        assert_eq!(cholesky_packed(&a, 2, 0.0), Err(1));
    }

    #[test]
    fn circulant_embedding_has_right_covariance() {
        // embedding eigenvalues reproduce the increment autocovariance
        for h in [0.3, 0.45, 0.5, 0.8] {
            let m = CovarianceModel::fbm(h, 1.0).unwrap();
            let s = PathSampler::new(&m, 8, Sampler::Circulant).unwrap();
            if let Prepared::Circulant { sqrt_eig, .. } = &s.prepared {
                let mm = sqrt_eig.len();
                for lag in 0..8 {
                    let c: f64 = sqrt_eig
                        .iter()
                        .enumerate()
                        .map(|(k, s)| s * s * (2.0 * std::f64::consts::PI * (lag * k) as f64 / mm as f64).cos())
                        .sum();
                    assert!((c - increment_autocov(h, 1.0 / 8.0, lag)).abs() < 1e-12);
                }
            } else {
                panic!("expected circulant sampler");
            }
        }
    }
}
