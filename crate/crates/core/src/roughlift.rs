//! Level-2 geometric lift of a sampled path.
//!
//! `x2[k][i*d + j]` approximates `int_{t_k}^{t_{k+1}} (x^i_r - x^i_{t_k}) dx^j_r`,
//! computed exactly for the piecewise-linear interpolant of a finer path.

use crate::covariance::CovarianceModel;
use crate::error::{Error, Result};
use crate::grid::UniformGrid;
use crate::simulate::GridPath;

#[derive(Debug, Clone)]
pub struct RoughLift {
    pub grid: UniformGrid,
    pub dim: usize,
    pub kappa: usize,
    /// `x1[k][i]`, increment over `[t_k, t_{k+1}]`.
    pub x1: Vec<Vec<f64>>,
    /// `x2[k][i * dim + j]`.
    pub x2: Vec<Vec<f64>>,
    /// Expectations of `x2`, when attached.
    pub x2_mean: Option<Vec<Vec<f64>>>,
}

/// Level-1 and level-2 increments over fine steps `a..b` of `path`.
pub fn signature2(path: &GridPath, a: usize, b: usize) -> (Vec<f64>, Vec<f64>) {
    let d = path.dim();
    let mut run = vec![0.0; d];
    let mut x2 = vec![0.0; d * d];
    let mut delta = vec![0.0; d];
    for f in a..b {
        for (i, c) in path.values.iter().enumerate() {
            delta[i] = c[f + 1] - c[f];
        }
        for i in 0..d {
            for j in 0..d {
                x2[i * d + j] += run[i] * delta[j] + 0.5 * delta[i] * delta[j];
            }
        }
        for i in 0..d {
            run[i] += delta[i];
        }
    }
    let x1 = path.values.iter().map(|c| c[b] - c[a]).collect();
    (x1, x2)
}

/// Lift `fine` to the coarse grid of `coarse_n` intervals.
pub fn lift_level2(fine: &GridPath, coarse_n: usize) -> Result<RoughLift> {
    if coarse_n == 0 || fine.grid.n % coarse_n != 0 {
        return Err(Error::shape(format!(
            "fine grid of {} steps is not a multiple of {coarse_n}",
            fine.grid.n
        )));
    }
    let kappa = fine.grid.n / coarse_n;
    let grid = UniformGrid::new(coarse_n, fine.grid.horizon)?;
    let mut x1 = Vec::with_capacity(coarse_n);
    let mut x2 = Vec::with_capacity(coarse_n);
    for k in 0..coarse_n {
        let (a, b) = signature2(fine, k * kappa, (k + 1) * kappa);
        x1.push(a);
        x2.push(b);
    }
    Ok(RoughLift { grid, dim: fine.dim(), kappa, x1, x2, x2_mean: None })
}

/// `E[x2]` per interval: `R^{t_k t_{k+1}}_{t_k t_{k+1}} / 2` on the diagonal, zero elsewhere.
pub fn level2_mean(model: &CovarianceModel, grid: UniformGrid, d: usize) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::with_capacity(grid.n);
    for k in 0..grid.n {
        let v = 0.5 * model.rect_increment(grid.time(k), grid.time(k + 1), grid.time(k), grid.time(k + 1))?;
        let mut m = vec![0.0; d * d];
        for i in 0..d {
            m[i * d + i] = v;
        }
        out.push(m);
    }
    Ok(out)
}

/// Chen composition of two consecutive level-2 increments.
pub fn chen(a1: &[f64], a2: &[f64], b1: &[f64], b2: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let d = a1.len();
    let x1 = a1.iter().zip(b1).map(|(a, b)| a + b).collect();
    let mut x2 = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            x2[i * d + j] = a2[i * d + j] + b2[i * d + j] + a1[i] * b1[j];
        }
    }
    (x1, x2)
}

impl RoughLift {
    pub fn n(&self) -> usize {
        self.grid.n
    }

    pub fn with_mean(mut self, model: &CovarianceModel) -> Result<Self> {
        self.x2_mean = Some(level2_mean(model, self.grid, self.dim)?);
        Ok(self)
    }

    #[inline]
    pub fn x2(&self, k: usize, i: usize, j: usize) -> f64 {
        self.x2[k][i * self.dim + j]
    }

    /// Composed increments over coarse intervals `k0..k1`.
    pub fn compose(&self, k0: usize, k1: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        if k0 > k1 || k1 > self.n() {
            return Err(Error::domain(format!("interval {k0}..{k1} outside lift of {} steps", self.n())));
        }
        let d = self.dim;
        let mut acc = (vec![0.0; d], vec![0.0; d * d]);
        for k in k0..k1 {
            acc = chen(&acc.0, &acc.1, &self.x1[k], &self.x2[k]);
        }
        Ok(acc)
    }

    /// Antisymmetric part `(x2^{ij} - x2^{ji}) / 2` on interval `k`.
    pub fn levy_area(&self, k: usize, i: usize, j: usize) -> f64 {
        0.5 * (self.x2(k, i, j) - self.x2(k, j, i))
    }

    /// Largest deviation from `x2 + x2^T = x1 (x) x1` over all intervals.
    pub fn shuffle_defect(&self) -> f64 {
        let d = self.dim;
        let mut worst = 0.0f64;
        for k in 0..self.n() {
            for i in 0..d {
                for j in 0..d {
                    let e = self.x2(k, i, j) + self.x2(k, j, i) - self.x1[k][i] * self.x1[k][j];
                    worst = worst.max(e.abs());
                }
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_path(v: &[f64], n: usize) -> GridPath {
        let grid = UniformGrid::new(n, 1.0).unwrap();
        let values = v.iter().map(|&c| (0..=n).map(|k| c * grid.time(k)).collect()).collect();
        GridPath { grid, values, model: CovarianceModel::bm(1.0).unwrap(), seed: 0, path_id: 0 }
    }

    #[test]
    fn line_has_half_square_area() {
        let v = [1.0, -2.0, 0.5];
        let p = line_path(&v, 32);
        let lift = lift_level2(&p, 4).unwrap();
        let h = 0.25;
        for k in 0..4 {
            for i in 0..3 {
                for j in 0..3 {
                    assert!((lift.x2(k, i, j) - 0.5 * v[i] * v[j] * h * h).abs() < 1e-14);
                }
            }
        }
        assert!(lift_level2(&p, 5).is_err());
    }

    #[test]
    fn chen_matches_direct() {
        let m = CovarianceModel::fbm(0.45, 1.0).unwrap();
        let p = crate::simulate::sample_paths(&m, 64, 2, 1, 11).unwrap().remove(0);
        let lift = lift_level2(&p, 8).unwrap();
        let (c1, c2) = lift.compose(2, 7).unwrap();
        let (d1, d2) = signature2(&p, 16, 56);
        for (a, b) in c1.iter().zip(&d1).chain(c2.iter().zip(&d2)) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(lift.shuffle_defect() < 1e-14);
    }

    #[test]
    fn means() {
        let bm = CovarianceModel::bm(1.0).unwrap();
        let g = UniformGrid::new(4, 1.0).unwrap();
        let m = level2_mean(&bm, g, 2).unwrap();
        assert!((m[1][0] - 0.125).abs() < 1e-15 && m[1][1] == 0.0 && m[1][2] == 0.0);
        let f = CovarianceModel::fbm(0.45, 1.0).unwrap();
        let m = level2_mean(&f, UniformGrid::new(64, 1.0).unwrap(), 1).unwrap();
        assert!((m[10][0] - 0.5 * (1.0f64 / 64.0).powf(0.9)).abs() < 1e-14);
    }
}
