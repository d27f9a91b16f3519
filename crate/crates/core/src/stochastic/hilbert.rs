//! Inner products in the Cameron-Martin space of the driver.

use crate::covariance::{CovarianceGrid, CovarianceModel};
use crate::error::{Error, Result};
use crate::grid::{GridFunction1D, UniformGrid};

/// Step function equal to 1 on the cells inside `[a, b]`. Cell `k` is
/// represented by the value at its left point `t_k`.
pub fn indicator(grid: UniformGrid, a: f64, b: f64) -> Result<GridFunction1D> {
    let (ia, ib) = match (grid.index_of(a), grid.index_of(b)) {
        (Some(x), Some(y)) if x <= y => (x, y),
        _ => return Err(Error::domain(format!("[{a}, {b}] is not a grid interval"))),
    };
    let values = (0..=grid.n).map(|k| if k >= ia && k < ib { 1.0 } else { 0.0 }).collect();
    GridFunction1D::new(grid, values)
}

/// `sum_{i,j} h1(t_i) h2(t_j) R^{t_i t_{i+1}}_{t_j t_{j+1}}` over all grid cells.
pub fn h_inner(h1: &GridFunction1D, h2: &GridFunction1D, model: &CovarianceModel) -> Result<f64> {
    if h1.grid != h2.grid {
        return Err(Error::shape("h_inner needs a common grid"));
    }
    let cg = CovarianceGrid::new(model, h1.grid)?;
    Ok(h_inner_on(&h1.values, &h2.values, &cg))
}

pub(crate) fn h_inner_on(h1: &[f64], h2: &[f64], cg: &CovarianceGrid) -> f64 {
    let n = cg.grid.n;
    let mut s = 0.0;
    for i in 0..n {
        if h1[i] == 0.0 {
            continue;
        }
        let mut row = 0.0;
        for j in 0..n {
            row += h2[j] * cg.cell(i, j);
        }
        s += h1[i] * row;
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indicators_reproduce_covariance() {
        let m = CovarianceModel::fbm(0.4, 1.0).unwrap();
        let g = UniformGrid::new(10, 1.0).unwrap();
        let a = indicator(g, 0.0, 0.3).unwrap();
        let b = indicator(g, 0.0, 0.7).unwrap();
        assert!((h_inner(&a, &b, &m).unwrap() - m.cov(0.3, 0.7).unwrap()).abs() < 1e-14);
        let c = indicator(g, 0.2, 0.5).unwrap();
        let e = indicator(g, 0.4, 0.9).unwrap();
        let expect = m.rect_increment(0.2, 0.5, 0.4, 0.9).unwrap();
        assert!((h_inner(&c, &e, &m).unwrap() - expect).abs() < 1e-14);
        assert!((h_inner(&c, &e, &m).unwrap() - h_inner(&e, &c, &m).unwrap()).abs() < 1e-15);
        assert!(indicator(g, 0.25, 0.5).is_err());
    }
}
