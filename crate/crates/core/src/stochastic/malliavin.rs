//! Malliavin derivatives of integrands on the grid.

use crate::controlled::{FunctionSpec, Potential};
use crate::error::{Error, Result};
use crate::simulate::GridPath;

/// `D^i_{t_r} y^j_{t_t}` for `r, t` in `0..=n`.
#[derive(Debug, Clone)]
pub enum MalliavinField {
    /// Integrand `y = grad f(x)`: `D^i_r y^j_t = d_{ij} f(x_t) 1{r <= t}`.
    Gradient { dim: usize, hess: Vec<Vec<f64>> },
    /// Explicit values, `data[((i * d + j) * (n + 1) + r) * (n + 1) + t]`.
    Dense { dim: usize, n: usize, data: Vec<f64> },
}

impl MalliavinField {
    pub fn dim(&self) -> usize {
        match self {
            MalliavinField::Gradient { dim, .. } | MalliavinField::Dense { dim, .. } => *dim,
        }
    }

    pub fn n(&self) -> usize {
        match self {
            MalliavinField::Gradient { hess, .. } => hess.len() - 1,
            MalliavinField::Dense { n, .. } => *n,
        }
    }

    pub fn dense(dim: usize, n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != dim * dim * (n + 1) * (n + 1) {
            return Err(Error::shape("Malliavin field data does not match dimension and grid"));
        }
        Ok(MalliavinField::Dense { dim, n, data })
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, r: usize, t: usize) -> f64 {
        match self {
            MalliavinField::Gradient { dim, hess } => {
                if r <= t {
                    hess[t][i * dim + j]
                } else {
                    0.0
                }
            }
            MalliavinField::Dense { dim, n, data } => data[((i * dim + j) * (n + 1) + r) * (n + 1) + t],
        }
    }
}

/// Closed-form Malliavin derivative of `grad f(x)` along `path`.
pub fn malliavin_of_gradient(spec: &FunctionSpec, path: &GridPath) -> Result<MalliavinField> {
    let hess: Vec<Vec<f64>> = (0..=path.grid.n).map(|k| spec.hessian(&path.at(k))).collect();
    if let Some(k) = hess.iter().position(|h| h.iter().any(|v| !v.is_finite())) {
        return Err(Error::Numeric { what: format!("Hessian of `{spec}`"), location: format!("k = {k}") });
    }
    Ok(MalliavinField::Gradient { dim: path.dim(), hess })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariance::CovarianceModel;
    use crate::simulate::sample_paths;

    #[test]
    fn gradient_fields() {
        let m = CovarianceModel::bm(1.0).unwrap();
        let p = sample_paths(&m, 8, 2, 1, 3).unwrap().remove(0);
        let lin = malliavin_of_gradient(&FunctionSpec::Linear, &p).unwrap();
        assert!((0..=8).all(|r| (0..=8).all(|t| lin.get(0, 1, r, t) == 0.0 && lin.get(1, 1, r, t) == 0.0)));
        let q = malliavin_of_gradient(&FunctionSpec::Quadratic, &p).unwrap();
        assert_eq!(q.get(0, 0, 3, 5), 1.0);
        assert_eq!(q.get(0, 0, 6, 5), 0.0);
        assert_eq!(q.get(0, 1, 3, 5), 0.0);
        let t = malliavin_of_gradient(&FunctionSpec::Product, &p).unwrap();
        assert_eq!(t.get(0, 1, 2, 4), t.get(1, 0, 2, 4));
    }
}
