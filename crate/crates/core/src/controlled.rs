//! Controlled integrands and compensated Riemann sums.
//!
//! Index conventions: `yx[k][i*d + j]` is the derivative of `y^i` in the
//! direction `x^j`, and `yxx[k][(i*d + j)*d + l]` the second derivative in
//! directions `x^j, x^l`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::UniformGrid;
use crate::quadrature::Interval;
use crate::roughlift::RoughLift;
use crate::simulate::GridPath;

/// A smooth function on `R^d` with derivatives up to order three.
pub trait Potential: Send + Sync {
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
    /// Row-major `d x d`.
    fn hessian(&self, x: &[f64]) -> Vec<f64>;
    /// Row-major `d x d x d`.
    fn third(&self, x: &[f64]) -> Vec<f64>;
}

/// Built-in potentials, plus user-supplied ones.
#[derive(Clone)]
pub enum FunctionSpec {
    /// `sum_i x_i`
    Linear,
    /// `|x|^2 / 2`
    Quadratic,
    /// `sum_i sum_k c_k x_i^k`
    Polynomial { coeffs: Vec<f64> },
    /// `sum_i sin(x_i)`
    Trig,
    /// `x_1 x_2`
    Product,
    Custom(Arc<dyn Potential>),
}

impl fmt::Debug for FunctionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for FunctionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FunctionSpec::Linear => write!(f, "linear"),
            FunctionSpec::Quadratic => write!(f, "quad"),
            FunctionSpec::Polynomial { coeffs } => {
                let c: Vec<String> = coeffs.iter().map(|c| c.to_string()).collect();
                write!(f, "poly:{}", c.join(","))
            }
            FunctionSpec::Trig => write!(f, "trig"),
            FunctionSpec::Product => write!(f, "product"),
            FunctionSpec::Custom(_) => write!(f, "custom"),
        }
    }
}

impl FromStr for FunctionSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "linear" => Ok(FunctionSpec::Linear),
            "quad" | "quadratic" => Ok(FunctionSpec::Quadratic),
            "trig" => Ok(FunctionSpec::Trig),
            "product" => Ok(FunctionSpec::Product),
            other => {
                let body = other
                    .strip_prefix("poly:")
                    .ok_or_else(|| Error::Config(format!("unknown function spec `{other}`")))?;
                let coeffs = body
                    .split(',')
                    .map(|c| c.trim().parse::<f64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|e| Error::Config(format!("bad polynomial coefficients `{body}`: {e}")))?;
                if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
                    return Err(Error::Config(format!("bad polynomial coefficients `{body}`")));
                }
                Ok(FunctionSpec::Polynomial { coeffs })
            }
        }
    }
}

/// Value and first three derivatives of `sum_k c_k u^k`.
fn poly_derivs(c: &[f64], u: f64) -> [f64; 4] {
    let mut out = [0.0; 4];
    for (k, &ck) in c.iter().enumerate() {
        let k = k as i32;
        let fall = |m: i32| (0..m).map(|r| (k - r) as f64).product::<f64>();
        for (m, o) in out.iter_mut().enumerate() {
            let m = m as i32;
            if k >= m {
                *o += ck * fall(m) * u.powi(k - m);
            }
        }
    }
    out
}

impl FunctionSpec {
    /// Separable specs: per-coordinate derivatives of orders 0..=3.
    fn separable(&self, u: f64) -> Option<[f64; 4]> {
        match self {
            FunctionSpec::Linear => Some([u, 1.0, 0.0, 0.0]),
            FunctionSpec::Quadratic => Some([0.5 * u * u, u, 1.0, 0.0]),
            FunctionSpec::Polynomial { coeffs } => Some(poly_derivs(coeffs, u)),
            FunctionSpec::Trig => Some([u.sin(), u.cos(), -u.sin(), -u.cos()]),
            _ => None,
        }
    }

    /// Whether the Hessian is constant, making second-order terms exact.
    pub fn min_dim(&self) -> usize {
        match self {
            FunctionSpec::Product => 2,
            _ => 1,
        }
    }
}

impl Potential for FunctionSpec {
    fn value(&self, x: &[f64]) -> f64 {
        match self {
            FunctionSpec::Product => x[0] * x[1],
            FunctionSpec::Custom(p) => p.value(x),
            s => x.iter().map(|&u| s.separable(u).unwrap()[0]).sum(),
        }
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        match self {
            FunctionSpec::Product => {
                let mut g = vec![0.0; x.len()];
                g[0] = x[1];
                g[1] = x[0];
                g
            }
            FunctionSpec::Custom(p) => p.gradient(x),
            s => x.iter().map(|&u| s.separable(u).unwrap()[1]).collect(),
        }
    }

    fn hessian(&self, x: &[f64]) -> Vec<f64> {
        let d = x.len();
        match self {
            FunctionSpec::Product => {
                let mut h = vec![0.0; d * d];
                h[1] = 1.0;
                h[d] = 1.0;
                h
            }
            FunctionSpec::Custom(p) => p.hessian(x),
            s => {
                let mut h = vec![0.0; d * d];
                for (i, &u) in x.iter().enumerate() {
                    h[i * d + i] = s.separable(u).unwrap()[2];
                }
                h
            }
        }
    }

    fn third(&self, x: &[f64]) -> Vec<f64> {
        let d = x.len();
        match self {
            FunctionSpec::Product => vec![0.0; d * d * d],
            FunctionSpec::Custom(p) => p.third(x),
            s => {
                let mut t = vec![0.0; d * d * d];
                for (i, &u) in x.iter().enumerate() {
                    t[(i * d + i) * d + i] = s.separable(u).unwrap()[3];
                }
                t
            }
        }
    }
}

/// Central finite-difference check of gradient, Hessian and third derivative
/// at random points of `[-1, 1]^d`. Returns the worst relative error.
pub fn check_derivatives(f: &dyn Potential, d: usize, points: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1.0);
    for _ in 0..points {
        let x: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let scale = x.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let h = 1e-5 * scale;
        let g = f.gradient(&x);
        let hs = f.hessian(&x);
        let th = f.third(&x);
        for j in 0..d {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += h;
            xm[j] -= h;
            worst = worst.max(rel((f.value(&xp) - f.value(&xm)) / (2.0 * h), g[j]));
            let (gp, gm) = (f.gradient(&xp), f.gradient(&xm));
            let (hp, hm) = (f.hessian(&xp), f.hessian(&xm));
            for i in 0..d {
                worst = worst.max(rel((gp[i] - gm[i]) / (2.0 * h), hs[i * d + j]));
                for l in 0..d {
                    let fd = (hp[i * d + l] - hm[i * d + l]) / (2.0 * h);
                    worst = worst.max(rel(fd, th[(i * d + l) * d + j]));
                }
            }
        }
    }
    worst
}

#[derive(Debug, Clone)]
pub enum Source {
    Gradient(FunctionSpec),
    Custom,
}

/// Grid values of a controlled process and its Gubinelli derivatives.
#[derive(Debug, Clone)]
pub struct ControlledPath {
    pub grid: UniformGrid,
    pub dim: usize,
    pub y: Vec<Vec<f64>>,
    pub yx: Vec<Vec<f64>>,
    pub yxx: Option<Vec<Vec<f64>>>,
    pub source: Source,
}

/// `y = grad f(x)`, `y^x = hess f(x)`, `y^xx = D^3 f(x)` along `path`.
pub fn from_gradient(spec: &FunctionSpec, path: &GridPath) -> Result<ControlledPath> {
    let d = path.dim();
    if d < spec.min_dim() {
        return Err(Error::domain(format!("function `{spec}` needs d >= {}", spec.min_dim())));
    }
    let n = path.grid.n;
    let mut y = Vec::with_capacity(n + 1);
    let mut yx = Vec::with_capacity(n + 1);
    let mut yxx = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let x = path.at(k);
        let (g, h, t) = (spec.gradient(&x), spec.hessian(&x), spec.third(&x));
        if g.iter().chain(&h).chain(&t).any(|v| !v.is_finite()) {
            return Err(Error::Numeric {
                what: format!("derivatives of `{spec}`"),
                location: format!("t = {} (k = {k}, path {})", path.grid.time(k), path.path_id),
            });
        }
        y.push(g);
        yx.push(h);
        yxx.push(t);
    }
    Ok(ControlledPath { grid: path.grid, dim: d, y, yx, yxx: Some(yxx), source: Source::Gradient(spec.clone()) })
}

impl ControlledPath {
    /// User-supplied grids; `yxx` may be omitted for first-order use.
    pub fn custom(
        grid: UniformGrid,
        dim: usize,
        y: Vec<Vec<f64>>,
        yx: Vec<Vec<f64>>,
        yxx: Option<Vec<Vec<f64>>>,
    ) -> Result<Self> {
        let n = grid.n + 1;
        let ok = |v: &Vec<Vec<f64>>, w: usize| v.len() == n && v.iter().all(|r| r.len() == w);
        if !ok(&y, dim) || !ok(&yx, dim * dim) || yxx.as_ref().is_some_and(|t| !ok(t, dim * dim * dim)) {
            return Err(Error::shape("controlled path grids do not match grid and dimension"));
        }
        let finite = |v: &Vec<Vec<f64>>| v.iter().flatten().all(|x| x.is_finite());
        if !finite(&y) || !finite(&yx) || yxx.as_ref().is_some_and(|t| !finite(t)) {
            return Err(Error::Numeric { what: "custom controlled path".into(), location: "input grids".into() });
        }
        Ok(Self { grid, dim, y, yx, yxx, source: Source::Custom })
    }

    #[inline]
    pub fn yx(&self, k: usize, i: usize, j: usize) -> f64 {
        self.yx[k][i * self.dim + j]
    }

    fn check_lift(&self, lift: &RoughLift) -> Result<()> {
        if lift.grid != self.grid || lift.dim != self.dim {
            return Err(Error::shape("controlled path and lift live on different grids"));
        }
        Ok(())
    }

    /// Scale `y`, `yx` and `yxx` by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        let s = |v: &Vec<Vec<f64>>| v.iter().map(|r| r.iter().map(|x| c * x).collect()).collect();
        Self {
            grid: self.grid,
            dim: self.dim,
            y: s(&self.y),
            yx: s(&self.yx),
            yxx: self.yxx.as_ref().map(s),
            source: Source::Custom,
        }
    }
}

/// Resolve a time range to coarse grid indices.
pub fn range_indices(grid: &UniformGrid, range: Interval) -> Result<(usize, usize)> {
    let a = grid.index_of(range.lo);
    let b = grid.index_of(range.hi);
    match (a, b) {
        (Some(a), Some(b)) if a <= b => Ok((a, b)),
        _ => Err(Error::domain(format!("range [{}, {}] is not aligned with the grid", range.lo, range.hi))),
    }
}

/// Compensated sum over one coarse interval.
#[inline]
pub(crate) fn rough_term(y: &ControlledPath, lift: &RoughLift, k: usize) -> f64 {
    let d = y.dim;
    let mut s = 0.0;
    for i in 0..d {
        s += y.y[k][i] * lift.x1[k][i];
        for j in 0..d {
            s += y.yx(k, i, j) * lift.x2(k, j, i);
        }
    }
    s
}

/// `sum_k [y_{t_k} . x1_k + sum_{ij} yx^{ij}_{t_k} x2^{ji}_k]` over coarse
/// intervals in `range`.
pub fn rough_integral(y: &ControlledPath, lift: &RoughLift, range: Interval) -> Result<f64> {
    y.check_lift(lift)?;
    let (a, b) = range_indices(&lift.grid, range)?;
    Ok(rough_integral_indexed(y, lift, a, b))
}

pub fn rough_integral_indexed(y: &ControlledPath, lift: &RoughLift, a: usize, b: usize) -> f64 {
    (a..b).map(|k| rough_term(y, lift, k)).sum()
}

/// Remainders `r` (per component) and `r^x` (per pair) over `[t_a, t_b]`.
pub fn remainders(y: &ControlledPath, lift: &RoughLift, a: usize, b: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    y.check_lift(lift)?;
    let d = y.dim;
    let (x1, x2) = lift.compose(a, b)?;
    let mut r = vec![0.0; d];
    let mut rx = vec![0.0; d * d];
    for i in 0..d {
        let mut v = y.y[b][i] - y.y[a][i];
        for j in 0..d {
            v -= y.yx(a, i, j) * x1[j];
            let mut w = y.yx(b, i, j) - y.yx(a, i, j);
            if let Some(t) = &y.yxx {
                for l in 0..d {
                    v -= t[a][(i * d + j) * d + l] * x2[j * d + l];
                    w -= t[a][(i * d + j) * d + l] * x1[l];
                }
            }
            rx[i * d + j] = w;
        }
        r[i] = v;
    }
    Ok((r, rx))
}

/// Largest `|r|` and `|r^x|` over consecutive blocks of `block` coarse steps.
pub fn remainder_scale(y: &ControlledPath, lift: &RoughLift, block: usize) -> Result<(f64, f64)> {
    if block == 0 || lift.n() % block != 0 {
        return Err(Error::shape(format!("block {block} does not divide {}", lift.n())));
    }
    let (mut mr, mut mx) = (0.0f64, 0.0f64);
    for s in (0..lift.n()).step_by(block) {
        let (r, rx) = remainders(y, lift, s, s + block)?;
        mr = r.iter().fold(mr, |m, v| m.max(v.abs()));
        mx = rx.iter().fold(mx, |m, v| m.max(v.abs()));
    }
    Ok((mr, mx))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariance::CovarianceModel;
    use crate::roughlift::lift_level2;
    use crate::simulate::sample_paths;

    #[test]
    fn parse_specs() {
        assert!(matches!("linear".parse::<FunctionSpec>().unwrap(), FunctionSpec::Linear));
        let p: FunctionSpec = "poly:0,0,0.5,0.1".parse().unwrap();
        assert_eq!(p.to_string(), "poly:0,0,0.5,0.1");
        assert!("cubic".parse::<FunctionSpec>().is_err());
        assert!("poly:1,x".parse::<FunctionSpec>().is_err());
    }

    #[test]
    fn derivatives_are_consistent() {
        for s in ["linear", "quad", "poly:0.3,-1,0.5,0.25,0.1", "trig", "product"] {
            let f: FunctionSpec = s.parse().unwrap();
            assert!(check_derivatives(&f, 3, 10, 5) < 1e-5, "{s}");
        }
    }

    #[test]
    fn gradient_grids() {
        let m = CovarianceModel::fbm(0.45, 1.0).unwrap();
        let p = sample_paths(&m, 16, 2, 1, 1).unwrap().remove(0);
        let lin = from_gradient(&FunctionSpec::Linear, &p).unwrap();
        assert!(lin.y.iter().all(|v| v == &[1.0, 1.0]));
        assert!(lin.yx.iter().flatten().all(|&v| v == 0.0));
        let prod = from_gradient(&FunctionSpec::Product, &p).unwrap();
        assert_eq!(prod.y[5], vec![p.values[1][5], p.values[0][5]]);
        assert_eq!(prod.yx[5], vec![0.0, 1.0, 1.0, 0.0]);
        let p1 = sample_paths(&m, 16, 1, 1, 1).unwrap().remove(0);
        assert!(from_gradient(&FunctionSpec::Product, &p1).is_err());
    }

    #[test]
    fn exact_cases() {
        let m = CovarianceModel::fbm(0.45, 1.0).unwrap();
        let p = sample_paths(&m, 64, 1, 1, 2).unwrap().remove(0);
        let lift = lift_level2(&p, 16).unwrap();
        let fine_coarse = p.coarsen(4).unwrap();
        let y = from_gradient(&FunctionSpec::Quadratic, &fine_coarse).unwrap();
        let xt = p.values[0][64];
        let v = rough_integral(&y, &lift, Interval::new(0.0, 1.0)).unwrap();
        assert!((v - 0.5 * xt * xt).abs() < 1e-12);
        let (r, rx) = remainders(&y, &lift, 3, 11).unwrap();
        assert!(r[0].abs() < 1e-12 && rx[0].abs() < 1e-12);
        assert!(rough_integral(&y, &lift, Interval::new(0.0, 0.3)).is_err());
        let c = from_gradient(&FunctionSpec::Linear, &fine_coarse).unwrap();
        let v = rough_integral(&c, &lift, Interval::new(0.25, 0.75)).unwrap();
        assert!((v - (p.values[0][48] - p.values[0][16])).abs() < 1e-12);
    }
}
