//! Left-point Stieltjes sums against the covariance in one, two and four
//! dimensions, and the matching Young bounds.

use crate::covariance::CovarianceModel;
use crate::error::{Error, Result};
use crate::grid::{GridFunction1D, GridFunction2D, IndexRect, UniformGrid};
use crate::variation::{p_variation, rho_var_2d};

/// Closed time interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    fn resolve(&self, grid: &UniformGrid) -> Result<(usize, usize)> {
        if self.lo > self.hi {
            return Err(Error::domain(format!("reversed interval [{}, {}]", self.lo, self.hi)));
        }
        let a = grid.index_of(self.lo);
        let b = grid.index_of(self.hi);
        match (a, b) {
            (Some(a), Some(b)) => Ok((a, b)),
            _ => Err(Error::domain(format!(
                "interval [{}, {}] is not aligned with a grid of {} steps on [0, {}]",
                self.lo, self.hi, grid.n, grid.horizon
            ))),
        }
    }
}

/// `[a.lo, a.hi] x [b.lo, b.hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub a: Interval,
    pub b: Interval,
}

impl Rect {
    pub fn new(s0: f64, s1: f64, u0: f64, u1: f64) -> Self {
        Self { a: Interval::new(s0, s1), b: Interval::new(u0, u1) }
    }

    pub fn to_index(&self, rows: &UniformGrid, cols: &UniformGrid) -> Result<IndexRect> {
        let (r0, r1) = self.a.resolve(rows)?;
        let (c0, c1) = self.b.resolve(cols)?;
        Ok(IndexRect::new(r0, r1, c0, c1))
    }
}

/// `sum_k f(t_k) (g(t_{k+1}) - g(t_k))`.
pub fn young_1d(f: &GridFunction1D, g: &GridFunction1D) -> Result<f64> {
    if f.values.len() != g.values.len() {
        return Err(Error::shape(format!("grid lengths differ: {} vs {}", f.values.len(), g.values.len())));
    }
    Ok(left_sum(&f.values, &g.values))
}

pub(crate) fn left_sum(f: &[f64], g: &[f64]) -> f64 {
    f.iter().zip(g.windows(2)).map(|(a, w)| a * (w[1] - w[0])).sum()
}

/// Covariance values on the carrier grids of `f`.
fn cov_on(f: &GridFunction2D, model: &CovarianceModel) -> Result<GridFunction2D> {
    for g in [f.rows, f.cols] {
        if (g.horizon - model.horizon()).abs() > 1e-12 * model.horizon() {
            return Err(Error::domain("grid horizon differs from the covariance horizon"));
        }
    }
    GridFunction2D::from_fn(f.rows, f.cols, |s, t| model.eval_unchecked(s, t))
}

/// `sum_{i,j} f(t_i, t'_j) R^{t_i t_{i+1}}_{t'_j t'_{j+1}}` over the cells of `rect`.
pub fn young_2d(f: &GridFunction2D, model: &CovarianceModel, rect: Rect) -> Result<f64> {
    let r = rect.to_index(&f.rows, &f.cols)?;
    let cov = cov_on(f, model)?;
    Ok(young_2d_indexed(f, &cov, r))
}

/// Same sum with the integrator given on the same grids as `f`.
pub fn young_2d_indexed(f: &GridFunction2D, r: &GridFunction2D, rect: IndexRect) -> f64 {
    let mut s = 0.0;
    for i in rect.r0..rect.r1 {
        for j in rect.c0..rect.c1 {
            s += f.get(i, j) * r.rect_increment(IndexRect::new(i, i + 1, j, j + 1));
        }
    }
    s
}

/// Riemann zeta function for real `s > 1` by Euler-Maclaurin summation.
pub fn zeta(s: f64) -> Result<f64> {
    if !(s > 1.0) {
        return Err(Error::domain(format!("zeta needs s > 1, got {s}")));
    }
    const N: usize = 12;
    // B_{2j} / (2j)!
    const B: [f64; 6] = [
        1.0 / 12.0,
        -1.0 / 720.0,
        1.0 / 30240.0,
        -1.0 / 1209600.0,
        1.0 / 47900160.0,
        -691.0 / 1307674368000.0,
    ];
    let n = N as f64;
    let mut sum: f64 = (1..N).map(|k| (k as f64).powf(-s)).sum();
    sum += n.powf(1.0 - s) / (s - 1.0) + 0.5 * n.powf(-s);
    let mut rising = s;
    let mut pow = n.powf(-s - 1.0);
    for (j, b) in B.iter().enumerate() {
        sum += b * rising * pow;
        let k = 2 * j as i32;
        rising *= (s + k as f64 + 1.0) * (s + k as f64 + 2.0);
        pow /= n * n;
    }
    Ok(sum)
}

/// Young constant `C_{p,q} = 2 (1 + zeta(1/p + 1/q))^2`.
pub fn young_constant(p: f64, q: f64) -> Result<f64> {
    let theta = 1.0 / p + 1.0 / q;
    if !(theta > 1.0) || p < 1.0 || q < 1.0 {
        return Err(Error::domain(format!("Young bound needs p, q >= 1 and 1/p + 1/q > 1, got p={p}, q={q}")));
    }
    let z = zeta(theta)?;
    Ok(2.0 * (1.0 + z) * (1.0 + z))
}

/// `|f(a,b)| + ||f(a,.)|| + ||f(.,b)|| + ||f||`, all p-variation norms over `rect`.
pub fn boundary_norm(f: &GridFunction2D, p: f64, rect: IndexRect) -> Result<f64> {
    f.check_rect(rect)?;
    let corner = f.get(rect.r0, rect.c0).abs();
    let row: Vec<f64> = (rect.c0..=rect.c1).map(|j| f.get(rect.r0, j)).collect();
    let col: Vec<f64> = (rect.r0..=rect.r1).map(|i| f.get(i, rect.c0)).collect();
    let v2 = rho_var_2d(f, p, rect)?.value;
    Ok(corner + p_variation(&row, p)?.value + p_variation(&col, p)?.value + v2)
}

/// Right-hand side of the 2d Young inequality for `young_2d(f, model, rect)`.
pub fn young_2d_bound(f: &GridFunction2D, model: &CovarianceModel, rect: Rect, p: f64, q: f64) -> Result<f64> {
    let c = young_constant(p, q)?;
    let r = rect.to_index(&f.rows, &f.cols)?;
    let cov = cov_on(f, model)?;
    let fr = boundary_norm(f, p, r)?;
    if fr == 0.0 {
        return Ok(0.0);
    }
    Ok(c * fr * rho_var_2d(&cov, q, r)?.value)
}

fn four_grids(f: &GridFunction2D, g: &GridFunction2D) -> Result<UniformGrid> {
    let grid = f.rows;
    if f.cols != grid || g.rows != grid || g.cols != grid {
        return Err(Error::shape("four-dimensional sums need f and g on one common grid"));
    }
    Ok(grid)
}

/// Order in which the four-fold sum is iterated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Iteration {
    /// Inner sum over `(s1, s2)`, outer over `(s3, s4)`.
    InnerFirst,
    /// Inner sum over `(s3, s4)`, outer over `(s1, s2)`.
    OuterFirst,
}

/// `sum f(s1,s3) g(s2,s4) dR(s1,s2) dR(s3,s4)` over the cells of four intervals.
pub fn young_4d(f: &GridFunction2D, g: &GridFunction2D, model: &CovarianceModel, rects: [Interval; 4]) -> Result<f64> {
    young_4d_with(f, g, model, rects, Iteration::InnerFirst)
}

pub fn young_4d_with(
    f: &GridFunction2D,
    g: &GridFunction2D,
    model: &CovarianceModel,
    rects: [Interval; 4],
    order: Iteration,
) -> Result<f64> {
    let grid = four_grids(f, g)?;
    let mut idx = [(0, 0); 4];
    for (k, iv) in rects.iter().enumerate() {
        idx[k] = iv.resolve(&grid)?;
    }
    if idx.iter().any(|(a, b)| a == b) {
        return Ok(0.0);
    }
    let cg = model.on_grid(grid.n)?;
    let cell = |a: usize, b: usize| cg.cell(a, b);
    Ok(sum_4d(f, g, &cell, idx, order))
}

/// Four-fold sum with a precomputed cell-increment function.
pub(crate) fn sum_4d(
    f: &GridFunction2D,
    g: &GridFunction2D,
    cell: &dyn Fn(usize, usize) -> f64,
    idx: [(usize, usize); 4],
    order: Iteration,
) -> f64 {
    let [(a1, b1), (a2, b2), (a3, b3), (a4, b4)] = idx;
    match order {
        Iteration::InnerFirst => {
            // B(s1, s4) = sum_{s2} dR(s1,s2) g(s2,s4)
            let n4 = b4 - a4;
            let mut bm = vec![0.0; (b1 - a1) * n4];
            for i1 in a1..b1 {
                for i2 in a2..b2 {
                    let r = cell(i1, i2);
                    for i4 in a4..b4 {
                        bm[(i1 - a1) * n4 + i4 - a4] += r * g.get(i2, i4);
                    }
                }
            }
            let mut total = 0.0;
            for i3 in a3..b3 {
                for i4 in a4..b4 {
                    let mut fv = 0.0;
                    for i1 in a1..b1 {
                        fv += f.get(i1, i3) * bm[(i1 - a1) * n4 + i4 - a4];
                    }
                    total += fv * cell(i3, i4);
                }
            }
            total
        }
        Iteration::OuterFirst => {
            // B(s3, s2) = sum_{s4} dR(s3,s4) g(s2,s4)
            let n2 = b2 - a2;
            let mut bm = vec![0.0; (b3 - a3) * n2];
            for i3 in a3..b3 {
                for i4 in a4..b4 {
                    let r = cell(i3, i4);
                    for i2 in a2..b2 {
                        bm[(i3 - a3) * n2 + i2 - a2] += r * g.get(i2, i4);
                    }
                }
            }
            let mut total = 0.0;
            for i1 in a1..b1 {
                for i2 in a2..b2 {
                    let mut gv = 0.0;
                    for i3 in a3..b3 {
                        gv += f.get(i1, i3) * bm[(i3 - a3) * n2 + i2 - a2];
                    }
                    total += gv * cell(i1, i2);
                }
            }
            total
        }
    }
}

/// Right-hand side of the 4d Young inequality. The constant enters squared
/// since the bound comes from two nested 2d estimates.
pub fn young_4d_bound(
    f: &GridFunction2D,
    g: &GridFunction2D,
    model: &CovarianceModel,
    rects: [Interval; 4],
    p: f64,
    q: f64,
) -> Result<f64> {
    let c = young_constant(p, q)?;
    let grid = four_grids(f, g)?;
    let mut idx = [(0, 0); 4];
    for (k, iv) in rects.iter().enumerate() {
        idx[k] = iv.resolve(&grid)?;
    }
    let cg = model.on_grid(grid.n)?;
    let cov = cg.as_grid_function();
    let [(a1, b1), (a2, b2), (a3, b3), (a4, b4)] = idx;
    let r12 = rho_var_2d(cov, q, IndexRect::new(a1, b1, a2, b2))?.value;
    let r34 = rho_var_2d(cov, q, IndexRect::new(a3, b3, a4, b4))?.value;
    let fb = boundary_norm(f, p, IndexRect::new(a1, b1, a3, b3))?;
    let gb = boundary_norm(g, p, IndexRect::new(a2, b2, a4, b4))?;
    Ok(c * c * r12 * r34 * fb * gb)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> UniformGrid {
        UniformGrid::new(n, 1.0).unwrap()
    }

    #[test]
    fn one_dimensional_sums() {
        let g = grid(10);
        let one = GridFunction1D::constant(g, 1.0);
        let h = GridFunction1D::from_fn(g, |t| (3.0 * t).sin()).unwrap();
        assert!((young_1d(&one, &h).unwrap() - 3f64.sin()).abs() < 1e-14);
        assert_eq!(young_1d(&h, &GridFunction1D::constant(g, 2.0)).unwrap(), 0.0);
        assert!(young_1d(&h, &GridFunction1D::constant(grid(5), 2.0)).is_err());
    }

    #[test]
    fn zeta_values() {
        let pi2 = std::f64::consts::PI.powi(2);
        assert!((zeta(2.0).unwrap() - pi2 / 6.0).abs() < 1e-13);
        assert!((zeta(4.0).unwrap() - pi2 * pi2 / 90.0).abs() < 1e-13);
        assert!((zeta(1.5).unwrap() - 2.612_375_348_685_488).abs() < 1e-12);
        assert!(zeta(1.0).is_err());
    }

    #[test]
    fn two_dimensional_constants() {
        let bm = CovarianceModel::bm(1.0).unwrap();
        let g = grid(8);
        let one = GridFunction2D::square(g, |_, _| 1.0).unwrap();
        let full = Rect::new(0.0, 1.0, 0.0, 1.0);
        assert!((young_2d(&one, &bm, full).unwrap() - 1.0).abs() < 1e-14);
        let c = one.scale(2.5);
        assert!((young_2d(&c, &bm, full).unwrap() - 2.5).abs() < 1e-14);
        assert!(young_2d(&one, &bm, Rect::new(0.0, 1.1, 0.0, 1.0)).is_err());
        assert!(young_2d(&one, &bm, Rect::new(0.0, 0.3, 0.0, 1.0)).is_err());
        let b = young_2d_bound(&one, &bm, full, 2.0, 1.0).unwrap();
        assert!(b >= 1.0);
        let zero = one.scale(0.0);
        assert_eq!(young_2d_bound(&zero, &bm, full, 2.0, 1.0).unwrap(), 0.0);
        assert!(young_2d_bound(&one, &bm, full, 2.0, 2.0).is_err());
    }

    #[test]
    fn four_dimensional_constant_case() {
        let f = CovarianceModel::fbm(0.4, 1.0).unwrap();
        let g = grid(6);
        let one = GridFunction2D::square(g, |_, _| 1.0).unwrap();
        let iv = [Interval::new(0.0, 0.5), Interval::new(0.0, 1.0), Interval::new(1.0 / 6.0, 0.5), Interval::new(0.5, 1.0)];
        let v = young_4d(&one, &one, &f, iv).unwrap();
        let expect = f.rect_increment(0.0, 0.5, 0.0, 1.0).unwrap() * f.rect_increment(1.0 / 6.0, 0.5, 0.5, 1.0).unwrap();
        assert!((v - expect).abs() < 1e-14);
        let degenerate = [iv[0], iv[1], Interval::new(0.5, 0.5), iv[3]];
        assert_eq!(young_4d(&one, &one, &f, degenerate).unwrap(), 0.0);
    }
}
