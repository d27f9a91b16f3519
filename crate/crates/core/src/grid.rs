//! Uniform time grids and functions sampled on them.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform partition `t_k = k T / n`, `k = 0..=n`, of `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformGrid {
    pub n: usize,
    pub horizon: f64,
}

impl UniformGrid {
    pub fn new(n: usize, horizon: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("grid needs at least one interval"));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::domain(format!("horizon must be positive, got {horizon}")));
        }
        Ok(Self { n, horizon })
    }

    #[inline]
    pub fn time(&self, k: usize) -> f64 {
        if k == self.n {
            self.horizon
        } else {
            self.horizon * k as f64 / self.n as f64
        }
    }

    #[inline]
    pub fn step(&self) -> f64 {
        self.horizon / self.n as f64
    }

    pub fn len(&self) -> usize {
        self.n + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.n).map(|k| self.time(k)).collect()
    }

    /// Coarse grid obtained by keeping every `factor`-th point.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        if factor == 0 || self.n % factor != 0 {
            return Err(Error::shape(format!(
                "grid of {} intervals is not divisible by {factor}",
                self.n
            )));
        }
        Self::new(self.n / factor, self.horizon)
    }

    /// Index of `t` on the grid, if `t` is a grid point (up to 1e-12 relative).
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let x = t / self.step();
        let k = x.round();
        if k < 0.0 || k > self.n as f64 {
            return None;
        }
        if (x - k).abs() <= 1e-9 {
            Some(k as usize)
        } else {
            None
        }
    }
}

/// Half-open index ranges `[r0, r1) x [c0, c1)` of grid *cells*, or equivalently the
/// closed rectangle `[t_{r0}, t_{r1}] x [t_{c0}, t_{c1}]` in grid points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IndexRect {
    pub r0: usize,
    pub r1: usize,
    pub c0: usize,
    pub c1: usize,
}

impl IndexRect {
    pub fn new(r0: usize, r1: usize, c0: usize, c1: usize) -> Self {
        Self { r0, r1, c0, c1 }
    }

    pub fn square(a: usize, b: usize) -> Self {
        Self::new(a, b, a, b)
    }

    pub fn is_degenerate(&self) -> bool {
        self.r0 >= self.r1 || self.c0 >= self.c1
    }

    pub fn rows(&self) -> usize {
        self.r1.saturating_sub(self.r0)
    }

    pub fn cols(&self) -> usize {
        self.c1.saturating_sub(self.c0)
    }

    pub fn contains(&self, other: &IndexRect) -> bool {
        self.r0 <= other.r0 && other.r1 <= self.r1 && self.c0 <= other.c0 && other.c1 <= self.c1
    }
}

/// Values of a scalar function on a uniform grid, one entry per grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction1D {
    pub grid: UniformGrid,
    pub values: Vec<f64>,
}

impl GridFunction1D {
    pub fn new(grid: UniformGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::shape(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric {
                what: "grid function".into(),
                location: format!("index {k}"),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: UniformGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.times().into_iter().map(f).collect();
        Self::new(grid, values)
    }

    pub fn constant(grid: UniformGrid, c: f64) -> Self {
        Self { grid, values: vec![c; grid.len()] }
    }

    /// Reads a two-row CSV: grid times, then values.
    pub fn from_csv(path: impl AsRef<Path>) -> Result<Self> {
        let rows = read_numeric_csv(path)?;
        if rows.len() != 2 {
            return Err(Error::shape("1d grid CSV must have exactly two rows"));
        }
        let grid = grid_from_times(&rows[0])?;
        Self::new(grid, rows[1].clone())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Values `f(t_i, t'_j)` on a product of two uniform grids, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction2D {
    pub rows: UniformGrid,
    pub cols: UniformGrid,
    values: Vec<f64>,
}

impl GridFunction2D {
    pub fn new(rows: UniformGrid, cols: UniformGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows.len() * cols.len() {
            return Err(Error::shape(format!(
                "expected {}x{} values, got {}",
                rows.len(),
                cols.len(),
                values.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric {
                what: "2d grid function".into(),
                location: format!("({}, {})", k / cols.len(), k % cols.len()),
            });
        }
        Ok(Self { rows, cols, values })
    }

    pub fn from_fn(rows: UniformGrid, cols: UniformGrid, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(rows.len() * cols.len());
        for i in 0..rows.len() {
            let s = rows.time(i);
            for j in 0..cols.len() {
                values.push(f(s, cols.time(j)));
            }
        }
        Self::new(rows, cols, values)
    }

    pub fn square(grid: UniformGrid, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        Self::from_fn(grid, grid, f)
    }

    /// Reads a CSV whose first row holds the (shared) grid times and whose
    /// remaining rows hold `f(t_i, t_j)`.
    pub fn from_csv(path: impl AsRef<Path>) -> Result<Self> {
        let rows = read_numeric_csv(path)?;
        if rows.len() < 2 {
            return Err(Error::shape("2d grid CSV needs a header row and values"));
        }
        let grid = grid_from_times(&rows[0])?;
        let body: Vec<f64> = rows[1..].iter().flatten().copied().collect();
        Self::new(grid, grid, body)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols.len() + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.cols.len();
        &self.values[i * w..(i + 1) * w]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows.len()).map(|i| self.get(i, j)).collect()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows.len(), self.cols.len())
    }

    /// Full cell rectangle covering the grid.
    pub fn full_rect(&self) -> IndexRect {
        IndexRect::new(0, self.rows.n, 0, self.cols.n)
    }

    /// Rectangular increment `f(b,d) - f(b,c) - f(a,d) + f(a,c)` over grid points.
    #[inline]
    pub fn rect_increment(&self, r: IndexRect) -> f64 {
        self.get(r.r1, r.c1) - self.get(r.r1, r.c0) - self.get(r.r0, r.c1) + self.get(r.r0, r.c0)
    }

    pub fn check_rect(&self, r: IndexRect) -> Result<()> {
        if r.r0 > r.r1 || r.c0 > r.c1 || r.r1 > self.rows.n || r.c1 > self.cols.n {
            return Err(Error::domain(format!(
                "rectangle {r:?} outside {}x{} grid",
                self.rows.n, self.cols.n
            )));
        }
        Ok(())
    }

    pub fn scale(&self, c: f64) -> Self {
        Self { rows: self.rows, cols: self.cols, values: self.values.iter().map(|v| v * c).collect() }
    }

    pub fn transpose(&self) -> Self {
        let (nr, nc) = self.shape();
        let mut values = Vec::with_capacity(nr * nc);
        for j in 0..nc {
            for i in 0..nr {
                values.push(self.get(i, j));
            }
        }
        Self { rows: self.cols, cols: self.rows, values }
    }
}

fn grid_from_times(times: &[f64]) -> Result<UniformGrid> {
    if times.len() < 2 || times[0] != 0.0 {
        return Err(Error::shape("grid times must start at 0 and have at least two points"));
    }
    let grid = UniformGrid::new(times.len() - 1, *times.last().unwrap())?;
    for (k, &t) in times.iter().enumerate() {
        if (t - grid.time(k)).abs() > 1e-9 * grid.horizon {
            return Err(Error::shape(format!("grid time {t} at index {k} is not uniform")));
        }
    }
    Ok(grid)
}

pub(crate) fn read_numeric_csv(path: impl AsRef<Path>) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut rows = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|_| Error::shape(format!("non-numeric CSV entry {s:?} on line {}", line + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(rows)
}
