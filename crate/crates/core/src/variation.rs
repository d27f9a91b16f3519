//! p-variation of paths and 2d rho-variation of rectangular increments.
//!
//! All suprema run over dissections and partitions aligned with the carrier
//! grid. Values are returned as norms, i.e. `(sup sum |.|^p)^(1/p)`.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::covariance::CovarianceModel;
use crate::error::{Error, Result};
use crate::grid::{GridFunction1D, GridFunction2D, IndexRect};

/// How a variation value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Method {
    ExactDp,
    ExactBrute,
    HeuristicLowerBound,
}

impl Method {
    pub fn label(&self) -> &'static str {
        match self {
            Method::ExactDp => "EXACT_DP",
            Method::ExactBrute => "EXACT_BRUTE",
            Method::HeuristicLowerBound => "HEURISTIC_LOWER_BOUND",
        }
    }
}

/// The maximizing dissection or partition, in grid indices.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Witness {
    Points(Vec<usize>),
    Product { rows: Vec<usize>, cols: Vec<usize> },
    Rectangles(Vec<IndexRect>),
}

impl Witness {
    /// Norm of a 1d path along a point dissection.
    pub fn evaluate_1d(&self, values: &[f64], p: f64) -> Result<f64> {
        match self {
            Witness::Points(pts) => {
                let s: f64 = pts.windows(2).map(|w| (values[w[1]] - values[w[0]]).abs().powf(p)).sum();
                Ok(s.powf(1.0 / p))
            }
            _ => Err(Error::Contract("2d witness evaluated on a 1d path".into())),
        }
    }

    /// Norm of the rectangular increments of `f` along this witness.
    pub fn evaluate_2d(&self, f: &GridFunction2D, rho: f64) -> Result<f64> {
        let s: f64 = match self {
            Witness::Points(_) => return Err(Error::Contract("1d witness evaluated on a 2d function".into())),
            Witness::Product { rows, cols } => {
                let mut s = 0.0;
                for r in rows.windows(2) {
                    for c in cols.windows(2) {
                        s += f.rect_increment(IndexRect::new(r[0], r[1], c[0], c[1])).abs().powf(rho);
                    }
                }
                s
            }
            Witness::Rectangles(rs) => rs.iter().map(|r| f.rect_increment(*r).abs().powf(rho)).sum(),
        };
        Ok(s.powf(1.0 / rho))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariationReport {
    pub value: f64,
    pub method: Method,
    pub witness: Witness,
}

/// Exact p-variation of a sampled path.
pub fn p_variation(values: &[f64], p: f64) -> Result<VariationReport> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::domain(format!("p-variation needs p >= 1, got {p}")));
    }
    if values.is_empty() {
        return Err(Error::shape("empty path"));
    }
    let n = values.len();
    let mut best = vec![0.0f64; n];
    let mut back = vec![0usize; n];
    for j in 1..n {
        let mut v = f64::NEG_INFINITY;
        let mut arg = 0;
        for i in 0..j {
            let c = best[i] + (values[j] - values[i]).abs().powf(p);
            if c > v {
                v = c;
                arg = i;
            }
        }
        best[j] = v;
        back[j] = arg;
    }
    let mut pts = vec![n - 1];
    let mut k = n - 1;
    while k > 0 {
        k = back[k];
        pts.push(k);
    }
    pts.reverse();
    Ok(VariationReport {
        value: best[n - 1].powf(1.0 / p),
        method: Method::ExactDp,
        witness: Witness::Points(pts),
    })
}

pub fn p_variation_1d(path: &GridFunction1D, p: f64) -> Result<VariationReport> {
    p_variation(&path.values, p)
}

/// View of a sub-rectangle, optionally with the axes swapped.
struct View<'a> {
    f: &'a GridFunction2D,
    rect: IndexRect,
    swapped: bool,
    rho: f64,
}

impl View<'_> {
    fn nr(&self) -> usize {
        1 + if self.swapped { self.rect.cols() } else { self.rect.rows() }
    }

    fn nc(&self) -> usize {
        1 + if self.swapped { self.rect.rows() } else { self.rect.cols() }
    }

    fn global(&self, a: usize, b: usize, c: usize, d: usize) -> IndexRect {
        let r = self.rect;
        if self.swapped {
            IndexRect::new(r.r0 + c, r.r0 + d, r.c0 + a, r.c0 + b)
        } else {
            IndexRect::new(r.r0 + a, r.r0 + b, r.c0 + c, r.c0 + d)
        }
    }

    #[inline]
    fn w(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        self.f.rect_increment(self.global(a, b, c, d)).abs().powf(self.rho)
    }

    /// Best column dissection for fixed rows; returns the power sum.
    fn best_cols(&self, rows: &[usize]) -> (f64, Vec<usize>) {
        let nc = self.nc();
        let mut best = vec![0.0f64; nc];
        let mut back = vec![0usize; nc];
        for b in 1..nc {
            let mut v = f64::NEG_INFINITY;
            for a in 0..b {
                let mut s = best[a];
                for r in rows.windows(2) {
                    s += self.w(r[0], r[1], a, b);
                }
                if s > v {
                    v = s;
                    back[b] = a;
                }
            }
            best[b] = v;
        }
        (best[nc - 1], trace_back(&back))
    }

    fn best_rows(&self, cols: &[usize]) -> (f64, Vec<usize>) {
        let nr = self.nr();
        let mut best = vec![0.0f64; nr];
        let mut back = vec![0usize; nr];
        for b in 1..nr {
            let mut v = f64::NEG_INFINITY;
            for a in 0..b {
                let mut s = best[a];
                for c in cols.windows(2) {
                    s += self.w(a, b, c[0], c[1]);
                }
                if s > v {
                    v = s;
                    back[b] = a;
                }
            }
            best[b] = v;
        }
        (best[nr - 1], trace_back(&back))
    }

    fn product_witness(&self, rows: &[usize], cols: &[usize]) -> Witness {
        let map = |idx: &[usize], base: usize| idx.iter().map(|i| i + base).collect::<Vec<_>>();
        if self.swapped {
            Witness::Product { rows: map(cols, self.rect.r0), cols: map(rows, self.rect.c0) }
        } else {
            Witness::Product { rows: map(rows, self.rect.r0), cols: map(cols, self.rect.c0) }
        }
    }
}

fn trace_back(back: &[usize]) -> Vec<usize> {
    let mut k = back.len() - 1;
    let mut pts = vec![k];
    while k > 0 {
        k = back[k];
        pts.push(k);
    }
    pts.reverse();
    pts
}

/// Largest number of interior points on the enumerated axis for exact search.
pub const EXACT_INTERIOR_MAX: usize = 12;

fn check_rho(rho: f64) -> Result<()> {
    if !(rho >= 1.0 && rho.is_finite()) {
        return Err(Error::domain(format!("variation exponent must be >= 1, got {rho}")));
    }
    Ok(())
}

fn degenerate_report(rect: IndexRect) -> VariationReport {
    VariationReport {
        value: 0.0,
        method: Method::ExactBrute,
        witness: Witness::Product { rows: vec![rect.r0, rect.r1], cols: vec![rect.c0, rect.c1] },
    }
}

/// 2d rho-variation over products of grid dissections of `rect`.
///
/// Exact when the shorter axis has at most twelve interior points: every row
/// subset is enumerated and the columns are optimized by dynamic programming.
/// Larger inputs use alternating coordinate ascent from the full dissection.
pub fn rho_var_2d(f: &GridFunction2D, rho: f64, rect: IndexRect) -> Result<VariationReport> {
    check_rho(rho)?;
    f.check_rect(rect)?;
    if rect.is_degenerate() {
        return Ok(degenerate_report(rect));
    }
    let swapped = rect.cols() < rect.rows();
    let view = View { f, rect, swapped, rho };
    let interior = view.nr() - 2;
    if interior <= EXACT_INTERIOR_MAX {
        let nr = view.nr();
        let mut best = (f64::NEG_INFINITY, Vec::new(), Vec::new());
        for mask in 0u32..(1 << interior) {
            let mut rows = vec![0];
            rows.extend((0..interior).filter(|b| mask & (1 << b) != 0).map(|b| b + 1));
            rows.push(nr - 1);
            let (v, cols) = view.best_cols(&rows);
            if v > best.0 {
                best = (v, rows, cols);
            }
        }
        return Ok(VariationReport {
            value: best.0.powf(1.0 / rho),
            method: Method::ExactBrute,
            witness: view.product_witness(&best.1, &best.2),
        });
    }
    let mut rows: Vec<usize> = (0..view.nr()).collect();
    let (mut value, mut cols) = view.best_cols(&rows);
    for _ in 0..64 {
        let (vr, r) = view.best_rows(&cols);
        let (vc, c) = view.best_cols(&r);
        let next = vr.max(vc);
        if next <= value * (1.0 + 1e-14) {
            if vc >= value {
                rows = r;
                cols = c;
                value = vc;
            }
            break;
        }
        rows = r;
        cols = c;
        value = vc;
    }
    Ok(VariationReport {
        value: value.powf(1.0 / rho),
        method: Method::HeuristicLowerBound,
        witness: view.product_witness(&rows, &cols),
    })
}

/// 2d rho-variation of a covariance model on a uniform grid of `n` intervals.
pub fn rho_var_2d_model(model: &CovarianceModel, n: usize, rho: f64, rect: IndexRect) -> Result<VariationReport> {
    let cg = model.on_grid(n)?;
    rho_var_2d(cg.as_grid_function(), rho, rect)
}

/// Cells per axis up to which rectangle partitions are enumerated exhaustively.
pub const PARTITION_EXACT_MAX: usize = 7;
/// Cut positions per axis kept by the guillotine search on large grids.
pub const GUILLOTINE_MAX_POINTS: usize = 33;

/// Controlled 2d rho-variation: supremum over partitions of `rect` into
/// grid-aligned rectangles.
///
/// Guillotine partitions are searched with memoized recursion. When both axes
/// have at most seven cells, an exhaustive search over all partitions also runs
/// and the result is exact; otherwise it is a lower bound.
pub fn controlled_rho_var_2d(f: &GridFunction2D, rho: f64, rect: IndexRect) -> Result<VariationReport> {
    check_rho(rho)?;
    f.check_rect(rect)?;
    if rect.is_degenerate() {
        let mut r = degenerate_report(rect);
        r.witness = Witness::Rectangles(vec![rect]);
        return Ok(r);
    }
    let w = |r: IndexRect| f.rect_increment(r).abs().powf(rho);
    let (mut best, mut rects) = guillotine(&w, rect);
    if rect.rows() <= PARTITION_EXACT_MAX && rect.cols() <= PARTITION_EXACT_MAX {
        let (v, rs) = all_partitions(&w, rect);
        if v > best {
            best = v;
            rects = rs;
        }
        return Ok(VariationReport {
            value: best.powf(1.0 / rho),
            method: Method::ExactBrute,
            witness: Witness::Rectangles(rects),
        });
    }
    // product dissections are partitions too
    let prod = rho_var_2d(f, rho, rect)?;
    let pv = prod.value.powf(rho);
    if pv > best {
        if let Witness::Product { rows, cols } = &prod.witness {
            best = pv;
            rects = rows
                .windows(2)
                .flat_map(|r| cols.windows(2).map(move |c| IndexRect::new(r[0], r[1], c[0], c[1])))
                .collect();
        }
    }
    Ok(VariationReport {
        value: best.powf(1.0 / rho),
        method: Method::HeuristicLowerBound,
        witness: Witness::Rectangles(rects),
    })
}

pub fn controlled_rho_var_2d_model(
    model: &CovarianceModel,
    n: usize,
    rho: f64,
    rect: IndexRect,
) -> Result<VariationReport> {
    let cg = model.on_grid(n)?;
    controlled_rho_var_2d(cg.as_grid_function(), rho, rect)
}

fn cut_points(lo: usize, hi: usize) -> Vec<usize> {
    let n = hi - lo;
    if n < GUILLOTINE_MAX_POINTS {
        return (lo..=hi).collect();
    }
    let m = GUILLOTINE_MAX_POINTS - 1;
    let mut pts: Vec<usize> = (0..=m).map(|k| lo + (k * n + m / 2) / m).collect();
    pts.dedup();
    pts
}

fn guillotine(w: &dyn Fn(IndexRect) -> f64, rect: IndexRect) -> (f64, Vec<IndexRect>) {
    let pr = cut_points(rect.r0, rect.r1);
    let pc = cut_points(rect.c0, rect.c1);
    let (a, b) = (pr.len(), pc.len());
    let idx = |i0: usize, i1: usize, j0: usize, j1: usize| ((i0 * a + i1) * b + j0) * b + j1;
    let mut val = vec![0.0f64; a * a * b * b];
    // 0 = leaf, k > 0 = row cut at pr[k], k < 0 = column cut at pc[-k]
    let mut cut = vec![0i32; a * a * b * b];
    for hr in 1..a {
        for hc in 1..b {
            for i0 in 0..a - hr {
                let i1 = i0 + hr;
                for j0 in 0..b - hc {
                    let j1 = j0 + hc;
                    let mut v = w(IndexRect::new(pr[i0], pr[i1], pc[j0], pc[j1]));
                    let mut c = 0i32;
                    for k in i0 + 1..i1 {
                        let s = val[idx(i0, k, j0, j1)] + val[idx(k, i1, j0, j1)];
                        if s > v {
                            v = s;
                            c = k as i32;
                        }
                    }
                    for k in j0 + 1..j1 {
                        let s = val[idx(i0, i1, j0, k)] + val[idx(i0, i1, k, j1)];
                        if s > v {
                            v = s;
                            c = -(k as i32);
                        }
                    }
                    val[idx(i0, i1, j0, j1)] = v;
                    cut[idx(i0, i1, j0, j1)] = c;
                }
            }
        }
    }
    let mut rects = Vec::new();
    let mut stack = vec![(0, a - 1, 0, b - 1)];
    while let Some((i0, i1, j0, j1)) = stack.pop() {
        let c = cut[idx(i0, i1, j0, j1)];
        if c > 0 {
            let k = c as usize;
            stack.push((k, i1, j0, j1));
            stack.push((i0, k, j0, j1));
        } else if c < 0 {
            let k = (-c) as usize;
            stack.push((i0, i1, k, j1));
            stack.push((i0, i1, j0, k));
        } else {
            rects.push(IndexRect::new(pr[i0], pr[i1], pc[j0], pc[j1]));
        }
    }
    (val[idx(0, a - 1, 0, b - 1)], rects)
}

/// Exhaustive search over all partitions into grid rectangles. The covered
/// region is always a skyline (per-column heights), filled at its lowest,
/// leftmost uncovered cell.
fn all_partitions(w: &dyn Fn(IndexRect) -> f64, rect: IndexRect) -> (f64, Vec<IndexRect>) {
    let (nr, nc) = (rect.rows(), rect.cols());
    let mut memo: HashMap<Vec<u8>, (f64, (usize, usize))> = HashMap::new();
    let start = vec![0u8; nc];
    fn go(
        h: &[u8],
        nr: usize,
        rect: IndexRect,
        w: &dyn Fn(IndexRect) -> f64,
        memo: &mut HashMap<Vec<u8>, (f64, (usize, usize))>,
    ) -> f64 {
        let lo = *h.iter().min().unwrap() as usize;
        if lo == nr {
            return 0.0;
        }
        if let Some(&(v, _)) = memo.get(h) {
            return v;
        }
        let c = h.iter().position(|&x| x as usize == lo).unwrap();
        let mut best = (f64::NEG_INFINITY, (0, 0));
        let mut next = h.to_vec();
        let mut cw = 0;
        while c + cw < h.len() && h[c + cw] as usize == lo {
            cw += 1;
            for dh in 1..=nr - lo {
                for x in &mut next[c..c + cw] {
                    *x = (lo + dh) as u8;
                }
                let r = IndexRect::new(rect.r0 + lo, rect.r0 + lo + dh, rect.c0 + c, rect.c0 + c + cw);
                let v = w(r) + go(&next, nr, rect, w, memo);
                if v > best.0 {
                    best = (v, (cw, dh));
                }
            }
            for x in &mut next[c..c + cw] {
                *x = lo as u8;
            }
        }
        memo.insert(h.to_vec(), best);
        best.0
    }
    let value = go(&start, nr, rect, w, &mut memo);
    let mut rects = Vec::new();
    let mut h = start;
    loop {
        let lo = *h.iter().min().unwrap() as usize;
        if lo == nr {
            break;
        }
        let c = h.iter().position(|&x| x as usize == lo).unwrap();
        let (cw, dh) = memo[&h].1;
        rects.push(IndexRect::new(rect.r0 + lo, rect.r0 + lo + dh, rect.c0 + c, rect.c0 + c + cw));
        for x in &mut h[c..c + cw] {
            *x = (lo + dh) as u8;
        }
    }
    (value, rects)
}

/// Randomized super-additivity check of a rectangle function on an
/// `m x m` cell grid: `omega(A) + omega(B) <= omega(C)` whenever `A` and `B`
/// sit side by side inside `C`, and `omega` vanishes on degenerate rectangles.
pub fn check_2d_control(omega: impl Fn(IndexRect) -> f64, m: usize, samples: usize, seed: u64) -> bool {
    if m == 0 {
        return true;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pick = |rng: &mut ChaCha8Rng, lo: usize, hi: usize| -> (usize, usize) {
        let a = rng.random_range(lo..=hi);
        let b = rng.random_range(lo..=hi);
        (a.min(b), a.max(b))
    };
    for _ in 0..samples {
        let (r0, r1) = pick(&mut rng, 0, m);
        let (c0, c1) = pick(&mut rng, 0, m);
        let c = IndexRect::new(r0, r1, c0, c1);
        let kr = rng.random_range(r0..=r1);
        let kc = rng.random_range(c0..=c1);
        if omega(IndexRect::new(kr, kr, c0, c1)).abs() > 1e-10 || omega(IndexRect::new(r0, r1, kc, kc)).abs() > 1e-10 {
            return false;
        }
        // sub-rectangle of C split side by side along a random axis
        let (dr0, dr1) = pick(&mut rng, r0, r1);
        let (dc0, dc1) = pick(&mut rng, c0, c1);
        let (a, b) = if rng.random_bool(0.5) {
            let s = rng.random_range(dr0..=dr1);
            (IndexRect::new(dr0, s, dc0, dc1), IndexRect::new(s, dr1, dc0, dc1))
        } else {
            let s = rng.random_range(dc0..=dc1);
            (IndexRect::new(dr0, dr1, dc0, s), IndexRect::new(dr0, dr1, s, dc1))
        };
        if omega(a) + omega(b) > omega(c) + 1e-10 {
            return false;
        }
    }
    true
}

/// Smallest `C` with `||R(t,.) - R(s,.)||_{rho-var}^rho <= C |t - s|` over all
/// pairs of grid points.
pub fn hyp_var_constant(model: &CovarianceModel, rho: f64, n: usize) -> Result<f64> {
    check_rho(rho)?;
    let cg = model.on_grid(n)?;
    let g = cg.as_grid_function();
    let mut c = 0.0f64;
    let mut slice = vec![0.0; n + 1];
    for s in 0..n {
        for t in s + 1..=n {
            for (u, x) in slice.iter_mut().enumerate() {
                *x = g.get(t, u) - g.get(s, u);
            }
            let v = p_variation(&slice, rho)?.value.powf(rho);
            c = c.max(v / (cg.grid.time(t) - cg.grid.time(s)));
        }
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::UniformGrid;

    fn brute_1d(v: &[f64], p: f64) -> f64 {
        let n = v.len();
        let interior = n.saturating_sub(2);
        let mut best = 0.0f64;
        for mask in 0u32..(1 << interior) {
            let mut pts = vec![0];
            pts.extend((0..interior).filter(|b| mask & (1 << b) != 0).map(|b| b + 1));
            if n > 1 {
                pts.push(n - 1);
            }
            let s: f64 = pts.windows(2).map(|w| (v[w[1]] - v[w[0]]).abs().powf(p)).sum();
            best = best.max(s);
        }
        best.powf(1.0 / p)
    }

    #[test]
    fn one_dimensional_examples() {
        let r = p_variation(&[0.0, 0.5, 1.0, 2.0], 1.0).unwrap();
        assert_eq!(r.value, 2.0);
        assert_eq!(p_variation(&[3.0; 5], 1.5).unwrap().value, 0.0);
        let r = p_variation(&[0.0, 1.0, 0.0], 2.0).unwrap();
        assert!((r.value - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(r.witness, Witness::Points(vec![0, 1, 2]));
        assert!(p_variation(&[0.0, 1.0], 0.5).is_err());
    }

    #[test]
    fn dp_matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let n = rng.random_range(1..=10);
            let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let p = rng.random_range(1.0..3.0);
            let r = p_variation(&v, p).unwrap();
            assert!((r.value - brute_1d(&v, p)).abs() <= 1e-12 * (1.0 + r.value));
            assert!((r.witness.evaluate_1d(&v, p).unwrap() - r.value).abs() <= 1e-12 * (1.0 + r.value));
        }
    }

    #[test]
    fn bm_rho_one_is_horizon() {
        let bm = CovarianceModel::bm(1.0).unwrap();
        let r = rho_var_2d_model(&bm, 8, 1.0, IndexRect::square(0, 8)).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
        assert_eq!(r.method, Method::ExactBrute);
        let g = UniformGrid::new(4, 1.0).unwrap();
        let c = GridFunction2D::square(g, |_, _| 2.0).unwrap();
        assert_eq!(rho_var_2d(&c, 1.3, IndexRect::square(0, 4)).unwrap().value, 0.0);
        assert_eq!(controlled_rho_var_2d(&c, 1.3, IndexRect::square(0, 4)).unwrap().value, 0.0);
    }

    #[test]
    fn heuristic_dominates_full_dissection() {
        let f = CovarianceModel::fbm(0.4, 1.0).unwrap();
        let cg = f.on_grid(20).unwrap();
        let g = cg.as_grid_function();
        let rect = IndexRect::square(0, 20);
        let r = rho_var_2d(g, 1.25, rect).unwrap();
        assert_eq!(r.method, Method::HeuristicLowerBound);
        let all: Vec<usize> = (0..=20).collect();
        let full = Witness::Product { rows: all.clone(), cols: all }.evaluate_2d(g, 1.25).unwrap();
        assert!(r.value >= full);
        assert!((r.witness.evaluate_2d(g, 1.25).unwrap() - r.value).abs() < 1e-12);
    }

    #[test]
    fn partitions_dominate_guillotine() {
        let f = CovarianceModel::fbm(0.35, 1.0).unwrap();
        let cg = f.on_grid(6).unwrap();
        let g = cg.as_grid_function();
        let rect = IndexRect::square(0, 6);
        let w = |r: IndexRect| g.rect_increment(r).abs().powf(1.4);
        let (gv, _) = guillotine(&w, rect);
        let (av, rs) = all_partitions(&w, rect);
        assert!(av >= gv - 1e-14);
        let cells: usize = rs.iter().map(|r| r.rows() * r.cols()).sum();
        assert_eq!(cells, 36);
    }

    #[test]
    fn controls_and_non_controls() {
        assert!(check_2d_control(|r| (r.rows() * r.cols()) as f64, 10, 200, 1));
        assert!(!check_2d_control(|r| ((r.rows() * r.cols()) as f64).sqrt(), 10, 200, 1));
    }

    #[test]
    fn bm_hyp_constant() {
        let bm = CovarianceModel::bm(1.0).unwrap();
        assert!((hyp_var_constant(&bm, 1.0, 16).unwrap() - 1.0).abs() < 1e-12);
    }
}
