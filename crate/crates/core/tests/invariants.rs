use nalgebra::DMatrix;
use proptest::prelude::*;

use roughcorr::controlled::{from_gradient, rough_integral, FunctionSpec};
use roughcorr::quadrature::{young_2d, young_2d_bound, young_4d, young_4d_with, Interval, Iteration, Rect};
use roughcorr::roughlift::{chen, lift_level2, signature2};
use roughcorr::simulate::sample_paths;
use roughcorr::variation::{controlled_rho_var_2d, p_variation, rho_var_2d, Witness};
use roughcorr::{CovarianceModel, GridFunction2D, IndexRect, UniformGrid};

fn model_strategy() -> impl Strategy<Value = CovarianceModel> {
    prop_oneof![
        Just(CovarianceModel::bm(1.0).unwrap()),
        (0.26f64..1.0).prop_map(|h| CovarianceModel::fbm(h, 1.0).unwrap()),
        (0.26f64..1.0, 0.5f64..3.0).prop_map(|(h, t)| CovarianceModel::fbm(h, t).unwrap()),
    ]
}

fn surface(grid: UniformGrid, a: f64, b: f64, w: f64) -> GridFunction2D {
    GridFunction2D::square(grid, |s, u| a * (w * s).sin() * (1.0 + u) + b * u * u - s * u).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn covariance_is_symmetric(m in model_strategy(), s in 0.0f64..1.0, t in 0.0f64..1.0) {
        let (s, t) = (s * m.horizon(), t * m.horizon());
        prop_assert_eq!(m.cov(s, t).unwrap(), m.cov(t, s).unwrap());
    }

    #[test]
    fn rectangle_increments_add(m in model_strategy(), a in 0usize..4, b in 5usize..9, c in 10usize..16) {
        let cg = m.on_grid(16).unwrap();
        let whole = cg.rect(IndexRect::new(a, c, 2, 13));
        let split = cg.rect(IndexRect::new(a, b, 2, 13)) + cg.rect(IndexRect::new(b, c, 2, 13));
        prop_assert!((whole - split).abs() <= 1e-12 * (1.0 + whole.abs()));
    }

    #[test]
    fn covariance_matrix_is_psd(m in model_strategy(), n in 2usize..24) {
        let cg = m.on_grid(n).unwrap();
        let a = DMatrix::from_fn(n, n, |i, j| cg.r(i + 1, j + 1));
        let eig = a.symmetric_eigenvalues();
        let scale = eig.iter().fold(0.0f64, |x, v| x.max(v.abs()));
        prop_assert!(eig.iter().all(|&v| v >= -1e-10 * scale));
    }

    #[test]
    fn chen_relation(seed in 0u64..1000, s in 0usize..8, u in 8usize..16, t in 16usize..=32) {
        let m = CovarianceModel::fbm(0.4, 1.0).unwrap();
        let p = &sample_paths(&m, 32, 3, 1, seed).unwrap()[0];
        let (a1, a2) = signature2(p, s, u);
        let (b1, b2) = signature2(p, u, t);
        let (c1, c2) = chen(&a1, &a2, &b1, &b2);
        let (e1, e2) = signature2(p, s, t);
        for (x, y) in c1.iter().chain(&c2).zip(e1.iter().chain(&e2)) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn rough_integral_is_linear(seed in 0u64..1000, c in -3.0f64..3.0) {
        let m = CovarianceModel::fbm(0.45, 1.0).unwrap();
        let p = &sample_paths(&m, 64, 2, 1, seed).unwrap()[0];
        let lift = lift_level2(p, 16).unwrap();
        let coarse = p.coarsen(4).unwrap();
        let y = from_gradient(&FunctionSpec::Trig, &coarse).unwrap();
        let iv = Interval::new(0.0, 1.0);
        let a = rough_integral(&y, &lift, iv).unwrap();
        let b = rough_integral(&y.scaled(c), &lift, iv).unwrap();
        prop_assert!((b - c * a).abs() <= 1e-12 * (1.0 + a.abs()));
    }

    #[test]
    fn young_2d_is_bilinear(m in model_strategy(), a in -2.0f64..2.0, b in -2.0f64..2.0, c in -2.0f64..2.0) {
        let h = m.horizon();
        let grid = UniformGrid::new(10, h).unwrap();
        let f = surface(grid, a, b, 3.0);
        let g = surface(grid, b, a, 1.0);
        let sum = GridFunction2D::new(grid, grid, f.values().iter().zip(g.values()).map(|(x, y)| c * x + y).collect()).unwrap();
        let rect = Rect::new(0.0, h, 0.2 * h, 0.9 * h);
        let lhs = young_2d(&sum, &m, rect).unwrap();
        let rhs = c * young_2d(&f, &m, rect).unwrap() + young_2d(&g, &m, rect).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-10);
    }

    #[test]
    fn young_4d_fubini(m in model_strategy(), a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let h = m.horizon();
        let grid = UniformGrid::new(6, h).unwrap();
        let f = surface(grid, a, b, 2.0);
        let g = surface(grid, b, 1.0, 4.0);
        let iv = |x: f64, y: f64| Interval::new(x * h / 6.0, y * h / 6.0);
        let rects = [iv(0.0, 6.0), iv(1.0, 5.0), iv(0.0, 3.0), iv(2.0, 6.0)];
        let x = young_4d(&f, &g, &m, rects).unwrap();
        let y = young_4d_with(&f, &g, &m, rects, Iteration::OuterFirst).unwrap();
        prop_assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()));
    }

    #[test]
    fn young_bound_dominates(m in model_strategy(), a in -2.0f64..2.0, b in -2.0f64..2.0, w in 0.5f64..8.0) {
        let h = m.horizon();
        let grid = UniformGrid::new(10, h).unwrap();
        let f = surface(grid, a, b, w);
        let q = m.rho().unwrap();
        let p = 1.0 + 0.9 * (q / (q - 1.0).max(1e-9) - 1.0).min(2.0);
        let rect = Rect::new(0.1 * h, 0.8 * h, 0.0, h);
        let val = young_2d(&f, &m, rect).unwrap().abs();
        prop_assert!(val <= young_2d_bound(&f, &m, rect, p, q).unwrap());
    }

    #[test]
    fn p_variation_decreases_in_p(xs in prop::collection::vec(-1.0f64..1.0, 2..40), p in 1.0f64..3.0, dp in 0.01f64..2.0) {
        let a = p_variation(&xs, p).unwrap().value;
        let b = p_variation(&xs, p + dp).unwrap().value;
        prop_assert!(b <= a * (1.0 + 1e-12));
    }

    #[test]
    fn witnesses_attain_reported_values(m in model_strategy(), n in 2usize..40, rho in 1.0f64..3.0) {
        let cg = m.on_grid(n).unwrap();
        let f = cg.as_grid_function();
        let r = IndexRect::square(0, n);
        for rep in [rho_var_2d(f, rho, r).unwrap(), controlled_rho_var_2d(f, rho, r).unwrap()] {
            let v = rep.witness.evaluate_2d(f, rho).unwrap();
            prop_assert!((v - rep.value).abs() <= 1e-10 * (1.0 + rep.value));
            if let Witness::Rectangles(rs) = &rep.witness {
                let area: usize = rs.iter().map(|x| x.rows() * x.cols()).sum();
                prop_assert_eq!(area, n * n);
            }
        }
        let xs: Vec<f64> = (0..=n).map(|k| cg.r(k, k)).collect();
        let one = p_variation(&xs, rho).unwrap();
        prop_assert!((one.witness.evaluate_1d(&xs, rho).unwrap() - one.value).abs() <= 1e-12 * (1.0 + one.value));
    }

    #[test]
    fn product_variation_below_controlled(m in model_strategy(), n in 2usize..30, rho in 1.0f64..3.0, a in 0usize..2) {
        let cg = m.on_grid(n).unwrap();
        let r = IndexRect::new(a, n, 0, n - a);
        let v = rho_var_2d(cg.as_grid_function(), rho, r).unwrap().value;
        let c = controlled_rho_var_2d(cg.as_grid_function(), rho, r).unwrap().value;
        prop_assert!(v <= c * (1.0 + 1e-12));
    }
}
