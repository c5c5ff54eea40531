use std::path::Path;

use dusvgd_core::experiment::{CurveRow, MetricCurve};
use dusvgd_core::matrix::Matrix;
use dusvgd_core::targets::DiagGaussian;
use dusvgd_core::trainer::{mmd, Adam, TrainState};
use dusvgd_core::{stein_direction, ParticleSet, RbfKernel};
use proptest::prelude::*;

fn points(max_m: usize, d: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-5.0..5.0f64, d), 2..max_m)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kernel_bounded_and_symmetric(
        x in prop::collection::vec(-10.0..10.0f64, 3),
        y in prop::collection::vec(-10.0..10.0f64, 3),
        h in 1e-3..100.0f64,
    ) {
        let k = RbfKernel::new(h).unwrap();
        let v = k.eval(&x, &y).unwrap();
        prop_assert!(v >= 0.0 && v <= 1.0);
        prop_assert_eq!(v, k.eval(&y, &x).unwrap());
        prop_assert_eq!(k.eval(&x, &x).unwrap(), 1.0);
    }

    #[test]
    fn direction_is_permutation_equivariant(rows in points(12, 2), shift in 0usize..11) {
        let m = rows.len();
        let model = DiagGaussian::new(vec![0.3, -0.2], vec![1.5, 0.5]).unwrap();
        let p = ParticleSet::from_rows(&rows).unwrap();
        let rotated: Vec<Vec<f64>> = (0..m).map(|i| rows[(i + shift) % m].clone()).collect();
        let q = ParticleSet::from_rows(&rotated).unwrap();
        let (a, b) = (stein_direction(&p, &model, None).unwrap(), stein_direction(&q, &model, None).unwrap());
        for i in 0..m {
            for c in 0..2 {
                let (u, v) = (b.row(i)[c], a.row((i + shift) % m)[c]);
                prop_assert!((u - v).abs() <= 1e-12 * u.abs().max(1.0));
            }
        }
    }

    #[test]
    fn mmd_nonnegative_and_symmetric(x in points(10, 2), y in points(10, 2)) {
        let k = RbfKernel::new(2.0).unwrap();
        let (x, y) = (Matrix::from_rows(&x).unwrap(), Matrix::from_rows(&y).unwrap());
        let (a, b) = (mmd(&x, &y, &k).unwrap(), mmd(&y, &x, &k).unwrap());
        prop_assert!(a >= -1e-12);
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn adam_first_step_is_scale_free(g in 1e-6..1e6f64, scale in 1e-3..1e3f64) {
        let adam = Adam::new(0.01);
        let mut s = TrainState::new(vec![1.0, 1.0]);
        s.adam_update(&[g, g * scale], &adam).unwrap();
        prop_assert!((s.params[0] - 0.99).abs() < 1e-6);
        prop_assert!((s.params[1] - 0.99).abs() < 1e-6);
    }

    #[test]
    fn curve_csv_round_trips(values in prop::collection::vec(-1e6..1e6f64, 1..30), trials in 1usize..4) {
        let rows: Vec<CurveRow> = (0..trials)
            .flat_map(|t| values.iter().enumerate().map(move |(i, &v)| CurveRow { trial: t, iteration: 5 * i, value: v / (t + 1) as f64 }))
            .collect();
        let curve = MetricCurve { metric: "rmse".into(), rows, errors: vec![] };
        let back = MetricCurve::parse_csv(&curve.to_csv(), Path::new("c.csv")).unwrap();
        prop_assert_eq!(back, curve);
    }
}
