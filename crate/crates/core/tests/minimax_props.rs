//! Property tests for the minimax fits: equivariance, prefix monotonicity,
//! and agreement between incremental and from-scratch solutions.

use fkspline::grid::{sample_wiener, FineGrid, SamplePath, SeedSpec};
use fkspline::minimax::{best_poly, lp_oracle_best_poly, minimax_error_prefix_scan};
use fkspline::{shifted_subpath, Error};
use proptest::prelude::*;

fn small_path(values: Vec<f64>) -> SamplePath {
    let grid = FineGrid::unit(values.len() - 1).unwrap();
    SamplePath::new(grid, values).unwrap()
}

fn eval_poly(coeffs: &[f64], u: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * u + c)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sup_error_is_translation_invariant(
        values in prop::collection::vec(-5.0f64..5.0, 8..40),
        shift in prop::collection::vec(-2.0f64..2.0, 2),
        r in 0usize..=2,
    ) {
        let n = values.len() - 1;
        let path = small_path(values.clone());
        let base = best_poly(&path, (0, n), r).unwrap();
        // add a degree-<= r polynomial (here affine; constant when r = 0)
        let grid = FineGrid::unit(n).unwrap();
        let shifted: Vec<f64> = values
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let t = grid.time(i);
                v + shift[0] + if r >= 1 { shift[1] * t } else { 0.0 }
            })
            .collect();
        let moved = best_poly(&small_path(shifted), (0, n), r).unwrap();
        prop_assert!((base.sup_error - moved.sup_error).abs() <= 1e-9 * (1.0 + base.sup_error));
    }

    #[test]
    fn sup_error_scales_with_the_samples(
        values in prop::collection::vec(-5.0f64..5.0, 8..40),
        scale in -4.0f64..4.0,
        r in 0usize..=2,
    ) {
        let n = values.len() - 1;
        let base = best_poly(&small_path(values.clone()), (0, n), r).unwrap();
        let scaled_values: Vec<f64> = values.iter().map(|v| scale * v).collect();
        let scaled = best_poly(&small_path(scaled_values), (0, n), r).unwrap();
        prop_assert!(
            (scaled.sup_error - scale.abs() * base.sup_error).abs()
                <= 1e-9 * (1.0 + base.sup_error)
        );
    }

    #[test]
    fn prefix_errors_are_nondecreasing(
        values in prop::collection::vec(-3.0f64..3.0, 6..50),
        r in 0usize..=2,
    ) {
        let n = values.len() - 1;
        let path = small_path(values);
        let mut last = 0.0f64;
        for e in 1..=n {
            let err = best_poly(&path, (0, e), r).unwrap().sup_error;
            prop_assert!(err >= last - 1e-12 * (1.0 + err));
            last = err;
        }
    }

    #[test]
    fn subpath_shift_is_idempotent(
        stream in 0u64..128,
        bounds in (0usize..30, 2usize..32),
    ) {
        let grid = FineGrid::unit(64).unwrap();
        let path = sample_wiener(&grid, SeedSpec::new(4321, stream));
        let (a, span) = bounds;
        let b = (a + span).min(64);
        let once = shifted_subpath(&path, a, b).unwrap();
        let again = shifted_subpath(&once, 0, b - a).unwrap();
        prop_assert_eq!(once.values(), again.values());
        prop_assert_eq!(once.value(0), 0.0);
    }
}

#[test]
fn lp_oracle_agreement_on_many_brownian_prefixes() {
    let grid = FineGrid::unit(40).unwrap();
    for r in 0..=3usize {
        for stream in 0..25u64 {
            let path = sample_wiener(&grid, SeedSpec::new(2718, stream));
            let fast = best_poly(&path, (0, 40), r).unwrap();
            let lp = lp_oracle_best_poly(&path, (0, 40), r).unwrap();
            assert!(
                (fast.sup_error - lp.sup_error).abs() <= 1e-10,
                "r={r} stream={stream}"
            );
            // and the oracle's own polynomial never beats the claimed optimum
            let worst = (0..=40)
                .map(|i| {
                    (path.value(i) - eval_poly(&lp.coefficients, path.time(i) - lp.t_left)).abs()
                })
                .fold(0.0f64, f64::max);
            assert!(worst >= fast.sup_error - 1e-9);
        }
    }
}

#[test]
fn prefix_scan_matches_naive_threshold_search() {
    let grid = FineGrid::unit(96).unwrap();
    for r in 0..=2usize {
        for stream in 0..10u64 {
            let path = sample_wiener(&grid, SeedSpec::new(31415, stream));
            let eps = 0.2;
            let scanned = minimax_error_prefix_scan(&path, 0, r, eps).unwrap();
            let naive = (1..=96).find(|&e| best_poly(&path, (0, e), r).unwrap().sup_error > eps);
            assert_eq!(scanned, naive, "r={r} stream={stream}");
        }
    }
}

#[test]
fn scan_rejects_invalid_arguments_with_argument_errors() {
    let grid = FineGrid::unit(8).unwrap();
    let path = sample_wiener(&grid, SeedSpec::new(1, 0));
    for err in [
        minimax_error_prefix_scan(&path, 8, 0, 0.5).unwrap_err(),
        minimax_error_prefix_scan(&path, 0, 0, -1.0).unwrap_err(),
        best_poly(&path, (3, 2), 0).unwrap_err(),
        best_poly(&path, (0, 99), 0).unwrap_err(),
    ] {
        assert!(matches!(err, Error::Argument(_)));
    }
}
