//! Acceptance suite: each test checks one documented claim of the library at
//! fixed desk-scale parameters and prints a one-line verdict (run with
//! `--nocapture` to see verdicts for passing criteria too).
//!
//! Statistical criteria use fixed seeds, so every run is reproducible.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};
use std::time::Instant;

use fkspline::freeknot::{gamma_k, xi_samples};
use fkspline::grid::{sample_wiener, FineGrid, SeedSpec};
use fkspline::harness::{
    estimate_eq, estimate_tau_moments, sigma_l2_norm, sigma_sup_norm, Method, TauStats,
};
use fkspline::minimax::{best_poly, equioscillation_count, lp_oracle_best_poly};
use fkspline::sde::{build_dagger, euler_coarse, knot_budget, preset, xbar_process, PRESET_NAMES};

/// Sample count for cached stopping-time moment estimates.
const TAU_SAMPLES: usize = 10_000;
const TAU_GRID_EXP: u32 = 18;

fn cached_tau(r: usize) -> TauStats {
    static CACHE: OnceLock<Mutex<HashMap<usize, TauStats>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().unwrap();
    map.entry(r)
        .or_insert_with(|| {
            estimate_tau_moments(r, TAU_SAMPLES, TAU_GRID_EXP, 0xACCE57 + r as u64)
                .expect("tau moments")
        })
        .clone()
}

fn verdict(criterion: u32, pass: bool, detail: &str, started: Instant) {
    println!(
        "CRITERION {criterion}: {} — {detail} [{:.1}s]",
        if pass { "PASS" } else { "FAIL" },
        started.elapsed().as_secs_f64()
    );
}

// ---------------------------------------------------------------------------
// 1. Minimax correctness: LP oracle agreement and equioscillation
// ---------------------------------------------------------------------------

#[test]
fn criterion_1_minimax_oracle_and_equioscillation() {
    let started = Instant::now();
    let grid = FineGrid::unit(49).unwrap(); // 50-point sample sets
    let mut worst_gap = 0.0f64;
    let mut ok = true;
    for r in 0..=3usize {
        for stream in 0..1000u64 {
            let path = sample_wiener(&grid, SeedSpec::new(0xC1 + r as u64, stream));
            let fast = best_poly(&path, (0, 49), r).unwrap();
            let lp = lp_oracle_best_poly(&path, (0, 49), r).unwrap();
            let gap = (fast.sup_error - lp.sup_error).abs();
            worst_gap = worst_gap.max(gap);
            if gap > 1e-10 {
                ok = false;
            }
            let alternations = equioscillation_count(&path, &fast, 1e-9);
            if fast.sup_error > 0.0 && alternations < r + 2 {
                println!("  r={r} stream={stream}: only {alternations} alternations");
                ok = false;
            }
        }
    }
    verdict(
        1,
        ok,
        &format!("1000 sample sets per degree 0..=3; worst oracle gap {worst_gap:.2e} (tol 1e-10)"),
        started,
    );
    assert!(ok);
}

// ---------------------------------------------------------------------------
// 2. Scaling law of first-interval lengths across levels
// ---------------------------------------------------------------------------

fn xi_grid(eps: f64) -> FineGrid {
    // initial window of 2 eps^2 time units at step 2^-18
    let steps = (2.0 * eps * eps * (1u64 << 18) as f64) as usize;
    FineGrid::new(steps, 2.0 * eps * eps).unwrap()
}

fn two_sample_ks(a: &mut [f64], b: &mut [f64]) -> f64 {
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (n, m) = (a.len(), b.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < n && j < m {
        let x = a[i].min(b[j]);
        while i < n && a[i] <= x {
            i += 1;
        }
        while j < m && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    d
}

#[test]
fn criterion_2_xi_scaling_law() {
    let started = Instant::now();
    let n = 2000usize;
    let mut ok = true;
    let mut detail = String::new();
    for r in 0..=1usize {
        let xs_half = xi_samples(r, 0.5, n, &xi_grid(0.5), 0x52_0005 + r as u64).unwrap();
        let xs_one = xi_samples(r, 1.0, n, &xi_grid(1.0), 0x52_0010 + r as u64).unwrap();
        assert!(xs_half.censored == 0 && xs_one.censored == 0);

        // mean ratio: mean(xi at 0.5) should be 0.25 * mean(xi at 1)
        let stats = |xs: &[f64]| {
            let mean = xs.iter().sum::<f64>() / xs.len() as f64;
            let var =
                xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (xs.len() - 1) as f64;
            (mean, (var / xs.len() as f64).sqrt())
        };
        let (m_half, se_half) = stats(&xs_half.values);
        let (m_one, se_one) = stats(&xs_one.values);
        let diff = (m_half - 0.25 * m_one).abs();
        let combined = (se_half * se_half + 0.0625 * se_one * se_one).sqrt();
        let mean_ok = diff <= 3.0 * combined;

        // distributional check on eps^-2-scaled samples
        let mut scaled_half: Vec<f64> = xs_half.values.iter().map(|x| x * 4.0).collect();
        let mut scaled_one = xs_one.values.clone();
        let d = two_sample_ks(&mut scaled_half, &mut scaled_one);
        let crit = 1.6276 * ((n + n) as f64 / (n * n) as f64).sqrt();
        let ks_ok = d < crit;

        detail.push_str(&format!(
            "r={r}: mean diff {diff:.4} vs 3se {:.4}, KS {d:.4} vs {crit:.4}; ",
            3.0 * combined
        ));
        ok = ok && mean_ok && ks_ok;
    }
    verdict(2, ok, detail.trim_end_matches("; "), started);
    assert!(ok);
}

// ---------------------------------------------------------------------------
// 3. r = 0 pipeline vs independent range-scan oracle
// ---------------------------------------------------------------------------

/// Plain running-range scan over freshly drawn increments, sharing no code
/// with the minimax pipeline beyond the random number generator itself.
fn range_scan_oracle(n_paths: usize, master_seed: u64) -> (f64, f64) {
    use rand::Rng;
    use rand_distr::StandardNormal;
    use rayon::prelude::*;

    let step = 1.0 / (1u64 << 18) as f64;
    let sd = step.sqrt();
    let cap = 128 * (1usize << 18); // 128 time units
    let taus: Vec<f64> = (0..n_paths)
        .into_par_iter()
        .filter_map(|i| {
            let mut rng = SeedSpec::new(master_seed, i as u64).rng();
            let (mut w, mut lo, mut hi) = (0.0f64, 0.0f64, 0.0f64);
            for idx in 1..=cap {
                let z: f64 = rng.sample(StandardNormal);
                w += sd * z;
                if w < lo {
                    lo = w;
                } else if w > hi {
                    hi = w;
                }
                if hi - lo > 2.0 {
                    return Some((idx - 1) as f64 * step);
                }
            }
            None
        })
        .collect();
    assert!(
        taus.len() >= n_paths * 99 / 100,
        "oracle censoring too high"
    );
    let n = taus.len() as f64;
    let mean = taus.iter().sum::<f64>() / n;
    let var = taus.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[test]
fn criterion_3_tau_estimate_agrees_with_range_oracle() {
    let started = Instant::now();
    let n = 100_000usize;
    let pipeline = estimate_tau_moments(0, n, 18, 0xC3_000A).unwrap();
    let (oracle_mean, oracle_se) = range_scan_oracle(n, 0xC3_000B);
    let diff = (pipeline.mean() - oracle_mean).abs();
    let combined = (pipeline.mean_std_error().powi(2) + oracle_se.powi(2)).sqrt();
    let ok = diff <= 2.0 * combined;
    verdict(
        3,
        ok,
        &format!(
            "pipeline {:.5}±{:.5} vs oracle {oracle_mean:.5}±{oracle_se:.5}; diff {diff:.5} vs 2se {:.5}",
            pipeline.mean(),
            pipeline.mean_std_error(),
            2.0 * combined
        ),
        started,
    );
    assert!(ok);
}

// ---------------------------------------------------------------------------
// 4. Scaled median of the pathwise minimal error
// ---------------------------------------------------------------------------

#[test]
fn criterion_4_gamma_scaled_median() {
    let started = Instant::now();
    let grid = FineGrid::from_exponent(20).unwrap();
    let k = 256usize;
    let n_paths = 200usize;
    let mut ok = true;
    let mut detail = String::new();
    for r in 0..=1usize {
        let tau = cached_tau(r);
        use rayon::prelude::*;
        let mut gammas: Vec<f64> = (0..n_paths)
            .into_par_iter()
            .map(|i| {
                let path = sample_wiener(&grid, SeedSpec::new(0xC4_0000 + r as u64, i as u64));
                gamma_k(&path, (0, path.last_index()), k, r).unwrap().gamma
            })
            .collect();
        gammas.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = 0.5 * (gammas[n_paths / 2 - 1] + gammas[n_paths / 2]);
        let scaled = median * (tau.mean() * k as f64).sqrt();
        let in_band = (0.85..=1.15).contains(&scaled);
        detail.push_str(&format!("r={r}: scaled median {scaled:.4}; "));
        ok = ok && in_band;
    }
    verdict(4, ok, &format!("{}band [0.85, 1.15]", detail), started);
    assert!(ok);
}

// ---------------------------------------------------------------------------
// 5. Limiting constant of the sigma^2-proportional method
// ---------------------------------------------------------------------------

#[test]
fn criterion_5_dagger_constant_ou() {
    let started = Instant::now();
    let sde = preset("ou").unwrap();
    let grid = FineGrid::from_exponent(20).unwrap();
    let tau = cached_tau(0);
    let predicted = tau.mean().powf(-0.5) * sigma_l2_norm(&sde);
    let mut ratios = Vec::new();
    for &k in &[64usize, 128, 256, 512] {
        let est =
            estimate_eq(Method::Dagger, &sde, k, 1.0, 500, &grid, 0.75, 0, 0xC5_0001).unwrap();
        let ratio = est.scaled / predicted;
        println!(
            "  k={k:4}: e1 {:.6} ± {:.6}, sqrt(k) e1 {:.4}, ratio {:.4}",
            est.e_q_hat, est.std_error, est.scaled, ratio
        );
        ratios.push(ratio);
    }
    let final_in_band = (0.8..=1.2).contains(&ratios[3]);
    let trend_toward_one = ratios
        .windows(2)
        .all(|w| (w[1] - 1.0).abs() < (w[0] - 1.0).abs());
    let ok = final_in_band && trend_toward_one;
    verdict(
        5,
        ok,
        &format!(
            "ratios over k=64..512: {:.3}, {:.3}, {:.3}, {:.3}; final in [0.8, 1.2]: {final_in_band}, trend toward 1: {trend_toward_one}",
            ratios[0], ratios[1], ratios[2], ratios[3]
        ),
        started,
    );
    assert!(
        ok,
        "final ratio {:.4} (band [0.8, 1.2]), trend toward 1: {trend_toward_one}",
        ratios[3]
    );
}

// ---------------------------------------------------------------------------
// 6. Constant separation between proportional and equal budgets
// ---------------------------------------------------------------------------

#[test]
fn criterion_6_constant_separation_ramp_sigma() {
    let started = Instant::now();
    let sde = preset("ramp-sigma").unwrap();
    let grid = FineGrid::from_exponent(20).unwrap();
    let (k, n_paths) = (512usize, 500usize);
    let dagger = estimate_eq(
        Method::Dagger,
        &sde,
        k,
        1.0,
        n_paths,
        &grid,
        0.75,
        0,
        0xC6_0001,
    )
    .unwrap();
    let star = estimate_eq(
        Method::Star,
        &sde,
        k,
        1.0,
        n_paths,
        &grid,
        0.75,
        0,
        0xC6_0001,
    )
    .unwrap();
    let ratio = dagger.e_q_hat / star.e_q_hat;
    let predicted = sigma_l2_norm(&sde) / sigma_sup_norm(&sde);
    let ok = (0.59..=0.80).contains(&ratio);
    verdict(
        6,
        ok,
        &format!(
            "e1(dagger) {:.5} / e1(star) {:.5} = {ratio:.4}; norm-ratio prediction {predicted:.4}, band [0.59, 0.80]",
            dagger.e_q_hat, star.e_q_hat
        ),
        started,
    );
    assert!(ok, "ratio {ratio:.4} outside [0.59, 0.80]");
}

// ---------------------------------------------------------------------------
// 7. Interpolated-Euler baseline constant
// ---------------------------------------------------------------------------

#[test]
fn criterion_7_euler_baseline_constant() {
    let started = Instant::now();
    let sde = preset("ou").unwrap();
    let grid = FineGrid::from_exponent(20).unwrap();
    let k = 1024usize;
    let est = estimate_eq(Method::Euler, &sde, k, 1.0, 500, &grid, 0.75, 0, 0xC7_0001).unwrap();
    let scaled = est.e_q_hat * (k as f64 / (k as f64).ln()).sqrt();
    let target = 1.0 / 2f64.sqrt();
    let ratio = scaled / target;
    let ok = (0.8..=1.2).contains(&ratio);
    verdict(
        7,
        ok,
        &format!(
            "e1 sqrt(k/ln k) = {scaled:.4}, target {target:.4}, ratio {ratio:.4} (band [0.8, 1.2])"
        ),
        started,
    );
    assert!(ok);
}

// ---------------------------------------------------------------------------
// 8. Exact structural invariants
// ---------------------------------------------------------------------------

#[test]
fn criterion_8_structural_invariants() {
    let started = Instant::now();

    // budget sandwich over a parameter sweep, zero tolerance
    let grid14 = FineGrid::from_exponent(14).unwrap();
    for name in PRESET_NAMES {
        let sde = preset(name).unwrap();
        for (k, delta) in [(24usize, 0.6f64), (100, 0.75), (333, 0.9)] {
            let path = sample_wiener(&grid14, SeedSpec::new(0xC8_0001, 1));
            let scheme = euler_coarse(&sde, &path, 0.0, k, delta).unwrap();
            let budget = knot_budget(&scheme.sigma_values, k, scheme.n).unwrap();
            let total = budget.total_knots();
            assert!(
                k - scheme.n <= total && total <= k + 1,
                "{name} k={k}: total {total}"
            );
        }
    }

    // coincidence of the frozen-coefficient process with the Euler scheme
    for name in PRESET_NAMES {
        let sde = preset(name).unwrap();
        for stream in 0..3u64 {
            let mut rng = SeedSpec::new(0xC8_0002, stream).rng();
            let x0 = sde.sample_initial(&mut rng);
            let path = fkspline::grid::sample_wiener_from(rng, &grid14);
            for n in [7usize, 32] {
                let scheme = fkspline::sde::euler_coarse_n(&sde, &path, x0, n).unwrap();
                let xbar = xbar_process(&sde, &path, x0, n).unwrap();
                for l in 0..=n {
                    assert_eq!(
                        xbar.value(scheme.indices[l]),
                        scheme.euler_values[l],
                        "{name} n={n} l={l}"
                    );
                }
            }
        }
    }

    // decomposition: sup |Xbar - dagger| equals the largest scaled cell error
    let grid16 = FineGrid::from_exponent(16).unwrap();
    for name in ["ramp-sigma", "time-drift"] {
        let sde = preset(name).unwrap();
        for stream in 0..5u64 {
            let mut rng = SeedSpec::new(0xC8_0003, stream).rng();
            let x0 = sde.sample_initial(&mut rng);
            let path = fkspline::grid::sample_wiener_from(rng, &grid16);
            let k = 96usize;
            let scheme = euler_coarse(&sde, &path, x0, k, 0.75).unwrap();
            let dagger = build_dagger(&sde, &path, x0, k, 0.75, 0).unwrap();
            let xbar = xbar_process(&sde, &path, x0, scheme.n).unwrap();
            let sup = dagger.sup_distance_on_grid(&xbar);
            let per_cell = dagger.max_piece_error();
            assert!(
                (sup - per_cell).abs() <= 1e-12 * (1.0 + sup),
                "{name} stream={stream}: sup {sup} vs per-cell {per_cell}"
            );
        }
    }

    // gamma nonincreasing in k on 50 fixed paths, zero tolerance
    for stream in 0..50u64 {
        let path = sample_wiener(&grid16, SeedSpec::new(0xC8_0004, stream));
        let mut last = f64::INFINITY;
        for k in [1usize, 2, 4, 8, 16, 32, 64] {
            let g = gamma_k(&path, (0, path.last_index()), k, 0).unwrap().gamma;
            assert!(g <= last, "stream={stream} k={k}: {g} > {last}");
            last = g;
        }
    }

    verdict(
        8,
        true,
        "budget sandwich, Euler coincidence, error decomposition, gamma monotonicity",
        started,
    );
}

// ---------------------------------------------------------------------------
// 9. Byte-identical CLI output across reruns and thread counts
// ---------------------------------------------------------------------------

#[test]
fn criterion_9_cli_determinism() {
    let started = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let invocations: Vec<(&str, Vec<String>)> = vec![
        (
            "tau",
            vec![
                "tau",
                "--degree",
                "0",
                "--paths",
                "400",
                "--grid-exp",
                "12",
                "--seed",
                "42",
            ]
            .into_iter()
            .map(String::from)
            .collect(),
        ),
        (
            "gamma",
            vec![
                "gamma",
                "--k",
                "8,16",
                "--degree",
                "0",
                "--paths",
                "25",
                "--grid-exp",
                "12",
                "--seed",
                "3",
                "--tau-paths",
                "300",
                "--tau-grid-exp",
                "11",
            ]
            .into_iter()
            .map(String::from)
            .collect(),
        ),
        (
            "converge",
            vec![
                "converge",
                "--method",
                "dagger,star,euler",
                "--sde",
                "ramp-sigma",
                "--k",
                "16,32",
                "--q",
                "1,2",
                "--paths",
                "30",
                "--delta",
                "0.75",
                "--degree",
                "0",
                "--grid-exp",
                "12",
                "--seed",
                "7",
                "--tau-paths",
                "300",
                "--tau-grid-exp",
                "11",
            ]
            .into_iter()
            .map(String::from)
            .collect(),
        ),
        (
            "compare",
            vec![
                "compare",
                "--method-a",
                "dagger",
                "--method-b",
                "star",
                "--sde",
                "ramp-sigma",
                "--k",
                "32",
                "--q",
                "1",
                "--paths",
                "30",
                "--degree",
                "1",
                "--grid-exp",
                "12",
                "--seed",
                "11",
                "--tau-paths",
                "300",
                "--tau-grid-exp",
                "11",
            ]
            .into_iter()
            .map(String::from)
            .collect(),
        ),
    ];
    for (name, args) in &invocations {
        let mut outputs = Vec::new();
        for (tag, threads) in [("t1", "1"), ("t2", "2"), ("t1b", "1")] {
            let out = dir.path().join(format!("{name}-{tag}.csv"));
            let status = std::process::Command::new(env!("CARGO_BIN_EXE_fkspline"))
                .args(args)
                .args(["--threads", threads, "--out", out.to_str().unwrap()])
                .status()
                .unwrap();
            assert!(status.success(), "{name} failed");
            outputs.push(std::fs::read(&out).unwrap());
        }
        assert_eq!(outputs[0], outputs[1], "{name}: threads=1 vs threads=2");
        assert_eq!(outputs[0], outputs[2], "{name}: rerun with same config");
    }
    verdict(
        9,
        true,
        "tau, gamma, converge, compare byte-identical across reruns and thread counts",
        started,
    );
}
