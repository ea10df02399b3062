//! Free-knot machinery on a sampled path: greedy stopping times, the
//! pathwise minimal spline error γ_k, and optimal spline construction.
//!
//! Grid rounding convention: a stopping index is the LAST grid index at which
//! the running piece's minimax error is still ≤ ε, and the next piece starts
//! there. Every stored piece then satisfies the ≤ ε bound exactly on the
//! grid; the continuous-time stopping point would lie in the following cell.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{FineGrid, SamplePath, SeedSpec, WienerSampler};
use crate::minimax::{
    best_poly, scan_to_exceed, ApproxWorkspace, HullScan, PolynomialPiece, ScanOutcome,
};

/// Greedy maximal stopping indices at level ε on a grid interval.
#[derive(Debug, Clone, PartialEq)]
pub struct StoppingSequence {
    pub epsilon: f64,
    /// Strictly increasing grid indices; first entry is the interval's left
    /// endpoint, last entry its right endpoint.
    pub taus: Vec<usize>,
    /// Set when the scan reached the right endpoint with the last piece's
    /// error still ≤ ε. Unset only if the final piece was a forced one-step
    /// advance whose error exceeds ε (ε below the one-grid-step deviation).
    pub exhausted: bool,
}

impl StoppingSequence {
    pub fn num_pieces(&self) -> usize {
        self.taus.len() - 1
    }
}

/// Greedy left-to-right construction of maximal subintervals with minimax
/// error ≤ ε; each stopping index is maximal (extending any non-final piece
/// by one grid point pushes its error above ε).
pub fn stopping_times(
    path: &SamplePath,
    interval: (usize, usize),
    eps: f64,
    r: usize,
) -> Result<StoppingSequence> {
    if !(eps > 0.0) {
        return Err(Error::Argument(format!(
            "stopping level must be positive, got {eps}"
        )));
    }
    stopping_times_impl(path, interval, eps, r)
}

fn check_interval(path: &SamplePath, interval: (usize, usize)) -> Result<()> {
    let (a, b) = interval;
    if a >= b || b > path.last_index() {
        return Err(Error::Argument(format!(
            "invalid interval [{a}, {b}] on path with last index {}",
            path.last_index()
        )));
    }
    Ok(())
}

fn stopping_times_impl(
    path: &SamplePath,
    interval: (usize, usize),
    eps: f64,
    r: usize,
) -> Result<StoppingSequence> {
    check_interval(path, interval)?;
    let (a, b) = interval;
    let mut taus = vec![a];
    let mut exhausted = false;
    let mut cur = a;
    let mut ws = ApproxWorkspace::new(r);
    while cur < b {
        match scan_to_exceed(path, cur, b, r, eps, &mut ws) {
            ScanOutcome::Exhausted => {
                taus.push(b);
                exhausted = true;
                cur = b;
            }
            ScanOutcome::Exceeded(e) => {
                // degenerate floor: always advance at least one grid step
                let stop = if e - 1 > cur { e - 1 } else { cur + 1 };
                taus.push(stop);
                cur = stop;
            }
        }
    }
    Ok(StoppingSequence {
        epsilon: eps,
        taus,
        exhausted,
    })
}

/// Does the path on `interval` admit a cover by at most `budget` stopping
/// pieces, every piece with minimax error ≤ ε? Monotone in ε.
fn fits_in_pieces(
    path: &SamplePath,
    interval: (usize, usize),
    eps: f64,
    r: usize,
    budget: usize,
    ws: &mut ApproxWorkspace,
) -> bool {
    let (a, b) = interval;
    let mut cur = a;
    let mut pieces = 0usize;
    while cur < b {
        pieces += 1;
        if pieces > budget {
            return false;
        }
        match scan_to_exceed(path, cur, b, r, eps, ws) {
            ScanOutcome::Exhausted => return true,
            ScanOutcome::Exceeded(e) => {
                if e - 1 == cur {
                    return false; // a single grid step already violates ε
                }
                cur = e - 1;
            }
        }
    }
    true
}

/// Bisection output for the pathwise minimal error γ_k.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaResult {
    /// Upper bracket end: the path fits in ≤ k pieces at this level.
    pub gamma: f64,
    /// Piece count of the greedy cover at `gamma`.
    pub pieces_at_gamma: usize,
    /// Bisection half-width: at `gamma - 2 * tolerance` the path does not fit.
    pub tolerance: f64,
}

/// Default relative bisection tolerance for [`gamma_k`].
pub const GAMMA_DEFAULT_REL_TOL: f64 = 1e-3;

/// Pathwise minimal error at piece budget k: bisection over ε on `[0, E0]`
/// where `E0` is the single-piece error of the whole interval (so γ_1 = E0
/// exactly). Returns the feasible upper bracket end.
///
/// Degenerate budgets (k at least the interval's point count) return zero by
/// convention, with the maximal one-step piece count.
pub fn gamma_k(
    path: &SamplePath,
    interval: (usize, usize),
    k: usize,
    r: usize,
) -> Result<GammaResult> {
    gamma_k_with_tol(path, interval, k, r, GAMMA_DEFAULT_REL_TOL)
}

pub fn gamma_k_with_tol(
    path: &SamplePath,
    interval: (usize, usize),
    k: usize,
    r: usize,
    rel_tol: f64,
) -> Result<GammaResult> {
    check_interval(path, interval)?;
    if k == 0 {
        return Err(Error::Argument("piece budget k must be at least 1".into()));
    }
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(Error::Argument(format!(
            "bisection tolerance must lie in (0, 1), got {rel_tol}"
        )));
    }
    let (a, b) = interval;
    if k > b - a {
        return Ok(GammaResult {
            gamma: 0.0,
            pieces_at_gamma: b - a,
            tolerance: 0.0,
        });
    }
    let e0 = best_poly(path, interval, r)?.sup_error;
    if k == 1 || e0 <= 0.0 {
        return Ok(GammaResult {
            gamma: e0,
            pieces_at_gamma: 1,
            tolerance: 0.0,
        });
    }
    let mut ws = ApproxWorkspace::new(r);
    let tol = rel_tol * e0;
    let mut lo = 0.0f64;
    let mut hi = e0;
    for _ in 0..80 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if fits_in_pieces(path, interval, mid, r, k, &mut ws) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let pieces = stopping_times_impl(path, interval, hi, r)?.num_pieces();
    debug_assert!(pieces <= k);
    Ok(GammaResult {
        gamma: hi,
        pieces_at_gamma: pieces,
        tolerance: 0.5 * (hi - lo),
    })
}

/// Free-knot spline: increasing breakpoints `t_0 < .. < t_κ` and κ pieces,
/// piece j live on the half-open cell `]t_{j-1}, t_j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FreeKnotSpline {
    breakpoints: Vec<f64>,
    pieces: Vec<PolynomialPiece>,
    degree_bound: usize,
}

impl FreeKnotSpline {
    pub(crate) fn from_parts(
        breakpoints: Vec<f64>,
        pieces: Vec<PolynomialPiece>,
        degree_bound: usize,
    ) -> Self {
        debug_assert_eq!(breakpoints.len(), pieces.len() + 1);
        debug_assert!(breakpoints.windows(2).all(|w| w[0] < w[1]));
        Self {
            breakpoints,
            pieces,
            degree_bound,
        }
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn pieces(&self) -> &[PolynomialPiece] {
        &self.pieces
    }

    pub fn num_pieces(&self) -> usize {
        self.pieces.len()
    }

    pub fn degree_bound(&self) -> usize {
        self.degree_bound
    }

    /// Largest per-piece stored sup error.
    pub fn max_piece_error(&self) -> f64 {
        self.pieces.iter().fold(0.0, |m, p| m.max(p.sup_error))
    }

    /// Evaluate at `t`: piece j for `t` in `]t_{j-1}, t_j]`; `t = t_0`
    /// evaluates the first piece (left-limit convention).
    pub fn eval(&self, t: f64) -> Result<f64> {
        let first = self.breakpoints[0];
        let last = *self.breakpoints.last().unwrap();
        if !(t >= first && t <= last) {
            return Err(Error::Argument(format!(
                "evaluation point {t} outside [{first}, {last}]"
            )));
        }
        let pos = self.breakpoints.partition_point(|&b| b < t);
        let piece = pos.max(1) - 1;
        Ok(self.pieces[piece].eval(t))
    }

    /// Max absolute deviation from `path` over all grid points, with the same
    /// breakpoint convention as [`Self::eval`].
    pub fn sup_distance_on_grid(&self, path: &SamplePath) -> f64 {
        let mut piece = 0usize;
        let mut sup = 0.0f64;
        for i in 0..path.num_points() {
            let t = path.time(i);
            while piece + 1 < self.pieces.len() && t > self.breakpoints[piece + 1] {
                piece += 1;
            }
            let d = (path.value(i) - self.pieces[piece].eval(t)).abs();
            if d > sup {
                sup = d;
            }
        }
        sup
    }
}

/// Evaluate `spline` at `t` (see [`FreeKnotSpline::eval`]).
pub fn eval_spline(spline: &FreeKnotSpline, t: f64) -> Result<f64> {
    spline.eval(t)
}

/// Optimal free-knot spline of the whole path with at most k pieces: computes
/// γ_k, then fits the greedy stopping pieces at that level. The result has at
/// most k + 1 breakpoints and grid sup-error ≤ γ_k.
pub fn optimal_spline(path: &SamplePath, k: usize, r: usize) -> Result<FreeKnotSpline> {
    let interval = (0, path.last_index());
    let g = gamma_k(path, interval, k, r)?;
    let st = stopping_times_impl(path, interval, g.gamma, r)?;
    spline_from_stops(path, &st.taus, r)
}

fn spline_from_stops(path: &SamplePath, taus: &[usize], r: usize) -> Result<FreeKnotSpline> {
    let mut pieces = Vec::with_capacity(taus.len() - 1);
    for w in taus.windows(2) {
        pieces.push(best_poly(path, (w[0], w[1]), r)?);
    }
    let breakpoints: Vec<f64> = taus.iter().map(|&i| path.time(i)).collect();
    Ok(FreeKnotSpline::from_parts(breakpoints, pieces, r))
}

/// First-interval lengths ξ_{1,ε} = τ_{1,ε} sampled on fresh Wiener paths.
#[derive(Debug, Clone)]
pub struct XiSamples {
    /// Stopping times in time units, one per uncensored path, in stream order.
    pub values: Vec<f64>,
    /// Paths that never exceeded ε before the horizon cap.
    pub censored: usize,
    pub n_requested: usize,
}

impl XiSamples {
    pub fn censoring_rate(&self) -> f64 {
        self.censored as f64 / self.n_requested as f64
    }
}

/// Horizon cap multiplier for [`xi_samples`]: paths extend by doubling up to
/// 64 times the initial horizon before being flagged censored.
pub const XI_HORIZON_CAP_FACTOR: usize = 64;

/// Sample τ_{1,ε} on `n_samples` fresh Wiener paths. `grid` fixes the step
/// size and the initial horizon; paths that have not stopped extend (seeded
/// generation simply continues) up to [`XI_HORIZON_CAP_FACTOR`] times the
/// initial horizon. Errors if the censoring rate reaches 1%.
pub fn xi_samples(
    r: usize,
    eps: f64,
    n_samples: usize,
    grid: &FineGrid,
    master_seed: u64,
) -> Result<XiSamples> {
    if !(eps > 0.0) {
        return Err(Error::Argument(format!(
            "stopping level must be positive, got {eps}"
        )));
    }
    if n_samples == 0 {
        return Err(Error::Argument("need at least one sample".into()));
    }
    let step = grid.step_size();
    let cap_steps = grid
        .steps()
        .checked_mul(XI_HORIZON_CAP_FACTOR)
        .ok_or_else(|| Error::Config("horizon cap overflows".into()))?;

    let per_path: Vec<Option<f64>> = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            xi_one_path(
                r,
                eps,
                step,
                cap_steps,
                SeedSpec::new(master_seed, i as u64),
            )
        })
        .collect();

    let censored = per_path.iter().filter(|x| x.is_none()).count();
    let values: Vec<f64> = per_path.into_iter().flatten().collect();
    let out = XiSamples {
        values,
        censored,
        n_requested: n_samples,
    };
    if out.censoring_rate() >= 0.01 {
        return Err(Error::Estimation(format!(
            "censoring rate {:.3}% at level {eps} with horizon cap {} steps; \
             raise the initial horizon (larger grid) so fewer paths are cut off",
            100.0 * out.censoring_rate(),
            cap_steps
        )));
    }
    Ok(out)
}

/// τ for one path, streaming the generator without storing the path. The
/// stopping value uses the last-ok grid convention: index e - 1 when the
/// prefix error first exceeds ε at index e.
fn xi_one_path(r: usize, eps: f64, step: f64, cap_steps: usize, seed: SeedSpec) -> Option<f64> {
    let mut sampler = WienerSampler::new(seed, step);
    match r {
        0 => {
            let threshold = 2.0 * eps;
            let mut min = 0.0f64;
            let mut max = 0.0f64;
            for idx in 1..=cap_steps {
                let v = sampler.next_value();
                min = min.min(v);
                max = max.max(v);
                if max - min > threshold {
                    return Some((idx - 1) as f64 * step);
                }
            }
            None
        }
        1 => {
            let mut scan = HullScan::new();
            scan.push(0.0, 0.0);
            for idx in 1..=cap_steps {
                let v = sampler.next_value();
                scan.push(idx as f64 * step, v);
                if scan.current_error() > eps {
                    return Some((idx - 1) as f64 * step);
                }
            }
            None
        }
        _ => {
            // lazily extended buffer with geometric probing
            let mut values = vec![0.0f64];
            let err_at = |values: &[f64], e: usize| -> f64 {
                let us: Vec<f64> = (0..=e).map(|i| i as f64 * step).collect();
                crate::minimax::fit_error_on_samples(&us, &values[..=e], r)
            };
            let mut known_ok = 0usize;
            let mut stride = 1usize;
            loop {
                let probe = (known_ok + stride).min(cap_steps);
                while values.len() <= probe {
                    values.push(sampler.next_value());
                }
                if err_at(&values, probe) > eps {
                    let (mut lo, mut hi) = (known_ok, probe);
                    while hi - lo > 1 {
                        let mid = lo + (hi - lo) / 2;
                        if err_at(&values, mid) > eps {
                            hi = mid;
                        } else {
                            lo = mid;
                        }
                    }
                    return Some((hi - 1) as f64 * step);
                }
                if probe == cap_steps {
                    return None;
                }
                known_ok = probe;
                stride *= 2;
            }
        }
    }
}
