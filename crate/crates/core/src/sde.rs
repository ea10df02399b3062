//! Scalar SDEs with additive noise `dX = a(t, X) dt + σ(t) dW`, the coarse
//! Euler scheme, and the spline approximation methods built on it.
//!
//! Three methods share the two-stage structure: freeze drift and diffusion at
//! coarse cell starts, then approximate the shifted Brownian increment on each
//! cell. They differ in how the knot budget is spread over cells:
//!
//! * `build_dagger` — per-cell budgets proportional to σ(t_ℓ)²,
//! * `build_star` — equal budgets per cell,
//! * `build_euler_interp` — no free knots at all, piecewise-linear
//!   interpolation of the Euler scheme at constant step 1/k.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::freeknot::{optimal_spline, FreeKnotSpline};
use crate::grid::{shifted_subpath, SamplePath};
use crate::minimax::PolynomialPiece;

/// Number of evaluation points for the σ ≠ 0 construction check.
const SIGMA_CHECK_POINTS: usize = 4096;

/// Guard against roundoff at exact integer boundaries in budget floors.
#[inline]
fn floor_guarded(x: f64) -> f64 {
    (x + 1e-9).floor()
}

#[derive(Debug, Clone, Copy)]
pub enum InitialValue {
    Deterministic(f64),
    /// Standard normal draw, independent of the driving path's increments.
    StandardNormal,
}

/// An additive-noise SDE: state-dependent drift, time-only diffusion.
#[derive(Clone)]
pub struct AdditiveNoiseSde {
    name: String,
    drift: fn(f64, f64) -> f64,
    diffusion: fn(f64) -> f64,
    initial: InitialValue,
    lipschitz_note: Option<&'static str>,
}

impl std::fmt::Debug for AdditiveNoiseSde {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AdditiveNoiseSde")
            .field("name", &self.name)
            .field("initial", &self.initial)
            .finish()
    }
}

impl AdditiveNoiseSde {
    /// Construct and check that σ never vanishes (evaluated on a dense grid
    /// over `[0, 1]`; the Lipschitz conditions on the drift are documented per
    /// preset, not checked numerically).
    pub fn new(
        name: impl Into<String>,
        drift: fn(f64, f64) -> f64,
        diffusion: fn(f64) -> f64,
        initial: InitialValue,
        lipschitz_note: Option<&'static str>,
    ) -> Result<Self> {
        for i in 0..=SIGMA_CHECK_POINTS {
            let t = i as f64 / SIGMA_CHECK_POINTS as f64;
            let s = diffusion(t);
            if !(s.abs() > 0.0 && s.is_finite()) {
                return Err(Error::Config(format!(
                    "diffusion must satisfy |sigma(t)| > 0 on [0, 1]; sigma({t}) = {s}"
                )));
            }
        }
        Ok(Self {
            name: name.into(),
            drift,
            diffusion,
            initial,
            lipschitz_note,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn lipschitz_note(&self) -> Option<&'static str> {
        self.lipschitz_note
    }

    #[inline]
    pub fn drift(&self, t: f64, x: f64) -> f64 {
        (self.drift)(t, x)
    }

    #[inline]
    pub fn sigma(&self, t: f64) -> f64 {
        (self.diffusion)(t)
    }

    /// Draw X(0). Deterministic initial values consume no randomness, so the
    /// driving path of a preset with fixed X(0) is unaffected by this call.
    pub fn sample_initial(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self.initial {
            InitialValue::Deterministic(x0) => x0,
            InitialValue::StandardNormal => rng.sample(StandardNormal),
        }
    }
}

/// Preset registry. Each preset satisfies the drift Lipschitz conditions and
/// the diffusion bound by inspection; see the per-preset notes.
pub fn preset(name: &str) -> Result<AdditiveNoiseSde> {
    match name {
        "bm" => AdditiveNoiseSde::new(
            "bm",
            |_, _| 0.0,
            |_| 1.0,
            InitialValue::Deterministic(0.0),
            Some("a = 0 and sigma = 1; all constants zero, X(0) = 0"),
        ),
        "ou" => AdditiveNoiseSde::new(
            "ou",
            |_, x| -x,
            |_| 1.0,
            InitialValue::Deterministic(0.0),
            Some("a(t,x) = -x is 1-Lipschitz in x, constant in t; sigma = 1; X(0) = 0"),
        ),
        "ramp-sigma" => AdditiveNoiseSde::new(
            "ramp-sigma",
            |_, x| -x,
            |t| 1.0 + 2.0 * t,
            InitialValue::Deterministic(0.0),
            Some("a(t,x) = -x as in ou; sigma(t) = 1 + 2t is 2-Lipschitz with |sigma| >= 1"),
        ),
        "time-drift" => AdditiveNoiseSde::new(
            "time-drift",
            |t, x| (2.0 * std::f64::consts::PI * t).sin() - x,
            |_| 1.0,
            InitialValue::StandardNormal,
            Some("a is 1-Lipschitz in x and 2*pi-Lipschitz in t; sigma = 1; X(0) ~ N(0,1)"),
        ),
        other => Err(Error::Config(format!(
            "unknown SDE preset '{other}' (available: {})",
            PRESET_NAMES.join(", ")
        ))),
    }
}

pub const PRESET_NAMES: [&str; 4] = ["bm", "ou", "ramp-sigma", "time-drift"];

/// One Euler increment; every consumer of coarse-cell values goes through
/// this so that cell formulas and the recursion agree bit for bit.
#[inline]
fn euler_step(x: f64, a: f64, dt: f64, sigma: f64, dw: f64) -> f64 {
    x + a * dt + sigma * dw
}

/// Fine-grid Euler recursion driven by the path's own increments: the
/// ground-truth surrogate for the strong solution, with sup-norm bias of
/// order sqrt(ln M / M).
pub fn reference_solution(sde: &AdditiveNoiseSde, path: &SamplePath, x0: f64) -> SamplePath {
    let h = path.grid().step_size();
    let w = path.values();
    let mut values = Vec::with_capacity(path.num_points());
    values.push(x0);
    let mut x = x0;
    for i in 0..path.last_index() {
        let t = path.time(i);
        x = euler_step(x, sde.drift(t, x), h, sde.sigma(t), w[i + 1] - w[i]);
        values.push(x);
    }
    SamplePath::new(*path.grid(), values).expect("length matches by construction")
}

/// Euler scheme on the coarse grid `t_ℓ = ℓ/n`, snapped to fine-grid indices.
#[derive(Debug, Clone)]
pub struct CoarseScheme {
    /// Number of coarse steps n.
    pub n: usize,
    /// Fine-grid indices of the coarse times (snapped; strictly increasing).
    pub indices: Vec<usize>,
    /// Coarse times, `times[l] = path.time(indices[l])`.
    pub times: Vec<f64>,
    /// Euler values at the coarse times.
    pub euler_values: Vec<f64>,
    /// `sigma(t_l)` for l = 0..=n.
    pub sigma_values: Vec<f64>,
    /// `a(t_l, euler_values[l])` for l = 0..n.
    pub drift_values: Vec<f64>,
}

/// Coarse step count `n = floor(k^delta)` with `delta` in (1/2, 1).
pub fn coarse_steps(k: usize, delta: f64) -> Result<usize> {
    if !(delta > 0.5 && delta < 1.0) {
        return Err(Error::Config(format!(
            "delta must lie in (1/2, 1), got {delta}"
        )));
    }
    if k == 0 {
        return Err(Error::Config("budget k must be at least 1".into()));
    }
    Ok(floor_guarded((k as f64).powf(delta)) as usize)
}

/// Snap `l * steps / n` to the nearest fine index, for l = 0..=n.
fn snapped_indices(steps: usize, n: usize) -> Result<Vec<usize>> {
    if n > steps {
        return Err(Error::Config(format!(
            "coarse step count {n} exceeds the fine grid's {steps} steps"
        )));
    }
    let out: Vec<usize> = (0..=n)
        .map(|l| (((2 * l as u128 * steps as u128) + n as u128) / (2 * n as u128)) as usize)
        .collect();
    debug_assert!(out.windows(2).all(|w| w[0] < w[1]));
    Ok(out)
}

/// Run the Euler scheme with `n = floor(k^delta)` coarse steps.
pub fn euler_coarse(
    sde: &AdditiveNoiseSde,
    path: &SamplePath,
    x0: f64,
    k: usize,
    delta: f64,
) -> Result<CoarseScheme> {
    let n = coarse_steps(k, delta)?;
    euler_coarse_n(sde, path, x0, n)
}

/// Euler scheme at an explicit coarse step count.
pub fn euler_coarse_n(
    sde: &AdditiveNoiseSde,
    path: &SamplePath,
    x0: f64,
    n: usize,
) -> Result<CoarseScheme> {
    if n == 0 {
        return Err(Error::Config("need at least one coarse step".into()));
    }
    let indices = snapped_indices(path.grid().steps(), n)?;
    let times: Vec<f64> = indices.iter().map(|&g| path.time(g)).collect();
    let mut sigma_values = Vec::with_capacity(n + 1);
    for &t in &times {
        let s = sde.sigma(t);
        if !(s.abs() > 0.0) {
            return Err(Error::Config(format!("sigma({t}) = {s} vanishes")));
        }
        sigma_values.push(s);
    }
    let mut euler_values = Vec::with_capacity(n + 1);
    let mut drift_values = Vec::with_capacity(n);
    euler_values.push(x0);
    let mut x = x0;
    for l in 0..n {
        let a = sde.drift(times[l], x);
        drift_values.push(a);
        let dw = path.value(indices[l + 1]) - path.value(indices[l]);
        x = euler_step(x, a, times[l + 1] - times[l], sigma_values[l], dw);
        euler_values.push(x);
    }
    Ok(CoarseScheme {
        n,
        indices,
        times,
        euler_values,
        sigma_values,
        drift_values,
    })
}

/// Per-cell free-knot budgets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KnotBudget {
    pub k: usize,
    pub n: usize,
    /// `m[l]` spline pieces for cell l, l = 0..n.
    pub m: Vec<usize>,
}

impl KnotBudget {
    /// Total knots used: `n + 1` cell boundaries plus `m_l - 1` interior
    /// knots per cell.
    pub fn total_knots(&self) -> usize {
        self.n + 1 + self.m.iter().map(|&m| m - 1).sum::<usize>()
    }
}

/// σ²-proportional budgets `m_l = floor(sigma_l^2 / sum sigma_i^2 * (k - n)) + 1`;
/// the total satisfies `k - n <= n + 1 + sum (m_l - 1) <= k + 1`.
pub fn knot_budget(sigma_values: &[f64], k: usize, n: usize) -> Result<KnotBudget> {
    if n == 0 || k <= n {
        return Err(Error::Config(format!(
            "budget needs k > n >= 1, got k = {k}, n = {n}"
        )));
    }
    if sigma_values.len() < n {
        return Err(Error::Config(format!(
            "need {n} sigma values, got {}",
            sigma_values.len()
        )));
    }
    let sq: Vec<f64> = sigma_values[..n].iter().map(|s| s * s).collect();
    if sq.iter().any(|&s| !(s > 0.0)) {
        return Err(Error::Config("all sigma values must be nonzero".into()));
    }
    let total: f64 = sq.iter().sum();
    let spread = (k - n) as f64;
    let m: Vec<usize> = sq
        .iter()
        .map(|&s| floor_guarded(s / total * spread) as usize + 1)
        .collect();
    let budget = KnotBudget { k, n, m };
    debug_assert!(k - n <= budget.total_knots() && budget.total_knots() <= k + 1);
    Ok(budget)
}

/// Equal budgets `m_l = floor((k - n) / n) + 1` for all cells.
pub fn knot_budget_equal(k: usize, n: usize) -> Result<KnotBudget> {
    if n == 0 || k <= n {
        return Err(Error::Config(format!(
            "budget needs k > n >= 1, got k = {k}, n = {n}"
        )));
    }
    Ok(KnotBudget {
        k,
        n,
        m: vec![(k - n) / n + 1; n],
    })
}

/// Compose per-cell optimal splines of the shifted Brownian increments with
/// the frozen drift and diffusion into one spline of degree max(r, 1).
fn compose_method(
    path: &SamplePath,
    scheme: &CoarseScheme,
    budget: &KnotBudget,
    r: usize,
) -> Result<FreeKnotSpline> {
    let degree = r.max(1);
    let mut breakpoints = vec![scheme.times[0]];
    let mut pieces: Vec<PolynomialPiece> = Vec::new();
    for l in 0..scheme.n {
        let (g_lo, g_hi) = (scheme.indices[l], scheme.indices[l + 1]);
        let sub = shifted_subpath(path, g_lo, g_hi)?;
        let w_spline = optimal_spline(&sub, budget.m[l], r)?;
        let sigma = scheme.sigma_values[l];
        let a = scheme.drift_values[l];
        let x_base = scheme.euler_values[l];
        let t_cell = scheme.times[l];
        for piece in w_spline.pieces() {
            let abs_interval = (g_lo + piece.interval.0, g_lo + piece.interval.1);
            let t_left = path.time(abs_interval.0);
            let mut coefficients = vec![0.0; degree + 1];
            for (i, &c) in piece.coefficients.iter().enumerate() {
                coefficients[i] = sigma * c;
            }
            coefficients[0] += x_base + a * (t_left - t_cell);
            coefficients[1] += a;
            pieces.push(PolynomialPiece {
                interval: abs_interval,
                t_left,
                coefficients,
                degree_bound: degree,
                sup_error: sigma.abs() * piece.sup_error,
            });
            breakpoints.push(path.time(abs_interval.1));
        }
    }
    Ok(FreeKnotSpline::from_parts(breakpoints, pieces, degree))
}

/// The σ²-proportional method: Euler on the coarse grid, then an optimal
/// spline of each cell's shifted Brownian increment with `m_{l,k}` pieces,
/// scaled by σ(t_l) and shifted by the frozen drift line. Uses at most k + 1
/// knots on every path.
pub fn build_dagger(
    sde: &AdditiveNoiseSde,
    path: &SamplePath,
    x0: f64,
    k: usize,
    delta: f64,
    r: usize,
) -> Result<FreeKnotSpline> {
    let scheme = euler_coarse(sde, path, x0, k, delta)?;
    let budget = knot_budget(&scheme.sigma_values, k, scheme.n)?;
    let spline = compose_method(path, &scheme, &budget, r)?;
    debug_assert!(spline.breakpoints().len() <= k + 1);
    Ok(spline)
}

/// The equal-allocation method: as [`build_dagger`] with the same number of
/// free knots in every coarse cell.
pub fn build_star(
    sde: &AdditiveNoiseSde,
    path: &SamplePath,
    x0: f64,
    k: usize,
    delta: f64,
    r: usize,
) -> Result<FreeKnotSpline> {
    let scheme = euler_coarse(sde, path, x0, k, delta)?;
    let budget = knot_budget_equal(k, scheme.n)?;
    let spline = compose_method(path, &scheme, &budget, r)?;
    debug_assert!(spline.breakpoints().len() <= k + 1);
    Ok(spline)
}

/// Piecewise-linear interpolated Euler scheme with constant step 1/k.
pub fn build_euler_interp(
    sde: &AdditiveNoiseSde,
    path: &SamplePath,
    x0: f64,
    k: usize,
) -> Result<FreeKnotSpline> {
    let scheme = euler_coarse_n(sde, path, x0, k)?;
    let mut breakpoints = vec![scheme.times[0]];
    let mut pieces = Vec::with_capacity(k);
    for l in 0..k {
        let dt = scheme.times[l + 1] - scheme.times[l];
        let slope = (scheme.euler_values[l + 1] - scheme.euler_values[l]) / dt;
        pieces.push(PolynomialPiece {
            interval: (scheme.indices[l], scheme.indices[l + 1]),
            t_left: scheme.times[l],
            coefficients: vec![scheme.euler_values[l], slope],
            degree_bound: 1,
            sup_error: 0.0, // interpolates its own nodes
        });
        breakpoints.push(scheme.times[l + 1]);
    }
    Ok(FreeKnotSpline::from_parts(breakpoints, pieces, 1))
}

/// The piecewise-frozen auxiliary process: on each coarse cell
/// `X̄(t) = X̌(t_l) + a(t_l, X̌(t_l)) (t - t_l) + sigma_l (W(t) - W(t_l))`.
/// Coincides with the coarse Euler values at every coarse time.
pub fn xbar_process(
    sde: &AdditiveNoiseSde,
    path: &SamplePath,
    x0: f64,
    n: usize,
) -> Result<SamplePath> {
    let scheme = euler_coarse_n(sde, path, x0, n)?;
    let w = path.values();
    let mut values = Vec::with_capacity(path.num_points());
    values.push(x0);
    for l in 0..n {
        let (g_lo, g_hi) = (scheme.indices[l], scheme.indices[l + 1]);
        let x_base = scheme.euler_values[l];
        let a = scheme.drift_values[l];
        let sigma = scheme.sigma_values[l];
        let t_cell = scheme.times[l];
        for i in g_lo + 1..=g_hi {
            values.push(euler_step(
                x_base,
                a,
                path.time(i) - t_cell,
                sigma,
                w[i] - w[g_lo],
            ));
        }
    }
    SamplePath::new(*path.grid(), values)
}
