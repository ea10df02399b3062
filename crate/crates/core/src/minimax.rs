//! Best L∞ (Chebyshev) polynomial approximation on grid samples.
//!
//! The inner problem everywhere in this crate is: given path samples on a
//! grid interval, find the polynomial of degree ≤ r minimizing the maximum
//! absolute deviation. Degrees 0 and 1 have exact incremental solutions
//! (running min/max, and upper/lower convex hulls where the minimax line
//! error is half the maximal vertical gap between the hulls). Higher degrees
//! use a discrete Remez exchange on the sample set. An LP formulation of the
//! same problem serves as an independent test oracle.

use crate::error::{Error, Result};
use crate::grid::SamplePath;

/// One polynomial of degree ≤ r on a grid interval, stored in the locally
/// shifted monomial basis (powers of `t - t_left`).
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialPiece {
    /// Closed grid-index interval the piece was fitted on.
    pub interval: (usize, usize),
    /// Time of the interval's left grid index; basis anchor.
    pub t_left: f64,
    /// Coefficients, length `degree_bound + 1`.
    pub coefficients: Vec<f64>,
    pub degree_bound: usize,
    /// Max absolute deviation from the samples over the interval's grid points.
    pub sup_error: f64,
}

impl PolynomialPiece {
    /// Horner evaluation in the shifted basis.
    pub fn eval(&self, t: f64) -> f64 {
        let u = t - self.t_left;
        let mut acc = 0.0;
        for &c in self.coefficients.iter().rev() {
            acc = acc * u + c;
        }
        acc
    }
}

/// Horner evaluation of `piece` at time `t` (closure boundaries included).
pub fn eval_piece(piece: &PolynomialPiece, t: f64) -> f64 {
    piece.eval(t)
}

// ---------------------------------------------------------------------------
// Incremental workspaces
// ---------------------------------------------------------------------------

/// Running state for incremental minimax scans over a growing prefix.
///
/// For r = 0 the exact error is half the running range. For r = 1 it is half
/// the maximal vertical gap between the upper and lower convex hulls of the
/// points seen so far; both hulls change only near their right ends, and on
/// Brownian data they stay logarithmically small. For r ≥ 2 the workspace
/// buffers the points and each error query is a from-scratch exchange solve.
pub enum ApproxWorkspace {
    Const(RangeScan),
    Line(HullScan),
    General(BufferScan),
}

impl ApproxWorkspace {
    pub fn new(r: usize) -> Self {
        match r {
            0 => Self::Const(RangeScan::new()),
            1 => Self::Line(HullScan::new()),
            _ => Self::General(BufferScan::new(r)),
        }
    }

    pub fn clear(&mut self) {
        match self {
            Self::Const(s) => s.clear(),
            Self::Line(s) => s.clear(),
            Self::General(s) => s.clear(),
        }
    }

    /// Append the next sample; `u` offsets must be strictly increasing.
    #[inline]
    pub fn push(&mut self, u: f64, v: f64) {
        match self {
            Self::Const(s) => s.push(v),
            Self::Line(s) => s.push(u, v),
            Self::General(s) => s.push(u, v),
        }
    }

    /// Exact minimax error over the points pushed so far (for r ≤ 1); for
    /// r ≥ 2 this solves the buffered problem from scratch.
    pub fn current_error(&self) -> f64 {
        match self {
            Self::Const(s) => s.current_error(),
            Self::Line(s) => s.current_error(),
            Self::General(s) => s.current_error(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RangeScan {
    min: f64,
    max: f64,
    count: usize,
}

impl RangeScan {
    pub fn new() -> Self {
        Self {
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
            count: 0,
        }
    }

    pub fn clear(&mut self) {
        *self = Self::new();
    }

    #[inline]
    pub fn push(&mut self, v: f64) {
        self.min = self.min.min(v);
        self.max = self.max.max(v);
        self.count += 1;
    }

    #[inline]
    pub fn current_error(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            0.5 * (self.max - self.min)
        }
    }

    pub fn midrange(&self) -> f64 {
        0.5 * (self.max + self.min)
    }
}

impl Default for RangeScan {
    fn default() -> Self {
        Self::new()
    }
}

/// Location of the maximal vertical gap between the hulls.
#[derive(Debug, Clone, Copy)]
struct GapPeak {
    u: f64,
    upper_val: f64,
    lower_val: f64,
    /// Peak vertex lies on the upper hull (else on the lower one).
    on_upper: bool,
    /// Index of the opposite chain's segment start containing `u`.
    opposite_segment: usize,
}

#[derive(Debug, Clone)]
pub struct HullScan {
    upper: Vec<(f64, f64)>,
    lower: Vec<(f64, f64)>,
    gap: f64,
}

#[inline]
fn cross(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> f64 {
    (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)
}

#[inline]
fn slope(a: (f64, f64), b: (f64, f64)) -> f64 {
    (b.1 - a.1) / (b.0 - a.0)
}

#[inline]
fn interp(a: (f64, f64), b: (f64, f64), u: f64) -> f64 {
    a.1 + (b.1 - a.1) * ((u - a.0) / (b.0 - a.0))
}

impl HullScan {
    pub fn new() -> Self {
        Self {
            upper: Vec::new(),
            lower: Vec::new(),
            gap: 0.0,
        }
    }

    pub fn clear(&mut self) {
        self.upper.clear();
        self.lower.clear();
        self.gap = 0.0;
    }

    /// Append one point and update the cached gap.
    ///
    /// The gap function U - L only grows under appends, and it changes only
    /// over the spans covered by the two new last edges. New maximum
    /// candidates are therefore the surviving vertices of the opposite chain
    /// under each new edge; everything else keeps its old value. With no pops
    /// the spans contain no vertices at all, so an append is O(1) amortized.
    pub fn push(&mut self, u: f64, v: f64) {
        let p = (u, v);
        if self.upper.is_empty() {
            self.upper.push(p);
            self.lower.push(p);
            return;
        }
        while self.upper.len() >= 2 {
            let n = self.upper.len();
            if cross(self.upper[n - 2], self.upper[n - 1], p) >= 0.0 {
                self.upper.pop();
            } else {
                break;
            }
        }
        while self.lower.len() >= 2 {
            let n = self.lower.len();
            if cross(self.lower[n - 2], self.lower[n - 1], p) <= 0.0 {
                self.lower.pop();
            } else {
                break;
            }
        }
        let upper_anchor = *self.upper.last().unwrap();
        let lower_anchor = *self.lower.last().unwrap();
        let mut gap = self.gap;
        // lower vertices under the new upper edge (upper_anchor -> p)
        for &(t, y) in self.lower.iter().rev() {
            if t <= upper_anchor.0 {
                break;
            }
            gap = gap.max(interp(upper_anchor, p, t) - y);
        }
        // upper vertices over the new lower edge (lower_anchor -> p)
        for &(t, y) in self.upper.iter().rev() {
            if t <= lower_anchor.0 {
                break;
            }
            gap = gap.max(y - interp(lower_anchor, p, t));
        }
        self.upper.push(p);
        self.lower.push(p);
        self.gap = gap;
    }

    /// Max of the (concave, piecewise-linear) gap function U - L over the
    /// current hulls. The max is attained at a hull vertex, so sweeping the
    /// vertices of both chains and interpolating the opposite chain is exact.
    /// Equals the incrementally maintained gap; used to locate the peak when
    /// fitting the line.
    fn sweep_gap(&self) -> (f64, Option<GapPeak>) {
        let mut best = 0.0;
        let mut peak = None;
        if self.upper.len() >= 2 {
            let mut seg = 0usize;
            for (i, &(u, y)) in self.upper.iter().enumerate() {
                while seg + 2 < self.lower.len() && self.lower[seg + 1].0 < u {
                    seg += 1;
                }
                if i == 0 || i == self.upper.len() - 1 {
                    continue; // shared endpoints, gap zero
                }
                let lv = interp(self.lower[seg], self.lower[seg + 1], u);
                let g = y - lv;
                if g > best {
                    best = g;
                    peak = Some(GapPeak {
                        u,
                        upper_val: y,
                        lower_val: lv,
                        on_upper: true,
                        opposite_segment: seg,
                    });
                }
            }
            let mut seg = 0usize;
            for (j, &(u, y)) in self.lower.iter().enumerate() {
                while seg + 2 < self.upper.len() && self.upper[seg + 1].0 < u {
                    seg += 1;
                }
                if j == 0 || j == self.lower.len() - 1 {
                    continue;
                }
                let uv = interp(self.upper[seg], self.upper[seg + 1], u);
                let g = uv - y;
                if g > best {
                    best = g;
                    peak = Some(GapPeak {
                        u,
                        upper_val: uv,
                        lower_val: y,
                        on_upper: false,
                        opposite_segment: seg,
                    });
                }
            }
        }
        (best, peak)
    }

    #[inline]
    pub fn current_error(&self) -> f64 {
        0.5 * self.gap
    }

    /// The optimal line as `(c0, c1)` in the pushed `u` coordinates: the
    /// centerline of the minimal vertical strip. With a positive gap the peak
    /// vertex lies strictly inside a segment of the opposite hull, and that
    /// segment's slope is the optimal one.
    fn fit_line(&self) -> (f64, f64) {
        if self.upper.is_empty() {
            return (0.0, 0.0);
        }
        if self.upper.len() == 1 {
            return (self.upper[0].1, 0.0);
        }
        let (gap, peak) = self.sweep_gap();
        debug_assert_eq!(gap, self.gap, "incremental gap diverged from sweep");
        match peak {
            None => {
                // zero gap: all points lie on the segment between endpoints
                let a = self.upper[0];
                let b = *self.upper.last().unwrap();
                let s = slope(a, b);
                (a.1 - s * a.0, s)
            }
            Some(peak) => {
                let opp = if peak.on_upper {
                    &self.lower
                } else {
                    &self.upper
                };
                let s = slope(opp[peak.opposite_segment], opp[peak.opposite_segment + 1]);
                let mid = 0.5 * (peak.upper_val + peak.lower_val);
                (mid - s * peak.u, s)
            }
        }
    }
}

impl Default for HullScan {
    fn default() -> Self {
        Self::new()
    }
}

/// Buffering workspace for r ≥ 2; error queries re-solve the exchange.
pub struct BufferScan {
    r: usize,
    us: Vec<f64>,
    vs: Vec<f64>,
}

impl BufferScan {
    pub fn new(r: usize) -> Self {
        Self {
            r,
            us: Vec::new(),
            vs: Vec::new(),
        }
    }

    pub fn clear(&mut self) {
        self.us.clear();
        self.vs.clear();
    }

    pub fn push(&mut self, u: f64, v: f64) {
        self.us.push(u);
        self.vs.push(v);
    }

    pub fn current_error(&self) -> f64 {
        fit_on_samples(&self.us, &self.vs, self.r)
            .map(|(_, e)| e)
            .unwrap_or(f64::NAN)
    }
}

// ---------------------------------------------------------------------------
// Fitting
// ---------------------------------------------------------------------------

/// Best degree-≤ r polynomial on the closed grid-index interval in sup norm.
pub fn best_poly(path: &SamplePath, interval: (usize, usize), r: usize) -> Result<PolynomialPiece> {
    let (a, b) = interval;
    if a > b || b > path.last_index() {
        return Err(Error::Argument(format!(
            "invalid fit interval [{a}, {b}] on path with last index {}",
            path.last_index()
        )));
    }
    let t_left = path.time(a);
    let us: Vec<f64> = (a..=b).map(|i| path.time(i) - t_left).collect();
    let vs = &path.values()[a..=b];
    let (coefficients, sup_error) = fit_on_samples(&us, vs, r)?;
    Ok(PolynomialPiece {
        interval,
        t_left,
        coefficients,
        degree_bound: r,
        sup_error,
    })
}

/// Core fit on shifted offsets `us` (strictly increasing, `us[0] = 0`).
fn fit_on_samples(us: &[f64], vs: &[f64], r: usize) -> Result<(Vec<f64>, f64)> {
    if us.is_empty() {
        return Err(Error::Argument("empty sample set".into()));
    }
    let n = us.len();
    if n == 1 {
        let mut c = vec![0.0; r + 1];
        c[0] = vs[0];
        return Ok((c, 0.0));
    }
    match r {
        0 => {
            let mut scan = RangeScan::new();
            for &v in vs {
                scan.push(v);
            }
            Ok((vec![scan.midrange()], scan.current_error()))
        }
        1 => {
            let mut scan = HullScan::new();
            for (&u, &v) in us.iter().zip(vs) {
                scan.push(u, v);
            }
            let (c0, c1) = scan.fit_line();
            Ok((vec![c0, c1], scan.current_error()))
        }
        _ => {
            if n <= r + 1 {
                let mut c = newton_interpolate(us, vs);
                c.resize(r + 1, 0.0);
                Ok((c, 0.0))
            } else {
                remez_exchange(us, vs, r)
            }
        }
    }
}

/// Minimax error only, on raw shifted samples (buffered scans).
pub(crate) fn fit_error_on_samples(us: &[f64], vs: &[f64], r: usize) -> f64 {
    fit_on_samples(us, vs, r)
        .map(|(_, e)| e)
        .unwrap_or(f64::NAN)
}

/// Newton divided-difference interpolation expanded to the shifted monomial
/// basis; exact error zero by construction.
fn newton_interpolate(us: &[f64], vs: &[f64]) -> Vec<f64> {
    let n = us.len();
    let mut dd = vs.to_vec();
    for level in 1..n {
        for i in (level..n).rev() {
            dd[i] = (dd[i] - dd[i - 1]) / (us[i] - us[i - level]);
        }
    }
    // expand c0 + c1 (u-u0) + c2 (u-u0)(u-u1) + ...
    let mut out = vec![dd[n - 1]];
    for j in (0..n - 1).rev() {
        // out = out * (u - us[j]) + dd[j]
        let mut next = vec![0.0; out.len() + 1];
        for (i, &c) in out.iter().enumerate() {
            next[i + 1] += c;
            next[i] -= c * us[j];
        }
        next[0] += dd[j];
        out = next;
    }
    out
}

/// Discrete Remez single-point exchange on the sample set. Works in the
/// z ∈ [-1, 1] normalized variable for conditioning and converts back.
fn remez_exchange(us: &[f64], vs: &[f64], r: usize) -> Result<(Vec<f64>, f64)> {
    let n = us.len();
    let span = us[n - 1] - us[0];
    let zs: Vec<f64> = us.iter().map(|&u| 2.0 * (u - us[0]) / span - 1.0).collect();
    let m = r + 2;
    let scale = vs.iter().fold(0.0f64, |acc, v| acc.max(v.abs())) + 1.0;

    // initial reference: Chebyshev-distributed indices, deduplicated
    let mut reference: Vec<usize> = (0..m)
        .map(|j| {
            let x = 0.5 * (1.0 - (std::f64::consts::PI * j as f64 / (m - 1) as f64).cos());
            ((n - 1) as f64 * x).round() as usize
        })
        .collect();
    for j in 1..m {
        if reference[j] <= reference[j - 1] {
            reference[j] = reference[j - 1] + 1;
        }
    }
    while *reference.last().unwrap() > n - 1 {
        // shift left if the dedup pushed past the end
        for j in (1..m).rev() {
            if reference[j] > n - 1 {
                reference[j] = n - 1;
            }
            if j >= 1 && reference[j] <= reference[j - 1] {
                reference[j - 1] = reference[j] - 1;
            }
        }
    }

    let mut coeffs_z = vec![0.0; r + 1];
    let mut residuals = vec![0.0; n];
    for _iter in 0..300 {
        // solve p(z_j) + (-1)^j h = v_j on the reference
        let mut mat = vec![vec![0.0; m]; m];
        let mut rhs = vec![0.0; m];
        for (row, &idx) in reference.iter().enumerate() {
            let mut p = 1.0;
            for entry in mat[row].iter_mut().take(r + 1) {
                *entry = p;
                p *= zs[idx];
            }
            mat[row][r + 1] = if row % 2 == 0 { 1.0 } else { -1.0 };
            rhs[row] = vs[idx];
        }
        let sol = solve_dense(&mut mat, &mut rhs)?;
        coeffs_z.copy_from_slice(&sol[..=r]);
        let levelled = sol[r + 1].abs();

        let mut worst = 0usize;
        let mut worst_abs = 0.0;
        for i in 0..n {
            let mut acc = 0.0;
            for &c in coeffs_z.iter().rev() {
                acc = acc * zs[i] + c;
            }
            residuals[i] = vs[i] - acc;
            let a = residuals[i].abs();
            if a > worst_abs {
                worst_abs = a;
                worst = i;
            }
        }
        if worst_abs <= levelled * (1.0 + 1e-12) + 1e-14 * scale {
            let coeffs_u = z_to_shifted(&coeffs_z, span);
            let sup = recomputed_sup(us, vs, &coeffs_u);
            return Ok((coeffs_u, sup));
        }
        exchange(&mut reference, &residuals, worst);
    }
    Err(Error::Numerical(
        "exchange iteration did not converge".into(),
    ))
}

/// Standard single-point exchange preserving residual-sign alternation.
fn exchange(reference: &mut [usize], residuals: &[f64], worst: usize) {
    let m = reference.len();
    let s = residuals[worst].signum();
    if worst < reference[0] {
        if s == residuals[reference[0]].signum() {
            reference[0] = worst;
        } else {
            for j in (1..m).rev() {
                reference[j] = reference[j - 1];
            }
            reference[0] = worst;
        }
    } else if worst > reference[m - 1] {
        if s == residuals[reference[m - 1]].signum() {
            reference[m - 1] = worst;
        } else {
            for j in 0..m - 1 {
                reference[j] = reference[j + 1];
            }
            reference[m - 1] = worst;
        }
    } else {
        let j = reference.partition_point(|&idx| idx < worst);
        // reference[j-1] < worst < reference[j]
        if s == residuals[reference[j - 1]].signum() {
            reference[j - 1] = worst;
        } else {
            reference[j] = worst;
        }
    }
}

/// Convert coefficients in z = 2 u / span - 1 back to powers of u.
fn z_to_shifted(coeffs_z: &[f64], span: f64) -> Vec<f64> {
    let alpha = 2.0 / span;
    let beta = -1.0;
    let r = coeffs_z.len() - 1;
    let mut out = vec![coeffs_z[r]];
    for m in (0..r).rev() {
        let mut next = vec![0.0; out.len() + 1];
        for (i, &c) in out.iter().enumerate() {
            next[i + 1] += c * alpha;
            next[i] += c * beta;
        }
        next[0] += coeffs_z[m];
        out = next;
    }
    out
}

fn recomputed_sup(us: &[f64], vs: &[f64], coeffs: &[f64]) -> f64 {
    let mut sup = 0.0f64;
    for (&u, &v) in us.iter().zip(vs) {
        let mut acc = 0.0;
        for &c in coeffs.iter().rev() {
            acc = acc * u + c;
        }
        sup = sup.max((v - acc).abs());
    }
    sup
}

/// Gaussian elimination with partial pivoting for the tiny exchange systems.
fn solve_dense(mat: &mut [Vec<f64>], rhs: &mut [f64]) -> Result<Vec<f64>> {
    let n = rhs.len();
    for col in 0..n {
        let mut pivot = col;
        for row in col + 1..n {
            if mat[row][col].abs() > mat[pivot][col].abs() {
                pivot = row;
            }
        }
        if mat[pivot][col].abs() < 1e-300 {
            return Err(Error::Numerical("singular exchange system".into()));
        }
        mat.swap(col, pivot);
        rhs.swap(col, pivot);
        for row in col + 1..n {
            let f = mat[row][col] / mat[col][col];
            if f != 0.0 {
                let (head, tail) = mat.split_at_mut(row);
                let pivot_row = &head[col];
                for (target, source) in tail[0][col..n].iter_mut().zip(&pivot_row[col..n]) {
                    *target -= f * source;
                }
                rhs[row] -= f * rhs[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = rhs[row];
        for col in row + 1..n {
            acc -= mat[row][col] * x[col];
        }
        x[row] = acc / mat[row][row];
    }
    Ok(x)
}

// ---------------------------------------------------------------------------
// Prefix scans
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum ScanOutcome {
    /// First grid index at which the prefix error strictly exceeds ε.
    Exceeded(usize),
    /// The error stayed ≤ ε all the way to the scan's right end.
    Exhausted,
}

/// Scan prefixes `[start, e]` for `e = start+1 ..= end`, exploiting that the
/// minimax error is nondecreasing in the right endpoint. Ties at exactly ε
/// extend the interval (strict `>` decides).
pub(crate) fn scan_to_exceed(
    path: &SamplePath,
    start: usize,
    end: usize,
    r: usize,
    eps: f64,
    ws: &mut ApproxWorkspace,
) -> ScanOutcome {
    debug_assert!(start < end && end <= path.last_index());
    match r {
        0 | 1 => {
            ws.clear();
            let t_left = path.time(start);
            ws.push(0.0, path.value(start));
            let mut last_err = 0.0f64;
            for e in start + 1..=end {
                ws.push(path.time(e) - t_left, path.value(e));
                let err = ws.current_error();
                debug_assert!(
                    err >= last_err - 1e-12 * (1.0 + err.abs()),
                    "prefix error not monotone: {last_err} -> {err}"
                );
                last_err = err;
                if err > eps {
                    return ScanOutcome::Exceeded(e);
                }
            }
            ScanOutcome::Exhausted
        }
        _ => {
            // geometric probing, then bisect for the crossing index
            let err_at = |e: usize| -> f64 {
                best_poly(path, (start, e), r)
                    .map(|p| p.sup_error)
                    .unwrap_or(f64::NAN)
            };
            let mut known_ok = start;
            let mut stride = 1usize;
            loop {
                let probe = (known_ok + stride).min(end);
                if err_at(probe) > eps {
                    let (mut lo, mut hi) = (known_ok, probe);
                    while hi - lo > 1 {
                        let mid = lo + (hi - lo) / 2;
                        if err_at(mid) > eps {
                            hi = mid;
                        } else {
                            lo = mid;
                        }
                    }
                    return ScanOutcome::Exceeded(hi);
                }
                if probe == end {
                    return ScanOutcome::Exhausted;
                }
                known_ok = probe;
                stride *= 2;
            }
        }
    }
}

/// First grid index `e > start_index` at which the minimax error of degree ≤ r
/// on `[start_index, e]` strictly exceeds ε, or `None` if it never does before
/// the grid's end.
pub fn minimax_error_prefix_scan(
    path: &SamplePath,
    start_index: usize,
    r: usize,
    eps: f64,
) -> Result<Option<usize>> {
    if start_index >= path.last_index() {
        return Err(Error::Argument(format!(
            "scan start {start_index} must precede the last grid index {}",
            path.last_index()
        )));
    }
    if !(eps > 0.0) {
        return Err(Error::Argument(format!(
            "threshold must be positive, got {eps}"
        )));
    }
    let mut ws = ApproxWorkspace::new(r);
    match scan_to_exceed(path, start_index, path.last_index(), r, eps, &mut ws) {
        ScanOutcome::Exceeded(e) => Ok(Some(e)),
        ScanOutcome::Exhausted => Ok(None),
    }
}

// ---------------------------------------------------------------------------
// LP oracle
// ---------------------------------------------------------------------------

/// Independent oracle: solves the discrete minimax problem as the linear
/// program  min e  s.t.  -e ≤ v_i - Σ c_m z_i^m ≤ e  with a simplex solver.
pub fn lp_oracle_best_poly(
    path: &SamplePath,
    interval: (usize, usize),
    r: usize,
) -> Result<PolynomialPiece> {
    use minilp::{ComparisonOp, OptimizationDirection, Problem};

    let (a, b) = interval;
    if a > b || b > path.last_index() {
        return Err(Error::Argument(format!(
            "invalid fit interval [{a}, {b}] on path with last index {}",
            path.last_index()
        )));
    }
    let t_left = path.time(a);
    let us: Vec<f64> = (a..=b).map(|i| path.time(i) - t_left).collect();
    let vs = &path.values()[a..=b];
    let n = us.len();
    if n == 1 {
        let mut c = vec![0.0; r + 1];
        c[0] = vs[0];
        return Ok(PolynomialPiece {
            interval,
            t_left,
            coefficients: c,
            degree_bound: r,
            sup_error: 0.0,
        });
    }
    let span = us[n - 1] - us[0];
    let zs: Vec<f64> = us.iter().map(|&u| 2.0 * (u - us[0]) / span - 1.0).collect();

    let mut problem = Problem::new(OptimizationDirection::Minimize);
    let free = (f64::NEG_INFINITY, f64::INFINITY);
    let cs: Vec<_> = (0..=r).map(|_| problem.add_var(0.0, free)).collect();
    let e = problem.add_var(1.0, (0.0, f64::INFINITY));
    for (i, &v) in vs.iter().enumerate() {
        let mut powers = Vec::with_capacity(r + 2);
        let mut p = 1.0;
        for &c in &cs {
            powers.push((c, p));
            p *= zs[i];
        }
        let mut upper = powers.clone();
        upper.push((e, 1.0));
        problem.add_constraint(&upper[..], ComparisonOp::Ge, v);
        let mut lower = powers;
        lower.push((e, -1.0));
        problem.add_constraint(&lower[..], ComparisonOp::Le, v);
    }
    let solution = problem
        .solve()
        .map_err(|err| Error::Numerical(format!("LP oracle failed: {err}")))?;
    let coeffs_z: Vec<f64> = cs.iter().map(|&c| solution[c]).collect();
    let coefficients = z_to_shifted(&coeffs_z, span);
    Ok(PolynomialPiece {
        interval,
        t_left,
        coefficients,
        degree_bound: r,
        sup_error: solution[e],
    })
}

// ---------------------------------------------------------------------------
// Verification helpers
// ---------------------------------------------------------------------------

/// Count the longest alternating-sign subsequence among grid points whose
/// residual magnitude reaches `sup_error` within relative tolerance. A correct
/// Chebyshev solution with positive error yields at least r + 2.
pub fn equioscillation_count(path: &SamplePath, piece: &PolynomialPiece, rel_tol: f64) -> usize {
    if piece.sup_error <= 0.0 {
        return 0;
    }
    let threshold = piece.sup_error * (1.0 - rel_tol);
    let mut count = 0usize;
    let mut last_sign = 0i8;
    for i in piece.interval.0..=piece.interval.1 {
        let res = path.value(i) - piece.eval(path.time(i));
        if res.abs() >= threshold {
            let sign = if res >= 0.0 { 1 } else { -1 };
            if sign != last_sign {
                count += 1;
                last_sign = sign;
            }
        }
    }
    count
}
