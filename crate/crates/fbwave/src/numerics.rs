//! Scalar numerical kernels shared by the analysis modules: bracketing and
//! bisection, grid minimization with golden-section refinement, adaptive
//! Simpson quadrature and centered finite differences.
//!
//! Everything here works on `Fn(f64) -> f64` and is deterministic: no
//! randomness, fixed evaluation orders, so identical inputs give identical
//! bytes downstream.

/// Errors from the scalar kernels.
#[derive(Debug, thiserror::Error)]
pub enum NumericsError {
    #[error("no sign change on [{a}, {b}]: f(a)={fa:e}, f(b)={fb:e}")]
    NoSignChange { a: f64, b: f64, fa: f64, fb: f64 },
    #[error("quadrature did not converge on [{a}, {b}] (max depth {max_depth})")]
    QuadratureDepth { a: f64, b: f64, max_depth: usize },
    #[error("non-finite value encountered at x={x}")]
    NonFinite { x: f64 },
}

/// Uniform grid of `n + 1` points spanning `[a, b]` inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(n >= 1);
    let h = (b - a) / n as f64;
    (0..=n).map(|i| a + h * i as f64).collect()
}

/// Scans `f` on a uniform `n`-cell grid over `[a, b]` and returns the cells
/// where the sign changes. Cells with an exact zero at the left node are
/// reported once.
pub fn bracket_sign_changes<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> Vec<(f64, f64)> {
    let xs = linspace(a, b, n);
    let mut out = Vec::new();
    let mut prev_x = xs[0];
    let mut prev_f = f(prev_x);
    for &x in &xs[1..] {
        let fx = f(x);
        if prev_f == 0.0 {
            // zero exactly on a node: emit a degenerate bracket
            out.push((prev_x, prev_x));
        } else if prev_f * fx < 0.0 {
            out.push((prev_x, x));
        }
        prev_x = x;
        prev_f = fx;
    }
    if prev_f == 0.0 {
        out.push((prev_x, prev_x));
    }
    out
}

/// Bisection on a sign-change bracket, to absolute tolerance `tol` in x.
///
/// The bracket may be degenerate (`a == b`) when the root sits exactly on a
/// grid node; it is then returned as-is.
pub fn bisect<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64, NumericsError> {
    if a == b {
        return Ok(a);
    }
    let (mut lo, mut hi) = (a, b);
    let (mut flo, fhi) = (f(lo), f(hi));
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo * fhi > 0.0 {
        return Err(NumericsError::NoSignChange { a, b, fa: flo, fb: fhi });
    }
    // 2^-200 of the initial width is far below any tol we use; the loop is
    // bounded regardless of tol underflow.
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        let fmid = f(mid);
        if !fmid.is_finite() {
            return Err(NumericsError::NonFinite { x: mid });
        }
        if fmid == 0.0 {
            return Ok(mid);
        }
        if flo * fmid < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            flo = fmid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Minimum of `f` over the closed interval `[a, b]`: coarse scan on an
/// `n`-cell grid followed by golden-section refinement around the best node.
///
/// Returns `(argmin, min)`.
pub fn min_on_interval<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> (f64, f64) {
    let xs = linspace(a, b, n.max(2));
    let mut best_i = 0;
    let mut best = f64::INFINITY;
    for (i, &x) in xs.iter().enumerate() {
        let fx = f(x);
        if fx < best {
            best = fx;
            best_i = i;
        }
    }
    let lo = if best_i == 0 { xs[0] } else { xs[best_i - 1] };
    let hi = if best_i + 1 == xs.len() { xs[xs.len() - 1] } else { xs[best_i + 1] };
    golden_min(&f, lo, hi, 1e-13 * (b - a).abs().max(1.0))
}

fn golden_min<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..120 {
        if (b - a).abs() <= tol {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance
/// `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    tol: f64,
    max_depth: usize,
) -> Result<f64, NumericsError> {
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    for (x, v) in [(a, fa), (m, fm), (b, fb)] {
        if !v.is_finite() {
            return Err(NumericsError::NonFinite { x });
        }
    }
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_rec(f, a, b, fa, fm, fb, whole, tol, max_depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: usize,
) -> Result<f64, NumericsError> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    if !flm.is_finite() {
        return Err(NumericsError::NonFinite { x: lm });
    }
    if !frm.is_finite() {
        return Err(NumericsError::NonFinite { x: rm });
    }
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    // the relative floor stops subdivision once the correction sits at the
    // rounding noise of the partial sums, where tol may be unreachable; it
    // must clear that noise decisively or marginal panels keep splitting
    let noise_floor = 256.0 * f64::EPSILON * (left.abs() + right.abs());
    if delta.abs() <= 15.0 * tol || delta.abs() <= noise_floor || (b - a).abs() < 1e-15 {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(NumericsError::QuadratureDepth { a, b, max_depth: 0 });
    }
    // the tolerance is deliberately NOT halved on descent: with rounding
    // noise proportional to the subinterval width, halving makes marginal
    // panels split forever; the caller budgets tol per top-level panel
    let l = simpson_rec(f, a, m, fa, flm, fm, left, tol, depth - 1)?;
    let r = simpson_rec(f, m, b, fm, frm, fb, right, tol, depth - 1)?;
    Ok(l + r)
}

/// Centered finite difference of `f` at `x` with step `h`.
pub fn centered_diff<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Second central difference of `f` at `x` with step `h` (approximates
/// `h^2 f''(x)` up to the 1/h^2 factor kept explicit here).
pub fn second_diff<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h)
}

/// Piecewise-linear evaluation of a sampled monotone map. `xs` must be
/// non-decreasing; outside the range the end values are returned.
pub fn interp_clamped(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    debug_assert_eq!(xs.len(), ys.len());
    if xs.is_empty() {
        return f64::NAN;
    }
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[xs.len() - 1] {
        return ys[ys.len() - 1];
    }
    // partition_point: first index with xs[i] > x
    let i = xs.partition_point(|&v| v <= x);
    let (x0, x1) = (xs[i - 1], xs[i]);
    let (y0, y1) = (ys[i - 1], ys[i]);
    if x1 == x0 {
        return y0;
    }
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_finds_sqrt2() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn bisect_rejects_same_sign() {
        assert!(bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-12).is_err());
    }

    #[test]
    fn brackets_cover_cubic_roots() {
        let br = bracket_sign_changes(|x| (x - 0.2) * (x - 0.5) * (x - 0.8), 0.0, 1.0, 64);
        assert_eq!(br.len(), 3);
        for ((lo, hi), root) in br.iter().zip([0.2, 0.5, 0.8]) {
            assert!(lo <= &root && &root <= hi);
        }
    }

    #[test]
    fn simpson_integrates_polynomial_exactly() {
        // Simpson is exact on cubics
        let v = adaptive_simpson(&|x: f64| x * x * x - x, 0.0, 2.0, 1e-12, 40).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
    }

    #[test]
    fn simpson_handles_steep_integrand() {
        let v = adaptive_simpson(&|x: f64| 1.0 / (1e-3 + x * x), -1.0, 1.0, 1e-10, 48).unwrap();
        let exact = 2.0 / 1e-3f64.sqrt() * (1.0 / 1e-3f64.sqrt()).atan();
        assert!((v - exact).abs() < 1e-8, "v={v} exact={exact}");
    }

    #[test]
    fn min_refines_below_grid_resolution() {
        let (x, fx) = min_on_interval(|x| (x - 0.3137).powi(2), 0.0, 1.0, 32);
        assert!((x - 0.3137).abs() < 1e-9);
        assert!(fx < 1e-17);
    }

    #[test]
    fn interp_is_monotone_and_clamped() {
        let xs = [0.0, 1.0, 2.0];
        let ys = [0.0, 10.0, 12.0];
        assert_eq!(interp_clamped(&xs, &ys, -5.0), 0.0);
        assert_eq!(interp_clamped(&xs, &ys, 5.0), 12.0);
        assert!((interp_clamped(&xs, &ys, 0.5) - 5.0).abs() < 1e-15);
    }
}
