//! Geometric analysis of the flux `f` and diffusivity `D`: sign patterns of
//! `D` over the density range, chord (secant) conditions on `f`, inflection
//! points, and characteristic-speed (Lax) classification of the limiting
//! shock.
//!
//! The sign pattern drives everything downstream. Writing `alpha`, `beta`
//! for interior sign changes of `D`:
//!
//! ```text
//! D1          + on (0, alpha),  - on (alpha, 1)
//! D2          + on (0, alpha),  - on (alpha, beta),  + on (beta, 1)
//! ReversedD1  - on (lo, beta),  + on (beta, hi)
//! ```
//!
//! Roots are located by scanning a uniform grid, bracketing sign changes and
//! refining by bisection; tangential zeros (no sign change) are reported
//! with a flag and excluded from pattern classification, since the patterns
//! are defined by sign changes, not zeros.

use serde::Serialize;

use crate::models::{DiffusivityModel, FluxModel};
use crate::numerics;

/// Grid resolution and tolerances for the geometric scans.
#[derive(Debug, Clone, Copy)]
pub struct ScanConfig {
    /// Cells in the uniform scan grid.
    pub grid_n: usize,
    /// Root acceptance: `|D(r)| <= tol_root * max(1, sup|D|)`.
    pub tol_root: f64,
    /// Strictness for chord margins, relative to `sup|f|`.
    pub strict_tol: f64,
    /// Bisection refinement tolerance in `rho`.
    pub refine_tol: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self { grid_n: 4096, tol_root: 1e-9, strict_tol: 1e-10, refine_tol: 1e-12 }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum GeomError {
    #[error("cannot separate roots near rho = {near} at resolution 1e-10")]
    UnresolvedRoots { near: f64 },
}

/// How `D` crosses zero at a reported root.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Crossing {
    SignChange,
    Tangency,
}

/// An interior zero of `D`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Root {
    pub location: f64,
    pub crossing: Crossing,
}

/// A maximal interval of constant sign.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SignedInterval {
    pub lo: f64,
    pub hi: f64,
    /// `+1` or `-1`
    pub sign: i8,
}

/// Classification of the sign pattern of `D` on the scanned interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum PatternClass {
    PositiveInterior,
    NegativeInterior,
    D1 { alpha: f64 },
    D2 { alpha: f64, beta: f64 },
    ReversedD1 { beta: f64 },
    Other,
}

/// Sign pattern of a diffusivity over `[domain.0, domain.1]`.
#[derive(Debug, Clone, Serialize)]
pub struct SignPattern {
    pub domain: (f64, f64),
    pub roots: Vec<Root>,
    pub intervals: Vec<SignedInterval>,
    pub classification: PatternClass,
    /// `|D| <= tol` at the left/right endpoint of the domain.
    pub zero_at_left: bool,
    pub zero_at_right: bool,
}

impl SignPattern {
    pub fn alpha(&self) -> Option<f64> {
        match self.classification {
            PatternClass::D1 { alpha } | PatternClass::D2 { alpha, .. } => Some(alpha),
            _ => None,
        }
    }

    pub fn beta(&self) -> Option<f64> {
        match self.classification {
            PatternClass::D2 { beta, .. } | PatternClass::ReversedD1 { beta } => Some(beta),
            _ => None,
        }
    }
}

/// Locates the sign pattern of `D` on `[0, 1]`.
pub fn sign_pattern(d: &DiffusivityModel, tol_root: f64) -> Result<SignPattern, GeomError> {
    let cfg = ScanConfig { tol_root, ..ScanConfig::default() };
    sign_pattern_on(d, 0.0, 1.0, &cfg)
}

/// Locates the sign pattern of `D` on `[lo, hi]` (used for laws that are
/// only C1 on a sub-interval).
pub fn sign_pattern_on(
    d: &DiffusivityModel,
    lo: f64,
    hi: f64,
    cfg: &ScanConfig,
) -> Result<SignPattern, GeomError> {
    let sup = d.sup_abs(lo, hi);
    let abs_tol = cfg.tol_root * sup.max(1.0);
    let h = (hi - lo) / cfg.grid_n as f64;
    // endpoints excluded by one cell so that D(0)=D(1)=0 does not masquerade
    // as an interior root
    let (scan_lo, scan_hi) = (lo + h, hi - h);

    // Sign transitions between consecutive nodes of nonzero sign; exact-zero
    // runs (formula underflow, plateaus) bridge to the next signed node: a
    // run between opposite signs is one sign change, between equal signs a
    // tangency, at the boundary part of the adjacent interval.
    let xs = numerics::linspace(scan_lo, scan_hi, cfg.grid_n - 2);
    let vals: Vec<f64> = xs.iter().map(|&x| d.eval(x)).collect();
    let nonzero: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] != 0.0).collect();
    let mut roots: Vec<Root> = Vec::new();
    for w in nonzero.windows(2) {
        let (i, j) = (w[0], w[1]);
        if vals[i] * vals[j] < 0.0 {
            let r = numerics::bisect(|x| d.eval(x), xs[i], xs[j], cfg.refine_tol)
                .unwrap_or(0.5 * (xs[i] + xs[j]));
            roots.push(Root { location: r, crossing: Crossing::SignChange });
        } else if j > i + 1 {
            // zero run between equal signs: a touch, not a crossing
            let mid = 0.5 * (xs[i + 1] + xs[j - 1]);
            roots.push(Root { location: mid, crossing: Crossing::Tangency });
        }
    }
    roots.dedup_by(|a, b| (a.location - b.location).abs() < cfg.refine_tol);
    for pair in roots.windows(2) {
        if pair[1].location - pair[0].location < 1e-10 {
            return Err(GeomError::UnresolvedRoots { near: pair[0].location });
        }
    }

    // tangential zeros that never reach exact 0.0: local minima of |D| that
    // dip below the root tolerance with no sign change across them
    for i in 1..xs.len() - 1 {
        let (am, a0, ap) = (vals[i - 1].abs(), vals[i].abs(), vals[i + 1].abs());
        if a0 != 0.0 && a0 < am && a0 < ap && vals[i - 1] * vals[i + 1] > 0.0 {
            let (x, fx) = numerics::min_on_interval(|t| d.eval(t).abs(), xs[i - 1], xs[i + 1], 16);
            if fx <= abs_tol && !roots.iter().any(|r| (r.location - x).abs() < 16.0 * h) {
                roots.push(Root { location: x, crossing: Crossing::Tangency });
            }
        }
    }
    roots.sort_by(|a, b| a.location.total_cmp(&b.location));

    // intervals between sign-change roots; the sign comes from the node of
    // largest magnitude inside each interval, so tangencies and zero runs
    // cannot flip it
    let changes: Vec<f64> = roots
        .iter()
        .filter(|r| r.crossing == Crossing::SignChange)
        .map(|r| r.location)
        .collect();
    let mut bounds = vec![lo];
    bounds.extend_from_slice(&changes);
    bounds.push(hi);
    let mut intervals = Vec::new();
    for pair in bounds.windows(2) {
        let mut dominant = 0.0f64;
        for (&x, &v) in xs.iter().zip(&vals) {
            if x > pair[0] && x < pair[1] && v.abs() > dominant.abs() {
                dominant = v;
            }
        }
        if dominant == 0.0 {
            dominant = d.eval(0.5 * (pair[0] + pair[1]));
        }
        let sign = if dominant >= 0.0 { 1 } else { -1 };
        intervals.push(SignedInterval { lo: pair[0], hi: pair[1], sign });
    }

    let classification = classify(&intervals);
    Ok(SignPattern {
        domain: (lo, hi),
        roots,
        intervals,
        classification,
        zero_at_left: d.eval(lo).abs() <= abs_tol,
        zero_at_right: d.eval(hi).abs() <= abs_tol,
    })
}

fn classify(intervals: &[SignedInterval]) -> PatternClass {
    let signs: Vec<i8> = intervals.iter().map(|i| i.sign).collect();
    match signs.as_slice() {
        [1] => PatternClass::PositiveInterior,
        [-1] => PatternClass::NegativeInterior,
        [1, -1] => PatternClass::D1 { alpha: intervals[0].hi },
        [-1, 1] => PatternClass::ReversedD1 { beta: intervals[0].hi },
        [1, -1, 1] => PatternClass::D2 { alpha: intervals[0].hi, beta: intervals[1].hi },
        _ => PatternClass::Other,
    }
}

/// The line through `(a, f(a))` and `(b, f(b))`.
#[derive(Debug, Clone, Copy)]
pub struct Chord {
    pub a: f64,
    pub b: f64,
    pub f_a: f64,
    pub slope: f64,
}

impl Chord {
    pub fn new(f: &FluxModel, a: f64, b: f64) -> Self {
        let f_a = f.eval(a);
        let slope = (f.eval(b) - f_a) / (b - a);
        Self { a, b, f_a, slope }
    }

    pub fn eval(&self, rho: f64) -> f64 {
        self.f_a + self.slope * (rho - self.a)
    }
}

/// Which side of the chord the flux is required to stay on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Side {
    Above,
    Below,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MarginVerdict {
    Holds,
    Degenerate,
    Fails,
}

/// Margin of one strict chord inequality on an open interval.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SegmentMargin {
    pub lo: f64,
    pub hi: f64,
    pub expected: Side,
    /// Signed minimum of `f - s` (`Above`) or `s - f` (`Below`); positive
    /// means the strict inequality holds.
    pub margin: f64,
    pub verdict: MarginVerdict,
}

/// Report of the chord conditions along `l_minus < mids... < l_plus`.
#[derive(Debug, Clone, Serialize)]
pub struct ChordReport {
    pub segments: Vec<SegmentMargin>,
    /// Absolute strictness threshold used for the verdicts.
    pub strict_tol_abs: f64,
}

impl ChordReport {
    pub fn all_hold(&self) -> bool {
        self.segments.iter().all(|s| s.verdict == MarginVerdict::Holds)
    }

    pub fn margins(&self) -> Vec<f64> {
        self.segments.iter().map(|s| s.margin).collect()
    }
}

/// Signed minima of `f` against the chords of consecutive node pairs, with
/// the required side alternating Above, Below, Above, ... starting from
/// `Above` on `(l_minus, mids[0])`.
///
/// Each minimum is taken over the open interval (endpoints excluded by half
/// a grid step, where equality holds by construction) on a `grid_n` grid and
/// polished by golden-section refinement. Margins may be negative; the
/// verdict is `Degenerate` within `strict_tol * sup|f|` of zero.
pub fn chord_conditions(
    f: &FluxModel,
    l_minus: f64,
    mids: &[f64],
    l_plus: f64,
    cfg: &ScanConfig,
) -> ChordReport {
    let mut nodes = vec![l_minus];
    nodes.extend_from_slice(mids);
    nodes.push(l_plus);
    assert!(nodes.windows(2).all(|w| w[0] < w[1]), "nodes must be strictly ascending");

    let strict_tol_abs = cfg.strict_tol * f.sup_abs(l_minus, l_plus).max(f64::MIN_POSITIVE);
    let mut segments = Vec::new();
    for (k, pair) in nodes.windows(2).enumerate() {
        let (lo, hi) = (pair[0], pair[1]);
        let chord = Chord::new(f, lo, hi);
        let expected = if k % 2 == 0 { Side::Above } else { Side::Below };
        let h = (hi - lo) / cfg.grid_n as f64;
        let g = |x: f64| {
            let diff = f.eval(x) - chord.eval(x);
            match expected {
                Side::Above => diff,
                Side::Below => -diff,
            }
        };
        let (_, margin) = numerics::min_on_interval(g, lo + 0.5 * h, hi - 0.5 * h, cfg.grid_n);
        let verdict = if margin > strict_tol_abs {
            MarginVerdict::Holds
        } else if margin < -strict_tol_abs {
            MarginVerdict::Fails
        } else {
            MarginVerdict::Degenerate
        };
        segments.push(SegmentMargin { lo, hi, expected, margin, verdict });
    }
    ChordReport { segments, strict_tol_abs }
}

/// Roots of `f''` located through sign changes of second differences,
/// refined by bisection.
///
/// Node values below the rounding floor of the second difference are
/// treated as zero, so flat or underflowed stretches of `f` do not create
/// spurious inflections.
pub fn inflection_points(f: &FluxModel) -> Vec<f64> {
    let h = 1e-4;
    let g = |x: f64| numerics::second_diff(|t| f.eval(t), x, h);
    let floor = |x: f64| 64.0 * f64::EPSILON * f.eval(x).abs().max(1e-300) / (h * h);
    let xs = numerics::linspace(2.0 * h, 1.0 - 2.0 * h, 2048);
    let vals: Vec<f64> = xs.iter().map(|&x| g(x)).collect();
    let signed: Vec<usize> =
        (0..vals.len()).filter(|&i| vals[i].abs() > floor(xs[i])).collect();
    let mut out = Vec::new();
    for w in signed.windows(2) {
        let (i, j) = (w[0], w[1]);
        if vals[i] * vals[j] < 0.0 {
            if let Ok(r) = numerics::bisect(g, xs[i], xs[j], 1e-12) {
                out.push(r);
            }
        }
    }
    out.dedup_by(|a, b| (*a - *b).abs() < 1e-8);
    out
}

/// Characteristic-speed classification of the jump from `l_minus` to
/// `l_plus` moving at speed `c`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LaxReport {
    pub f_prime_left: f64,
    pub f_prime_right: f64,
    pub speed: f64,
    pub compressive_left: bool,
    pub compressive_right: bool,
    pub sonic_left: bool,
    pub sonic_right: bool,
    pub doubly_sonic: bool,
    /// The flux crosses the secant between the states, so the jump fails
    /// the entropy (chord) condition even when both Lax inequalities hold.
    pub entropy_violated: bool,
}

/// Classifies the shock `l_minus -> l_plus` with speed `c`: Lax
/// inequalities with a `1e-9` tolerance for sonic equality, and the chord
/// entropy test over the open interval between the states.
pub fn classify_lax(f: &FluxModel, l_minus: f64, l_plus: f64, c: f64) -> LaxReport {
    let fl = f.deriv(l_minus);
    let fr = f.deriv(l_plus);
    let tol = 1e-9 * c.abs().max(1.0);
    let sonic_left = (fl - c).abs() <= tol;
    let sonic_right = (fr - c).abs() <= tol;

    let (lo, hi) = if l_minus < l_plus { (l_minus, l_plus) } else { (l_plus, l_minus) };
    let chord = Chord::new(f, lo, hi);
    let strict = 1e-10 * f.sup_abs(lo, hi).max(1.0);
    let h = (hi - lo) / 4096.0;
    let (_, min_diff) =
        numerics::min_on_interval(|x| f.eval(x) - chord.eval(x), lo + 0.5 * h, hi - 0.5 * h, 4096);
    let (_, neg_max) =
        numerics::min_on_interval(|x| chord.eval(x) - f.eval(x), lo + 0.5 * h, hi - 0.5 * h, 4096);
    let max_diff = -neg_max;
    // increasing jumps are entropic iff f stays above the secant, decreasing
    // jumps iff below; a crossing violates either way
    let entropy_violated = if l_minus < l_plus { min_diff < -strict } else { max_diff > strict };

    LaxReport {
        f_prime_left: fl,
        f_prime_right: fr,
        speed: c,
        compressive_left: fl > c + tol,
        compressive_right: c > fr + tol,
        sonic_left,
        sonic_right,
        doubly_sonic: sonic_left && sonic_right,
        entropy_violated,
    }
}
