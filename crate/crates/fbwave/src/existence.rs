//! Existence analysis for wavefronts crossing sign changes of the
//! diffusivity.
//!
//! A front from `l_minus` to `l_plus` across a single sign change at `alpha`
//! exists exactly when two geometric conditions hold:
//!
//! * collinearity: the secants `l_minus -> alpha` and `alpha -> l_plus` have
//!   the same slope `c`, which is then the wave speed;
//! * chord conditions: `f` lies strictly above that line on
//!   `(l_minus, alpha)` and strictly below it on `(alpha, l_plus)`.
//!
//! With two sign changes (`alpha`, `beta`) the line must pass through both
//! interior points and `f` alternates above / below / above. On intervals
//! where `D` has constant sign the four-way case split of
//! [`const_sign_case`] applies instead.
//!
//! The tail of the module holds closed-form machinery for specific model
//! families: the quadratic-law cubic flux (end states from a quadratic in
//! `mu = m / v_max`), the admissibility test for the cubic velocity with two
//! stationary points, the reversed sign-change location for the exponential
//! law, and the negative constructions showing when the constant-anticipation
//! model cannot produce admissible fronts.

use rayon::prelude::*;
use serde::Serialize;

use crate::fluxgeom::{self, MarginVerdict, PatternClass, ScanConfig, SignPattern};
use crate::models::{CustomVelocity, DiffusivityModel, FluxModel, SafetyCheck, VelocityLaw};
use crate::numerics;

#[derive(Debug, thiserror::Error)]
pub enum ExistenceError {
    #[error("secant collinearity failed on {segment}: residual {residual:e} exceeds {tolerance:e}")]
    CollinearityFailed { segment: &'static str, residual: f64, tolerance: f64 },
    #[error("chord condition failed on ({lo}, {hi}) ({expected}): margin {margin:e}")]
    ChordFailed { lo: f64, hi: f64, expected: &'static str, margin: f64 },
    #[error("expected a {expected} sign pattern, found {found:?}")]
    WrongPattern { expected: &'static str, found: PatternClass },
    #[error("end states ({l_minus}, {l_plus}) violate the ordering required by the {regime} regime")]
    InvalidEndStates { l_minus: f64, l_plus: f64, regime: &'static str },
    #[error("diffusivity changes sign inside ({a}, {b}) near rho = {near}")]
    NotConstantSign { a: f64, b: f64, near: f64 },
    #[error("mu = {mu} outside the admissible window at alpha = {alpha}: failed {failed:?}")]
    OutsideWindow { alpha: f64, mu: f64, failed: Vec<&'static str> },
    #[error("sigma must be positive, got {sigma}")]
    NonPositiveSigma { sigma: f64 },
    #[error("need 0 < alpha < beta < 1, got alpha = {alpha}, beta = {beta}")]
    BadOrdering { alpha: f64, beta: f64 },
    #[error("conditions not met: {failed:?}")]
    ConditionsNotMet { failed: Vec<&'static str> },
    #[error("no admissible partner state on the {side} side of alpha = {alpha}")]
    NoAdmissiblePartner { side: &'static str, alpha: f64 },
}

/// Constant-sign wavefront cases: sign of `D` times position of `f` against
/// the chord.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ConstSignCase {
    /// `D > 0`, `f > s`: increasing front from `a` to `b`
    A1,
    /// `D > 0`, `f < s`: decreasing front from `b` to `a`
    A2,
    /// `D < 0`, `f > s`: decreasing front from `b` to `a`
    B1,
    /// `D < 0`, `f < s`: increasing front from `a` to `b`
    B2,
}

impl ConstSignCase {
    pub fn increasing(self) -> bool {
        matches!(self, Self::A1 | Self::B2)
    }
}

/// Which front regime an accepted [`WaveSpec`] belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Regime {
    /// Increasing front through one sign change at `alpha`.
    D1Front { alpha: f64 },
    /// Increasing front through two sign changes.
    D2Front { alpha: f64, beta: f64 },
    /// Front on an interval where `D` keeps one sign.
    ConstSign { case: ConstSignCase, a: f64, b: f64 },
    /// Decreasing front through a negative-then-positive sign change at
    /// `beta` (cases B1 and A2 pasted).
    ReversedFront { beta: f64 },
}

/// An accepted wavefront: end states, speed, regime and the models that
/// produced it. `l_minus < l_plus` always denotes the value range; whether
/// the profile increases is a property of the regime.
#[derive(Clone)]
pub struct WaveSpec {
    pub flux: FluxModel,
    pub diffusivity: DiffusivityModel,
    pub l_minus: f64,
    pub l_plus: f64,
    pub speed: f64,
    pub regime: Regime,
    /// Max deviation among the defining secant slopes.
    pub collinearity_residual: f64,
    /// Chord margins, one per segment, all positive on acceptance.
    pub chord_margins: Vec<f64>,
}

impl std::fmt::Debug for WaveSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("WaveSpec")
            .field("l_minus", &self.l_minus)
            .field("l_plus", &self.l_plus)
            .field("speed", &self.speed)
            .field("regime", &self.regime)
            .field("collinearity_residual", &self.collinearity_residual)
            .field("chord_margins", &self.chord_margins)
            .finish()
    }
}

impl WaveSpec {
    /// `F(rho) = f(rho) - f(l_minus) - c (rho - l_minus)`, the integrated
    /// form of the profile equation. Vanishes at the end states and at every
    /// interior sign change on acceptance.
    pub fn chord_residual(&self, rho: f64) -> f64 {
        self.flux.eval(rho) - self.flux.eval(self.l_minus) - self.speed * (rho - self.l_minus)
    }

    /// `F'(rho) = f'(rho) - c`.
    pub fn chord_residual_deriv(&self, rho: f64) -> f64 {
        self.flux.deriv(rho) - self.speed
    }

    /// The front is stationary when the end states carry equal flux.
    pub fn is_stationary(&self) -> bool {
        self.speed.abs() <= 1e-12 * self.flux.sup_abs(self.l_minus, self.l_plus).max(1.0)
    }

    /// Interior zeros of `D` crossed by this front, in ascending order.
    pub fn interior_zeros(&self) -> Vec<f64> {
        match self.regime {
            Regime::D1Front { alpha } => vec![alpha],
            Regime::D2Front { alpha, beta } => vec![alpha, beta],
            Regime::ReversedFront { beta } => vec![beta],
            Regime::ConstSign { .. } => vec![],
        }
    }
}

fn secant(f: &FluxModel, a: f64, b: f64) -> f64 {
    (f.eval(b) - f.eval(a)) / (b - a)
}

fn check_chords(
    f: &FluxModel,
    l_minus: f64,
    mids: &[f64],
    l_plus: f64,
    cfg: &ScanConfig,
) -> Result<Vec<f64>, ExistenceError> {
    let report = fluxgeom::chord_conditions(f, l_minus, mids, l_plus, cfg);
    for seg in &report.segments {
        if seg.verdict != MarginVerdict::Holds {
            return Err(ExistenceError::ChordFailed {
                lo: seg.lo,
                hi: seg.hi,
                expected: match seg.expected {
                    fluxgeom::Side::Above => "flux above chord",
                    fluxgeom::Side::Below => "flux below chord",
                },
                margin: seg.margin,
            });
        }
    }
    Ok(report.margins())
}

/// Existence check for an increasing front across one sign change.
///
/// Accepts iff the two secants through `(alpha, f(alpha))` agree to
/// `1e-10 * max(1, |c|)` and both chord conditions hold strictly; the
/// common slope is the wave speed. Stationary fronts (`c = 0`) follow the
/// same path.
pub fn check_existence_d1(
    f: &FluxModel,
    d: &DiffusivityModel,
    pattern: &SignPattern,
    l_minus: f64,
    l_plus: f64,
    cfg: &ScanConfig,
) -> Result<WaveSpec, ExistenceError> {
    let alpha = match pattern.classification {
        PatternClass::D1 { alpha } => alpha,
        found => return Err(ExistenceError::WrongPattern { expected: "D1", found }),
    };
    if !(0.0..alpha).contains(&l_minus) || !(l_plus > alpha && l_plus <= 1.0) {
        return Err(ExistenceError::InvalidEndStates { l_minus, l_plus, regime: "D1" });
    }
    let s_left = secant(f, l_minus, alpha);
    let s_right = secant(f, alpha, l_plus);
    let c = secant(f, l_minus, l_plus);
    let residual = (s_left - s_right).abs();
    let tolerance = 1e-10 * c.abs().max(1.0);
    if residual > tolerance {
        return Err(ExistenceError::CollinearityFailed {
            segment: "l_minus -> alpha -> l_plus",
            residual,
            tolerance,
        });
    }
    let margins = check_chords(f, l_minus, &[alpha], l_plus, cfg)?;
    Ok(WaveSpec {
        flux: f.clone(),
        diffusivity: d.clone(),
        l_minus,
        l_plus,
        speed: c,
        regime: Regime::D1Front { alpha },
        collinearity_residual: residual,
        chord_margins: margins,
    })
}

/// Existence check for an increasing front across two sign changes: the
/// three secants `l_minus -> alpha -> beta -> l_plus` must share one slope
/// and `f` must alternate above / below / above the line.
pub fn check_existence_d2(
    f: &FluxModel,
    d: &DiffusivityModel,
    pattern: &SignPattern,
    l_minus: f64,
    l_plus: f64,
    cfg: &ScanConfig,
) -> Result<WaveSpec, ExistenceError> {
    let (alpha, beta) = match pattern.classification {
        PatternClass::D2 { alpha, beta } => (alpha, beta),
        found => return Err(ExistenceError::WrongPattern { expected: "D2", found }),
    };
    if !(0.0..alpha).contains(&l_minus) || !(l_plus > beta && l_plus <= 1.0) {
        return Err(ExistenceError::InvalidEndStates { l_minus, l_plus, regime: "D2" });
    }
    let c = secant(f, l_minus, l_plus);
    let tolerance = 1e-10 * c.abs().max(1.0);
    let slopes = [
        ("l_minus -> alpha", secant(f, l_minus, alpha)),
        ("alpha -> beta", secant(f, alpha, beta)),
        ("beta -> l_plus", secant(f, beta, l_plus)),
    ];
    let mut residual = 0.0f64;
    for (segment, s) in slopes {
        let dev = (s - c).abs();
        if dev > tolerance {
            return Err(ExistenceError::CollinearityFailed { segment, residual: dev, tolerance });
        }
        residual = residual.max(dev);
    }
    let margins = check_chords(f, l_minus, &[alpha, beta], l_plus, cfg)?;
    Ok(WaveSpec {
        flux: f.clone(),
        diffusivity: d.clone(),
        l_minus,
        l_plus,
        speed: c,
        regime: Regime::D2Front { alpha, beta },
        collinearity_residual: residual,
        chord_margins: margins,
    })
}

/// Existence check for a decreasing front across a negative-then-positive
/// sign change at `beta`: same collinearity and chord alternation as the
/// increasing case with `beta` in place of `alpha`, but the profile runs
/// from `l_plus` at `-inf` down to `l_minus`.
pub fn check_existence_reversed(
    f: &FluxModel,
    d: &DiffusivityModel,
    pattern: &SignPattern,
    l_minus: f64,
    l_plus: f64,
    cfg: &ScanConfig,
) -> Result<WaveSpec, ExistenceError> {
    let beta = match pattern.classification {
        PatternClass::ReversedD1 { beta } => beta,
        found => return Err(ExistenceError::WrongPattern { expected: "ReversedD1", found }),
    };
    let (lo, hi) = pattern.domain;
    if !(l_minus >= lo && l_minus < beta && l_plus > beta && l_plus <= hi) {
        return Err(ExistenceError::InvalidEndStates { l_minus, l_plus, regime: "ReversedD1" });
    }
    let s_left = secant(f, l_minus, beta);
    let s_right = secant(f, beta, l_plus);
    let c = secant(f, l_minus, l_plus);
    let residual = (s_left - s_right).abs();
    let tolerance = 1e-10 * c.abs().max(1.0);
    if residual > tolerance {
        return Err(ExistenceError::CollinearityFailed {
            segment: "l_minus -> beta -> l_plus",
            residual,
            tolerance,
        });
    }
    let margins = check_chords(f, l_minus, &[beta], l_plus, cfg)?;
    Ok(WaveSpec {
        flux: f.clone(),
        diffusivity: d.clone(),
        l_minus,
        l_plus,
        speed: c,
        regime: Regime::ReversedFront { beta },
        collinearity_residual: residual,
        chord_margins: margins,
    })
}

/// Case selection on an interval where `D` keeps one sign.
///
/// Returns the matching case and the wave speed `(f(b) - f(a)) / (b - a)`,
/// `None` when `f` crosses the chord (no front), and an error when `D`
/// changes sign inside `(a, b)`.
pub fn const_sign_case(
    f: &FluxModel,
    d: &DiffusivityModel,
    a: f64,
    b: f64,
    cfg: &ScanConfig,
) -> Result<Option<WaveSpec>, ExistenceError> {
    let h = (b - a) / cfg.grid_n as f64;
    let d_tol = cfg.tol_root * d.sup_abs(a, b).max(1.0);
    let (at_min, d_min) = numerics::min_on_interval(|x| d.eval(x), a + 0.5 * h, b - 0.5 * h, 1024);
    let (at_max, neg) = numerics::min_on_interval(|x| -d.eval(x), a + 0.5 * h, b - 0.5 * h, 1024);
    let d_max = -neg;
    if d_min < -d_tol && d_max > d_tol {
        let near = if d_min.abs() < d_max.abs() { at_min } else { at_max };
        return Err(ExistenceError::NotConstantSign { a, b, near });
    }
    let d_positive = d_max > d_tol;

    let chord = fluxgeom::Chord::new(f, a, b);
    let strict = cfg.strict_tol * f.sup_abs(a, b).max(f64::MIN_POSITIVE);
    let (_, above_margin) = numerics::min_on_interval(
        |x| f.eval(x) - chord.eval(x),
        a + 0.5 * h,
        b - 0.5 * h,
        cfg.grid_n,
    );
    let (_, below_margin) = numerics::min_on_interval(
        |x| chord.eval(x) - f.eval(x),
        a + 0.5 * h,
        b - 0.5 * h,
        cfg.grid_n,
    );

    let (case, margin) = if above_margin > strict {
        (if d_positive { ConstSignCase::A1 } else { ConstSignCase::B1 }, above_margin)
    } else if below_margin > strict {
        (if d_positive { ConstSignCase::A2 } else { ConstSignCase::B2 }, below_margin)
    } else {
        return Ok(None);
    };

    Ok(Some(WaveSpec {
        flux: f.clone(),
        diffusivity: d.clone(),
        l_minus: a,
        l_plus: b,
        speed: chord.slope,
        regime: Regime::ConstSign { case, a, b },
        collinearity_residual: 0.0,
        chord_margins: vec![margin],
    }))
}

/// One admissible end-state pair in a slope-parametrized family.
#[derive(Debug, Clone, Serialize)]
pub struct EndStateMember {
    /// Slope of the line through `(alpha, f(alpha))`; equals the wave speed.
    pub m: f64,
    pub l_minus: f64,
    pub l_plus: f64,
    pub margin_left: f64,
    pub margin_right: f64,
    /// All intersections found on each side; the reported pair is the one
    /// closest to `alpha` that passes the chord conditions.
    pub candidates_left: Vec<f64>,
    pub candidates_right: Vec<f64>,
}

/// The one-parameter family of admissible end states for a D1 sign change.
#[derive(Debug, Clone, Serialize)]
pub struct EndStateFamily {
    pub alpha: f64,
    pub members: Vec<EndStateMember>,
}

impl EndStateFamily {
    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

fn line_intersections(f: &FluxModel, alpha: f64, m: f64, lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let f_alpha = f.eval(alpha);
    let g = |x: f64| f.eval(x) - (f_alpha + m * (x - alpha));
    let mut out = Vec::new();
    for (a, b) in numerics::bracket_sign_changes(g, lo, hi, n) {
        if let Ok(r) = numerics::bisect(g, a, b, 1e-13) {
            out.push(r);
        }
    }
    out.dedup_by(|x, y| (*x - *y).abs() < 1e-10);
    out
}

/// Sweeps lines through `(alpha, f(alpha))` over `n_samples` slopes in
/// `m_range`, intersecting each with the flux graph on both sides of
/// `alpha` by bracketing and bisection, and keeps the pairs that pass the
/// chord conditions. Members are ordered by `m`; the family may be empty.
pub fn end_states_general(
    f: &FluxModel,
    alpha: f64,
    m_range: (f64, f64),
    n_samples: usize,
    cfg: &ScanConfig,
) -> EndStateFamily {
    end_states_general_on(f, alpha, m_range, n_samples, (0.0, 1.0), cfg)
}

/// [`end_states_general`] over an explicit density interval, for laws that
/// are only admissible on a sub-interval.
pub fn end_states_general_on(
    f: &FluxModel,
    alpha: f64,
    m_range: (f64, f64),
    n_samples: usize,
    domain: (f64, f64),
    cfg: &ScanConfig,
) -> EndStateFamily {
    let slopes = numerics::linspace(m_range.0, m_range.1, n_samples.max(1));
    let members: Vec<EndStateMember> =
        slopes.par_iter().filter_map(|&m| member_for_slope(f, alpha, m, domain, cfg)).collect();
    EndStateFamily { alpha, members }
}

fn member_for_slope(
    f: &FluxModel,
    alpha: f64,
    m: f64,
    domain: (f64, f64),
    cfg: &ScanConfig,
) -> Option<EndStateMember> {
    let eps = 1e-9;
    let candidates_left = line_intersections(f, alpha, m, domain.0, alpha - eps, cfg.grid_n);
    let candidates_right = line_intersections(f, alpha, m, alpha + eps, domain.1, cfg.grid_n);
    // closest to alpha first
    let mut left = candidates_left.clone();
    left.sort_by(|a, b| (alpha - a).total_cmp(&(alpha - b)));
    let mut right = candidates_right.clone();
    right.sort_by(|a, b| (a - alpha).total_cmp(&(b - alpha)));
    for &lm in &left {
        for &lp in &right {
            if let Ok(margins) = check_chords(f, lm, &[alpha], lp, cfg) {
                return Some(EndStateMember {
                    m,
                    l_minus: lm,
                    l_plus: lp,
                    margin_left: margins[0],
                    margin_right: margins[1],
                    candidates_left,
                    candidates_right,
                });
            }
        }
    }
    None
}

/// Solves for the left end state paired with a given `l_plus` across a D1
/// sign change: the line through `(alpha, f(alpha))` and `(l_plus,
/// f(l_plus))` is intersected with the graph on `(0, alpha)` and the
/// admissible intersection closest to `alpha` is returned as an accepted
/// spec.
pub fn solve_pair_from_l_plus(
    f: &FluxModel,
    d: &DiffusivityModel,
    pattern: &SignPattern,
    l_plus: f64,
    cfg: &ScanConfig,
) -> Result<WaveSpec, ExistenceError> {
    let alpha = pattern
        .alpha()
        .ok_or(ExistenceError::WrongPattern { expected: "D1", found: pattern.classification })?;
    let m = secant(f, alpha, l_plus);
    let mut cands = line_intersections(f, alpha, m, 0.0, alpha - 1e-9, cfg.grid_n);
    cands.sort_by(|a, b| (alpha - a).total_cmp(&(alpha - b)));
    for lm in cands {
        if let Ok(spec) = check_existence_d1(f, d, pattern, lm, l_plus, cfg) {
            return Ok(spec);
        }
    }
    Err(ExistenceError::NoAdmissiblePartner { side: "left", alpha })
}

/// Mirror of [`solve_pair_from_l_plus`] for a given `l_minus`.
pub fn solve_pair_from_l_minus(
    f: &FluxModel,
    d: &DiffusivityModel,
    pattern: &SignPattern,
    l_minus: f64,
    cfg: &ScanConfig,
) -> Result<WaveSpec, ExistenceError> {
    let alpha = pattern
        .alpha()
        .ok_or(ExistenceError::WrongPattern { expected: "D1", found: pattern.classification })?;
    let m = secant(f, l_minus, alpha);
    let mut cands = line_intersections(f, alpha, m, alpha + 1e-9, 1.0, cfg.grid_n);
    cands.sort_by(|a, b| (a - alpha).total_cmp(&(b - alpha)));
    for lp in cands {
        if let Ok(spec) = check_existence_d1(f, d, pattern, l_minus, lp, cfg) {
            return Ok(spec);
        }
    }
    Err(ExistenceError::NoAdmissiblePartner { side: "right", alpha })
}

/// Partner solver for a reversed pattern: the line through `(beta, f(beta))`
/// and the given end state is intersected with the graph on the other side
/// of `beta`, and candidates are screened by [`check_existence_reversed`].
pub fn solve_pair_reversed(
    f: &FluxModel,
    d: &DiffusivityModel,
    pattern: &SignPattern,
    known: EndSelector,
    cfg: &ScanConfig,
) -> Result<WaveSpec, ExistenceError> {
    let beta = match pattern.classification {
        PatternClass::ReversedD1 { beta } => beta,
        found => return Err(ExistenceError::WrongPattern { expected: "ReversedD1", found }),
    };
    let (lo, hi) = pattern.domain;
    match known {
        EndSelector::LPlus(l_plus) => {
            let m = secant(f, beta, l_plus);
            let mut cands = line_intersections(f, beta, m, lo, beta - 1e-9, cfg.grid_n);
            cands.sort_by(|a, b| (beta - a).total_cmp(&(beta - b)));
            for lm in cands {
                if let Ok(spec) = check_existence_reversed(f, d, pattern, lm, l_plus, cfg) {
                    return Ok(spec);
                }
            }
            Err(ExistenceError::NoAdmissiblePartner { side: "left", alpha: beta })
        }
        EndSelector::LMinus(l_minus) => {
            let m = secant(f, l_minus, beta);
            let mut cands = line_intersections(f, beta, m, beta + 1e-9, hi, cfg.grid_n);
            cands.sort_by(|a, b| (a - beta).total_cmp(&(b - beta)));
            for lp in cands {
                if let Ok(spec) = check_existence_reversed(f, d, pattern, l_minus, lp, cfg) {
                    return Ok(spec);
                }
            }
            Err(ExistenceError::NoAdmissiblePartner { side: "right", alpha: beta })
        }
    }
}

/// Which end state a partner solver is given.
#[derive(Debug, Clone, Copy)]
pub enum EndSelector {
    LMinus(f64),
    LPlus(f64),
}

/// Solves the generically unique end-state pair for a D2 pattern: the line
/// through `(alpha, f(alpha))` and `(beta, f(beta))` is intersected with
/// the graph outside `[alpha, beta]`.
pub fn solve_pair_d2(
    f: &FluxModel,
    d: &DiffusivityModel,
    pattern: &SignPattern,
    cfg: &ScanConfig,
) -> Result<WaveSpec, ExistenceError> {
    let (alpha, beta) = match pattern.classification {
        PatternClass::D2 { alpha, beta } => (alpha, beta),
        found => return Err(ExistenceError::WrongPattern { expected: "D2", found }),
    };
    let m = secant(f, alpha, beta);
    let mut lefts = line_intersections(f, alpha, m, 0.0, alpha - 1e-9, cfg.grid_n);
    lefts.sort_by(|a, b| (alpha - a).total_cmp(&(alpha - b)));
    let mut rights = line_intersections(f, beta, m, beta + 1e-9, 1.0, cfg.grid_n);
    rights.sort_by(|a, b| (a - beta).total_cmp(&(b - beta)));
    for &lm in &lefts {
        for &lp in &rights {
            if let Ok(spec) = check_existence_d2(f, d, pattern, lm, lp, cfg) {
                return Ok(spec);
            }
        }
    }
    Err(ExistenceError::NoAdmissiblePartner { side: "either", alpha })
}

/// Admissible window for `mu = m / v_max` on the cubic flux
/// `f = v_max rho (1 - rho)^2` with sign change at `alpha`:
/// `(1 - alpha)(1 - 3 alpha) < mu < -alpha (1 - alpha)`, nonempty iff
/// `alpha > 1/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MuWindow {
    pub lo: f64,
    pub hi: f64,
}

impl MuWindow {
    pub fn is_empty(&self) -> bool {
        self.lo >= self.hi
    }

    pub fn contains(&self, mu: f64) -> bool {
        mu > self.lo && mu < self.hi
    }
}

pub fn mu_window(alpha: f64) -> MuWindow {
    MuWindow { lo: (1.0 - alpha) * (1.0 - 3.0 * alpha), hi: -alpha * (1.0 - alpha) }
}

/// Inverts the end-state relation: the `mu` whose line through
/// `(alpha, f(alpha))` meets the cubic flux graph at `rho_plus`.
pub fn mu_from_rho_plus(alpha: f64, rho_plus: f64) -> f64 {
    rho_plus * rho_plus - (2.0 - alpha) * rho_plus + (1.0 - alpha) * (1.0 - alpha)
}

/// Closed-form end states for the cubic flux: the roots of
/// `rho^2 - (2 - alpha) rho + (1 - alpha)^2 - mu = 0`, ordered
/// `0 < rho_minus < alpha < rho_plus < 1`.
///
/// Refuses outside the admissible window, reporting every violated
/// inequality of the window derivation.
pub fn cubic_end_states(alpha: f64, mu: f64) -> Result<(f64, f64), ExistenceError> {
    let mut failed = Vec::new();
    // discriminant of the quadratic
    if mu <= -alpha * (1.0 - 0.75 * alpha) {
        failed.push("discriminant: mu > -alpha (1 - 3 alpha / 4)");
    }
    // rho_minus > 0
    if mu >= (1.0 - alpha) * (1.0 - alpha) {
        failed.push("rho_minus > 0: mu < (1 - alpha)^2");
    }
    // rho_minus < alpha
    if alpha <= 2.0 / 3.0 && mu <= (1.0 - alpha) * (1.0 - 3.0 * alpha) {
        failed.push("rho_minus < alpha: mu > (1 - alpha)(1 - 3 alpha)");
    }
    // alpha < rho_plus
    if alpha >= 2.0 / 3.0 && mu <= (1.0 - alpha) * (1.0 - 3.0 * alpha) {
        failed.push("alpha < rho_plus: mu > (1 - alpha)(1 - 3 alpha)");
    }
    // rho_plus < 1
    if mu >= -alpha * (1.0 - alpha) {
        failed.push("rho_plus < 1: mu < -alpha (1 - alpha)");
    }
    if !failed.is_empty() {
        return Err(ExistenceError::OutsideWindow { alpha, mu, failed });
    }
    let disc = -3.0 * alpha * alpha + 4.0 * alpha + 4.0 * mu;
    let root = disc.sqrt();
    let rho_minus = 0.5 * ((2.0 - alpha) - root);
    let rho_plus = 0.5 * ((2.0 - alpha) + root);
    debug_assert!(0.0 < rho_minus && rho_minus < alpha && alpha < rho_plus && rho_plus < 1.0);
    Ok((rho_minus, rho_plus))
}

/// The unique root of `(1 - alpha)^3 = sigma alpha` in `(0, 1)`, by
/// bisection to `1e-12`; decreasing in `sigma` and covering all of `(0, 1)`.
pub fn alpha_from_sigma(sigma: f64) -> Result<f64, ExistenceError> {
    if sigma <= 0.0 {
        return Err(ExistenceError::NonPositiveSigma { sigma });
    }
    let g = |a: f64| (1.0 - a).powi(3) - sigma * a;
    Ok(numerics::bisect(g, 0.0, 1.0, 1e-12).expect("g(0) = 1 > 0 > g(1) = -sigma"))
}

/// Inverse of [`alpha_from_sigma`]: `sigma = (1 - alpha)^3 / alpha`.
pub fn sigma_from_alpha(alpha: f64) -> f64 {
    (1.0 - alpha).powi(3) / alpha
}

/// The cubic velocity whose derivative is `-(rho - alpha)(rho - beta)`,
/// pinned by `v(1) = 0`.
pub fn cubic_velocity_law(alpha: f64, beta: f64) -> VelocityLaw {
    let g0 = 1.0 / 3.0 - 0.5 * (alpha + beta) + alpha * beta;
    VelocityLaw::Custom(CustomVelocity::new(
        format!("cubic velocity (alpha={alpha}, beta={beta})"),
        g0.abs().max(1e-12),
        move |r| -r * r * r / 3.0 + 0.5 * (alpha + beta) * r * r - alpha * beta * r + g0,
        move |r| -(r - alpha) * (r - beta),
        move |r| -(2.0 * r - alpha - beta),
    ))
}

/// Admissibility of [`cubic_velocity_law`] as a collective-movement law.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CubicVelocityCheck {
    /// `3 beta - 2 < alpha`, equivalent to `v >= 0` on `[0, 1)`.
    pub admissible: bool,
    /// Interior minimum `v(alpha) = (alpha - 1)^2 (alpha - 3 beta + 2) / 6`.
    pub v_at_alpha: f64,
}

/// Checks whether the cubic velocity with stationary points `alpha < beta`
/// stays non-negative: true exactly when `3 beta - 2 < alpha`.
pub fn cubic_velocity_check(alpha: f64, beta: f64) -> Result<CubicVelocityCheck, ExistenceError> {
    if !(0.0 < alpha && alpha < beta && beta < 1.0) {
        return Err(ExistenceError::BadOrdering { alpha, beta });
    }
    let v_at_alpha = (alpha - 1.0) * (alpha - 1.0) * (alpha - 3.0 * beta + 2.0) / 6.0;
    Ok(CubicVelocityCheck { admissible: 3.0 * beta - 2.0 < alpha, v_at_alpha })
}

/// Location of the reversed sign change for the exponential law with
/// critical density `a`, exponent `gamma` and speed ratio
/// `w = v_max / (delta / tau)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ReversedBeta {
    pub beta: f64,
    pub h_at_beta: f64,
    /// Positive, which makes `beta` unique.
    pub h_prime_at_beta: f64,
}

/// Solves `h(beta) = 0` for
/// `h(rho) = (1 - rho)^2 / (gamma w (1 - a) rho) - exp(gamma (a - rho)/(1 - rho))`
/// on `(a, 1)`, which locates where the constant-anticipation diffusivity
/// over the exponential law turns from negative to positive.
///
/// Requires `gamma > (1 - a)/(a w)` (so `h(a) < 0`) and
/// `gamma >= (1 + a)/a` (so `h' > 0` at every root, making it unique).
pub fn exponential_reversed_beta(
    a: f64,
    gamma: f64,
    w: f64,
) -> Result<ReversedBeta, ExistenceError> {
    let mut failed = Vec::new();
    if !(0.0 < a && a < 1.0) {
        failed.push("0 < a < 1");
    }
    if !(w > 0.0 && w <= 1.0) {
        failed.push("0 < w <= 1");
    }
    if !failed.is_empty() {
        return Err(ExistenceError::ConditionsNotMet { failed });
    }
    if gamma.is_nan() || gamma <= (1.0 - a) / (a * w) {
        failed.push("gamma > (1 - a) / (a w)");
    }
    if gamma.is_nan() || gamma < (1.0 + a) / a {
        failed.push("gamma >= (1 + a) / a");
    }
    if !failed.is_empty() {
        return Err(ExistenceError::ConditionsNotMet { failed });
    }

    let h = move |rho: f64| {
        (1.0 - rho) * (1.0 - rho) / (gamma * w * (1.0 - a) * rho)
            - (gamma * (a - rho) / (1.0 - rho)).exp()
    };
    // h(a) < 0 by the first condition, h > 0 in a left neighborhood of 1
    let mut hi = 1.0 - 1e-6;
    while h(hi) <= 0.0 && 1.0 - hi > 1e-14 {
        hi = 0.5 * (hi + 1.0);
    }
    let beta = numerics::bisect(h, a + 1e-12, hi, 1e-13)
        .expect("sign change guaranteed by the admissibility conditions");
    let psi = beta * beta + gamma * (1.0 - a) * beta - 1.0;
    let h_prime = psi / (gamma * w * (1.0 - a) * beta * beta);
    Ok(ReversedBeta { beta, h_at_beta: h(beta), h_prime_at_beta: h_prime })
}

/// One of the two explicit velocity/diffusivity constructions showing that
/// the constant-anticipation model can satisfy the D1 pattern only at the
/// price of losing both the chord conditions and the safety predicate.
pub struct NegativeConstruction {
    pub velocity: VelocityLaw,
    pub diffusivity: DiffusivityModel,
    pub pattern: PatternClass,
    pub fcm_holds: bool,
    pub family_empty: bool,
    pub safety: SafetyCheck,
}

impl std::fmt::Debug for NegativeConstruction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NegativeConstruction")
            .field("pattern", &self.pattern)
            .field("fcm_holds", &self.fcm_holds)
            .field("family_empty", &self.family_empty)
            .field("safety", &self.safety)
            .finish()
    }
}

fn velocity_admissible(v: &VelocityLaw) -> bool {
    if v.eval(1.0).abs() > 1e-12 * v.scale().max(1.0) {
        return false;
    }
    numerics::linspace(0.0, 1.0 - 1e-9, 4096)
        .into_iter()
        .all(|x| v.eval(x) >= -1e-12 * v.scale().max(1.0))
}

/// Builds the two velocity laws
///
/// ```text
/// v1 = (delta / (alpha tau)) (1 - rho)
/// v2 = (delta / (2 alpha tau)) (1 - rho)(1 + 2 alpha - rho)
/// ```
///
/// whose constant-anticipation diffusivities
///
/// ```text
/// D1 = (delta^2 / (alpha^2 tau)) rho (alpha - rho)
/// D2 = (delta^2 / (alpha^2 tau)) rho (alpha - rho)(1 - rho)(1 + alpha - rho)
/// ```
///
/// do satisfy the D1 pattern, and verifies that for both the end-state
/// family is empty (the flux admits no chord pair) and the safety predicate
/// fails.
pub fn nelson_negative_constructions(
    alpha: f64,
    delta: f64,
    tau: f64,
    cfg: &ScanConfig,
) -> [NegativeConstruction; 2] {
    let k1 = delta / (alpha * tau);
    let v1 = VelocityLaw::Linear { v_max: k1 };

    let k2 = delta / (2.0 * alpha * tau);
    let v2 = VelocityLaw::Custom(CustomVelocity::new(
        "linear-anticipation second construction",
        k2 * (1.0 + 2.0 * alpha),
        move |r| k2 * (1.0 - r) * (1.0 + 2.0 * alpha - r),
        move |r| 2.0 * k2 * (r - 1.0 - alpha),
        move |_| 2.0 * k2,
    ));

    [v1, v2].map(|v| {
        let d = DiffusivityModel::nelson_delta_tau(v.clone(), delta, tau)
            .expect("delta, tau > 0 by construction");
        let pattern = fluxgeom::sign_pattern(&d, cfg.tol_root)
            .map(|p| p.classification)
            .unwrap_or(PatternClass::Other);
        let f = FluxModel::from_velocity(v.clone());
        // slopes of lines through (alpha, f(alpha)) wide enough to cover
        // every secant of the graph
        let c_left = secant(&f, 1e-9, alpha);
        let c_right = secant(&f, alpha, 1.0);
        let spread = (c_left - c_right).abs() + f.sup_abs(0.0, 1.0);
        let m_range = (c_right - spread, c_left + spread);
        let family = end_states_general(&f, alpha, m_range, 41, cfg);
        let safety = d.safety_check().expect("constant-anticipation model");
        NegativeConstruction {
            fcm_holds: velocity_admissible(&v),
            velocity: v,
            diffusivity: d,
            pattern,
            family_empty: family.is_empty(),
            safety,
        }
    })
}

/// Why the joint requirement fails for a `D = -a(rho) v'(rho)` diffusivity.
#[derive(Debug, Clone, Serialize)]
pub enum GainFormViolation {
    /// The sign pattern is not D1.
    PatternNotD1 { found: PatternClass },
    /// The velocity fails the collective-movement assumptions.
    VelocityInadmissible { at: f64, value: f64 },
}

/// Verdict for diffusivities of the pure-gain form `D = -a(rho) v'(rho)`,
/// `a > 0` away from the sign change: the D1 pattern and the
/// collective-movement velocity assumptions can never hold together.
///
/// The check is a searched assertion: it evaluates both hypotheses on the
/// supplied law and reports the one that fails (at least one must).
#[derive(Debug, Clone, Serialize)]
pub struct GainFormVerdict {
    pub d1_holds: bool,
    pub fcm_holds: bool,
    pub violations: Vec<GainFormViolation>,
    /// True exactly when the two hypotheses do not both hold.
    pub jointly_impossible_confirmed: bool,
}

pub fn gain_form_check<A>(v: &VelocityLaw, gain: A, cfg: &ScanConfig) -> GainFormVerdict
where
    A: Fn(f64) -> f64 + Send + Sync + 'static,
{
    let vd = v.clone();
    let vd2 = v.clone();
    let d = DiffusivityModel::direct(
        "gain form -a(rho) v'(rho)",
        move |r| -gain(r) * vd.deriv(r),
        // derivative unused by the sign scan; finite difference of v' keeps
        // it well-defined for callers that probe it
        move |r| numerics::centered_diff(|x| vd2.deriv(x), r, 1e-6),
    );
    let pattern = fluxgeom::sign_pattern(&d, cfg.tol_root)
        .map(|p| p.classification)
        .unwrap_or(PatternClass::Other);
    let d1_holds = matches!(pattern, PatternClass::D1 { .. });

    let scale = v.scale().max(1.0);
    let mut violation_at = None;
    if v.eval(1.0).abs() > 1e-12 * scale {
        violation_at = Some((1.0, v.eval(1.0)));
    } else {
        for x in numerics::linspace(0.0, 1.0 - 1e-9, 4096) {
            if v.eval(x) < -1e-12 * scale {
                violation_at = Some((x, v.eval(x)));
                break;
            }
        }
    }
    let fcm = violation_at.is_none();

    let mut violations = Vec::new();
    if !d1_holds {
        violations.push(GainFormViolation::PatternNotD1 { found: pattern });
    }
    if let Some((at, value)) = violation_at {
        violations.push(GainFormViolation::VelocityInadmissible { at, value });
    }
    GainFormVerdict {
        d1_holds,
        fcm_holds: fcm,
        violations,
        jointly_impossible_confirmed: !(d1_holds && fcm),
    }
}
