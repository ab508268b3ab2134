//! Wavefront profile computation.
//!
//! The primary method integrates in the value variable: along an accepted
//! front the profile satisfies `phi'(xi) = F(phi) / D(phi)` with
//! `F(rho) = f(rho) - f(l_minus) - c (rho - l_minus)`, so
//!
//! ```text
//! xi(phi) = integral of D(s) / F(s) ds,   anchored at the crossing
//! ```
//!
//! where the integrand `D/F` stays bounded across the interior zeros of `D`
//! (`D` and `F` vanish together there) and its behavior at the end states
//! encodes the profile anatomy:
//!
//! * `D(end) = 0`: the integral converges, the profile reaches the end state
//!   at a finite abscissa and is sharp (not differentiable) there;
//! * `D(end) != 0`: the integral diverges logarithmically, the profile
//!   approaches the end state only asymptotically; the tail is sampled until
//!   `phi` is within `tail_tol` of the end state and the cut is recorded.
//!
//! Near removable 0/0 points the integrand is evaluated as the ratio of
//! first-order expansions `D'/F'` whenever `|F|` falls below a guard
//! threshold, which controls cancellation.
//!
//! An independent ODE shooting method ([`ode_oracle`]) integrates
//! `phi' = F/D` in `xi` with an adaptive embedded Runge-Kutta pair, seeded
//! by the crossing-slope expansion; it exists to cross-check the quadrature
//! path and shares none of its machinery.

use serde::Serialize;

use crate::existence::{Regime, WaveSpec};
use crate::numerics;

/// Tunables for profile computation.
#[derive(Debug, Clone, Copy)]
pub struct ProfileOpts {
    /// Uniform samples per branch between the graded end zones.
    pub n_core: usize,
    /// Asymptotic tails are sampled until `|phi - end| < tail_tol`.
    pub tail_tol: f64,
    /// Absolute quadrature tolerance per panel (scaled by panel width).
    pub tol_quad: f64,
    /// Hard cut on `|xi|` while following an asymptotic tail.
    pub xi_horizon: f64,
}

impl Default for ProfileOpts {
    fn default() -> Self {
        Self { n_core: 240, tail_tol: 1e-8, tol_quad: 1e-12, xi_horizon: 1e6 }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ProfileError {
    #[error("quadrature failed: {0}")]
    Quadrature(#[from] numerics::NumericsError),
    #[error("tail integral exceeded the xi horizon {horizon:e} without converging (asymptotic end at phi = {end})")]
    QuadratureDivergence { horizon: f64, end: f64 },
    #[error("flux is sonic at the crossing rho = {at} (f'({at}) = c): the profile does not cross at finite xi")]
    SonicAtCrossing { at: f64 },
    #[error("crossing slope is not finite (D'({at}) = {d_prime:e}); shooting through the crossing is ill-posed")]
    NonFiniteCrossingSlope { at: f64, d_prime: f64 },
    #[error("step size underflowed at xi = {xi} (phi = {phi})")]
    StiffnessFailure { xi: f64, phi: f64 },
    #[error("plateau length must be non-negative, got {xi1}")]
    NegativeXi1 { xi1: f64 },
    #[error("profile already has a plateau at the crossing")]
    PlateauExists,
    #[error("operation not available for the {regime} regime")]
    UnsupportedRegime { regime: &'static str },
}

/// One profile sample. `dphi` is `phi'(xi)`; absent on plateau nodes and at
/// sharp contact points, where the profile is not differentiable.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Sample {
    pub xi: f64,
    pub phi: f64,
    pub dphi: Option<f64>,
}

/// Profile slope at an interior zero of `D`, from the limit formula
/// `(f'(z) - c) / D'(z)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub enum CrossingSlope {
    /// `D'(z) != 0` at the crossing: finite limit.
    Finite(f64),
    /// `D'(z) = 0` and `f'(z) != c`: vertical crossing.
    Infinite,
    /// `D'(z) = 0` and `f'(z) = c`: the limit depends on higher-order
    /// behavior; `estimate` is a numerically extrapolated value and must
    /// not be read as asserted.
    Indeterminate { estimate: f64 },
}

/// How a branch meets its end state.
#[derive(Debug, Clone, Copy, Serialize)]
pub enum TailContact {
    /// Finite contact abscissa (sharp end, `D(end) = 0`).
    Sharp { xi: f64 },
    /// Asymptotic approach, sampled down to `phi_gap` from the end state.
    Asymptotic { xi_cutoff: f64, phi_gap: f64 },
}

impl TailContact {
    pub fn is_sharp(&self) -> bool {
        matches!(self, Self::Sharp { .. })
    }
}

/// Distinguished abscissas: `xi0` is the anchor (0 by convention), `xi1` the
/// end of the plateau at the first crossing, and `xi2 <= xi3` bracket the
/// plateau at the second crossing when there is one.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Anchors {
    pub xi0: f64,
    pub xi1: f64,
    pub xi2: Option<f64>,
    pub xi3: Option<f64>,
}

/// A sampled wavefront profile, ascending in `xi`.
#[derive(Debug, Clone, Serialize)]
pub struct Profile {
    pub samples: Vec<Sample>,
    pub l_minus: f64,
    pub l_plus: f64,
    pub speed: f64,
    pub increasing: bool,
    pub anchors: Anchors,
    /// Contact behavior of the `xi -> -inf` side.
    pub left_tail: TailContact,
    /// Contact behavior of the `xi -> +inf` side.
    pub right_tail: TailContact,
    /// Slope at the first interior crossing, when the profile has one.
    pub crossing_slope: Option<CrossingSlope>,
    /// With a plateau at the crossing, whether the junctions are C1
    /// (exactly when the crossing slope vanishes, i.e. `f'(z) = c`).
    pub c1_at_plateau: Option<bool>,
}

impl Profile {
    pub fn sharp_left(&self) -> bool {
        self.left_tail.is_sharp()
    }

    pub fn sharp_right(&self) -> bool {
        self.right_tail.is_sharp()
    }

    /// Piecewise-linear evaluation; beyond the sampled range the profile is
    /// clamped to the end values, which is exact for sharp contacts and
    /// within `tail_tol` otherwise.
    pub fn phi_at(&self, xi: f64) -> f64 {
        let xs: Vec<f64> = self.samples.iter().map(|s| s.xi).collect();
        let ys: Vec<f64> = self.samples.iter().map(|s| s.phi).collect();
        numerics::interp_clamped(&xs, &ys, xi)
    }

    /// Cubic Hermite evaluation of `xi` as a function of `phi`, using
    /// `d xi / d phi = 1 / phi'` at the samples. Requires a strictly
    /// monotone profile (no plateau); `None` outside the sampled range.
    pub fn xi_at_phi(&self, phi: f64) -> Option<f64> {
        let s = &self.samples;
        if s.len() < 2 {
            return None;
        }
        let ascending = self.increasing;
        let (lo, hi) = if ascending {
            (s.first().unwrap().phi, s.last().unwrap().phi)
        } else {
            (s.last().unwrap().phi, s.first().unwrap().phi)
        };
        if phi < lo || phi > hi {
            return None;
        }
        let idx = if ascending {
            s.partition_point(|smp| smp.phi <= phi)
        } else {
            s.partition_point(|smp| smp.phi >= phi)
        };
        if idx == 0 {
            return Some(s[0].xi);
        }
        if idx >= s.len() {
            return Some(s[s.len() - 1].xi);
        }
        let (a, b) = (&s[idx - 1], &s[idx]);
        let h = b.phi - a.phi;
        if h == 0.0 {
            return Some(a.xi);
        }
        let t = (phi - a.phi) / h;
        let inv =
            |d: Option<f64>| d.and_then(|v| if v.abs() > 1e-300 { Some(1.0 / v) } else { None });
        match (inv(a.dphi), inv(b.dphi)) {
            (Some(ma), Some(mb)) => {
                let h00 = (1.0 + 2.0 * t) * (1.0 - t) * (1.0 - t);
                let h10 = t * (1.0 - t) * (1.0 - t);
                let h01 = t * t * (3.0 - 2.0 * t);
                let h11 = t * t * (t - 1.0);
                Some(h00 * a.xi + h10 * h * ma + h01 * b.xi + h11 * h * mb)
            }
            _ => Some(a.xi + t * (b.xi - a.xi)),
        }
    }

    /// Translate: shifting every abscissa by a constant yields another valid
    /// profile (the anchor convention is the only thing pinning `xi0 = 0`).
    pub fn shifted(&self, dx: f64) -> Profile {
        let mut out = self.clone();
        for s in &mut out.samples {
            s.xi += dx;
        }
        out.anchors.xi0 += dx;
        out.anchors.xi1 += dx;
        out.anchors.xi2 = out.anchors.xi2.map(|x| x + dx);
        out.anchors.xi3 = out.anchors.xi3.map(|x| x + dx);
        out.left_tail = shift_tail(out.left_tail, dx);
        out.right_tail = shift_tail(out.right_tail, dx);
        out
    }
}

fn shift_tail(t: TailContact, dx: f64) -> TailContact {
    match t {
        TailContact::Sharp { xi } => TailContact::Sharp { xi: xi + dx },
        TailContact::Asymptotic { xi_cutoff, phi_gap } => {
            TailContact::Asymptotic { xi_cutoff: xi_cutoff + dx, phi_gap }
        }
    }
}

// Guarded pointwise kernels for an accepted spec.
struct Kernel<'a> {
    spec: &'a WaveSpec,
    f_guard: f64,
    d_guard: f64,
}

impl<'a> Kernel<'a> {
    fn new(spec: &'a WaveSpec) -> Self {
        let f_sup = spec.flux.sup_abs(spec.l_minus, spec.l_plus);
        let d_sup = spec.diffusivity.sup_abs(spec.l_minus, spec.l_plus);
        Self { spec, f_guard: 1e-12 * f_sup.max(1.0), d_guard: 1e-12 * d_sup.max(1.0) }
    }

    /// `d xi / d phi = D / F`, with the removable 0/0 evaluated as `D'/F'`.
    ///
    /// When the first derivatives vanish too (doubly degenerate crossing)
    /// the ratio is taken at a small offset instead, which keeps the
    /// quadrature defined whenever the limit exists.
    fn dxi_dphi(&self, phi: f64) -> f64 {
        let fv = self.spec.chord_residual(phi);
        if fv.abs() < self.f_guard {
            let fp = self.spec.chord_residual_deriv(phi);
            if fp.abs() > 1e-9 * self.spec.speed.abs().max(1.0) {
                self.spec.diffusivity.deriv(phi) / fp
            } else {
                // doubly degenerate: probe far enough out that F rises above
                // its cancellation noise, and average the two sides
                let h = 1e-3 * (self.spec.l_plus - self.spec.l_minus);
                let ratio = |s: f64| {
                    self.spec.diffusivity.eval(s) / self.spec.chord_residual(s)
                };
                0.5 * (ratio(phi - h) + ratio(phi + h))
            }
        } else {
            self.spec.diffusivity.eval(phi) / fv
        }
    }

    /// `phi' = F / D`, with the removable 0/0 evaluated as `F'/D'`.
    fn dphi_dxi(&self, phi: f64) -> f64 {
        let dv = self.spec.diffusivity.eval(phi);
        if dv.abs() < self.d_guard {
            self.spec.chord_residual_deriv(phi) / self.spec.diffusivity.deriv(phi)
        } else {
            self.spec.chord_residual(phi) / dv
        }
    }

    /// An end state is a sharp contact when `D` vanishes there while `F`
    /// keeps a simple zero.
    fn end_is_sharp(&self, end: f64) -> bool {
        self.spec.diffusivity.eval(end).abs() <= self.d_guard
            && self.spec.chord_residual_deriv(end).abs() > 1e-9 * self.spec.speed.abs().max(1.0)
    }
}

/// Slope of the profile at an interior zero `z` of `D`, by the limit
/// formula.
fn crossing_slope(spec: &WaveSpec, z: f64) -> CrossingSlope {
    let d_prime = spec.diffusivity.deriv(z);
    let f_gap = spec.chord_residual_deriv(z);
    let d_tol = 1e-9 * spec.diffusivity.sup_abs(spec.l_minus, spec.l_plus).max(1.0);
    let f_tol = 1e-9 * spec.speed.abs().max(1.0);
    if d_prime.abs() > d_tol {
        CrossingSlope::Finite(f_gap / d_prime)
    } else if f_gap.abs() > f_tol {
        CrossingSlope::Infinite
    } else {
        // both first-order expansions vanish: extrapolate
        // lim (f(s) - f(z) - f'(z)(s - z)) / D(s) by shrinking offsets,
        // stopping before the numerator falls into cancellation noise
        let noise = 1e-12 * spec.flux.sup_abs(spec.l_minus, spec.l_plus).max(1.0);
        let mut estimate = 0.0;
        for k in [1e-2, 1e-3, 1e-4, 1e-5, 1e-6] {
            let s = z - k;
            let num = spec.flux.eval(s) - spec.flux.eval(z) - spec.flux.deriv(z) * (s - z);
            let den = spec.diffusivity.eval(s);
            if num.abs() > noise && den.abs() > 0.0 {
                estimate = num / den;
            }
        }
        CrossingSlope::Indeterminate { estimate }
    }
}

// log-spaced relative offsets from 1e-7 to 1e-2
fn graded_offsets(count: usize) -> Vec<f64> {
    let (lo, hi) = (-7.0f64, -2.0f64);
    (0..count).map(|k| 10f64.powf(lo + (hi - lo) * k as f64 / (count - 1) as f64)).collect()
}

struct BranchOutcome {
    /// Samples excluding the anchor node, ordered outward from the anchor.
    samples: Vec<Sample>,
    tail: TailContact,
}

/// Integrates one branch of `xi(phi)` from the anchor `(from, xi_from)`
/// toward the end state `to`.
fn integrate_branch(
    kernel: &Kernel<'_>,
    from: f64,
    to: f64,
    xi_from: f64,
    opts: &ProfileOpts,
) -> Result<BranchOutcome, ProfileError> {
    let span = (to - from).abs();
    let dir = if to > from { 1.0 } else { -1.0 };
    let sharp = kernel.end_is_sharp(to);

    // node ladder in phi, outward from the anchor: graded near the anchor
    // (slope estimation), uniform core, then either graded into a sharp
    // contact or geometrically halving toward an asymptotic end
    let mut nodes: Vec<f64> = Vec::new();
    for r in graded_offsets(21) {
        nodes.push(from + dir * span * r);
    }
    let core_lo = from + dir * span * 1e-2;
    let core_hi = to - dir * span * 1e-2;
    for x in numerics::linspace(0.0, 1.0, opts.n_core) {
        nodes.push(core_lo + (core_hi - core_lo) * x);
    }
    if sharp {
        let mut offs = graded_offsets(21);
        offs.reverse();
        for r in offs {
            nodes.push(to - dir * span * r);
        }
        nodes.push(to);
    } else {
        let mut gap = span * 1e-2 * 0.5;
        while gap > opts.tail_tol {
            nodes.push(to - dir * gap);
            gap *= 0.5;
        }
        nodes.push(to - dir * gap.max(0.5 * opts.tail_tol));
    }

    // ordered outward, strictly monotone, and clear of the anchor
    nodes.retain(|&x| (x - from).abs() > 0.0 && (dir > 0.0) == (x > from));
    nodes.sort_by(|a, b| if dir > 0.0 { a.total_cmp(b) } else { b.total_cmp(a) });
    nodes.dedup();

    let mut samples = Vec::with_capacity(nodes.len());
    let mut xi = xi_from;
    let mut prev = from;
    let g = |phi: f64| kernel.dxi_dphi(phi);
    for &node in &nodes {
        let width = (node - prev).abs();
        // the 5e-15 floor absorbs the cancellation noise of D/F close to
        // the crossing, where tighter tolerances are unreachable
        let tol = (opts.tol_quad * (width / span).max(1e-9)).max(5e-15);
        xi += numerics::adaptive_simpson(&g, prev, node, tol, 48)?;
        if !xi.is_finite() {
            return Err(ProfileError::QuadratureDivergence { horizon: opts.xi_horizon, end: to });
        }
        let at_contact = sharp && node == to;
        let dphi = if at_contact { None } else { Some(kernel.dphi_dxi(node)) };
        samples.push(Sample { xi, phi: node, dphi });
        prev = node;
        if !sharp && xi.abs() > opts.xi_horizon {
            break;
        }
    }

    let tail = if sharp {
        TailContact::Sharp { xi }
    } else {
        let last = samples.last().expect("branch has nodes");
        TailContact::Asymptotic { xi_cutoff: last.xi, phi_gap: (to - last.phi).abs() }
    };
    Ok(BranchOutcome { samples, tail })
}

fn assemble(
    spec: &WaveSpec,
    anchor_phi: f64,
    anchor_dphi: Option<f64>,
    leftward: BranchOutcome,
    rightward: BranchOutcome,
    increasing: bool,
    slope: Option<CrossingSlope>,
) -> Profile {
    let mut samples = Vec::with_capacity(leftward.samples.len() + rightward.samples.len() + 1);
    let mut rev = leftward.samples;
    rev.reverse();
    samples.extend(rev);
    samples.push(Sample { xi: 0.0, phi: anchor_phi, dphi: anchor_dphi });
    samples.extend(rightward.samples);
    debug_assert!(samples.windows(2).all(|w| w[0].xi <= w[1].xi));
    Profile {
        samples,
        l_minus: spec.l_minus,
        l_plus: spec.l_plus,
        speed: spec.speed,
        increasing,
        anchors: Anchors { xi0: 0.0, xi1: 0.0, xi2: None, xi3: None },
        left_tail: leftward.tail,
        right_tail: rightward.tail,
        crossing_slope: slope,
        c1_at_plateau: None,
    }
}

fn slope_as_dphi(slope: &CrossingSlope) -> Option<f64> {
    match slope {
        CrossingSlope::Finite(v) => Some(*v),
        _ => None,
    }
}

fn require_noncritical_crossing(spec: &WaveSpec, z: f64) -> Result<(), ProfileError> {
    // when F has a higher-order zero at the crossing than D, xi(z) diverges
    // and the profile never crosses at finite xi; with both first
    // derivatives vanishing the limit depends on higher-order behavior and
    // the computation proceeds with an indeterminate slope report
    let f_degenerate = spec.chord_residual_deriv(z).abs() <= 1e-9 * spec.speed.abs().max(1.0);
    let d_simple = spec.diffusivity.deriv(z).abs()
        > 1e-9 * spec.diffusivity.sup_abs(spec.l_minus, spec.l_plus).max(1.0);
    if f_degenerate && d_simple {
        return Err(ProfileError::SonicAtCrossing { at: z });
    }
    Ok(())
}

/// Computes the profile of an accepted spec by quadrature in the value
/// variable, anchored at `xi = 0` on the first interior crossing of `D`
/// (for constant-sign regimes, at the midpoint value).
///
/// D2 fronts get the default plateau-free stitch (`xi1 = 0`, `xi2 = xi3`);
/// reversed fronts come out decreasing. Asymptotic ends are not errors:
/// they are truncated at `tail_tol` and recorded in the tail metadata.
pub fn xi_of_phi(spec: &WaveSpec, opts: &ProfileOpts) -> Result<Profile, ProfileError> {
    match spec.regime {
        Regime::D1Front { alpha } => {
            require_noncritical_crossing(spec, alpha)?;
            let kernel = Kernel::new(spec);
            let slope = crossing_slope(spec, alpha);
            let left = integrate_branch(&kernel, alpha, spec.l_minus, 0.0, opts)?;
            let right = integrate_branch(&kernel, alpha, spec.l_plus, 0.0, opts)?;
            Ok(assemble(spec, alpha, slope_as_dphi(&slope), left, right, true, Some(slope)))
        }
        Regime::D2Front { .. } => profile_d2(spec, 0.0, 0.0, opts),
        Regime::ReversedFront { .. } => decreasing_front(spec, opts),
        Regime::ConstSign { case, a, b } => {
            let kernel = Kernel::new(spec);
            let mid = 0.5 * (a + b);
            let increasing = case.increasing();
            // for increasing fronts xi grows with phi; decreasing fronts
            // reverse the roles of the two ends
            let (left_end, right_end) = if increasing { (a, b) } else { (b, a) };
            let left = integrate_branch(&kernel, mid, left_end, 0.0, opts)?;
            let right = integrate_branch(&kernel, mid, right_end, 0.0, opts)?;
            let dphi = Some(kernel.dphi_dxi(mid));
            Ok(assemble(spec, mid, dphi, left, right, increasing, None))
        }
    }
}

/// Three-piece profile for a D2 front: `l_minus -> alpha` (D > 0),
/// `alpha -> beta` (D < 0) and `beta -> l_plus` (D > 0), with a plateau of
/// length `xi1` at `alpha` and `beta_plateau` at `beta`. The middle piece
/// has a fixed finite length (both of its ends are zeros of `D`), so the
/// second plateau starts at `xi2 = xi1 + (length of the middle piece)`.
pub fn profile_d2(
    spec: &WaveSpec,
    xi1: f64,
    beta_plateau: f64,
    opts: &ProfileOpts,
) -> Result<Profile, ProfileError> {
    let (alpha, beta) = match spec.regime {
        Regime::D2Front { alpha, beta } => (alpha, beta),
        _ => return Err(ProfileError::UnsupportedRegime { regime: "non-D2" }),
    };
    if xi1 < 0.0 {
        return Err(ProfileError::NegativeXi1 { xi1 });
    }
    if beta_plateau < 0.0 {
        return Err(ProfileError::NegativeXi1 { xi1: beta_plateau });
    }
    require_noncritical_crossing(spec, alpha)?;
    require_noncritical_crossing(spec, beta)?;
    let kernel = Kernel::new(spec);
    let slope_alpha = crossing_slope(spec, alpha);

    let left = integrate_branch(&kernel, alpha, spec.l_minus, 0.0, opts)?;
    // middle piece: both endpoints removable, fixed finite length
    let middle = integrate_branch(&kernel, alpha, beta, xi1, opts)?;
    let xi2 = match middle.tail {
        TailContact::Sharp { xi } => xi,
        TailContact::Asymptotic { xi_cutoff, .. } => xi_cutoff,
    };
    let xi3 = xi2 + beta_plateau;
    let right = integrate_branch(&kernel, beta, spec.l_plus, xi3, opts)?;

    let mut samples = Vec::new();
    let mut rev = left.samples;
    rev.reverse();
    samples.extend(rev);
    samples.push(Sample { xi: 0.0, phi: alpha, dphi: slope_as_dphi(&slope_alpha) });
    if xi1 > 0.0 {
        samples.push(Sample { xi: xi1, phi: alpha, dphi: None });
    }
    let mut middle_samples = middle.samples;
    if let Some(last) = middle_samples.last_mut() {
        // the beta contact is a junction: no derivative there
        last.dphi = None;
    }
    samples.extend(middle_samples);
    if beta_plateau > 0.0 {
        samples.push(Sample { xi: xi3, phi: beta, dphi: None });
    }
    samples.extend(right.samples);
    samples.dedup_by(|a, b| a.xi == b.xi && a.phi == b.phi);

    let c = spec.speed;
    let c1 = (spec.flux.deriv(alpha) - c).abs() <= 1e-9 * c.abs().max(1.0);
    Ok(Profile {
        samples,
        l_minus: spec.l_minus,
        l_plus: spec.l_plus,
        speed: c,
        increasing: true,
        anchors: Anchors { xi0: 0.0, xi1, xi2: Some(xi2), xi3: Some(xi3) },
        left_tail: left.tail,
        right_tail: right.tail,
        crossing_slope: Some(slope_alpha),
        c1_at_plateau: if xi1 > 0.0 || beta_plateau > 0.0 { Some(c1) } else { None },
    })
}

/// Decreasing profile for a reversed front: `phi(-inf) = l_plus`,
/// `phi(+inf) = l_minus`, crossing `beta` at `xi = 0` (the constant-sign
/// cases B1 and A2 pasted at the crossing).
pub fn decreasing_front(spec: &WaveSpec, opts: &ProfileOpts) -> Result<Profile, ProfileError> {
    let beta = match spec.regime {
        Regime::ReversedFront { beta } => beta,
        _ => return Err(ProfileError::UnsupportedRegime { regime: "non-reversed" }),
    };
    require_noncritical_crossing(spec, beta)?;
    let kernel = Kernel::new(spec);
    let slope = crossing_slope(spec, beta);
    // dxi/dphi < 0 on both sides: integrating toward l_plus moves xi to
    // -inf, toward l_minus to +inf
    let toward_upper = integrate_branch(&kernel, beta, spec.l_plus, 0.0, opts)?;
    let toward_lower = integrate_branch(&kernel, beta, spec.l_minus, 0.0, opts)?;
    let profile =
        assemble(spec, beta, slope_as_dphi(&slope), toward_upper, toward_lower, false, Some(slope));
    debug_assert!(profile.samples.windows(2).all(|w| w[0].phi >= w[1].phi));
    Ok(profile)
}

/// Stretches the profile at its first crossing: the right branch shifts by
/// `xi1` and the profile holds the crossing value on `[0, xi1]`. The result
/// is still a valid weak profile because `D(phi) phi'` vanishes from both
/// sides at the junctions (zero-flux matching); it is C1 there only when
/// the crossing slope is zero.
pub fn insert_plateau(p: &Profile, xi1: f64) -> Result<Profile, ProfileError> {
    if xi1 < 0.0 {
        return Err(ProfileError::NegativeXi1 { xi1 });
    }
    if p.anchors.xi1 != 0.0 {
        return Err(ProfileError::PlateauExists);
    }
    if xi1 == 0.0 {
        return Ok(p.clone());
    }
    let crossing_phi = p.phi_at(0.0);
    let mut samples = Vec::with_capacity(p.samples.len() + 1);
    for s in &p.samples {
        if s.xi < 0.0 {
            samples.push(*s);
        }
    }
    samples.push(Sample { xi: 0.0, phi: crossing_phi, dphi: None });
    samples.push(Sample { xi: xi1, phi: crossing_phi, dphi: None });
    for s in &p.samples {
        if s.xi > 0.0 {
            samples.push(Sample { xi: s.xi + xi1, phi: s.phi, dphi: s.dphi });
        }
    }
    let c1 = match p.crossing_slope {
        Some(CrossingSlope::Finite(v)) => Some(v.abs() <= 1e-9),
        Some(_) => Some(false),
        None => None,
    };
    Ok(Profile {
        samples,
        anchors: Anchors {
            xi0: 0.0,
            xi1,
            xi2: p.anchors.xi2.map(|x| x + xi1),
            xi3: p.anchors.xi3.map(|x| x + xi1),
        },
        right_tail: shift_tail(p.right_tail, xi1),
        c1_at_plateau: c1,
        ..p.clone()
    })
}

// Cash-Karp embedded Runge-Kutta 4(5) step for a scalar autonomous field.
fn rk45_step<F: Fn(f64) -> f64>(f: &F, y: f64, h: f64) -> (f64, f64) {
    const B: [[f64; 5]; 5] = [
        [0.2, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0],
        [0.3, -0.9, 1.2, 0.0, 0.0],
        [-11.0 / 54.0, 2.5, -70.0 / 27.0, 35.0 / 27.0, 0.0],
        [1631.0 / 55296.0, 175.0 / 512.0, 575.0 / 13824.0, 44275.0 / 110592.0, 253.0 / 4096.0],
    ];
    const C5: [f64; 6] = [37.0 / 378.0, 0.0, 250.0 / 621.0, 125.0 / 594.0, 0.0, 512.0 / 1771.0];
    const C4: [f64; 6] =
        [2825.0 / 27648.0, 0.0, 18575.0 / 48384.0, 13525.0 / 55296.0, 277.0 / 14336.0, 0.25];
    let mut k = [0.0f64; 6];
    k[0] = f(y);
    for i in 0..5 {
        let mut yi = y;
        for (j, kj) in k.iter().enumerate().take(i + 1) {
            yi += h * B[i][j] * kj;
        }
        k[i + 1] = f(yi);
    }
    let mut y5 = y;
    let mut y4 = y;
    for j in 0..6 {
        y5 += h * C5[j] * k[j];
        y4 += h * C4[j] * k[j];
    }
    (y5, (y5 - y4).abs())
}

fn shoot_branch(
    kernel: &Kernel<'_>,
    seed_xi: f64,
    seed_phi: f64,
    target: f64,
    dir: f64,
    opts: &ProfileOpts,
) -> Result<(Vec<Sample>, TailContact), ProfileError> {
    let field = |phi: f64| kernel.dphi_dxi(phi);
    let sharp = kernel.end_is_sharp(target);
    let span = (kernel.spec.l_plus - kernel.spec.l_minus).abs();
    let rtol = 1e-10;
    let atol = 1e-16 * span;
    let h_max = 0.02;

    let mut xi = seed_xi;
    let mut phi = seed_phi;
    let mut h = dir * 1e-6;
    let mut samples = vec![Sample { xi, phi, dphi: Some(field(phi)) }];
    for _ in 0..2_000_000 {
        if (target - phi).abs() <= opts.tail_tol || xi.abs() > opts.xi_horizon {
            break;
        }
        if h.abs() > h_max {
            h = dir * h_max;
        }
        let (phi_new, err) = rk45_step(&field, phi, h);
        // error control relative to the remaining gap: absolute phi errors
        // in the contracting tail blow up the xi parametrization by 1/phi',
        // so accuracy must follow the gap down
        let tol = atol + rtol * (target - phi).abs();
        let crossed = (target - phi_new) * (target - phi) < 0.0 || phi_new == target;
        if err > tol || (crossed && !sharp) {
            h *= 0.5;
            if h.abs() < 1e-14 {
                return Err(ProfileError::StiffnessFailure { xi, phi });
            }
            continue;
        }
        if crossed && sharp {
            // contact event: linear back-step onto the end state
            let frac = (target - phi) / (phi_new - phi);
            xi += h * frac;
            phi = target;
            samples.push(Sample { xi, phi, dphi: None });
            return Ok((samples, TailContact::Sharp { xi }));
        }
        xi += h;
        phi = phi_new;
        samples.push(Sample { xi, phi, dphi: Some(field(phi)) });
        // grow the step within the error budget
        let grow = if err > 0.0 { 0.9 * (tol / err).powf(0.2) } else { 2.0 };
        h *= grow.clamp(0.2, 2.0);
    }
    if sharp && (target - phi).abs() > opts.tail_tol {
        return Err(ProfileError::StiffnessFailure { xi, phi });
    }
    let tail = if sharp {
        TailContact::Sharp { xi }
    } else {
        TailContact::Asymptotic { xi_cutoff: xi, phi_gap: (target - phi).abs() }
    };
    Ok((samples, tail))
}

/// Independent cross-check: integrates `phi' = F(phi) / D(phi)` in `xi`
/// with an adaptive embedded Runge-Kutta pair, seeded on both sides of the
/// crossing by the slope expansion. Requires a D1 front with a finite
/// positive crossing slope (`D'(alpha) < 0`), so shooting through the
/// crossing is well-posed.
pub fn ode_oracle(spec: &WaveSpec, opts: &ProfileOpts) -> Result<Profile, ProfileError> {
    let alpha = match spec.regime {
        Regime::D1Front { alpha } => alpha,
        _ => return Err(ProfileError::UnsupportedRegime { regime: "non-D1" }),
    };
    require_noncritical_crossing(spec, alpha)?;
    let slope = crossing_slope(spec, alpha);
    let s0 = match slope {
        CrossingSlope::Finite(v) if v > 0.0 => v,
        _ => {
            return Err(ProfileError::NonFiniteCrossingSlope {
                at: alpha,
                d_prime: spec.diffusivity.deriv(alpha),
            })
        }
    };
    let kernel = Kernel::new(spec);
    let span = spec.l_plus - spec.l_minus;
    let e0 = 1e-8 * span;
    let xi0 = e0 / s0;

    let (right, right_tail) = shoot_branch(&kernel, xi0, alpha + e0, spec.l_plus, 1.0, opts)?;
    let (mut left, left_tail) = shoot_branch(&kernel, -xi0, alpha - e0, spec.l_minus, -1.0, opts)?;

    left.reverse();
    let mut samples = left;
    samples.push(Sample { xi: 0.0, phi: alpha, dphi: Some(s0) });
    samples.extend(right);
    Ok(Profile {
        samples,
        l_minus: spec.l_minus,
        l_plus: spec.l_plus,
        speed: spec.speed,
        increasing: true,
        anchors: Anchors { xi0: 0.0, xi1: 0.0, xi2: None, xi3: None },
        left_tail,
        right_tail,
        crossing_slope: Some(slope),
        c1_at_plateau: None,
    })
}
