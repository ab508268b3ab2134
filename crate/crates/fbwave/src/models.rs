//! Velocity laws, flux models and diffusivity models for collective-movement
//! flows, with analytic first and second derivatives.
//!
//! Densities are normalized to `[0, 1]`. A velocity law `v` is non-negative
//! on `[0, 1)` with `v(1) = 0`; the flux is `f(rho) = rho * v(rho)`. The
//! diffusivity families combine `v` with an anticipation length `delta`, a
//! reaction time `tau` and a dimensionless-gain/anticipation parameter `h`:
//!
//! ```text
//! NelsonDeltaTau   D = -rho v' (delta + tau rho v')
//! DeltaOnly        D = -delta rho v'
//! HvSquared        D = -rho v' (h v^2 + tau rho v')
//! Hv               D = -rho v' (h v  + tau rho v')
//! KineticTwoSpeed  D = tau (rho v' + v)(v_max - rho v' - v)
//! ```
//!
//! For the quadratic law `v = v_max (1 - rho)^2` the `HvSquared` family
//! collapses to
//!
//! ```text
//! D = 2 h v_max^3 rho (1 - rho)^2 [(1 - rho)^3 - sigma rho],
//! sigma = 2 tau / (h v_max),
//! ```
//!
//! so the interior sign change sits at the unique root of
//! `(1 - alpha)^3 = sigma alpha`.
//!
//! Derivatives are analytic per family; finite differences are used only as
//! a validation oracle (`validate_derivatives`), because `D'(alpha)` enters
//! the profile slope formula and must be accurate.

use std::fmt;
use std::sync::Arc;

use crate::numerics;

/// Errors raised while building models.
#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("parameter {name} must be positive, got {value}")]
    NonPositiveParam { name: &'static str, value: f64 },
    #[error("flux must vanish at rho = 0, got f(0) = {f0:e}")]
    NonZeroFluxAtOrigin { f0: f64 },
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A user-supplied velocity law with analytic derivatives.
#[derive(Clone)]
pub struct CustomVelocity {
    pub label: String,
    eval: ScalarFn,
    deriv: ScalarFn,
    deriv2: ScalarFn,
    kink: Option<f64>,
    scale: f64,
}

impl CustomVelocity {
    pub fn new<F, G, H>(label: impl Into<String>, scale: f64, eval: F, deriv: G, deriv2: H) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        G: Fn(f64) -> f64 + Send + Sync + 'static,
        H: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            label: label.into(),
            eval: Arc::new(eval),
            deriv: Arc::new(deriv),
            deriv2: Arc::new(deriv2),
            kink: None,
            scale,
        }
    }

    /// Marks the law as non-C1 at `rho`, restricting analysis to `(rho, 1]`.
    pub fn with_kink(mut self, rho: f64) -> Self {
        self.kink = Some(rho);
        self
    }
}

impl fmt::Debug for CustomVelocity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomVelocity")
            .field("label", &self.label)
            .field("kink", &self.kink)
            .finish()
    }
}

/// Speed-density laws used by the packaged flux and diffusivity models.
///
/// All laws carry a maximal-speed scale `v_max` and satisfy `v(1) = 0`,
/// `v >= 0` on `[0, 1)`.
#[derive(Debug, Clone)]
pub enum VelocityLaw {
    /// `v = v_max (1 - rho)`
    Linear { v_max: f64 },
    /// `v = v_max (1 - rho)^2`
    Quadratic { v_max: f64 },
    /// `v = v_max (1 - rho^p)^q`, `p > 0`, `q > 1`
    PowerPq { v_max: f64, p: f64, q: f64 },
    /// `v = v_max (1 - exp(gamma (1 - 1/rho)))`, strictly concave flux
    Kladek { v_max: f64, gamma: f64 },
    /// `v = v_max` for `rho <= a`, `v = v_max exp(gamma (a - rho)/(1 - rho))`
    /// for `rho > a`; non-C1 at `a` when `a > 0`
    ExponentialA { v_max: f64, gamma: f64, a: f64 },
    /// `v = v_max min(1, -c ln rho)`; non-C1 at `exp(-1/c)`
    LogLaw { v_max: f64, c: f64 },
    Custom(CustomVelocity),
}

impl VelocityLaw {
    pub fn eval(&self, rho: f64) -> f64 {
        match *self {
            Self::Linear { v_max } => v_max * (1.0 - rho),
            Self::Quadratic { v_max } => v_max * (1.0 - rho) * (1.0 - rho),
            Self::PowerPq { v_max, p, q } => v_max * (1.0 - rho.powf(p)).powf(q),
            Self::Kladek { v_max, gamma } => {
                if rho <= 0.0 {
                    v_max
                } else {
                    v_max * (1.0 - (gamma * (1.0 - 1.0 / rho)).exp())
                }
            }
            Self::ExponentialA { v_max, gamma, a } => {
                if rho <= a {
                    v_max
                } else if rho >= 1.0 {
                    0.0
                } else {
                    v_max * (gamma * (a - rho) / (1.0 - rho)).exp()
                }
            }
            Self::LogLaw { v_max, c } => {
                if rho <= 0.0 {
                    v_max
                } else {
                    v_max * (-c * rho.ln()).min(1.0)
                }
            }
            Self::Custom(ref c) => (c.eval)(rho),
        }
    }

    pub fn deriv(&self, rho: f64) -> f64 {
        match *self {
            Self::Linear { v_max } => -v_max,
            Self::Quadratic { v_max } => -2.0 * v_max * (1.0 - rho),
            Self::PowerPq { v_max, p, q } => {
                -v_max * q * p * rho.powf(p - 1.0) * (1.0 - rho.powf(p)).powf(q - 1.0)
            }
            Self::Kladek { v_max, gamma } => {
                if rho <= 0.0 {
                    0.0
                } else {
                    -v_max * (gamma * (1.0 - 1.0 / rho)).exp() * gamma / (rho * rho)
                }
            }
            Self::ExponentialA { v_max, gamma, a } => {
                if rho <= a || rho >= 1.0 {
                    0.0
                } else {
                    let e = (gamma * (a - rho) / (1.0 - rho)).exp();
                    -v_max * e * gamma * (1.0 - a) / ((1.0 - rho) * (1.0 - rho))
                }
            }
            Self::LogLaw { v_max, c } => {
                if rho <= 0.0 || -c * rho.ln() >= 1.0 {
                    0.0
                } else {
                    -v_max * c / rho
                }
            }
            Self::Custom(ref cu) => (cu.deriv)(rho),
        }
    }

    pub fn deriv2(&self, rho: f64) -> f64 {
        match *self {
            Self::Linear { .. } => 0.0,
            Self::Quadratic { v_max } => 2.0 * v_max,
            Self::PowerPq { v_max, p, q } => {
                let rp = rho.powf(p);
                -v_max
                    * q
                    * p
                    * rho.powf(p - 2.0)
                    * (1.0 - rp).powf(q - 2.0)
                    * ((p - 1.0) * (1.0 - rp) - p * (q - 1.0) * rp)
            }
            Self::Kladek { v_max, gamma } => {
                if rho <= 0.0 {
                    0.0
                } else {
                    let e = (gamma * (1.0 - 1.0 / rho)).exp();
                    let r2 = rho * rho;
                    -v_max * e * (gamma * gamma / (r2 * r2) - 2.0 * gamma / (r2 * rho))
                }
            }
            Self::ExponentialA { v_max, gamma, a } => {
                if rho <= a || rho >= 1.0 {
                    0.0
                } else {
                    let om = 1.0 - rho;
                    let e = (gamma * (a - rho) / om).exp();
                    let u1 = -gamma * (1.0 - a) / (om * om);
                    let u2 = -2.0 * gamma * (1.0 - a) / (om * om * om);
                    v_max * e * (u1 * u1 + u2)
                }
            }
            Self::LogLaw { v_max, c } => {
                if rho <= 0.0 || -c * rho.ln() >= 1.0 {
                    0.0
                } else {
                    v_max * c / (rho * rho)
                }
            }
            Self::Custom(ref cu) => (cu.deriv2)(rho),
        }
    }

    /// The maximal-speed scale `v_max`.
    pub fn scale(&self) -> f64 {
        match *self {
            Self::Linear { v_max }
            | Self::Quadratic { v_max }
            | Self::PowerPq { v_max, .. }
            | Self::Kladek { v_max, .. }
            | Self::ExponentialA { v_max, .. }
            | Self::LogLaw { v_max, .. } => v_max,
            Self::Custom(ref c) => c.scale,
        }
    }

    /// Location of the non-C1 point, when the law has one.
    ///
    /// `ExponentialA` is non-C1 at `a` exactly when `a > 0`; `LogLaw` is
    /// non-C1 at `exp(-1/c)`.
    pub fn kink(&self) -> Option<f64> {
        match *self {
            Self::ExponentialA { a, .. } if a > 0.0 => Some(a),
            Self::LogLaw { c, .. } => Some((-1.0 / c).exp()),
            Self::Custom(ref cu) => cu.kink,
            _ => None,
        }
    }

    /// The sub-interval of `[0, 1]` on which the law is C1, when it is not
    /// C1 on all of it. Downstream analysis must not cross the kink.
    pub fn restricted_domain(&self) -> Option<(f64, f64)> {
        self.kink().map(|k| (k, 1.0))
    }
}

enum FluxSource {
    Velocity(VelocityLaw),
    Direct { label: String, eval: ScalarFn, deriv: ScalarFn },
}

/// A flux `f` on `[0, 1]` with `f(0) = 0`, either `rho * v(rho)` for a
/// velocity law or user-supplied.
pub struct FluxModel {
    source: FluxSource,
}

impl Clone for FluxModel {
    fn clone(&self) -> Self {
        match &self.source {
            FluxSource::Velocity(v) => Self { source: FluxSource::Velocity(v.clone()) },
            FluxSource::Direct { label, eval, deriv } => Self {
                source: FluxSource::Direct {
                    label: label.clone(),
                    eval: eval.clone(),
                    deriv: deriv.clone(),
                },
            },
        }
    }
}

impl fmt::Debug for FluxModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.source {
            FluxSource::Velocity(v) => write!(f, "FluxModel::from_velocity({v:?})"),
            FluxSource::Direct { label, .. } => write!(f, "FluxModel::direct({label:?})"),
        }
    }
}

impl FluxModel {
    /// `f = rho v(rho)`, `f' = v + rho v'`.
    pub fn from_velocity(v: VelocityLaw) -> Self {
        Self { source: FluxSource::Velocity(v) }
    }

    /// Wraps user-supplied `f`, `f'`. Fails unless `f(0) = 0`.
    pub fn direct<F, G>(label: impl Into<String>, eval: F, deriv: G) -> Result<Self, ModelError>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        G: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let f0 = eval(0.0);
        if f0.abs() > 1e-14 {
            return Err(ModelError::NonZeroFluxAtOrigin { f0 });
        }
        Ok(Self {
            source: FluxSource::Direct {
                label: label.into(),
                eval: Arc::new(eval),
                deriv: Arc::new(deriv),
            },
        })
    }

    /// The normalized cubic flux `f = v_max rho (1 - rho)^2`.
    pub fn cubic(v_max: f64) -> Self {
        Self::from_velocity(VelocityLaw::Quadratic { v_max })
    }

    pub fn eval(&self, rho: f64) -> f64 {
        match &self.source {
            FluxSource::Velocity(v) => rho * v.eval(rho),
            FluxSource::Direct { eval, .. } => eval(rho),
        }
    }

    pub fn deriv(&self, rho: f64) -> f64 {
        match &self.source {
            FluxSource::Velocity(v) => v.eval(rho) + rho * v.deriv(rho),
            FluxSource::Direct { deriv, .. } => deriv(rho),
        }
    }

    pub fn velocity(&self) -> Option<&VelocityLaw> {
        match &self.source {
            FluxSource::Velocity(v) => Some(v),
            FluxSource::Direct { .. } => None,
        }
    }

    /// `sup |f|` on an interior grid, used to scale strictness tolerances.
    pub fn sup_abs(&self, lo: f64, hi: f64) -> f64 {
        let mut sup = 0.0f64;
        for x in numerics::linspace(lo, hi, 512) {
            sup = sup.max(self.eval(x).abs());
        }
        sup.max(f64::MIN_POSITIVE)
    }
}

/// Outcome of the safety-velocity predicate `v_max <= v_s = delta / tau`.
///
/// Reported, never silently assumed: several packaged configurations
/// violate it on purpose.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SafetyCheck {
    pub v_bar: f64,
    pub v_safety: f64,
    pub holds: bool,
}

enum DiffSource {
    NelsonDeltaTau { v: VelocityLaw, delta: f64, tau: f64 },
    DeltaOnly { v: VelocityLaw, delta: f64 },
    HvSquared { v: VelocityLaw, h: f64, tau: f64 },
    Hv { v: VelocityLaw, h: f64, tau: f64 },
    KineticTwoSpeed { v: VelocityLaw, tau: f64 },
    Direct { label: String, eval: ScalarFn, deriv: ScalarFn },
}

/// A diffusivity `D` on `[0, 1]` with analytic derivative, from one of the
/// packaged families or user-supplied.
pub struct DiffusivityModel {
    source: DiffSource,
}

impl Clone for DiffusivityModel {
    fn clone(&self) -> Self {
        let source = match &self.source {
            DiffSource::NelsonDeltaTau { v, delta, tau } => {
                DiffSource::NelsonDeltaTau { v: v.clone(), delta: *delta, tau: *tau }
            }
            DiffSource::DeltaOnly { v, delta } => {
                DiffSource::DeltaOnly { v: v.clone(), delta: *delta }
            }
            DiffSource::HvSquared { v, h, tau } => {
                DiffSource::HvSquared { v: v.clone(), h: *h, tau: *tau }
            }
            DiffSource::Hv { v, h, tau } => DiffSource::Hv { v: v.clone(), h: *h, tau: *tau },
            DiffSource::KineticTwoSpeed { v, tau } => {
                DiffSource::KineticTwoSpeed { v: v.clone(), tau: *tau }
            }
            DiffSource::Direct { label, eval, deriv } => DiffSource::Direct {
                label: label.clone(),
                eval: eval.clone(),
                deriv: deriv.clone(),
            },
        };
        Self { source }
    }
}

impl fmt::Debug for DiffusivityModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.source {
            DiffSource::NelsonDeltaTau { delta, tau, .. } => {
                write!(f, "DiffusivityModel::nelson_delta_tau(delta={delta}, tau={tau})")
            }
            DiffSource::DeltaOnly { delta, .. } => {
                write!(f, "DiffusivityModel::delta_only(delta={delta})")
            }
            DiffSource::HvSquared { h, tau, .. } => {
                write!(f, "DiffusivityModel::hv_squared(h={h}, tau={tau})")
            }
            DiffSource::Hv { h, tau, .. } => write!(f, "DiffusivityModel::hv(h={h}, tau={tau})"),
            DiffSource::KineticTwoSpeed { tau, .. } => {
                write!(f, "DiffusivityModel::kinetic_two_speed(tau={tau})")
            }
            DiffSource::Direct { label, .. } => write!(f, "DiffusivityModel::direct({label:?})"),
        }
    }
}

fn require_positive(name: &'static str, value: f64) -> Result<(), ModelError> {
    if value > 0.0 {
        Ok(())
    } else {
        Err(ModelError::NonPositiveParam { name, value })
    }
}

impl DiffusivityModel {
    /// `D = -rho v' (delta + tau rho v')`
    pub fn nelson_delta_tau(v: VelocityLaw, delta: f64, tau: f64) -> Result<Self, ModelError> {
        require_positive("delta", delta)?;
        require_positive("tau", tau)?;
        Ok(Self { source: DiffSource::NelsonDeltaTau { v, delta, tau } })
    }

    /// `D = -delta rho v'` (reaction time dropped)
    pub fn delta_only(v: VelocityLaw, delta: f64) -> Result<Self, ModelError> {
        require_positive("delta", delta)?;
        Ok(Self { source: DiffSource::DeltaOnly { v, delta } })
    }

    /// `D = -rho v' (h v^2 + tau rho v')` (density-dependent anticipation)
    pub fn hv_squared(v: VelocityLaw, h: f64, tau: f64) -> Result<Self, ModelError> {
        require_positive("h", h)?;
        require_positive("tau", tau)?;
        Ok(Self { source: DiffSource::HvSquared { v, h, tau } })
    }

    /// `D = -rho v' (h v + tau rho v')` (pedestrian variant)
    pub fn hv(v: VelocityLaw, h: f64, tau: f64) -> Result<Self, ModelError> {
        require_positive("h", h)?;
        require_positive("tau", tau)?;
        Ok(Self { source: DiffSource::Hv { v, h, tau } })
    }

    /// `D = tau (rho v' + v)(v_max - rho v' - v)` (two-speed kinetic closure)
    pub fn kinetic_two_speed(v: VelocityLaw, tau: f64) -> Result<Self, ModelError> {
        require_positive("tau", tau)?;
        Ok(Self { source: DiffSource::KineticTwoSpeed { v, tau } })
    }

    /// `HvSquared` over the quadratic law, parametrized by `sigma` instead
    /// of `tau`. The map `(tau, h) -> sigma` is convention-dependent in
    /// dimensional data, so `sigma` is settable directly; `tau` is derived
    /// as `sigma h v_max / 2`.
    pub fn hv_squared_with_sigma(v_max: f64, h: f64, sigma: f64) -> Result<Self, ModelError> {
        require_positive("v_max", v_max)?;
        require_positive("h", h)?;
        require_positive("sigma", sigma)?;
        let tau = 0.5 * sigma * h * v_max;
        Self::hv_squared(VelocityLaw::Quadratic { v_max }, h, tau)
    }

    /// Wraps user-supplied `D`, `D'`.
    pub fn direct<F, G>(label: impl Into<String>, eval: F, deriv: G) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        G: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            source: DiffSource::Direct {
                label: label.into(),
                eval: Arc::new(eval),
                deriv: Arc::new(deriv),
            },
        }
    }

    pub fn eval(&self, rho: f64) -> f64 {
        match &self.source {
            DiffSource::NelsonDeltaTau { v, delta, tau } => {
                let w = rho * v.deriv(rho);
                -w * (delta + tau * w)
            }
            DiffSource::DeltaOnly { v, delta } => -delta * rho * v.deriv(rho),
            DiffSource::HvSquared { v, h, tau } => {
                let w = rho * v.deriv(rho);
                let vv = v.eval(rho);
                -w * (h * vv * vv + tau * w)
            }
            DiffSource::Hv { v, h, tau } => {
                let w = rho * v.deriv(rho);
                -w * (h * v.eval(rho) + tau * w)
            }
            DiffSource::KineticTwoSpeed { v, tau } => {
                let z = rho * v.deriv(rho) + v.eval(rho);
                tau * z * (v.scale() - z)
            }
            DiffSource::Direct { eval, .. } => eval(rho),
        }
    }

    pub fn deriv(&self, rho: f64) -> f64 {
        match &self.source {
            DiffSource::NelsonDeltaTau { v, delta, tau } => {
                let w = rho * v.deriv(rho);
                let wp = v.deriv(rho) + rho * v.deriv2(rho);
                -wp * (delta + 2.0 * tau * w)
            }
            DiffSource::DeltaOnly { v, delta } => -delta * (v.deriv(rho) + rho * v.deriv2(rho)),
            DiffSource::HvSquared { v, h, tau } => {
                let w = rho * v.deriv(rho);
                let wp = v.deriv(rho) + rho * v.deriv2(rho);
                let vv = v.eval(rho);
                -wp * (h * vv * vv + tau * w) - w * (2.0 * h * vv * v.deriv(rho) + tau * wp)
            }
            DiffSource::Hv { v, h, tau } => {
                let w = rho * v.deriv(rho);
                let wp = v.deriv(rho) + rho * v.deriv2(rho);
                -wp * (h * v.eval(rho) + tau * w) - w * (h * v.deriv(rho) + tau * wp)
            }
            DiffSource::KineticTwoSpeed { v, tau } => {
                let z = rho * v.deriv(rho) + v.eval(rho);
                let zp = 2.0 * v.deriv(rho) + rho * v.deriv2(rho);
                tau * zp * (v.scale() - 2.0 * z)
            }
            DiffSource::Direct { deriv, .. } => deriv(rho),
        }
    }

    pub fn velocity(&self) -> Option<&VelocityLaw> {
        match &self.source {
            DiffSource::NelsonDeltaTau { v, .. }
            | DiffSource::DeltaOnly { v, .. }
            | DiffSource::HvSquared { v, .. }
            | DiffSource::Hv { v, .. }
            | DiffSource::KineticTwoSpeed { v, .. } => Some(v),
            DiffSource::Direct { .. } => None,
        }
    }

    /// The safety-velocity predicate `v_max <= delta / tau`, defined for the
    /// constant-anticipation family.
    pub fn safety_check(&self) -> Option<SafetyCheck> {
        match &self.source {
            DiffSource::NelsonDeltaTau { v, delta, tau } => {
                let v_bar = v.scale();
                let v_safety = delta / tau;
                Some(SafetyCheck { v_bar, v_safety, holds: v_bar <= v_safety })
            }
            _ => None,
        }
    }

    /// `sup |D|` on a grid, used to scale root tolerances.
    pub fn sup_abs(&self, lo: f64, hi: f64) -> f64 {
        let mut sup = 0.0f64;
        for x in numerics::linspace(lo, hi, 512) {
            sup = sup.max(self.eval(x).abs());
        }
        sup.max(f64::MIN_POSITIVE)
    }
}

/// Conversion between normalized density on `[0, 1]` and dimensional
/// density (vehicles or pedestrians per unit length). Applies only at I/O;
/// everything internal is normalized.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DimensionalFrame {
    pub rho_max: f64,
    pub v_max: f64,
}

impl DimensionalFrame {
    pub fn to_normalized(&self, rho_dim: f64) -> f64 {
        rho_dim / self.rho_max
    }

    pub fn to_dimensional(&self, rho: f64) -> f64 {
        rho * self.rho_max
    }

    /// Scale of the dimensional flux `rho_max * v_max`.
    pub fn flux_scale(&self) -> f64 {
        self.rho_max * self.v_max
    }
}

/// Report from checking an analytic derivative against centered finite
/// differences on an interior grid.
#[derive(Debug, Clone)]
pub struct DerivativeReport {
    pub max_rel_dev: f64,
    pub worst_at: f64,
    pub checked_points: usize,
    pub skipped_points: usize,
    pub pass: bool,
}

/// Compares `deriv` with a centered finite difference of `eval` on an
/// `n`-point interior grid of `(lo, hi)`, excluding a neighborhood of each
/// point in `kinks`. Pass iff the max relative deviation is below `1e-5`.
pub fn validate_derivatives<F, G>(
    eval: F,
    deriv: G,
    lo: f64,
    hi: f64,
    n: usize,
    kinks: &[f64],
) -> DerivativeReport
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    let h = 1e-6 * (hi - lo).max(1.0);
    let margin = 8.0 * h;
    let guard = 1e-3 * (hi - lo);
    let xs = numerics::linspace(lo + margin, hi - margin, n.max(2));
    let mut sup_an = 0.0f64;
    for &x in &xs {
        sup_an = sup_an.max(deriv(x).abs());
    }
    let floor = (1e-2 * sup_an).max(f64::MIN_POSITIVE);
    let mut max_rel = 0.0;
    let mut worst = xs[0];
    let mut checked = 0usize;
    let mut skipped = 0usize;
    for &x in &xs {
        if kinks.iter().any(|&k| (x - k).abs() < guard) {
            skipped += 1;
            continue;
        }
        let fd = numerics::centered_diff(&eval, x, h);
        let an = deriv(x);
        let rel = (fd - an).abs() / an.abs().max(floor);
        if rel > max_rel {
            max_rel = rel;
            worst = x;
        }
        checked += 1;
    }
    DerivativeReport {
        max_rel_dev: max_rel,
        worst_at: worst,
        checked_points: checked,
        skipped_points: skipped,
        pass: max_rel < 1e-5,
    }
}

/// Convenience: validate a velocity law's `deriv` over its C1 domain.
pub fn validate_velocity_derivatives(v: &VelocityLaw, n: usize) -> DerivativeReport {
    let kinks: Vec<f64> = v.kink().into_iter().collect();
    validate_derivatives(|x| v.eval(x), |x| v.deriv(x), 1e-4, 1.0 - 1e-4, n, &kinks)
}

/// Convenience: validate a diffusivity model's `deriv` over the C1 domain
/// of its velocity law.
pub fn validate_diffusivity_derivatives(d: &DiffusivityModel, n: usize) -> DerivativeReport {
    let kinks: Vec<f64> = d.velocity().and_then(|v| v.kink()).into_iter().collect();
    validate_derivatives(|x| d.eval(x), |x| d.deriv(x), 1e-4, 1.0 - 1e-4, n, &kinks)
}
