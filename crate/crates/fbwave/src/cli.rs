//! Scenario-driven front end: a TOML scenario file fully determines a run,
//! every command writes its data files plus a manifest with checksums, and
//! identical scenarios reproduce identical bytes (the pipeline has no
//! randomness and CSV floats carry 17 significant digits).
//!
//! Exit-code contract: `0` success, `2` configuration error, `3` existence
//! refused, `4` numerical failure.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::existence::{self, EndSelector, Regime, WaveSpec};
use crate::fluxgeom::{self, PatternClass, ScanConfig, SignPattern};
use crate::models::{DiffusivityModel, DimensionalFrame, FluxModel, VelocityLaw};
use crate::profile::{self, CrossingSlope, Profile, ProfileOpts};
use crate::viscosity;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("existence refused: {0}")]
    Refused(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// `2` config, `3` refused, `4` numerical or i/o.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Refused(_) => 3,
            CliError::Numerical(_) | CliError::Io(_) => 4,
        }
    }
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

// ---------------------------------------------------------------------------
// scenario schema

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum VelocityConfig {
    Linear { v_max: f64 },
    Quadratic { v_max: f64 },
    PowerPq { v_max: f64, p: f64, q: f64 },
    Kladek { v_max: f64, gamma: f64 },
    ExponentialA { v_max: f64, gamma: f64, a: f64 },
    LogLaw { v_max: f64, c: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DiffusivityConfig {
    NelsonDeltaTau {
        delta: f64,
        tau: f64,
    },
    DeltaOnly {
        delta: f64,
    },
    /// `tau` or `sigma` must be set; `sigma` calibrates `tau` for the
    /// quadratic law (`tau = sigma h v_max / 2`), the map from dimensional
    /// `(tau, h)` being convention-dependent.
    HvSquared {
        h: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tau: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sigma: Option<f64>,
    },
    Hv {
        h: f64,
        tau: f64,
    },
    KineticTwoSpeed {
        tau: f64,
    },
    /// Synthetic diffusivity `alpha - rho`: pins the sign change for
    /// geometry studies when the physical parametrization is not settled.
    PinnedAlpha {
        alpha: f64,
    },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub m_min: f64,
    pub m_max: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l_plus: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l_minus: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NumericsConfig {
    pub grid_n: usize,
    pub tol_root: f64,
    pub tol_quad: f64,
    pub strict_tol: f64,
    pub tail_tol: f64,
    pub n_core: usize,
    pub delta: f64,
    pub conv_tol: f64,
    pub xi_horizon: f64,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        Self {
            grid_n: 4096,
            tol_root: 1e-9,
            tol_quad: 1e-12,
            strict_tol: 1e-10,
            tail_tol: 1e-8,
            n_core: 240,
            delta: 0.1,
            conv_tol: 1e-3,
            xi_horizon: 1e6,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpsListConfig(pub Vec<f64>);

impl Default for EpsListConfig {
    fn default() -> Self {
        Self(vec![1.0, 0.5, 0.1, 0.01])
    }
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlateauConfig {
    pub xi1: f64,
    pub xi2: f64,
    pub xi3: f64,
}

/// One fully reproducible run: models, wave selector, numerics.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub velocity: VelocityConfig,
    pub diffusivity: DiffusivityConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame: Option<DimensionalFrame>,
    #[serde(default)]
    pub wave: WaveConfig,
    #[serde(default)]
    pub numerics: NumericsConfig,
    #[serde(default)]
    pub eps_list: EpsListConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plateau: Option<PlateauConfig>,
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let scenario: Scenario =
            toml::from_str(text).map_err(|e| config_err(format!("scenario parse: {e}")))?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    fn validate(&self) -> Result<(), CliError> {
        let n = &self.numerics;
        for (name, v) in [
            ("tol_root", n.tol_root),
            ("tol_quad", n.tol_quad),
            ("strict_tol", n.strict_tol),
            ("tail_tol", n.tail_tol),
            ("delta", n.delta),
            ("conv_tol", n.conv_tol),
            ("xi_horizon", n.xi_horizon),
        ] {
            if v.is_nan() || v <= 0.0 {
                return Err(config_err(format!("numerics.{name} must be positive, got {v}")));
            }
        }
        if n.grid_n < 16 || n.n_core < 8 {
            return Err(config_err("numerics.grid_n >= 16 and numerics.n_core >= 8 required"));
        }
        let selectors = [
            self.wave.l_plus.is_some(),
            self.wave.l_minus.is_some(),
            self.wave.slope.is_some(),
            self.wave.sweep.is_some(),
        ]
        .iter()
        .filter(|&&b| b)
        .count();
        if selectors > 1 {
            return Err(config_err("wave must specify at most one of l_plus, l_minus, slope, sweep"));
        }
        if self.eps_list.0.is_empty()
            || self.eps_list.0.iter().any(|&e| e <= 0.0 || e > 1.0)
            || self.eps_list.0.windows(2).any(|w| w[0] <= w[1])
        {
            return Err(config_err("eps_list must be descending values in (0, 1]"));
        }
        if let Some(p) = &self.plateau {
            if p.xi1 < 0.0 || p.xi3 < p.xi2 {
                return Err(config_err("plateau requires xi1 >= 0 and xi3 >= xi2"));
            }
        }
        Ok(())
    }

    fn scan_config(&self) -> ScanConfig {
        ScanConfig {
            grid_n: self.numerics.grid_n,
            tol_root: self.numerics.tol_root,
            strict_tol: self.numerics.strict_tol,
            refine_tol: 1e-12,
        }
    }

    fn profile_opts(&self) -> ProfileOpts {
        ProfileOpts {
            n_core: self.numerics.n_core,
            tail_tol: self.numerics.tail_tol,
            tol_quad: self.numerics.tol_quad,
            xi_horizon: self.numerics.xi_horizon,
        }
    }
}

// ---------------------------------------------------------------------------
// model resolution

struct Resolved {
    velocity: VelocityLaw,
    flux: FluxModel,
    diffusivity: DiffusivityModel,
    /// Analysis interval: the C1 domain of the law.
    domain: (f64, f64),
}

fn resolve(scenario: &Scenario) -> Result<Resolved, CliError> {
    let velocity = match scenario.velocity {
        VelocityConfig::Linear { v_max } => VelocityLaw::Linear { v_max },
        VelocityConfig::Quadratic { v_max } => VelocityLaw::Quadratic { v_max },
        VelocityConfig::PowerPq { v_max, p, q } => VelocityLaw::PowerPq { v_max, p, q },
        VelocityConfig::Kladek { v_max, gamma } => VelocityLaw::Kladek { v_max, gamma },
        VelocityConfig::ExponentialA { v_max, gamma, a } => {
            VelocityLaw::ExponentialA { v_max, gamma, a }
        }
        VelocityConfig::LogLaw { v_max, c } => VelocityLaw::LogLaw { v_max, c },
    };
    if velocity.scale() <= 0.0 {
        return Err(config_err("velocity.v_max must be positive"));
    }
    let flux = FluxModel::from_velocity(velocity.clone());
    let diffusivity = match scenario.diffusivity {
        DiffusivityConfig::NelsonDeltaTau { delta, tau } => {
            DiffusivityModel::nelson_delta_tau(velocity.clone(), delta, tau)
        }
        DiffusivityConfig::DeltaOnly { delta } => {
            DiffusivityModel::delta_only(velocity.clone(), delta)
        }
        DiffusivityConfig::HvSquared { h, tau, sigma } => match (tau, sigma) {
            (Some(tau), None) => DiffusivityModel::hv_squared(velocity.clone(), h, tau),
            (None, Some(sigma)) => {
                if !matches!(velocity, VelocityLaw::Quadratic { .. }) {
                    return Err(config_err(
                        "diffusivity.sigma calibration requires the quadratic velocity law",
                    ));
                }
                DiffusivityModel::hv_squared_with_sigma(velocity.scale(), h, sigma)
            }
            (Some(_), Some(_)) => {
                return Err(config_err("set diffusivity.tau or diffusivity.sigma, not both"))
            }
            (None, None) => {
                return Err(config_err("hv_squared needs diffusivity.tau or diffusivity.sigma"))
            }
        },
        DiffusivityConfig::Hv { h, tau } => DiffusivityModel::hv(velocity.clone(), h, tau),
        DiffusivityConfig::KineticTwoSpeed { tau } => {
            DiffusivityModel::kinetic_two_speed(velocity.clone(), tau)
        }
        DiffusivityConfig::PinnedAlpha { alpha } => {
            if !(0.0 < alpha && alpha < 1.0) {
                return Err(config_err("pinned_alpha requires alpha in (0, 1)"));
            }
            Ok(DiffusivityModel::direct(
                format!("pinned alpha = {alpha}"),
                move |rho| alpha - rho,
                move |_| -1.0,
            ))
        }
    }
    .map_err(|e| config_err(e.to_string()))?;
    let domain = velocity.restricted_domain().unwrap_or((0.0, 1.0));
    Ok(Resolved { velocity, flux, diffusivity, domain })
}

fn resolve_pattern(scenario: &Scenario, r: &Resolved) -> Result<SignPattern, CliError> {
    fluxgeom::sign_pattern_on(&r.diffusivity, r.domain.0, r.domain.1, &scenario.scan_config())
        .map_err(|e| CliError::Numerical(e.to_string()))
}

fn resolve_wave(scenario: &Scenario, r: &Resolved, p: &SignPattern) -> Result<WaveSpec, CliError> {
    let cfg = scenario.scan_config();
    let refused = |e: existence::ExistenceError| CliError::Refused(e.to_string());
    match p.classification {
        PatternClass::D1 { alpha } => {
            if let Some(lp) = scenario.wave.l_plus {
                existence::solve_pair_from_l_plus(&r.flux, &r.diffusivity, p, lp, &cfg)
                    .map_err(refused)
            } else if let Some(lm) = scenario.wave.l_minus {
                existence::solve_pair_from_l_minus(&r.flux, &r.diffusivity, p, lm, &cfg)
                    .map_err(refused)
            } else if let Some(m) = scenario.wave.slope {
                let fam = existence::end_states_general_on(
                    &r.flux,
                    alpha,
                    (m, m),
                    1,
                    r.domain,
                    &cfg,
                );
                let member = fam
                    .members
                    .first()
                    .ok_or_else(|| CliError::Refused(format!("no admissible pair at slope {m}")))?;
                existence::check_existence_d1(
                    &r.flux,
                    &r.diffusivity,
                    p,
                    member.l_minus,
                    member.l_plus,
                    &cfg,
                )
                .map_err(refused)
            } else {
                Err(config_err("wave needs l_plus, l_minus or slope to pick a front"))
            }
        }
        PatternClass::D2 { .. } => {
            existence::solve_pair_d2(&r.flux, &r.diffusivity, p, &cfg).map_err(refused)
        }
        PatternClass::ReversedD1 { .. } => {
            if let Some(lp) = scenario.wave.l_plus {
                existence::solve_pair_reversed(
                    &r.flux,
                    &r.diffusivity,
                    p,
                    EndSelector::LPlus(lp),
                    &cfg,
                )
                .map_err(refused)
            } else if let Some(lm) = scenario.wave.l_minus {
                existence::solve_pair_reversed(
                    &r.flux,
                    &r.diffusivity,
                    p,
                    EndSelector::LMinus(lm),
                    &cfg,
                )
                .map_err(refused)
            } else {
                Err(config_err("reversed pattern needs wave.l_plus or wave.l_minus"))
            }
        }
        other => Err(CliError::Refused(format!(
            "sign pattern {other:?} admits no front crossing a sign change"
        ))),
    }
}

// ---------------------------------------------------------------------------
// output plumbing

/// 17 significant digits: full f64 round-trip precision, so downstream
/// comparisons never quantize.
fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Serialize)]
pub struct OutputRecord {
    pub name: String,
    pub sha256: String,
    pub bytes: usize,
}

/// Written next to every command's outputs; regenerating from the same
/// scenario reproduces identical checksums.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub toolkit_version: String,
    pub scenario_sha256: String,
    pub outputs: Vec<OutputRecord>,
    pub summary: serde_json::Value,
}

struct OutputSink {
    dir: PathBuf,
    records: Vec<OutputRecord>,
}

impl OutputSink {
    fn new(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), records: Vec::new() })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        fs::write(self.dir.join(name), bytes)?;
        self.records.push(OutputRecord {
            name: name.to_string(),
            sha256: hex::encode(Sha256::digest(bytes)),
            bytes: bytes.len(),
        });
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| CliError::Numerical(format!("serialize {name}: {e}")))?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    fn finish(
        mut self,
        command: &str,
        scenario_digest: &str,
        summary: serde_json::Value,
    ) -> Result<RunManifest, CliError> {
        let manifest = RunManifest {
            command: command.to_string(),
            toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
            scenario_sha256: scenario_digest.to_string(),
            outputs: std::mem::take(&mut self.records),
            summary,
        };
        let mut text = serde_json::to_string_pretty(&manifest)
            .map_err(|e| CliError::Numerical(format!("serialize manifest: {e}")))?;
        text.push('\n');
        fs::write(self.dir.join("manifest.json"), text)?;
        Ok(manifest)
    }
}

fn scenario_digest(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

fn profile_csv(p: &Profile) -> String {
    let mut out = String::from("xi,phi,dphi_dxi\n");
    for s in &p.samples {
        let d = s.dphi.map(fmt_f64).unwrap_or_default();
        let _ = writeln!(out, "{},{},{}", fmt_f64(s.xi), fmt_f64(s.phi), d);
    }
    out
}

#[derive(Serialize)]
struct ProfileMeta {
    l_minus: f64,
    l_plus: f64,
    speed: f64,
    increasing: bool,
    anchors: profile::Anchors,
    sharp_left: bool,
    sharp_right: bool,
    left_tail: profile::TailContact,
    right_tail: profile::TailContact,
    slope_at_alpha: Option<CrossingSlope>,
    c1_at_plateau: Option<bool>,
}

impl ProfileMeta {
    fn of(p: &Profile) -> Self {
        Self {
            l_minus: p.l_minus,
            l_plus: p.l_plus,
            speed: p.speed,
            increasing: p.increasing,
            anchors: p.anchors,
            sharp_left: p.sharp_left(),
            sharp_right: p.sharp_right(),
            left_tail: p.left_tail,
            right_tail: p.right_tail,
            slope_at_alpha: p.crossing_slope,
            c1_at_plateau: p.c1_at_plateau,
        }
    }
}

#[derive(Serialize)]
struct WaveSpecReport {
    l_minus: f64,
    l_plus: f64,
    speed: f64,
    regime: Regime,
    collinearity_residual: f64,
    chord_margins: Vec<f64>,
    stationary: bool,
    lax: fluxgeom::LaxReport,
}

impl WaveSpecReport {
    fn of(spec: &WaveSpec) -> Self {
        Self {
            l_minus: spec.l_minus,
            l_plus: spec.l_plus,
            speed: spec.speed,
            regime: spec.regime,
            collinearity_residual: spec.collinearity_residual,
            chord_margins: spec.chord_margins.clone(),
            stationary: spec.is_stationary(),
            lax: fluxgeom::classify_lax(&spec.flux, spec.l_minus, spec.l_plus, spec.speed),
        }
    }
}

// ---------------------------------------------------------------------------
// commands

/// Sign-pattern report: classification, roots, intervals, endpoint zeros,
/// safety predicate; dimensional positions when a frame is configured.
pub fn cmd_signs(
    scenario: &Scenario,
    digest: &str,
    out: &Path,
) -> Result<RunManifest, CliError> {
    let r = resolve(scenario)?;
    let pattern = resolve_pattern(scenario, &r)?;
    let mut sink = OutputSink::new(out)?;
    #[derive(Serialize)]
    struct SignsReport<'a> {
        pattern: &'a SignPattern,
        safety: Option<crate::models::SafetyCheck>,
        alpha_dimensional: Option<f64>,
        beta_dimensional: Option<f64>,
    }
    let report = SignsReport {
        pattern: &pattern,
        safety: r.diffusivity.safety_check(),
        alpha_dimensional: scenario
            .frame
            .and_then(|fr| pattern.alpha().map(|a| fr.to_dimensional(a))),
        beta_dimensional: scenario
            .frame
            .and_then(|fr| pattern.beta().map(|b| fr.to_dimensional(b))),
    };
    sink.write_json("signs.json", &report)?;
    let summary = serde_json::json!({
        "classification": format!("{:?}", pattern.classification),
        "roots": pattern.roots.len(),
        "zero_at_left": pattern.zero_at_left,
        "zero_at_right": pattern.zero_at_right,
    });
    sink.finish("signs", digest, summary)
}

/// Existence verdict for the configured wave selector.
pub fn cmd_existence(
    scenario: &Scenario,
    digest: &str,
    out: &Path,
) -> Result<RunManifest, CliError> {
    let r = resolve(scenario)?;
    let pattern = resolve_pattern(scenario, &r)?;
    let spec = resolve_wave(scenario, &r, &pattern)?;
    let mut sink = OutputSink::new(out)?;
    sink.write_json("wave_spec.json", &WaveSpecReport::of(&spec))?;
    let summary = serde_json::json!({
        "accepted": true,
        "l_minus": spec.l_minus,
        "l_plus": spec.l_plus,
        "speed": spec.speed,
    });
    sink.finish("existence", digest, summary)
}

fn family_csv(fam: &existence::EndStateFamily, v_scale: f64) -> String {
    let mut out = String::from("m,mu,l_minus,l_plus,c,margin_left,margin_right\n");
    for m in &fam.members {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            fmt_f64(m.m),
            fmt_f64(m.m / v_scale),
            fmt_f64(m.l_minus),
            fmt_f64(m.l_plus),
            fmt_f64(m.m),
            fmt_f64(m.margin_left),
            fmt_f64(m.margin_right),
        );
    }
    out
}

/// End-state family sweep; with an `l_plus`/`l_minus` selector the chosen
/// pair is solved and reported as well. Exits 3 when nothing is admissible.
pub fn cmd_endstates(
    scenario: &Scenario,
    digest: &str,
    out: &Path,
) -> Result<RunManifest, CliError> {
    let r = resolve(scenario)?;
    let pattern = resolve_pattern(scenario, &r)?;
    let cfg = scenario.scan_config();
    let alpha = pattern.alpha().or(pattern.beta()).ok_or_else(|| {
        CliError::Refused(format!(
            "pattern {:?} has no interior sign change",
            pattern.classification
        ))
    })?;

    // slope range: the sweep config when given, otherwise the span of f'
    let (m_range, n_samples) = match scenario.wave.sweep {
        Some(s) => ((s.m_min, s.m_max), s.n.max(2)),
        None => {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for x in crate::numerics::linspace(r.domain.0 + 1e-6, r.domain.1 - 1e-6, 512) {
                let d = r.flux.deriv(x);
                lo = lo.min(d);
                hi = hi.max(d);
            }
            ((lo, hi), 201)
        }
    };
    let fam = existence::end_states_general_on(&r.flux, alpha, m_range, n_samples, r.domain, &cfg);

    let chosen = if scenario.wave.l_plus.is_some() || scenario.wave.l_minus.is_some() {
        Some(resolve_wave(scenario, &r, &pattern)?)
    } else {
        None
    };
    if fam.is_empty() && chosen.is_none() {
        return Err(CliError::Refused(format!(
            "no admissible end states over slopes [{}, {}]",
            m_range.0, m_range.1
        )));
    }

    let mut sink = OutputSink::new(out)?;
    sink.write(
        "endstates.csv",
        family_csv(&fam, r.velocity.scale()).as_bytes(),
    )?;
    if let Some(spec) = &chosen {
        sink.write_json("chosen_pair.json", &WaveSpecReport::of(spec))?;
    }
    let summary = serde_json::json!({
        "alpha": alpha,
        "members": fam.members.len(),
        "chosen_l_minus": chosen.as_ref().map(|s| s.l_minus),
        "chosen_l_plus": chosen.as_ref().map(|s| s.l_plus),
    });
    sink.finish("endstates", digest, summary)
}

/// Profile CSV plus metadata sidecar; the optional plateau block stretches
/// the crossing (D1) or both crossings (D2).
pub fn cmd_profile(
    scenario: &Scenario,
    digest: &str,
    out: &Path,
) -> Result<RunManifest, CliError> {
    let r = resolve(scenario)?;
    let pattern = resolve_pattern(scenario, &r)?;
    let spec = resolve_wave(scenario, &r, &pattern)?;
    let opts = scenario.profile_opts();
    let numerical = |e: profile::ProfileError| CliError::Numerical(e.to_string());

    let plateau = scenario.plateau.unwrap_or_default();
    let prof = match spec.regime {
        Regime::D2Front { .. } => {
            profile::profile_d2(&spec, plateau.xi1, plateau.xi3 - plateau.xi2, &opts)
                .map_err(numerical)?
        }
        _ => {
            let base = profile::xi_of_phi(&spec, &opts).map_err(numerical)?;
            if plateau.xi1 > 0.0 {
                profile::insert_plateau(&base, plateau.xi1).map_err(numerical)?
            } else {
                base
            }
        }
    };

    let mut sink = OutputSink::new(out)?;
    sink.write("profile.csv", profile_csv(&prof).as_bytes())?;
    sink.write_json("profile_meta.json", &ProfileMeta::of(&prof))?;
    let summary = serde_json::json!({
        "samples": prof.samples.len(),
        "speed": prof.speed,
        "sharp_left": prof.sharp_left(),
        "sharp_right": prof.sharp_right(),
        "increasing": prof.increasing,
    });
    sink.finish("profile", digest, summary)
}

/// Viscous family: per-eps profiles and the ordering / convergence /
/// jump-condition metrics.
pub fn cmd_viscosity(
    scenario: &Scenario,
    digest: &str,
    out: &Path,
) -> Result<RunManifest, CliError> {
    let r = resolve(scenario)?;
    let pattern = resolve_pattern(scenario, &r)?;
    let spec = resolve_wave(scenario, &r, &pattern)?;
    let opts = scenario.profile_opts();
    let xi1 = scenario.plateau.map(|p| p.xi1).unwrap_or(0.0);
    let fam = viscosity::build_family(&spec, &scenario.eps_list.0, xi1, &opts)
        .map_err(|e| CliError::Numerical(e.to_string()))?;
    let ordering = viscosity::ordering_check(&fam, scenario.numerics.tail_tol);
    let convergence =
        viscosity::convergence_check(&fam, scenario.numerics.delta, scenario.numerics.conv_tol);
    let rh = viscosity::rankine_hugoniot_check(&fam.limit, &spec.flux);

    let mut csv = String::from("eps,xi,phi\n");
    for (eps, p) in &fam.profiles {
        for s in &p.samples {
            let _ = writeln!(csv, "{},{},{}", fmt_f64(*eps), fmt_f64(s.xi), fmt_f64(s.phi));
        }
    }
    let mut sink = OutputSink::new(out)?;
    sink.write("viscosity_family.csv", csv.as_bytes())?;
    #[derive(Serialize)]
    struct Metrics<'a> {
        eps_list: &'a [f64],
        spot_check_dev: f64,
        ordering: &'a viscosity::OrderingReport,
        convergence: &'a viscosity::ConvergenceReport,
        rankine_hugoniot: &'a viscosity::RankineHugoniotReport,
        limit: viscosity::StepLimit,
    }
    sink.write_json(
        "viscosity_metrics.json",
        &Metrics {
            eps_list: &fam.eps_list,
            spot_check_dev: fam.spot_check_dev,
            ordering: &ordering,
            convergence: &convergence,
            rankine_hugoniot: &rh,
            limit: fam.limit,
        },
    )?;
    let summary = serde_json::json!({
        "ordering_holds": ordering.holds,
        "mirrored_holds": ordering.mirrored_holds,
        "non_increasing": convergence.non_increasing,
        "converged": convergence.converged,
        "rh_max_residual": rh.max_residual(),
    });
    sink.finish("viscosity", digest, summary)
}

// ---------------------------------------------------------------------------
// bundled reproduction scenarios

/// Bundled reference scenarios: quadratic vehicular data and exponential
/// vehicular/pedestrian data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReproduceTag {
    Fig5,
    Fig6,
    Fig7,
}

impl std::str::FromStr for ReproduceTag {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fig5" => Ok(Self::Fig5),
            "fig6" => Ok(Self::Fig6),
            "fig7" => Ok(Self::Fig7),
            other => Err(format!("unknown tag {other:?} (expected fig5, fig6 or fig7)")),
        }
    }
}

/// The quadratic vehicular scenario: 150 cars/km, 130 km/h, anticipation
/// gain 1/15800, sign change pinned at 88/150 through `sigma` (the
/// dimensional `(tau, h) -> sigma` convention is not settled, so `sigma` is
/// set explicitly).
pub fn fig5_scenario() -> Scenario {
    let alpha = 88.0 / 150.0;
    Scenario {
        velocity: VelocityConfig::Quadratic { v_max: 130.0 },
        diffusivity: DiffusivityConfig::HvSquared {
            h: 1.0 / 15800.0,
            tau: None,
            sigma: Some(existence::sigma_from_alpha(alpha)),
        },
        frame: Some(DimensionalFrame { rho_max: 150.0, v_max: 130.0 }),
        wave: WaveConfig { l_plus: Some(147.0 / 150.0), ..Default::default() },
        numerics: NumericsConfig::default(),
        eps_list: EpsListConfig::default(),
        plateau: None,
    }
}

/// The exponential vehicular scenario (`gamma = 1`), sign change pinned
/// directly at 89/150.
pub fn fig6_scenario() -> Scenario {
    Scenario {
        velocity: VelocityConfig::ExponentialA { v_max: 130.0, gamma: 1.0, a: 0.0 },
        diffusivity: DiffusivityConfig::PinnedAlpha { alpha: 89.0 / 150.0 },
        frame: Some(DimensionalFrame { rho_max: 150.0, v_max: 130.0 }),
        wave: WaveConfig { l_plus: Some(147.0 / 150.0), ..Default::default() },
        numerics: NumericsConfig::default(),
        eps_list: EpsListConfig::default(),
        plateau: None,
    }
}

/// The rush-hour pedestrian scenario: 6 pedestrians/m, 1.7 m/s,
/// `gamma = 1.788`, velocity-proportional anticipation with `h = 1.5` s and
/// `tau = 0.5` s.
pub fn fig7_scenario() -> Scenario {
    Scenario {
        velocity: VelocityConfig::ExponentialA { v_max: 1.7, gamma: 1.788, a: 0.0 },
        diffusivity: DiffusivityConfig::Hv { h: 1.5, tau: 0.5 },
        frame: Some(DimensionalFrame { rho_max: 6.0, v_max: 1.7 }),
        wave: WaveConfig::default(),
        numerics: NumericsConfig::default(),
        eps_list: EpsListConfig::default(),
        plateau: None,
    }
}

pub fn builtin_scenario(tag: ReproduceTag) -> Scenario {
    match tag {
        ReproduceTag::Fig5 => fig5_scenario(),
        ReproduceTag::Fig6 => fig6_scenario(),
        ReproduceTag::Fig7 => fig7_scenario(),
    }
}

/// Emits the flow and diffusivity curves over the dimensional grid with the
/// distinguished densities marked, plus the end-state check (fig5, fig6) or
/// the existence verdict (fig7).
pub fn cmd_reproduce(tag: ReproduceTag, out: &Path) -> Result<RunManifest, CliError> {
    let scenario = builtin_scenario(tag);
    let digest = scenario_digest(
        &toml::to_string(&scenario).map_err(|e| CliError::Numerical(e.to_string()))?,
    );
    let r = resolve(&scenario)?;
    let frame = scenario.frame.expect("bundled scenarios carry a frame");
    let pattern = resolve_pattern(&scenario, &r)?;
    let cfg = scenario.scan_config();

    // dimensional curves: f in (count / time), D in the model's own units
    let mut flux_csv = String::from("rho,f\n");
    let mut diff_csv = String::from("rho,d\n");
    for x in crate::numerics::linspace(0.0, 1.0, 600) {
        let rho_dim = frame.to_dimensional(x);
        let _ = writeln!(flux_csv, "{},{}", fmt_f64(rho_dim), fmt_f64(frame.rho_max * r.flux.eval(x)));
        let _ = writeln!(diff_csv, "{},{}", fmt_f64(rho_dim), fmt_f64(r.diffusivity.eval(x)));
    }

    let inflections: Vec<f64> =
        fluxgeom::inflection_points(&r.flux).iter().map(|&x| frame.to_dimensional(x)).collect();
    let alpha = pattern.alpha();

    let mut sink = OutputSink::new(out)?;
    sink.write("flux_curve.csv", flux_csv.as_bytes())?;
    sink.write("diffusivity_curve.csv", diff_csv.as_bytes())?;

    let summary = match tag {
        ReproduceTag::Fig5 | ReproduceTag::Fig6 => {
            let spec = resolve_wave(&scenario, &r, &pattern)?;
            #[derive(Serialize)]
            struct Markers {
                alpha_dim: Option<f64>,
                inflection_dim: Vec<f64>,
                l_minus_dim: f64,
                l_plus_dim: f64,
                speed: f64,
            }
            let markers = Markers {
                alpha_dim: alpha.map(|a| frame.to_dimensional(a)),
                inflection_dim: inflections.clone(),
                l_minus_dim: frame.to_dimensional(spec.l_minus),
                l_plus_dim: frame.to_dimensional(spec.l_plus),
                speed: spec.speed,
            };
            sink.write_json("markers.json", &markers)?;
            sink.write_json("endstate_check.json", &WaveSpecReport::of(&spec))?;
            serde_json::json!({
                "alpha_dim": markers.alpha_dim,
                "inflection_dim": markers.inflection_dim,
                "l_minus_dim": markers.l_minus_dim,
                "l_plus_dim": markers.l_plus_dim,
            })
        }
        ReproduceTag::Fig7 => {
            // existence verdict: the D1 pattern plus a nonempty family
            let is_d1 = matches!(pattern.classification, PatternClass::D1 { .. });
            let family = alpha
                .map(|a| {
                    let mut lo = f64::INFINITY;
                    let mut hi = f64::NEG_INFINITY;
                    for x in crate::numerics::linspace(1e-6, 1.0 - 1e-6, 512) {
                        let d = r.flux.deriv(x);
                        lo = lo.min(d);
                        hi = hi.max(d);
                    }
                    existence::end_states_general_on(&r.flux, a, (lo, hi), 201, r.domain, &cfg)
                })
                .filter(|fam| !fam.is_empty());
            let satisfied = is_d1 && family.is_some();
            #[derive(Serialize)]
            struct Verdict {
                d1_pattern: bool,
                alpha_dim: Option<f64>,
                inflection_dim: Vec<f64>,
                admissible_members: usize,
                existence_satisfied: bool,
            }
            let verdict = Verdict {
                d1_pattern: is_d1,
                alpha_dim: alpha.map(|a| frame.to_dimensional(a)),
                inflection_dim: inflections,
                admissible_members: family.as_ref().map(|f| f.members.len()).unwrap_or(0),
                existence_satisfied: satisfied,
            };
            sink.write_json("verdict.json", &verdict)?;
            if let Some(fam) = &family {
                sink.write("endstates.csv", family_csv(fam, r.velocity.scale()).as_bytes())?;
            }
            serde_json::json!({
                "existence_satisfied": satisfied,
                "alpha_dim": alpha.map(|a| frame.to_dimensional(a)),
            })
        }
    };
    sink.finish("reproduce", &digest, summary)
}

// ---------------------------------------------------------------------------
// top-level dispatch used by the binary

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(format!("unknown format {other:?} (expected csv or json)")),
        }
    }
}

/// Runs one subcommand against a scenario file. Returns the manifest so
/// callers can render a summary.
pub fn run_with_config(
    command: &str,
    config: &Path,
    out: &Path,
) -> Result<RunManifest, CliError> {
    let text = fs::read_to_string(config)
        .map_err(|e| config_err(format!("cannot read {}: {e}", config.display())))?;
    let scenario = Scenario::from_toml(&text)?;
    let digest = scenario_digest(&text);
    match command {
        "signs" => cmd_signs(&scenario, &digest, out),
        "existence" => cmd_existence(&scenario, &digest, out),
        "endstates" => cmd_endstates(&scenario, &digest, out),
        "profile" => cmd_profile(&scenario, &digest, out),
        "viscosity" => cmd_viscosity(&scenario, &digest, out),
        other => Err(config_err(format!("unknown command {other:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[velocity]
kind = "quadratic"
v_max = 1.0

[diffusivity]
kind = "hv_squared"
h = 1.0
sigma = 0.0208333333333333

[wave]
l_plus = 0.9045084971874737
"#;

    #[test]
    fn scenario_parses_with_defaults() {
        let s = Scenario::from_toml(MINIMAL).unwrap();
        assert_eq!(s.numerics.grid_n, 4096);
        assert_eq!(s.eps_list.0, vec![1.0, 0.5, 0.1, 0.01]);
        assert!(s.plateau.is_none());
        assert!(matches!(s.velocity, VelocityConfig::Quadratic { .. }));
    }

    #[test]
    fn scenario_round_trips_through_toml() {
        let s = Scenario::from_toml(MINIMAL).unwrap();
        let text = toml::to_string(&s).unwrap();
        let s2 = Scenario::from_toml(&text).unwrap();
        assert_eq!(toml::to_string(&s2).unwrap(), text);
    }

    #[test]
    fn scenario_rejects_conflicting_selectors() {
        let bad = format!("{MINIMAL}\nl_minus = 0.2\n");
        // appending to the [wave] table adds a second selector
        assert!(matches!(Scenario::from_toml(&bad), Err(CliError::Config(_))));
    }

    #[test]
    fn scenario_rejects_bad_numerics() {
        let bad = format!("{MINIMAL}\n[numerics]\ntol_root = -1.0\n");
        assert!(matches!(Scenario::from_toml(&bad), Err(CliError::Config(_))));
    }

    #[test]
    fn scenario_rejects_unknown_keys() {
        let bad = format!("{MINIMAL}\n[numerics]\nnot_a_knob = 1\n");
        assert!(Scenario::from_toml(&bad).is_err());
    }

    #[test]
    fn sigma_calibration_requires_quadratic_law() {
        let bad = r#"
[velocity]
kind = "kladek"
v_max = 1.0
gamma = 1.0

[diffusivity]
kind = "hv_squared"
h = 1.0
sigma = 0.5
"#;
        let s = Scenario::from_toml(bad).unwrap();
        assert!(matches!(resolve(&s), Err(CliError::Config(_))));
    }

    #[test]
    fn exit_codes_follow_the_contract() {
        assert_eq!(config_err("x").exit_code(), 2);
        assert_eq!(CliError::Refused("x".into()).exit_code(), 3);
        assert_eq!(CliError::Numerical("x".into()).exit_code(), 4);
    }

    #[test]
    fn float_formatting_round_trips() {
        for &x in &[0.1, 2.0 / 3.0, 88.0 / 150.0, -0.2538222222] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
    }
}
