//! Experiment configuration: a JSON document with strict keys.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub path: PathConfig,
    pub drive: DriveConfig,
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Vec<SweepAxis>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    /// Two delta wells on a square well; path parameters are `(ε_c, ε_r)`.
    Deltawell {
        a: f64,
        gamma_left: f64,
        gamma_right: f64,
        beta: f64,
        #[serde(default = "default_truncation")]
        truncation: f64,
    },
    /// Λ system over `(ε, δ)`; the drive amplitude is the field `ℰ`.
    Lambda {
        #[serde(default)]
        e_g: f64,
        e_e: f64,
        #[serde(default = "one")]
        dipole: f64,
    },
    /// `H₀(λ) = h0 + Σ_k λ_k·h0_gradient[k]`, constant `H′ = hprime`.
    Matrix {
        params: Vec<String>,
        h0: Vec<Vec<f64>>,
        #[serde(default)]
        h0_gradient: Vec<Vec<Vec<f64>>>,
        hprime: Vec<Vec<f64>>,
        roles: RolesConfig,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RolesConfig {
    pub state0: usize,
    pub auxiliary: Vec<usize>,
    pub state2: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PathConfig {
    /// `ε_r = γ_r² + Λ_r cos Ωt`, `ε_c = β² + Λ_c sin Ωt` (delta wells only).
    DepthEllipse {
        lambda_r: f64,
        lambda_c: f64,
        #[serde(default)]
        units: DepthUnits,
        omega: f64,
    },
    Circle {
        center: Vec<f64>,
        radius: f64,
        #[serde(default)]
        start: f64,
        omega: f64,
        #[serde(default)]
        easing: f64,
    },
    Ellipse {
        center: Vec<f64>,
        cos_amp: Vec<f64>,
        sin_amp: Vec<f64>,
        omega: f64,
        #[serde(default)]
        easing: f64,
    },
    /// Cubic spline through the points.
    Waypoints {
        points: Vec<Vec<f64>>,
        #[serde(default = "yes")]
        closed: bool,
        omega: f64,
        #[serde(default)]
        easing: f64,
    },
    /// Parameters held fixed; `point` defaults to the model's own depths.
    Static {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        point: Option<Vec<f64>>,
        omega: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DepthUnits {
    /// Multiples of `E_u = γ_r² − β²`.
    #[default]
    EnergyUnit,
    Absolute,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveConfig {
    pub amplitude: f64,
    #[serde(default)]
    pub omega_rule: OmegaRuleConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum OmegaRuleConfig {
    /// Resonance tracking with both drive sidebands in the Stark shifts.
    #[default]
    Tracked,
    /// Resonance tracking with the static Stark formula.
    TrackedStatic,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Full,
    Rwa,
    Geometric,
    #[default]
    All,
}

impl Mode {
    pub fn full(self) -> bool {
        matches!(self, Mode::Full | Mode::All)
    }
    pub fn rwa(self) -> bool {
        matches!(self, Mode::Rwa | Mode::All)
    }
    pub fn geometric(self) -> bool {
        matches!(self, Mode::Geometric | Mode::All)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub mode: Mode,
    pub cycles: usize,
    pub steps_per_period: usize,
    pub step_tolerance: f64,
    pub samples_per_cycle: usize,
    pub segments: usize,
    pub segment_tolerance: f64,
    /// Probe times of the adiabaticity report.
    pub probes: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mode: Mode::All,
            cycles: 1,
            steps_per_period: 40,
            step_tolerance: 1e-6,
            samples_per_cycle: 200,
            segments: 64,
            segment_tolerance: 1e-8,
            probes: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub prefix: String,
    /// Keep every `stride`-th sample of time series.
    pub stride: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { prefix: "georabi".into(), stride: 1 }
    }
}

/// One sweep axis; several axes span a Cartesian grid, the last varying fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub name: SweepParam,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    /// Uniform scaling of the path about its center.
    Scale,
    LambdaR,
    LambdaC,
    Radius,
    Omega,
    Amplitude,
}

impl SweepParam {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepParam::Scale => "scale",
            SweepParam::LambdaR => "lambda_r",
            SweepParam::LambdaC => "lambda_c",
            SweepParam::Radius => "radius",
            SweepParam::Omega => "omega",
            SweepParam::Amplitude => "amplitude",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "scale" => SweepParam::Scale,
            "lambda_r" => SweepParam::LambdaR,
            "lambda_c" => SweepParam::LambdaC,
            "radius" => SweepParam::Radius,
            "omega" => SweepParam::Omega,
            "amplitude" => SweepParam::Amplitude,
            _ => return None,
        })
    }
}

fn default_truncation() -> f64 {
    0.99
}
fn one() -> f64 {
    1.0
}
fn yes() -> bool {
    true
}

pub const PRESETS: [&str; 2] = ["fig2", "lambda-circle"];

/// Built-in configurations for the two worked examples.
pub fn preset(name: &str) -> Result<ExperimentConfig, CliError> {
    match name {
        "fig2" => {
            let a = 44.0;
            Ok(ExperimentConfig {
                model: ModelConfig::Deltawell { a, gamma_left: 1.0, gamma_right: 22.0 / a, beta: 7.8 / a, truncation: 0.99 },
                path: PathConfig::DepthEllipse { lambda_r: 0.037, lambda_c: 0.024, units: DepthUnits::EnergyUnit, omega: 1e-2 },
                drive: DriveConfig { amplitude: 1e-4, omega_rule: OmegaRuleConfig::Tracked },
                run: RunConfig::default(),
                output: OutputConfig { prefix: "fig2".into(), stride: 1 },
                sweep: None,
            })
        }
        "lambda-circle" => Ok(ExperimentConfig {
            model: ModelConfig::Lambda { e_g: 0.0, e_e: 50.0, dipole: 1.0 },
            path: PathConfig::Circle { center: vec![0.0, 0.0], radius: 1.0, start: 0.0, omega: 0.02, easing: 0.0 },
            drive: DriveConfig { amplitude: 0.01, omega_rule: OmegaRuleConfig::Tracked },
            run: RunConfig::default(),
            output: OutputConfig { prefix: "lambda_circle".into(), stride: 1 },
            sweep: None,
        }),
        _ => Err(CliError::Config(format!("unknown preset `{name}` (available: {})", PRESETS.join(", ")))),
    }
}

/// Parses and validates a JSON document; errors name the offending field.
pub fn parse_config(document: &str) -> Result<ExperimentConfig, CliError> {
    let de = &mut serde_json::Deserializer::from_str(document);
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        if path == "." {
            CliError::Config(e.into_inner().to_string())
        } else {
            CliError::Config(format!("{path}: {}", e.into_inner()))
        }
    })?;
    cfg.validate()?;
    Ok(cfg)
}

/// Stable serialization used for hashing and round trips.
pub fn canonical_json(cfg: &ExperimentConfig) -> String {
    serde_json::to_string_pretty(cfg).expect("configs always serialize")
}

/// SHA-256 of the canonical form with the output prefix blanked, so equal
/// physics gives equal hashes wherever the files go.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let mut c = cfg.clone();
    c.output.prefix.clear();
    Sha256::digest(canonical_json(&c).as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

struct Checker {
    errors: Vec<String>,
}

impl Checker {
    fn finite(&mut self, path: &str, v: f64) {
        if !v.is_finite() {
            self.errors.push(format!("{path}: value must be finite, got {v}"));
        }
    }
    fn positive(&mut self, path: &str, v: f64) {
        if !(v > 0.0 && v.is_finite()) {
            self.errors.push(format!("{path}: value must be finite and positive, got {v}"));
        }
    }
    fn all_finite(&mut self, path: &str, vs: &[f64]) {
        for (i, v) in vs.iter().enumerate() {
            self.finite(&format!("{path}[{i}]"), *v);
        }
    }
    fn square(&mut self, path: &str, m: &[Vec<f64>], n: usize) {
        if m.len() != n || m.iter().any(|r| r.len() != n) {
            self.errors.push(format!("{path}: expected a {n}×{n} table"));
        }
        for (i, r) in m.iter().enumerate() {
            self.all_finite(&format!("{path}[{i}]"), r);
        }
    }
    fn fail(&mut self, msg: String) {
        self.errors.push(msg);
    }
}

impl ExperimentConfig {
    /// Number of path parameters the model expects.
    pub fn param_count(&self) -> usize {
        match &self.model {
            ModelConfig::Deltawell { .. } | ModelConfig::Lambda { .. } => 2,
            ModelConfig::Matrix { params, .. } => params.len(),
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let mut c = Checker { errors: Vec::new() };
        match &self.model {
            ModelConfig::Deltawell { a, gamma_left, gamma_right, beta, truncation } => {
                c.positive("model.a", *a);
                c.positive("model.gamma_left", *gamma_left);
                c.finite("model.gamma_right", *gamma_right);
                c.finite("model.beta", *beta);
                if !(*truncation > 0.0 && *truncation <= 1.0) {
                    c.fail(format!("model.truncation: must lie in (0, 1], got {truncation}"));
                }
            }
            ModelConfig::Lambda { e_g, e_e, dipole } => {
                c.finite("model.e_g", *e_g);
                c.finite("model.e_e", *e_e);
                c.positive("model.dipole", *dipole);
            }
            ModelConfig::Matrix { params, h0, h0_gradient, hprime, roles } => {
                let n = h0.len();
                if n < 2 {
                    c.fail("model.h0: at least a 2×2 table is required".into());
                }
                c.square("model.h0", h0, n);
                c.square("model.hprime", hprime, n);
                if !h0_gradient.is_empty() && h0_gradient.len() != params.len() {
                    c.fail(format!("model.h0_gradient: expected {} tables, one per parameter", params.len()));
                }
                for (k, g) in h0_gradient.iter().enumerate() {
                    c.square(&format!("model.h0_gradient[{k}]"), g, n);
                }
                if params.is_empty() {
                    c.fail("model.params: at least one parameter is required".into());
                }
                let idx = std::iter::once(roles.state0).chain(roles.auxiliary.iter().copied()).chain(std::iter::once(roles.state2));
                if idx.clone().any(|i| i >= n) {
                    c.fail(format!("model.roles: indices must be below {n}"));
                }
            }
        }
        let dim = self.param_count();
        let check_dim = |c: &mut Checker, path: &str, v: &[f64]| {
            if v.len() != dim {
                c.fail(format!("{path}: expected {dim} components, got {}", v.len()));
            }
            c.all_finite(path, v);
        };
        match &self.path {
            PathConfig::DepthEllipse { lambda_r, lambda_c, omega, .. } => {
                if !matches!(self.model, ModelConfig::Deltawell { .. }) {
                    c.fail("path.kind: `depth_ellipse` needs the deltawell model".into());
                }
                c.finite("path.lambda_r", *lambda_r);
                c.finite("path.lambda_c", *lambda_c);
                c.positive("path.omega", *omega);
            }
            PathConfig::Circle { center, radius, start, omega, easing } => {
                check_dim(&mut c, "path.center", center);
                if dim != 2 {
                    c.fail("path.kind: circles need a two-parameter model".into());
                }
                c.finite("path.radius", *radius);
                c.finite("path.start", *start);
                c.positive("path.omega", *omega);
                c.finite("path.easing", *easing);
            }
            PathConfig::Ellipse { center, cos_amp, sin_amp, omega, easing } => {
                check_dim(&mut c, "path.center", center);
                check_dim(&mut c, "path.cos_amp", cos_amp);
                check_dim(&mut c, "path.sin_amp", sin_amp);
                c.positive("path.omega", *omega);
                c.finite("path.easing", *easing);
            }
            PathConfig::Waypoints { points, omega, easing, .. } => {
                if points.len() < 2 {
                    c.fail("path.points: at least two waypoints are required".into());
                }
                for (i, p) in points.iter().enumerate() {
                    check_dim(&mut c, &format!("path.points[{i}]"), p);
                }
                c.positive("path.omega", *omega);
                c.finite("path.easing", *easing);
            }
            PathConfig::Static { point, omega } => {
                match point {
                    Some(p) => check_dim(&mut c, "path.point", p),
                    None if !matches!(self.model, ModelConfig::Deltawell { .. }) => {
                        c.fail("path.point: required for this model".into());
                    }
                    None => {}
                }
                c.positive("path.omega", *omega);
            }
        }
        if matches!(self.model, ModelConfig::Deltawell { .. }) && !matches!(self.path, PathConfig::DepthEllipse { .. } | PathConfig::Static { .. }) {
            c.fail("path.kind: the deltawell model takes `depth_ellipse` or `static` paths".into());
        }
        c.finite("drive.amplitude", self.drive.amplitude);
        if let OmegaRuleConfig::Fixed(w) = self.drive.omega_rule {
            c.positive("drive.omega_rule.fixed", w);
        }
        let r = &self.run;
        if r.cycles == 0 {
            c.fail("run.cycles: must be at least 1".into());
        }
        if r.steps_per_period < 40 {
            c.fail(format!("run.steps_per_period: at least 40 required, got {}", r.steps_per_period));
        }
        c.positive("run.step_tolerance", r.step_tolerance);
        c.positive("run.segment_tolerance", r.segment_tolerance);
        if r.samples_per_cycle == 0 || r.segments == 0 || r.probes < 2 {
            c.fail("run: samples_per_cycle and segments must be positive, probes at least 2".into());
        }
        if self.output.stride == 0 {
            c.fail("output.stride: must be at least 1".into());
        }
        if self.output.prefix.is_empty() {
            c.fail("output.prefix: must not be empty".into());
        }
        if let Some(axes) = &self.sweep {
            for (i, ax) in axes.iter().enumerate() {
                if ax.values.is_empty() {
                    c.fail(format!("sweep[{i}].values: must not be empty"));
                }
                c.all_finite(&format!("sweep[{i}].values"), &ax.values);
            }
        }
        if c.errors.is_empty() {
            Ok(())
        } else {
            Err(CliError::Config(c.errors.join("; ")))
        }
    }
}

/// Parses `name=v1,v2,...` or `name=lo:hi:n` axes separated by `;`.
pub fn parse_sweep(spec: &str) -> Result<Vec<SweepAxis>, CliError> {
    let bad = |m: String| CliError::Config(format!("--sweep: {m}"));
    let mut axes = Vec::new();
    for part in spec.split(';').map(str::trim).filter(|p| !p.is_empty()) {
        let (name, vals) = part.split_once('=').ok_or_else(|| bad(format!("expected name=values in `{part}`")))?;
        let name = SweepParam::parse(name.trim()).ok_or_else(|| {
            bad(format!("unknown sweep parameter `{}` (scale, lambda_r, lambda_c, radius, omega, amplitude)", name.trim()))
        })?;
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad(format!("`{s}` is not a number")));
        let values = if vals.contains(':') {
            let f: Vec<&str> = vals.split(':').collect();
            if f.len() != 3 {
                return Err(bad(format!("range `{vals}` must read lo:hi:n")));
            }
            let (lo, hi) = (num(f[0])?, num(f[1])?);
            let n: usize = f[2].trim().parse().map_err(|_| bad(format!("`{}` is not a count", f[2])))?;
            match n {
                0 => return Err(bad("ranges need at least one point".into())),
                1 => vec![lo],
                _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
            }
        } else {
            vals.split(',').map(num).collect::<Result<Vec<_>, _>>()?
        };
        if values.iter().any(|v| !v.is_finite()) {
            return Err(bad("values must be finite".into()));
        }
        axes.push(SweepAxis { name, values });
    }
    if axes.is_empty() {
        return Err(bad("no axes given".into()));
    }
    Ok(axes)
}
