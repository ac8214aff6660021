//! JSON experiment configuration and its validation.

use std::path::PathBuf;
use std::sync::Arc;

use clap::ValueEnum;
use exterior_heat::verify::VerifyLevel;
use exterior_heat::{
    DomainSpec, Hole, InitialShape, MaskShape, OuterCondition, Preconditioner, SolverOptions,
    Stepping, ThetaExpr, ThetaField, ThetaSpec, TimeSchedule,
};
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("config field `{field}` is required for task `{task}`")]
    Missing {
        field: &'static str,
        task: &'static str,
    },
    #[error("config field `{field}` = {value} is outside the admissible range {range}")]
    OutOfRange {
        field: String,
        value: f64,
        range: &'static str,
    },
    #[error("config field `{field}`: {reason}")]
    Invalid { field: String, reason: String },
}

type Result<T> = std::result::Result<T, ConfigError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Profile,
    Pprofile,
    Evolve,
    Kernel,
    Mass,
    Rates,
    Slowdecay,
    Verify,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Profile => "profile",
            Task::Pprofile => "pprofile",
            Task::Evolve => "evolve",
            Task::Kernel => "kernel",
            Task::Mass => "mass",
            Task::Rates => "rates",
            Task::Slowdecay => "slowdecay",
            Task::Verify => "verify",
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: Option<Task>,
    pub domain: Option<DomainConfig>,
    pub theta: Option<ThetaConfig>,
    /// Outer condition for evolution tasks; profile tasks always hold `u = 1`.
    pub outer: Option<OuterConfig>,
    pub profile: Option<ProfileConfig>,
    pub schedule: Option<ScheduleConfig>,
    pub u0: Option<InitialShape>,
    pub kernel: Option<KernelConfig>,
    pub rates: Option<RatesConfig>,
    pub slowdecay: Option<SlowDecayConfig>,
    pub verify: Option<VerifyConfig>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendConfig {
    Radial,
    Cartesian,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub dimension: usize,
    pub backend: BackendConfig,
    pub hole: HoleConfig,
    pub truncation_radius: f64,
    pub spacing: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum HoleConfig {
    Ball { radius: f64 },
    Mask { shapes: Vec<ShapeConfig> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ShapeConfig {
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    Box {
        center: Vec<f64>,
        half_widths: Vec<f64>,
    },
}

/// A single number applies to every hole component.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ThetaConfig {
    Uniform(f64),
    Components(Vec<ThetaComponent>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ThetaComponent {
    Constant {
        value: f64,
    },
    Angular {
        mean: f64,
        amplitude: f64,
        harmonic: i32,
    },
    Linear {
        axis: usize,
        base: f64,
        slope: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OuterConfig {
    Dirichlet0,
    Neumann0,
    FixedOne,
}

impl From<OuterConfig> for OuterCondition {
    fn from(o: OuterConfig) -> Self {
        match o {
            OuterConfig::Dirichlet0 => OuterCondition::Dirichlet0,
            OuterConfig::Neumann0 => OuterCondition::Neumann0,
            OuterConfig::FixedOne => OuterCondition::FixedOne,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileConfig {
    pub ladder: Vec<f64>,
    pub window_radius: Option<f64>,
    pub window_tol: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub times: Option<Vec<f64>>,
    pub log_spaced: Option<LogSpacedConfig>,
    pub stepping: Option<SteppingConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogSpacedConfig {
    pub t_lo: f64,
    pub t_hi: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum SteppingConfig {
    Fixed { dt: f64 },
    Geometric { dt0: f64, growth: f64 },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    pub source: Vec<f64>,
    pub time: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatesConfig {
    pub window: [f64; 2],
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlowDecayConfig {
    pub g: RateFunction,
    #[serde(default = "default_bumps")]
    pub bumps: usize,
    #[serde(default = "default_eigen_resolution")]
    pub eigen_resolution: usize,
    pub max_extent: Option<f64>,
    /// Bump index to simulate on its own up to its target time.
    pub simulate: Option<usize>,
}

fn default_bumps() -> usize {
    5
}

fn default_eigen_resolution() -> usize {
    1000
}

/// Prescribed decreasing rate `g` for the slow-decay plan.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RateFunction {
    /// `min(1, 1/t)`.
    MinInverse,
    /// `(1 + t)^(-exponent)`.
    Power { exponent: f64 },
}

impl RateFunction {
    pub fn eval(self, t: f64) -> f64 {
        match self {
            RateFunction::MinInverse => {
                if t <= 1.0 {
                    1.0
                } else {
                    1.0 / t
                }
            }
            RateFunction::Power { exponent } => (1.0 + t).powf(-exponent),
        }
    }

    pub fn describe(self) -> String {
        match self {
            RateFunction::MinInverse => "min(1, 1/t)".into(),
            RateFunction::Power { exponent } => format!("(1 + t)^(-{exponent})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LevelConfig {
    Quick,
    Full,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    pub level: Option<LevelConfig>,
    pub cases: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PreconditionerConfig {
    Jacobi,
    Sgs,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_tol")]
    pub tol: f64,
    pub max_iter: Option<usize>,
    #[serde(default = "default_preconditioner")]
    pub preconditioner: PreconditionerConfig,
}

fn default_tol() -> f64 {
    1e-10
}

fn default_preconditioner() -> PreconditionerConfig {
    PreconditionerConfig::Jacobi
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: default_tol(),
            max_iter: None,
            preconditioner: default_preconditioner(),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    /// Also write the stiffness matrix in coordinate format.
    #[serde(default)]
    pub matrix: bool,
}

fn positive(field: &str, value: f64) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(ConfigError::OutOfRange {
            field: field.to_string(),
            value,
            range: "(0, inf)",
        })
    }
}

fn unit_interval(field: &str, value: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(ConfigError::OutOfRange {
            field: field.to_string(),
            value,
            range: "[0, 1]",
        })
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    fn require<'a, T>(
        &self,
        value: &'a Option<T>,
        field: &'static str,
        task: Task,
    ) -> Result<&'a T> {
        value.as_ref().ok_or(ConfigError::Missing {
            field,
            task: task.name(),
        })
    }

    /// Checks everything `task` reads.
    pub fn validate(&self, task: Task) -> Result<()> {
        if let Some(t) = self.task {
            if t != task {
                return Err(ConfigError::Invalid {
                    field: "task".into(),
                    reason: format!(
                        "config is for `{}` but `{}` was requested",
                        t.name(),
                        task.name()
                    ),
                });
            }
        }
        self.solver_options()?;
        if task == Task::Verify {
            return self.verify_settings().map(|_| ());
        }
        let domain = self.domain_spec(task)?;
        if task != Task::Slowdecay {
            self.theta_spec(task, OuterCondition::Dirichlet0)?;
        }
        match task {
            Task::Profile => {
                self.profile_ladder(task)?;
            }
            Task::Pprofile => {
                self.schedule(task, domain.spacing)?;
            }
            Task::Evolve => {
                self.schedule(task, domain.spacing)?;
                let u0 = self.require(&self.u0, "u0", task)?;
                self.check_support(u0, domain.truncation_radius, "domain.truncation_radius")?;
            }
            Task::Kernel => {
                let k = self.require(&self.kernel, "kernel", task)?;
                positive("kernel.time", k.time)?;
                if k.source.len() != domain.dimension {
                    return Err(ConfigError::Invalid {
                        field: "kernel.source".into(),
                        reason: format!("needs {} coordinates", domain.dimension),
                    });
                }
                self.stepping(domain.spacing)?;
            }
            Task::Mass | Task::Rates => {
                let (ladder, window) = self.profile_ladder(task)?;
                self.schedule(task, domain.spacing)?;
                let u0 = self.require(&self.u0, "u0", task)?;
                self.check_support(
                    u0,
                    window.unwrap_or(ladder[0] * 0.5),
                    "profile.window_radius",
                )?;
                if task == Task::Rates {
                    let r = self.require(&self.rates, "rates", task)?;
                    positive("rates.window[0]", r.window[0])?;
                    if !(r.window[1] > r.window[0]) {
                        return Err(ConfigError::Invalid {
                            field: "rates.window".into(),
                            reason: "needs lo < hi".into(),
                        });
                    }
                }
            }
            Task::Slowdecay => {
                let s = self.require(&self.slowdecay, "slowdecay", task)?;
                if let RateFunction::Power { exponent } = s.g {
                    positive("slowdecay.g.exponent", exponent)?;
                }
                if s.bumps == 0 {
                    return Err(ConfigError::Invalid {
                        field: "slowdecay.bumps".into(),
                        reason: "needs at least one bump".into(),
                    });
                }
                if let Some(n) = s.simulate {
                    if n == 0 || n > s.bumps {
                        return Err(ConfigError::Invalid {
                            field: "slowdecay.simulate".into(),
                            reason: format!("bump index must lie in 1..={}", s.bumps),
                        });
                    }
                }
                if let Some(m) = s.max_extent {
                    positive("slowdecay.max_extent", m)?;
                }
            }
            Task::Verify => unreachable!(),
        }
        Ok(())
    }

    fn check_support(&self, u0: &InitialShape, window: f64, against: &str) -> Result<()> {
        match u0.support_radius() {
            Some(r) if r <= window => Ok(()),
            Some(r) => Err(ConfigError::Invalid {
                field: "u0".into(),
                reason: format!("support reaches |x| = {r}, beyond {against} = {window}"),
            }),
            None if against == "domain.truncation_radius" => Ok(()),
            None => Err(ConfigError::Invalid {
                field: "u0".into(),
                reason: format!(
                    "shape `{}` has unbounded support; mass tasks need compact support",
                    u0.name()
                ),
            }),
        }
    }

    pub fn solver_options(&self) -> Result<SolverOptions> {
        let s = &self.solver;
        positive("solver.tol", s.tol)?;
        Ok(SolverOptions {
            tol: s.tol,
            max_iter: s.max_iter,
            preconditioner: match s.preconditioner {
                PreconditionerConfig::Jacobi => Preconditioner::Jacobi,
                PreconditionerConfig::Sgs => Preconditioner::SymmetricGaussSeidel,
            },
        })
    }

    pub fn domain_spec(&self, task: Task) -> Result<DomainSpec<f64>> {
        let d = self.require(&self.domain, "domain", task)?;
        if !(1..=3).contains(&d.dimension) {
            return Err(ConfigError::OutOfRange {
                field: "domain.dimension".into(),
                value: d.dimension as f64,
                range: "{1, 2, 3}",
            });
        }
        positive("domain.spacing", d.spacing)?;
        positive("domain.truncation_radius", d.truncation_radius)?;
        let hole = match &d.hole {
            HoleConfig::Ball { radius } => Hole::Ball {
                radius: positive("domain.hole.radius", *radius)?,
            },
            HoleConfig::Mask { shapes } => Hole::Mask(
                shapes
                    .iter()
                    .enumerate()
                    .map(|(k, s)| self.mask_shape(k, s, d.dimension))
                    .collect::<Result<_>>()?,
            ),
        };
        let spec = match d.backend {
            BackendConfig::Radial => {
                let Hole::Ball { radius } = hole else {
                    return Err(ConfigError::Invalid {
                        field: "domain.hole".into(),
                        reason: "the radial backend needs a ball hole".into(),
                    });
                };
                DomainSpec::radial(d.dimension, radius, d.truncation_radius, d.spacing)
            }
            BackendConfig::Cartesian => {
                DomainSpec::cartesian(d.dimension, hole, d.truncation_radius, d.spacing)
            }
        };
        spec.validate().map_err(|e| ConfigError::Invalid {
            field: "domain".into(),
            reason: e.to_string(),
        })?;
        Ok(spec)
    }

    fn mask_shape(&self, k: usize, s: &ShapeConfig, dim: usize) -> Result<MaskShape<f64>> {
        let field = format!("domain.hole.shapes[{k}]");
        let check_len = |name: &str, v: &[f64]| {
            if v.len() == dim {
                Ok(())
            } else {
                Err(ConfigError::Invalid {
                    field: format!("{field}.{name}"),
                    reason: format!("needs {dim} entries, got {}", v.len()),
                })
            }
        };
        Ok(match s {
            ShapeConfig::Ball { center, radius } => {
                check_len("center", center)?;
                MaskShape::Ball {
                    center: center.clone(),
                    radius: positive(&format!("{field}.radius"), *radius)?,
                }
            }
            ShapeConfig::Box {
                center,
                half_widths,
            } => {
                check_len("center", center)?;
                check_len("half_widths", half_widths)?;
                for (i, &w) in half_widths.iter().enumerate() {
                    positive(&format!("{field}.half_widths[{i}]"), w)?;
                }
                MaskShape::Box {
                    center: center.clone(),
                    half_widths: half_widths.clone(),
                }
            }
        })
    }

    /// Theta spec with `outer`; a uniform value is repeated for every component.
    pub fn theta_spec(&self, task: Task, outer: OuterCondition) -> Result<ThetaSpec<f64>> {
        let theta = self.require(&self.theta, "theta", task)?;
        let components = match theta {
            ThetaConfig::Uniform(t) => {
                let t = unit_interval("theta", *t)?;
                vec![ThetaField::Constant(t)]
            }
            ThetaConfig::Components(list) => list
                .iter()
                .enumerate()
                .map(|(k, c)| {
                    let field = format!("theta[{k}]");
                    Ok(match *c {
                        ThetaComponent::Constant { value } => {
                            ThetaField::Constant(unit_interval(&format!("{field}.value"), value)?)
                        }
                        ThetaComponent::Angular {
                            mean,
                            amplitude,
                            harmonic,
                        } => {
                            if !(mean - amplitude.abs() >= 0.0 && mean + amplitude.abs() <= 1.0) {
                                return Err(ConfigError::Invalid {
                                    field,
                                    reason: "mean +- amplitude must stay in [0, 1]".into(),
                                });
                            }
                            ThetaField::Sampled(ThetaExpr::Angular {
                                mean,
                                amplitude,
                                harmonic,
                            })
                        }
                        ThetaComponent::Linear { axis, base, slope } => {
                            ThetaField::Sampled(ThetaExpr::Linear { axis, base, slope })
                        }
                    })
                })
                .collect::<Result<_>>()?,
        };
        Ok(ThetaSpec { components, outer })
    }

    pub fn outer(&self, default: OuterCondition) -> OuterCondition {
        self.outer.map_or(default, Into::into)
    }

    /// Ladder radii and optional window radius.
    pub fn profile_ladder(&self, task: Task) -> Result<(Vec<f64>, Option<f64>)> {
        let p = self.require(&self.profile, "profile", task)?;
        if p.ladder.is_empty() {
            return Err(ConfigError::Invalid {
                field: "profile.ladder".into(),
                reason: "needs at least one radius".into(),
            });
        }
        for (k, &r) in p.ladder.iter().enumerate() {
            positive(&format!("profile.ladder[{k}]"), r)?;
        }
        if p.ladder.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(ConfigError::Invalid {
                field: "profile.ladder".into(),
                reason: "radii must increase strictly".into(),
            });
        }
        if let Some(w) = p.window_radius {
            positive("profile.window_radius", w)?;
            if !(w < p.ladder[0]) {
                return Err(ConfigError::Invalid {
                    field: "profile.window_radius".into(),
                    reason: "must lie inside the smallest ladder radius".into(),
                });
            }
        }
        if let Some(t) = p.window_tol {
            positive("profile.window_tol", t)?;
        }
        Ok((p.ladder.clone(), p.window_radius))
    }

    pub fn stepping(&self, spacing: f64) -> Result<Stepping<f64>> {
        let configured = self.schedule.as_ref().and_then(|s| s.stepping);
        Ok(match configured {
            None => Stepping::Geometric {
                dt0: spacing * spacing,
                growth: 1.05,
            },
            Some(SteppingConfig::Fixed { dt }) => {
                Stepping::Fixed(positive("schedule.stepping.dt", dt)?)
            }
            Some(SteppingConfig::Geometric { dt0, growth }) => {
                positive("schedule.stepping.dt0", dt0)?;
                if !(growth >= 1.0 && growth.is_finite()) {
                    return Err(ConfigError::OutOfRange {
                        field: "schedule.stepping.growth".into(),
                        value: growth,
                        range: "[1, inf)",
                    });
                }
                Stepping::Geometric { dt0, growth }
            }
        })
    }

    pub fn schedule(&self, task: Task, spacing: f64) -> Result<TimeSchedule<f64>> {
        let s = self.require(&self.schedule, "schedule", task)?;
        let stepping = self.stepping(spacing)?;
        let invalid = |e: exterior_heat::Error| ConfigError::Invalid {
            field: "schedule".into(),
            reason: e.to_string(),
        };
        match (&s.times, &s.log_spaced) {
            (Some(times), None) => TimeSchedule::new(times.clone(), stepping).map_err(invalid),
            (None, Some(l)) => {
                TimeSchedule::log_spaced(l.t_lo, l.t_hi, l.count, stepping).map_err(invalid)
            }
            _ => Err(ConfigError::Invalid {
                field: "schedule".into(),
                reason: "give exactly one of `times` and `log_spaced`".into(),
            }),
        }
    }

    pub fn verify_settings(&self) -> Result<(VerifyLevel, Option<usize>, Option<u64>)> {
        let v = self.verify.as_ref();
        let level = match v.and_then(|v| v.level) {
            None | Some(LevelConfig::Quick) => VerifyLevel::Quick,
            Some(LevelConfig::Full) => VerifyLevel::Full,
        };
        let cases = v.and_then(|v| v.cases);
        if cases == Some(0) {
            return Err(ConfigError::Invalid {
                field: "verify.cases".into(),
                reason: "needs at least one case".into(),
            });
        }
        Ok((level, cases, v.and_then(|v| v.seed)))
    }
}

/// Repeats a uniform theta over every hole component of `grid`.
pub fn fit_components(theta: &mut ThetaSpec<f64>, grid: &Arc<exterior_heat::Grid<f64>>) {
    if let Some(t) = theta.uniform_constant() {
        theta.components = vec![ThetaField::Constant(t); grid.hole_components()];
    }
}
