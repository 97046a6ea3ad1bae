//! Experiment configuration: a strict TOML document.
//!
//! Every table and field is optional; missing entries take the defaults of
//! the planar obstacle-avoidance experiment. Unknown keys are rejected.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use safechain::chain::Channel;
use safechain::{
    auto_gains, BarrierChain, BarrierOracle, CircularObstacle, ControllerMode, DisturbanceProfile,
    GainFunction, GainSchedule, HalfPlane, IntegratorChain, NoiseRange, NominalGains,
    PolynomialBarrier, PolynomialTerm, Scenario, Sinusoid,
};

use crate::error::CliError;

pub const PAPER_FIG1: &str = include_str!("../presets/paper_fig1.cfg");
pub const TRIPLE_DEMO: &str = include_str!("../presets/triple_demo.cfg");

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub system: SystemConfig,
    pub barrier: BarrierConfig,
    pub gains: GainsConfig,
    pub disturbance: DisturbanceConfig,
    pub controller: ControllerConfig,
    pub scenario: ScenarioConfig,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemConfig {
    pub order: usize,
    pub axes: usize,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self { order: 2, axes: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BarrierConfig {
    /// Smoothing constants `μ₁ … μₙ`; defaults to 0.2 per level.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<Vec<f64>>,
    pub include_time_partial: bool,
    pub shape: ShapeConfig,
}

impl Default for BarrierConfig {
    fn default() -> Self {
        Self {
            mu: None,
            include_time_partial: true,
            shape: ShapeConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ShapeConfig {
    /// `½(‖p − center‖² − radius²)` on the positions.
    Circle {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
        #[serde(default = "default_radius")]
        radius: f64,
    },
    /// `normalᵀx − offset` on the leading state entries.
    HalfPlane { normal: Vec<f64>, offset: f64 },
    /// `constant + Σ coefficient · Π xⱼ^{powersⱼ}`.
    Polynomial {
        #[serde(default)]
        constant: f64,
        terms: Vec<TermConfig>,
    },
}

fn default_radius() -> f64 {
    1.0
}

impl Default for ShapeConfig {
    fn default() -> Self {
        ShapeConfig::Circle {
            center: None,
            radius: default_radius(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermConfig {
    pub coefficient: f64,
    pub powers: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GainsConfig {
    /// Fixed `ϱ₁ … ϱₙ`. When absent, `ϱ₁ … ϱₙ₋₁` come from the initial-gain
    /// rules and `ϱₙ = rho_last`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<Vec<f64>>,
    pub rho_last: f64,
    pub margin: f64,
    pub vartheta: f64,
    pub upsilon: UpsilonConfig,
}

impl Default for GainsConfig {
    fn default() -> Self {
        Self {
            rho: None,
            rho_last: 3.0,
            margin: 0.1,
            vartheta: 1.0,
            upsilon: UpsilonConfig::Linear,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum UpsilonConfig {
    #[default]
    Linear,
    Polynomial {
        p: f64,
    },
    Exponential {
        a: f64,
        alpha: f64,
    },
    PrescribedTime {
        upsilon0: f64,
        horizon: f64,
    },
}

impl From<UpsilonConfig> for GainFunction {
    fn from(u: UpsilonConfig) -> Self {
        match u {
            UpsilonConfig::Linear => GainFunction::Linear,
            UpsilonConfig::Polynomial { p } => GainFunction::Polynomial { p },
            UpsilonConfig::Exponential { a, alpha } => GainFunction::Exponential { a, alpha },
            UpsilonConfig::PrescribedTime { upsilon0, horizon } => {
                GainFunction::PrescribedTime { upsilon0, horizon }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DisturbanceConfig {
    pub enabled: bool,
    pub noise_range: NoiseRangeConfig,
    /// One entry per state component; defaults to the planar reference
    /// profile.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub channels: Option<Vec<ChannelConfig>>,
}

impl Default for DisturbanceConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            noise_range: NoiseRangeConfig::Unit,
            channels: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseRangeConfig {
    #[default]
    Unit,
    Symmetric,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelConfig {
    pub noise: f64,
    pub sinusoids: Vec<SinusoidConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SinusoidConfig {
    pub amplitude: f64,
    pub frequency: f64,
    #[serde(default)]
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControllerConfig {
    pub mode: ModeConfig,
    pub kp: f64,
    pub kd: f64,
    /// Feedback on levels 3…n of the nominal law.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub higher: Vec<f64>,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        let g = NominalGains::default();
        Self {
            mode: ModeConfig::Srcbf,
            kp: g.kp,
            kd: g.kd,
            higher: g.higher,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ModeConfig {
    Nominal,
    Sbcbf,
    #[default]
    Srcbf,
}

impl From<ModeConfig> for ControllerMode {
    fn from(m: ModeConfig) -> Self {
        match m {
            ModeConfig::Nominal => ControllerMode::Nominal,
            ModeConfig::Sbcbf => ControllerMode::Sbcbf,
            ModeConfig::Srcbf => ControllerMode::Srcbf,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    /// Initial state; defaults to rest at `(−1, …, −1)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    /// Goal position; defaults to `(4, …, 4)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub goal: Option<Vec<f64>>,
    pub t0: f64,
    pub t_final: f64,
    pub dt: f64,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            x0: None,
            goal: None,
            t0: 0.0,
            t_final: 10.0,
            dt: 1e-3,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: "out".into() }
    }
}

/// Parses a config document; errors carry the line and column.
pub fn parse(text: &str) -> Result<ExperimentConfig, CliError> {
    toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
}

/// Reads `path`, falling back to the bundled presets when a file of that
/// name does not exist.
pub fn load(path: &Path) -> Result<ExperimentConfig, CliError> {
    match std::fs::read_to_string(path) {
        Ok(text) => parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        }),
        Err(err) => match path.file_name().and_then(|n| n.to_str()) {
            Some("paper_fig1.cfg") if !path.exists() => parse(PAPER_FIG1),
            Some("triple_demo.cfg") if !path.exists() => parse(TRIPLE_DEMO),
            _ => Err(CliError::Config(format!(
                "cannot read {}: {err}",
                path.display()
            ))),
        },
    }
}

/// The built components of a config.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub scenario: Scenario,
    pub margin: f64,
    pub gains_fixed: bool,
}

impl ExperimentConfig {
    /// Fills every defaulted optional field with its concrete value.
    pub fn resolve(mut self) -> Result<Self, CliError> {
        let n = self.system.order;
        let m = self.system.axes;
        if n < 2 || m < 1 {
            return Err(CliError::Config(
                "system needs order >= 2 and axes >= 1".into(),
            ));
        }
        self.barrier.mu.get_or_insert_with(|| vec![0.2; n]);
        if let ShapeConfig::Circle { center, .. } = &mut self.barrier.shape {
            center.get_or_insert_with(|| vec![2.0; m]);
        }
        self.scenario.x0.get_or_insert_with(|| {
            let mut x = vec![0.0; n * m];
            x[..m].fill(-1.0);
            x
        });
        self.scenario.goal.get_or_insert_with(|| vec![4.0; m]);
        if self.disturbance.channels.is_none() {
            let reference = DisturbanceProfile::planar_reference();
            let channels = if n * m == reference.dim() {
                reference.channels.iter().map(channel_config).collect()
            } else {
                vec![ChannelConfig::default(); n * m]
            };
            self.disturbance.channels = Some(channels);
        }
        Ok(self)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn system(&self) -> Result<IntegratorChain, CliError> {
        IntegratorChain::new(self.system.order, self.system.axes).map_err(config_err)
    }

    pub fn oracle(&self) -> Arc<dyn BarrierOracle> {
        match &self.barrier.shape {
            ShapeConfig::Circle { center, radius } => Arc::new(CircularObstacle {
                center: center
                    .clone()
                    .unwrap_or_else(|| vec![2.0; self.system.axes]),
                radius: *radius,
            }),
            ShapeConfig::HalfPlane { normal, offset } => Arc::new(HalfPlane {
                normal: normal.clone(),
                offset: *offset,
            }),
            ShapeConfig::Polynomial { constant, terms } => Arc::new(PolynomialBarrier {
                constant: *constant,
                terms: terms
                    .iter()
                    .map(|t| PolynomialTerm {
                        coefficient: t.coefficient,
                        powers: t.powers.clone(),
                    })
                    .collect(),
            }),
        }
    }

    pub fn profile(&self) -> Option<DisturbanceProfile> {
        if !self.disturbance.enabled {
            return None;
        }
        let channels = self.disturbance.channels.as_ref()?;
        Some(DisturbanceProfile {
            channels: channels
                .iter()
                .map(|c| Channel {
                    noise: c.noise,
                    sinusoids: c
                        .sinusoids
                        .iter()
                        .map(|s| Sinusoid {
                            amplitude: s.amplitude,
                            frequency: s.frequency,
                            phase: s.phase,
                        })
                        .collect(),
                })
                .collect(),
            noise_range: match self.disturbance.noise_range {
                NoiseRangeConfig::Unit => NoiseRange::Unit,
                NoiseRangeConfig::Symmetric => NoiseRange::Symmetric,
            },
        })
    }

    /// Builds the scenario. Without fixed `rho` the gains come from
    /// [`auto_gains`] on the robust chain when disturbances are enabled and on
    /// the disturbance-free chain otherwise; every mode shares them.
    pub fn build(&self) -> Result<Experiment, CliError> {
        let cfg = self.clone().resolve()?;
        let system = cfg.system()?;
        let n = system.order();
        let function = GainFunction::from(cfg.gains.upsilon);
        let placeholder = {
            let mut g = vec![1.0; n];
            g[n - 1] = cfg.gains.rho_last;
            g
        };
        let rho = cfg.gains.rho.clone().unwrap_or(placeholder);
        let schedule =
            GainSchedule::new(rho, cfg.gains.vartheta, function, true).map_err(config_err)?;
        let disturbance = cfg.profile();
        let sc = cfg.scenario.clone();
        let c = &cfg.controller;
        if c.higher.len() > n.saturating_sub(2) {
            return Err(CliError::Config(format!(
                "controller.higher has {} entries but order {n} allows at most {}",
                c.higher.len(),
                n - 2
            )));
        }
        let mut scenario = Scenario {
            system,
            disturbance,
            oracle: cfg.oracle(),
            schedule,
            mu: cfg.barrier.mu.clone().unwrap_or_default(),
            include_time_partial: cfg.barrier.include_time_partial,
            mode: c.mode.into(),
            nominal: NominalGains {
                kp: c.kp,
                kd: c.kd,
                higher: c.higher.clone(),
            },
            x0: sc.x0.unwrap_or_default(),
            goal: sc.goal.unwrap_or_default(),
            t0: sc.t0,
            t_final: sc.t_final,
            dt: sc.dt,
            seed: sc.seed,
        };
        // Surface dimension and parameter problems as config errors.
        let template = gain_template(&scenario)?;
        template.system().check_dims(&scenario.x0, &scenario.goal)?;
        let gains_fixed = cfg.gains.rho.is_some();
        if !gains_fixed {
            scenario.schedule = auto_gains(&template, &scenario.x0, scenario.t0, cfg.gains.margin)
                .map_err(CliError::from_init)?
                .with_robust(true);
        }
        Ok(Experiment {
            scenario,
            margin: cfg.gains.margin,
            gains_fixed,
        })
    }
}

/// Chain used to derive and report gains: robust when disturbances act.
pub fn gain_template(scenario: &Scenario) -> Result<BarrierChain, CliError> {
    let robust = scenario.theta() > 0.0;
    BarrierChain::new(
        scenario.oracle.clone(),
        scenario.system,
        scenario.schedule.with_robust(robust),
        scenario.mu.clone(),
        if robust { scenario.theta() } else { 0.0 },
    )
    .map(|c| c.with_time_partial(scenario.include_time_partial))
    .map_err(config_err)
}

trait CheckDims {
    fn check_dims(&self, x0: &[f64], goal: &[f64]) -> Result<(), CliError>;
}

impl CheckDims for IntegratorChain {
    fn check_dims(&self, x0: &[f64], goal: &[f64]) -> Result<(), CliError> {
        if x0.len() != self.state_dim() {
            return Err(CliError::Config(format!(
                "scenario.x0 has {} entries, expected {}",
                x0.len(),
                self.state_dim()
            )));
        }
        if goal.len() != self.axes() {
            return Err(CliError::Config(format!(
                "scenario.goal has {} entries, expected {}",
                goal.len(),
                self.axes()
            )));
        }
        Ok(())
    }
}

fn channel_config(c: &Channel) -> ChannelConfig {
    ChannelConfig {
        noise: c.noise,
        sinusoids: c
            .sinusoids
            .iter()
            .map(|s| SinusoidConfig {
                amplitude: s.amplitude,
                frequency: s.frequency,
                phase: s.phase,
            })
            .collect(),
    }
}

fn config_err(e: safechain::Error) -> CliError {
    CliError::Config(e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_parse() {
        let p = parse(PAPER_FIG1).unwrap();
        assert_eq!(p.gains.rho, Some(vec![2.7, 3.0]));
        let t = parse(TRIPLE_DEMO).unwrap();
        assert_eq!(t.system.order, 3);
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = parse("[system]\norder = 2\nspeed = 3\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("line 3"), "{err}");
        assert!(parse("[bogus]\n").is_err());
        assert!(parse("[barrier.shape]\nkind = \"circle\"\nradius = 1.0\nfoo = 2\n").is_err());
        assert!(parse("[gains.upsilon]\nkind = \"warp\"\n").is_err());
    }

    #[test]
    fn defaults_fill_in() {
        let cfg = parse("").unwrap().resolve().unwrap();
        assert_eq!(cfg.scenario.x0, Some(vec![-1.0, -1.0, 0.0, 0.0]));
        assert_eq!(cfg.scenario.goal, Some(vec![4.0, 4.0]));
        assert_eq!(cfg.barrier.mu, Some(vec![0.2, 0.2]));
        assert_eq!(cfg.disturbance.channels.as_ref().unwrap().len(), 4);
        let e = cfg.build().unwrap();
        assert_eq!(e.scenario.controller_gains(), (1.0, 2.0));
    }

    #[test]
    fn dimension_problems_are_config_errors() {
        let err = parse("[scenario]\nx0 = [1.0, 2.0]\n")
            .unwrap()
            .build()
            .unwrap_err();
        assert!(matches!(err, CliError::Config(_)), "{err:?}");
    }

    trait Gains {
        fn controller_gains(&self) -> (f64, f64);
    }
    impl Gains for Scenario {
        fn controller_gains(&self) -> (f64, f64) {
            (self.nominal.kp, self.nominal.kd)
        }
    }
}
