//! Fixed-step closed-loop simulation and the analytic safety floors.

use alloc::boxed::Box;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::barrier::{BarrierChain, BarrierOracle};
use crate::chain::{DisturbanceProfile, DisturbanceSampler, IntegratorChain};
use crate::filter::{safety_filter, Branch};
use crate::tvgain::{upsilon_power_integral, GainFunction, GainSchedule};
use crate::{Error, Result};

/// Gradient norms of `h₁` below this inside the safe set are flagged.
pub const DEGENERATE_GRADIENT: f64 = 1e-9;

/// One classical Runge–Kutta step of `ẋ = f(t, x)`.
pub fn rk4_step<F>(mut f: F, x: &[f64], t: f64, dt: f64) -> Result<Vec<f64>>
where
    F: FnMut(f64, &[f64]) -> Result<Vec<f64>>,
{
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter("step size must be positive"));
    }
    let mut stage = |tt: f64, xx: &[f64]| -> Result<Vec<f64>> {
        let k = f(tt, xx)?;
        if k.iter().all(|v| v.is_finite()) {
            Ok(k)
        } else {
            Err(Error::NumericalBlowup {
                t: tt,
                state: xx.to_vec(),
            })
        }
    };
    let offset =
        |k: &[f64], h: f64| -> Vec<f64> { x.iter().zip(k).map(|(a, b)| a + h * b).collect() };
    let k1 = stage(t, x)?;
    let k2 = stage(t + 0.5 * dt, &offset(&k1, 0.5 * dt))?;
    let k3 = stage(t + 0.5 * dt, &offset(&k2, 0.5 * dt))?;
    let k4 = stage(t + dt, &offset(&k3, dt))?;
    Ok(x.iter()
        .enumerate()
        .map(|(i, xi)| xi + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

/// Gains of the goal-reaching law
/// `u = −kp (x₁ − p_d) − kd x₂ − Σₖ higher[k] x₃₊ₖ` per axis.
#[derive(Debug, Clone, PartialEq)]
pub struct NominalGains {
    pub kp: f64,
    pub kd: f64,
    /// Feedback on levels 3…n; missing entries count as zero.
    pub higher: Vec<f64>,
}

impl Default for NominalGains {
    fn default() -> Self {
        Self {
            kp: 1.0,
            kd: 2.0,
            higher: Vec::new(),
        }
    }
}

/// PD goal-reaching input, extended by `higher` feedback for longer chains.
pub fn nominal_controller(
    system: &IntegratorChain,
    x: &[f64],
    goal: &[f64],
    gains: &NominalGains,
) -> Result<Vec<f64>> {
    system.check_state(x)?;
    let m = system.axes();
    if goal.len() != m {
        return Err(Error::DimensionMismatch {
            what: "goal",
            expected: m,
            got: goal.len(),
        });
    }
    Ok((0..m)
        .map(|a| {
            let mut u =
                -gains.kp * (x[system.index(0, a)] - goal[a]) - gains.kd * x[system.index(1, a)];
            for (k, g) in gains.higher.iter().enumerate() {
                if k + 2 < system.order() {
                    u -= g * x[system.index(k + 2, a)];
                }
            }
            u
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControllerMode {
    /// Nominal input only.
    Nominal,
    /// Disturbance-free backstepping construction (`Λ ≡ 0`), applied even
    /// when disturbances act.
    Sbcbf,
    /// Robust construction with `Λᵢ` and `θ` from the disturbance profile.
    Srcbf,
}

impl ControllerMode {
    pub const ALL: [ControllerMode; 3] = [
        ControllerMode::Nominal,
        ControllerMode::Sbcbf,
        ControllerMode::Srcbf,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ControllerMode::Nominal => "nominal",
            ControllerMode::Sbcbf => "sbcbf",
            ControllerMode::Srcbf => "srcbf",
        }
    }
}

/// Everything needed for one closed-loop run.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub system: IntegratorChain,
    /// `None` disables disturbances.
    pub disturbance: Option<DisturbanceProfile>,
    pub oracle: Arc<dyn BarrierOracle>,
    /// Gains and `Υ`; the robust flag is set from `mode`.
    pub schedule: GainSchedule,
    pub mu: Vec<f64>,
    pub include_time_partial: bool,
    pub mode: ControllerMode,
    pub nominal: NominalGains,
    pub x0: Vec<f64>,
    pub goal: Vec<f64>,
    pub t0: f64,
    pub t_final: f64,
    pub dt: f64,
    pub seed: u64,
}

impl Scenario {
    /// `θ`: the certified bound of the active profile, zero when disabled.
    pub fn theta(&self) -> f64 {
        self.disturbance
            .as_ref()
            .map_or(0.0, DisturbanceProfile::certified_bound)
    }

    /// Number of integration steps; samples are one more.
    pub fn steps(&self) -> usize {
        libm::round((self.t_final - self.t0) / self.dt) as usize
    }

    /// The chain used by `mode`. Nominal runs report the robust chain's
    /// levels when disturbances are active and the disturbance-free chain
    /// otherwise.
    pub fn barrier_chain(&self) -> Result<BarrierChain> {
        let theta = self.theta();
        let robust = match self.mode {
            ControllerMode::Srcbf => true,
            ControllerMode::Sbcbf => false,
            ControllerMode::Nominal => theta > 0.0,
        };
        let theta = if robust { theta } else { 0.0 };
        BarrierChain::new(
            self.oracle.clone(),
            self.system,
            self.schedule.with_robust(robust),
            self.mu.clone(),
            theta,
        )
        .map(|c| c.with_time_partial(self.include_time_partial))
    }

    fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidParameter("time step must be positive"));
        }
        if !(self.t_final > self.t0) {
            return Err(Error::InvalidParameter(
                "final time must exceed initial time",
            ));
        }
        self.system.check_state(&self.x0)?;
        if self.goal.len() != self.system.axes() {
            return Err(Error::DimensionMismatch {
                what: "goal",
                expected: self.system.axes(),
                got: self.goal.len(),
            });
        }
        if let Some(d) = &self.disturbance {
            if d.dim() != self.system.state_dim() {
                return Err(Error::DimensionMismatch {
                    what: "disturbance profile",
                    expected: self.system.state_dim(),
                    got: d.dim(),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Metrics {
    pub min_h1: f64,
    /// `∫‖u‖² dt`, trapezoidal over the samples.
    pub control_effort: f64,
    /// `‖p(t_final) − p_d‖` on the first state level.
    pub goal_error: f64,
    /// `min h₁ < 0` at some sample.
    pub violation: bool,
}

/// Sampled closed-loop run. Row `k` of every table belongs to `times[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub order: usize,
    pub axes: usize,
    pub mode: ControllerMode,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub inputs: Vec<Vec<f64>>,
    pub disturbances: Vec<Vec<f64>>,
    /// `h₁ … hₙ` per sample.
    pub barrier: Vec<Vec<f64>>,
    /// `None` for nominal runs.
    pub branches: Vec<Option<Branch>>,
    /// Whether `‖∂h₁/∂x‖` fell below [`DEGENERATE_GRADIENT`] inside the safe set.
    pub degenerate_gradient: bool,
    pub metrics: Metrics,
}

impl Trajectory {
    fn new(system: &IntegratorChain, mode: ControllerMode) -> Self {
        Self {
            order: system.order(),
            axes: system.axes(),
            mode,
            times: Vec::new(),
            states: Vec::new(),
            inputs: Vec::new(),
            disturbances: Vec::new(),
            barrier: Vec::new(),
            branches: Vec::new(),
            degenerate_gradient: false,
            metrics: Metrics::default(),
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `h₁` at every sample.
    pub fn h1(&self) -> impl Iterator<Item = f64> + '_ {
        self.barrier.iter().map(|h| h[0])
    }

    /// Positions (first state level) at sample `k`.
    pub fn position(&self, k: usize) -> &[f64] {
        &self.states[k][..self.axes]
    }

    fn finish(&mut self, goal: &[f64]) {
        let min_h1 = self.h1().fold(f64::INFINITY, f64::min);
        let mut effort = 0.0;
        for k in 1..self.len() {
            let sq = |u: &[f64]| u.iter().map(|v| v * v).sum::<f64>();
            effort += 0.5
                * (self.times[k] - self.times[k - 1])
                * (sq(&self.inputs[k]) + sq(&self.inputs[k - 1]));
        }
        let goal_error = match self.states.last() {
            Some(x) => libm::sqrt(
                x[..self.axes]
                    .iter()
                    .zip(goal)
                    .map(|(p, g)| (p - g) * (p - g))
                    .sum(),
            ),
            None => f64::NAN,
        };
        self.metrics = Metrics {
            min_h1,
            control_effort: effort,
            goal_error,
            violation: min_h1 < 0.0,
        };
    }
}

/// Why a run stopped.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RunError {
    /// Rejected before the first step.
    #[error("scenario rejected: {0}")]
    Setup(Error),
    /// Failed mid-run; `partial` holds the samples recorded so far.
    #[error("run aborted at t = {t}: {cause}")]
    Aborted {
        t: f64,
        cause: Error,
        partial: Box<Trajectory>,
    },
}

impl RunError {
    pub fn cause(&self) -> &Error {
        match self {
            RunError::Setup(e) => e,
            RunError::Aborted { cause, .. } => cause,
        }
    }
}

fn apply_mode(
    scenario: &Scenario,
    chain: &BarrierChain,
    x: &[f64],
    t: f64,
) -> Result<(Vec<f64>, Option<Branch>)> {
    let u_no = nominal_controller(&scenario.system, x, &scenario.goal, &scenario.nominal)?;
    match scenario.mode {
        ControllerMode::Nominal => Ok((u_no, None)),
        ControllerMode::Sbcbf | ControllerMode::Srcbf => {
            let d = safety_filter(chain, x, t, &u_no)?;
            Ok((d.u, Some(d.branch)))
        }
    }
}

/// Runs the closed loop on the grid `t₀, t₀ + dt, …, t_final`.
///
/// The disturbance is sampled once per step and held across the four RK4
/// stages; the controller is re-evaluated at every stage.
pub fn run_scenario(scenario: &Scenario) -> Result<Trajectory, RunError> {
    scenario.validate().map_err(RunError::Setup)?;
    let chain = scenario.barrier_chain().map_err(RunError::Setup)?;
    if scenario.mode != ControllerMode::Nominal {
        let report = chain
            .validate_initialization(&scenario.x0, scenario.t0)
            .map_err(RunError::Setup)?;
        if let Some(bad) = report.iter().find(|l| !l.positive) {
            return Err(RunError::Setup(Error::UnsafeInitialization {
                level: bad.level,
                value: bad.value,
            }));
        }
    }

    let system = scenario.system;
    let mut sampler = scenario
        .disturbance
        .clone()
        .map(|p| DisturbanceSampler::new(p, scenario.seed));
    let mut traj = Trajectory::new(&system, scenario.mode);
    let steps = scenario.steps();
    let mut x = scenario.x0.clone();

    for k in 0..=steps {
        let t = scenario.t0 + k as f64 * scenario.dt;
        let step = (|| -> Result<Option<Vec<f64>>> {
            let d = match sampler.as_mut() {
                Some(s) => s.sample(t),
                None => vec![0.0; system.state_dim()],
            };
            let (u, branch) = apply_mode(scenario, &chain, &x, t)?;
            let levels = chain.evaluate(&x, t)?;
            let h1 = &levels[0];
            if h1.value >= 0.0
                && libm::sqrt(h1.gradient.iter().map(|g| g * g).sum()) < DEGENERATE_GRADIENT
            {
                traj.degenerate_gradient = true;
            }
            traj.times.push(t);
            traj.states.push(x.clone());
            traj.inputs.push(u);
            traj.disturbances.push(d.clone());
            traj.barrier.push(levels.iter().map(|l| l.value).collect());
            traj.branches.push(branch);
            if k == steps {
                return Ok(None);
            }
            let field = |tt: f64, xx: &[f64]| -> Result<Vec<f64>> {
                let (u, _) = apply_mode(scenario, &chain, xx, tt)?;
                system.dynamics(xx, &u, &d)
            };
            rk4_step(field, &x, t, scenario.dt).map(Some)
        })();
        match step {
            Ok(Some(next)) => x = next,
            Ok(None) => {}
            Err(cause) => {
                traj.finish(&scenario.goal);
                return Err(RunError::Aborted {
                    t,
                    cause,
                    partial: Box::new(traj),
                });
            }
        }
    }
    traj.finish(&scenario.goal);
    Ok(traj)
}

/// `h₁(x₀) exp[−ϱ₁((t − t₀)²/2 + (t − t₀))]`, the disturbance-free floor of
/// `h₁` for `Υ(t) = 1 + t`.
pub fn safety_lower_bound(
    function: &GainFunction,
    h1_0: f64,
    rho1: f64,
    t0: f64,
    t: f64,
) -> Result<f64> {
    if *function != GainFunction::Linear {
        return Err(Error::UnsupportedBound);
    }
    if t < t0 {
        return Err(Error::InvalidParameter("bound evaluated before t0"));
    }
    let s = t - t0;
    Ok(h1_0 * libm::exp(-rho1 * (0.5 * s * s + s)))
}

/// `hᵢ(x₀, t₀) exp(−ϱᵢ ∫_{t₀}^{t} Υ(s)^{ϑi} ds)`.
pub fn chain_bound(chain: &BarrierChain, level: usize, hi_0: f64, t0: f64, t: f64) -> Result<f64> {
    if level == 0 || level > chain.order() {
        return Err(Error::LevelOutOfRange {
            level,
            order: chain.order(),
        });
    }
    if !(hi_0 > 0.0) {
        return Err(Error::UnsafeInitialization { level, value: hi_0 });
    }
    let schedule = chain.schedule();
    let integral = upsilon_power_integral(schedule.function(), schedule.exponent(level), t0, t)?;
    Ok(hi_0 * libm::exp(-schedule.gain(level) * integral))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::barrier::CircularObstacle;
    use approx::assert_relative_eq;

    #[test]
    fn rk4_examples() {
        let x = rk4_step(|_, x| Ok(x.to_vec()), &[1.0], 0.0, 0.1).unwrap();
        assert_relative_eq!(x[0], libm::exp(0.1), epsilon = 1e-7);
        assert_relative_eq!(x[0], 1.105_170_83, epsilon = 1e-8);
        assert_eq!(
            rk4_step(|_, _| Ok(vec![0.0]), &[3.0], 0.0, 0.1).unwrap(),
            vec![3.0]
        );
        assert_eq!(
            rk4_step(|_, _| Ok(vec![1.0]), &[2.0], 0.0, 0.25).unwrap(),
            vec![2.25]
        );
        assert!(matches!(
            rk4_step(|_, _| Ok(vec![f64::NAN]), &[2.0], 0.0, 0.25),
            Err(Error::NumericalBlowup { .. })
        ));
        assert!(rk4_step(|_, x| Ok(x.to_vec()), &[1.0], 0.0, 0.0).is_err());
    }

    #[test]
    fn pd_law() {
        let sys = IntegratorChain::planar_double();
        let g = NominalGains {
            kp: 1.0,
            kd: 2.0,
            higher: vec![],
        };
        assert_eq!(
            nominal_controller(&sys, &[1.0, 0.0, 0.0, 0.0], &[0.0, 0.0], &g).unwrap(),
            vec![-1.0, 0.0]
        );
        assert_eq!(
            nominal_controller(&sys, &[3.0, 4.0, 0.0, 0.0], &[3.0, 4.0], &g).unwrap(),
            vec![0.0, 0.0]
        );
        let damping = NominalGains {
            kp: 0.0,
            kd: 1.0,
            higher: vec![],
        };
        assert_eq!(
            nominal_controller(&sys, &[0.0, 0.0, 2.0, -1.0], &[0.0, 0.0], &damping).unwrap(),
            vec![-2.0, 1.0]
        );
    }

    #[test]
    fn bounds() {
        let g = GainFunction::Linear;
        assert_relative_eq!(
            safety_lower_bound(&g, 4.0, 2.7, 0.0, 1.0).unwrap(),
            4.0 * libm::exp(-4.05)
        );
        assert_relative_eq!(
            safety_lower_bound(&g, 4.0, 2.7, 0.0, 1.0).unwrap(),
            0.0696895,
            epsilon = 1e-7
        );
        assert_eq!(safety_lower_bound(&g, 4.0, 2.7, 3.0, 3.0).unwrap(), 4.0);
        assert_relative_eq!(
            safety_lower_bound(&g, 4.0, 1e-12, 0.0, 2.0).unwrap(),
            4.0,
            epsilon = 1e-10
        );
        assert!(matches!(
            safety_lower_bound(&GainFunction::Polynomial { p: 2.0 }, 1.0, 1.0, 0.0, 1.0),
            Err(Error::UnsupportedBound)
        ));
    }

    fn chain(gains: Vec<f64>) -> BarrierChain {
        BarrierChain::new(
            Arc::new(CircularObstacle {
                center: vec![0.0, 0.0],
                radius: 1.0,
            }),
            IntegratorChain::planar_double(),
            GainSchedule::new(gains, 1.0, GainFunction::Linear, false).unwrap(),
            vec![0.2, 0.2],
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn chain_bound_examples() {
        let c = chain(vec![2.7, 3.0]);
        assert_eq!(chain_bound(&c, 2, 1.7, 0.5, 0.5).unwrap(), 1.7);
        // From t₀ = 0 the closed-form floor is exact; from t₀ > 0 the exact
        // integral carries an extra t₀(t − t₀) and the exact floor is lower.
        for &t in &[0.3, 1.0, 2.5] {
            let exact = chain_bound(&c, 1, 4.0, 0.0, t).unwrap();
            assert_relative_eq!(
                exact,
                safety_lower_bound(&GainFunction::Linear, 4.0, 2.7, 0.0, t).unwrap(),
                epsilon = 1e-14
            );
            let t0 = 0.5;
            let tt = t0 + t;
            let shifted = chain_bound(&c, 1, 4.0, t0, tt).unwrap();
            assert!(shifted < safety_lower_bound(&GainFunction::Linear, 4.0, 2.7, t0, tt).unwrap());
        }
        // ϱ₂ = 3 with ∫Υ^{2} ds = 2 over [0, t]: (1+t)³ = 7.
        let t = libm::cbrt(7.0) - 1.0;
        assert_relative_eq!(
            chain_bound(&c, 2, 1.0, 0.0, t).unwrap(),
            2.4788e-3,
            epsilon = 1e-7
        );
        assert!(chain_bound(&c, 2, 0.0, 0.0, 1.0).is_err());
        assert!(chain_bound(&c, 3, 1.0, 0.0, 1.0).is_err());
    }
}
