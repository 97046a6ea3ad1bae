//! The backstepping barrier chain.
//!
//! Starting from a user barrier `h₁(x)` of relative degree `n`, each level is
//!
//! ```text
//! hᵢ(x, t) = ϱᵢ₋₁ Υ(t)^{ϑ(i−1)} hᵢ₋₁ + L_f hᵢ₋₁ − Λᵢ₋₁,
//! Λᵢ(x)    = ‖∂hᵢ/∂x‖² / (4μᵢ) + μᵢ θ²,
//! ```
//!
//! with `Λ ≡ 0` in the disturbance-free construction. `hₙ` has relative
//! degree one and is enforced by the safety filter.
//!
//! Every level is evaluated as a truncated Taylor jet over `(x, t)`, so the
//! spatial gradient and the explicit time-partial `∂hᵢ/∂t` are exact. `h₁` is
//! expanded to order `n` and each level consumes one order.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::chain::IntegratorChain;
use crate::diff::{Jet, JetSpace};
use crate::tvgain::{initial_gain_perturbed, GainSchedule};
use crate::{Error, Result};

/// The user barrier `h₁`, evaluated over lifted state variables.
pub trait BarrierOracle: fmt::Debug + Send + Sync {
    /// `h₁` over the stacked state (level-major layout).
    fn eval(&self, x: &[Jet]) -> Result<Jet>;

    /// Declared differentiability order; `None` means smooth.
    fn smoothness(&self) -> Option<usize> {
        None
    }
}

/// `½(‖p − c‖² − r²)` on the first `center.len()` state entries (the
/// positions), positive outside the disc.
#[derive(Debug, Clone, PartialEq)]
pub struct CircularObstacle {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl BarrierOracle for CircularObstacle {
    fn eval(&self, x: &[Jet]) -> Result<Jet> {
        if x.len() < self.center.len() || self.center.is_empty() {
            return Err(Error::DimensionMismatch {
                what: "obstacle center",
                expected: x.len(),
                got: self.center.len(),
            });
        }
        let offsets: Vec<Jet> = x.iter().zip(&self.center).map(|(xi, c)| xi - *c).collect();
        let sq = Jet::norm_squared(&offsets).expect("non-empty center");
        Ok((sq - self.radius * self.radius) * 0.5)
    }
}

/// `aᵀx − c` over the first `normal.len()` state entries.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfPlane {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl BarrierOracle for HalfPlane {
    fn eval(&self, x: &[Jet]) -> Result<Jet> {
        if x.len() < self.normal.len() || self.normal.is_empty() {
            return Err(Error::DimensionMismatch {
                what: "half-plane normal",
                expected: x.len(),
                got: self.normal.len(),
            });
        }
        let mut acc = &x[0] * self.normal[0];
        for (xi, a) in x.iter().zip(&self.normal).skip(1) {
            acc += &(xi * *a);
        }
        Ok(acc - self.offset)
    }
}

/// `coefficient · Π xⱼ^{powersⱼ}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialTerm {
    pub coefficient: f64,
    pub powers: Vec<u32>,
}

/// A polynomial barrier: sum of monomial terms plus a constant.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialBarrier {
    pub constant: f64,
    pub terms: Vec<PolynomialTerm>,
}

impl BarrierOracle for PolynomialBarrier {
    fn eval(&self, x: &[Jet]) -> Result<Jet> {
        let first = x.first().ok_or(Error::InvalidParameter("empty state"))?;
        let mut acc = Jet::constant(first.space(), first.order(), self.constant);
        for term in &self.terms {
            if term.powers.len() > x.len() {
                return Err(Error::DimensionMismatch {
                    what: "polynomial term",
                    expected: x.len(),
                    got: term.powers.len(),
                });
            }
            let mut mono = Jet::constant(first.space(), first.order(), term.coefficient);
            for (xi, &p) in x.iter().zip(&term.powers) {
                if p > 0 {
                    mono = &mono * &xi.powi(p);
                }
            }
            acc += &mono;
        }
        Ok(acc)
    }
}

/// `Λ = ‖g‖²/(4μ) + μθ²`, the smooth upper bound of `‖g‖θ`.
pub fn lambda_term(gradient: &[f64], mu: f64, theta: f64) -> Result<f64> {
    if !(mu > 0.0) {
        return Err(Error::InvalidParameter(
            "smoothing constant must be positive",
        ));
    }
    if !(theta >= 0.0) {
        return Err(Error::InvalidParameter(
            "disturbance bound must be nonnegative",
        ));
    }
    let sq: f64 = gradient.iter().map(|g| g * g).sum();
    Ok(sq / (4.0 * mu) + mu * theta * theta)
}

fn lambda_jet(grads: &[Jet], mu: f64, theta: f64) -> Jet {
    let sq = Jet::norm_squared(grads).expect("non-empty gradient");
    sq * (1.0 / (4.0 * mu)) + mu * theta * theta
}

/// One level of the chain at `(x, t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BarrierEvaluation {
    pub level: usize,
    pub value: f64,
    /// `∂hᵢ/∂x`.
    pub gradient: Vec<f64>,
    /// `∂hᵢ/∂t`, identically zero for `i = 1`.
    pub time_partial: f64,
}

/// Row of the initialization report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelCheck {
    pub level: usize,
    pub value: f64,
    pub positive: bool,
}

/// Barrier chain `h₁ … hₙ` for a given system, schedule and disturbance bound.
#[derive(Clone)]
pub struct BarrierChain {
    oracle: Arc<dyn BarrierOracle>,
    system: IntegratorChain,
    schedule: GainSchedule,
    mu: Vec<f64>,
    theta: f64,
    include_time_partial: bool,
    space: Arc<JetSpace>,
}

impl fmt::Debug for BarrierChain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BarrierChain")
            .field("oracle", &self.oracle)
            .field("system", &self.system)
            .field("schedule", &self.schedule)
            .field("mu", &self.mu)
            .field("theta", &self.theta)
            .field("include_time_partial", &self.include_time_partial)
            .finish()
    }
}

impl BarrierChain {
    pub fn new(
        oracle: Arc<dyn BarrierOracle>,
        system: IntegratorChain,
        schedule: GainSchedule,
        mu: Vec<f64>,
        theta: f64,
    ) -> Result<Self> {
        let n = system.order();
        if schedule.gains().len() != n {
            return Err(Error::DimensionMismatch {
                what: "gain schedule",
                expected: n,
                got: schedule.gains().len(),
            });
        }
        if mu.len() != n {
            return Err(Error::DimensionMismatch {
                what: "smoothing constants",
                expected: n,
                got: mu.len(),
            });
        }
        if schedule.robust() && mu.iter().any(|m| !(*m > 0.0)) {
            return Err(Error::InvalidParameter(
                "smoothing constants must be positive",
            ));
        }
        if !(theta >= 0.0) || !theta.is_finite() {
            return Err(Error::InvalidParameter(
                "disturbance bound must be nonnegative",
            ));
        }
        if oracle.smoothness().is_some_and(|s| s < n) {
            return Err(Error::InvalidParameter(
                "barrier is not smooth enough for the chain order",
            ));
        }
        let space = JetSpace::new(system.state_dim() + 1, n);
        Ok(Self {
            oracle,
            system,
            schedule,
            mu,
            theta,
            include_time_partial: true,
            space,
        })
    }

    /// Whether the filter constraint includes `∂hₙ/∂t` (default on).
    pub fn with_time_partial(mut self, include: bool) -> Self {
        self.include_time_partial = include;
        self
    }

    pub fn with_schedule(&self, schedule: GainSchedule) -> Result<Self> {
        Self::new(
            self.oracle.clone(),
            self.system,
            schedule,
            self.mu.clone(),
            self.theta,
        )
        .map(|c| c.with_time_partial(self.include_time_partial))
    }

    pub fn oracle(&self) -> &Arc<dyn BarrierOracle> {
        &self.oracle
    }

    pub fn system(&self) -> &IntegratorChain {
        &self.system
    }

    pub fn order(&self) -> usize {
        self.system.order()
    }

    pub fn schedule(&self) -> &GainSchedule {
        &self.schedule
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn robust(&self) -> bool {
        self.schedule.robust()
    }

    pub fn include_time_partial(&self) -> bool {
        self.include_time_partial
    }

    /// Jets of `h₁ … h_upto`, with `h_upto` of order 1.
    fn level_jets(&self, x: &[f64], t: f64, upto: usize) -> Result<Vec<Jet>> {
        self.system.check_state(x)?;
        let function = self.schedule.function();
        function.check_domain(t)?;
        let dim = x.len();
        let axes = self.system.axes();
        let vars: Vec<Jet> = x
            .iter()
            .enumerate()
            .map(|(j, &v)| Jet::variable(&self.space, upto, j, v))
            .collect();
        let time = Jet::variable(&self.space, upto, dim, t);
        let ups = function.eval_jet(&time)?;

        let mut levels = Vec::with_capacity(upto);
        levels.push(self.oracle.eval(&vars)?.truncate(upto));
        for i in 2..=upto {
            let prev = &levels[i - 2];
            let grads: Vec<Jet> = (0..dim).map(|j| prev.partial(j)).collect();
            // L_f h = Σ ∂h/∂xⱼ · x_{j+m}; the last level has zero drift.
            let mut next =
                &(&ups.powf(self.schedule.exponent(i - 1))? * prev) * self.schedule.gain(i - 1);
            for j in 0..dim - axes {
                next += &(&grads[j] * &vars[j + axes]);
            }
            if self.robust() {
                next = next - lambda_jet(&grads, self.mu[i - 2], self.theta);
            }
            levels.push(next);
        }
        Ok(levels)
    }

    fn to_evaluation(&self, level: usize, jet: &Jet) -> BarrierEvaluation {
        let dim = self.system.state_dim();
        BarrierEvaluation {
            level,
            value: jet.value(),
            gradient: (0..dim).map(|j| jet.d(j)).collect(),
            time_partial: jet.d(dim),
        }
    }

    /// All levels `h₁ … hₙ` at `(x, t)`.
    pub fn evaluate(&self, x: &[f64], t: f64) -> Result<Vec<BarrierEvaluation>> {
        let n = self.order();
        let jets = self.level_jets(x, t, n)?;
        Ok(jets
            .iter()
            .enumerate()
            .map(|(k, j)| self.to_evaluation(k + 1, j))
            .collect())
    }

    /// Level `i` (1-based) at `(x, t)`.
    pub fn eval_level(&self, level: usize, x: &[f64], t: f64) -> Result<BarrierEvaluation> {
        if level == 0 || level > self.order() {
            return Err(Error::LevelOutOfRange {
                level,
                order: self.order(),
            });
        }
        let jets = self.level_jets(x, t, level)?;
        Ok(self.to_evaluation(level, &jets[level - 1]))
    }

    /// `L_f hᵢ = (∂hᵢ/∂x)·Ax` from an evaluation.
    pub fn lie_drift(&self, eval: &BarrierEvaluation, x: &[f64]) -> Result<f64> {
        let drift = self.system.drift(x)?;
        Ok(eval.gradient.iter().zip(&drift).map(|(g, a)| g * a).sum())
    }

    /// `L_g hᵢ`: one entry per input axis.
    pub fn lie_input(&self, eval: &BarrierEvaluation) -> Vec<f64> {
        (0..self.system.axes())
            .map(|a| eval.gradient[self.system.input_index(a)])
            .collect()
    }

    /// `Λᵢ` for an evaluation; zero in the disturbance-free construction.
    pub fn lambda_at(&self, eval: &BarrierEvaluation) -> Result<f64> {
        if self.robust() {
            lambda_term(&eval.gradient, self.mu[eval.level - 1], self.theta)
        } else {
            Ok(0.0)
        }
    }

    /// Evaluates every level at `(x0, t0)` and flags the non-positive ones.
    pub fn validate_initialization(&self, x0: &[f64], t0: f64) -> Result<Vec<LevelCheck>> {
        Ok(self
            .evaluate(x0, t0)?
            .into_iter()
            .map(|e| LevelCheck {
                level: e.level,
                value: e.value,
                positive: e.value > 0.0,
            })
            .collect())
    }
}

/// Walks the chain at `(x0, t0)` and picks each `ϱᵢ₋₁`, `i = 2 … n`, from the
/// initial-gain rule so every level is strictly positive. `ϱₙ` keeps the
/// template's value.
pub fn auto_gains(
    template: &BarrierChain,
    x0: &[f64],
    t0: f64,
    margin: f64,
) -> Result<GainSchedule> {
    let n = template.order();
    let h1 = template.eval_level(1, x0, t0)?;
    if !(h1.value > 0.0) {
        return Err(Error::UnsafeInitialization {
            level: 1,
            value: h1.value,
        });
    }
    let mut chain = template.clone();
    let mut gains = template.schedule().gains().to_vec();
    let function = *template.schedule().function();
    let ups0 = function.eval(t0)?;
    for i in 2..=n {
        let prev = chain.eval_level(i - 1, x0, t0)?;
        let lf = chain.lie_drift(&prev, x0)?;
        let lambda = chain.lambda_at(&prev)?;
        let scale = libm::pow(ups0, template.schedule().exponent(i - 1));
        gains[i - 2] =
            initial_gain_perturbed(prev.value, lf, lambda, scale, margin).map_err(|e| match e {
                Error::UnsafeInitialization { value, .. } => Error::UnsafeInitialization {
                    level: i - 1,
                    value,
                },
                other => other,
            })?;
        chain = chain.with_schedule(template.schedule().with_gains(gains.clone())?)?;
    }
    Ok(chain.schedule().clone())
}
