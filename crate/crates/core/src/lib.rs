//! Robust safety-critical control for chains of integrators.
//!
//! The crate builds relative-degree-one barrier functions for `n`-th order
//! integrator chains by backstepping with time-varying gains `Υ(t)`, and
//! enforces them with a closed-form quadratic-program safety filter. Bounded
//! matched and mismatched disturbances are handled through smooth robustness
//! terms `Λᵢ = ‖∂hᵢ/∂x‖²/(4μᵢ) + μᵢθ²`.
//!
//! Module map:
//!
//! - [`chain`]: integrator-chain dynamics and disturbance signals.
//! - [`tvgain`]: time-varying gain functions and initial-gain rules.
//! - [`diff`]: truncated multivariate Taylor arithmetic (forward-mode AD).
//! - [`barrier`]: the backstepping barrier chain `h₁ … hₙ`.
//! - [`filter`]: the closed-form QP safety filter and a projection oracle.
//! - [`sim`]: fixed-step closed-loop simulation and analytic safety floors.
//!
//! The crate is `no_std` (with `alloc`) when the default `std` feature is
//! disabled.

#![cfg_attr(not(feature = "std"), no_std)]
// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod barrier;
pub mod chain;
pub mod diff;
mod error;
pub mod filter;
pub mod sim;
pub mod tvgain;

pub use barrier::{
    auto_gains, lambda_term, BarrierChain, BarrierEvaluation, BarrierOracle, CircularObstacle,
    HalfPlane, LevelCheck, PolynomialBarrier, PolynomialTerm,
};
pub use chain::{DisturbanceProfile, DisturbanceSampler, IntegratorChain, NoiseRange, Sinusoid};
pub use diff::{grad_hess, lift, Jet, JetSpace, SecondOrderNumber};
pub use error::Error;
pub use filter::{qp_oracle, safety_filter, zeta, Branch, FilterDecision};
pub use sim::{
    chain_bound, nominal_controller, rk4_step, run_scenario, safety_lower_bound, ControllerMode,
    Metrics, NominalGains, RunError, Scenario, Trajectory,
};
pub use tvgain::{
    initial_gain_perturbed, initial_gain_unperturbed, upsilon, upsilon_power_integral,
    GainFunction, GainSchedule,
};

pub type Result<T, E = Error> = core::result::Result<T, E>;
