//! Integrator-chain dynamics and bounded disturbance signals.
//!
//! States are stored level-major: for `m` axes and order `n` the state vector
//! is `[x₁ (m entries), x₂ (m entries), …, xₙ (m entries)]`. For the planar
//! double integrator this is `[p_x, p_y, v_x, v_y]`.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// `m` decoupled chains of `n` integrators: `ẋᵢ = xᵢ₊₁ + dᵢ`, `ẋₙ = u + dₙ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IntegratorChain {
    order: usize,
    axes: usize,
}

impl IntegratorChain {
    pub fn new(order: usize, axes: usize) -> Result<Self> {
        if order < 2 {
            return Err(Error::InvalidParameter("chain order must be at least 2"));
        }
        if axes < 1 {
            return Err(Error::InvalidParameter("chain needs at least one axis"));
        }
        Ok(Self { order, axes })
    }

    /// Planar double integrator, the system used in the obstacle experiment.
    pub fn planar_double() -> Self {
        Self { order: 2, axes: 2 }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn axes(&self) -> usize {
        self.axes
    }

    /// Dimension of the stacked state, `n·m`.
    pub fn state_dim(&self) -> usize {
        self.order * self.axes
    }

    /// Index of level `level` (0-based) on axis `axis` in the state vector.
    pub fn index(&self, level: usize, axis: usize) -> usize {
        level * self.axes + axis
    }

    /// Index of the state entry driven directly by input axis `axis`.
    pub fn input_index(&self, axis: usize) -> usize {
        self.index(self.order - 1, axis)
    }

    /// The drift `Ax`: every entry is replaced by the next level, the last
    /// level gets zero.
    pub fn drift(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_state(x)?;
        let shift = (self.order - 1) * self.axes;
        let mut out = vec![0.0; x.len()];
        out[..shift].copy_from_slice(&x[self.axes..]);
        Ok(out)
    }

    /// `ẋ = Ax + bu + d`.
    pub fn dynamics(&self, x: &[f64], u: &[f64], d: &[f64]) -> Result<Vec<f64>> {
        self.check_state(x)?;
        if u.len() != self.axes {
            return Err(Error::DimensionMismatch {
                what: "input",
                expected: self.axes,
                got: u.len(),
            });
        }
        if d.len() != self.state_dim() {
            return Err(Error::DimensionMismatch {
                what: "disturbance",
                expected: self.state_dim(),
                got: d.len(),
            });
        }
        let mut out = self.drift(x)?;
        for (axis, ua) in u.iter().enumerate() {
            out[self.input_index(axis)] += ua;
        }
        for (o, di) in out.iter_mut().zip(d) {
            *o += di;
        }
        Ok(out)
    }

    pub(crate) fn check_state(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.state_dim() {
            return Err(Error::DimensionMismatch {
                what: "state",
                expected: self.state_dim(),
                got: x.len(),
            });
        }
        Ok(())
    }
}

/// `amplitude · sin(frequency · t + phase)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sinusoid {
    pub amplitude: f64,
    pub frequency: f64,
    pub phase: f64,
}

impl Sinusoid {
    pub fn sin(amplitude: f64, frequency: f64) -> Self {
        Self {
            amplitude,
            frequency,
            phase: 0.0,
        }
    }

    pub fn cos(amplitude: f64, frequency: f64) -> Self {
        Self {
            amplitude,
            frequency,
            phase: core::f64::consts::FRAC_PI_2,
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.amplitude * libm::sin(self.frequency * t + self.phase)
    }
}

/// Support of the uniform noise draw `rnd`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseRange {
    /// Uniform on `[0, 1]`.
    #[default]
    Unit,
    /// Uniform on `[-1, 1]`.
    Symmetric,
}

/// One disturbance channel: a sum of sinusoids plus `noise · rnd`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Channel {
    pub sinusoids: Vec<Sinusoid>,
    pub noise: f64,
}

impl Channel {
    /// Worst-case magnitude of the channel over all times and draws.
    pub fn amplitude_bound(&self) -> f64 {
        self.sinusoids
            .iter()
            .map(|s| s.amplitude.abs())
            .sum::<f64>()
            + self.noise.abs()
    }
}

/// Additive disturbance `d(t)` with one [`Channel`] per state entry.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DisturbanceProfile {
    pub channels: Vec<Channel>,
    pub noise_range: NoiseRange,
}

impl DisturbanceProfile {
    /// All-zero disturbance on `dim` channels.
    pub fn zero(dim: usize) -> Self {
        Self {
            channels: vec![Channel::default(); dim],
            noise_range: NoiseRange::Unit,
        }
    }

    /// The planar double-integrator profiles: mismatched
    /// `d₁ = [0.1 sin 2t + 0.02 rnd; 0.1 cos 3t + 0.02 rnd]` on the positions
    /// and matched `d₂ = [0.15 sin t + 0.02 rnd; 0.15 cos 2t + 0.02 rnd]` on
    /// the velocities.
    pub fn planar_reference() -> Self {
        let ch = |s: Sinusoid| Channel {
            sinusoids: vec![s],
            noise: 0.02,
        };
        Self {
            channels: vec![
                ch(Sinusoid::sin(0.1, 2.0)),
                ch(Sinusoid::cos(0.1, 3.0)),
                ch(Sinusoid::sin(0.15, 1.0)),
                ch(Sinusoid::cos(0.15, 2.0)),
            ],
            noise_range: NoiseRange::Unit,
        }
    }

    pub fn dim(&self) -> usize {
        self.channels.len()
    }

    /// The same profile with every noise amplitude set to zero.
    pub fn without_noise(&self) -> Self {
        let mut out = self.clone();
        for c in &mut out.channels {
            c.noise = 0.0;
        }
        out
    }

    /// Deterministic sinusoidal part of `d(t)`.
    pub fn deterministic(&self, t: f64) -> Vec<f64> {
        self.channels
            .iter()
            .map(|c| c.sinusoids.iter().map(|s| s.eval(t)).sum())
            .collect()
    }

    /// `θ`: per-channel sum of absolute amplitudes, combined across channels
    /// by root-sum-of-squares. `‖d(t)‖ ≤ θ` for every `t` and every draw.
    pub fn certified_bound(&self) -> f64 {
        libm::sqrt(
            self.channels
                .iter()
                .map(|c| {
                    let a = c.amplitude_bound();
                    a * a
                })
                .sum(),
        )
    }
}

/// A profile together with its own seeded noise stream.
#[derive(Debug, Clone)]
pub struct DisturbanceSampler {
    profile: DisturbanceProfile,
    rng: ChaCha8Rng,
}

impl DisturbanceSampler {
    pub fn new(profile: DisturbanceProfile, seed: u64) -> Self {
        Self {
            profile,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn profile(&self) -> &DisturbanceProfile {
        &self.profile
    }

    /// Draws `d(t)`. Every call advances the noise stream once per channel,
    /// including channels with zero noise amplitude, so traces stay aligned
    /// across profiles that differ only in amplitudes.
    pub fn sample(&mut self, t: f64) -> Vec<f64> {
        let range = self.profile.noise_range;
        let mut out = self.profile.deterministic(t);
        for (o, c) in out.iter_mut().zip(&self.profile.channels) {
            let u: f64 = self.rng.gen();
            let r = match range {
                NoiseRange::Unit => u,
                NoiseRange::Symmetric => 2.0 * u - 1.0,
            };
            *o += c.noise * r;
        }
        out
    }
}
