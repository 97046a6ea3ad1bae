//! Time-varying gain functions `Υ(t)` and the initial-gain rules.

use alloc::vec::Vec;

use crate::diff::Jet;
use crate::{Error, Result};

/// A strictly increasing, positive time-varying gain `Υ(t)` on `t ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GainFunction {
    /// `Υ(t) = 1 + t`.
    Linear,
    /// `Υ(t) = (1 + t)^p`, `p > 0`.
    Polynomial { p: f64 },
    /// `Υ(t) = a·e^{αt}`, `a > 0`, `α > 0`.
    Exponential { a: f64, alpha: f64 },
    /// `Υ(t) = Υ₀ / (T − t)` on `[0, T)`.
    ///
    /// Blows up at `T`; kept only as a finite-horizon comparison baseline and
    /// unsuitable for persistent safety.
    PrescribedTime { upsilon0: f64, horizon: f64 },
}

impl GainFunction {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            GainFunction::Linear => true,
            GainFunction::Polynomial { p } => p > 0.0,
            GainFunction::Exponential { a, alpha } => a > 0.0 && alpha > 0.0,
            GainFunction::PrescribedTime { upsilon0, horizon } => upsilon0 > 0.0 && horizon > 0.0,
        };
        if ok && self.params_finite() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(
                "gain-function parameters must be positive",
            ))
        }
    }

    fn params_finite(&self) -> bool {
        match *self {
            GainFunction::Linear => true,
            GainFunction::Polynomial { p } => p.is_finite(),
            GainFunction::Exponential { a, alpha } => a.is_finite() && alpha.is_finite(),
            GainFunction::PrescribedTime { upsilon0, horizon } => {
                upsilon0.is_finite() && horizon.is_finite()
            }
        }
    }

    pub fn is_prescribed_time(&self) -> bool {
        matches!(self, GainFunction::PrescribedTime { .. })
    }

    /// Right end of the domain (`∞` except for the prescribed-time form).
    pub fn horizon(&self) -> f64 {
        match *self {
            GainFunction::PrescribedTime { horizon, .. } => horizon,
            _ => f64::INFINITY,
        }
    }

    pub fn check_domain(&self, t: f64) -> Result<()> {
        let horizon = self.horizon();
        if t >= 0.0 && t < horizon {
            Ok(())
        } else {
            Err(Error::GainDomain { t, horizon })
        }
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        upsilon(self, t)
    }

    /// `Υ` as a jet in time, given the time jet `t`.
    pub fn eval_jet(&self, t: &Jet) -> Result<Jet> {
        self.check_domain(t.value())?;
        match *self {
            GainFunction::Linear => Ok(t + 1.0),
            GainFunction::Polynomial { p } => (t + 1.0).powf(p),
            GainFunction::Exponential { a, alpha } => Ok((t * alpha).exp() * a),
            GainFunction::PrescribedTime { upsilon0, horizon } => {
                Ok((horizon - t.clone()).recip()? * upsilon0)
            }
        }
    }
}

/// `Υ(t)`.
pub fn upsilon(g: &GainFunction, t: f64) -> Result<f64> {
    g.check_domain(t)?;
    Ok(match *g {
        GainFunction::Linear => 1.0 + t,
        GainFunction::Polynomial { p } => libm::pow(1.0 + t, p),
        GainFunction::Exponential { a, alpha } => a * libm::exp(alpha * t),
        GainFunction::PrescribedTime { upsilon0, horizon } => upsilon0 / (horizon - t),
    })
}

/// `∫_{t0}^{t} Υ(s)^k ds`, in closed form for every kind.
pub fn upsilon_power_integral(g: &GainFunction, k: f64, t0: f64, t: f64) -> Result<f64> {
    if !(k > 0.0) {
        return Err(Error::InvalidParameter(
            "integral exponent must be positive",
        ));
    }
    if t < t0 {
        return Err(Error::InvalidParameter(
            "integral upper limit below lower limit",
        ));
    }
    g.check_domain(t0)?;
    g.check_domain(t)?;
    if t == t0 {
        return Ok(0.0);
    }
    // ∫ (1+s)^q ds = ((1+t)^{q+1} − (1+t0)^{q+1}) / (q+1)
    let power_law =
        |q: f64| (libm::pow(1.0 + t, q + 1.0) - libm::pow(1.0 + t0, q + 1.0)) / (q + 1.0);
    Ok(match *g {
        GainFunction::Linear => power_law(k),
        GainFunction::Polynomial { p } => power_law(p * k),
        GainFunction::Exponential { a, alpha } => {
            let r = alpha * k;
            libm::pow(a, k) * libm::exp(r * t0) * libm::expm1(r * (t - t0)) / r
        }
        GainFunction::PrescribedTime { upsilon0, horizon } => {
            let (rem0, rem) = (horizon - t0, horizon - t);
            let scale = libm::pow(upsilon0, k);
            if k == 1.0 {
                scale * libm::log(rem0 / rem)
            } else {
                -scale * (libm::pow(rem, 1.0 - k) - libm::pow(rem0, 1.0 - k)) / (1.0 - k)
            }
        }
    })
}

/// Backstepping gains `ϱ₁ … ϱₙ`, the exponent factor `ϑ ≥ 1` and `Υ`.
///
/// Level `i` is scaled by `Υ(t)^{ϑ·i}`. The `robust` flag selects the
/// perturbed construction with `Λᵢ` terms.
#[derive(Debug, Clone, PartialEq)]
pub struct GainSchedule {
    gains: Vec<f64>,
    vartheta: f64,
    function: GainFunction,
    robust: bool,
}

impl GainSchedule {
    pub fn new(
        gains: Vec<f64>,
        vartheta: f64,
        function: GainFunction,
        robust: bool,
    ) -> Result<Self> {
        if gains.is_empty() {
            return Err(Error::InvalidParameter(
                "gain schedule needs at least one gain",
            ));
        }
        if gains.iter().any(|g| !(*g > 0.0) || !g.is_finite()) {
            return Err(Error::InvalidParameter("gains must be positive and finite"));
        }
        if !(vartheta >= 1.0) || !vartheta.is_finite() {
            return Err(Error::InvalidParameter(
                "exponent factor must be at least 1",
            ));
        }
        function.validate()?;
        Ok(Self {
            gains,
            vartheta,
            function,
            robust,
        })
    }

    pub fn gains(&self) -> &[f64] {
        &self.gains
    }

    /// `ϱᵢ`, 1-based.
    pub fn gain(&self, level: usize) -> f64 {
        self.gains[level - 1]
    }

    pub fn vartheta(&self) -> f64 {
        self.vartheta
    }

    pub fn function(&self) -> &GainFunction {
        &self.function
    }

    pub fn robust(&self) -> bool {
        self.robust
    }

    /// Exponent `ϑ·i` applied to `Υ` at level `i`.
    pub fn exponent(&self, level: usize) -> f64 {
        self.vartheta * level as f64
    }

    pub fn with_robust(&self, robust: bool) -> Self {
        Self {
            robust,
            ..self.clone()
        }
    }

    pub fn with_gains(&self, gains: Vec<f64>) -> Result<Self> {
        Self::new(gains, self.vartheta, self.function, self.robust)
    }
}

/// Smallest admissible gain plus `margin`, making the next barrier level
/// strictly positive at `t₀` in the disturbance-free construction.
///
/// `upsilon0` is the already-scaled factor `Υ(t₀)^{ϑ(i−1)}`.
pub fn initial_gain_unperturbed(
    h_val: f64,
    lfh_val: f64,
    upsilon0: f64,
    margin: f64,
) -> Result<f64> {
    initial_gain_perturbed(h_val, lfh_val, 0.0, upsilon0, margin)
}

/// As [`initial_gain_unperturbed`], also dominating the robustness term
/// `lambda_val`.
pub fn initial_gain_perturbed(
    h_val: f64,
    lfh_val: f64,
    lambda_val: f64,
    upsilon0: f64,
    margin: f64,
) -> Result<f64> {
    if !(h_val > 0.0) {
        return Err(Error::UnsafeInitialization {
            level: 0,
            value: h_val,
        });
    }
    if !(margin > 0.0) {
        return Err(Error::InvalidParameter("gain margin must be positive"));
    }
    if !(upsilon0 > 0.0) {
        return Err(Error::InvalidParameter(
            "initial gain scale must be positive",
        ));
    }
    if !(lambda_val >= 0.0) {
        return Err(Error::InvalidParameter(
            "robustness term must be nonnegative",
        ));
    }
    let infimum = (lambda_val - lfh_val) / (upsilon0 * h_val);
    Ok(infimum.max(0.0) + margin)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn upsilon_values() {
        assert_eq!(upsilon(&GainFunction::Linear, 0.0).unwrap(), 1.0);
        assert_eq!(upsilon(&GainFunction::Linear, 2.0).unwrap(), 3.0);
        let e = GainFunction::Exponential { a: 1.0, alpha: 0.5 };
        assert_eq!(upsilon(&e, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn prescribed_time_domain() {
        let g = GainFunction::PrescribedTime {
            upsilon0: 1.0,
            horizon: 2.0,
        };
        assert_relative_eq!(upsilon(&g, 1.0).unwrap(), 1.0);
        assert!(matches!(upsilon(&g, 2.0), Err(Error::GainDomain { .. })));
        assert!(matches!(upsilon(&g, 3.0), Err(Error::GainDomain { .. })));
        assert!(upsilon_power_integral(&g, 1.0, 0.0, 2.5).is_err());
        assert!(upsilon(&GainFunction::Linear, -0.5).is_err());
    }

    #[test]
    fn integrals() {
        let g = GainFunction::Linear;
        assert_relative_eq!(upsilon_power_integral(&g, 1.0, 0.0, 2.0).unwrap(), 4.0);
        assert_relative_eq!(
            upsilon_power_integral(&g, 2.0, 0.0, 1.0).unwrap(),
            7.0 / 3.0,
            epsilon = 1e-15
        );
        assert_eq!(upsilon_power_integral(&g, 3.0, 1.5, 1.5).unwrap(), 0.0);
        let pt = GainFunction::PrescribedTime {
            upsilon0: 2.0,
            horizon: 5.0,
        };
        // k = 1: Υ₀ ln((T−t0)/(T−t)) = 2 ln(5/1)
        assert_relative_eq!(
            upsilon_power_integral(&pt, 1.0, 0.0, 4.0).unwrap(),
            2.0 * libm::log(5.0),
            epsilon = 1e-14
        );
        // k = 2: Υ₀² (1/(T−t) − 1/(T−t0)) = 4 (1 − 1/5)
        assert_relative_eq!(
            upsilon_power_integral(&pt, 2.0, 0.0, 4.0).unwrap(),
            3.2,
            epsilon = 1e-14
        );
    }

    #[test]
    fn gain_rules() {
        assert_relative_eq!(initial_gain_unperturbed(1.0, -2.0, 1.0, 0.1).unwrap(), 2.1);
        assert_relative_eq!(initial_gain_unperturbed(1.0, 5.0, 1.0, 0.1).unwrap(), 0.1);
        assert_relative_eq!(initial_gain_unperturbed(2.0, -2.0, 2.0, 0.5).unwrap(), 1.0);
        assert_relative_eq!(
            initial_gain_perturbed(1.0, -2.0, 0.5, 1.0, 0.1).unwrap(),
            2.6
        );
        assert_relative_eq!(
            initial_gain_perturbed(1.0, 10.0, 0.5, 1.0, 0.1).unwrap(),
            0.1
        );
        assert_eq!(
            initial_gain_perturbed(1.3, -0.4, 0.0, 1.7, 0.2).unwrap(),
            initial_gain_unperturbed(1.3, -0.4, 1.7, 0.2).unwrap()
        );
    }

    #[test]
    fn gain_rule_errors() {
        assert!(matches!(
            initial_gain_unperturbed(0.0, 1.0, 1.0, 0.1),
            Err(Error::UnsafeInitialization { .. })
        ));
        assert!(matches!(
            initial_gain_perturbed(-1.0, 1.0, 0.0, 1.0, 0.1),
            Err(Error::UnsafeInitialization { .. })
        ));
        assert!(initial_gain_unperturbed(1.0, 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn schedule_validation() {
        assert!(GainSchedule::new(vec![1.0, 2.0], 1.0, GainFunction::Linear, true).is_ok());
        assert!(GainSchedule::new(vec![1.0, 0.0], 1.0, GainFunction::Linear, true).is_err());
        assert!(GainSchedule::new(vec![1.0], 0.5, GainFunction::Linear, true).is_err());
        assert!(GainSchedule::new(
            vec![1.0],
            1.0,
            GainFunction::Exponential { a: 0.0, alpha: 1.0 },
            true
        )
        .is_err());
    }
}
