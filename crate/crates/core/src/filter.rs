//! Closed-form QP safety filter.
//!
//! The filter solves
//!
//! ```text
//! min ‖u − u_no‖²  s.t.  ∂hₙ/∂t + L_f hₙ + L_g hₙ·u − Λₙ + ϱₙ Υ(t)^{ϑn} hₙ ≥ 0
//! ```
//!
//! whose KKT solution is a passthrough when the slack `ζ(x, u_no)` is
//! nonnegative and a minimal-norm correction onto the constraint boundary
//! otherwise.

use alloc::vec::Vec;

use crate::barrier::BarrierChain;
use crate::{Error, Result};

/// Below this `‖L_g hₙ‖` a violated constraint cannot be repaired.
pub const SINGULAR_ROW_NORM: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Passthrough,
    Corrected,
}

impl Branch {
    pub fn as_str(&self) -> &'static str {
        match self {
            Branch::Passthrough => "passthrough",
            Branch::Corrected => "corrected",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterDecision {
    /// Safe input.
    pub u: Vec<f64>,
    /// `ζ(x, u_no)`.
    pub zeta: f64,
    pub branch: Branch,
    /// `L_g hₙ`.
    pub row: Vec<f64>,
    /// Input-independent part of the constraint; the constraint reads
    /// `row·u + offset ≥ 0`.
    pub offset: f64,
}

/// Affine constraint `row·u + offset ≥ 0` at `(x, t)`.
pub(crate) fn constraint(chain: &BarrierChain, x: &[f64], t: f64) -> Result<(Vec<f64>, f64)> {
    let n = chain.order();
    let hn = chain.eval_level(n, x, t)?;
    let row = chain.lie_input(&hn);
    let lf = chain.lie_drift(&hn, x)?;
    let lambda = chain.lambda_at(&hn)?;
    let schedule = chain.schedule();
    let ups = schedule.function().eval(t)?;
    let decay = schedule.gain(n) * libm::pow(ups, schedule.exponent(n)) * hn.value;
    let time_partial = if chain.include_time_partial() {
        hn.time_partial
    } else {
        0.0
    };
    Ok((row, time_partial + lf - lambda + decay))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_input(chain: &BarrierChain, u_no: &[f64]) -> Result<()> {
    let axes = chain.system().axes();
    if u_no.len() != axes {
        return Err(Error::DimensionMismatch {
            what: "nominal input",
            expected: axes,
            got: u_no.len(),
        });
    }
    Ok(())
}

/// Constraint slack at the nominal input.
pub fn zeta(chain: &BarrierChain, x: &[f64], t: f64, u_no: &[f64]) -> Result<f64> {
    check_input(chain, u_no)?;
    let (row, offset) = constraint(chain, x, t)?;
    Ok(offset + dot(&row, u_no))
}

/// The safe input closest to `u_no`.
pub fn safety_filter(
    chain: &BarrierChain,
    x: &[f64],
    t: f64,
    u_no: &[f64],
) -> Result<FilterDecision> {
    check_input(chain, u_no)?;
    let (row, offset) = constraint(chain, x, t)?;
    let zeta = offset + dot(&row, u_no);
    if zeta >= 0.0 {
        return Ok(FilterDecision {
            u: u_no.to_vec(),
            zeta,
            branch: Branch::Passthrough,
            row,
            offset,
        });
    }
    let norm_sq = dot(&row, &row);
    let row_norm = libm::sqrt(norm_sq);
    if row_norm < SINGULAR_ROW_NORM {
        return Err(Error::InfeasibleConstraint { row_norm, zeta });
    }
    let u = u_no
        .iter()
        .zip(&row)
        .map(|(un, r)| un - r * zeta / norm_sq)
        .collect();
    Ok(FilterDecision {
        u,
        zeta,
        branch: Branch::Corrected,
        row,
        offset,
    })
}

/// Euclidean projection of `u_no` onto `{u : row·u ≥ rhs}`.
///
/// Works in the frame spanned by the unit normal: the normal coordinate is
/// clamped from below and the orthogonal complement is kept.
pub fn qp_oracle(u_no: &[f64], row: &[f64], rhs: f64) -> Result<Vec<f64>> {
    if u_no.len() != row.len() {
        return Err(Error::DimensionMismatch {
            what: "constraint row",
            expected: u_no.len(),
            got: row.len(),
        });
    }
    let row_norm = libm::sqrt(row.iter().map(|r| r * r).sum::<f64>());
    if row_norm == 0.0 {
        return if rhs <= 0.0 {
            Ok(u_no.to_vec())
        } else {
            Err(Error::InfeasibleConstraint {
                row_norm,
                zeta: -rhs,
            })
        };
    }
    let normal: Vec<f64> = row.iter().map(|r| r / row_norm).collect();
    let along: f64 = u_no.iter().zip(&normal).map(|(a, b)| a * b).sum();
    let orthogonal: Vec<f64> = u_no
        .iter()
        .zip(&normal)
        .map(|(a, nrm)| a - along * nrm)
        .collect();
    let clamped = along.max(rhs / row_norm);
    Ok(orthogonal
        .iter()
        .zip(&normal)
        .map(|(o, nrm)| o + clamped * nrm)
        .collect())
}
