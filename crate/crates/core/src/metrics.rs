//! Accuracy/size trade-off scores.
//!
//! The M-factor is the harmonic mean of accuracy `A` and the normalized
//! inverse size `S' = P_min / P`; both live in `[0, 1]` so neither term can
//! dominate by scale. The weighted form `M_alpha` leans toward size as
//! `alpha` grows and toward accuracy as it shrinks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_unit(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::InvalidMetricInput(format!(
            "{name} must lie in [0, 1], got {v}"
        )));
    }
    Ok(())
}

/// `P_min / P`.
pub fn s_prime(params: u64, p_min: u64) -> Result<f64> {
    if p_min == 0 {
        return Err(Error::InvalidSpace("p_min must be positive".into()));
    }
    if params < p_min {
        return Err(Error::InvalidCost { params, p_min });
    }
    Ok(p_min as f64 / params as f64)
}

/// Harmonic mean `2 A S' / (A + S')`, zero at `A = S' = 0`.
pub fn m_factor(accuracy: f64, s: f64) -> Result<f64> {
    check_unit("accuracy", accuracy)?;
    check_unit("s_prime", s)?;
    let denom = accuracy + s;
    if denom == 0.0 {
        return Ok(0.0);
    }
    Ok(2.0 * accuracy * s / denom)
}

/// `(1 + alpha) A S' / (alpha A + S')`, zero when the denominator vanishes.
/// `alpha = 1` gives exactly [`m_factor`].
pub fn m_alpha(accuracy: f64, s: f64, alpha: f64) -> Result<f64> {
    check_unit("accuracy", accuracy)?;
    check_unit("s_prime", s)?;
    if alpha.is_nan() || alpha < 0.0 {
        return Err(Error::InvalidAlpha(alpha));
    }
    let denom = alpha * accuracy + s;
    if denom == 0.0 {
        return Ok(0.0);
    }
    Ok((1.0 + alpha) * accuracy * s / denom)
}

/// Exponents and unit divisors for [`netscore`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetScoreParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub p_scale: f64,
    pub m_scale: f64,
}

impl Default for NetScoreParams {
    fn default() -> Self {
        NetScoreParams {
            alpha: 2.0,
            beta: 0.5,
            gamma: 0.5,
            p_scale: 1e6,
            m_scale: 1e9,
        }
    }
}

/// `20 log10(A^alpha / ((P/p_scale)^beta (MACs/m_scale)^gamma))`, in dB.
pub fn netscore(accuracy: f64, params: u64, macs: u64, p: &NetScoreParams) -> Result<f64> {
    if !(accuracy > 0.0 && accuracy <= 1.0) {
        return Err(Error::InvalidMetricInput(format!(
            "NetScore needs accuracy in (0, 1], got {accuracy}"
        )));
    }
    if params == 0 || macs == 0 {
        return Err(Error::InvalidMetricInput(
            "NetScore needs positive params and MACs".into(),
        ));
    }
    if !(p.p_scale > 0.0 && p.m_scale > 0.0) {
        return Err(Error::InvalidMetricInput("scales must be positive".into()));
    }
    let log = p.alpha * accuracy.log10()
        - p.beta * (params as f64 / p.p_scale).log10()
        - p.gamma * (macs as f64 / p.m_scale).log10();
    Ok(20.0 * log)
}
