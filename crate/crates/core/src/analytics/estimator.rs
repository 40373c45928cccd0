use alloc::vec;

use super::{
    attempt_probability, bisect_increasing, homogeneous_fixed_point, throughput, AnalyticsError,
    MacParams, PhyTiming,
};
use crate::math::ceil;

/// Sizing of the virtual-MAC failure estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorConfig {
    /// Two-sided normal quantile (1.96 for 95 % confidence).
    pub z_score: f64,
    /// Half-width of the confidence interval on the failure probability.
    pub epsilon: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig { z_score: 1.96, epsilon: 0.01 }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<(), AnalyticsError> {
        if !(self.z_score > 0.0) || !self.z_score.is_finite() {
            return Err(AnalyticsError::Domain { what: "z-score", value: self.z_score });
        }
        if !(self.epsilon > 0.0 && self.epsilon < 0.5) {
            return Err(AnalyticsError::Domain { what: "epsilon", value: self.epsilon });
        }
        Ok(())
    }
}

/// Failure probability seen by a saturated virtual station added to a network
/// in which a fair saturated station sees collision probability `f1`:
/// `f_v = 1 - (1 - g(f1)) (1 - f1)`.
pub fn virtual_failure(f1: f64, params: &MacParams) -> Result<f64, AnalyticsError> {
    let g = attempt_probability(f1, params)?;
    Ok(1.0 - (1.0 - g) * (1.0 - f1))
}

/// Rounding slack when comparing against `g(0)`.
const FLOOR_SLACK: f64 = 1e-12;

/// Inverse of [`virtual_failure`] by bisection. `f_v` below `g(0)` means the
/// virtual station saw less contention than a lone fair station would cause.
pub fn invert_virtual_failure(f_v: f64, params: &MacParams) -> Result<f64, AnalyticsError> {
    let floor = attempt_probability(0.0, params)?;
    if !(f_v < 1.0) || f_v.is_nan() {
        return Err(AnalyticsError::Domain { what: "virtual failure probability", value: f_v });
    }
    if f_v < floor - FLOOR_SLACK {
        return Err(AnalyticsError::BelowSingleStation { f_v, floor });
    }
    if f_v <= floor {
        return Ok(0.0);
    }
    let h = |f1: f64| virtual_failure(f1, params).unwrap_or(1.0) - f_v;
    Ok(bisect_increasing(h, 0.0, 1.0 - 1e-12, 1e-15))
}

/// Attempt probability a fair saturated station achieves when the virtual
/// station observes failure probability `f_v`.
pub fn fair_attempt_rate(f_v: f64, params: &MacParams) -> Result<f64, AnalyticsError> {
    attempt_probability(invert_virtual_failure(f_v, params)?, params)
}

/// Observations needed for a `z`-confidence interval of half-width `epsilon`
/// on a Bernoulli mean, using the worst-case variance 1/4:
/// `N = ceil((z / (2 epsilon))^2)`.
pub fn required_samples(cfg: &EstimatorConfig) -> Result<u64, AnalyticsError> {
    cfg.validate()?;
    let half = cfg.z_score / (2.0 * cfg.epsilon);
    // Absorb representation error so exact squares (98^2) are not bumped up.
    Ok(ceil(half * half - 1e-9) as u64)
}

/// Channel observation time, in seconds, for `required_samples` slots in a
/// network of `n` saturated stations: `N * E[T_slot]`.
pub fn update_interval_s(
    n: u32,
    params: &MacParams,
    timing: &PhyTiming,
    cfg: &EstimatorConfig,
) -> Result<f64, AnalyticsError> {
    let samples = required_samples(cfg)?;
    let fp = homogeneous_fixed_point(n, params)?;
    let t = throughput(&vec![fp.attempt; n as usize], timing)?;
    Ok(samples as f64 * t.expected_slot_us * 1e-6)
}
