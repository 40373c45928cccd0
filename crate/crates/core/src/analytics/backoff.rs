use super::{check_probability, AnalyticsError, MacParams};
use crate::math::powi;

/// Half-width of the band around `f = 1/2` where the removable singularity
/// of the attempt-probability formula is evaluated by its limit.
const SINGULAR_BAND: f64 = 1e-9;

/// Stationary per-slot transmission probability `g(f)` of a saturated station
/// with retry-limited binary exponential backoff, given the per-attempt
/// failure probability `f`.
///
/// ```
/// use dcf_police_core::analytics::{attempt_probability, MacParams};
/// let g0 = attempt_probability(0.0, &MacParams::compliant()).unwrap();
/// assert!((g0 - 2.0 / 33.0).abs() < 1e-15);
/// ```
pub fn attempt_probability(f: f64, params: &MacParams) -> Result<f64, AnalyticsError> {
    if !(0.0..1.0).contains(&f) {
        return Err(AnalyticsError::Domain { what: "failure probability", value: f });
    }
    params.validate()?;

    let w = params.cw_min as f64;
    let m = params.max_backoff_stage;
    let r = params.retry_limit;
    let w_max = w * powi(2.0, m);
    let one_minus_f = 1.0 - f;
    let retry_term = 1.0 - powi(f, r + 1);
    let tail_term = 1.0 - powi(f, r - m);
    let f_pow_m1 = powi(f, m + 1);
    let one_minus_2f = 1.0 - 2.0 * f;

    if one_minus_2f.abs() < SINGULAR_BAND {
        // (1 - (2f)^(m+1)) / (1 - 2f) -> m + 1 as f -> 1/2; divide through by (1 - 2f).
        let num = 2.0 * retry_term;
        let den = w * (m as f64 + 1.0) * one_minus_f + retry_term + w_max * f_pow_m1 * tail_term;
        return Ok(num / den);
    }

    let num = 2.0 * one_minus_2f * retry_term;
    let den = w * (1.0 - powi(2.0 * f, m + 1)) * one_minus_f
        + one_minus_2f * retry_term
        + w_max * f_pow_m1 * one_minus_2f * tail_term;
    Ok(num / den)
}

/// Failure probability of an attempt that fails if it collides or if its ACK
/// is suppressed.
pub fn effective_failure(f_collision: f64, p_nack: f64) -> Result<f64, AnalyticsError> {
    check_probability("collision probability", f_collision)?;
    check_probability("ACK suppression probability", p_nack)?;
    Ok(1.0 - (1.0 - f_collision) * (1.0 - p_nack))
}

/// Attempt rate of a compliant station under suppression `p_nack`, relative
/// to its rate without suppression at the same collision probability.
///
/// When the effective failure reaches 1 (full suppression) the left limit
/// `g(1-)` is used, which is finite for a retry-limited station.
pub fn normalized_attempt(f: f64, p_nack: f64, params: &MacParams) -> Result<f64, AnalyticsError> {
    let base = attempt_probability(f, params)?;
    let eff = effective_failure(f, p_nack)?;
    let suppressed = if eff >= 1.0 {
        full_failure_limit(params)?
    } else {
        attempt_probability(eff, params)?
    };
    Ok(suppressed / base)
}

/// `lim_{f -> 1-} g(f)`: every attempt fails, so each frame costs `R + 1`
/// attempts spread over all backoff stages.
pub(crate) fn full_failure_limit(params: &MacParams) -> Result<f64, AnalyticsError> {
    params.validate()?;
    let attempts = (params.retry_limit + 1) as f64;
    let slots: f64 = (0..=params.retry_limit)
        .map(|stage| (params.window_at(stage) as f64 + 1.0) / 2.0)
        .sum();
    Ok(attempts / slots)
}
