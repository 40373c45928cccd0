//! Closed-form 802.11 DCF models.
//!
//! Everything here is a pure function over value types. The simulator and
//! the controller use these to turn an observed virtual-MAC failure fraction
//! into the attempt rate a compliant saturated station would achieve.

mod backoff;
mod estimator;
mod fixed_point;
mod timing;

use core::fmt;

pub use backoff::{attempt_probability, effective_failure, normalized_attempt};
pub use estimator::{
    fair_attempt_rate, invert_virtual_failure, required_samples, update_interval_s, virtual_failure,
    EstimatorConfig,
};
pub use fixed_point::{
    heterogeneous_fixed_point, homogeneous_fixed_point, ClassSpec, FixedPoint,
    BISECTION_MAX_ITERATIONS, DAMPING,
};
pub use timing::{expected_slot_duration, throughput, PhyTiming, SlotProbabilities, Throughput};

/// Contention configuration of one station class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MacParams {
    /// Minimum contention window `W` (slots).
    pub cw_min: u32,
    /// Maximum backoff stage `m`; `CW_max = W * 2^m`.
    pub max_backoff_stage: u32,
    /// Retry limit `R`: a frame is dropped after `R + 1` failed attempts.
    pub retry_limit: u32,
    /// Idle slots sensed after a busy period before countdown resumes.
    /// The compliant value (DIFS) is 2.
    pub aifs_slots: u32,
    /// Transmission opportunity in microseconds, 0 for one frame per access.
    pub txop_limit_us: f64,
}

/// AIFS of a compliant station, in slots after SIFS (DIFS = SIFS + 2 slots).
pub const DIFS_SLOTS: u32 = 2;

impl MacParams {
    /// Default 802.11 DCF values: CW_min 32, CW_max 1024, retry limit 7,
    /// AIFS = DIFS, no TXOP.
    pub const fn compliant() -> Self {
        MacParams {
            cw_min: 32,
            max_backoff_stage: 5,
            retry_limit: 7,
            aifs_slots: DIFS_SLOTS,
            txop_limit_us: 0.0,
        }
    }

    pub fn cw_max(&self) -> u64 {
        (self.cw_min as u64) << self.max_backoff_stage
    }

    /// Contention window used at backoff stage `stage` (capped at `m`).
    pub fn window_at(&self, stage: u32) -> u64 {
        (self.cw_min as u64) << stage.min(self.max_backoff_stage)
    }

    pub fn validate(&self) -> Result<(), AnalyticsError> {
        if self.cw_min < 1 {
            return Err(AnalyticsError::InvalidParams("cw_min must be at least 1"));
        }
        if self.max_backoff_stage > 20 {
            return Err(AnalyticsError::InvalidParams("max_backoff_stage must be at most 20"));
        }
        if self.retry_limit < self.max_backoff_stage {
            return Err(AnalyticsError::InvalidParams(
                "retry_limit must be at least max_backoff_stage",
            ));
        }
        if !(self.txop_limit_us >= 0.0) || !self.txop_limit_us.is_finite() {
            return Err(AnalyticsError::InvalidParams("txop_limit_us must be finite and >= 0"));
        }
        Ok(())
    }
}

impl Default for MacParams {
    fn default() -> Self {
        Self::compliant()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AnalyticsError {
    /// An input probability (or similar) fell outside its domain.
    Domain { what: &'static str, value: f64 },
    InvalidParams(&'static str),
    /// A virtual failure probability below `g(0)`, i.e. fewer than zero
    /// contenders besides the hypothetical fair station.
    BelowSingleStation { f_v: f64, floor: f64 },
    NoConvergence { iterations: u32, residual: f64 },
}

impl fmt::Display for AnalyticsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnalyticsError::Domain { what, value } => {
                write!(f, "{what} = {value} is outside its domain")
            }
            AnalyticsError::InvalidParams(msg) => write!(f, "invalid MAC parameters: {msg}"),
            AnalyticsError::BelowSingleStation { f_v, floor } => write!(
                f,
                "virtual failure {f_v} is below the single-station floor {floor} (fewer than zero contenders)"
            ),
            AnalyticsError::NoConvergence { iterations, residual } => write!(
                f,
                "fixed point did not converge after {iterations} iterations (residual {residual:e})"
            ),
        }
    }
}

impl core::error::Error for AnalyticsError {}

pub(crate) fn check_probability(what: &'static str, value: f64) -> Result<(), AnalyticsError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(AnalyticsError::Domain { what, value })
    }
}

/// Bisection for an increasing function `h` with `h(lo) <= 0 <= h(hi)`.
/// Stops after [`BISECTION_MAX_ITERATIONS`] halvings or once the bracket is
/// narrower than `tol`.
pub(crate) fn bisect_increasing<F>(mut h: F, mut lo: f64, mut hi: f64, tol: f64) -> f64
where
    F: FnMut(f64) -> f64,
{
    for _ in 0..BISECTION_MAX_ITERATIONS {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if h(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
