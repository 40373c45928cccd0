//! Misbehaviour policies and the goodput robustness harness.

mod robustness;

use alloc::vec::Vec;
use core::fmt;

use crate::analytics::{MacParams, DIFS_SLOTS};
use crate::math::round;

pub use robustness::{
    brute_force_best_prefix, enumerate_strategies, mean_goodput, minimal_delta, penalty_sequence,
    PrefixSearch, StrategyRecord, StrategyTrace, MAX_SEARCH_SPACE,
};

/// TXOP held by the large-TXOP misbehaviour, in microseconds.
pub const DEFAULT_LARGE_TXOP_US: f64 = 6413.0;

/// Channel access behaviour of a station.
#[derive(Debug, Clone, PartialEq)]
pub enum BehaviourPolicy {
    Compliant,
    /// CW_min halved (16); CW_max and binary exponential backoff untouched.
    CwMinHalved,
    /// CW_min = CW_max = `cw`: no exponential backoff.
    FixedCw(u32),
    /// Post-busy defer of SIFS only (no extra idle slots).
    AifsSifs,
    /// Holds the medium for several frames per access.
    LargeTxop(f64),
    /// Per-window target deviations `y(t) = x(t) / x_fair - 1`, realised as
    /// a fixed contention window chosen each window.
    Scripted(Vec<f64>),
}

impl BehaviourPolicy {
    /// MAC parameters the policy starts with.
    pub fn mac_params(&self) -> MacParams {
        let base = MacParams::compliant();
        match self {
            BehaviourPolicy::Compliant | BehaviourPolicy::Scripted(_) => base,
            BehaviourPolicy::CwMinHalved => MacParams {
                cw_min: base.cw_min / 2,
                max_backoff_stage: base.max_backoff_stage + 1,
                ..base
            },
            BehaviourPolicy::FixedCw(cw) => fixed_cw_params(*cw),
            BehaviourPolicy::AifsSifs => MacParams { aifs_slots: 0, ..base },
            BehaviourPolicy::LargeTxop(us) => MacParams { txop_limit_us: *us, ..base },
        }
    }

    pub fn is_compliant(&self) -> bool {
        matches!(self, BehaviourPolicy::Compliant)
    }

    pub fn name(&self) -> &'static str {
        match self {
            BehaviourPolicy::Compliant => "compliant",
            BehaviourPolicy::CwMinHalved => "cwmin-halved",
            BehaviourPolicy::FixedCw(_) => "fixed-cw",
            BehaviourPolicy::AifsSifs => "aifs-sifs",
            BehaviourPolicy::LargeTxop(_) => "large-txop",
            BehaviourPolicy::Scripted(_) => "scripted",
        }
    }
}

impl fmt::Display for BehaviourPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BehaviourPolicy::FixedCw(cw) => write!(f, "fixed-cw({cw})"),
            BehaviourPolicy::LargeTxop(us) => write!(f, "large-txop({us})"),
            other => f.write_str(other.name()),
        }
    }
}

fn fixed_cw_params(cw: u32) -> MacParams {
    MacParams {
        cw_min: cw.max(1),
        max_backoff_stage: 0,
        retry_limit: MacParams::compliant().retry_limit,
        aifs_slots: DIFS_SLOTS,
        txop_limit_us: 0.0,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AdversaryError {
    /// Requested attempt rate cannot be reached even with CW = 1.
    Saturated { target: f64 },
    InvalidTarget(f64),
    InvalidTrace(&'static str),
    /// `|grid|^T` exceeds [`MAX_SEARCH_SPACE`].
    SearchTooLarge { size: f64 },
}

impl fmt::Display for AdversaryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AdversaryError::Saturated { target } => {
                write!(f, "attempt rate {target} unreachable: saturated at CW = 1")
            }
            AdversaryError::InvalidTarget(x) => write!(f, "invalid attempt-rate target {x}"),
            AdversaryError::InvalidTrace(msg) => write!(f, "invalid strategy trace: {msg}"),
            AdversaryError::SearchTooLarge { size } => {
                write!(f, "search space of {size:e} sequences exceeds the limit")
            }
        }
    }
}

impl core::error::Error for AdversaryError {}

/// Fixed contention window that makes a station attempt at `(1 + y) x_fair`.
///
/// With CW_min = CW_max the attempt probability is `2 / (W + 1)` whatever the
/// failure probability, so `W = 2 / x - 1`, rounded to the nearest integer
/// (halves round up).
pub fn scripted_station_rate(y: f64, fair_rate: f64) -> Result<MacParams, AdversaryError> {
    let target = (1.0 + y) * fair_rate;
    if !target.is_finite() || target <= 0.0 {
        return Err(AdversaryError::InvalidTarget(target));
    }
    if target >= 1.0 {
        return Err(AdversaryError::Saturated { target });
    }
    let w = round(2.0 / target - 1.0);
    if w < 1.0 {
        return Err(AdversaryError::Saturated { target });
    }
    Ok(fixed_cw_params(w.min(u32::MAX as f64) as u32))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn policy_parameters() {
        let c = BehaviourPolicy::Compliant.mac_params();
        assert_eq!((c.cw_min, c.cw_max(), c.aifs_slots, c.txop_limit_us), (32, 1024, 2, 0.0));
        let h = BehaviourPolicy::CwMinHalved.mac_params();
        assert_eq!((h.cw_min, h.cw_max()), (16, 1024));
        let f = BehaviourPolicy::FixedCw(16).mac_params();
        assert_eq!((f.cw_min, f.cw_max()), (16, 16));
        assert_eq!(BehaviourPolicy::AifsSifs.mac_params().aifs_slots, 0);
        let t = BehaviourPolicy::LargeTxop(DEFAULT_LARGE_TXOP_US).mac_params();
        assert_eq!(t.txop_limit_us, 6413.0);
        for p in [h, f, t] {
            p.validate().unwrap();
        }
    }

    #[test]
    fn scripted_windows() {
        let fair = 2.0 / 33.0;
        assert_eq!(scripted_station_rate(0.0, fair).unwrap().cw_min, 32);
        // 2 / (4/33) - 1 = 15.5, rounds up.
        assert_eq!(scripted_station_rate(1.0, fair).unwrap().cw_min, 16);
        assert_eq!(scripted_station_rate(1.0, fair).unwrap().max_backoff_stage, 0);
        assert!(matches!(scripted_station_rate(0.0, 1.0), Err(AdversaryError::Saturated { .. })));
        assert!(matches!(scripted_station_rate(15.0, 0.1), Err(AdversaryError::Saturated { .. })));
        assert!(scripted_station_rate(-1.0, fair).is_err());
    }
}
