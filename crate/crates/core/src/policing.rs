//! Per-station penalty controller.
//!
//! Once per update window the AP compares each station's measured rate with
//! the fair rate and moves the station's penalty by `alpha * (ratio - 1)`.
//! The penalty is unbounded above; the ACK suppression probability is the
//! penalty clamped to 1. Penalties survive disassociation.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StationId(pub u32);

impl fmt::Display for StationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "S{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyState {
    pub station_id: StationId,
    /// Accumulated penalty, never negative.
    pub penalty: f64,
    /// ACK suppression probability, `min(penalty, 1)`.
    pub p_nack: f64,
    /// Consecutive windows that ended with `p_nack == 1`.
    pub windows_at_full_suppression: u32,
}

impl PenaltyState {
    pub fn new(station_id: StationId) -> Self {
        Self::with_penalty(station_id, 0.0)
    }

    pub fn with_penalty(station_id: StationId, penalty: f64) -> Self {
        let penalty = penalty.max(0.0);
        PenaltyState { station_id, penalty, p_nack: penalty.min(1.0), windows_at_full_suppression: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerConfig {
    /// Reaction speed, `0 < alpha < 1`.
    pub alpha: f64,
    /// Simulated seconds between penalty updates.
    pub update_period_s: f64,
    /// Consecutive full-suppression windows before the station is disassociated.
    pub disassociation_threshold: u32,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        ControllerConfig { alpha: 0.1, update_period_s: 10.0, disassociation_threshold: 6 }
    }
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<(), PolicingError> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(PolicingError::InvalidConfig("alpha must lie in (0, 1)"));
        }
        if !(self.update_period_s > 0.0) || !self.update_period_s.is_finite() {
            return Err(PolicingError::InvalidConfig("update period must be positive"));
        }
        if self.disassociation_threshold == 0 {
            return Err(PolicingError::InvalidConfig("disassociation threshold must be at least 1"));
        }
        Ok(())
    }
}

/// One station's rate over an update window. Both rates share a unit
/// (attempts or correctly received frames per slot).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateMeasurement {
    pub station_id: StationId,
    pub measured_rate: f64,
    pub fair_rate: f64,
    pub window_slots: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Escalation {
    Continue,
    /// Suppression is total: data frames are discarded along with their ACKs.
    DropDataToo,
    Disassociate,
}

impl Escalation {
    pub fn as_str(&self) -> &'static str {
        match self {
            Escalation::Continue => "continue",
            Escalation::DropDataToo => "drop-data",
            Escalation::Disassociate => "disassociate",
        }
    }
}

impl fmt::Display for Escalation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PolicingError {
    /// No usable fair-rate estimate for this window; the update is skipped.
    EstimationFailure { station_id: StationId, fair_rate: f64 },
    InvalidConfig(&'static str),
}

impl fmt::Display for PolicingError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicingError::EstimationFailure { station_id, fair_rate } => {
                write!(f, "no fair-rate estimate for {station_id} (fair rate {fair_rate})")
            }
            PolicingError::InvalidConfig(msg) => write!(f, "invalid controller config: {msg}"),
        }
    }
}

impl core::error::Error for PolicingError {}

/// `p' = max(0, p + alpha (measured / fair - 1))`, `P_NACK' = min(p', 1)`.
pub fn update_penalty(
    state: &PenaltyState,
    meas: &RateMeasurement,
    cfg: &ControllerConfig,
) -> Result<PenaltyState, PolicingError> {
    if !(meas.fair_rate > 0.0) || !meas.fair_rate.is_finite() || !meas.measured_rate.is_finite() {
        log::warn!(
            "skipping penalty update for {}: fair rate {} unusable",
            state.station_id,
            meas.fair_rate
        );
        return Err(PolicingError::EstimationFailure {
            station_id: state.station_id,
            fair_rate: meas.fair_rate,
        });
    }
    let penalty = (state.penalty + cfg.alpha * (meas.measured_rate / meas.fair_rate - 1.0)).max(0.0);
    let p_nack = penalty.min(1.0);
    let windows_at_full_suppression =
        if p_nack >= 1.0 { state.windows_at_full_suppression + 1 } else { 0 };
    Ok(PenaltyState { station_id: state.station_id, penalty, p_nack, windows_at_full_suppression })
}

/// ACK decision for one correctly received frame given a uniform draw
/// `u` in `[0, 1)`: suppressed with probability exactly `p_nack`.
#[inline]
pub fn should_ack(state: &PenaltyState, u: f64) -> bool {
    u >= state.p_nack
}

pub fn escalation_check(state: &PenaltyState, cfg: &ControllerConfig) -> Escalation {
    if state.p_nack < 1.0 {
        Escalation::Continue
    } else if state.windows_at_full_suppression >= cfg.disassociation_threshold {
        Escalation::Disassociate
    } else {
        Escalation::DropDataToo
    }
}

/// Penalties of stations that are not currently associated.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PenaltyArchive {
    archived: BTreeMap<StationId, PenaltyState>,
}

impl PenaltyArchive {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn on_disassociate(&mut self, state: PenaltyState) -> PenaltyState {
        self.archived.insert(state.station_id, state);
        state
    }

    /// Restores the archived penalty, or starts a fresh state at zero.
    pub fn on_reassociate(&mut self, station_id: StationId) -> PenaltyState {
        self.archived
            .remove(&station_id)
            .unwrap_or_else(|| PenaltyState::new(station_id))
    }

    pub fn get(&self, station_id: StationId) -> Option<&PenaltyState> {
        self.archived.get(&station_id)
    }

    pub fn len(&self) -> usize {
        self.archived.len()
    }

    pub fn is_empty(&self) -> bool {
        self.archived.is_empty()
    }
}

/// Read-only copy of every associated station's suppression probability,
/// published at window boundaries for the per-frame ACK path.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SuppressionSnapshot {
    p_nack: BTreeMap<StationId, f64>,
}

impl SuppressionSnapshot {
    pub fn p_nack(&self, station_id: StationId) -> f64 {
        self.p_nack.get(&station_id).copied().unwrap_or(0.0)
    }
}

/// Outcome of one station's window update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateRecord {
    pub state: PenaltyState,
    pub escalation: Escalation,
    /// False when the update was skipped for lack of a fair-rate estimate.
    pub applied: bool,
}

/// The AP-side station table: live penalty states plus the archive.
#[derive(Debug, Clone)]
pub struct Controller {
    cfg: ControllerConfig,
    live: BTreeMap<StationId, PenaltyState>,
    archive: PenaltyArchive,
}

impl Controller {
    pub fn new(cfg: ControllerConfig) -> Result<Self, PolicingError> {
        cfg.validate()?;
        Ok(Controller { cfg, live: BTreeMap::new(), archive: PenaltyArchive::new() })
    }

    pub fn config(&self) -> &ControllerConfig {
        &self.cfg
    }

    pub fn associate(&mut self, station_id: StationId) -> PenaltyState {
        let state = self.archive.on_reassociate(station_id);
        self.live.insert(station_id, state);
        state
    }

    /// Associates a station that has never been seen with a preset penalty.
    pub fn associate_with_penalty(&mut self, station_id: StationId, penalty: f64) -> PenaltyState {
        let state = PenaltyState::with_penalty(station_id, penalty);
        self.live.insert(station_id, state);
        state
    }

    pub fn disassociate(&mut self, station_id: StationId) -> Option<PenaltyState> {
        self.live.remove(&station_id).map(|s| self.archive.on_disassociate(s))
    }

    pub fn state(&self, station_id: StationId) -> Option<&PenaltyState> {
        self.live.get(&station_id)
    }

    pub fn archived(&self, station_id: StationId) -> Option<&PenaltyState> {
        self.archive.get(station_id)
    }

    pub fn is_associated(&self, station_id: StationId) -> bool {
        self.live.contains_key(&station_id)
    }

    /// Applies one window's measurement. An unusable fair rate leaves the
    /// state unchanged.
    pub fn update(&mut self, meas: &RateMeasurement) -> Option<UpdateRecord> {
        let current = *self.live.get(&meas.station_id)?;
        let (state, applied) = match update_penalty(&current, meas, &self.cfg) {
            Ok(next) => (next, true),
            Err(_) => (current, false),
        };
        self.live.insert(meas.station_id, state);
        Some(UpdateRecord { state, escalation: escalation_check(&state, &self.cfg), applied })
    }

    pub fn snapshot(&self) -> SuppressionSnapshot {
        SuppressionSnapshot { p_nack: self.live.iter().map(|(id, s)| (*id, s.p_nack)).collect() }
    }

    pub fn live_states(&self) -> Vec<PenaltyState> {
        self.live.values().copied().collect()
    }
}
