//! Seeded slot-level DCF simulator with an AP running the policing controller.
//!
//! Time advances in counted slots: an idle backoff slot, a successful
//! exchange (one frame or a TXOP burst) or a collision. A busy slot already
//! includes the DIFS that follows it. Stations whose AIFS is shorter than
//! DIFS get the difference as extra zero-length countdown steps right after
//! each busy slot, which is where their advantage comes from.
//!
//! Every station with a frame and no remaining defer decrements its backoff
//! counter once per counted slot, busy or idle, and transmits when the
//! counter is zero. This is the slot accounting of the saturation fixed-point
//! model, so a compliant network reproduces its attempt probabilities.
//!
//! Random draws come from one ChaCha8 stream in a fixed order per slot:
//! traffic arrivals (station id order), capture, the AP's ACK decisions,
//! backoff redraws (station id order), then the virtual MAC.

mod station;
mod trace;
mod world;

use alloc::vec::Vec;
use core::fmt;

use crate::adversary::BehaviourPolicy;
use crate::analytics::{EstimatorConfig, PhyTiming};
use crate::policing::{ControllerConfig, StationId};

pub use station::{StationState, VirtualMacState, WindowCounters};
pub use trace::{
    SimEvent, SimEventKind, SimTrace, SlotTotals, StationSummary, WindowRow, WindowSummary,
};
pub use world::{capture_resolve, run, SimClock, Simulator, SlotKind, SlotOutcome};

/// What the AP counts per station when measuring its rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MeasurementMode {
    /// Transmission attempts per slot; the fair rate is `g(f1)`.
    Oracle,
    /// Correct-FCS receptions per slot; the fair rate is `g(f1) (1 - f1)`.
    #[default]
    Realistic,
}

impl MeasurementMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            MeasurementMode::Oracle => "oracle",
            MeasurementMode::Realistic => "realistic",
        }
    }
}

impl fmt::Display for MeasurementMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Frame arrival process of a station.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrafficSource {
    Saturated,
    /// Saturated for `active_s`, then silent for an exponential time with
    /// mean `idle_mean_s`, repeating.
    OnOff { active_s: f64, idle_mean_s: f64 },
    /// One frame arrives per counted slot with this probability.
    Bernoulli { arrival_prob: f64 },
    /// Evenly spaced arrivals in simulated time.
    Cbr { frames_per_s: f64 },
}

impl TrafficSource {
    pub fn name(&self) -> &'static str {
        match self {
            TrafficSource::Saturated => "saturated",
            TrafficSource::OnOff { .. } => "on-off",
            TrafficSource::Bernoulli { .. } => "bernoulli",
            TrafficSource::Cbr { .. } => "cbr",
        }
    }

    fn validate(&self) -> Result<(), &'static str> {
        let ok = match *self {
            TrafficSource::Saturated => true,
            TrafficSource::OnOff { active_s, idle_mean_s } => {
                active_s > 0.0 && idle_mean_s > 0.0 && active_s.is_finite() && idle_mean_s.is_finite()
            }
            TrafficSource::Bernoulli { arrival_prob } => (0.0..=1.0).contains(&arrival_prob),
            TrafficSource::Cbr { frames_per_s } => frames_per_s > 0.0 && frames_per_s.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err("traffic source parameters out of range")
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationSpec {
    pub id: StationId,
    pub policy: BehaviourPolicy,
    pub traffic: TrafficSource,
    /// Capture priority, 0 for none.
    pub capture_priority: u32,
    pub join_time_s: f64,
    pub leave_time_s: Option<f64>,
    /// Re-association after leaving; the archived penalty is restored.
    pub rejoin_time_s: Option<f64>,
    /// Penalty the controller starts this station with.
    pub initial_penalty: Option<f64>,
    /// Fixed ACK suppression probability that bypasses the controller.
    pub forced_p_nack: Option<f64>,
}

impl StationSpec {
    pub fn new(id: u32, policy: BehaviourPolicy) -> Self {
        StationSpec {
            id: StationId(id),
            policy,
            traffic: TrafficSource::Saturated,
            capture_priority: 0,
            join_time_s: 0.0,
            leave_time_s: None,
            rejoin_time_s: None,
            initial_penalty: None,
            forced_p_nack: None,
        }
    }

    pub fn compliant(id: u32) -> Self {
        Self::new(id, BehaviourPolicy::Compliant)
    }

    pub fn with_traffic(mut self, traffic: TrafficSource) -> Self {
        self.traffic = traffic;
        self
    }

    pub fn with_capture_priority(mut self, priority: u32) -> Self {
        self.capture_priority = priority;
        self
    }

    pub fn joining_at(mut self, t: f64) -> Self {
        self.join_time_s = t;
        self
    }

    pub fn leaving_at(mut self, t: f64) -> Self {
        self.leave_time_s = Some(t);
        self
    }

    pub fn rejoining_at(mut self, t: f64) -> Self {
        self.rejoin_time_s = Some(t);
        self
    }

    pub fn with_initial_penalty(mut self, p: f64) -> Self {
        self.initial_penalty = Some(p);
        self
    }

    pub fn with_forced_p_nack(mut self, p: f64) -> Self {
        self.forced_p_nack = Some(p);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub timing: PhyTiming,
    pub stations: Vec<StationSpec>,
    pub policing_enabled: bool,
    pub controller: ControllerConfig,
    pub measurement_mode: MeasurementMode,
    pub estimator: EstimatorConfig,
    pub duration_s: f64,
    /// Probability that a unique highest-priority transmitter captures.
    pub p_capture: f64,
    /// Queue limit for non-saturated sources, in frames.
    pub queue_capacity: u32,
}

pub const DEFAULT_QUEUE_CAPACITY: u32 = 100;

impl Scenario {
    /// 802.11b at 11 Mb/s with 1000-byte frames, policing on with default
    /// controller settings.
    pub fn new(stations: Vec<StationSpec>, duration_s: f64) -> Self {
        Scenario {
            timing: PhyTiming::dot11b_11m(1000).expect("static timing is valid"),
            stations,
            policing_enabled: true,
            controller: ControllerConfig::default(),
            measurement_mode: MeasurementMode::default(),
            estimator: EstimatorConfig::default(),
            duration_s,
            p_capture: 1.0,
            queue_capacity: DEFAULT_QUEUE_CAPACITY,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |reason| Err(SimError::InvalidScenario { station: None, reason });
        if !(self.duration_s > 0.0) || !self.duration_s.is_finite() {
            return bad("duration must be positive");
        }
        if !(0.0..=1.0).contains(&self.p_capture) {
            return bad("p_capture must lie in [0, 1]");
        }
        if self.queue_capacity == 0 {
            return bad("queue capacity must be positive");
        }
        if self.controller.validate().is_err() {
            return bad("invalid controller configuration");
        }
        if self.estimator.validate().is_err() {
            return bad("invalid estimator configuration");
        }
        for (i, s) in self.stations.iter().enumerate() {
            let err = |reason| Err(SimError::InvalidScenario { station: Some(s.id), reason });
            if self.stations[..i].iter().any(|o| o.id == s.id) {
                return err("duplicate station id");
            }
            if s.policy.mac_params().validate().is_err() {
                return err("policy yields invalid MAC parameters");
            }
            if let BehaviourPolicy::FixedCw(0) = s.policy {
                return err("fixed contention window must be at least 1");
            }
            if let Err(reason) = s.traffic.validate() {
                return err(reason);
            }
            if !(s.join_time_s >= 0.0) || !s.join_time_s.is_finite() {
                return err("join time must be non-negative");
            }
            if let Some(leave) = s.leave_time_s {
                if !(leave > s.join_time_s) {
                    return err("leave time must be after join time");
                }
            }
            if let Some(rejoin) = s.rejoin_time_s {
                match s.leave_time_s {
                    Some(leave) if rejoin > leave => {}
                    _ => return err("rejoin needs an earlier leave time"),
                }
            }
            if let Some(p) = s.initial_penalty {
                if !(p >= 0.0) || !p.is_finite() {
                    return err("initial penalty must be finite and non-negative");
                }
            }
            if let Some(p) = s.forced_p_nack {
                if !(0.0..=1.0).contains(&p) {
                    return err("forced p_nack must lie in [0, 1]");
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SimError {
    InvalidScenario { station: Option<StationId>, reason: &'static str },
}

impl fmt::Display for SimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimError::InvalidScenario { station: Some(id), reason } => {
                write!(f, "invalid scenario: station {id}: {reason}")
            }
            SimError::InvalidScenario { station: None, reason } => {
                write!(f, "invalid scenario: {reason}")
            }
        }
    }
}

impl core::error::Error for SimError {}
