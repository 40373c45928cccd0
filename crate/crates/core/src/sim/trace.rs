use alloc::vec::Vec;

use crate::adversary::BehaviourPolicy;
use crate::policing::{Escalation, StationId};

/// One station's record for one window.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowRow {
    pub window: u32,
    /// Simulated time at which the window closed.
    pub time_s: f64,
    pub station: StationId,
    pub present_s: f64,
    pub slots: u64,
    pub attempts: u64,
    pub fcs_successes: u64,
    pub acked: u64,
    pub accesses: u64,
    pub dropped: u64,
    pub measured_rate: f64,
    /// Fair rate in the unit of `measured_rate`, when the estimate exists.
    pub fair_rate_est: Option<f64>,
    pub penalty: f64,
    pub p_nack: f64,
    pub escalation: Escalation,
    pub goodput_bps: f64,
    pub update_applied: bool,
}

impl WindowRow {
    /// Attempts per counted slot while present.
    pub fn attempt_rate(&self) -> f64 {
        ratio(self.attempts, self.slots)
    }

    pub fn rate_ratio(&self) -> Option<f64> {
        self.fair_rate_est.map(|f| self.measured_rate / f)
    }
}

pub(crate) fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Channel-level record for one window.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSummary {
    pub window: u32,
    pub start_s: f64,
    pub end_s: f64,
    pub slots: SlotTotals,
    pub virtual_attempts: u64,
    pub virtual_failures: u64,
    pub virtual_failure_est: Option<f64>,
    /// Collision probability of a fair station inferred from the estimate.
    pub fair_collision_est: Option<f64>,
    /// Fair attempt probability `g(f1)`.
    pub fair_attempt_est: Option<f64>,
    /// Whether the window reached the configured sample size.
    pub enough_samples: bool,
    pub controller_updated: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SlotTotals {
    pub idle: u64,
    pub success: u64,
    pub collision: u64,
}

impl SlotTotals {
    pub fn total(&self) -> u64 {
        self.idle + self.success + self.collision
    }
}

/// Whole-run totals for one station, recomputed from its window rows.
#[derive(Debug, Clone, PartialEq)]
pub struct StationSummary {
    pub station: StationId,
    pub policy: BehaviourPolicy,
    pub attempts: u64,
    pub fcs_successes: u64,
    pub acked: u64,
    pub accesses: u64,
    pub dropped: u64,
    pub slots: u64,
    pub present_s: f64,
    pub attempt_rate: f64,
    pub goodput_bps: f64,
    pub final_penalty: f64,
    pub final_p_nack: f64,
    pub disassociated: bool,
}

impl StationSummary {
    /// `ln(goodput)`, the station's term in the network utility.
    pub fn utility(&self) -> f64 {
        crate::math::ln(self.goodput_bps)
    }

    pub(crate) fn from_rows<'a>(
        station: StationId,
        policy: BehaviourPolicy,
        rows: impl Iterator<Item = &'a WindowRow>,
        payload_bits: f64,
        disassociated: bool,
    ) -> Self {
        let mut s = StationSummary {
            station,
            policy,
            attempts: 0,
            fcs_successes: 0,
            acked: 0,
            accesses: 0,
            dropped: 0,
            slots: 0,
            present_s: 0.0,
            attempt_rate: 0.0,
            goodput_bps: 0.0,
            final_penalty: 0.0,
            final_p_nack: 0.0,
            disassociated,
        };
        for r in rows.filter(|r| r.station == station) {
            s.attempts += r.attempts;
            s.fcs_successes += r.fcs_successes;
            s.acked += r.acked;
            s.accesses += r.accesses;
            s.dropped += r.dropped;
            s.slots += r.slots;
            s.present_s += r.present_s;
            s.final_penalty = r.penalty;
            s.final_p_nack = r.p_nack;
        }
        s.attempt_rate = ratio(s.attempts, s.slots);
        s.goodput_bps = if s.present_s > 0.0 { s.acked as f64 * payload_bits / s.present_s } else { 0.0 };
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimEventKind {
    Join,
    Leave,
    Rejoin,
    /// Removed by the controller after sustained full suppression.
    Disassociate,
}

impl SimEventKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SimEventKind::Join => "join",
            SimEventKind::Leave => "leave",
            SimEventKind::Rejoin => "rejoin",
            SimEventKind::Disassociate => "disassociate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimEvent {
    pub time_s: f64,
    pub station: StationId,
    pub kind: SimEventKind,
    /// Penalty at the event: restored value on (re)join, archived value on leave.
    pub penalty: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    pub seed: u64,
    pub windows: Vec<WindowSummary>,
    pub rows: Vec<WindowRow>,
    pub stations: Vec<StationSummary>,
    pub events: Vec<SimEvent>,
    pub slots: SlotTotals,
    pub sim_time_s: f64,
}

impl SimTrace {
    pub fn station(&self, id: StationId) -> Option<&StationSummary> {
        self.stations.iter().find(|s| s.station == id)
    }

    pub fn rows_for(&self, id: StationId) -> impl Iterator<Item = &WindowRow> {
        self.rows.iter().filter(move |r| r.station == id)
    }

    /// Sum of `ln(goodput)` over stations with positive goodput.
    pub fn network_utility(&self) -> f64 {
        self.stations.iter().filter(|s| s.goodput_bps > 0.0).map(|s| s.utility()).sum()
    }
}
