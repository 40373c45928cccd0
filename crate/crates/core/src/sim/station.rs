use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use super::{StationSpec, TrafficSource};
use crate::adversary::BehaviourPolicy;
use crate::analytics::{MacParams, DIFS_SLOTS};
use crate::math::floor;
use crate::policing::StationId;

/// Per-station counters over one window (or the whole run).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct WindowCounters {
    /// Frames put on the air, counting every frame of a burst.
    pub attempts: u64,
    /// Frames the AP received with a correct FCS.
    pub fcs_successes: u64,
    /// Frames the AP acknowledged.
    pub acked_frames: u64,
    /// Channel accesses (a burst counts once).
    pub accesses: u64,
    /// Frames discarded at the retry limit.
    pub dropped_frames: u64,
    /// Counted slots the station was associated for.
    pub slots: u64,
    pub present_us: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum TrafficState {
    Saturated,
    OnOff { on: bool, next_toggle_us: f64 },
    Queued,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationState {
    pub id: StationId,
    pub params: MacParams,
    pub policy: BehaviourPolicy,
    pub traffic_source: TrafficSource,
    pub capture_priority: u32,
    pub backoff_counter: u64,
    pub backoff_stage: u32,
    pub retry_count: u32,
    pub defer_remaining: u32,
    /// Buffered frames for queue-based sources.
    pub queue: u32,
    pub present: bool,
    /// Removed by the AP; never returns.
    pub banned: bool,
    /// The AP discards this station's data frames.
    pub drop_data: bool,
    pub forced_p_nack: Option<f64>,
    pub window: WindowCounters,
    traffic: TrafficState,
    joined_at_us: f64,
    generated: u64,
}

impl StationState {
    pub(crate) fn new(spec: &StationSpec) -> Self {
        StationState {
            id: spec.id,
            params: spec.policy.mac_params(),
            policy: spec.policy.clone(),
            traffic_source: spec.traffic,
            capture_priority: spec.capture_priority,
            backoff_counter: 0,
            backoff_stage: 0,
            retry_count: 0,
            defer_remaining: 0,
            queue: 0,
            present: false,
            banned: false,
            drop_data: false,
            forced_p_nack: spec.forced_p_nack,
            window: WindowCounters::default(),
            traffic: TrafficState::Saturated,
            joined_at_us: 0.0,
            generated: 0,
        }
    }

    /// Fresh MAC and traffic state at (re)association.
    pub(crate) fn join(&mut self, now_us: f64, rng: &mut ChaCha8Rng) {
        self.present = true;
        self.backoff_stage = 0;
        self.retry_count = 0;
        self.defer_remaining = self.params.aifs_slots;
        self.backoff_counter = rng.gen_range(0..self.params.window_at(0));
        self.queue = 0;
        self.joined_at_us = now_us;
        self.generated = 0;
        self.traffic = match self.traffic_source {
            TrafficSource::Saturated => TrafficState::Saturated,
            TrafficSource::OnOff { active_s, .. } => {
                TrafficState::OnOff { on: true, next_toggle_us: now_us + active_s * 1e6 }
            }
            TrafficSource::Bernoulli { .. } | TrafficSource::Cbr { .. } => TrafficState::Queued,
        };
    }

    pub fn has_frame(&self) -> bool {
        match self.traffic {
            TrafficState::Saturated => true,
            TrafficState::OnOff { on, .. } => on,
            TrafficState::Queued => self.queue > 0,
        }
    }

    /// Frames available for one burst of at most `limit`.
    pub(crate) fn burstable(&self, limit: u32) -> u32 {
        match self.traffic {
            TrafficState::Queued => self.queue.min(limit),
            _ => limit,
        }
    }

    pub(crate) fn arrivals(&mut self, now_us: f64, capacity: u32, rng: &mut ChaCha8Rng) {
        match (self.traffic_source, &mut self.traffic) {
            (TrafficSource::OnOff { active_s, idle_mean_s }, TrafficState::OnOff { on, next_toggle_us }) => {
                while now_us >= *next_toggle_us {
                    if *on {
                        let idle_s = Exp::new(1.0 / idle_mean_s)
                            .expect("validated idle mean")
                            .sample(rng);
                        *next_toggle_us += idle_s * 1e6;
                    } else {
                        *next_toggle_us += active_s * 1e6;
                    }
                    *on = !*on;
                }
            }
            (TrafficSource::Bernoulli { arrival_prob }, _) => {
                if rng.gen::<f64>() < arrival_prob {
                    self.queue = (self.queue + 1).min(capacity);
                }
            }
            (TrafficSource::Cbr { frames_per_s }, _) => {
                let due = floor((now_us - self.joined_at_us) * 1e-6 * frames_per_s) as u64;
                if due > self.generated {
                    let new = (due - self.generated).min(capacity as u64) as u32;
                    self.queue = self.queue.saturating_add(new).min(capacity);
                    self.generated = due;
                }
            }
            _ => {}
        }
    }

    pub(crate) fn is_awake(&self) -> bool {
        self.defer_remaining == 0
    }

    pub(crate) fn wants_to_transmit(&self) -> bool {
        self.present && self.is_awake() && self.backoff_counter == 0 && self.has_frame()
    }

    /// One countdown step outside a transmission.
    pub(crate) fn tick(&mut self) {
        if self.defer_remaining > 0 {
            self.defer_remaining -= 1;
        } else if self.backoff_counter > 0 {
            self.backoff_counter -= 1;
        }
    }

    fn dequeue(&mut self) {
        if let TrafficState::Queued = self.traffic {
            self.queue = self.queue.saturating_sub(1);
        }
    }

    pub(crate) fn on_acked(&mut self) {
        self.dequeue();
        self.backoff_stage = 0;
        self.retry_count = 0;
    }

    /// Collision or missing ACK.
    pub(crate) fn on_failure(&mut self) {
        self.retry_count += 1;
        if self.retry_count > self.params.retry_limit {
            self.dequeue();
            self.window.dropped_frames += 1;
            self.backoff_stage = 0;
            self.retry_count = 0;
        } else {
            self.backoff_stage = (self.backoff_stage + 1).min(self.params.max_backoff_stage);
        }
    }

    pub(crate) fn redraw(&mut self, rng: &mut ChaCha8Rng) {
        self.backoff_counter = rng.gen_range(0..self.params.window_at(self.backoff_stage));
    }

    /// Swaps in new MAC parameters (scripted strategies), restarting backoff
    /// at stage 0 on the next draw.
    pub(crate) fn set_params(&mut self, params: MacParams) {
        if params != self.params {
            self.params = params;
            self.backoff_stage = 0;
            self.backoff_counter = self.backoff_counter.min(params.window_at(0) - 1);
        }
    }
}

/// A compliant saturated backoff process at the AP that never transmits.
#[derive(Debug, Clone, PartialEq)]
pub struct VirtualMacState {
    pub params: MacParams,
    pub backoff_counter: u64,
    pub backoff_stage: u32,
    pub retry_count: u32,
    pub defer_remaining: u32,
    pub virtual_attempts: u64,
    pub virtual_failures: u64,
}

impl VirtualMacState {
    pub(crate) fn new(rng: &mut ChaCha8Rng) -> Self {
        let params = MacParams::compliant();
        VirtualMacState {
            params,
            backoff_counter: rng.gen_range(0..params.window_at(0)),
            backoff_stage: 0,
            retry_count: 0,
            defer_remaining: DIFS_SLOTS,
            virtual_attempts: 0,
            virtual_failures: 0,
        }
    }

    /// Fraction of virtual attempts that met a busy slot.
    pub fn failure_fraction(&self) -> Option<f64> {
        (self.virtual_attempts > 0).then(|| self.virtual_failures as f64 / self.virtual_attempts as f64)
    }

    pub(crate) fn micro_slot(&mut self) {
        if self.defer_remaining > 0 {
            self.defer_remaining -= 1;
        } else if self.backoff_counter > 0 {
            self.backoff_counter -= 1;
        }
    }

    /// Counted slot; `busy` when any real station transmitted.
    pub(crate) fn counted_slot(&mut self, busy: bool, rng: &mut ChaCha8Rng) {
        if self.defer_remaining == 0 && self.backoff_counter == 0 {
            self.virtual_attempts += 1;
            if busy {
                self.virtual_failures += 1;
                self.retry_count += 1;
                if self.retry_count > self.params.retry_limit {
                    self.backoff_stage = 0;
                    self.retry_count = 0;
                } else {
                    self.backoff_stage = (self.backoff_stage + 1).min(self.params.max_backoff_stage);
                }
            } else {
                self.backoff_stage = 0;
                self.retry_count = 0;
            }
            self.backoff_counter = rng.gen_range(0..self.params.window_at(self.backoff_stage));
        } else {
            self.micro_slot();
        }
        if busy {
            self.defer_remaining = self.params.aifs_slots;
        }
    }

    pub(crate) fn reset_counts(&mut self) {
        self.virtual_attempts = 0;
        self.virtual_failures = 0;
    }
}
