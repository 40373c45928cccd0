use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::station::{StationState, VirtualMacState, WindowCounters};
use super::trace::{
    ratio, SimEvent, SimEventKind, SimTrace, SlotTotals, StationSummary, WindowRow, WindowSummary,
};
use super::{MeasurementMode, Scenario, SimError};
use crate::adversary::{scripted_station_rate, AdversaryError, BehaviourPolicy};
use crate::analytics::{
    attempt_probability, invert_virtual_failure, required_samples, MacParams, DIFS_SLOTS,
};
use crate::policing::{Controller, Escalation, RateMeasurement, StationId};

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SimClock {
    /// Counted slots so far.
    pub slot_index: u64,
    pub sim_time_us: f64,
    pub window_index: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SlotKind {
    Idle,
    /// One station's exchange; `captured` when it won a collision.
    Success { station: StationId, frames: u32, acked: u32, captured: bool },
    Collision { stations: Vec<StationId> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlotOutcome {
    pub kind: SlotKind,
    pub duration_us: f64,
}

impl SlotOutcome {
    /// Whether every frame of a success was acknowledged.
    pub fn acked(&self) -> bool {
        matches!(self.kind, SlotKind::Success { frames, acked, .. } if frames == acked)
    }
}

/// Picks the capturing transmitter, if any: the unique holder of the highest
/// non-zero priority wins with probability `p_capture`. Draws only when
/// `0 < p_capture < 1` and a candidate exists.
pub fn capture_resolve<R: Rng>(priorities: &[u32], p_capture: f64, rng: &mut R) -> Option<usize> {
    let top = *priorities.iter().max()?;
    if top == 0 || priorities.iter().filter(|p| **p == top).count() != 1 {
        return None;
    }
    let winner = priorities.iter().position(|p| *p == top)?;
    if p_capture >= 1.0 {
        Some(winner)
    } else if p_capture <= 0.0 {
        None
    } else {
        (rng.gen::<f64>() < p_capture).then_some(winner)
    }
}

#[derive(Debug, Clone, Copy)]
struct FairEstimate {
    virtual_failure: f64,
    collision: f64,
    attempt: f64,
}

#[derive(Debug, Clone, Copy)]
struct ScheduledEvent {
    time_us: f64,
    station: usize,
    kind: SimEventKind,
}

/// The simulated world: stations, the AP's controller and the virtual MAC.
pub struct Simulator {
    scenario: Scenario,
    seed: u64,
    rng: ChaCha8Rng,
    stations: Vec<StationState>,
    p_nack: Vec<f64>,
    vmac: VirtualMacState,
    controller: Controller,
    clock: SimClock,
    /// Zero-length countdown steps left after the last busy slot.
    gap: u32,
    schedule: Vec<ScheduledEvent>,
    next_event: usize,
    window_start_us: f64,
    next_window_end_us: f64,
    window_slots: SlotTotals,
    last_fair_attempt: f64,
    required_samples: u64,
    tx: Vec<usize>,
    windows: Vec<WindowSummary>,
    rows: Vec<WindowRow>,
    events: Vec<SimEvent>,
    totals: SlotTotals,
}

impl Simulator {
    pub fn new(scenario: &Scenario, seed: u64) -> Result<Self, SimError> {
        scenario.validate()?;
        let mut scenario = scenario.clone();
        scenario.stations.sort_by_key(|s| s.id);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let stations: Vec<StationState> = scenario.stations.iter().map(StationState::new).collect();

        let mut schedule = Vec::new();
        for (i, s) in scenario.stations.iter().enumerate() {
            schedule.push(ScheduledEvent { time_us: s.join_time_s * 1e6, station: i, kind: SimEventKind::Join });
            if let Some(t) = s.leave_time_s {
                schedule.push(ScheduledEvent { time_us: t * 1e6, station: i, kind: SimEventKind::Leave });
            }
            if let Some(t) = s.rejoin_time_s {
                schedule.push(ScheduledEvent { time_us: t * 1e6, station: i, kind: SimEventKind::Rejoin });
            }
        }
        // Stable: ties keep station order.
        schedule.sort_by(|a, b| a.time_us.total_cmp(&b.time_us));

        let controller = Controller::new(scenario.controller)
            .map_err(|_| SimError::InvalidScenario { station: None, reason: "invalid controller" })?;
        let required = required_samples(&scenario.estimator)
            .map_err(|_| SimError::InvalidScenario { station: None, reason: "invalid estimator" })?;
        let vmac = VirtualMacState::new(&mut rng);
        let period_us = scenario.controller.update_period_s * 1e6;
        let n = stations.len();
        Ok(Simulator {
            scenario,
            seed,
            rng,
            stations,
            p_nack: alloc::vec![0.0; n],
            vmac,
            controller,
            clock: SimClock::default(),
            gap: DIFS_SLOTS,
            schedule,
            next_event: 0,
            window_start_us: 0.0,
            next_window_end_us: period_us,
            window_slots: SlotTotals::default(),
            last_fair_attempt: 2.0 / (MacParams::compliant().cw_min as f64 + 1.0),
            required_samples: required,
            tx: Vec::new(),
            windows: Vec::new(),
            rows: Vec::new(),
            events: Vec::new(),
            totals: SlotTotals::default(),
        })
    }

    pub fn clock(&self) -> SimClock {
        self.clock
    }

    pub fn stations(&self) -> &[StationState] {
        &self.stations
    }

    pub fn virtual_mac(&self) -> &VirtualMacState {
        &self.vmac
    }

    pub fn controller(&self) -> &Controller {
        &self.controller
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    fn process_events(&mut self) {
        while let Some(ev) = self.schedule.get(self.next_event).copied() {
            if ev.time_us > self.clock.sim_time_us {
                break;
            }
            self.next_event += 1;
            let now = self.clock.sim_time_us;
            let st = &mut self.stations[ev.station];
            if st.banned {
                continue;
            }
            let id = st.id;
            let penalty = match ev.kind {
                SimEventKind::Join | SimEventKind::Rejoin => {
                    st.join(now, &mut self.rng);
                    st.drop_data = false;
                    let state = match self.scenario.stations[ev.station].initial_penalty {
                        Some(p) if ev.kind == SimEventKind::Join => {
                            self.controller.associate_with_penalty(id, p)
                        }
                        _ => self.controller.associate(id),
                    };
                    self.apply_script(ev.station);
                    self.refresh_p_nack(ev.station);
                    state.penalty
                }
                SimEventKind::Leave => {
                    if !st.present {
                        continue;
                    }
                    st.present = false;
                    self.controller.disassociate(id).map(|s| s.penalty).unwrap_or(0.0)
                }
                SimEventKind::Disassociate => continue,
            };
            self.events.push(SimEvent { time_s: now * 1e-6, station: id, kind: ev.kind, penalty });
        }
    }

    fn refresh_p_nack(&mut self, i: usize) {
        let st = &self.stations[i];
        self.p_nack[i] = if st.drop_data {
            1.0
        } else if let Some(p) = st.forced_p_nack {
            p
        } else if self.scenario.policing_enabled {
            self.controller.state(st.id).map(|s| s.p_nack).unwrap_or(0.0)
        } else {
            0.0
        };
    }

    fn apply_script(&mut self, i: usize) {
        let st = &mut self.stations[i];
        if let BehaviourPolicy::Scripted(ys) = &st.policy {
            let y = ys.get(self.clock.window_index as usize).copied().unwrap_or(0.0);
            let params = match scripted_station_rate(y, self.last_fair_attempt) {
                Ok(p) => p,
                Err(AdversaryError::Saturated { .. }) => BehaviourPolicy::FixedCw(1).mac_params(),
                Err(_) => BehaviourPolicy::FixedCw(MacParams::compliant().cw_max() as u32).mac_params(),
            };
            st.set_params(params);
        }
    }

    fn collect_transmitters(&mut self) {
        self.tx.clear();
        for (i, s) in self.stations.iter().enumerate() {
            if s.wants_to_transmit() {
                self.tx.push(i);
            }
        }
    }

    /// Advances the world by one counted slot.
    pub fn step_slot(&mut self) -> SlotOutcome {
        self.process_events();
        let now = self.clock.sim_time_us;
        let capacity = self.scenario.queue_capacity;
        for s in self.stations.iter_mut().filter(|s| s.present) {
            s.arrivals(now, capacity, &mut self.rng);
        }

        loop {
            self.collect_transmitters();
            if !self.tx.is_empty() || self.gap == 0 {
                break;
            }
            for s in self.stations.iter_mut().filter(|s| s.present) {
                s.tick();
            }
            self.vmac.micro_slot();
            self.gap -= 1;
        }

        for s in self.stations.iter_mut().filter(|s| s.present) {
            s.tick();
        }

        let outcome = if self.tx.is_empty() {
            self.vmac.counted_slot(false, &mut self.rng);
            self.window_slots.idle += 1;
            SlotOutcome { kind: SlotKind::Idle, duration_us: self.scenario.timing.slot_us }
        } else {
            let outcome = self.busy_slot();
            self.vmac.counted_slot(true, &mut self.rng);
            for s in self.stations.iter_mut().filter(|s| s.present) {
                s.defer_remaining = s.params.aifs_slots;
            }
            self.gap = DIFS_SLOTS;
            outcome
        };

        for s in self.stations.iter_mut().filter(|s| s.present) {
            s.window.slots += 1;
            s.window.present_us += outcome.duration_us;
        }
        self.clock.slot_index += 1;
        self.clock.sim_time_us += outcome.duration_us;
        outcome
    }

    fn busy_slot(&mut self) -> SlotOutcome {
        let timing = self.scenario.timing;
        let tx = core::mem::take(&mut self.tx);
        let winner = if tx.len() == 1 {
            Some(tx[0])
        } else {
            let priorities: Vec<u32> = tx.iter().map(|&i| self.stations[i].capture_priority).collect();
            capture_resolve(&priorities, self.scenario.p_capture, &mut self.rng).map(|k| tx[k])
        };

        let mut sent = 0u32;
        let mut acked = 0u32;
        if let Some(w) = winner {
            let st = &self.stations[w];
            let limit = if st.params.txop_limit_us > 0.0 {
                timing.frames_per_txop(st.params.txop_limit_us)
            } else {
                1
            };
            let frames = st.burstable(limit).max(1);
            let p = self.p_nack[w];
            for _ in 0..frames {
                sent += 1;
                let ok = if p <= 0.0 {
                    true
                } else if p >= 1.0 {
                    false
                } else {
                    self.rng.gen::<f64>() >= p
                };
                if !ok {
                    break;
                }
                acked += 1;
            }
        }

        for &i in &tx {
            let st = &mut self.stations[i];
            st.window.accesses += 1;
            if Some(i) == winner {
                st.window.attempts += sent as u64;
                st.window.fcs_successes += sent as u64;
                st.window.acked_frames += acked as u64;
                for _ in 0..acked {
                    st.on_acked();
                }
                if acked < sent {
                    st.on_failure();
                }
            } else {
                st.window.attempts += 1;
                st.on_failure();
            }
            st.redraw(&mut self.rng);
        }

        let outcome = match winner {
            Some(w) => {
                self.window_slots.success += 1;
                let burst = timing.burst_duration_us(sent, acked);
                let captured = tx.len() > 1;
                SlotOutcome {
                    kind: SlotKind::Success { station: self.stations[w].id, frames: sent, acked, captured },
                    duration_us: if captured { burst.max(timing.t_collision_us) } else { burst },
                }
            }
            None => {
                self.window_slots.collision += 1;
                SlotOutcome {
                    kind: SlotKind::Collision { stations: tx.iter().map(|&i| self.stations[i].id).collect() },
                    duration_us: timing.t_collision_us,
                }
            }
        };
        self.tx = tx;
        outcome
    }

    fn estimate(&self) -> Option<FairEstimate> {
        if !self.stations.iter().any(|s| s.present || s.window.slots > 0) {
            return None;
        }
        let fv = self.vmac.failure_fraction()?;
        let params = MacParams::compliant();
        let floor = attempt_probability(0.0, &params).ok()?;
        if fv >= 1.0 {
            return None;
        }
        let collision = invert_virtual_failure(fv.max(floor), &params).ok()?;
        let attempt = attempt_probability(collision, &params).ok()?;
        Some(FairEstimate { virtual_failure: fv, collision, attempt })
    }

    /// Closes the current window: measures every station, updates the
    /// controller when `update` is set and resets the window counters.
    pub fn close_window(&mut self) -> WindowSummary {
        self.close(true)
    }

    fn close(&mut self, update: bool) -> WindowSummary {
        let now = self.clock.sim_time_us;
        let est = self.estimate();
        let mode = self.scenario.measurement_mode;
        let fair_rate = est.map(|e| match mode {
            MeasurementMode::Oracle => e.attempt,
            MeasurementMode::Realistic => e.attempt * (1.0 - e.collision),
        });
        let update = update && self.scenario.policing_enabled;
        let window = self.clock.window_index;
        let bits = self.scenario.timing.payload_bits();
        let mut updated_any = false;

        for i in 0..self.stations.len() {
            let st = &self.stations[i];
            let w = st.window;
            if w.slots == 0 {
                continue;
            }
            let id = st.id;
            let measured = match mode {
                MeasurementMode::Oracle => ratio(w.attempts, w.slots),
                MeasurementMode::Realistic => ratio(w.fcs_successes, w.slots),
            };
            let controlled = update && st.present && st.forced_p_nack.is_none();
            let mut escalation = Escalation::Continue;
            let mut applied = false;
            if controlled {
                let meas = RateMeasurement {
                    station_id: id,
                    measured_rate: measured,
                    fair_rate: fair_rate.unwrap_or(0.0),
                    window_slots: w.slots,
                };
                if let Some(rec) = self.controller.update(&meas) {
                    escalation = rec.escalation;
                    applied = rec.applied;
                    updated_any |= applied;
                }
            }
            let state = self
                .controller
                .state(id)
                .or_else(|| self.controller.archived(id))
                .copied();
            let (penalty, mut p_nack) = match state {
                Some(s) if self.scenario.policing_enabled => (s.penalty, s.p_nack),
                _ => (0.0, 0.0),
            };
            if let Some(p) = self.stations[i].forced_p_nack {
                p_nack = p;
            }
            self.rows.push(WindowRow {
                window,
                time_s: now * 1e-6,
                station: id,
                present_s: w.present_us * 1e-6,
                slots: w.slots,
                attempts: w.attempts,
                fcs_successes: w.fcs_successes,
                acked: w.acked_frames,
                accesses: w.accesses,
                dropped: w.dropped_frames,
                measured_rate: measured,
                fair_rate_est: fair_rate,
                penalty,
                p_nack,
                escalation,
                goodput_bps: if w.present_us > 0.0 { w.acked_frames as f64 * bits / (w.present_us * 1e-6) } else { 0.0 },
                update_applied: applied,
            });

            let st = &mut self.stations[i];
            st.window = WindowCounters::default();
            if controlled {
                match escalation {
                    Escalation::Disassociate => {
                        st.present = false;
                        st.banned = true;
                        let archived = self.controller.disassociate(id).map(|s| s.penalty).unwrap_or(penalty);
                        log::info!("{id} disassociated with penalty {archived}");
                        self.events.push(SimEvent {
                            time_s: now * 1e-6,
                            station: id,
                            kind: SimEventKind::Disassociate,
                            penalty: archived,
                        });
                    }
                    Escalation::DropDataToo => st.drop_data = true,
                    Escalation::Continue => st.drop_data = false,
                }
            }
        }

        let summary = WindowSummary {
            window,
            start_s: self.window_start_us * 1e-6,
            end_s: now * 1e-6,
            slots: self.window_slots,
            virtual_attempts: self.vmac.virtual_attempts,
            virtual_failures: self.vmac.virtual_failures,
            virtual_failure_est: est.map(|e| e.virtual_failure),
            fair_collision_est: est.map(|e| e.collision),
            fair_attempt_est: est.map(|e| e.attempt),
            enough_samples: self.vmac.virtual_attempts >= self.required_samples,
            controller_updated: updated_any,
        };
        self.windows.push(summary.clone());

        self.totals.idle += self.window_slots.idle;
        self.totals.success += self.window_slots.success;
        self.totals.collision += self.window_slots.collision;
        self.window_slots = SlotTotals::default();
        self.vmac.reset_counts();
        self.clock.window_index += 1;
        self.window_start_us = now;
        self.next_window_end_us += self.scenario.controller.update_period_s * 1e6;
        if let Some(e) = est {
            self.last_fair_attempt = e.attempt;
        }
        for i in 0..self.stations.len() {
            if self.stations[i].present {
                self.apply_script(i);
            }
            self.refresh_p_nack(i);
        }
        summary
    }

    /// Runs to the scenario's end and returns the trace. A trailing partial
    /// window is recorded without a controller update.
    pub fn run(mut self) -> SimTrace {
        let end_us = self.scenario.duration_s * 1e6;
        while self.clock.sim_time_us < end_us {
            self.step_slot();
            if self.clock.sim_time_us >= self.next_window_end_us {
                self.close(true);
            }
        }
        if self.window_slots.total() > 0 {
            self.close(false);
        }
        let bits = self.scenario.timing.payload_bits();
        let stations = self
            .stations
            .iter()
            .map(|s| StationSummary::from_rows(s.id, s.policy.clone(), self.rows.iter(), bits, s.banned))
            .collect();
        SimTrace {
            seed: self.seed,
            windows: self.windows,
            rows: self.rows,
            stations,
            events: self.events,
            slots: self.totals,
            sim_time_s: self.clock.sim_time_us * 1e-6,
        }
    }
}

/// Runs `scenario` with `seed`; identical inputs give identical traces.
pub fn run(scenario: &Scenario, seed: u64) -> Result<SimTrace, SimError> {
    Ok(Simulator::new(scenario, seed)?.run())
}
