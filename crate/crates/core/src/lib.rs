//! Models, controller and simulator for AP-side ACK-suppression policing of
//! 802.11 DCF stations.
//!
//! The crate is `no_std` (it needs `alloc`) and carries no IO. It is split in
//! four parts:
//!
//! * [`analytics`]: closed-form DCF models (attempt probability, fixed points,
//!   throughput, virtual-MAC inversion, estimator sizing).
//! * [`policing`]: the per-station penalty controller that decides ACK
//!   suppression probabilities.
//! * [`adversary`]: misbehaviour policies and the goodput robustness harness.
//! * [`sim`]: a seeded slot-level simulator of DCF contention with an AP that
//!   applies the controller.
//!
//! File formats, presets and the command line live in the `dcf-police`
//! companion crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod adversary;
pub mod analytics;
pub mod policing;
pub mod sim;

mod math;

pub use adversary::BehaviourPolicy;
pub use analytics::{EstimatorConfig, MacParams, PhyTiming, SlotProbabilities};
pub use policing::{ControllerConfig, Escalation, PenaltyState, RateMeasurement, StationId};
pub use sim::{MeasurementMode, Scenario, SimTrace, StationSpec, TrafficSource};
