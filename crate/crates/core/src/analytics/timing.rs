use alloc::vec::Vec;

use super::{AnalyticsError, DIFS_SLOTS};
use crate::math::floor;

/// PHY timing for one payload size. All durations are in microseconds.
///
/// `t_collision` is the channel time a failed (collided or unacknowledged)
/// frame occupies, `header + payload + DIFS`; `t_success` adds `SIFS + ACK`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhyTiming {
    pub slot_us: f64,
    pub sifs_us: f64,
    pub difs_us: f64,
    pub phy_rate_bps: f64,
    pub payload_bytes: u32,
    /// Preamble, PLCP header and MAC header airtime.
    pub header_overhead_us: f64,
    pub ack_duration_us: f64,
    pub t_success_us: f64,
    pub t_collision_us: f64,
}

/// MAC header plus FCS of a data frame.
const MAC_OVERHEAD_BYTES: f64 = 28.0;
const ACK_BYTES: f64 = 14.0;

impl PhyTiming {
    /// Builds a timing record; DIFS and the derived slot durations are computed.
    pub fn new(
        slot_us: f64,
        sifs_us: f64,
        phy_rate_bps: f64,
        payload_bytes: u32,
        header_overhead_us: f64,
        ack_duration_us: f64,
    ) -> Result<Self, AnalyticsError> {
        let positive = [slot_us, sifs_us, phy_rate_bps, header_overhead_us, ack_duration_us];
        if positive.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(AnalyticsError::InvalidParams("PHY durations and rate must be positive"));
        }
        if payload_bytes == 0 {
            return Err(AnalyticsError::InvalidParams("payload must be at least one byte"));
        }
        let difs_us = sifs_us + DIFS_SLOTS as f64 * slot_us;
        let payload_us = payload_bytes as f64 * 8.0 / phy_rate_bps * 1e6;
        let t_collision_us = header_overhead_us + payload_us + difs_us;
        let t_success_us = t_collision_us + sifs_us + ack_duration_us;
        Ok(PhyTiming {
            slot_us,
            sifs_us,
            difs_us,
            phy_rate_bps,
            payload_bytes,
            header_overhead_us,
            ack_duration_us,
            t_success_us,
            t_collision_us,
        })
    }

    /// 802.11b HR/DSSS at 11 Mb/s: 20 us slots, SIFS 10 us, long 192 us
    /// preamble, ACK at the 1 Mb/s basic rate.
    pub fn dot11b_11m(payload_bytes: u32) -> Result<Self, AnalyticsError> {
        let rate = 11e6;
        let preamble = 192.0;
        let header = preamble + MAC_OVERHEAD_BYTES * 8.0 / rate * 1e6;
        let ack = preamble + ACK_BYTES * 8.0 / 1e6 * 1e6;
        Self::new(20.0, 10.0, rate, payload_bytes, header, ack)
    }

    /// 802.11g ERP-OFDM at 54 Mb/s: 9 us slots, SIFS 10 us, 20 us OFDM
    /// preamble, ACK at 24 Mb/s. Airtimes are not rounded to OFDM symbols.
    pub fn dot11g_54m(payload_bytes: u32) -> Result<Self, AnalyticsError> {
        let rate = 54e6;
        let preamble = 20.0;
        let header = preamble + MAC_OVERHEAD_BYTES * 8.0 / rate * 1e6;
        let ack = preamble + ACK_BYTES * 8.0 / 24e6 * 1e6;
        Self::new(9.0, 10.0, rate, payload_bytes, header, ack)
    }

    pub fn payload_bits(&self) -> f64 {
        self.payload_bytes as f64 * 8.0
    }

    pub fn payload_airtime_us(&self) -> f64 {
        self.payload_bits() / self.phy_rate_bps * 1e6
    }

    /// Header plus payload airtime of one data frame.
    pub fn frame_airtime_us(&self) -> f64 {
        self.header_overhead_us + self.payload_airtime_us()
    }

    /// Number of SIFS-separated frame exchanges that fit in a TXOP of
    /// `txop_us`; at least one frame is always sent.
    pub fn frames_per_txop(&self, txop_us: f64) -> u32 {
        let exchange = self.frame_airtime_us() + self.sifs_us + self.ack_duration_us;
        if txop_us < exchange {
            return 1;
        }
        // k * exchange + (k - 1) * SIFS <= txop
        let k = floor((txop_us + self.sifs_us) / (exchange + self.sifs_us));
        (k as u32).max(1)
    }

    /// Channel time of a burst of `sent` frames of which the first `acked`
    /// were acknowledged. A missing ACK ends the burst, so `acked` is either
    /// `sent` or `sent - 1`.
    pub fn burst_duration_us(&self, sent: u32, acked: u32) -> f64 {
        debug_assert!(sent >= 1 && acked <= sent && acked + 1 >= sent);
        sent as f64 * self.frame_airtime_us()
            + acked as f64 * (self.sifs_us + self.ack_duration_us)
            + (sent - 1) as f64 * self.sifs_us
            + self.difs_us
    }
}

/// Probabilities that a slot is empty, holds a success or a collision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotProbabilities {
    pub p_empty: f64,
    pub p_success: f64,
    pub p_collision: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Throughput {
    pub per_station_bps: Vec<f64>,
    /// Per-station probability that a slot carries that station's success.
    pub per_station_success: Vec<f64>,
    pub slots: SlotProbabilities,
    pub expected_slot_us: f64,
}

impl Throughput {
    pub fn aggregate_bps(&self) -> f64 {
        self.per_station_bps.iter().sum()
    }
}

/// Saturation throughput of stations attempting with probabilities `x`.
pub fn throughput(x: &[f64], timing: &PhyTiming) -> Result<Throughput, AnalyticsError> {
    for &xi in x {
        if !(0.0..1.0).contains(&xi) {
            return Err(AnalyticsError::Domain { what: "attempt probability", value: xi });
        }
    }
    let p_empty: f64 = x.iter().map(|xi| 1.0 - xi).product();
    let per_station_success: Vec<f64> = x
        .iter()
        .enumerate()
        .map(|(i, xi)| {
            let others: f64 = x
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, xj)| 1.0 - xj)
                .product();
            xi * others
        })
        .collect();
    let p_success: f64 = per_station_success.iter().sum();
    let p_collision = (1.0 - p_empty - p_success).max(0.0);
    let slots = SlotProbabilities { p_empty, p_success, p_collision };
    let expected_slot_us = expected_slot_duration(&slots, timing);
    let bits = timing.payload_bits();
    let per_station_bps = per_station_success
        .iter()
        .map(|s| s * bits / expected_slot_us * 1e6)
        .collect();
    Ok(Throughput { per_station_bps, per_station_success, slots, expected_slot_us })
}

/// `E[T_slot] = P_e * sigma + P_s * T_s + P_c * T_c`, in microseconds.
pub fn expected_slot_duration(probs: &SlotProbabilities, timing: &PhyTiming) -> f64 {
    probs.p_empty * timing.slot_us
        + probs.p_success * timing.t_success_us
        + probs.p_collision * timing.t_collision_us
}
