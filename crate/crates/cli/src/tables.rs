//! Analytic curves as CSV tables.

use dcf_police_core::adversary::{brute_force_best_prefix, enumerate_strategies, minimal_delta};
use dcf_police_core::analytics::{
    heterogeneous_fixed_point, homogeneous_fixed_point, normalized_attempt, required_samples, throughput,
    virtual_failure, ClassSpec,
};
use dcf_police_core::{BehaviourPolicy, EstimatorConfig, MacParams, PhyTiming};

use crate::error::{CliError, ConfigError, Result};
use crate::output::{num, Table};

pub const CURVES: [&str; 7] = ["fig3", "fig6", "fig7", "fixed-point", "two-class", "robustness", "strategies"];

/// Grid `start, start + step, ...` up to `end` inclusive, without drift.
fn grid(start: f64, end: f64, step: f64) -> Vec<f64> {
    let n = ((end - start) / step).round() as usize;
    (0..=n).map(|i| start + i as f64 * step).collect()
}

fn analytic(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(format!("analytic model failed: {e}"))
}

pub fn curve(name: &str) -> Result<Table> {
    match name {
        "fig3" => suppression_response(),
        "fig6" => virtual_vs_actual(),
        "fig7" => observation_time(),
        "fixed-point" => fixed_points(),
        "two-class" => two_class(),
        "robustness" => robustness_grid(),
        "strategies" => strategies(),
        other => Err(ConfigError::plain(format!(
            "unknown curve `{other}` (expected one of {})",
            CURVES.join(", ")
        ))
        .into()),
    }
}

/// Normalised attempt rate of a compliant station against its ACK
/// suppression probability, with the linear bound `1 - 0.4 P`.
pub fn suppression_response() -> Result<Table> {
    let params = MacParams::compliant();
    let mut t = Table::new(&["f", "p_nack", "normalized_attempt", "bound", "within_bound"]);
    for f in grid(0.0, 0.5, 0.05) {
        for p in grid(0.0, 1.0, 0.05) {
            let x = normalized_attempt(f, p, &params).map_err(analytic)?;
            let bound = 1.0 - 0.4 * p;
            t.push(vec![num(f), num(p), num(x), num(bound), (x <= bound + 1e-12).to_string()]);
        }
    }
    Ok(t)
}

/// Failure probability seen by the virtual station against that of a fair one.
pub fn virtual_vs_actual() -> Result<Table> {
    let params = MacParams::compliant();
    let mut t = Table::new(&["f1", "fv", "gap"]);
    for f1 in grid(0.0, 0.6, 0.01) {
        let fv = virtual_failure(f1, &params).map_err(analytic)?;
        t.push(vec![num(f1), num(fv), num(fv - f1)]);
    }
    Ok(t)
}

/// Channel time needed to collect enough virtual attempts, for 1000-byte
/// frames at 11 Mb/s.
pub fn observation_time() -> Result<Table> {
    let params = MacParams::compliant();
    let timing = PhyTiming::dot11b_11m(1000).map_err(analytic)?;
    let cfg = EstimatorConfig::default();
    let samples = required_samples(&cfg).map_err(analytic)?;
    let mut t = Table::new(&["n", "attempt", "collision", "expected_slot_us", "samples", "observation_s"]);
    for n in 1..=30u32 {
        let fp = homogeneous_fixed_point(n, &params).map_err(analytic)?;
        let th = throughput(&vec![fp.attempt; n as usize], &timing).map_err(analytic)?;
        t.push(vec![
            n.to_string(),
            num(fp.attempt),
            num(fp.collision),
            num(th.expected_slot_us),
            samples.to_string(),
            num(samples as f64 * th.expected_slot_us * 1e-6),
        ]);
    }
    Ok(t)
}

pub fn fixed_points() -> Result<Table> {
    let params = MacParams::compliant();
    let timing = PhyTiming::dot11b_11m(1000).map_err(analytic)?;
    let mut t = Table::new(&["n", "attempt", "collision", "residual", "station_bps", "aggregate_bps"]);
    for n in 1..=10u32 {
        let fp = homogeneous_fixed_point(n, &params).map_err(analytic)?;
        let th = throughput(&vec![fp.attempt; n as usize], &timing).map_err(analytic)?;
        t.push(vec![
            n.to_string(),
            num(fp.attempt),
            num(fp.collision),
            num(fp.residual),
            num(th.per_station_bps[0]),
            num(th.aggregate_bps()),
        ]);
    }
    Ok(t)
}

/// Two compliant stations and one with a halved minimum window, 1500-byte
/// frames at 54 Mb/s, as the misbehaver's suppression probability grows.
pub fn two_class() -> Result<Table> {
    let fair = MacParams::compliant();
    let greedy = BehaviourPolicy::CwMinHalved.mac_params();
    let timing = PhyTiming::dot11g_54m(1500).map_err(analytic)?;
    let mut t = Table::new(&[
        "p_nack",
        "misbehaving_attempt",
        "fair_attempt",
        "attempt_ratio",
        "misbehaving_bps",
        "fair_bps",
    ]);
    for p in grid(0.0, 1.0, 0.05) {
        let fp = heterogeneous_fixed_point(&[ClassSpec::new(1, greedy, p), ClassSpec::new(2, fair, 0.0)])
            .map_err(analytic)?;
        let (xm, xf) = (fp[0].attempt, fp[1].attempt);
        let th = throughput(&[xm, xf, xf], &timing).map_err(analytic)?;
        t.push(vec![
            num(p),
            num(xm),
            num(xf),
            num(xm / xf),
            // Only acknowledged frames count as delivered.
            num(th.per_station_bps[0] * (1.0 - p)),
            num(th.per_station_bps[1]),
        ]);
    }
    Ok(t)
}

pub const ROBUSTNESS_GRID: [f64; 3] = [-0.5, 0.0, 0.5];

/// Exhaustive goodput maximisation for every horizon up to 10.
pub fn robustness_grid() -> Result<Table> {
    let mut t = Table::new(&[
        "horizon",
        "alpha",
        "y_bound",
        "delta",
        "constrained_prefix",
        "admissible_sequences",
        "maximisers",
        "best_goodput",
        "best_sequence",
        "all_maximisers_zero_prefix",
        "zero_prefix_attains_max",
        "tail_gain",
    ]);
    for y_bound in [0.5, 1.0] {
        for alpha in [0.1, 0.25] {
            let delta = minimal_delta(alpha, y_bound);
            for horizon in 1..=10 {
                let r = brute_force_best_prefix(horizon, delta, alpha, y_bound, &ROBUSTNESS_GRID)
                    .map_err(analytic)?;
                t.push(vec![
                    horizon.to_string(),
                    num(alpha),
                    num(y_bound),
                    delta.to_string(),
                    r.constrained_prefix.to_string(),
                    r.admissible_sequences.to_string(),
                    r.maximisers.to_string(),
                    num(r.best_goodput),
                    sequence(&r.best_sequence),
                    r.all_maximisers_zero_prefix.to_string(),
                    r.zero_prefix_attains_max.to_string(),
                    num(r.tail_gain),
                ]);
            }
        }
    }
    Ok(t)
}

/// Every strategy of a small instance with its goodput and flags.
pub fn strategies() -> Result<Table> {
    let mut t = Table::new(&["sequence", "goodput", "admissible", "maximiser"]);
    for r in enumerate_strategies(6, 0.25, 0.5, &ROBUSTNESS_GRID).map_err(analytic)? {
        t.push(vec![sequence(&r.y), num(r.goodput), r.admissible.to_string(), r.maximiser.to_string()]);
    }
    Ok(t)
}

fn sequence(y: &[f64]) -> String {
    y.iter().map(|v| num(*v)).collect::<Vec<_>>().join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col(t: &Table, name: &str) -> Vec<f64> {
        let i = t.column(name).unwrap();
        t.rows.iter().map(|r| r[i].parse().unwrap()).collect()
    }

    #[test]
    fn grids_hit_their_end_points() {
        let g = grid(0.0, 0.5, 0.05);
        assert_eq!(g.len(), 11);
        assert!((g[10] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn virtual_failure_exceeds_actual_by_a_shrinking_gap() {
        let t = virtual_vs_actual().unwrap();
        let gap = col(&t, "gap");
        assert!(gap.iter().all(|g| *g > 0.0));
        assert!(gap.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn suppression_response_respects_bound() {
        let t = suppression_response().unwrap();
        assert_eq!(t.rows.len(), 11 * 21);
        let i = t.column("within_bound").unwrap();
        assert!(t.rows.iter().all(|r| r[i] == "true"));
    }

    #[test]
    fn observation_time_grows_with_n() {
        let t = observation_time().unwrap();
        let secs = col(&t, "observation_s");
        assert!(secs.windows(2).all(|w| w[1] > w[0]));
        assert!(secs.iter().all(|s| *s < 10.0), "{secs:?}");
    }

    #[test]
    fn two_class_ratio_falls_with_suppression() {
        let t = two_class().unwrap();
        let ratio = col(&t, "attempt_ratio");
        assert!(ratio[0] > 1.9 && ratio[0] < 2.2, "{}", ratio[0]);
        assert!(ratio.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn unknown_curve_is_a_config_error() {
        assert_eq!(curve("fig4").unwrap_err().exit_code(), 2);
    }
}
