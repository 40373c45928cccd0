//! Scenario files.
//!
//! A scenario is a TOML document:
//!
//! ```toml
//! duration_s = 180.0
//! seed = 1
//!
//! [phy]
//! preset = "dot11b-11M"        # or "dot11g-54M"
//! payload_bytes = 1000
//!
//! [controller]
//! enabled = true
//! alpha = 0.1
//! update_period_s = 10.0
//! disassociation_threshold = 6
//! measurement_mode = "realistic"   # or "oracle"
//!
//! [estimator]
//! z_score = 1.96
//! epsilon = 0.01
//!
//! [capture]
//! p_capture = 1.0
//!
//! [[station]]
//! id = 1
//! policy = "compliant"
//!
//! [[station]]
//! id = 2
//! policy = "fixed-cw"
//! cw = 16
//! traffic = "on-off"
//! active_s = 10.0
//! idle_mean_s = 60.0
//! ```
//!
//! Only `duration_s` and the station list are required; every section has
//! defaults. Policies are `compliant`, `cwmin-halved`, `fixed-cw` (needs
//! `cw`), `aifs-sifs`, `large-txop` (optional `txop_us`, default 6413) and
//! `scripted` (needs `script`, the per-window deviation targets). Traffic is
//! `saturated` (default), `on-off` (`active_s`, `idle_mean_s`), `bernoulli`
//! (`arrival_prob`) or `cbr` (`frames_per_s`). Optional station keys:
//! `capture_priority`, `join_time_s`, `leave_time_s`, `rejoin_time_s`,
//! `initial_penalty`, `forced_p_nack`.

use std::fmt::Write as _;
use std::ops::Range;

use dcf_police_core::adversary::DEFAULT_LARGE_TXOP_US;
use dcf_police_core::sim::{SimError, DEFAULT_QUEUE_CAPACITY};
use dcf_police_core::{
    BehaviourPolicy, ControllerConfig, EstimatorConfig, MeasurementMode, PhyTiming, Scenario,
    StationId, StationSpec, TrafficSource,
};
use serde::Deserialize;
use toml::Spanned;

use crate::error::ConfigError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhyPreset {
    Dot11b11M,
    Dot11g54M,
}

impl PhyPreset {
    pub const NAMES: [&'static str; 2] = ["dot11b-11M", "dot11g-54M"];

    pub fn as_str(&self) -> &'static str {
        match self {
            PhyPreset::Dot11b11M => "dot11b-11M",
            PhyPreset::Dot11g54M => "dot11g-54M",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "dot11b-11M" => Some(PhyPreset::Dot11b11M),
            "dot11g-54M" => Some(PhyPreset::Dot11g54M),
            _ => None,
        }
    }

    pub fn timing(&self, payload_bytes: u32) -> Result<PhyTiming, String> {
        let t = match self {
            PhyPreset::Dot11b11M => PhyTiming::dot11b_11m(payload_bytes),
            PhyPreset::Dot11g54M => PhyTiming::dot11g_54m(payload_bytes),
        };
        t.map_err(|e| e.to_string())
    }
}

/// A validated scenario together with its PHY preset and seed.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub phy: PhyPreset,
    pub seed: u64,
    pub scenario: Scenario,
}

impl ScenarioConfig {
    pub fn new(phy: PhyPreset, payload_bytes: u32, stations: Vec<StationSpec>, duration_s: f64) -> Self {
        let mut scenario = Scenario::new(stations, duration_s);
        scenario.timing = phy.timing(payload_bytes).expect("preset payload is valid");
        ScenarioConfig { phy, seed: 1, scenario }
    }

    pub fn payload_bytes(&self) -> u32 {
        self.scenario.timing.payload_bytes
    }

    /// Rebuilds the PHY timing for a new payload size.
    pub fn set_payload_bytes(&mut self, payload_bytes: u32) -> Result<(), ConfigError> {
        self.scenario.timing = self.phy.timing(payload_bytes).map_err(ConfigError::plain)?;
        Ok(())
    }

    /// Canonical TOML text: every key written explicitly, in a fixed order.
    pub fn to_toml(&self) -> String {
        let sc = &self.scenario;
        let mut out = String::new();
        let _ = writeln!(out, "duration_s = {}", float(sc.duration_s));
        let _ = writeln!(out, "seed = {}", self.seed);
        let _ = writeln!(out, "queue_capacity = {}", sc.queue_capacity);
        let _ = writeln!(out, "\n[phy]");
        let _ = writeln!(out, "preset = \"{}\"", self.phy.as_str());
        let _ = writeln!(out, "payload_bytes = {}", sc.timing.payload_bytes);
        let _ = writeln!(out, "\n[controller]");
        let _ = writeln!(out, "enabled = {}", sc.policing_enabled);
        let _ = writeln!(out, "alpha = {}", float(sc.controller.alpha));
        let _ = writeln!(out, "update_period_s = {}", float(sc.controller.update_period_s));
        let _ = writeln!(out, "disassociation_threshold = {}", sc.controller.disassociation_threshold);
        let _ = writeln!(out, "measurement_mode = \"{}\"", sc.measurement_mode);
        let _ = writeln!(out, "\n[estimator]");
        let _ = writeln!(out, "z_score = {}", float(sc.estimator.z_score));
        let _ = writeln!(out, "epsilon = {}", float(sc.estimator.epsilon));
        let _ = writeln!(out, "\n[capture]");
        let _ = writeln!(out, "p_capture = {}", float(sc.p_capture));
        for s in &sc.stations {
            let _ = writeln!(out, "\n[[station]]");
            let _ = writeln!(out, "id = {}", s.id.0);
            let _ = writeln!(out, "policy = \"{}\"", s.policy.name());
            match &s.policy {
                BehaviourPolicy::FixedCw(cw) => {
                    let _ = writeln!(out, "cw = {cw}");
                }
                BehaviourPolicy::LargeTxop(us) => {
                    let _ = writeln!(out, "txop_us = {}", float(*us));
                }
                BehaviourPolicy::Scripted(ys) => {
                    let items: Vec<String> = ys.iter().map(|y| float(*y)).collect();
                    let _ = writeln!(out, "script = [{}]", items.join(", "));
                }
                _ => {}
            }
            let _ = writeln!(out, "traffic = \"{}\"", s.traffic.name());
            match s.traffic {
                TrafficSource::Saturated => {}
                TrafficSource::OnOff { active_s, idle_mean_s } => {
                    let _ = writeln!(out, "active_s = {}", float(active_s));
                    let _ = writeln!(out, "idle_mean_s = {}", float(idle_mean_s));
                }
                TrafficSource::Bernoulli { arrival_prob } => {
                    let _ = writeln!(out, "arrival_prob = {}", float(arrival_prob));
                }
                TrafficSource::Cbr { frames_per_s } => {
                    let _ = writeln!(out, "frames_per_s = {}", float(frames_per_s));
                }
            }
            let _ = writeln!(out, "capture_priority = {}", s.capture_priority);
            let _ = writeln!(out, "join_time_s = {}", float(s.join_time_s));
            let optional = [
                ("leave_time_s", s.leave_time_s),
                ("rejoin_time_s", s.rejoin_time_s),
                ("initial_penalty", s.initial_penalty),
                ("forced_p_nack", s.forced_p_nack),
            ];
            for (key, value) in optional {
                if let Some(v) = value {
                    let _ = writeln!(out, "{key} = {}", float(v));
                }
            }
        }
        out
    }
}

/// TOML float literal that reads back to the same value.
fn float(v: f64) -> String {
    format!("{v:?}")
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    duration_s: Spanned<f64>,
    seed: Option<u64>,
    queue_capacity: Option<Spanned<u32>>,
    #[serde(default)]
    phy: RawPhy,
    #[serde(default)]
    controller: RawController,
    #[serde(default)]
    estimator: RawEstimator,
    #[serde(default)]
    capture: RawCapture,
    station: Vec<Spanned<RawStation>>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawPhy {
    preset: Option<Spanned<String>>,
    payload_bytes: Option<Spanned<u32>>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawController {
    enabled: Option<bool>,
    alpha: Option<f64>,
    update_period_s: Option<f64>,
    disassociation_threshold: Option<u32>,
    measurement_mode: Option<Spanned<String>>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawEstimator {
    z_score: Option<f64>,
    epsilon: Option<f64>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawCapture {
    p_capture: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStation {
    id: Spanned<u32>,
    policy: Spanned<String>,
    cw: Option<Spanned<u32>>,
    txop_us: Option<Spanned<f64>>,
    script: Option<Spanned<Vec<f64>>>,
    traffic: Option<Spanned<String>>,
    active_s: Option<Spanned<f64>>,
    idle_mean_s: Option<Spanned<f64>>,
    arrival_prob: Option<Spanned<f64>>,
    frames_per_s: Option<Spanned<f64>>,
    capture_priority: Option<u32>,
    join_time_s: Option<f64>,
    leave_time_s: Option<f64>,
    rejoin_time_s: Option<f64>,
    initial_penalty: Option<f64>,
    forced_p_nack: Option<f64>,
}

const POLICIES: &str = "compliant, cwmin-halved, fixed-cw, aifs-sifs, large-txop, scripted";
const TRAFFIC: &str = "saturated, on-off, bernoulli, cbr";

struct Ctx<'a> {
    text: &'a str,
}

impl Ctx<'_> {
    fn err(&self, span: Range<usize>, message: impl Into<String>) -> ConfigError {
        ConfigError::at(self.text, span.start, message)
    }

    /// Rejects a key that does not apply to the chosen variant.
    fn unused<T>(&self, key: &str, value: &Option<Spanned<T>>, variant: &str) -> Result<(), ConfigError> {
        match value {
            Some(v) => Err(self.err(v.span(), format!("`{key}` does not apply to {variant}"))),
            None => Ok(()),
        }
    }

    fn required<T: Clone>(
        &self,
        key: &str,
        value: &Option<Spanned<T>>,
        variant: &Spanned<String>,
    ) -> Result<T, ConfigError> {
        match value {
            Some(v) => Ok(v.get_ref().clone()),
            None => Err(self.err(variant.span(), format!("{} needs `{key}`", variant.get_ref()))),
        }
    }

    fn policy(&self, raw: &RawStation) -> Result<BehaviourPolicy, ConfigError> {
        let name = raw.policy.get_ref().as_str();
        let policy = match name {
            "compliant" => BehaviourPolicy::Compliant,
            "cwmin-halved" => BehaviourPolicy::CwMinHalved,
            "fixed-cw" => BehaviourPolicy::FixedCw(self.required("cw", &raw.cw, &raw.policy)?),
            "aifs-sifs" => BehaviourPolicy::AifsSifs,
            "large-txop" => BehaviourPolicy::LargeTxop(
                raw.txop_us.as_ref().map(|v| *v.get_ref()).unwrap_or(DEFAULT_LARGE_TXOP_US),
            ),
            "scripted" => BehaviourPolicy::Scripted(self.required("script", &raw.script, &raw.policy)?),
            other => {
                return Err(self.err(
                    raw.policy.span(),
                    format!("unknown policy `{other}` (expected one of {POLICIES})"),
                ))
            }
        };
        if name != "fixed-cw" {
            self.unused("cw", &raw.cw, name)?;
        }
        if name != "large-txop" {
            self.unused("txop_us", &raw.txop_us, name)?;
        }
        if name != "scripted" {
            self.unused("script", &raw.script, name)?;
        }
        Ok(policy)
    }

    fn traffic(&self, raw: &RawStation) -> Result<TrafficSource, ConfigError> {
        let Some(kind) = &raw.traffic else {
            for (key, v) in [
                ("active_s", &raw.active_s),
                ("idle_mean_s", &raw.idle_mean_s),
                ("arrival_prob", &raw.arrival_prob),
                ("frames_per_s", &raw.frames_per_s),
            ] {
                self.unused(key, v, "saturated traffic")?;
            }
            return Ok(TrafficSource::Saturated);
        };
        let name = kind.get_ref().as_str();
        let source = match name {
            "saturated" => TrafficSource::Saturated,
            "on-off" => TrafficSource::OnOff {
                active_s: self.required("active_s", &raw.active_s, kind)?,
                idle_mean_s: self.required("idle_mean_s", &raw.idle_mean_s, kind)?,
            },
            "bernoulli" => TrafficSource::Bernoulli {
                arrival_prob: self.required("arrival_prob", &raw.arrival_prob, kind)?,
            },
            "cbr" => TrafficSource::Cbr { frames_per_s: self.required("frames_per_s", &raw.frames_per_s, kind)? },
            other => {
                return Err(self.err(kind.span(), format!("unknown traffic `{other}` (expected one of {TRAFFIC})")))
            }
        };
        if name != "on-off" {
            self.unused("active_s", &raw.active_s, name)?;
            self.unused("idle_mean_s", &raw.idle_mean_s, name)?;
        }
        if name != "bernoulli" {
            self.unused("arrival_prob", &raw.arrival_prob, name)?;
        }
        if name != "cbr" {
            self.unused("frames_per_s", &raw.frames_per_s, name)?;
        }
        Ok(source)
    }
}

/// Parses and validates a scenario file. Errors carry the line and column
/// of the offending key or value when one can be pinned down.
pub fn parse_scenario(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError {
        location: e.span().map(|s| crate::error::Location::from_offset(text, s.start)),
        message: e.message().trim().to_string(),
    })?;
    let cx = Ctx { text };

    let phy = match &raw.phy.preset {
        Some(p) => PhyPreset::parse(p.get_ref()).ok_or_else(|| {
            cx.err(
                p.span(),
                format!("unknown PHY preset `{}` (expected one of {})", p.get_ref(), PhyPreset::NAMES.join(", ")),
            )
        })?,
        None => PhyPreset::Dot11b11M,
    };
    let payload = raw.phy.payload_bytes.as_ref().map(|p| *p.get_ref()).unwrap_or(1000);
    let timing = phy.timing(payload).map_err(|e| match &raw.phy.payload_bytes {
        Some(p) => cx.err(p.span(), e),
        None => ConfigError::plain(e),
    })?;

    let mut stations: Vec<StationSpec> = Vec::with_capacity(raw.station.len());
    let mut spans: Vec<(StationId, Range<usize>)> = Vec::new();
    for entry in &raw.station {
        let rs = entry.get_ref();
        let id = StationId(*rs.id.get_ref());
        if let Some((_, first)) = spans.iter().find(|(other, _)| *other == id) {
            let first = crate::error::Location::from_offset(text, first.start);
            return Err(cx.err(
                rs.id.span(),
                format!("duplicate station id {} (first defined at line {})", id.0, first.line),
            ));
        }
        spans.push((id, entry.span()));
        stations.push(StationSpec {
            id,
            policy: cx.policy(rs)?,
            traffic: cx.traffic(rs)?,
            capture_priority: rs.capture_priority.unwrap_or(0),
            join_time_s: rs.join_time_s.unwrap_or(0.0),
            leave_time_s: rs.leave_time_s,
            rejoin_time_s: rs.rejoin_time_s,
            initial_penalty: rs.initial_penalty,
            forced_p_nack: rs.forced_p_nack,
        });
    }
    if stations.is_empty() {
        return Err(ConfigError::plain("at least one [[station]] is required"));
    }

    let defaults = ControllerConfig::default();
    let controller = ControllerConfig {
        alpha: raw.controller.alpha.unwrap_or(defaults.alpha),
        update_period_s: raw.controller.update_period_s.unwrap_or(defaults.update_period_s),
        disassociation_threshold: raw
            .controller
            .disassociation_threshold
            .unwrap_or(defaults.disassociation_threshold),
    };
    let measurement_mode = match &raw.controller.measurement_mode {
        Some(m) => parse_measurement_mode(m.get_ref())
            .ok_or_else(|| cx.err(m.span(), format!("unknown measurement mode `{}`", m.get_ref())))?,
        None => MeasurementMode::default(),
    };
    let est_default = EstimatorConfig::default();
    let scenario = Scenario {
        timing,
        stations,
        policing_enabled: raw.controller.enabled.unwrap_or(true),
        controller,
        measurement_mode,
        estimator: EstimatorConfig {
            z_score: raw.estimator.z_score.unwrap_or(est_default.z_score),
            epsilon: raw.estimator.epsilon.unwrap_or(est_default.epsilon),
        },
        duration_s: *raw.duration_s.get_ref(),
        p_capture: raw.capture.p_capture.unwrap_or(1.0),
        queue_capacity: raw.queue_capacity.as_ref().map(|q| *q.get_ref()).unwrap_or(DEFAULT_QUEUE_CAPACITY),
    };

    scenario.validate().map_err(|e| {
        let SimError::InvalidScenario { station, reason } = &e;
        let span = match station {
            Some(id) => spans.iter().find(|(s, _)| s == id).map(|(_, r)| r.clone()),
            None if reason.contains("duration") => Some(raw.duration_s.span()),
            None => None,
        };
        match span {
            Some(r) => cx.err(r, e.to_string()),
            None => ConfigError::plain(e.to_string()),
        }
    })?;

    Ok(ScenarioConfig { phy, seed: raw.seed.unwrap_or(1), scenario })
}

pub fn parse_measurement_mode(name: &str) -> Option<MeasurementMode> {
    match name {
        "oracle" => Some(MeasurementMode::Oracle),
        "realistic" => Some(MeasurementMode::Realistic),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "duration_s = 60\n\n[[station]]\nid = 1\npolicy = \"compliant\"\n";

    #[test]
    fn minimal_config_parses_with_defaults() {
        let cfg = parse_scenario(MINIMAL).unwrap();
        assert_eq!(cfg.phy, PhyPreset::Dot11b11M);
        assert_eq!(cfg.seed, 1);
        assert_eq!(cfg.scenario.duration_s, 60.0);
        assert_eq!(cfg.scenario.stations.len(), 1);
        assert!(cfg.scenario.policing_enabled);
        assert_eq!(cfg.scenario.controller, ControllerConfig::default());
        assert_eq!(cfg.scenario.measurement_mode, MeasurementMode::Realistic);
    }

    #[test]
    fn duplicate_id_is_named_with_its_line() {
        let text = format!("{MINIMAL}\n[[station]]\nid = 1\npolicy = \"cwmin-halved\"\n");
        let err = parse_scenario(&text).unwrap_err();
        assert!(err.message.contains("duplicate station id 1"), "{err}");
        assert_eq!(err.location.unwrap().line, 8);
    }

    #[test]
    fn unknown_policy_points_at_value() {
        let text = "duration_s = 60\n[[station]]\nid = 1\npolicy = \"greedy\"\n";
        let err = parse_scenario(text).unwrap_err();
        assert!(err.message.contains("unknown policy `greedy`"), "{err}");
        assert_eq!(err.location.unwrap(), crate::error::Location { line: 4, column: 10 });
    }

    #[test]
    fn missing_fields_are_located() {
        let err = parse_scenario("[[station]]\nid = 1\npolicy = \"compliant\"\n").unwrap_err();
        assert!(err.message.contains("duration_s"), "{err}");
        assert!(err.location.is_some());

        let err = parse_scenario("duration_s = 5\n[[station]]\npolicy = \"compliant\"\n").unwrap_err();
        assert!(err.message.contains("id"), "{err}");
        assert_eq!(err.location.unwrap().line, 2);

        let err = parse_scenario("duration_s = 5\n[[station]]\nid = 3\npolicy = \"fixed-cw\"\n").unwrap_err();
        assert!(err.message.contains("needs `cw`"), "{err}");
        assert_eq!(err.location.unwrap().line, 4);
    }

    #[test]
    fn unknown_keys_and_stray_options_are_rejected() {
        let err = parse_scenario(&format!("{MINIMAL}colour = \"red\"\n")).unwrap_err();
        assert!(err.message.contains("colour"), "{err}");
        let err = parse_scenario(&format!("{MINIMAL}cw = 16\n")).unwrap_err();
        assert!(err.message.contains("does not apply"), "{err}");
        assert_eq!(err.location.unwrap().line, 6);
    }

    #[test]
    fn semantic_errors_point_at_the_station() {
        let text = "duration_s = 5\n[[station]]\nid = 1\npolicy = \"compliant\"\n\n[[station]]\nid = 2\npolicy = \"compliant\"\njoin_time_s = 3.0\nleave_time_s = 1.0\n";
        let err = parse_scenario(text).unwrap_err();
        assert!(err.message.contains("leave time"), "{err}");
        assert_eq!(err.location.unwrap().line, 6);
        let err = parse_scenario("duration_s = -1\n[[station]]\nid = 1\npolicy = \"compliant\"\n").unwrap_err();
        assert_eq!(err.location.unwrap().line, 1);
    }

    #[test]
    fn canonical_form_round_trips() {
        let text = r#"
duration_s = 120
seed = 9
[phy]
preset = "dot11g-54M"
payload_bytes = 1500
[controller]
alpha = 0.25
measurement_mode = "oracle"
[[station]]
id = 4
policy = "scripted"
script = [0, 0.5, -0.5]
traffic = "on-off"
active_s = 10
idle_mean_s = 60
[[station]]
id = 2
policy = "large-txop"
capture_priority = 1
join_time_s = 5
leave_time_s = 50
rejoin_time_s = 70
initial_penalty = 0.3
[[station]]
id = 3
policy = "fixed-cw"
cw = 16
traffic = "cbr"
frames_per_s = 125
forced_p_nack = 0.5
"#;
        let cfg = parse_scenario(text).unwrap();
        let canon = cfg.to_toml();
        let again = parse_scenario(&canon).unwrap();
        assert_eq!(again, cfg);
        assert_eq!(again.to_toml(), canon);
    }
}
