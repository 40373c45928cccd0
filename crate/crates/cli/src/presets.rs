//! Named experiments.

use dcf_police_core::adversary::DEFAULT_LARGE_TXOP_US;
use dcf_police_core::{BehaviourPolicy, MeasurementMode, StationSpec, TrafficSource};

use crate::config::{PhyPreset, ScenarioConfig};
use crate::error::{ConfigError, Result};
use crate::experiment::{run_all, run_outputs, Overrides, RunSpec};
use crate::output::OutputFile;
use crate::sweep::{run_sweeps, Axis, SweepSpec};
use crate::tables;

/// What a preset runs.
#[derive(Debug, Clone, PartialEq)]
pub enum Experiment {
    Runs(Vec<RunSpec>),
    Sweeps(Vec<SweepSpec>),
    Curve(&'static str),
}

pub struct PresetInfo {
    pub name: &'static str,
    pub description: &'static str,
}

pub const PRESETS: [PresetInfo; 19] = [
    PresetInfo { name: "fig1", description: "two stations, CW_min 16 against 32, policing off and on" },
    PresetInfo { name: "fig2", description: "three stations at 54 Mb/s with 1500-byte frames, one with CW_min 16" },
    PresetInfo { name: "fig3", description: "normalised attempt rate against ACK suppression (analytic)" },
    PresetInfo { name: "fig5", description: "all-fair baseline and four misbehaviours, policing off and on" },
    PresetInfo { name: "fig5-cwmin-halved", description: "CW_min halved, policing off and on" },
    PresetInfo { name: "fig5-fixed-cw", description: "CW_min = CW_max = 16, policing off and on" },
    PresetInfo { name: "fig5-aifs-sifs", description: "AIFS = SIFS, policing off and on" },
    PresetInfo { name: "fig5-large-txop", description: "6.413 ms TXOP, policing off and on" },
    PresetInfo { name: "fig6", description: "virtual against actual failure probability (analytic)" },
    PresetInfo { name: "fig7", description: "observation time per update against network size (analytic)" },
    PresetInfo { name: "fig8", description: "stations joining and leaving, with a misbehaver rejoining" },
    PresetInfo { name: "fig9", description: "four compliant stations with heterogeneous traffic, 30 minutes" },
    PresetInfo { name: "real-traffic", description: "alias of fig9" },
    PresetInfo { name: "fig10-sweep", description: "one misbehaver and 1 to 7 compliant stations, 10 seeds" },
    PresetInfo { name: "fig11", description: "capture effect, policing off and on" },
    PresetInfo { name: "fig12-sweep", description: "one compliant station and 1 to 7 misbehavers, 10 seeds" },
    PresetInfo { name: "two-class", description: "two-class model ratio against suppression (analytic)" },
    PresetInfo { name: "robustness", description: "exhaustive gaming-strategy search (analytic)" },
    PresetInfo { name: "strategies", description: "every strategy of a small gaming instance (analytic)" },
];

/// Duration of the standard experiments, in simulated seconds.
pub const STANDARD_DURATION_S: f64 = 180.0;
/// Seeds per sweep point.
pub const SWEEP_SEEDS: u64 = 10;

fn dot11b(stations: Vec<StationSpec>, duration_s: f64) -> ScenarioConfig {
    ScenarioConfig::new(PhyPreset::Dot11b11M, 1000, stations, duration_s)
}

fn with_policing(mut cfg: ScenarioConfig, on: bool) -> ScenarioConfig {
    cfg.scenario.policing_enabled = on;
    cfg
}

fn off_on(label: &str, cfg: ScenarioConfig) -> Vec<RunSpec> {
    vec![
        RunSpec::new(format!("{label}-off"), with_policing(cfg.clone(), false)),
        RunSpec::new(format!("{label}-on"), with_policing(cfg, true)),
    ]
}

/// Two compliant stations and one running `policy`, saturated, 802.11b.
pub fn three_station(policy: BehaviourPolicy) -> ScenarioConfig {
    let stations = vec![StationSpec::compliant(1), StationSpec::compliant(2), StationSpec::new(3, policy)];
    dot11b(stations, STANDARD_DURATION_S)
}

pub const MISBEHAVIOURS: [(&str, BehaviourPolicy); 4] = [
    ("cwmin-halved", BehaviourPolicy::CwMinHalved),
    ("fixed-cw", BehaviourPolicy::FixedCw(16)),
    ("aifs-sifs", BehaviourPolicy::AifsSifs),
    ("large-txop", BehaviourPolicy::LargeTxop(DEFAULT_LARGE_TXOP_US)),
];

pub fn fig1() -> ScenarioConfig {
    dot11b(vec![StationSpec::compliant(1), StationSpec::new(2, BehaviourPolicy::CwMinHalved)], STANDARD_DURATION_S)
}

pub fn fig2() -> ScenarioConfig {
    let stations = vec![
        StationSpec::compliant(1),
        StationSpec::compliant(2),
        StationSpec::new(3, BehaviourPolicy::CwMinHalved),
    ];
    ScenarioConfig::new(PhyPreset::Dot11g54M, 1500, stations, STANDARD_DURATION_S)
}

/// Two compliant stations from the start; a misbehaver present from 100 s to
/// 300 s and again from 420 s; a compliant station from 200 s to 400 s.
pub fn fig8() -> ScenarioConfig {
    let stations = vec![
        StationSpec::compliant(1),
        StationSpec::compliant(2),
        StationSpec::new(3, BehaviourPolicy::CwMinHalved).joining_at(100.0).leaving_at(300.0).rejoining_at(420.0),
        StationSpec::compliant(4).joining_at(200.0).leaving_at(400.0),
    ];
    dot11b(stations, 500.0)
}

/// Saturated upload; on-off transfers of about 10 s with 60 s mean silence;
/// a 1 Mb/s constant-rate stream; saturated download-like traffic.
pub fn fig9() -> ScenarioConfig {
    let stations = vec![
        StationSpec::compliant(1),
        StationSpec::compliant(2).with_traffic(TrafficSource::OnOff { active_s: 10.0, idle_mean_s: 60.0 }),
        StationSpec::compliant(3).with_traffic(TrafficSource::Cbr { frames_per_s: 125.0 }),
        StationSpec::compliant(4),
    ];
    dot11b(stations, 1800.0)
}

/// Three compliant stations, the first able to capture the channel.
pub fn fig11() -> ScenarioConfig {
    let stations =
        vec![StationSpec::compliant(1).with_capture_priority(1), StationSpec::compliant(2), StationSpec::compliant(3)];
    let mut cfg = dot11b(stations, 600.0);
    cfg.scenario.p_capture = 1.0;
    cfg.scenario.measurement_mode = MeasurementMode::Realistic;
    cfg
}

fn station_sweep(name: &str, axis: Axis, base: ScenarioConfig, seed: u64) -> Vec<SweepSpec> {
    let seeds: Vec<u64> = (seed..seed + SWEEP_SEEDS).collect();
    let values: Vec<f64> = (1..=7).map(f64::from).collect();
    ["off", "on"]
        .into_iter()
        .map(|v| SweepSpec {
            label: format!("{name}-{v}"),
            base: with_policing(base.clone(), v == "on"),
            axis,
            values: values.clone(),
            seeds: seeds.clone(),
        })
        .collect()
}

/// Expands a preset. `seed` is the seed of single runs and the first seed
/// of sweeps.
pub fn build(name: &str, seed: u64) -> std::result::Result<Experiment, ConfigError> {
    let runs = |specs: Vec<RunSpec>| {
        Experiment::Runs(
            specs
                .into_iter()
                .map(|mut r| {
                    r.config.seed = seed;
                    r
                })
                .collect(),
        )
    };
    let exp = match name {
        "fig1" => runs(off_on("fig1", fig1())),
        "fig2" => runs(vec![RunSpec::new("fig2", fig2())]),
        "fig5" => {
            let mut specs = vec![RunSpec::new("fig5-all-fair", three_station(BehaviourPolicy::Compliant))];
            for (label, policy) in MISBEHAVIOURS {
                specs.extend(off_on(&format!("fig5-{label}"), three_station(policy)));
            }
            runs(specs)
        }
        "fig8" => runs(vec![RunSpec::new("fig8", fig8())]),
        "fig9" | "real-traffic" => runs(vec![RunSpec::new(name, fig9())]),
        "fig11" => runs(off_on("fig11", fig11())),
        "fig10-sweep" => {
            let base = dot11b(
                vec![StationSpec::compliant(1), StationSpec::new(2, BehaviourPolicy::CwMinHalved)],
                STANDARD_DURATION_S,
            );
            Experiment::Sweeps(station_sweep(name, Axis::NFair, base, seed))
        }
        "fig12-sweep" => {
            let base = dot11b(
                vec![StationSpec::compliant(1), StationSpec::new(2, BehaviourPolicy::CwMinHalved)],
                STANDARD_DURATION_S,
            );
            Experiment::Sweeps(station_sweep(name, Axis::NMisbehaving, base, seed))
        }
        "fig3" | "fig6" | "fig7" | "two-class" | "robustness" | "strategies" => {
            Experiment::Curve(tables::CURVES.into_iter().find(|c| *c == name).expect("listed curve"))
        }
        other => {
            if let Some((label, policy)) = other
                .strip_prefix("fig5-")
                .and_then(|rest| MISBEHAVIOURS.into_iter().find(|(l, _)| *l == rest))
            {
                return Ok(runs(off_on(&format!("fig5-{label}"), three_station(policy))));
            }
            let names: Vec<_> = PRESETS.iter().map(|p| p.name).collect();
            return Err(ConfigError::plain(format!("unknown preset `{other}` (expected one of {})", names.join(", "))));
        }
    };
    Ok(exp)
}

/// Runs an experiment and returns its CSV files, named after `name`.
pub fn execute(name: &str, exp: &Experiment, overrides: &Overrides, workers: usize) -> Result<Vec<OutputFile>> {
    match exp {
        Experiment::Runs(specs) => {
            let specs: Vec<RunSpec> = specs
                .iter()
                .cloned()
                .map(|mut r| {
                    overrides.apply(&mut r.config);
                    r
                })
                .collect();
            let results = run_all(&specs, workers)?;
            Ok(run_outputs(name, &results))
        }
        Experiment::Sweeps(specs) => {
            let specs: Vec<SweepSpec> = specs
                .iter()
                .cloned()
                .map(|mut s| {
                    let o = Overrides { seed: None, ..*overrides };
                    o.apply(&mut s.base);
                    s
                })
                .collect();
            Ok(run_sweeps(&specs, workers)?.outputs(name))
        }
        Experiment::Curve(curve) => {
            let table = tables::curve(curve)?;
            Ok(vec![OutputFile { name: format!("{name}.csv"), contents: table.to_csv() }])
        }
    }
}

/// Builds and runs a preset.
pub fn run_preset(name: &str, seed: u64, overrides: &Overrides, workers: usize) -> Result<Vec<OutputFile>> {
    let exp = build(name, seed)?;
    execute(name, &exp, overrides, workers)
}
