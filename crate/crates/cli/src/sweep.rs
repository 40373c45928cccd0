//! Parameter sweeps over seeds with Student-t confidence intervals.

use dcf_police_core::sim::SimTrace;
use dcf_police_core::{BehaviourPolicy, StationId, StationSpec};
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::config::ScenarioConfig;
use crate::error::{ConfigError, Result};
use crate::experiment::{in_pool, run_one, RunSpec};
use crate::output::{num, opt, OutputFile, Table};

/// A scenario parameter that a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    /// Number of compliant stations; copies of the first compliant station.
    NFair,
    /// Number of misbehaving stations; copies of the first non-compliant one.
    NMisbehaving,
    Alpha,
    UpdatePeriod,
    DisassociationThreshold,
    Duration,
    PayloadBytes,
    PCapture,
}

impl Axis {
    pub const ALL: [Axis; 8] = [
        Axis::NFair,
        Axis::NMisbehaving,
        Axis::Alpha,
        Axis::UpdatePeriod,
        Axis::DisassociationThreshold,
        Axis::Duration,
        Axis::PayloadBytes,
        Axis::PCapture,
    ];

    pub fn path(&self) -> &'static str {
        match self {
            Axis::NFair => "n_fair",
            Axis::NMisbehaving => "n_misbehaving",
            Axis::Alpha => "controller.alpha",
            Axis::UpdatePeriod => "controller.update_period_s",
            Axis::DisassociationThreshold => "controller.disassociation_threshold",
            Axis::Duration => "duration_s",
            Axis::PayloadBytes => "phy.payload_bytes",
            Axis::PCapture => "capture.p_capture",
        }
    }

    pub fn parse(path: &str) -> std::result::Result<Axis, ConfigError> {
        Axis::ALL.into_iter().find(|a| a.path() == path).ok_or_else(|| {
            let known: Vec<_> = Axis::ALL.iter().map(|a| a.path()).collect();
            ConfigError::plain(format!("unknown sweep axis `{path}` (expected one of {})", known.join(", ")))
        })
    }

    fn is_integral(&self) -> bool {
        matches!(self, Axis::NFair | Axis::NMisbehaving | Axis::DisassociationThreshold | Axis::PayloadBytes)
    }

    /// Returns a copy of `base` with this axis set to `value`, validated.
    pub fn apply(&self, base: &ScenarioConfig, value: f64) -> std::result::Result<ScenarioConfig, ConfigError> {
        let bad = || ConfigError::plain(format!("invalid value {value} for axis {}", self.path()));
        if self.is_integral() && (value.fract() != 0.0 || value < 0.0 || value > u32::MAX as f64) {
            return Err(bad());
        }
        let mut cfg = base.clone();
        let sc = &mut cfg.scenario;
        match self {
            Axis::NFair | Axis::NMisbehaving => {
                let fair: Vec<StationSpec> = sc.stations.iter().filter(|s| s.policy.is_compliant()).cloned().collect();
                let bad_ones: Vec<StationSpec> =
                    sc.stations.iter().filter(|s| !s.policy.is_compliant()).cloned().collect();
                let (n_fair, n_bad) = match self {
                    Axis::NFair => (value as usize, bad_ones.len()),
                    _ => (fair.len(), value as usize),
                };
                let fair_t = fair.first().cloned().unwrap_or_else(|| StationSpec::compliant(0));
                let bad_t = bad_ones
                    .first()
                    .cloned()
                    .unwrap_or_else(|| StationSpec::new(0, BehaviourPolicy::CwMinHalved));
                let pick = |list: &[StationSpec], template: &StationSpec, i: usize| {
                    list.get(i).cloned().unwrap_or_else(|| template.clone())
                };
                let mut stations = Vec::with_capacity(n_fair + n_bad);
                for i in 0..n_fair {
                    stations.push(pick(&fair, &fair_t, i));
                }
                for i in 0..n_bad {
                    stations.push(pick(&bad_ones, &bad_t, i));
                }
                for (i, s) in stations.iter_mut().enumerate() {
                    s.id = StationId(i as u32 + 1);
                }
                sc.stations = stations;
            }
            Axis::Alpha => sc.controller.alpha = value,
            Axis::UpdatePeriod => sc.controller.update_period_s = value,
            Axis::DisassociationThreshold => sc.controller.disassociation_threshold = value as u32,
            Axis::Duration => sc.duration_s = value,
            Axis::PayloadBytes => cfg.set_payload_bytes(value as u32)?,
            Axis::PCapture => sc.p_capture = value,
        }
        if cfg.scenario.stations.is_empty() {
            return Err(ConfigError::plain(format!("axis {} = {value} leaves no stations", self.path())));
        }
        cfg.scenario.validate().map_err(|e| ConfigError::plain(format!("axis {} = {value}: {e}", self.path())))?;
        Ok(cfg)
    }
}

/// Parses `10` (seeds 1..=10, or `first..first+9` when `first` is given),
/// `3..7` (inclusive) or `1,5,9`.
pub fn parse_seeds(text: &str, first: Option<u64>) -> std::result::Result<Vec<u64>, ConfigError> {
    let bad = || ConfigError::plain(format!("invalid seed list `{text}`"));
    let text = text.trim();
    if let Some((a, b)) = text.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
        if b < a {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    if text.contains(',') {
        return text.split(',').map(|s| s.trim().parse().map_err(|_| bad())).collect();
    }
    let count: u64 = text.parse().map_err(|_| bad())?;
    let start = first.unwrap_or(1);
    Ok((start..start + count).collect())
}

/// Comma-separated numbers; an empty string is an empty list.
pub fn parse_values(text: &str) -> std::result::Result<Vec<f64>, ConfigError> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| ConfigError::plain(format!("invalid sweep value `{s}`"))))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    /// Distinguishes several sweeps written into one table.
    pub label: String,
    pub base: ScenarioConfig,
    pub axis: Axis,
    pub values: Vec<f64>,
    pub seeds: Vec<u64>,
}

/// Station-class averages of one run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointMetrics {
    pub fair_attempt_rate: Option<f64>,
    pub misbehaving_attempt_rate: Option<f64>,
    pub fair_goodput_bps: Option<f64>,
    pub misbehaving_goodput_bps: Option<f64>,
    pub network_utility: f64,
    pub max_fair_penalty: Option<f64>,
    /// Misbehaving over fair attempt rate in the second half of the run,
    /// after the controller has settled.
    pub steady_attempt_ratio: Option<f64>,
}

impl PointMetrics {
    pub const NAMES: [&'static str; 8] = [
        "fair_attempt_rate",
        "misbehaving_attempt_rate",
        "attempt_ratio",
        "fair_goodput_bps",
        "misbehaving_goodput_bps",
        "network_utility",
        "max_fair_penalty",
        "steady_attempt_ratio",
    ];

    pub fn from_trace(cfg: &ScenarioConfig, trace: &SimTrace) -> Self {
        let compliant = |id: StationId| {
            cfg.scenario.stations.iter().find(|s| s.id == id).map(|s| s.policy.is_compliant()).unwrap_or(true)
        };
        let mean = |fair: bool, f: &dyn Fn(&dcf_police_core::sim::StationSummary) -> f64| {
            let v: Vec<f64> = trace.stations.iter().filter(|s| compliant(s.station) == fair).map(f).collect();
            (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
        };
        let max_fair_penalty = trace
            .rows
            .iter()
            .filter(|r| compliant(r.station))
            .map(|r| r.penalty)
            .fold(None, |m: Option<f64>, p| Some(m.map_or(p, |m| m.max(p))));
        // Per-station attempt rate over windows starting in the second half.
        let settle_s = cfg.scenario.duration_s / 2.0;
        let late_rate = |fair: bool| {
            let mut rates = Vec::new();
            for s in trace.stations.iter().filter(|s| compliant(s.station) == fair) {
                let (mut a, mut n) = (0u64, 0u64);
                for r in trace.rows_for(s.station) {
                    if trace.windows[r.window as usize].start_s >= settle_s {
                        a += r.attempts;
                        n += r.slots;
                    }
                }
                if n > 0 {
                    rates.push(a as f64 / n as f64);
                }
            }
            (!rates.is_empty()).then(|| rates.iter().sum::<f64>() / rates.len() as f64)
        };
        let steady_attempt_ratio = match (late_rate(false), late_rate(true)) {
            (Some(m), Some(f)) if f > 0.0 => Some(m / f),
            _ => None,
        };
        PointMetrics {
            steady_attempt_ratio,
            fair_attempt_rate: mean(true, &|s| s.attempt_rate),
            misbehaving_attempt_rate: mean(false, &|s| s.attempt_rate),
            fair_goodput_bps: mean(true, &|s| s.goodput_bps),
            misbehaving_goodput_bps: mean(false, &|s| s.goodput_bps),
            network_utility: trace.network_utility(),
            max_fair_penalty,
        }
    }

    pub fn attempt_ratio(&self) -> Option<f64> {
        match (self.misbehaving_attempt_rate, self.fair_attempt_rate) {
            (Some(m), Some(f)) if f > 0.0 => Some(m / f),
            _ => None,
        }
    }

    pub fn values(&self) -> [Option<f64>; 8] {
        [
            self.fair_attempt_rate,
            self.misbehaving_attempt_rate,
            self.attempt_ratio(),
            self.fair_goodput_bps,
            self.misbehaving_goodput_bps,
            Some(self.network_utility),
            self.max_fair_penalty,
            self.steady_attempt_ratio,
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub label: String,
    pub value: f64,
    pub seed: u64,
    pub metrics: PointMetrics,
}

/// Mean and 95 % interval of one metric across seeds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub n: usize,
    /// Empty for a single sample.
    pub ci: Option<(f64, f64)>,
}

pub fn estimate(samples: &[f64]) -> Option<Estimate> {
    let n = samples.len();
    if n == 0 {
        return None;
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return Some(Estimate { mean, n, ci: None });
    }
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let t = StudentsT::new(0.0, 1.0, (n - 1) as f64).expect("positive degrees of freedom").inverse_cdf(0.975);
    let half = t * (var / n as f64).sqrt();
    Some(Estimate { mean, n, ci: Some((mean - half, mean + half)) })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub axis: Axis,
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    /// Per (label, value) estimates, in first-seen order.
    pub fn aggregate(&self) -> Vec<(String, f64, [Option<Estimate>; 8])> {
        let mut keys: Vec<(String, f64)> = Vec::new();
        for p in &self.points {
            if !keys.iter().any(|(l, v)| *l == p.label && *v == p.value) {
                keys.push((p.label.clone(), p.value));
            }
        }
        keys.into_iter()
            .map(|(label, value)| {
                let group: Vec<&SweepPoint> =
                    self.points.iter().filter(|p| p.label == label && p.value == value).collect();
                let est = std::array::from_fn(|k| {
                    let xs: Vec<f64> = group.iter().filter_map(|p| p.metrics.values()[k]).collect();
                    estimate(&xs)
                });
                (label, value, est)
            })
            .collect()
    }

    pub fn points_table(&self) -> Table {
        let mut header = vec!["sweep".to_string(), self.axis.path().to_string(), "seed".to_string()];
        header.extend(PointMetrics::NAMES.iter().map(|s| s.to_string()));
        let mut t = Table::new(&header);
        for p in &self.points {
            let mut row = vec![p.label.clone(), num(p.value), p.seed.to_string()];
            row.extend(p.metrics.values().iter().map(|v| opt(*v)));
            t.push(row);
        }
        t
    }

    pub fn summary_table(&self) -> Table {
        let mut header = vec!["sweep".to_string(), self.axis.path().to_string(), "seeds".to_string()];
        for m in PointMetrics::NAMES {
            header.push(format!("{m}_mean"));
            header.push(format!("{m}_ci_low"));
            header.push(format!("{m}_ci_high"));
        }
        let mut t = Table::new(&header);
        for (label, value, est) in self.aggregate() {
            let seeds = self.points.iter().filter(|p| p.label == label && p.value == value).count();
            let mut row = vec![label, num(value), seeds.to_string()];
            for e in est {
                row.push(opt(e.map(|e| e.mean)));
                row.push(opt(e.and_then(|e| e.ci.map(|c| c.0))));
                row.push(opt(e.and_then(|e| e.ci.map(|c| c.1))));
            }
            t.push(row);
        }
        t
    }

    pub fn outputs(&self, name: &str) -> Vec<OutputFile> {
        vec![
            OutputFile { name: format!("{name}-points.csv"), contents: self.points_table().to_csv() },
            OutputFile { name: format!("{name}-summary.csv"), contents: self.summary_table().to_csv() },
        ]
    }
}

/// Runs every (value, seed) point of every spec. All specs must share an
/// axis. Points are computed in parallel and returned value-major, then by
/// seed, in spec order.
pub fn run_sweeps(specs: &[SweepSpec], workers: usize) -> Result<SweepResult> {
    let axis = specs.first().map(|s| s.axis).unwrap_or(Axis::NFair);
    let mut jobs = Vec::new();
    for spec in specs {
        if spec.axis != axis {
            return Err(ConfigError::plain("sweeps in one table must share an axis").into());
        }
        for &value in &spec.values {
            let cfg = spec.axis.apply(&spec.base, value)?;
            for &seed in &spec.seeds {
                let mut c = cfg.clone();
                c.seed = seed;
                jobs.push((spec.label.clone(), value, RunSpec::new(format!("{}-{}", spec.label, num(value)), c)));
            }
        }
    }
    let points = in_pool(workers, || {
        jobs.par_iter()
            .map(|(label, value, run)| {
                let res = run_one(run)?;
                Ok(SweepPoint {
                    label: label.clone(),
                    value: *value,
                    seed: run.config.seed,
                    metrics: PointMetrics::from_trace(&res.config, &res.trace),
                })
            })
            .collect::<Result<Vec<_>>>()
    })??;
    Ok(SweepResult { axis, points })
}
