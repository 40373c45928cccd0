//! Running scenarios and collecting their CSV output.

use dcf_police_core::sim::{run, SimTrace};
use dcf_police_core::MeasurementMode;
use rayon::prelude::*;

use crate::config::ScenarioConfig;
use crate::error::{CliError, Result};
use crate::output::{events_table, summary_table, trace_table, windows_table, OutputFile, SummaryRecord};

/// Command-line overrides applied on top of a scenario or preset.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub measurement_mode: Option<MeasurementMode>,
    pub no_policing: bool,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ScenarioConfig) {
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(mode) = self.measurement_mode {
            cfg.scenario.measurement_mode = mode;
        }
        if self.no_policing {
            cfg.scenario.policing_enabled = false;
        }
    }
}

/// One labelled simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub label: String,
    pub config: ScenarioConfig,
}

impl RunSpec {
    pub fn new(label: impl Into<String>, config: ScenarioConfig) -> Self {
        RunSpec { label: label.into(), config }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub label: String,
    pub config: ScenarioConfig,
    pub trace: SimTrace,
}

impl RunResult {
    pub fn summary_records(&self) -> Vec<SummaryRecord> {
        let sc = &self.config.scenario;
        let utility = self.trace.network_utility();
        self.trace
            .stations
            .iter()
            .map(|s| SummaryRecord {
                run: self.label.clone(),
                seed: self.trace.seed,
                traffic: sc.stations.iter().find(|p| p.id == s.station).map(|p| p.traffic.name()).unwrap_or(""),
                policing: sc.policing_enabled,
                measurement_mode: sc.measurement_mode.as_str(),
                station: s.clone(),
                network_utility: utility,
            })
            .collect()
    }
}

pub fn run_one(spec: &RunSpec) -> Result<RunResult> {
    let trace = run(&spec.config.scenario, spec.config.seed)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", spec.label)))?;
    log::info!("{} finished: {} windows, {:.1} s simulated", spec.label, trace.windows.len(), trace.sim_time_s);
    Ok(RunResult { label: spec.label.clone(), config: spec.config.clone(), trace })
}

/// Runs every spec on a pool of `workers` threads (0 picks the core
/// count). Results come back in input order.
pub fn run_all(specs: &[RunSpec], workers: usize) -> Result<Vec<RunResult>> {
    in_pool(workers, || specs.par_iter().map(run_one).collect::<Result<Vec<_>>>())?
}

pub(crate) fn in_pool<T: Send>(workers: usize, job: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Runtime(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(job))
}

/// Trace, window and event CSVs per run plus one summary CSV named
/// `<summary_name>-summary.csv`.
pub fn run_outputs(summary_name: &str, results: &[RunResult]) -> Vec<OutputFile> {
    let mut files = Vec::with_capacity(results.len() * 3 + 1);
    let mut records = Vec::new();
    for r in results {
        let stem = format!("{}-s{}", r.label, r.trace.seed);
        files.push(OutputFile { name: format!("{stem}-trace.csv"), contents: trace_table(&r.trace).to_csv() });
        files.push(OutputFile { name: format!("{stem}-windows.csv"), contents: windows_table(&r.trace).to_csv() });
        files.push(OutputFile { name: format!("{stem}-events.csv"), contents: events_table(&r.trace).to_csv() });
        records.extend(r.summary_records());
    }
    files.push(OutputFile {
        name: format!("{summary_name}-summary.csv"),
        contents: summary_table(&records).to_csv(),
    });
    files
}
