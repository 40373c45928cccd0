//! CSV emission. Column sets and their order are part of the interface.

use std::path::{Path, PathBuf};

use dcf_police_core::sim::{SimTrace, StationSummary};

use crate::error::{CliError, Result};

pub const TRACE_COLUMNS: [&str; 19] = [
    "window",
    "time_s",
    "station",
    "present_s",
    "slots",
    "attempts",
    "fcs_successes",
    "acked",
    "accesses",
    "dropped",
    "attempt_rate",
    "measured_rate",
    "fair_rate_est",
    "rate_ratio",
    "penalty",
    "p_nack",
    "escalation",
    "goodput_bps",
    "update_applied",
];

pub const WINDOW_COLUMNS: [&str; 13] = [
    "window",
    "start_s",
    "end_s",
    "idle_slots",
    "success_slots",
    "collision_slots",
    "virtual_attempts",
    "virtual_failures",
    "virtual_failure_est",
    "fair_collision_est",
    "fair_attempt_est",
    "enough_samples",
    "controller_updated",
];

pub const EVENT_COLUMNS: [&str; 4] = ["time_s", "station", "event", "penalty"];

pub const SUMMARY_COLUMNS: [&str; 21] = [
    "run",
    "seed",
    "station",
    "policy",
    "traffic",
    "policing",
    "measurement_mode",
    "attempts",
    "fcs_successes",
    "acked",
    "accesses",
    "dropped",
    "slots",
    "present_s",
    "attempt_rate",
    "goodput_bps",
    "utility",
    "final_penalty",
    "final_p_nack",
    "disassociated",
    "network_utility",
];

/// A CSV file held in memory until the collector writes it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputFile {
    pub name: String,
    pub contents: Vec<u8>,
}

impl OutputFile {
    pub fn text(&self) -> &str {
        std::str::from_utf8(&self.contents).expect("CSV output is UTF-8")
    }
}

/// Shortest decimal text that reads back to the same value.
pub fn num(v: f64) -> String {
    format!("{v}")
}

pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// Rows of strings under a fixed header.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        Table { header: header.iter().map(|h| h.as_ref().to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn to_csv(&self) -> Vec<u8> {
        let mut w = writer();
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }
}

fn writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new())
}

pub fn trace_table(trace: &SimTrace) -> Table {
    let mut t = Table::new(&TRACE_COLUMNS);
    for r in &trace.rows {
        t.push(vec![
            r.window.to_string(),
            num(r.time_s),
            r.station.0.to_string(),
            num(r.present_s),
            r.slots.to_string(),
            r.attempts.to_string(),
            r.fcs_successes.to_string(),
            r.acked.to_string(),
            r.accesses.to_string(),
            r.dropped.to_string(),
            num(r.attempt_rate()),
            num(r.measured_rate),
            opt(r.fair_rate_est),
            opt(r.rate_ratio()),
            num(r.penalty),
            num(r.p_nack),
            r.escalation.as_str().to_string(),
            num(r.goodput_bps),
            r.update_applied.to_string(),
        ]);
    }
    t
}

pub fn windows_table(trace: &SimTrace) -> Table {
    let mut t = Table::new(&WINDOW_COLUMNS);
    for w in &trace.windows {
        t.push(vec![
            w.window.to_string(),
            num(w.start_s),
            num(w.end_s),
            w.slots.idle.to_string(),
            w.slots.success.to_string(),
            w.slots.collision.to_string(),
            w.virtual_attempts.to_string(),
            w.virtual_failures.to_string(),
            opt(w.virtual_failure_est),
            opt(w.fair_collision_est),
            opt(w.fair_attempt_est),
            w.enough_samples.to_string(),
            w.controller_updated.to_string(),
        ]);
    }
    t
}

pub fn events_table(trace: &SimTrace) -> Table {
    let mut t = Table::new(&EVENT_COLUMNS);
    for e in &trace.events {
        t.push(vec![num(e.time_s), e.station.0.to_string(), e.kind.as_str().to_string(), num(e.penalty)]);
    }
    t
}

/// One summary line per station of a finished run.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRecord {
    pub run: String,
    pub seed: u64,
    pub traffic: &'static str,
    pub policing: bool,
    pub measurement_mode: &'static str,
    pub station: StationSummary,
    pub network_utility: f64,
}

pub fn summary_table(records: &[SummaryRecord]) -> Table {
    let mut t = Table::new(&SUMMARY_COLUMNS);
    for r in records {
        let s = &r.station;
        t.push(vec![
            r.run.clone(),
            r.seed.to_string(),
            s.station.0.to_string(),
            s.policy.to_string(),
            r.traffic.to_string(),
            r.policing.to_string(),
            r.measurement_mode.to_string(),
            s.attempts.to_string(),
            s.fcs_successes.to_string(),
            s.acked.to_string(),
            s.accesses.to_string(),
            s.dropped.to_string(),
            s.slots.to_string(),
            num(s.present_s),
            num(s.attempt_rate),
            num(s.goodput_bps),
            if s.goodput_bps > 0.0 { num(s.utility()) } else { String::new() },
            num(s.final_penalty),
            num(s.final_p_nack),
            s.disassociated.to_string(),
            num(r.network_utility),
        ]);
    }
    t
}

/// Writes every file under `dir`, creating it if needed. Returns the paths
/// in the order given.
pub fn write_all(dir: &Path, files: &[OutputFile]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.to_path_buf(), source })?;
    let mut paths = Vec::with_capacity(files.len());
    for f in files {
        let path = dir.join(&f.name);
        std::fs::write(&path, &f.contents).map_err(|source| CliError::Io { path: path.clone(), source })?;
        paths.push(path);
    }
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quoting_follows_rfc4180() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec!["x,y".into(), "say \"hi\"".into()]);
        assert_eq!(std::str::from_utf8(&t.to_csv()).unwrap(), "a,b\n\"x,y\",\"say \"\"hi\"\"\"\n");
    }

    #[test]
    fn numbers_round_trip() {
        for v in [0.1, 1.0 / 3.0, 2.0, 1e-7, 123456.789] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(opt(None), "");
    }
}
