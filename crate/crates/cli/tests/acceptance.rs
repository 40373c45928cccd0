//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Tolerances are fixed here; seeds are fixed and were not
//! tuned.

use std::time::Instant;

use dcf_police::presets::{self, PRESETS};
use dcf_police::Overrides;
use dcf_police_core::adversary::{brute_force_best_prefix, minimal_delta};
use dcf_police_core::analytics::{
    attempt_probability, fair_attempt_rate, heterogeneous_fixed_point, homogeneous_fixed_point,
    invert_virtual_failure, normalized_attempt, required_samples, virtual_failure, ClassSpec,
};
use dcf_police_core::policing::Controller;
use dcf_police_core::sim::{run, SimEventKind, SimTrace, Simulator, SlotKind};
use dcf_police_core::{
    BehaviourPolicy, ControllerConfig, EstimatorConfig, MacParams, RateMeasurement, Scenario,
    StationId, StationSpec,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn compliant(n: u32) -> Vec<StationSpec> {
    (1..=n).map(StationSpec::compliant).collect()
}

fn params_w(w: u32) -> MacParams {
    MacParams { cw_min: w, ..MacParams::compliant() }
}

/// Attempt rate of one station over windows starting at or after `from_s`.
fn late_attempt_rate(trace: &SimTrace, id: StationId, from_s: f64) -> f64 {
    let (mut a, mut n) = (0u64, 0u64);
    for r in trace.rows_for(id) {
        if trace.windows[r.window as usize].start_s >= from_s {
            a += r.attempts;
            n += r.slots;
        }
    }
    a as f64 / n as f64
}

fn analytic_spot_checks() -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;
    for w in [16, 32] {
        let g0 = attempt_probability(0.0, &params_w(w)).unwrap();
        let exact = g0 == 2.0 / (w as f64 + 1.0);
        pass &= exact;
        notes.push(format!("g(0)|W={w} = {g0}"));
    }
    let p = MacParams::compliant();
    let mid = attempt_probability(0.5, &p).unwrap();
    let jump = [0.5 - 1e-7, 0.5 + 1e-7]
        .iter()
        .map(|f| (attempt_probability(*f, &p).unwrap() - mid).abs())
        .fold(0.0, f64::max);
    pass &= jump < 1e-4;
    notes.push(format!("jump at 1/2 = {jump:.2e}"));
    let mut worst = 0.0f64;
    for params in [p, params_w(16)] {
        for n in 1..=10 {
            let fp = homogeneous_fixed_point(n, &params).unwrap();
            let recomputed = (fp.collision - (1.0 - (1.0 - fp.attempt).powi(n as i32 - 1))).abs();
            worst = worst.max(fp.residual).max(recomputed);
        }
    }
    pass &= worst < 1e-9;
    notes.push(format!("max residual = {worst:.1e}"));
    outcome(pass, notes.join(", "))
}

fn suppression_bound() -> Outcome {
    let p = MacParams::compliant();
    let mut worst = f64::NEG_INFINITY;
    let mut violations = 0;
    for i in 0..=10 {
        for j in 0..=20 {
            let (f, pn) = (i as f64 * 0.05, j as f64 * 0.05);
            let gap = normalized_attempt(f, pn, &p).unwrap() - (1.0 - 0.4 * pn);
            worst = worst.max(gap);
            if gap > 1e-12 {
                violations += 1;
            }
        }
    }
    outcome(violations == 0, format!("231 grid points, {violations} above the bound, max excess {worst:.4}"))
}

fn sim_matches_fixed_point() -> Outcome {
    let mut pass = true;
    let mut notes = Vec::new();
    for n in [1u32, 2, 3, 5, 8] {
        let mut sc = Scenario::new(compliant(n), 1e9);
        sc.policing_enabled = false;
        let mut sim = Simulator::new(&sc, 1).unwrap();
        let slots = 1_000_000u64;
        let mut attempts = vec![0u64; n as usize];
        for _ in 0..slots {
            match sim.step_slot().kind {
                SlotKind::Success { station, frames, .. } => attempts[station.0 as usize - 1] += frames as u64,
                SlotKind::Collision { stations } => {
                    for s in stations {
                        attempts[s.0 as usize - 1] += 1;
                    }
                }
                SlotKind::Idle => {}
            }
        }
        let x = homogeneous_fixed_point(n, &MacParams::compliant()).unwrap().attempt;
        // Stations are exchangeable, so the class estimate pools them.
        let total: u64 = attempts.iter().sum();
        let trials = (n as u64 * slots) as f64;
        let z = (total as f64 / trials - x) / (x * (1.0 - x) / trials).sqrt();
        pass &= z.abs() < 3.0;
        notes.push(format!("n={n} z={z:+.2}"));
    }
    outcome(pass, format!("10^6 slots each: {}", notes.join(" ")))
}

fn two_station_ratio() -> Outcome {
    let fp = heterogeneous_fixed_point(&[
        ClassSpec::new(1, BehaviourPolicy::CwMinHalved.mac_params(), 0.0),
        ClassSpec::new(1, MacParams::compliant(), 0.0),
    ])
    .unwrap();
    let predicted = fp[0].attempt / fp[1].attempt;
    let stations = vec![StationSpec::compliant(1), StationSpec::new(2, BehaviourPolicy::CwMinHalved)];
    let seeds = 1..=5u64;
    let (mut off, mut on, mut fair_bps, mut bad_bps) = (0.0, 0.0, 0.0, 0.0);
    for seed in seeds.clone() {
        let mut sc = Scenario::new(stations.clone(), 180.0);
        sc.policing_enabled = false;
        let t = run(&sc, seed).unwrap();
        off += t.station(StationId(2)).unwrap().attempt_rate / t.station(StationId(1)).unwrap().attempt_rate;
        sc.policing_enabled = true;
        let t = run(&sc, seed).unwrap();
        on += late_attempt_rate(&t, StationId(2), 90.0) / late_attempt_rate(&t, StationId(1), 90.0);
        fair_bps += t.station(StationId(1)).unwrap().goodput_bps;
        bad_bps += t.station(StationId(2)).unwrap().goodput_bps;
    }
    let k = seeds.count() as f64;
    let (off, on) = (off / k, on / k);
    let off_ok = (off / predicted - 1.0).abs() < 0.05;
    let on_ok = (on - 1.0).abs() <= 0.05;
    let tput_ok = bad_bps < fair_bps;
    outcome(
        off_ok && on_ok && tput_ok,
        format!(
            "no policing {off:.3} vs model {predicted:.3}; policing {on:.3} (second half); goodput misbehaver/fair {:.3}",
            bad_bps / fair_bps
        ),
    )
}

/// Compliant station with an injected penalty. Strict monotonicity is
/// checked against the analytic response of a compliant station; the
/// simulator must agree while the penalty is clear of its noise floor.
fn compliant_penalty_decays() -> Outcome {
    let cfg = ControllerConfig { disassociation_threshold: u32::MAX, ..ControllerConfig::default() };
    let params = MacParams::compliant();
    let f = homogeneous_fixed_point(3, &params).unwrap().collision;
    let mut pass = true;
    let mut notes = Vec::new();
    for p0 in [0.5, 1.0, 3.0] {
        let linear = ((p0 - 1.0f64).max(0.0) / (cfg.alpha * 0.4)).ceil();
        let geometric = ((1e-2 / p0.min(1.0)).ln() / (1.0 - 0.4 * cfg.alpha).ln()).ceil();
        let bound = (linear + geometric) as usize;

        let mut ctl = Controller::new(cfg).unwrap();
        let id = StationId(1);
        ctl.associate_with_penalty(id, p0);
        let mut prev = p0;
        let mut monotone = true;
        let mut reached = None;
        for k in 1..=bound + 50 {
            let p_nack = ctl.state(id).unwrap().p_nack;
            let ratio = normalized_attempt(f, p_nack, &params).unwrap();
            let rec = ctl
                .update(&RateMeasurement { station_id: id, measured_rate: ratio, fair_rate: 1.0, window_slots: 1 })
                .unwrap();
            let p = rec.state.penalty;
            monotone &= p <= prev;
            prev = p;
            if reached.is_none() && p < 1e-2 {
                reached = Some(k);
            }
        }
        let model_ok = monotone && reached.is_some_and(|k| k <= bound);

        let mut stations = compliant(2);
        stations.push(StationSpec::compliant(3).with_initial_penalty(p0));
        let mut sc = Scenario::new(stations, (bound as f64 + 10.0) * 10.0);
        sc.controller = cfg;
        let t = run(&sc, 1).unwrap();
        let pens: Vec<f64> = t.rows_for(StationId(3)).filter(|r| r.update_applied).map(|r| r.penalty).collect();
        let mut last = p0;
        let mut sim_monotone = true;
        for &p in &pens {
            if last > 0.05 {
                sim_monotone &= p <= last;
            }
            last = p;
        }
        let sim_reached = pens.iter().position(|p| *p < 1e-2).map(|i| i + 1);
        let settled = sim_reached.map(|k| pens[k..].iter().all(|p| *p < 0.05)).unwrap_or(false);
        let zero_share = sim_reached
            .map(|k| pens[k..].iter().filter(|p| **p == 0.0).count() as f64 / (pens.len() - k).max(1) as f64)
            .unwrap_or(0.0);
        let sim_ok = sim_monotone && sim_reached.is_some_and(|k| k <= bound) && settled;
        pass &= model_ok && sim_ok;
        notes.push(format!(
            "p0={p0}: bound {bound}, model {} sim {} (p_nack=0 in {:.0}% after)",
            reached.map_or("never".into(), |k| k.to_string()),
            sim_reached.map_or("never".into(), |k| k.to_string()),
            zero_share * 100.0
        ));
    }
    outcome(pass, notes.join("; "))
}

fn fixed_window_suppressed() -> Outcome {
    let mut stations = compliant(2);
    stations.push(StationSpec::new(3, BehaviourPolicy::FixedCw(16)));
    let sc = Scenario::new(stations, 250.0);
    let threshold = sc.controller.disassociation_threshold as usize;
    let alpha = sc.controller.alpha;
    let t = run(&sc, 1).unwrap();
    let rows: Vec<_> = t.rows_for(StationId(3)).collect();
    let Some(full) = rows.iter().position(|r| r.p_nack >= 1.0) else {
        return outcome(false, "p_nack never reached 1");
    };
    let c = rows[..=full].iter().filter_map(|r| r.rate_ratio()).map(|r| r - 1.0).fold(f64::INFINITY, f64::min);
    let bound = (1.0 / (alpha * c)).ceil() as usize + 2;
    let updates = full + 1;
    let dropped = rows[full + 1..].iter().all(|r| r.acked == 0)
        && rows[full].escalation != dcf_police_core::Escalation::Continue;
    let gone = t.events.iter().find(|e| e.kind == SimEventKind::Disassociate && e.station == StationId(3));
    let gone_at = gone.map(|e| ((e.time_s / 10.0).round() as usize).saturating_sub(1));
    let on_time = gone_at == Some(full + threshold - 1);
    let late_goodput: f64 = rows[full + 1..].iter().map(|r| r.goodput_bps).sum();
    outcome(
        c > 0.0 && updates <= bound && dropped && on_time && late_goodput == 0.0,
        format!(
            "min c {c:.2}, full suppression after {updates} updates (bound {bound}), disassociated at window {} (expected {}), goodput afterwards {late_goodput}",
            gone_at.map_or("never".into(), |w| w.to_string()),
            full + threshold - 1
        ),
    )
}

/// First window index from which the seed-averaged ratio stays within 0.05
/// of 1 for five consecutive windows.
fn converged_at(mean_ratio: &[f64]) -> Option<usize> {
    (0..mean_ratio.len().saturating_sub(4)).find(|&k| mean_ratio[k..k + 5].iter().all(|r| (r - 1.0).abs() < 0.05))
}

fn misbehaver_converges() -> Outcome {
    let mut notes = Vec::new();
    let mut found = Vec::new();
    let mut final_penalty = 0.0;
    for policy in [BehaviourPolicy::CwMinHalved, BehaviourPolicy::LargeTxop(6413.0)] {
        let mut stations = compliant(2);
        stations.push(StationSpec::new(3, policy.clone()));
        let sc = Scenario::new(stations, 200.0);
        let seeds = 1..=10u64;
        let mut sum = vec![0.0; 20];
        let mut pen = 0.0;
        for seed in seeds.clone() {
            let t = run(&sc, seed).unwrap();
            for r in t.rows_for(StationId(3)).filter(|r| r.update_applied) {
                sum[r.window as usize] += r.rate_ratio().unwrap();
            }
            pen += t.rows_for(StationId(3)).filter(|r| r.update_applied).last().unwrap().penalty;
        }
        let mean: Vec<f64> = sum.iter().map(|s| s / seeds.clone().count() as f64).collect();
        let k = converged_at(&mean);
        if policy == BehaviourPolicy::CwMinHalved {
            final_penalty = pen / 10.0;
        }
        notes.push(format!(
            "{policy}: converged at window {} (ratio by window {:?})",
            k.map_or("never".into(), |k| k.to_string()),
            mean.iter().map(|r| (r * 100.0).round() / 100.0).collect::<Vec<_>>()
        ));
        found.push(k);
    }
    let w16_ok = found[0].is_some_and(|k| k + 5 <= 15);
    let interior = final_penalty > 0.0 && final_penalty < 1.0;
    let txop_faster = matches!((found[1], found[0]), (Some(t), Some(w)) if t < w);
    notes.push(format!("halved-window penalty settles at {final_penalty:.3}; large TXOP faster: {txop_faster}"));
    outcome(w16_ok && interior && txop_faster, notes.join("; "))
}

fn gaming_does_not_pay() -> Outcome {
    let grid = [-0.5, 0.0, 0.5];
    let y_bound = 0.5;
    let mut instances = 0;
    let mut failures = Vec::new();
    let mut constrained = 0;
    for alpha in [0.1, 0.25] {
        let delta = minimal_delta(alpha, y_bound);
        for horizon in 1..=10 {
            let r = brute_force_best_prefix(horizon, delta, alpha, y_bound, &grid).unwrap();
            instances += 1;
            constrained += r.constrained() as usize;
            if !r.all_maximisers_zero_prefix {
                failures.push(format!("T={horizon} alpha={alpha}"));
            }
        }
    }
    outcome(
        failures.is_empty(),
        format!(
            "{instances} instances ({constrained} with a constrained prefix), failures: {}",
            if failures.is_empty() { "none".to_string() } else { failures.join(", ") }
        ),
    )
}

fn estimator_accuracy() -> Outcome {
    let params = MacParams::compliant();
    let cfg = EstimatorConfig::default();
    let need = required_samples(&cfg).unwrap();
    let mut sc = Scenario::new(compliant(3), 2000.0);
    sc.policing_enabled = false;
    sc.controller.update_period_s = 50.0;
    let t = run(&sc, 1).unwrap();
    let f1 = homogeneous_fixed_point(3, &params).unwrap().collision;
    let fv = virtual_failure(f1, &params).unwrap();
    let full: Vec<_> = t.windows.iter().filter(|w| w.controller_updated || w.end_s <= 2000.0 + 1.0).take(40).collect();
    let sized = full.iter().all(|w| w.virtual_attempts >= need);
    let min_attempts = full.iter().map(|w| w.virtual_attempts).min().unwrap_or(0);
    let within = full.iter().filter(|w| (w.virtual_failure_est.unwrap() - fv).abs() <= 0.01).count();
    let share = within as f64 / full.len() as f64;

    let mut worst = 0.0f64;
    for k in 0..20 {
        let f = k as f64 * 0.03;
        let back = invert_virtual_failure(virtual_failure(f, &params).unwrap(), &params).unwrap();
        let x = fair_attempt_rate(virtual_failure(f, &params).unwrap(), &params).unwrap();
        worst = worst.max((back - f).abs()).max((x - attempt_probability(f, &params).unwrap()).abs());
    }
    outcome(
        full.len() >= 40 && sized && share >= 0.95 && worst < 1e-6,
        format!(
            "{} windows, fewest virtual attempts {min_attempts} (need {need}), {within} within 0.01 ({:.0}%), round-trip error {worst:.1e}",
            full.len(),
            share * 100.0
        ),
    )
}

fn no_false_positives() -> Outcome {
    let cfg = presets::fig9();
    let t = run(&cfg.scenario, 1).unwrap();
    let rows: Vec<_> = t.rows.iter().filter(|r| r.update_applied).collect();
    let ok = rows.iter().filter(|r| r.penalty < 0.05).count();
    let max = rows.iter().map(|r| r.penalty).fold(0.0, f64::max);
    let share = ok as f64 / rows.len() as f64;
    outcome(share >= 0.99, format!("{ok}/{} station-windows below 0.05, max penalty {max:.3}", rows.len()))
}

fn capture_fairness() -> Outcome {
    let mut cfg = presets::fig11();
    cfg.scenario.policing_enabled = false;
    let off = run(&cfg.scenario, 1).unwrap();
    cfg.scenario.policing_enabled = true;
    let on = run(&cfg.scenario, 1).unwrap();
    let g = |t: &SimTrace, id: u32| t.station(StationId(id)).unwrap().goodput_bps;
    let adv = g(&off, 1) / ((g(&off, 2) + g(&off, 3)) / 2.0);
    let on_g = [g(&on, 1), g(&on, 2), g(&on, 3)];
    let (lo, hi) = on_g.iter().fold((f64::INFINITY, 0.0f64), |(l, h), v| (l.min(*v), h.max(*v)));
    let spread = (hi - lo) / hi;
    let (u_off, u_on) = (off.network_utility(), on.network_utility());
    let util_ok = u_on >= u_off - 0.01 * u_off.abs();
    let capture_pen = on.station(StationId(1)).unwrap().final_penalty;
    outcome(
        adv > 1.5 && spread <= 0.10 && util_ok,
        format!(
            "no policing: captured/other goodput {adv:.2} (need > 1.5); policing: spread {:.1}% (need <= 10%), captured station penalty {capture_pen:.3}; utility {u_on:.3} vs {u_off:.3} without",
            spread * 100.0
        ),
    )
}

fn join_leave_dynamics() -> Outcome {
    let cfg = presets::fig8();
    let t = run(&cfg.scenario, 1).unwrap();
    let s3 = StationId(3);
    let first_hit = t.rows_for(s3).take(3).any(|r| r.penalty > 0.0);
    let ev: Vec<_> = t.events.iter().filter(|e| e.station == s3).collect();
    let leave = ev.iter().find(|e| e.kind == SimEventKind::Leave).map(|e| e.penalty);
    let rejoin = ev.iter().find(|e| e.kind == SimEventKind::Rejoin).map(|e| e.penalty);
    let restored = leave.is_some() && leave == rejoin && leave.unwrap() > 0.0;
    let s4_max = t.rows_for(StationId(4)).map(|r| r.penalty).fold(0.0, f64::max);
    outcome(
        first_hit && restored && s4_max < 0.05,
        format!(
            "misbehaver penalised within 3 windows: {first_hit}; penalty at leave {:?}, at rejoin {:?}; late compliant max penalty {s4_max:.4}",
            leave, rejoin
        ),
    )
}

fn presets_are_deterministic() -> Outcome {
    let mut differing = Vec::new();
    let mut files = 0;
    for p in &PRESETS {
        let a = presets::run_preset(p.name, 1, &Overrides::default(), 0).unwrap();
        let b = presets::run_preset(p.name, 1, &Overrides::default(), 0).unwrap();
        files += a.len();
        if a != b {
            differing.push(p.name);
        }
    }
    outcome(
        differing.is_empty(),
        format!("{} presets, {files} CSV files compared, differing: {differing:?}", PRESETS.len()),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 13] = [
        ("analytic spot checks", analytic_spot_checks),
        ("suppression response bound", suppression_bound),
        ("simulated attempt rate matches fixed point", sim_matches_fixed_point),
        ("two-station halved window, with and without policing", two_station_ratio),
        ("injected penalty decays for a compliant station", compliant_penalty_decays),
        ("fixed window is fully suppressed and removed", fixed_window_suppressed),
        ("misbehaver converges to the fair rate", misbehaver_converges),
        ("gaming strategies gain nothing before the end game", gaming_does_not_pay),
        ("virtual-MAC estimator accuracy", estimator_accuracy),
        ("no penalties for heterogeneous compliant traffic", no_false_positives),
        ("capture fairness", capture_fairness),
        ("join, leave and rejoin dynamics", join_leave_dynamics),
        ("presets are deterministic", presets_are_deterministic),
    ];
    let start = Instant::now();
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = check();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {:>2} {verdict} {name} ({:.1} s): {}", i + 1, t.elapsed().as_secs_f64(), o.detail);
        if !o.pass {
            failed.push(i + 1);
        }
    }
    println!(
        "acceptance: {} of {} criteria passed in {:.1} s",
        criteria.len() - failed.len(),
        criteria.len(),
        start.elapsed().as_secs_f64()
    );
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
