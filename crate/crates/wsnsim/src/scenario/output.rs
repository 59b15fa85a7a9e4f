//! File outputs: CSV serialization and run metadata. All content is a
//! deterministic function of the run artifacts; files are only written
//! after a run completes.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use crate::energy::{Component, EnergyReport};
use crate::kernel::DispatchRecord;
use crate::rng::GENERATOR_ID;
use crate::time::SimTime;

use super::sim::{RssiLogRecord, RunArtifacts};

/// `time_s,base_id,sender_id,rssi_dbm,round` with times in fixed 6-decimal
/// seconds.
pub fn rssi_csv(records: &[RssiLogRecord]) -> String {
    let mut out = String::from("time_s,base_id,sender_id,rssi_dbm,round\n");
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.time.fmt_secs6(),
            r.base,
            r.sender,
            r.rssi_dbm,
            r.round
        );
    }
    out
}

/// `node_id,component,state,energy_mj` breakdown rows followed by one
/// `total` row per node; energies in fixed 9-decimal millijoules.
pub fn energy_csv(report: &EnergyReport) -> String {
    let mut out = String::from("node_id,component,state,energy_mj\n");
    for (node, total) in &report.node_totals {
        for row in report.rows.iter().filter(|r| r.node == *node) {
            let _ = writeln!(
                out,
                "{},{},{},{:.9}",
                row.node,
                row.component.name(),
                row.state,
                row.energy_j * 1e3
            );
        }
        let _ = writeln!(out, "{},total,,{:.9}", node, total * 1e3);
    }
    out
}

/// `time_ns,seq,target,kind`, one line per dispatched event.
pub fn trace_csv(trace: &[DispatchRecord]) -> String {
    let mut out = String::from("time_ns,seq,target,kind\n");
    for r in trace {
        let _ = writeln!(out, "{},{},{},{}", r.time.as_ns(), r.seq, r.target, r.kind);
    }
    out
}

/// Effective configuration (defaults applied) plus run identity. Contains
/// no wall-clock data, so identical runs produce identical bytes.
pub fn run_meta(artifacts: &RunArtifacts) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# Effective run configuration with all defaults applied.");
    let _ = writeln!(out, "[meta]");
    let _ = writeln!(out, "version = {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(out, "rng = {GENERATOR_ID}");
    let _ = writeln!(out, "seed = {}", artifacts.seed);
    let _ = writeln!(out, "end_time_ns = {}", artifacts.summary.end_time.as_ns());
    let _ = writeln!(out, "events_dispatched = {}", artifacts.summary.events_dispatched);
    let _ = writeln!(out, "frames_sent = {}", artifacts.summary.frames_sent);
    let _ = writeln!(out, "receptions_decoded = {}", artifacts.summary.receptions_decoded);
    let _ = writeln!(out, "receptions_dropped = {}", artifacts.summary.receptions_dropped);
    let _ = writeln!(out);
    out.push_str(&artifacts.effective_config);
    out
}

/// `position_index,rssi_dbm` for packets sent by waypoint-driven sensors:
/// the data behind an RSSI-vs-position plot.
pub fn rssi_vs_position_csv(artifacts: &RunArtifacts) -> String {
    let mut out = String::from("position_index,rssi_dbm\n");
    for r in &artifacts.rssi_log {
        if artifacts.waypoint_nodes.contains(&r.sender) {
            let _ = writeln!(out, "{},{}", r.round, r.rssi_dbm);
        }
    }
    out
}

/// `time_s,node_id,energy_mj`: cumulative energy of each waypoint-driven
/// sensor at every state change, replayed from the state trace.
pub fn energy_vs_time_csv(artifacts: &RunArtifacts) -> String {
    let mut out = String::from("time_s,node_id,energy_mj\n");
    for &node in &artifacts.waypoint_nodes {
        let mut cumulative = 0.0f64;
        let mut last: [Option<(f64, SimTime)>; 2] = [None, None]; // per component: (power, since)
        let emit = |out: &mut String, t: SimTime, e: f64| {
            let _ = writeln!(out, "{},{},{:.9}", t.fmt_secs6(), node, e * 1e3);
        };
        for change in artifacts.state_trace.iter().filter(|c| c.node == node) {
            let slot = match change.state.component() {
                Component::Radio => 0,
                Component::Cpu => 1,
            };
            if let Some((power_mw, since)) = last[slot] {
                cumulative += power_mw * (change.at - since).as_ns() as f64 * 1e-12;
            }
            last[slot] = Some((artifacts.power.power_mw(change.state), change.at));
            emit(&mut out, change.at, cumulative);
        }
        let end = artifacts.summary.end_time;
        for entry in last.iter().flatten() {
            cumulative += entry.0 * end.saturating_sub(entry.1).as_ns() as f64 * 1e-12;
        }
        emit(&mut out, end, cumulative);
    }
    out
}

/// Writes every output file for one run into `dir`, creating it if needed.
/// Returns the paths written.
pub fn write_artifacts(artifacts: &RunArtifacts, dir: &Path) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut emit = |name: &str, content: String| -> io::Result<()> {
        let path = dir.join(name);
        fs::write(&path, content)?;
        written.push(path);
        Ok(())
    };
    emit("rssi_log.csv", rssi_csv(&artifacts.rssi_log))?;
    emit("energy_report.csv", energy_csv(&artifacts.energy))?;
    emit("run_meta.txt", run_meta(artifacts))?;
    if let Some(trace) = &artifacts.dispatch_trace {
        emit("event_trace.csv", trace_csv(trace))?;
    }
    if !artifacts.waypoint_nodes.is_empty() {
        emit("plot_rssi_vs_position.csv", rssi_vs_position_csv(artifacts))?;
        emit("plot_energy_vs_time.csv", energy_vs_time_csv(artifacts))?;
    }
    Ok(written)
}

/// Probes that `dir` is writable by creating it (if absent) and touching a
/// scratch file, removed immediately. Runs refuse to start otherwise.
pub fn ensure_writable(dir: &Path) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    let probe = dir.join(".write_probe");
    fs::write(&probe, b"")?;
    fs::remove_file(&probe)
}
