//! Deterministic discrete-event scheduling core.
//!
//! Events are dispatched in (time, insertion sequence) order, which is a
//! total order: two runs over the same schedule produce identical dispatch
//! traces. Cancellation is lazy; cancelled entries are skipped on pop.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::phy::{AirFrame, FrameId, RadioState};
use crate::time::SimTime;

/// Identifies a node; also the event target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Firmware tasks with configurable execution times.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskKind {
    BeaconPrep,
    DataPrep,
}

/// What an event does when dispatched. The kind fully determines the handler.
#[derive(Debug, Clone)]
pub enum EventKind {
    /// A frame delivery begins at the target receiver.
    FrameStart {
        frame: Arc<AirFrame>,
        rx_power_dbm: f64,
        rx_end: SimTime,
    },
    /// A frame delivery ends at the target receiver.
    FrameEnd { frame_id: FrameId },
    /// The target's own transmission is over.
    TxOver { frame_id: FrameId },
    /// The base station is due to send a beacon.
    BeaconDue,
    /// The target sensor's TDMA slot opens.
    SlotDue,
    /// A firmware task finished executing.
    TaskDone { task: TaskKind },
    /// A mobile node arrives at waypoint `index`.
    WaypointHop { index: u32 },
    /// The target's radio completes a pending transition.
    ModeSwitch { to: RadioState },
}

impl EventKind {
    /// Stable kebab-case name used in the event trace.
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::FrameStart { .. } => "frame-start",
            EventKind::FrameEnd { .. } => "frame-end",
            EventKind::TxOver { .. } => "tx-over",
            EventKind::BeaconDue => "beacon-due",
            EventKind::SlotDue => "slot-due",
            EventKind::TaskDone { .. } => "task-done",
            EventKind::WaypointHop { .. } => "waypoint-hop",
            EventKind::ModeSwitch { .. } => "mode-switch",
        }
    }
}

/// A scheduled future action.
#[derive(Debug, Clone)]
pub struct Event {
    pub time: SimTime,
    pub seq: u64,
    pub target: NodeId,
    pub kind: EventKind,
}

/// Permits cancelling a scheduled event before it is dispatched.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EventHandle(u64);

#[derive(Debug, Error, PartialEq)]
pub enum ScheduleError {
    #[error("event scheduled in the past: {at} < current time {now}")]
    InPast { at: SimTime, now: SimTime },
}

/// One line of the optional dispatch trace.
#[derive(Debug, Clone)]
pub struct DispatchRecord {
    pub time: SimTime,
    pub seq: u64,
    pub target: NodeId,
    pub kind: &'static str,
}

struct HeapEntry(Event);

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.0.seq == other.0.seq
    }
}
impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed so the BinaryHeap pops (time, seq) ascending.
        other
            .0
            .time
            .cmp(&self.0.time)
            .then_with(|| other.0.seq.cmp(&self.0.seq))
    }
}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Future event list with a monotone clock.
pub struct EventQueue {
    heap: BinaryHeap<HeapEntry>,
    cancelled: HashSet<u64>,
    next_seq: u64,
    now: SimTime,
    trace: Option<Vec<DispatchRecord>>,
}

impl Default for EventQueue {
    fn default() -> Self {
        Self::new()
    }
}

impl EventQueue {
    pub fn new() -> Self {
        EventQueue {
            heap: BinaryHeap::new(),
            cancelled: HashSet::new(),
            next_seq: 0,
            now: SimTime::ZERO,
            trace: None,
        }
    }

    /// Record every dispatch (time, seq, target, kind) for trace output.
    pub fn enable_trace(&mut self) {
        self.trace = Some(Vec::new());
    }

    pub fn take_trace(&mut self) -> Option<Vec<DispatchRecord>> {
        self.trace.take().map(|mut t| {
            self.trace = Some(Vec::new());
            t.shrink_to_fit();
            t
        })
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn is_empty(&self) -> bool {
        self.pending() == 0
    }

    /// Scheduled events not yet dispatched or cancelled.
    pub fn pending(&self) -> usize {
        self.heap.len() - self.cancelled.len()
    }

    pub fn schedule(
        &mut self,
        time: SimTime,
        target: NodeId,
        kind: EventKind,
    ) -> Result<EventHandle, ScheduleError> {
        if time < self.now {
            return Err(ScheduleError::InPast {
                at: time,
                now: self.now,
            });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(HeapEntry(Event {
            time,
            seq,
            target,
            kind,
        }));
        Ok(EventHandle(seq))
    }

    /// Lazily cancels; the entry is dropped when it surfaces.
    pub fn cancel(&mut self, handle: EventHandle) {
        self.cancelled.insert(handle.0);
    }

    /// Pops the next live event strictly before `until`, advancing the clock.
    pub fn pop_due(&mut self, until: SimTime) -> Option<Event> {
        loop {
            let entry = self.heap.peek()?;
            if entry.0.time >= until {
                return None;
            }
            let ev = self.heap.pop().expect("peeked entry").0;
            if self.cancelled.remove(&ev.seq) {
                continue;
            }
            debug_assert!(ev.time >= self.now, "event queue produced time regression");
            self.now = ev.time;
            if let Some(trace) = &mut self.trace {
                trace.push(DispatchRecord {
                    time: ev.time,
                    seq: ev.seq,
                    target: ev.target,
                    kind: ev.kind.name(),
                });
            }
            return Some(ev);
        }
    }
}

/// Counts from a completed (or horizon-cut) run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSummary {
    pub events_dispatched: u64,
    pub end_time: SimTime,
}

/// A handler fault with the event context it occurred in.
#[derive(Debug, Error)]
#[error("event handler failed at {time} (seq {seq}, node {target}, kind {kind}): {source}")]
pub struct RunAbort<E: std::error::Error + 'static> {
    pub time: SimTime,
    pub seq: u64,
    pub target: NodeId,
    pub kind: &'static str,
    #[source]
    pub source: E,
}

/// Dispatches events in (time, seq) order until the queue is empty or the
/// next event lies at or beyond `until`. Events scheduled exactly at the
/// horizon stay pending, so a periodic source firing at t = 0 dispatches
/// exactly `until / period` times.
///
/// The final simulation time is the last dispatched event's time when the
/// queue drains, and `until` when it was cut at the horizon.
pub fn run<E, H>(
    queue: &mut EventQueue,
    until: SimTime,
    mut handler: H,
) -> Result<KernelSummary, RunAbort<E>>
where
    E: std::error::Error + 'static,
    H: FnMut(&mut EventQueue, &Event) -> Result<(), E>,
{
    let mut dispatched = 0u64;
    let mut last_time = SimTime::ZERO;
    let exhausted = loop {
        match queue.pop_due(until) {
            Some(ev) => {
                last_time = ev.time;
                dispatched += 1;
                if let Err(source) = handler(queue, &ev) {
                    return Err(RunAbort {
                        time: ev.time,
                        seq: ev.seq,
                        target: ev.target,
                        kind: ev.kind.name(),
                        source,
                    });
                }
            }
            None => break queue.is_empty(),
        }
    };
    let end_time = if exhausted { last_time } else { until };
    queue.now = queue.now.max(end_time);
    Ok(KernelSummary {
        events_dispatched: dispatched,
        end_time,
    })
}
