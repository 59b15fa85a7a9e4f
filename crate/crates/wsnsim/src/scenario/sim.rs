//! Run orchestration: builds the node world from a scenario config, drives
//! the single-threaded event loop, and collects all outputs in memory.

use std::collections::BTreeMap;
use std::sync::Arc;

use thiserror::Error;

use crate::energy::{ComponentState, CpuState, EnergyError, EnergyLedger, EnergyReport, PowerTable, StateChange};
use crate::geom::Position;
use crate::kernel::{self, DispatchRecord, Event, EventKind, EventQueue, NodeId, RunAbort, ScheduleError, TaskKind};
use crate::medium::{Medium, MediumError};
use crate::mobility::Motion;
use crate::netapp::{decode_packet, encode_packet, BaseStationFw, CodecError, FirmwareConfig, PacketType, SensorFw, TdmaConfig};
use crate::phy::{ByteLayout, Decider, DropReason, FrameId, PhyError, Radio, RadioState, ReceptionOutcome, ReceptionRecord, Transition};
use crate::rng::node_substream;
use crate::time::SimTime;

use super::config::{Role, ScenarioConfig};

/// Fault inside an event handler; aborts the run with event context.
#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Phy(#[from] PhyError),
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error(transparent)]
    Medium(#[from] MediumError),
    #[error("decoded packet failed integrity re-check: {0}")]
    Codec(#[from] CodecError),
    #[error("event targets unknown node {0}")]
    UnknownTarget(NodeId),
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("scenario setup failed: {0}")]
    Setup(#[from] SimError),
    #[error(transparent)]
    Aborted(#[from] Box<RunAbort<SimError>>),
}

/// One line of the base station's serial log.
#[derive(Debug, Clone, PartialEq)]
pub struct RssiLogRecord {
    pub time: SimTime,
    pub base: NodeId,
    pub sender: NodeId,
    pub rssi_dbm: f64,
    pub round: u16,
}

/// One transmitted frame, for TDMA separation checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameRecord {
    pub id: FrameId,
    pub sender: NodeId,
    pub start: SimTime,
    pub end: SimTime,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RunSummary {
    pub events_dispatched: u64,
    pub end_time: SimTime,
    pub frames_sent: u64,
    pub receptions_decoded: u64,
    pub receptions_dropped: u64,
    pub drops_not_locked: u64,
    pub drops_sync_loss: u64,
    pub drops_crc_fail: u64,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Record the kernel dispatch trace (one line per event).
    pub trace: bool,
    /// Keep every finalized reception record (diagnostics; memory-heavy on
    /// long runs).
    pub record_receptions: bool,
}

/// Everything a run produces, in memory. Files are written only after the
/// run completes, so an aborted run leaves no partial outputs.
#[derive(Debug)]
pub struct RunArtifacts {
    pub summary: RunSummary,
    pub seed: u64,
    pub rssi_log: Vec<RssiLogRecord>,
    pub energy: EnergyReport,
    pub state_trace: Vec<StateChange>,
    pub frame_log: Vec<FrameRecord>,
    pub dispatch_trace: Option<Vec<DispatchRecord>>,
    pub receptions: Option<Vec<(NodeId, ReceptionRecord, ReceptionOutcome)>>,
    pub effective_config: String,
    /// Sensors driven by a waypoint pattern (mobile-scenario plot data).
    pub waypoint_nodes: Vec<NodeId>,
    pub power: PowerTable,
}

#[derive(Debug)]
enum Firmware {
    Base(BaseStationFw),
    TdmaSensor(SensorFw),
    WaypointSensor { position_index: u16 },
}

struct NodeRt {
    id: NodeId,
    radio: Radio,
    decider: Decider,
    motion: Motion,
    firmware: Firmware,
    /// A transition leg currently switching (nonzero switch times).
    pending_leg: Option<RadioState>,
    /// Final state the node is heading for across multiple legs.
    pending_target: Option<RadioState>,
}

#[derive(Default)]
struct Stats {
    frames_sent: u64,
    decoded: u64,
    dropped_not_locked: u64,
    dropped_sync: u64,
    dropped_crc: u64,
}

struct World {
    layout: ByteLayout,
    tdma: TdmaConfig,
    firmware_cfg: FirmwareConfig,
    medium: Medium,
    beacon_airtime: SimTime,
    nodes: Vec<NodeRt>,
    index: BTreeMap<NodeId, usize>,
    ledger: EnergyLedger,
    next_frame: u64,
    stats: Stats,
    rssi_log: Vec<RssiLogRecord>,
    frame_log: Vec<FrameRecord>,
    receptions: Option<Vec<(NodeId, ReceptionRecord, ReceptionOutcome)>>,
}

impl World {
    fn new(cfg: &ScenarioConfig, opts: &RunOptions) -> Self {
        let radio_cfg = Arc::new(cfg.radio.clone());
        let mut nodes = Vec::with_capacity(cfg.nodes.len());
        let mut index = BTreeMap::new();
        let mut ledger = EnergyLedger::new(cfg.power);

        for nc in &cfg.nodes {
            let initial = match (nc.role, nc.is_waypoint_sender()) {
                (Role::Base, _) => {
                    if cfg.tdma.beacons_enabled {
                        RadioState::Idle
                    } else {
                        RadioState::Rx
                    }
                }
                (Role::Sensor, true) => RadioState::Idle,
                (Role::Sensor, false) => RadioState::Rx,
            };
            let firmware = match (nc.role, nc.is_waypoint_sender()) {
                (Role::Base, _) => Firmware::Base(BaseStationFw::default()),
                (Role::Sensor, true) => Firmware::WaypointSensor { position_index: 0 },
                (Role::Sensor, false) => Firmware::TdmaSensor(SensorFw::new(nc.slot.unwrap_or(1))),
            };
            ledger.register_node(nc.id, initial, CpuState::Idle, SimTime::ZERO);
            index.insert(nc.id, nodes.len());
            nodes.push(NodeRt {
                id: nc.id,
                radio: Radio::new(nc.id, radio_cfg.clone(), initial),
                decider: Decider::new(
                    nc.id,
                    cfg.radio.noise_floor_dbm,
                    cfg.radio.datarate_baud,
                    cfg.radio.modulation,
                    cfg.radio.rssi_resolution_db,
                    node_substream(cfg.seed, nc.id.0),
                ),
                motion: Motion::from_model(&nc.mobility_model(), nc.id),
                firmware,
                pending_leg: None,
                pending_target: None,
            });
        }

        World {
            layout: cfg.layout,
            tdma: cfg.tdma,
            firmware_cfg: cfg.firmware,
            medium: Medium::new(cfg.model, cfg.medium),
            beacon_airtime: cfg.beacon_airtime(),
            nodes,
            index,
            ledger,
            next_frame: 0,
            stats: Stats::default(),
            rssi_log: Vec::new(),
            frame_log: Vec::new(),
            receptions: opts.record_receptions.then(Vec::new),
        }
    }

    fn init(&mut self, queue: &mut EventQueue, cfg: &ScenarioConfig) -> Result<(), SimError> {
        if cfg.tdma.beacons_enabled {
            queue.schedule(SimTime::ZERO, cfg.base().id, EventKind::BeaconDue)?;
        }
        for (i, node) in self.nodes.iter().enumerate() {
            if let (Firmware::WaypointSensor { .. }, Motion::Path(path)) =
                (&node.firmware, &self.nodes[i].motion)
            {
                queue.schedule(path.arrival(0), node.id, EventKind::WaypointHop { index: 0 })?;
            }
        }
        Ok(())
    }

    fn dispatch(&mut self, queue: &mut EventQueue, ev: &Event) -> Result<(), SimError> {
        let idx = *self
            .index
            .get(&ev.target)
            .ok_or(SimError::UnknownTarget(ev.target))?;
        match &ev.kind {
            EventKind::BeaconDue => self.on_beacon_due(queue, idx, ev.time),
            EventKind::SlotDue => self.on_slot_due(queue, idx, ev.time),
            EventKind::WaypointHop { index } => {
                self.on_waypoint_hop(queue, idx, *index, ev.time)
            }
            EventKind::TaskDone { task } => self.on_task_done(queue, idx, *task, ev.time),
            EventKind::FrameStart {
                frame,
                rx_power_dbm,
                rx_end,
            } => {
                let state = self.nodes[idx].radio.state();
                self.nodes[idx]
                    .decider
                    .on_frame_start(frame.clone(), *rx_power_dbm, *rx_end, state, ev.time);
                Ok(())
            }
            EventKind::FrameEnd { frame_id } => self.on_frame_end(queue, idx, *frame_id, ev.time),
            EventKind::TxOver { .. } => self.on_tx_over(queue, idx, ev.time),
            EventKind::ModeSwitch { to } => self.on_mode_switch(queue, idx, *to, ev.time),
        }
    }

    /// Walks the radio toward `target` through legal edges (via Idle when
    /// needed), accounting energy per leg. Legs with configured switching
    /// times complete via a mode-switch event.
    fn set_radio(
        &mut self,
        queue: &mut EventQueue,
        idx: usize,
        target: RadioState,
        now: SimTime,
    ) -> Result<(), SimError> {
        loop {
            let cur = self.nodes[idx].radio.state();
            if cur == target {
                return Ok(());
            }
            let next = if cur.can_transition_to(target) {
                target
            } else {
                RadioState::Idle
            };
            match self.nodes[idx].radio.begin_transition(next)? {
                Transition::Immediate => {
                    let id = self.nodes[idx].id;
                    self.ledger
                        .notify_state_change(id, ComponentState::Radio(next), now)?;
                }
                Transition::Pending(dwell) => {
                    let id = self.nodes[idx].id;
                    self.nodes[idx].pending_leg = Some(next);
                    self.nodes[idx].pending_target = Some(target);
                    queue.schedule(now + dwell, id, EventKind::ModeSwitch { to: next })?;
                    return Ok(());
                }
            }
        }
    }

    fn on_mode_switch(
        &mut self,
        queue: &mut EventQueue,
        idx: usize,
        to: RadioState,
        now: SimTime,
    ) -> Result<(), SimError> {
        if self.nodes[idx].pending_leg == Some(to) {
            self.nodes[idx].pending_leg = None;
            self.nodes[idx].radio.apply_state(to);
            let id = self.nodes[idx].id;
            self.ledger
                .notify_state_change(id, ComponentState::Radio(to), now)?;
            if let Some(target) = self.nodes[idx].pending_target.take() {
                if self.nodes[idx].radio.state() != target {
                    return self.set_radio(queue, idx, target, now);
                }
            }
            Ok(())
        } else {
            // A scheduled request (sensor wake), not a leg completion.
            self.set_radio(queue, idx, to, now)
        }
    }

    /// Starts a firmware task; returns false when the task runs in zero
    /// time and the caller should act immediately.
    fn start_task(
        &mut self,
        queue: &mut EventQueue,
        idx: usize,
        task: TaskKind,
        duration: SimTime,
        now: SimTime,
    ) -> Result<bool, SimError> {
        if duration == SimTime::ZERO {
            return Ok(false);
        }
        let id = self.nodes[idx].id;
        self.ledger
            .notify_state_change(id, ComponentState::Cpu(CpuState::Active), now)?;
        queue.schedule(now + duration, id, EventKind::TaskDone { task })?;
        Ok(true)
    }

    fn on_task_done(
        &mut self,
        queue: &mut EventQueue,
        idx: usize,
        task: TaskKind,
        now: SimTime,
    ) -> Result<(), SimError> {
        let id = self.nodes[idx].id;
        self.ledger
            .notify_state_change(id, ComponentState::Cpu(CpuState::Idle), now)?;
        match task {
            TaskKind::BeaconPrep => self.transmit_beacon(queue, idx, now),
            TaskKind::DataPrep => self.transmit_data(queue, idx, now),
        }
    }

    fn on_beacon_due(
        &mut self,
        queue: &mut EventQueue,
        idx: usize,
        now: SimTime,
    ) -> Result<(), SimError> {
        let id = self.nodes[idx].id;
        queue.schedule(now + self.tdma.beacon_period, id, EventKind::BeaconDue)?;
        if !self.start_task(queue, idx, TaskKind::BeaconPrep, self.firmware_cfg.beacon_prep, now)? {
            self.transmit_beacon(queue, idx, now)?;
        }
        Ok(())
    }

    fn transmit_beacon(
        &mut self,
        queue: &mut EventQueue,
        idx: usize,
        now: SimTime,
    ) -> Result<(), SimError> {
        let round = match &mut self.nodes[idx].firmware {
            Firmware::Base(fw) => fw.next_round(),
            _ => 0,
        };
        if self.nodes[idx].radio.state() == RadioState::Rx {
            self.set_radio(queue, idx, RadioState::Idle, now)?;
        }
        let payload = self.counter_payload(round);
        let address = self.nodes[idx].id.0 as u8;
        let bytes = encode_packet(address, PacketType::Beacon, &payload)?;
        self.transmit(queue, idx, bytes, now)
    }

    fn on_slot_due(
        &mut self,
        queue: &mut EventQueue,
        idx: usize,
        now: SimTime,
    ) -> Result<(), SimError> {
        if !self.start_task(queue, idx, TaskKind::DataPrep, self.firmware_cfg.data_prep, now)? {
            self.transmit_data(queue, idx, now)?;
        }
        Ok(())
    }

    fn on_waypoint_hop(
        &mut self,
        queue: &mut EventQueue,
        idx: usize,
        hop: u32,
        now: SimTime,
    ) -> Result<(), SimError> {
        let id = self.nodes[idx].id;
        if let Motion::Path(path) = &self.nodes[idx].motion {
            // One lap: positions 1..=waypoint_count, no wrap-around sends.
            if hop + 1 < path.waypoint_count() {
                queue.schedule(
                    path.arrival(hop + 1),
                    id,
                    EventKind::WaypointHop { index: hop + 1 },
                )?;
            }
        }
        if let Firmware::WaypointSensor { position_index } = &mut self.nodes[idx].firmware {
            *position_index = (hop + 1) as u16;
        }
        if !self.start_task(queue, idx, TaskKind::DataPrep, self.firmware_cfg.data_prep, now)? {
            self.transmit_data(queue, idx, now)?;
        }
        Ok(())
    }

    fn transmit_data(
        &mut self,
        queue: &mut EventQueue,
        idx: usize,
        now: SimTime,
    ) -> Result<(), SimError> {
        let counter = match &self.nodes[idx].firmware {
            Firmware::TdmaSensor(fw) => fw.current_round,
            Firmware::WaypointSensor { position_index } => *position_index,
            Firmware::Base(_) => 0,
        };
        let payload = self.counter_payload(counter);
        let address = self.nodes[idx].id.0 as u8;
        let bytes = encode_packet(address, PacketType::Data, &payload)?;
        self.transmit(queue, idx, bytes, now)
    }

    /// Round counter in the first two payload bytes, zero-padded to the
    /// configured payload size.
    fn counter_payload(&self, value: u16) -> Vec<u8> {
        let mut payload = vec![0u8; self.layout.payload_bytes as usize];
        payload[..2].copy_from_slice(&value.to_be_bytes());
        payload
    }

    fn transmit(
        &mut self,
        queue: &mut EventQueue,
        idx: usize,
        packet_bytes: Vec<u8>,
        now: SimTime,
    ) -> Result<(), SimError> {
        let positions: Vec<(NodeId, Position)> = self
            .nodes
            .iter()
            .map(|n| (n.id, n.motion.position_at(now)))
            .collect();
        let frame_id = FrameId(self.next_frame);
        self.next_frame += 1;
        let frame = self.nodes[idx]
            .radio
            .start_transmission(frame_id, self.layout, packet_bytes, now)?;
        let sender = frame.sender;
        self.ledger
            .notify_state_change(sender, ComponentState::Radio(RadioState::Tx), now)?;
        let frame = Arc::new(frame);
        let deliveries = self
            .medium
            .broadcast(&frame, positions[idx].1, &positions)?;
        for d in deliveries {
            queue.schedule(
                d.rx_start,
                d.node,
                EventKind::FrameStart {
                    frame: frame.clone(),
                    rx_power_dbm: d.rx_power_dbm,
                    rx_end: d.rx_end,
                },
            )?;
            queue.schedule(d.rx_end, d.node, EventKind::FrameEnd { frame_id })?;
        }
        queue.schedule(frame.end(), sender, EventKind::TxOver { frame_id })?;
        self.frame_log.push(FrameRecord {
            id: frame_id,
            sender,
            start: frame.start,
            end: frame.end(),
        });
        self.stats.frames_sent += 1;
        Ok(())
    }

    fn on_frame_end(
        &mut self,
        queue: &mut EventQueue,
        idx: usize,
        frame_id: FrameId,
        now: SimTime,
    ) -> Result<(), SimError> {
        let (record, outcome) = self.nodes[idx].decider.on_frame_end(frame_id, now)?;
        match &outcome {
            ReceptionOutcome::Decoded { .. } => self.stats.decoded += 1,
            ReceptionOutcome::Dropped(DropReason::NotLocked) => {
                self.stats.dropped_not_locked += 1
            }
            ReceptionOutcome::Dropped(DropReason::SyncLoss) => self.stats.dropped_sync += 1,
            ReceptionOutcome::Dropped(DropReason::CrcFail) => self.stats.dropped_crc += 1,
        }
        if let Some(receptions) = &mut self.receptions {
            receptions.push((self.nodes[idx].id, record, outcome.clone()));
        }
        if let ReceptionOutcome::Decoded {
            packet_bytes,
            rssi_dbm,
        } = outcome
        {
            let packet = decode_packet(&packet_bytes)?;
            self.on_packet_decoded(queue, idx, packet, rssi_dbm, now)?;
        }
        Ok(())
    }

    fn on_packet_decoded(
        &mut self,
        queue: &mut EventQueue,
        idx: usize,
        packet: crate::netapp::Packet,
        rssi_dbm: f64,
        now: SimTime,
    ) -> Result<(), SimError> {
        let counter = u16::from_be_bytes([packet.payload[0], packet.payload[1]]);
        match (&mut self.nodes[idx].firmware, packet.packet_type) {
            (Firmware::Base(_), PacketType::Data) => {
                let base = self.nodes[idx].id;
                self.rssi_log.push(RssiLogRecord {
                    time: now,
                    base,
                    sender: NodeId(packet.address as u32),
                    rssi_dbm,
                    round: counter,
                });
                Ok(())
            }
            (Firmware::TdmaSensor(fw), PacketType::Beacon) => {
                fw.current_round = counter;
                let slot = fw.slot;
                let id = self.nodes[idx].id;
                queue.schedule(self.tdma.slot_start(now, slot), id, EventKind::SlotDue)?;
                queue.schedule(
                    self.tdma.next_wake(now, self.beacon_airtime),
                    id,
                    EventKind::ModeSwitch { to: RadioState::Rx },
                )?;
                self.set_radio(queue, idx, RadioState::Idle, now)
            }
            // Overheard traffic that is not for this role is ignored.
            _ => Ok(()),
        }
    }

    fn on_tx_over(
        &mut self,
        queue: &mut EventQueue,
        idx: usize,
        now: SimTime,
    ) -> Result<(), SimError> {
        self.nodes[idx].radio.finish_transmission();
        let id = self.nodes[idx].id;
        self.ledger
            .notify_state_change(id, ComponentState::Radio(RadioState::Idle), now)?;
        match &self.nodes[idx].firmware {
            Firmware::Base(_) => self.set_radio(queue, idx, RadioState::Rx, now),
            Firmware::TdmaSensor(_) => {
                if self.firmware_cfg.inter_round_state == crate::netapp::InterRoundState::Sleep {
                    self.set_radio(queue, idx, RadioState::Sleep, now)
                } else {
                    Ok(())
                }
            }
            Firmware::WaypointSensor { .. } => Ok(()),
        }
    }
}

/// Builds the world from `cfg`, runs it to the configured horizon, and
/// returns all outputs. Identical (config, seed) yields identical artifacts.
pub fn run_scenario(cfg: &ScenarioConfig, opts: &RunOptions) -> Result<RunArtifacts, RunError> {
    let mut queue = EventQueue::new();
    if opts.trace {
        queue.enable_trace();
    }
    let mut world = World::new(cfg, opts);
    world.init(&mut queue, cfg)?;
    let kernel_summary = kernel::run(&mut queue, cfg.until, |q, ev| world.dispatch(q, ev))
        .map_err(Box::new)?;

    let summary = RunSummary {
        events_dispatched: kernel_summary.events_dispatched,
        end_time: kernel_summary.end_time,
        frames_sent: world.stats.frames_sent,
        receptions_decoded: world.stats.decoded,
        receptions_dropped: world.stats.dropped_not_locked
            + world.stats.dropped_sync
            + world.stats.dropped_crc,
        drops_not_locked: world.stats.dropped_not_locked,
        drops_sync_loss: world.stats.dropped_sync,
        drops_crc_fail: world.stats.dropped_crc,
    };
    Ok(RunArtifacts {
        summary,
        seed: cfg.seed,
        rssi_log: world.rssi_log,
        energy: world.ledger.report(kernel_summary.end_time),
        state_trace: world.ledger.state_trace().to_vec(),
        frame_log: world.frame_log,
        dispatch_trace: queue.take_trace(),
        receptions: world.receptions,
        effective_config: cfg.to_config_text(),
        waypoint_nodes: cfg
            .nodes
            .iter()
            .filter(|n| n.is_waypoint_sender())
            .map(|n| n.id)
            .collect(),
        power: cfg.power,
    })
}
