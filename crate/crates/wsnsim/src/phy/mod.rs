//! Per-node radio PHY: transceiver state machine, transmission lifecycle,
//! and the decider that tracks SNIR across concurrent signals and turns it
//! into bit errors.

mod decider;
mod radio;

pub use decider::{Decider, DropReason, ReceptionOutcome, ReceptionRecord, SnirSegment};
pub use radio::{Radio, Transition};

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::kernel::NodeId;
use crate::time::SimTime;

/// Unique per-run identifier of an on-air transmission.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FrameId(pub u64);

impl fmt::Display for FrameId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Modulation {
    #[default]
    Fsk2,
}

impl Modulation {
    pub fn bits_per_symbol(self) -> u32 {
        match self {
            Modulation::Fsk2 => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Modulation::Fsk2 => "fsk2",
        }
    }
}

/// Transceiver operating states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RadioState {
    Sleep,
    Idle,
    Rx,
    Tx,
}

impl RadioState {
    pub const ALL: [RadioState; 4] = [
        RadioState::Sleep,
        RadioState::Idle,
        RadioState::Rx,
        RadioState::Tx,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RadioState::Sleep => "sleep",
            RadioState::Idle => "idle",
            RadioState::Rx => "rx",
            RadioState::Tx => "tx",
        }
    }

    /// Legal direct transitions: Sleep↔Idle, Idle↔Rx, Idle↔Tx.
    /// Rx↔Tx must pass through Idle.
    pub fn can_transition_to(self, to: RadioState) -> bool {
        use RadioState::*;
        matches!(
            (self, to),
            (Sleep, Idle) | (Idle, Sleep) | (Idle, Rx) | (Rx, Idle) | (Idle, Tx) | (Tx, Idle)
        )
    }
}

impl fmt::Display for RadioState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Radio hardware parameters shared by every node in a scenario.
#[derive(Debug, Clone)]
pub struct RadioConfig {
    pub tx_power_dbm: f64,
    pub datarate_baud: u32,
    pub modulation: Modulation,
    pub noise_floor_dbm: f64,
    pub rssi_resolution_db: f64,
    /// Duration of each legal (from, to) transition; missing pairs are 0.
    pub transition_times: BTreeMap<(RadioState, RadioState), SimTime>,
}

impl Default for RadioConfig {
    fn default() -> Self {
        RadioConfig {
            tx_power_dbm: 1.0,
            datarate_baud: 2400,
            modulation: Modulation::Fsk2,
            noise_floor_dbm: -100.0,
            rssi_resolution_db: 1.0,
            transition_times: BTreeMap::new(),
        }
    }
}

impl RadioConfig {
    pub fn transition_time(&self, from: RadioState, to: RadioState) -> SimTime {
        self.transition_times
            .get(&(from, to))
            .copied()
            .unwrap_or(SimTime::ZERO)
    }
}

/// On-air byte structure of a frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ByteLayout {
    pub preamble_bytes: u8,
    pub sync_bytes: u8,
    pub header_bytes: u8,
    pub payload_bytes: u8,
    pub crc_bytes: u8,
}

impl Default for ByteLayout {
    fn default() -> Self {
        ByteLayout {
            preamble_bytes: 4,
            sync_bytes: 4,
            header_bytes: 3,
            payload_bytes: 2,
            crc_bytes: 2,
        }
    }
}

/// The frame fields, in on-air order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameField {
    Preamble,
    Sync,
    Header,
    Payload,
    Crc,
}

impl FrameField {
    pub const ALL: [FrameField; 5] = [
        FrameField::Preamble,
        FrameField::Sync,
        FrameField::Header,
        FrameField::Payload,
        FrameField::Crc,
    ];
}

impl ByteLayout {
    pub fn total_bytes(&self) -> u32 {
        self.preamble_bytes as u32
            + self.sync_bytes as u32
            + self.header_bytes as u32
            + self.payload_bytes as u32
            + self.crc_bytes as u32
    }

    pub fn total_bits(&self) -> u64 {
        self.total_bytes() as u64 * 8
    }

    /// Cumulative byte counts at the end of each field.
    pub fn cumulative_bytes(&self) -> [u32; 5] {
        let p = self.preamble_bytes as u32;
        let s = p + self.sync_bytes as u32;
        let h = s + self.header_bytes as u32;
        let d = h + self.payload_bytes as u32;
        let c = d + self.crc_bytes as u32;
        [p, s, h, d, c]
    }

    /// Bit index range [start, end) occupied by `field`.
    pub fn field_bits(&self, field: FrameField) -> (u64, u64) {
        let cum = self.cumulative_bytes();
        let (lo, hi) = match field {
            FrameField::Preamble => (0, cum[0]),
            FrameField::Sync => (cum[0], cum[1]),
            FrameField::Header => (cum[1], cum[2]),
            FrameField::Payload => (cum[2], cum[3]),
            FrameField::Crc => (cum[3], cum[4]),
        };
        (lo as u64 * 8, hi as u64 * 8)
    }
}

/// An on-air transmission.
#[derive(Debug, Clone)]
pub struct AirFrame {
    pub id: FrameId,
    pub sender: NodeId,
    pub tx_power_dbm: f64,
    pub start: SimTime,
    pub duration: SimTime,
    pub layout: ByteLayout,
    /// The MAC packet carried after preamble and sync word
    /// (header + payload + CRC bytes).
    pub packet_bytes: Vec<u8>,
}

impl AirFrame {
    pub fn end(&self) -> SimTime {
        self.start + self.duration
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum PhyError {
    #[error("node {node}: transmission attempted while already transmitting")]
    AlreadyTransmitting { node: NodeId },
    #[error("node {node}: transmission attempted while radio is {state}; radio must be idle")]
    NotTxCapable { node: NodeId, state: RadioState },
    #[error("node {node}: illegal radio transition {from} -> {to}")]
    IllegalTransition {
        node: NodeId,
        from: RadioState,
        to: RadioState,
    },
    #[error(
        "frame {frame}: packet is {got} bytes but layout carries {want} \
         (header + payload + crc)"
    )]
    PacketLayoutMismatch { frame: FrameId, got: usize, want: u32 },
    #[error("node {node}: frame {frame} ended without a matching reception")]
    UnknownFrame { node: NodeId, frame: FrameId },
}

/// Nanosecond instant of bit boundary `bit_index` on the symbol grid,
/// rounded to the nearest integer nanosecond. The boundary at the total
/// bit count is the frame duration; it is rounded once, here, not summed
/// from per-bit times.
pub fn bit_boundary(datarate_baud: u32, modulation: Modulation, bit_index: u64) -> SimTime {
    let symbols = bit_index / modulation.bits_per_symbol() as u64;
    let numer = symbols as u128 * 1_000_000_000u128;
    let denom = datarate_baud as u128;
    SimTime::from_ns(((numer + denom / 2) / denom) as u64)
}

/// Boundary after `byte_count` bytes, on the same grid as [`bit_boundary`].
pub fn byte_boundary(datarate_baud: u32, modulation: Modulation, byte_count: u32) -> SimTime {
    bit_boundary(datarate_baud, modulation, byte_count as u64 * 8)
}

/// Total airtime of a frame of `total_bytes` bytes.
pub fn frame_duration(datarate_baud: u32, modulation: Modulation, total_bytes: u32) -> SimTime {
    byte_boundary(datarate_baud, modulation, total_bytes)
}

/// Instants (relative to frame start) at which preamble, sync word, header,
/// payload, and CRC finish. The header boundary is reported but triggers no
/// special processing.
pub fn preview_segments(layout: &ByteLayout, datarate_baud: u32, modulation: Modulation) -> [SimTime; 5] {
    let cum = layout.cumulative_bytes();
    [
        byte_boundary(datarate_baud, modulation, cum[0]),
        byte_boundary(datarate_baud, modulation, cum[1]),
        byte_boundary(datarate_baud, modulation, cum[2]),
        byte_boundary(datarate_baud, modulation, cum[3]),
        byte_boundary(datarate_baud, modulation, cum[4]),
    ]
}

/// Bit error probability for non-coherent 2-FSK: 0.5·exp(−γ/2).
pub fn ber_for_snir(snir_linear: f64, modulation: Modulation) -> f64 {
    match modulation {
        Modulation::Fsk2 => (0.5 * (-snir_linear / 2.0).exp()).clamp(0.0, 0.5),
    }
}

/// Rounds to the nearest multiple of `resolution`, halves away from zero.
pub fn quantize_rssi(rx_power_dbm: f64, resolution_db: f64) -> f64 {
    debug_assert!(resolution_db > 0.0);
    let q = (rx_power_dbm / resolution_db).round() * resolution_db;
    if q == 0.0 {
        0.0
    } else {
        q
    }
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}
