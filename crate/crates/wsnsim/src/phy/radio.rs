//! Transceiver state machine and transmission lifecycle.

use std::sync::Arc;

use crate::kernel::NodeId;
use crate::time::SimTime;

use super::{frame_duration, AirFrame, ByteLayout, FrameId, PhyError, RadioConfig, RadioState};

/// Result of requesting a radio state change.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transition {
    /// The state changed now.
    Immediate,
    /// The change completes after the configured switching time; the caller
    /// schedules a mode-switch event and applies the state then.
    Pending(SimTime),
}

/// One node's radio transceiver.
#[derive(Debug)]
pub struct Radio {
    node: NodeId,
    config: Arc<RadioConfig>,
    state: RadioState,
    transmitting: Option<FrameId>,
}

impl Radio {
    pub fn new(node: NodeId, config: Arc<RadioConfig>, initial: RadioState) -> Self {
        Radio {
            node,
            config,
            state: initial,
            transmitting: None,
        }
    }

    pub fn state(&self) -> RadioState {
        self.state
    }

    pub fn config(&self) -> &RadioConfig {
        &self.config
    }

    pub fn is_transmitting(&self) -> bool {
        self.transmitting.is_some()
    }

    /// Requests a single-edge transition. Zero-time transitions apply
    /// immediately; configured switching times are returned for the caller
    /// to schedule. The radio keeps its old state until the switch lands.
    pub fn begin_transition(&mut self, to: RadioState) -> Result<Transition, PhyError> {
        if !self.state.can_transition_to(to) {
            return Err(PhyError::IllegalTransition {
                node: self.node,
                from: self.state,
                to,
            });
        }
        let dwell = self.config.transition_time(self.state, to);
        if dwell == SimTime::ZERO {
            self.state = to;
            Ok(Transition::Immediate)
        } else {
            Ok(Transition::Pending(dwell))
        }
    }

    /// Applies a transition unconditionally (mode-switch event landing).
    pub fn apply_state(&mut self, to: RadioState) {
        self.state = to;
    }

    /// Creates the air frame for `packet_bytes`, moves the radio to Tx, and
    /// returns the frame. The caller hands the frame to the medium and
    /// schedules the TX_OVER self-event at `frame.end()`.
    pub fn start_transmission(
        &mut self,
        id: FrameId,
        layout: ByteLayout,
        packet_bytes: Vec<u8>,
        now: SimTime,
    ) -> Result<AirFrame, PhyError> {
        if self.transmitting.is_some() {
            return Err(PhyError::AlreadyTransmitting { node: self.node });
        }
        if self.state != RadioState::Idle {
            return Err(PhyError::NotTxCapable {
                node: self.node,
                state: self.state,
            });
        }
        let mac_bytes =
            layout.header_bytes as u32 + layout.payload_bytes as u32 + layout.crc_bytes as u32;
        if packet_bytes.len() != mac_bytes as usize {
            return Err(PhyError::PacketLayoutMismatch {
                frame: id,
                got: packet_bytes.len(),
                want: mac_bytes,
            });
        }
        self.state = RadioState::Tx;
        self.transmitting = Some(id);
        Ok(AirFrame {
            id,
            sender: self.node,
            tx_power_dbm: self.config.tx_power_dbm,
            start: now,
            duration: frame_duration(
                self.config.datarate_baud,
                self.config.modulation,
                layout.total_bytes(),
            ),
            layout,
            packet_bytes,
        })
    }

    /// TX_OVER landed: the transmission is complete and the radio returns
    /// to Idle.
    pub fn finish_transmission(&mut self) {
        self.transmitting = None;
        self.state = RadioState::Idle;
    }
}
