//! Radio medium: free-space propagation and frame delivery to every
//! in-range receiver.

use thiserror::Error;

use crate::geom::Position;
use crate::kernel::NodeId;
use crate::phy::AirFrame;
use crate::time::SimTime;

const SPEED_OF_LIGHT_M_PER_S: f64 = 299_792_458.0;

/// Free-space path loss with configurable attenuation exponent and
/// effective antenna area. This boundary is the extension point for
/// further channel models.
#[derive(Debug, Clone, Copy)]
pub struct PropagationModel {
    pub attenuation_exponent: f64,
    pub effective_antenna_area_m2: f64,
}

impl Default for PropagationModel {
    fn default() -> Self {
        PropagationModel {
            attenuation_exponent: 2.0,
            effective_antenna_area_m2: 9.87670e-4,
        }
    }
}

impl PropagationModel {
    pub fn validate(&self) -> Result<(), MediumError> {
        if self.attenuation_exponent <= 0.0 || self.effective_antenna_area_m2 <= 0.0 {
            return Err(MediumError::InvalidModel {
                exponent: self.attenuation_exponent,
                area: self.effective_antenna_area_m2,
            });
        }
        Ok(())
    }
}

/// When to deliver a frame relative to its emission.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DelayPolicy {
    /// No propagation delay. At playground scale the true delay is under
    /// half a microsecond, far below one bit time.
    #[default]
    Zero,
    /// Speed-of-light delay, for sensitivity studies.
    SpeedOfLight,
}

impl DelayPolicy {
    pub fn name(self) -> &'static str {
        match self {
            DelayPolicy::Zero => "zero",
            DelayPolicy::SpeedOfLight => "light",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MediumConfig {
    /// Received power below this is neither delivered nor counted as
    /// interference. Must not exceed the radio noise floor, or weak but
    /// non-negligible interferers would vanish.
    pub sensitivity_cutoff_dbm: f64,
    pub propagation_delay: DelayPolicy,
}

impl Default for MediumConfig {
    fn default() -> Self {
        MediumConfig {
            sensitivity_cutoff_dbm: -110.0,
            propagation_delay: DelayPolicy::Zero,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum MediumError {
    #[error("propagation model needs positive exponent and antenna area (got b={exponent}, A={area} m²)")]
    InvalidModel { exponent: f64, area: f64 },
    #[error("coincident transmitter and receiver positions at {at}: path loss is singular")]
    CoincidentPositions { at: Position },
}

/// Path attenuation in dB at `distance_m`: 10·log10(4π·d^b / A_eff).
/// Strictly increasing in distance for positive exponents.
pub fn attenuation_db(distance_m: f64, model: &PropagationModel) -> Result<f64, MediumError> {
    if distance_m <= 0.0 {
        return Err(MediumError::CoincidentPositions {
            at: Position::default(),
        });
    }
    let ratio = 4.0 * std::f64::consts::PI * distance_m.powf(model.attenuation_exponent)
        / model.effective_antenna_area_m2;
    Ok(10.0 * ratio.log10())
}

/// Received power at `rx` for a transmission of `tx_power_dbm` from `tx`.
pub fn received_power_dbm(
    tx_power_dbm: f64,
    tx: Position,
    rx: Position,
    model: &PropagationModel,
) -> Result<f64, MediumError> {
    let d = tx.distance_to(rx);
    if d == 0.0 {
        return Err(MediumError::CoincidentPositions { at: rx });
    }
    Ok(tx_power_dbm - attenuation_db(d, model)?)
}

/// A frame arriving at one receiver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Delivery {
    pub node: NodeId,
    pub rx_power_dbm: f64,
    pub rx_start: SimTime,
    pub rx_end: SimTime,
}

#[derive(Debug, Clone, Copy)]
pub struct Medium {
    pub model: PropagationModel,
    pub config: MediumConfig,
}

impl Medium {
    pub fn new(model: PropagationModel, config: MediumConfig) -> Self {
        Medium { model, config }
    }

    /// Evaluates the frame against every other node's position at frame
    /// start. Receivers at or above the sensitivity cutoff get a delivery;
    /// the rest get nothing. The sender never receives its own frame.
    /// Received power is evaluated once, at frame start, and held for the
    /// frame's duration.
    pub fn broadcast(
        &self,
        frame: &AirFrame,
        sender_pos: Position,
        receivers: &[(NodeId, Position)],
    ) -> Result<Vec<Delivery>, MediumError> {
        let mut deliveries = Vec::new();
        for &(node, pos) in receivers {
            if node == frame.sender {
                continue;
            }
            let rx_power_dbm =
                received_power_dbm(frame.tx_power_dbm, sender_pos, pos, &self.model)?;
            if rx_power_dbm < self.config.sensitivity_cutoff_dbm {
                continue;
            }
            let delay = match self.config.propagation_delay {
                DelayPolicy::Zero => SimTime::ZERO,
                DelayPolicy::SpeedOfLight => SimTime::from_ns(
                    (sender_pos.distance_to(pos) / SPEED_OF_LIGHT_M_PER_S * 1e9).round() as u64,
                ),
            };
            deliveries.push(Delivery {
                node,
                rx_power_dbm,
                rx_start: frame.start + delay,
                rx_end: frame.start + delay + frame.duration,
            });
        }
        Ok(deliveries)
    }
}
