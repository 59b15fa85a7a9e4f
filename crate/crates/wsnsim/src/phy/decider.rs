//! Reception decider: tracks every concurrent signal at a radio, segments
//! each reception's SNIR timeline at the start/end instants of overlapping
//! signals, draws bit errors per segment on the bit-time grid, and judges
//! the final outcome when a frame ends.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Binomial, Distribution};

use crate::kernel::NodeId;
use crate::time::SimTime;

use super::{
    ber_for_snir, bit_boundary, dbm_to_mw, quantize_rssi, AirFrame, FrameField, FrameId,
    Modulation, PhyError, RadioState,
};

/// SNIR over one slice of a reception. Slices tile the reception interval;
/// boundaries occur only where an overlapping signal starts or ends.
#[derive(Debug, Clone, PartialEq)]
pub struct SnirSegment {
    pub start: SimTime,
    pub end: SimTime,
    pub snir_linear: f64,
    pub interference_mw: f64,
    pub noise_mw: f64,
}

/// One receiver's finalized view of one frame.
#[derive(Debug, Clone)]
pub struct ReceptionRecord {
    pub frame: Arc<AirFrame>,
    pub rx_power_dbm: f64,
    pub rx_start: SimTime,
    pub rx_end: SimTime,
    pub locked: bool,
    pub segments: Vec<SnirSegment>,
    /// Bit errors per frame field, indexed like [`FrameField::ALL`].
    pub bit_errors: [u64; 5],
}

impl ReceptionRecord {
    pub fn errors_in(&self, field: FrameField) -> u64 {
        let idx = FrameField::ALL.iter().position(|f| *f == field).unwrap();
        self.bit_errors[idx]
    }

    pub fn total_bit_errors(&self) -> u64 {
        self.bit_errors.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DropReason {
    /// The radio was not ready (or already locked) when the frame started.
    NotLocked,
    /// Bit errors hit the sync word; the frame was never detected.
    SyncLoss,
    /// Bit errors in header, payload, or CRC; the CRC check fails.
    CrcFail,
}

impl DropReason {
    pub fn name(self) -> &'static str {
        match self {
            DropReason::NotLocked => "not-locked",
            DropReason::SyncLoss => "sync-loss",
            DropReason::CrcFail => "crc-fail",
        }
    }
}

#[derive(Debug, Clone)]
pub enum ReceptionOutcome {
    /// Clean reception: the packet reaches firmware with its quantized RSSI.
    Decoded { packet_bytes: Vec<u8>, rssi_dbm: f64 },
    Dropped(DropReason),
}

#[derive(Debug, Clone, Copy)]
struct ActiveSignal {
    frame: FrameId,
    rx_power_mw: f64,
}

#[derive(Debug)]
struct OpenReception {
    frame: Arc<AirFrame>,
    rx_power_dbm: f64,
    rx_power_mw: f64,
    rx_start: SimTime,
    rx_end: SimTime,
    locked: bool,
    segments: Vec<SnirSegment>,
    cursor: SimTime,
    interference_mw: f64,
}

/// Per-node reception state. Handles any number of concurrent signals; at
/// most one of them is locked for decoding at a time.
pub struct Decider {
    node: NodeId,
    noise_floor_mw: f64,
    datarate_baud: u32,
    modulation: Modulation,
    rssi_resolution_db: f64,
    active: Vec<ActiveSignal>,
    open: Vec<OpenReception>,
    locked: Option<FrameId>,
    rng: ChaCha12Rng,
}

impl Decider {
    pub fn new(
        node: NodeId,
        noise_floor_dbm: f64,
        datarate_baud: u32,
        modulation: Modulation,
        rssi_resolution_db: f64,
        rng: ChaCha12Rng,
    ) -> Self {
        Decider {
            node,
            noise_floor_mw: dbm_to_mw(noise_floor_dbm),
            datarate_baud,
            modulation,
            rssi_resolution_db,
            active: Vec::new(),
            open: Vec::new(),
            locked: None,
            rng,
        }
    }

    pub fn lock_holder(&self) -> Option<FrameId> {
        self.locked
    }

    pub fn concurrent_signals(&self) -> usize {
        self.active.len()
    }

    /// Interference currently summed against an in-progress reception.
    pub fn open_interference_mw(&self, frame: FrameId) -> Option<f64> {
        self.open
            .iter()
            .find(|r| r.frame.id == frame)
            .map(|r| r.interference_mw)
    }

    /// SNIR of an in-progress reception at `at`, taken from the closed
    /// segment containing the instant or from the open tail.
    pub fn snir_at(&self, frame: FrameId, at: SimTime) -> Option<f64> {
        let r = self.open.iter().find(|r| r.frame.id == frame)?;
        if at < r.rx_start || at >= r.rx_end {
            return None;
        }
        for seg in &r.segments {
            if at >= seg.start && at < seg.end {
                return Some(seg.snir_linear);
            }
        }
        Some(self.snir_of(r))
    }

    fn snir_of(&self, r: &OpenReception) -> f64 {
        r.rx_power_mw / (self.noise_floor_mw + r.interference_mw)
    }

    /// Closes the current slice of every open reception at `now`.
    fn close_segments(&mut self, now: SimTime) {
        let noise = self.noise_floor_mw;
        for r in &mut self.open {
            if r.cursor < now {
                r.segments.push(SnirSegment {
                    start: r.cursor,
                    end: now,
                    snir_linear: r.rx_power_mw / (noise + r.interference_mw),
                    interference_mw: r.interference_mw,
                    noise_mw: noise,
                });
                r.cursor = now;
            }
        }
    }

    /// Re-derives each reception's interference as a fresh ordered sum over
    /// the registered signals, so a register/deregister pair restores prior
    /// sums bit-for-bit.
    fn refresh_interference(&mut self) {
        for r in &mut self.open {
            r.interference_mw = self
                .active
                .iter()
                .filter(|s| s.frame != r.frame.id)
                .map(|s| s.rx_power_mw)
                .sum();
        }
    }

    /// A frame delivery starts. The reception locks iff the radio is in Rx
    /// and nothing else holds the lock; locked or not, the signal is
    /// registered and interferes with every overlapping reception.
    pub fn on_frame_start(
        &mut self,
        frame: Arc<AirFrame>,
        rx_power_dbm: f64,
        rx_end: SimTime,
        radio_state: RadioState,
        now: SimTime,
    ) -> bool {
        let locked = radio_state == RadioState::Rx && self.locked.is_none();
        self.close_segments(now);
        self.active.push(ActiveSignal {
            frame: frame.id,
            rx_power_mw: dbm_to_mw(rx_power_dbm),
        });
        let id = frame.id;
        self.open.push(OpenReception {
            rx_power_mw: dbm_to_mw(rx_power_dbm),
            rx_power_dbm,
            rx_start: now,
            rx_end,
            locked,
            segments: Vec::new(),
            cursor: now,
            interference_mw: 0.0,
            frame,
        });
        self.refresh_interference();
        if locked {
            self.locked = Some(id);
        }
        locked
    }

    /// The frame's delivery ended: close its last slice, deregister it from
    /// the interference set (restoring the other receptions' sums), draw its
    /// bit errors, and judge the outcome.
    pub fn on_frame_end(
        &mut self,
        frame: FrameId,
        now: SimTime,
    ) -> Result<(ReceptionRecord, ReceptionOutcome), PhyError> {
        let idx = self
            .open
            .iter()
            .position(|r| r.frame.id == frame)
            .ok_or(PhyError::UnknownFrame {
                node: self.node,
                frame,
            })?;
        self.close_segments(now);
        let r = self.open.remove(idx);
        self.active.retain(|s| s.frame != frame);
        self.refresh_interference();

        debug_assert!(segments_tile(&r.segments, r.rx_start, r.rx_end));

        let mut bit_errors = [0u64; 5];
        if r.locked {
            self.draw_bit_errors(&r, &mut bit_errors);
        }

        let outcome = if !r.locked {
            ReceptionOutcome::Dropped(DropReason::NotLocked)
        } else if bit_errors[1] > 0 {
            ReceptionOutcome::Dropped(DropReason::SyncLoss)
        } else if bit_errors[2] + bit_errors[3] + bit_errors[4] > 0 {
            ReceptionOutcome::Dropped(DropReason::CrcFail)
        } else {
            ReceptionOutcome::Decoded {
                packet_bytes: r.frame.packet_bytes.clone(),
                rssi_dbm: quantize_rssi(r.rx_power_dbm, self.rssi_resolution_db),
            }
        };

        if self.locked == Some(frame) {
            self.locked = None;
        }

        Ok((
            ReceptionRecord {
                frame: r.frame,
                rx_power_dbm: r.rx_power_dbm,
                rx_start: r.rx_start,
                rx_end: r.rx_end,
                locked: r.locked,
                segments: r.segments,
                bit_errors,
            },
            outcome,
        ))
    }

    /// Smallest bit index whose boundary lies at or after `offset` from
    /// frame start.
    fn first_bit_at_or_after(&self, offset: SimTime) -> u64 {
        let mut j =
            (offset.as_ns() as u128 * self.datarate_baud as u128 / 1_000_000_000) as u64;
        while bit_boundary(self.datarate_baud, self.modulation, j) < offset {
            j += 1;
        }
        while j > 0 && bit_boundary(self.datarate_baud, self.modulation, j - 1) >= offset {
            j -= 1;
        }
        j
    }

    /// Binomial error draw per (segment × field) slice of the bit grid, so
    /// field counts and segment counts agree by construction.
    fn draw_bit_errors(&mut self, r: &OpenReception, bit_errors: &mut [u64; 5]) {
        for seg in &r.segments {
            let p = ber_for_snir(seg.snir_linear, self.modulation);
            if p == 0.0 {
                continue;
            }
            let seg_lo = self.first_bit_at_or_after(seg.start - r.rx_start);
            let seg_hi = self.first_bit_at_or_after(seg.end - r.rx_start);
            for (i, field) in FrameField::ALL.iter().enumerate() {
                let (f_lo, f_hi) = r.frame.layout.field_bits(*field);
                let n = seg_hi.min(f_hi).saturating_sub(seg_lo.max(f_lo));
                if n == 0 {
                    continue;
                }
                bit_errors[i] += sample_binomial(&mut self.rng, n, p);
            }
        }
    }
}

/// One binomial draw of error count over `n` bits at per-bit probability `p`.
pub fn sample_binomial(rng: &mut ChaCha12Rng, n: u64, p: f64) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    Binomial::new(n, p)
        .expect("probability within [0, 1]")
        .sample(rng)
}

fn segments_tile(segments: &[SnirSegment], start: SimTime, end: SimTime) -> bool {
    if start == end {
        return segments.is_empty();
    }
    let Some(first) = segments.first() else {
        return false;
    };
    let Some(last) = segments.last() else {
        return false;
    };
    first.start == start
        && last.end == end
        && segments.windows(2).all(|w| w[0].end == w[1].start)
        && segments.iter().all(|s| s.start < s.end)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phy::ByteLayout;
    use crate::rng::node_substream;
    use approx::assert_relative_eq;

    /// Per-bit Bernoulli oracle for the binomial sampler.
    fn sample_bits_bernoulli(rng: &mut ChaCha12Rng, n: u64, p: f64) -> u64 {
        (0..n).filter(|_| rng.gen_bool(p)).count() as u64
    }

    fn frame(id: u64, sender: u32, start: SimTime) -> Arc<AirFrame> {
        let layout = ByteLayout::default();
        Arc::new(AirFrame {
            id: FrameId(id),
            sender: NodeId(sender),
            tx_power_dbm: 1.0,
            start,
            duration: SimTime::from_ms(50),
            layout,
            packet_bytes: vec![0x04, 0x05, 0x01, 0xAB, 0xCD, 0x99, 0x50],
        })
    }

    fn decider() -> Decider {
        Decider::new(
            NodeId(0),
            -100.0,
            2400,
            Modulation::Fsk2,
            1.0,
            node_substream(42, 0),
        )
    }

    fn start(
        d: &mut Decider,
        f: &Arc<AirFrame>,
        rx_dbm: f64,
        state: RadioState,
        now: SimTime,
    ) -> bool {
        d.on_frame_start(f.clone(), rx_dbm, now + SimTime::from_ms(50), state, now)
    }

    #[test]
    fn lock_requires_rx_and_free_decider() {
        let mut d = decider();
        let f = frame(1, 1, SimTime::ZERO);
        assert!(start(&mut d, &f, -74.0, RadioState::Rx, SimTime::ZERO));
        assert_eq!(d.lock_holder(), Some(FrameId(1)));
    }

    #[test]
    fn second_frame_is_interference_only() {
        let mut d = decider();
        let a = frame(1, 1, SimTime::ZERO);
        let b = frame(2, 2, SimTime::from_ms(10));
        assert!(start(&mut d, &a, -74.0, RadioState::Rx, SimTime::ZERO));
        assert!(!start(
            &mut d,
            &b,
            -70.0,
            RadioState::Rx,
            SimTime::from_ms(10)
        ));
        assert_eq!(d.lock_holder(), Some(FrameId(1)));
        // A gains a segment boundary at B's start.
        let (rec_a, _) = d.on_frame_end(FrameId(1), SimTime::from_ms(50)).unwrap();
        assert_eq!(rec_a.segments.len(), 2);
        assert_eq!(rec_a.segments[0].end, SimTime::from_ms(10));
        assert_eq!(rec_a.segments[1].start, SimTime::from_ms(10));
    }

    #[test]
    fn sleeping_radio_yields_unlocked_interference_record() {
        let mut d = decider();
        let f = frame(1, 1, SimTime::ZERO);
        assert!(!start(&mut d, &f, -74.0, RadioState::Sleep, SimTime::ZERO));
        assert_eq!(d.lock_holder(), None);
        assert_eq!(d.concurrent_signals(), 1);
        let (rec, out) = d.on_frame_end(FrameId(1), SimTime::from_ms(50)).unwrap();
        assert!(!rec.locked);
        assert!(matches!(
            out,
            ReceptionOutcome::Dropped(DropReason::NotLocked)
        ));
    }

    #[test]
    fn snir_matches_milliwatt_arithmetic() {
        // Signal -74.025 dBm over a -100 dBm noise floor: SNIR ≈ 395.79.
        // Adding a -80 dBm interferer pulls it down to ≈ 3.9187.
        let mut d = decider();
        let a = frame(1, 1, SimTime::ZERO);
        start(&mut d, &a, -74.025380102106637, RadioState::Rx, SimTime::ZERO);
        let clean = d.snir_at(FrameId(1), SimTime::from_ms(5)).unwrap();
        assert_relative_eq!(clean, 395.78742331407928, max_relative = 1e-9);

        let b = frame(2, 2, SimTime::from_ms(10));
        start(&mut d, &b, -80.0, RadioState::Rx, SimTime::from_ms(10));
        let jammed = d.snir_at(FrameId(1), SimTime::from_ms(20)).unwrap();
        assert_relative_eq!(jammed, 3.9186873595453394, max_relative = 1e-9);
        // The closed first slice still reports the clean value.
        assert_relative_eq!(
            d.snir_at(FrameId(1), SimTime::from_ms(3)).unwrap(),
            clean,
            max_relative = 1e-15
        );
    }

    #[test]
    fn deregistering_restores_interference_exactly() {
        let mut d = decider();
        let a = frame(1, 1, SimTime::ZERO);
        let b = frame(2, 2, SimTime::ZERO);
        start(&mut d, &a, -74.0, RadioState::Rx, SimTime::ZERO);
        start(&mut d, &b, -81.3, RadioState::Rx, SimTime::ZERO);
        let before = d.open_interference_mw(FrameId(1)).unwrap();

        let mut c = frame(3, 3, SimTime::from_ms(5));
        Arc::make_mut(&mut c).duration = SimTime::from_ms(15);
        d.on_frame_start(
            c.clone(),
            -77.7,
            SimTime::from_ms(20),
            RadioState::Rx,
            SimTime::from_ms(5),
        );
        assert!(d.open_interference_mw(FrameId(1)).unwrap() > before);
        d.on_frame_end(FrameId(3), SimTime::from_ms(20)).unwrap();

        let after = d.open_interference_mw(FrameId(1)).unwrap();
        assert_eq!(before.to_bits(), after.to_bits());
    }

    #[test]
    fn clean_reception_decodes_with_quantized_rssi() {
        let mut d = decider();
        let f = frame(1, 1, SimTime::ZERO);
        start(&mut d, &f, -74.025380102106637, RadioState::Rx, SimTime::ZERO);
        let (rec, out) = d.on_frame_end(FrameId(1), SimTime::from_ms(50)).unwrap();
        assert!(rec.locked);
        assert_eq!(rec.total_bit_errors(), 0);
        match out {
            ReceptionOutcome::Decoded { rssi_dbm, packet_bytes } => {
                assert_eq!(rssi_dbm, -74.0);
                assert_eq!(packet_bytes, f.packet_bytes);
            }
            other => panic!("expected decode, got {other:?}"),
        }
        assert_eq!(d.lock_holder(), None);
        assert_eq!(d.concurrent_signals(), 0);
    }

    #[test]
    fn equal_power_overlap_floors_snir_and_drops() {
        // Two overlapping frames at equal rx power: SNIR ≤ 1 in the overlap,
        // so per-bit BER ≥ 0.5·exp(-0.5) and the sync word is hopeless.
        let mut d = decider();
        let a = frame(1, 1, SimTime::ZERO);
        let b = frame(2, 2, SimTime::from_ms(10));
        start(&mut d, &a, -70.0, RadioState::Rx, SimTime::ZERO);
        start(&mut d, &b, -70.0, RadioState::Rx, SimTime::from_ms(10));
        let overlap_snir = d.snir_at(FrameId(1), SimTime::from_ms(20)).unwrap();
        assert!(overlap_snir <= 1.0);
        assert!(ber_for_snir(overlap_snir, Modulation::Fsk2) >= 0.5 * (-0.5f64).exp());
        let (rec, out) = d.on_frame_end(FrameId(1), SimTime::from_ms(50)).unwrap();
        assert!(rec.total_bit_errors() > 0);
        assert!(matches!(out, ReceptionOutcome::Dropped(_)));
    }

    #[test]
    fn preamble_only_errors_still_decode() {
        // Interferer confined to the preamble: detection rides on the sync
        // word, so the packet must survive.
        let mut d = decider();
        let a = frame(1, 1, SimTime::ZERO);
        start(&mut d, &a, -70.0, RadioState::Rx, SimTime::ZERO);
        // Preamble spans [0, 13.333 ms); jam [0, 12 ms) hard.
        let mut jam = frame(2, 2, SimTime::ZERO);
        Arc::make_mut(&mut jam).duration = SimTime::from_ms(12);
        d.on_frame_start(
            jam.clone(),
            -60.0,
            SimTime::from_ms(12),
            RadioState::Rx,
            SimTime::ZERO,
        );
        d.on_frame_end(FrameId(2), SimTime::from_ms(12)).unwrap();
        let (rec, out) = d.on_frame_end(FrameId(1), SimTime::from_ms(50)).unwrap();
        assert!(rec.errors_in(FrameField::Preamble) > 0);
        assert_eq!(rec.errors_in(FrameField::Sync), 0);
        assert!(matches!(out, ReceptionOutcome::Decoded { .. }));
    }

    #[test]
    fn segments_tile_reception_interval() {
        let mut d = decider();
        let a = frame(1, 1, SimTime::ZERO);
        start(&mut d, &a, -70.0, RadioState::Rx, SimTime::ZERO);
        for (id, at_ms) in [(2u64, 10u64), (3, 20), (4, 30)] {
            let f = frame(id, id as u32, SimTime::from_ms(at_ms));
            start(&mut d, &f, -80.0, RadioState::Rx, SimTime::from_ms(at_ms));
        }
        let (rec, _) = d.on_frame_end(FrameId(1), SimTime::from_ms(50)).unwrap();
        assert_eq!(rec.segments.len(), 4);
        assert_eq!(rec.segments[0].start, rec.rx_start);
        assert_eq!(rec.segments.last().unwrap().end, rec.rx_end);
        for w in rec.segments.windows(2) {
            assert_eq!(w[0].end, w[1].start);
        }
        // Interference steps up as each signal registers.
        assert!(rec.segments[0].interference_mw == 0.0);
        assert!(rec.segments[1].interference_mw < rec.segments[2].interference_mw);
        assert!(rec.segments[2].interference_mw < rec.segments[3].interference_mw);
    }

    #[test]
    fn unknown_frame_end_is_an_error() {
        let mut d = decider();
        let err = d.on_frame_end(FrameId(7), SimTime::from_ms(1)).unwrap_err();
        assert!(matches!(err, PhyError::UnknownFrame { .. }));
    }

    #[test]
    fn binomial_sampler_matches_bernoulli_oracle_statistics() {
        // 120 bits at p = 0.5: mean over many draws within 3σ of 60.
        let trials = 100_000u64;
        let mut rng = node_substream(7, 1);
        let total: u64 = (0..trials).map(|_| sample_binomial(&mut rng, 120, 0.5)).sum();
        let mean = total as f64 / trials as f64;
        let sigma = (120.0f64 * 0.25).sqrt() / (trials as f64).sqrt();
        assert!((mean - 60.0).abs() < 3.0 * sigma, "mean {mean}");

        // The Bernoulli oracle agrees for a modest sample.
        let mut rng2 = node_substream(7, 2);
        let oracle_total: u64 = (0..10_000u64)
            .map(|_| sample_bits_bernoulli(&mut rng2, 120, 0.5))
            .sum();
        let oracle_mean = oracle_total as f64 / 10_000.0;
        let oracle_sigma = (120.0f64 * 0.25).sqrt() / 100.0;
        assert!((oracle_mean - 60.0).abs() < 3.0 * oracle_sigma);
    }

    #[test]
    fn split_segments_preserve_binomial_statistics() {
        // Two segments at identical SNIR behave like one merged segment:
        // compare the summed draw's mean over many trials.
        let trials = 50_000u64;
        let mut rng_split = node_substream(11, 1);
        let mut rng_merged = node_substream(11, 2);
        let p = 0.25;
        let split: u64 = (0..trials)
            .map(|_| sample_binomial(&mut rng_split, 70, p) + sample_binomial(&mut rng_split, 50, p))
            .sum();
        let merged: u64 = (0..trials).map(|_| sample_binomial(&mut rng_merged, 120, p)).sum();
        let mean_split = split as f64 / trials as f64;
        let mean_merged = merged as f64 / trials as f64;
        let sigma = (120.0 * p * (1.0 - p)).sqrt() / (trials as f64).sqrt();
        assert!((mean_split - 120.0 * p).abs() < 3.0 * sigma);
        assert!((mean_merged - 120.0 * p).abs() < 3.0 * sigma);
    }

    #[test]
    fn vanishing_ber_draws_zero_errors() {
        let mut rng = node_substream(1, 1);
        // SNIR > 60 dB: p underflows to numerically zero error mass.
        let p = ber_for_snir(1e7, Modulation::Fsk2);
        assert_eq!(sample_binomial(&mut rng, 1_000_000, p), 0);
    }
}
