//! Node position as a function of time: static placement and the rectangle
//! waypoint pattern in discrete-hop and continuous-linear modes.

use rand::Rng;

use crate::geom::Position;
use crate::kernel::NodeId;
use crate::rng::node_substream;
use crate::time::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MovementMode {
    /// The node teleports to each waypoint at its arrival instant.
    #[default]
    Discrete,
    /// The node moves linearly along the perimeter at constant speed.
    Continuous,
}

impl MovementMode {
    pub fn name(self) -> &'static str {
        match self {
            MovementMode::Discrete => "discrete",
            MovementMode::Continuous => "continuous",
        }
    }
}

/// Rectangle waypoint pattern: `waypoint_count` positions evenly spaced by
/// arc length along the perimeter, traversed anti-clockwise from `origin`
/// (the rectangle's lower-left corner). Corners need not be waypoints.
#[derive(Debug, Clone, PartialEq)]
pub struct RectangleMobility {
    pub origin: Position,
    pub width_m: f64,
    pub height_m: f64,
    pub waypoint_count: u32,
    pub speed_mps: f64,
    pub mode: MovementMode,
    /// When set, a seeded uniform offset in [0, start_offset_max_m) shifts
    /// every waypoint along the perimeter. Off by default so golden
    /// comparisons stay exact.
    pub start_offset_seed: Option<u64>,
    /// Bound on the start offset. Kept small (default 1 m) so the offset
    /// perturbs received power by well under the RSSI quantization step.
    pub start_offset_max_m: f64,
}

impl Default for RectangleMobility {
    fn default() -> Self {
        RectangleMobility {
            origin: Position::new(0.0, 0.0),
            width_m: 80.0,
            height_m: 40.0,
            waypoint_count: 19,
            speed_mps: 10.0,
            mode: MovementMode::Discrete,
            start_offset_seed: None,
            start_offset_max_m: 1.0,
        }
    }
}

/// Where a node is over time.
#[derive(Debug, Clone, PartialEq)]
pub enum MobilityModel {
    Static(Position),
    Rectangle(RectangleMobility),
}

/// Precomputed realization of a rectangle pattern for one node.
#[derive(Debug, Clone)]
pub struct RectanglePath {
    origin: Position,
    width: f64,
    height: f64,
    perimeter: f64,
    spacing: f64,
    offset_m: f64,
    count: u32,
    mode: MovementMode,
    /// Arrival instants for waypoints 0..=count within one lap; the last
    /// entry is the lap time.
    arrivals: Vec<SimTime>,
}

impl RectanglePath {
    pub fn new(m: &RectangleMobility, node: NodeId) -> Self {
        debug_assert!(m.waypoint_count >= 2 && m.speed_mps > 0.0);
        debug_assert!(m.width_m > 0.0 && m.height_m > 0.0);
        let perimeter = 2.0 * (m.width_m + m.height_m);
        let spacing = perimeter / m.waypoint_count as f64;
        let offset_m = match m.start_offset_seed {
            Some(seed) if m.start_offset_max_m > 0.0 => {
                node_substream(seed, node.0).gen_range(0.0..m.start_offset_max_m)
            }
            _ => 0.0,
        };
        let arrivals = (0..=m.waypoint_count)
            .map(|k| SimTime::from_secs_f64(k as f64 * spacing / m.speed_mps))
            .collect();
        RectanglePath {
            origin: m.origin,
            width: m.width_m,
            height: m.height_m,
            perimeter,
            spacing,
            offset_m,
            count: m.waypoint_count,
            mode: m.mode,
            arrivals,
        }
    }

    pub fn waypoint_count(&self) -> u32 {
        self.count
    }

    pub fn perimeter(&self) -> f64 {
        self.perimeter
    }

    pub fn mode(&self) -> MovementMode {
        self.mode
    }

    /// Arrival instant of waypoint `k` within the first lap (k ≤ count;
    /// `arrival(count)` is the lap time).
    pub fn arrival(&self, k: u32) -> SimTime {
        self.arrivals[k as usize]
    }

    /// Position of waypoint `k` (wraps cyclically).
    pub fn waypoint(&self, k: u32) -> Position {
        self.point_at_arc(self.offset_m + (k % self.count) as f64 * self.spacing)
    }

    /// One lap of (position, arrival time) pairs.
    pub fn waypoint_schedule(&self) -> Vec<(Position, SimTime)> {
        (0..self.count)
            .map(|k| (self.waypoint(k), self.arrival(k)))
            .collect()
    }

    /// Index of the most recently arrived waypoint at `t` plus the lap-local
    /// residual used for interpolation.
    fn locate(&self, t: SimTime) -> (u32, SimTime) {
        let lap_ns = self.arrivals[self.count as usize].as_ns();
        let tau = SimTime::from_ns(t.as_ns() % lap_ns);
        // arrivals is sorted; find the last arrival ≤ tau.
        let k = match self.arrivals.binary_search(&tau) {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        (k as u32, tau)
    }

    pub fn position_at(&self, t: SimTime) -> Position {
        let (k, tau) = self.locate(t);
        match self.mode {
            MovementMode::Discrete => self.waypoint(k),
            MovementMode::Continuous => {
                let t_k = self.arrivals[k as usize];
                let t_next = self.arrivals[k as usize + 1];
                let frac = if t_next == t_k {
                    0.0
                } else {
                    (tau - t_k).as_ns() as f64 / (t_next - t_k).as_ns() as f64
                };
                self.point_at_arc(self.offset_m + (k as f64 + frac) * self.spacing)
            }
        }
    }

    /// Maps arc length (from the origin corner, anti-clockwise) to a point
    /// on the perimeter.
    fn point_at_arc(&self, arc: f64) -> Position {
        let mut s = arc.rem_euclid(self.perimeter);
        let Position { x, y } = self.origin;
        if s < self.width {
            return Position::new(x + s, y);
        }
        s -= self.width;
        if s < self.height {
            return Position::new(x + self.width, y + s);
        }
        s -= self.height;
        if s < self.width {
            return Position::new(x + self.width - s, y + self.height);
        }
        s -= self.width;
        Position::new(x, y + self.height - s)
    }
}

/// Runtime motion of one node.
#[derive(Debug, Clone)]
pub enum Motion {
    Fixed(Position),
    Path(RectanglePath),
}

impl Motion {
    pub fn from_model(model: &MobilityModel, node: NodeId) -> Self {
        match model {
            MobilityModel::Static(p) => Motion::Fixed(*p),
            MobilityModel::Rectangle(m) => Motion::Path(RectanglePath::new(m, node)),
        }
    }

    pub fn position_at(&self, t: SimTime) -> Position {
        match self {
            Motion::Fixed(p) => *p,
            Motion::Path(path) => path.position_at(t),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn model(mode: MovementMode) -> RectangleMobility {
        RectangleMobility {
            origin: Position::new(10.0, 30.0),
            mode,
            ..RectangleMobility::default()
        }
    }

    fn path(mode: MovementMode) -> RectanglePath {
        RectanglePath::new(&model(mode), NodeId(2))
    }

    #[test]
    fn static_position_is_constant() {
        let m = Motion::from_model(&MobilityModel::Static(Position::new(50.0, 50.0)), NodeId(1));
        for t in [0u64, 1, 17, 3600] {
            assert_eq!(m.position_at(SimTime::from_secs(t)), Position::new(50.0, 50.0));
        }
    }

    #[test]
    fn schedule_spacing_and_interarrival() {
        let p = path(MovementMode::Discrete);
        assert_eq!(p.perimeter(), 240.0);
        assert_relative_eq!(p.spacing, 240.0 / 19.0, max_relative = 1e-15);
        // Inter-arrival ≈ 1.2632 s at 10 m/s.
        let dt = p.arrival(1) - p.arrival(0);
        assert_eq!(dt.as_ns(), 1_263_157_895);
        let schedule = p.waypoint_schedule();
        assert_eq!(schedule.len(), 19);
        assert_eq!(schedule[0].1, SimTime::ZERO);
    }

    #[test]
    fn waypoint_zero_is_origin_without_offset() {
        let p = path(MovementMode::Discrete);
        assert_eq!(p.waypoint(0), Position::new(10.0, 30.0));
    }

    #[test]
    fn waypoint_wraps_cyclically() {
        let p = path(MovementMode::Discrete);
        assert_eq!(p.waypoint(19), p.waypoint(0));
        assert_eq!(p.waypoint(23), p.waypoint(4));
    }

    #[test]
    fn discrete_holds_previous_waypoint() {
        let p = path(MovementMode::Discrete);
        let just_before = p.arrival(1) - SimTime::from_ns(1);
        assert_eq!(p.position_at(just_before), p.waypoint(0));
        assert_eq!(p.position_at(p.arrival(1)), p.waypoint(1));
    }

    #[test]
    fn continuous_midpoint_of_first_edge() {
        let p = path(MovementMode::Continuous);
        let half = SimTime::from_ns(p.arrival(1).as_ns() / 2);
        let pos = p.position_at(half);
        // Waypoints 0 and 1 both lie on the bottom edge.
        let expected_x = 10.0 + (240.0 / 19.0) * (half.as_ns() as f64 / p.arrival(1).as_ns() as f64);
        assert_relative_eq!(pos.x, expected_x, max_relative = 1e-9);
        assert_eq!(pos.y, 30.0);
    }

    #[test]
    fn modes_coincide_exactly_at_arrivals() {
        let d = path(MovementMode::Discrete);
        let c = path(MovementMode::Continuous);
        for k in 0..=38 {
            let t = if k <= 19 {
                d.arrival(k)
            } else {
                // Beyond one lap: same lap-local arrivals repeated.
                d.arrival(19) + d.arrival(k - 19)
            };
            let pd = d.position_at(t);
            let pc = c.position_at(t);
            assert_eq!(pd.x.to_bits(), pc.x.to_bits(), "waypoint {k}");
            assert_eq!(pd.y.to_bits(), pc.y.to_bits(), "waypoint {k}");
        }
    }

    #[test]
    fn all_positions_lie_on_the_perimeter() {
        let c = path(MovementMode::Continuous);
        for i in 0..500 {
            let t = SimTime::from_ns(i * 97_000_003);
            let p = c.position_at(t);
            let on_x_edge = (p.y - 30.0).abs() < 1e-9 || (p.y - 70.0).abs() < 1e-9;
            let on_y_edge = (p.x - 10.0).abs() < 1e-9 || (p.x - 90.0).abs() < 1e-9;
            assert!(on_x_edge || on_y_edge, "{p} off perimeter at t={t}");
            assert!(p.x >= 10.0 - 1e-9 && p.x <= 90.0 + 1e-9);
            assert!(p.y >= 30.0 - 1e-9 && p.y <= 70.0 + 1e-9);
        }
    }

    #[test]
    fn continuous_speed_is_exact_within_an_edge() {
        let c = path(MovementMode::Continuous);
        // Both instants sit on the first edge, inside waypoint 0's segment.
        let t1 = SimTime::from_ms(100);
        let t2 = SimTime::from_ms(600);
        let p1 = c.position_at(t1);
        let p2 = c.position_at(t2);
        let dist = p1.distance_to(p2);
        let expect = 10.0 * (t2 - t1).as_secs_f64();
        assert_relative_eq!(dist, expect, max_relative = 1e-6);
    }

    #[test]
    fn seeded_offset_is_deterministic_and_bounded() {
        let mut m = model(MovementMode::Discrete);
        m.start_offset_seed = Some(7);
        let a = RectanglePath::new(&m, NodeId(2));
        let b = RectanglePath::new(&m, NodeId(2));
        assert_eq!(a.offset_m.to_bits(), b.offset_m.to_bits());
        assert!(a.offset_m >= 0.0 && a.offset_m < 1.0);
        // A different node draws a different offset.
        let c = RectanglePath::new(&m, NodeId(3));
        assert_ne!(a.offset_m.to_bits(), c.offset_m.to_bits());
        // Waypoints shift along the perimeter but stay on it.
        assert_ne!(a.waypoint(0), Position::new(10.0, 30.0));
        assert_eq!(a.waypoint(19), a.waypoint(0));
    }
}
