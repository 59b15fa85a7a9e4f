//! Scenario configuration: a line-oriented `key = value` format grouped
//! under `[section]` headers, with `[node.N]` and `[mobility.N]` per-node
//! subsections. Loading validates everything before a run can start.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use thiserror::Error;

use crate::geom::Position;
use crate::kernel::NodeId;
use crate::medium::{DelayPolicy, MediumConfig, PropagationModel};
use crate::mobility::{MobilityModel, MovementMode, RectangleMobility};
use crate::netapp::{FirmwareConfig, InterRoundState, TdmaConfig};
use crate::phy::{frame_duration, ByteLayout, Modulation, RadioConfig, RadioState};
use crate::energy::PowerTable;
use crate::time::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Base,
    Sensor,
}

impl Role {
    pub fn name(self) -> &'static str {
        match self {
            Role::Base => "base",
            Role::Sensor => "sensor",
        }
    }
}

#[derive(Debug, Clone)]
pub struct NodeConfig {
    pub id: NodeId,
    pub role: Role,
    pub position: Position,
    pub slot: Option<u16>,
    pub mobility: Option<RectangleMobility>,
}

impl NodeConfig {
    pub fn mobility_model(&self) -> MobilityModel {
        match &self.mobility {
            Some(rect) => MobilityModel::Rectangle(rect.clone()),
            None => MobilityModel::Static(self.position),
        }
    }

    /// Sensors with a waypoint pattern transmit at waypoint arrivals;
    /// static sensors answer beacons in their TDMA slot.
    pub fn is_waypoint_sender(&self) -> bool {
        self.role == Role::Sensor && self.mobility.is_some()
    }
}

/// Complete declarative description of a simulation run.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub playground_width_m: f64,
    pub playground_height_m: f64,
    pub until: SimTime,
    pub seed: u64,
    pub radio: RadioConfig,
    pub layout: ByteLayout,
    pub model: PropagationModel,
    pub medium: MediumConfig,
    pub tdma: TdmaConfig,
    pub firmware: FirmwareConfig,
    pub power: PowerTable,
    /// Sorted by node id; exactly one base.
    pub nodes: Vec<NodeConfig>,
}

impl ScenarioConfig {
    pub fn base(&self) -> &NodeConfig {
        self.nodes
            .iter()
            .find(|n| n.role == Role::Base)
            .expect("validated config has one base")
    }

    pub fn beacon_airtime(&self) -> SimTime {
        frame_duration(
            self.radio.datarate_baud,
            self.radio.modulation,
            self.layout.total_bytes(),
        )
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(String),
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("missing required section [{0}]")]
    MissingSection(String),
    #[error("section [{section}]: missing required key '{key}'")]
    MissingKey { section: String, key: String },
    #[error("section [{section}] line {line}: key '{key}': {msg}")]
    InvalidValue {
        section: String,
        key: String,
        line: usize,
        msg: String,
    },
    #[error("section [{section}] line {line}: unknown key '{key}'")]
    UnknownKey {
        section: String,
        key: String,
        line: usize,
    },
    #[error("line {line}: unknown section [{name}]")]
    UnknownSection { name: String, line: usize },
    #[error("section [{section}]: {msg}")]
    Invalid { section: String, msg: String },
}

struct RawEntry {
    value: String,
    line: usize,
}

struct Section {
    name: String,
    line: usize,
    entries: BTreeMap<String, RawEntry>,
    consumed: BTreeSet<String>,
}

impl Section {
    fn empty(name: &str) -> Self {
        Section {
            name: name.to_string(),
            line: 0,
            entries: BTreeMap::new(),
            consumed: BTreeSet::new(),
        }
    }

    fn raw(&mut self, key: &str) -> Option<(&str, usize)> {
        if self.entries.contains_key(key) {
            self.consumed.insert(key.to_string());
        }
        self.entries.get(key).map(|e| (e.value.as_str(), e.line))
    }

    fn get<T: FromConfigValue>(&mut self, key: &str) -> Result<Option<T>, ConfigError> {
        let name = self.name.clone();
        match self.raw(key) {
            None => Ok(None),
            Some((value, line)) => T::parse(value).map(Some).map_err(|msg| {
                ConfigError::InvalidValue {
                    section: name,
                    key: key.to_string(),
                    line,
                    msg,
                }
            }),
        }
    }

    fn get_or<T: FromConfigValue>(&mut self, key: &str, default: T) -> Result<T, ConfigError> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    fn require<T: FromConfigValue>(&mut self, key: &str) -> Result<T, ConfigError> {
        self.get(key)?.ok_or_else(|| ConfigError::MissingKey {
            section: self.name.clone(),
            key: key.to_string(),
        })
    }

    fn finish(self) -> Result<(), ConfigError> {
        for (key, entry) in &self.entries {
            if !self.consumed.contains(key) {
                return Err(ConfigError::UnknownKey {
                    section: self.name,
                    key: key.clone(),
                    line: entry.line,
                });
            }
        }
        Ok(())
    }
}

trait FromConfigValue: Sized {
    fn parse(value: &str) -> Result<Self, String>;
}

impl FromConfigValue for f64 {
    fn parse(value: &str) -> Result<Self, String> {
        value
            .parse()
            .map_err(|_| format!("'{value}' is not a number"))
    }
}

impl FromConfigValue for u64 {
    fn parse(value: &str) -> Result<Self, String> {
        value
            .parse()
            .map_err(|_| format!("'{value}' is not a non-negative integer"))
    }
}

impl FromConfigValue for u32 {
    fn parse(value: &str) -> Result<Self, String> {
        value
            .parse()
            .map_err(|_| format!("'{value}' is not a non-negative integer"))
    }
}

impl FromConfigValue for u16 {
    fn parse(value: &str) -> Result<Self, String> {
        value
            .parse()
            .map_err(|_| format!("'{value}' is not a non-negative integer"))
    }
}

impl FromConfigValue for u8 {
    fn parse(value: &str) -> Result<Self, String> {
        value
            .parse()
            .map_err(|_| format!("'{value}' is not a byte value"))
    }
}

impl FromConfigValue for bool {
    fn parse(value: &str) -> Result<Self, String> {
        match value {
            "true" | "on" | "yes" => Ok(true),
            "false" | "off" | "no" => Ok(false),
            _ => Err(format!("'{value}' is not a boolean (true/false)")),
        }
    }
}

impl FromConfigValue for String {
    fn parse(value: &str) -> Result<Self, String> {
        Ok(value.to_string())
    }
}

fn parse_sections(text: &str) -> Result<Vec<Section>, ConfigError> {
    let mut sections: Vec<Section> = Vec::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name.strip_suffix(']').ok_or(ConfigError::Syntax {
                line: line_no,
                msg: "unterminated section header".to_string(),
            })?;
            sections.push(Section {
                name: name.trim().to_string(),
                line: line_no,
                entries: BTreeMap::new(),
                consumed: BTreeSet::new(),
            });
            continue;
        }
        let (key, value) = line.split_once('=').ok_or(ConfigError::Syntax {
            line: line_no,
            msg: format!("expected 'key = value', got '{line}'"),
        })?;
        let section = sections.last_mut().ok_or(ConfigError::Syntax {
            line: line_no,
            msg: "key outside any [section]".to_string(),
        })?;
        let key = key.trim().to_string();
        if section.entries.contains_key(&key) {
            return Err(ConfigError::Syntax {
                line: line_no,
                msg: format!("duplicate key '{key}' in section [{}]", section.name),
            });
        }
        section.entries.insert(
            key,
            RawEntry {
                value: value.trim().to_string(),
                line: line_no,
            },
        );
    }
    Ok(sections)
}

fn invalid(section: &str, msg: impl fmt::Display) -> ConfigError {
    ConfigError::Invalid {
        section: section.to_string(),
        msg: msg.to_string(),
    }
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut plain: BTreeMap<String, Section> = BTreeMap::new();
        let mut node_sections: BTreeMap<u32, Section> = BTreeMap::new();
        let mut mobility_sections: BTreeMap<u32, Section> = BTreeMap::new();

        for section in parse_sections(text)? {
            if let Some(id) = section.name.strip_prefix("node.") {
                let id: u32 = id.parse().map_err(|_| ConfigError::UnknownSection {
                    name: section.name.clone(),
                    line: section.line,
                })?;
                if node_sections.insert(id, section).is_some() {
                    return Err(invalid(&format!("node.{id}"), "duplicate node id"));
                }
            } else if let Some(id) = section.name.strip_prefix("mobility.") {
                let id: u32 = id.parse().map_err(|_| ConfigError::UnknownSection {
                    name: section.name.clone(),
                    line: section.line,
                })?;
                if mobility_sections.insert(id, section).is_some() {
                    return Err(invalid(&format!("mobility.{id}"), "duplicate mobility section"));
                }
            } else {
                match section.name.as_str() {
                    "playground" | "sim" | "radio" | "frame" | "channel" | "tdma"
                    | "firmware" | "power" => {
                        if plain.insert(section.name.clone(), section).is_some() {
                            return Err(ConfigError::Syntax {
                                line: 0,
                                msg: "duplicate section".to_string(),
                            });
                        }
                    }
                    _ => {
                        return Err(ConfigError::UnknownSection {
                            name: section.name.clone(),
                            line: section.line,
                        })
                    }
                }
            }
        }

        let mut take = |name: &str| plain.remove(name).unwrap_or_else(|| Section::empty(name));

        let mut playground = take("playground");
        let playground_width_m = playground.get_or("width_m", 100.0)?;
        let playground_height_m = playground.get_or("height_m", 100.0)?;
        playground.finish()?;

        let mut sim = take("sim");
        let until_s: f64 = sim.get_or("until_s", 10.0)?;
        let seed: u64 = sim.get_or("seed", 1)?;
        sim.finish()?;
        if !(until_s >= 0.0) {
            return Err(invalid("sim", "until_s must be non-negative"));
        }

        let mut radio_s = take("radio");
        let mut radio = RadioConfig {
            tx_power_dbm: radio_s.get_or("tx_power_dbm", 1.0)?,
            datarate_baud: radio_s.get_or("datarate_baud", 2400u32)?,
            modulation: match radio_s.get_or("modulation", "fsk2".to_string())?.as_str() {
                "fsk2" => Modulation::Fsk2,
                other => {
                    return Err(invalid("radio", format!("unknown modulation '{other}'")))
                }
            },
            noise_floor_dbm: radio_s.get_or("noise_floor_dbm", -100.0)?,
            rssi_resolution_db: radio_s.get_or("rssi_resolution_db", 1.0)?,
            transition_times: BTreeMap::new(),
        };
        for (key, from, to) in [
            ("t_sleep_to_idle_us", RadioState::Sleep, RadioState::Idle),
            ("t_idle_to_sleep_us", RadioState::Idle, RadioState::Sleep),
            ("t_idle_to_rx_us", RadioState::Idle, RadioState::Rx),
            ("t_rx_to_idle_us", RadioState::Rx, RadioState::Idle),
            ("t_idle_to_tx_us", RadioState::Idle, RadioState::Tx),
            ("t_tx_to_idle_us", RadioState::Tx, RadioState::Idle),
        ] {
            let us: u64 = radio_s.get_or(key, 0u64)?;
            if us > 0 {
                radio
                    .transition_times
                    .insert((from, to), SimTime::from_us(us));
            }
        }
        radio_s.finish()?;
        if radio.datarate_baud == 0 {
            return Err(invalid("radio", "datarate_baud must be positive"));
        }
        if !(radio.rssi_resolution_db > 0.0) {
            return Err(invalid("radio", "rssi_resolution_db must be positive"));
        }

        let mut frame = take("frame");
        let layout = ByteLayout {
            preamble_bytes: frame.get_or("preamble_bytes", 4u8)?,
            sync_bytes: frame.get_or("sync_bytes", 4u8)?,
            header_bytes: frame.get_or("header_bytes", 3u8)?,
            payload_bytes: frame.get_or("payload_bytes", 2u8)?,
            crc_bytes: frame.get_or("crc_bytes", 2u8)?,
        };
        frame.finish()?;
        if layout.header_bytes != 3 || layout.crc_bytes != 2 {
            return Err(invalid(
                "frame",
                "the packet codec requires header_bytes = 3 (length, address, type) and crc_bytes = 2",
            ));
        }
        if layout.payload_bytes < 2 {
            return Err(invalid(
                "frame",
                "payload_bytes must be at least 2 (round counter)",
            ));
        }
        if layout.payload_bytes as usize > 253 {
            return Err(invalid("frame", "payload_bytes exceeds the length byte"));
        }

        let mut channel = take("channel");
        let model = PropagationModel {
            attenuation_exponent: channel.get_or("attenuation_exponent", 2.0)?,
            effective_antenna_area_m2: channel.get_or("antenna_area_m2", 9.87670e-4)?,
        };
        let medium = MediumConfig {
            sensitivity_cutoff_dbm: channel.get_or("sensitivity_cutoff_dbm", -110.0)?,
            propagation_delay: match channel
                .get_or("propagation_delay", "zero".to_string())?
                .as_str()
            {
                "zero" => DelayPolicy::Zero,
                "light" => DelayPolicy::SpeedOfLight,
                other => {
                    return Err(invalid(
                        "channel",
                        format!("propagation_delay must be 'zero' or 'light', got '{other}'"),
                    ))
                }
            },
        };
        channel.finish()?;
        model
            .validate()
            .map_err(|e| invalid("channel", e))?;
        if medium.sensitivity_cutoff_dbm > radio.noise_floor_dbm {
            return Err(invalid(
                "channel",
                format!(
                    "sensitivity_cutoff_dbm ({}) must not exceed the radio noise floor ({}), \
                     or weak interferers would be hidden",
                    medium.sensitivity_cutoff_dbm, radio.noise_floor_dbm
                ),
            ));
        }

        let mut tdma_s = take("tdma");
        let tdma = TdmaConfig {
            beacons_enabled: tdma_s.get_or("beacons_enabled", true)?,
            beacon_period: SimTime::from_ms(tdma_s.get_or("beacon_period_ms", 1000u64)?),
            slot_time: SimTime::from_ms(tdma_s.get_or("slot_time_ms", 60u64)?),
            slot_guard: SimTime::from_ms(tdma_s.get_or("slot_guard_ms", 1u64)?),
            wake_guard: SimTime::from_ms(tdma_s.get_or("wake_guard_ms", 1u64)?),
        };
        tdma_s.finish()?;

        let mut firmware_s = take("firmware");
        let firmware = FirmwareConfig {
            beacon_prep: SimTime::from_us(firmware_s.get_or("beacon_prep_us", 0u64)?),
            data_prep: SimTime::from_us(firmware_s.get_or("data_prep_us", 0u64)?),
            inter_round_state: match firmware_s
                .get_or("inter_round_state", "idle".to_string())?
                .as_str()
            {
                "idle" => InterRoundState::Idle,
                "sleep" => InterRoundState::Sleep,
                other => {
                    return Err(invalid(
                        "firmware",
                        format!("inter_round_state must be 'idle' or 'sleep', got '{other}'"),
                    ))
                }
            },
        };
        firmware_s.finish()?;

        // The power table is required; reproduction runs must state their
        // hardware draws instead of inheriting silent placeholders.
        let mut power_s = plain
            .remove("power")
            .ok_or_else(|| ConfigError::MissingSection("power".to_string()))?;
        let power = PowerTable {
            radio_mw: [
                power_s.require("radio_sleep_mw")?,
                power_s.require("radio_idle_mw")?,
                power_s.require("radio_rx_mw")?,
                power_s.require("radio_tx_mw")?,
            ],
            cpu_mw: [
                power_s.require("cpu_idle_mw")?,
                power_s.require("cpu_active_mw")?,
            ],
        };
        power_s.finish()?;
        power.validate().map_err(|e| invalid("power", e))?;

        if node_sections.is_empty() {
            return Err(ConfigError::MissingSection("node.<id>".to_string()));
        }

        let mut nodes = Vec::new();
        for (id, mut section) in node_sections {
            let section_name = format!("node.{id}");
            let role = match section.require::<String>("role")?.as_str() {
                "base" => Role::Base,
                "sensor" => Role::Sensor,
                other => {
                    return Err(invalid(
                        &section_name,
                        format!("role must be 'base' or 'sensor', got '{other}'"),
                    ))
                }
            };
            let position = Position::new(section.require("x_m")?, section.require("y_m")?);
            let slot: Option<u16> = section.get("slot")?;
            section.finish()?;

            let mobility = match mobility_sections.remove(&id) {
                None => None,
                Some(mut m) => {
                    let mob_name = format!("mobility.{id}");
                    match m.require::<String>("model")?.as_str() {
                        "rectangle" => {}
                        other => {
                            return Err(invalid(
                                &mob_name,
                                format!("unknown mobility model '{other}'"),
                            ))
                        }
                    }
                    let rect = RectangleMobility {
                        origin: Position::new(m.require("origin_x_m")?, m.require("origin_y_m")?),
                        width_m: m.require("width_m")?,
                        height_m: m.require("height_m")?,
                        waypoint_count: m.get_or("waypoints", 19u32)?,
                        speed_mps: m.get_or("speed_mps", 10.0)?,
                        mode: match m.get_or("mode", "discrete".to_string())?.as_str() {
                            "discrete" => MovementMode::Discrete,
                            "continuous" => MovementMode::Continuous,
                            other => {
                                return Err(invalid(
                                    &mob_name,
                                    format!("mode must be 'discrete' or 'continuous', got '{other}'"),
                                ))
                            }
                        },
                        start_offset_seed: m.get("start_offset_seed")?,
                        start_offset_max_m: m.get_or("start_offset_max_m", 1.0)?,
                    };
                    m.finish()?;
                    if rect.waypoint_count < 2 {
                        return Err(invalid(&mob_name, "waypoints must be at least 2"));
                    }
                    if !(rect.speed_mps > 0.0) {
                        return Err(invalid(&mob_name, "speed_mps must be positive"));
                    }
                    if !(rect.width_m > 0.0 && rect.height_m > 0.0) {
                        return Err(invalid(&mob_name, "width_m and height_m must be positive"));
                    }
                    if !(rect.start_offset_max_m >= 0.0) {
                        return Err(invalid(&mob_name, "start_offset_max_m must be non-negative"));
                    }
                    Some(rect)
                }
            };

            nodes.push(NodeConfig {
                id: NodeId(id),
                role,
                position,
                slot,
                mobility,
            });
        }

        if let Some((&id, _)) = mobility_sections.iter().next() {
            return Err(invalid(
                &format!("mobility.{id}"),
                "mobility configured for a node that does not exist",
            ));
        }

        let config = ScenarioConfig {
            playground_width_m,
            playground_height_m,
            until: SimTime::from_secs_f64(until_s),
            seed,
            radio,
            layout,
            model,
            medium,
            tdma,
            firmware,
            power,
            nodes,
        };
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let bases: Vec<_> = self.nodes.iter().filter(|n| n.role == Role::Base).collect();
        if bases.len() != 1 {
            return Err(invalid(
                "node",
                format!("exactly one base station required, found {}", bases.len()),
            ));
        }
        if bases[0].mobility.is_some() {
            return Err(invalid(
                &format!("mobility.{}", bases[0].id),
                "the base station is fixed; mobility is not supported on it",
            ));
        }

        let inside = |p: Position| {
            p.x >= 0.0 && p.x <= self.playground_width_m && p.y >= 0.0 && p.y <= self.playground_height_m
        };
        for node in &self.nodes {
            let name = format!("node.{}", node.id);
            if node.id.0 > u8::MAX as u32 {
                return Err(invalid(&name, "node ids must fit the 1-byte packet address"));
            }
            if !inside(node.position) {
                return Err(invalid(
                    &name,
                    format!("position {} outside the playground", node.position),
                ));
            }
            if let Some(rect) = &node.mobility {
                let far = Position::new(
                    rect.origin.x + rect.width_m,
                    rect.origin.y + rect.height_m,
                );
                if !inside(rect.origin) || !inside(far) {
                    return Err(invalid(
                        &format!("mobility.{}", node.id),
                        "rectangle extends outside the playground",
                    ));
                }
            }
        }

        // Pairwise-distinct fixed positions; the path-loss model is singular
        // at zero distance.
        let fixed: Vec<_> = self
            .nodes
            .iter()
            .filter(|n| n.mobility.is_none())
            .collect();
        for (i, a) in fixed.iter().enumerate() {
            for b in &fixed[i + 1..] {
                if a.position == b.position {
                    return Err(invalid(
                        &format!("node.{}", b.id),
                        format!("position coincides with node {}", a.id),
                    ));
                }
            }
        }

        if self.tdma.beacons_enabled {
            let slotted: Vec<_> = self
                .nodes
                .iter()
                .filter(|n| n.role == Role::Sensor && !n.is_waypoint_sender())
                .collect();
            let mut seen = BTreeSet::new();
            for node in &slotted {
                let name = format!("node.{}", node.id);
                let slot = node.slot.ok_or_else(|| {
                    invalid(&name, "sensor needs a slot when beacons are enabled")
                })?;
                if slot == 0 {
                    return Err(invalid(&name, "slot indices start at 1"));
                }
                if !seen.insert(slot) {
                    return Err(invalid(&name, format!("slot {slot} assigned twice")));
                }
            }
            self.tdma
                .validate(slotted.len(), self.beacon_airtime())
                .map_err(|e| invalid("tdma", e))?;
        }

        Ok(())
    }

    /// Serializes the complete effective configuration, defaults included.
    /// Reparsing the result yields an equivalent configuration.
    pub fn to_config_text(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        let _ = writeln!(out, "[playground]");
        let _ = writeln!(out, "width_m = {}", self.playground_width_m);
        let _ = writeln!(out, "height_m = {}", self.playground_height_m);
        let _ = writeln!(out, "\n[sim]");
        let _ = writeln!(out, "until_s = {}", self.until.as_secs_f64());
        let _ = writeln!(out, "seed = {}", self.seed);
        let _ = writeln!(out, "\n[radio]");
        let _ = writeln!(out, "tx_power_dbm = {}", self.radio.tx_power_dbm);
        let _ = writeln!(out, "datarate_baud = {}", self.radio.datarate_baud);
        let _ = writeln!(out, "modulation = {}", self.radio.modulation.name());
        let _ = writeln!(out, "noise_floor_dbm = {}", self.radio.noise_floor_dbm);
        let _ = writeln!(out, "rssi_resolution_db = {}", self.radio.rssi_resolution_db);
        for (key, from, to) in [
            ("t_sleep_to_idle_us", RadioState::Sleep, RadioState::Idle),
            ("t_idle_to_sleep_us", RadioState::Idle, RadioState::Sleep),
            ("t_idle_to_rx_us", RadioState::Idle, RadioState::Rx),
            ("t_rx_to_idle_us", RadioState::Rx, RadioState::Idle),
            ("t_idle_to_tx_us", RadioState::Idle, RadioState::Tx),
            ("t_tx_to_idle_us", RadioState::Tx, RadioState::Idle),
        ] {
            let _ = writeln!(
                out,
                "{key} = {}",
                self.radio.transition_time(from, to).as_ns() / 1_000
            );
        }
        let _ = writeln!(out, "\n[frame]");
        let _ = writeln!(out, "preamble_bytes = {}", self.layout.preamble_bytes);
        let _ = writeln!(out, "sync_bytes = {}", self.layout.sync_bytes);
        let _ = writeln!(out, "header_bytes = {}", self.layout.header_bytes);
        let _ = writeln!(out, "payload_bytes = {}", self.layout.payload_bytes);
        let _ = writeln!(out, "crc_bytes = {}", self.layout.crc_bytes);
        let _ = writeln!(out, "\n[channel]");
        let _ = writeln!(out, "attenuation_exponent = {}", self.model.attenuation_exponent);
        let _ = writeln!(out, "antenna_area_m2 = {}", self.model.effective_antenna_area_m2);
        let _ = writeln!(out, "sensitivity_cutoff_dbm = {}", self.medium.sensitivity_cutoff_dbm);
        let _ = writeln!(out, "propagation_delay = {}", self.medium.propagation_delay.name());
        let _ = writeln!(out, "\n[tdma]");
        let _ = writeln!(out, "beacons_enabled = {}", self.tdma.beacons_enabled);
        let _ = writeln!(out, "beacon_period_ms = {}", self.tdma.beacon_period.as_ns() / 1_000_000);
        let _ = writeln!(out, "slot_time_ms = {}", self.tdma.slot_time.as_ns() / 1_000_000);
        let _ = writeln!(out, "slot_guard_ms = {}", self.tdma.slot_guard.as_ns() / 1_000_000);
        let _ = writeln!(out, "wake_guard_ms = {}", self.tdma.wake_guard.as_ns() / 1_000_000);
        let _ = writeln!(out, "\n[firmware]");
        let _ = writeln!(out, "beacon_prep_us = {}", self.firmware.beacon_prep.as_ns() / 1_000);
        let _ = writeln!(out, "data_prep_us = {}", self.firmware.data_prep.as_ns() / 1_000);
        let _ = writeln!(out, "inter_round_state = {}", self.firmware.inter_round_state.name());
        let _ = writeln!(out, "\n[power]");
        let _ = writeln!(out, "radio_sleep_mw = {}", self.power.radio_mw[0]);
        let _ = writeln!(out, "radio_idle_mw = {}", self.power.radio_mw[1]);
        let _ = writeln!(out, "radio_rx_mw = {}", self.power.radio_mw[2]);
        let _ = writeln!(out, "radio_tx_mw = {}", self.power.radio_mw[3]);
        let _ = writeln!(out, "cpu_idle_mw = {}", self.power.cpu_mw[0]);
        let _ = writeln!(out, "cpu_active_mw = {}", self.power.cpu_mw[1]);
        for node in &self.nodes {
            let _ = writeln!(out, "\n[node.{}]", node.id);
            let _ = writeln!(out, "role = {}", node.role.name());
            let _ = writeln!(out, "x_m = {}", node.position.x);
            let _ = writeln!(out, "y_m = {}", node.position.y);
            if let Some(slot) = node.slot {
                let _ = writeln!(out, "slot = {slot}");
            }
            if let Some(rect) = &node.mobility {
                let _ = writeln!(out, "\n[mobility.{}]", node.id);
                let _ = writeln!(out, "model = rectangle");
                let _ = writeln!(out, "origin_x_m = {}", rect.origin.x);
                let _ = writeln!(out, "origin_y_m = {}", rect.origin.y);
                let _ = writeln!(out, "width_m = {}", rect.width_m);
                let _ = writeln!(out, "height_m = {}", rect.height_m);
                let _ = writeln!(out, "waypoints = {}", rect.waypoint_count);
                let _ = writeln!(out, "speed_mps = {}", rect.speed_mps);
                let _ = writeln!(out, "mode = {}", rect.mode.name());
                if let Some(seed) = rect.start_offset_seed {
                    let _ = writeln!(out, "start_offset_seed = {seed}");
                    let _ = writeln!(out, "start_offset_max_m = {}", rect.start_offset_max_m);
                }
            }
        }
        out
    }
}
